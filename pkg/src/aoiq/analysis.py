"""Exact age-of-information analysis for one tagged class.

With a tagged class (rate lam, service H) and the aggregated background
(rate lam_bg, jump J), all transforms are built from the Laplace exponent
of the background workload's net-input process,

    exponent(s) = s - lam_bg + lam_bg * E[exp(-s*J)],

which is increasing and continuous for s > 0, and from its functional
inverse.  The module exposes:

  - waiting_time_lst / delay_lst: the stationary FCFS waiting-time and
    system-delay transforms of the tagged class,
  - peak_aoi_lst: transform of the age just before a monitor update,
  - aoi_lst: transform of the time-stationary age, plus an independent
    assembly path (aoi_lst_from_components) used for cross-checks,
  - mean_metrics: closed-form means, no numerical differentiation.

All functions are pure; passing a real argument returns a real value and
a complex argument returns a complex value.
"""

import math
from dataclasses import dataclass

from .distributions import ServiceDistribution
from .errors import ConvergenceError, TransformDomainError
from .model import BackgroundProcess, SystemModel, aggregate_background, validate

# Solvers stop at this relative residual; the public contract is 1e-12.
_RESIDUAL_RTOL = 1e-13
_MAX_ITER = 200
# Below abs(s) = _SMALL * total_rate the transforms switch to their s -> 0 limits.
_SMALL = 1e-6


@dataclass(frozen=True)
class TaggedView:
    """One tagged class together with its aggregated background."""

    arrival_rate: float
    service: ServiceDistribution
    load: float
    background: BackgroundProcess
    total_rate: float
    total_load: float

    @classmethod
    def from_model(cls, model: SystemModel, tagged: int) -> "TaggedView":
        validate(model)
        bg = aggregate_background(model, tagged)
        src = model.classes[tagged]
        return cls(
            arrival_rate=src.arrival_rate,
            service=src.service,
            load=src.load,
            background=bg,
            total_rate=model.total_rate,
            total_load=model.total_load,
        )


@dataclass(frozen=True)
class AoIMetrics:
    """Closed-form per-class means and the root entering the AoI formula."""

    mean_wait: float
    mean_delay: float
    mean_peak_aoi: float
    mean_aoi: float
    gamma: float


def laplace_exponent(bg: BackgroundProcess, s):
    """exponent(s) = s - rate + rate * E[exp(-s*J)] of the background.

    Increasing and continuous for real s > 0 with limit 0 at 0+; for an
    empty background it is the identity.
    """
    z = complex(s)
    if z.real < 0:
        raise TransformDomainError(f"exponent argument must have Re(s) >= 0, got {s}")
    if bg.rate == 0.0:
        return s
    out = z - bg.rate + bg.rate * bg.jump.lst(z)
    return out if isinstance(s, complex) else out.real


def _exponent_slope(bg: BackgroundProcess, z: complex) -> complex:
    # d/ds exponent = 1 - rate * E[J exp(-s*J)]; bounded below by 1 - load.
    return 1.0 - bg.rate * bg.jump.lst_deriv(z)


def inverse_laplace_exponent(bg: BackgroundProcess, w):
    """Solve exponent(z) = w.

    Real w > 0: bracketed Newton/bisection on [w, w + rate]; the bracket
    holds because s - rate <= exponent(s) <= s.  Complex w with Re(w) > 0:
    Newton seeded from the real solution at Re(w), with stepwise
    continuation from Re(w) to w as fallback.  The root satisfies
    Re(z) >= Re(w) and is unique there.
    """
    if isinstance(w, complex):
        if w.real <= 0:
            raise TransformDomainError(f"inverse exponent needs Re(w) > 0, got {w}")
        if bg.rate == 0.0:
            return w
        if w.imag == 0.0:
            return complex(_inverse_real(bg, w.real))
        return _inverse_complex(bg, w)
    if w <= 0:
        raise TransformDomainError(f"inverse exponent needs w > 0, got {w}")
    if bg.rate == 0.0:
        return w
    return _inverse_real(bg, w)


def _inverse_real(bg: BackgroundProcess, w: float) -> float:
    lo, hi = w, w + bg.rate
    tol = _RESIDUAL_RTOL * max(1.0, abs(w))
    z = hi  # residual is >= 0 here and the exponent is convex: Newton descends
    resid = math.inf
    for _ in range(_MAX_ITER):
        resid = laplace_exponent(bg, z) - w
        if abs(resid) <= tol:
            return z
        if resid > 0:
            hi = z
        else:
            lo = z
        slope = _exponent_slope(bg, complex(z)).real
        z_new = z - resid / slope
        if not lo <= z_new <= hi:
            z_new = 0.5 * (lo + hi)
        z = z_new
    raise ConvergenceError(
        f"inverse exponent did not converge for w = {w}; last residual {resid:.3e}",
        residual=abs(resid),
    )


def _newton_complex(bg: BackgroundProcess, w: complex, z0: complex):
    z = z0
    tol = _RESIDUAL_RTOL * max(1.0, abs(w))
    resid = laplace_exponent(bg, z) - w
    for _ in range(_MAX_ITER):
        if abs(resid) <= tol:
            return z, True, abs(resid)
        step = resid / _exponent_slope(bg, z)
        z_new = z - step
        tries = 0
        while z_new.real <= 0 and tries < 60:  # the root lies in Re(z) >= Re(w) > 0
            step *= 0.5
            z_new = z - step
            tries += 1
        if z_new.real <= 0:
            return z, False, abs(resid)
        z = z_new
        resid = laplace_exponent(bg, z) - w
    return z, False, abs(resid)


def _inverse_complex(bg: BackgroundProcess, w: complex) -> complex:
    seed = complex(_inverse_real(bg, w.real))
    z, ok, resid = _newton_complex(bg, w, seed)
    if ok:
        return z
    # Continuation along the segment from Re(w) to w.
    z = seed
    for j in range(1, 9):
        target = complex(w.real, w.imag * j / 8.0)
        z, ok, resid = _newton_complex(bg, target, z)
        if not ok:
            raise ConvergenceError(
                f"inverse exponent continuation failed at {target}; residual {resid:.3e}",
                residual=resid,
            )
    return z


def gamma_root(view: TaggedView) -> float:
    """The unique root of exponent(z) = arrival_rate in [rate, rate + bg rate].

    This is the constant reported in the analyze output and used by the
    closed-form mean AoI.
    """
    bg = view.background
    if bg.rate == 0.0:
        return view.arrival_rate
    return _inverse_real(bg, view.arrival_rate)


def _small_threshold(view: TaggedView) -> float:
    return _SMALL * view.total_rate


def mean_wait(view: TaggedView) -> float:
    """Mean stationary FCFS waiting time of the tagged class."""
    bg = view.background
    second = view.arrival_rate * view.service.moment(2) + bg.rate * (
        bg.jump.moment(2) if bg.rate > 0 else 0.0
    )
    return second / (2.0 * (1.0 - view.total_load))


def waiting_time_lst(view: TaggedView, s):
    """LST of the stationary waiting time.

    Equals (1 - total_load) * s / (exponent(s) - rate + rate * E[exp(-s*H)]).
    The removable singularity at s = 0 is replaced by the two-term
    expansion 1 - E[W] * s for abs(s) below 1e-6 * total_rate.
    """
    z = complex(s)
    if z.real < 0:
        raise TransformDomainError(f"waiting_time_lst needs Re(s) >= 0, got {s}")
    if abs(z) < _small_threshold(view):
        out = 1.0 - mean_wait(view) * z
    else:
        den = (
            laplace_exponent(view.background, z)
            - view.arrival_rate
            + view.arrival_rate * view.service.lst(z)
        )
        out = (1.0 - view.total_load) * z / den
    return out if isinstance(s, complex) else out.real


def delay_lst(view: TaggedView, s):
    """LST of the stationary system delay: waiting time plus own service."""
    z = complex(s)
    out = waiting_time_lst(view, z) * view.service.lst(z)
    return out if isinstance(s, complex) else out.real


def _outer_denominator(view: TaggedView, z: complex) -> complex:
    # s + rate - exponent(s) in the cancellation-free form
    # rate + bg_rate * (1 - E[exp(-s*J)]); its real part is >= rate.
    bg = view.background
    if bg.rate == 0.0:
        return complex(view.arrival_rate)
    return view.arrival_rate + bg.rate * (1.0 - bg.jump.lst(z))


def peak_aoi_lst(view: TaggedView, s):
    """LST of the stationary peak AoI (age just before a monitor update).

    peak(s) = rate * E[exp(-s*H)] / (s + rate - exponent(s))
              * { delay(s) - s * delay(p) / p },   p = inverse_exponent(s + rate).
    """
    z = complex(s)
    if z.real < 0:
        raise TransformDomainError(f"peak_aoi_lst needs Re(s) >= 0, got {s}")
    if abs(z) < _small_threshold(view):
        return 1.0 + 0.0j if isinstance(s, complex) else 1.0
    lam = view.arrival_rate
    p = inverse_laplace_exponent(view.background, z + lam)
    brace = delay_lst(view, z) - z * delay_lst(view, p) / p
    out = lam * view.service.lst(z) / _outer_denominator(view, z) * brace
    return out if isinstance(s, complex) else out.real


def aoi_lst(view: TaggedView, s):
    """LST of the time-stationary AoI of the tagged class.

    aoi(s) = rate * E[exp(-s*H)] / (s + rate - exponent(s))
             * { wait(s) - (1 - total_load) + rate * delay(p) / p },
    with p = inverse_exponent(s + rate).  Returns exactly 1 for abs(s)
    below 1e-6 * total_rate.
    """
    z = complex(s)
    if z.real < 0:
        raise TransformDomainError(f"aoi_lst needs Re(s) >= 0, got {s}")
    if abs(z) < _small_threshold(view):
        return 1.0 + 0.0j if isinstance(s, complex) else 1.0
    factor1, factor2 = aoi_lst_factors(view, z)
    out = factor1 * factor2
    return out if isinstance(s, complex) else out.real


def aoi_lst_factors(view: TaggedView, s):
    """The two factors whose product is aoi_lst; each tends to 1 as s -> 0+."""
    z = complex(s)
    if z.real < 0:
        raise TransformDomainError(f"aoi_lst_factors needs Re(s) >= 0, got {s}")
    if abs(z) < _small_threshold(view):
        one = 1.0 + 0.0j if isinstance(s, complex) else 1.0
        return one, one
    lam = view.arrival_rate
    factor1 = lam * view.service.lst(z) / _outer_denominator(view, z)
    p = inverse_laplace_exponent(view.background, z + lam)
    factor2 = (
        waiting_time_lst(view, z)
        - (1.0 - view.total_load)
        + lam * delay_lst(view, p) / p
    )
    if not isinstance(s, complex):
        return factor1.real, factor2.real
    return factor1, factor2


def aoi_lst_from_components(view: TaggedView, s):
    """Assemble the AoI LST as rate * (delay(s) - peak(s)) / s.

    Independent cross-check path against aoi_lst; both must agree for any
    valid view.
    """
    z = complex(s)
    if z.real < 0:
        raise TransformDomainError(f"aoi_lst_from_components needs Re(s) >= 0, got {s}")
    if abs(z) < _small_threshold(view):
        return 1.0 + 0.0j if isinstance(s, complex) else 1.0
    out = view.arrival_rate * (delay_lst(view, z) - peak_aoi_lst(view, z)) / z
    return out if isinstance(s, complex) else out.real


def mean_metrics(view: TaggedView) -> AoIMetrics:
    """Closed-form means: waiting, delay, peak AoI, AoI, and the gamma root.

    mean_aoi = mean_delay + bg_load / rate
               + (1 - total_load) / (rate * E[exp(-gamma * H)]).
    """
    lam = view.arrival_rate
    bg = view.background
    ew = mean_wait(view)
    ed = ew + view.service.mean
    peak = ed + 1.0 / lam
    gamma = gamma_root(view)
    ea = ed + bg.load / lam + (1.0 - view.total_load) / (lam * view.service.lst(gamma))
    assert lam <= gamma <= lam + bg.rate + 1e-12
    assert view.service.mean <= ed + 1e-12 and ed <= ea + 1e-12 and ea <= peak + 1e-12
    return AoIMetrics(
        mean_wait=ew, mean_delay=ed, mean_peak_aoi=peak, mean_aoi=ea, gamma=gamma
    )
