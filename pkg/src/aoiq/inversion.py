"""Numerical Laplace-transform inversion and transform-side moments.

Two inversion methods are provided:

  - "euler": Euler summation of the Bromwich series (Abate & Whitt,
    "A unified framework for numerically inverting Laplace transforms",
    INFORMS J. Computing 18(4), 2006).  All evaluation nodes have positive
    real part, so it works for transforms defined only on Re(s) >= 0.
    This is the default.
  - "talbot": the fixed Talbot contour (Abate & Valko, Int. J. Numer.
    Meth. Eng. 60, 2004).  The contour dips into Re(s) < 0, so the
    evaluator must be analytic there; use it only for closed-form
    transforms known beyond the right half-plane.

Moments are estimated from one-sided finite differences of the transform
on the real axis with Richardson extrapolation; differentiation never
crosses into Re(s) < 0.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConvergenceError, InversionError

Transform = Callable[[complex], complex]


@dataclass(frozen=True)
class InversionConfig:
    """Method choice, node budget, and accuracy target for inversion."""

    method: str = "euler"
    num_nodes: int = 49
    target_abs_error: float = 1e-8

    def __post_init__(self):
        if self.method not in ("euler", "talbot"):
            raise ValueError(f"unknown inversion method {self.method!r}")
        if self.num_nodes < 8:
            raise ValueError(f"num_nodes must be >= 8, got {self.num_nodes}")
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be > 0")


@lru_cache(maxsize=16)
def _euler_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    # Binomially averaged partial sums: xi_0 = 1/2, xi_k = 1 (k <= m),
    # xi_{2m} = 2^-m, and xi_{2m-k} = xi_{2m-k+1} + 2^-m C(m, k).
    xi = np.ones(2 * m + 1)
    xi[0] = 0.5
    xi[2 * m] = 2.0**-m
    for k in range(1, m):
        xi[2 * m - k] = xi[2 * m - k + 1] + math.comb(m, k) * 2.0**-m
    signs = np.where(np.arange(2 * m + 1) % 2 == 0, 1.0, -1.0)
    weights = 10.0 ** (m / 3.0) * signs * xi
    nodes = m * math.log(10.0) / 3.0 + 1j * math.pi * np.arange(2 * m + 1)
    return nodes, weights


def _invert_euler(transform: Transform, t: float, num_nodes: int) -> float:
    m = (num_nodes - 1) // 2
    nodes, weights = _euler_nodes(m)
    acc = 0.0
    for b, w in zip(nodes, weights):
        acc += w * transform(b / t).real
    return acc / t


def _invert_talbot(transform: Transform, t: float, num_nodes: int) -> float:
    m = num_nodes
    r = 2.0 * m / 5.0
    acc = 0.5 * math.exp(r) * transform(complex(r / t)).real
    for k in range(1, m):
        theta = k * math.pi / m
        cot = 1.0 / math.tan(theta)
        p = (r / t) * theta * complex(cot, 1.0)
        gamma = np.exp(t * p) * complex(1.0 + theta * (1.0 + cot * cot) * 1j - cot * 1j)
        acc += (gamma * transform(p)).real
    return 2.0 / (5.0 * t) * acc


def _invert_point(transform: Transform, t: float, cfg: InversionConfig) -> float:
    if cfg.method == "euler":
        val = _invert_euler(transform, t, cfg.num_nodes)
    else:
        val = _invert_talbot(transform, t, cfg.num_nodes)
    if not math.isfinite(val):
        raise InversionError(f"inversion produced a non-finite value at t = {t}")
    return val


def invert_cdf(
    transform: Transform, x, cfg: InversionConfig | None = None
) -> np.ndarray:
    """Invert an LST of a proper nonnegative distribution into CDF values.

    Inverts transform(s)/s at each grid point; x must be sorted ascending
    and nonnegative.  x = 0 maps to 0 (the distributions handled here have
    no atom at the origin).  Values are clamped to [0, 1]; clamping beyond
    ten times the accuracy target triggers a warning, as does any
    non-monotone step larger than the target.
    """
    cfg = cfg or InversionConfig()
    grid = np.asarray(x, dtype=float)
    _check_grid(grid, allow_zero=True)
    raw = np.empty_like(grid)
    for i, t in enumerate(grid):
        raw[i] = 0.0 if t == 0.0 else _invert_point(lambda s: transform(s) / s, t, cfg)
    values = np.clip(raw, 0.0, 1.0)
    overshoot = float(np.max(np.abs(raw - values), initial=0.0))
    if overshoot > 10.0 * cfg.target_abs_error:
        warnings.warn(
            f"CDF inversion clamped by {overshoot:.3e}, beyond 10x the target error",
            stacklevel=2,
        )
    steps = np.diff(values)
    if steps.size and float(steps.min()) < -cfg.target_abs_error:
        warnings.warn(
            f"inverted CDF decreases by {-steps.min():.3e} between grid points",
            stacklevel=2,
        )
    return values


def invert_pdf(
    transform: Transform, x, cfg: InversionConfig | None = None
) -> np.ndarray:
    """Invert an LST directly into density values on a positive grid."""
    cfg = cfg or InversionConfig()
    grid = np.asarray(x, dtype=float)
    _check_grid(grid, allow_zero=False)
    raw = np.empty_like(grid)
    for i, t in enumerate(grid):
        raw[i] = _invert_point(transform, t, cfg)
    values = np.maximum(raw, 0.0)
    undershoot = float(np.max(values - raw, initial=0.0))
    if undershoot > 10.0 * cfg.target_abs_error:
        warnings.warn(
            f"PDF inversion clipped negative values of size {undershoot:.3e}",
            stacklevel=2,
        )
    return values


def _check_grid(grid: np.ndarray, allow_zero: bool) -> None:
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    lower_ok = np.all(grid >= 0.0) if allow_zero else np.all(grid > 0.0)
    if not lower_ok:
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"grid values must be {bound}")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")


def numerical_moment(
    transform: Transform, n: int, h0: float | None = None, full_output: bool = False
):
    """Estimate the n-th moment (n in {1, 2}) from the transform near 0+.

    Uses one-sided finite differences at steps h0, h0/2, h0/4 with two
    Richardson stages.  The default h0 is 1e-2 divided by a crude
    first-moment probe, so the steps adapt to the distribution's scale.
    With full_output=True, returns (value, {"steps": ..., "table": ...}).

    Raises ConvergenceError when the extrapolation diverges instead of
    settling.
    """
    if n not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {n}")
    if h0 is None:
        probe = (1.0 - float(np.real(transform(1e-4)))) / 1e-4
        h0 = 1e-2 / max(1.0, probe)
    steps = [h0 / 2.0**k for k in range(3)]
    if n == 1:
        raw = [(1.0 - float(np.real(transform(h)))) / h for h in steps]
    else:
        raw = [
            (float(np.real(transform(2 * h))) - 2.0 * float(np.real(transform(h))) + 1.0)
            / h**2
            for h in steps
        ]
    first = [2.0 * raw[k + 1] - raw[k] for k in range(2)]
    second = (4.0 * first[1] - first[0]) / 3.0
    scale = max(1.0, abs(second))
    if abs(second - first[1]) > abs(first[1] - raw[2]) + 1e-9 * scale:
        raise ConvergenceError(
            f"moment extrapolation is oscillating (order {n}, h0 = {h0:.3e})",
            residual=abs(second - first[1]),
        )
    if full_output:
        return second, {"steps": steps, "table": [raw, first, [second]]}
    return second
