"""Service-time distribution families with exact Laplace-Stieltjes transforms.

Each family evaluates its LST E[exp(-s*Y)] in closed form for real or
complex arguments with Re(s) >= 0, together with the transform derivative
E[Y*exp(-s*Y)], the first two moments, and vectorized sampling.  Finite
mixtures of the base families are also a family, so the set is closed
under the compound-Poisson superposition performed by the model layer.

Instances are immutable after construction and safe to share between
threads; random streams are owned by the caller.
"""

import cmath
import math
import numbers
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import TransformDomainError

_WEIGHT_TOL = 1e-12


def _check_domain(s: complex) -> None:
    if s.real < 0:
        raise TransformDomainError(f"transform argument must have Re(s) >= 0, got {s}")


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


class ServiceDistribution(ABC):
    """Base class for nonnegative service-time distributions."""

    family: str = "abstract"

    def lst(self, s: int | float | complex) -> float | complex:
        """E[exp(-s*Y)] for Re(s) >= 0. Real in, real out."""
        z = complex(s)
        _check_domain(z)
        out = self._lst(z)
        return out if isinstance(s, complex) else out.real

    def lst_deriv(self, s: int | float | complex) -> float | complex:
        """E[Y*exp(-s*Y)], i.e. -d/ds of lst. Equals the mean at s = 0."""
        z = complex(s)
        _check_domain(z)
        out = self._lst_deriv(z)
        return out if isinstance(s, complex) else out.real

    @property
    def mean(self) -> float:
        return self.moment(1)

    @abstractmethod
    def _lst(self, s: complex) -> complex: ...

    @abstractmethod
    def _lst_deriv(self, s: complex) -> complex: ...

    @abstractmethod
    def moment(self, n: int) -> float:
        """Exact n-th moment, n in {1, 2}."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw variates; scalar for size=None, ndarray otherwise."""


def _check_order(n: int) -> None:
    if n not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {n}")


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    """Exponential service with the given rate."""

    rate: float
    family = "exponential"

    def __post_init__(self):
        _require_positive("rate", self.rate)

    def _lst(self, s):
        return self.rate / (self.rate + s)

    def _lst_deriv(self, s):
        return self.rate / (self.rate + s) ** 2

    def moment(self, n):
        _check_order(n)
        return 1.0 / self.rate if n == 1 else 2.0 / self.rate**2

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class Deterministic(ServiceDistribution):
    """Unit mass at a fixed positive service time."""

    value: float
    family = "deterministic"

    def __post_init__(self):
        _require_positive("value", self.value)

    def _lst(self, s):
        return cmath.exp(-self.value * s)

    def _lst_deriv(self, s):
        return self.value * cmath.exp(-self.value * s)

    def moment(self, n):
        _check_order(n)
        return self.value**n

    def sample(self, rng, size=None):
        return self.value if size is None else np.full(size, self.value)


@dataclass(frozen=True)
class Erlang(ServiceDistribution):
    """Erlang distribution: integer shape, rate per stage."""

    shape: int
    rate: float
    family = "erlang"

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"shape must be a positive integer, got {self.shape}")
        object.__setattr__(self, "shape", int(self.shape))
        _require_positive("rate", self.rate)

    def _lst(self, s):
        return (self.rate / (self.rate + s)) ** self.shape

    def _lst_deriv(self, s):
        base = self.rate / (self.rate + s)
        return (self.shape / self.rate) * base ** (self.shape + 1)

    def moment(self, n):
        _check_order(n)
        k = self.shape
        return k / self.rate if n == 1 else k * (k + 1) / self.rate**2

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)


@dataclass(frozen=True)
class Gamma(ServiceDistribution):
    """Gamma distribution with real shape and rate."""

    shape: float
    rate: float
    family = "gamma"

    def __post_init__(self):
        _require_positive("shape", self.shape)
        _require_positive("rate", self.rate)

    def _lst(self, s):
        # Re(1 + s/rate) >= 1, so the principal power is analytic there.
        return (1.0 + s / self.rate) ** (-self.shape)

    def _lst_deriv(self, s):
        return (self.shape / self.rate) * (1.0 + s / self.rate) ** (-self.shape - 1)

    def moment(self, n):
        _check_order(n)
        a = self.shape
        return a / self.rate if n == 1 else a * (a + 1) / self.rate**2

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)


def _phi1(u: complex) -> complex:
    """(1 - exp(-u)) / u, stable near u = 0."""
    if abs(u) <= 0.05:
        return 1 + u * (-1 / 2 + u * (1 / 6 + u * (-1 / 24 + u * (1 / 120 + u * (-1 / 720 + u / 5040)))))
    return (1.0 - cmath.exp(-u)) / u


def _phi1_deriv(u: complex) -> complex:
    """d/du of _phi1, stable near u = 0."""
    if abs(u) <= 0.05:
        return -1 / 2 + u * (1 / 3 + u * (-1 / 8 + u * (1 / 30 + u * (-1 / 144 + u / 840))))
    return (cmath.exp(-u) * (1.0 + u) - 1.0) / u**2


@dataclass(frozen=True)
class Uniform(ServiceDistribution):
    """Uniform service time on [low, high], 0 <= low < high."""

    low: float
    high: float
    family = "uniform"

    def __post_init__(self):
        if self.low < 0:
            raise ValueError(f"low must be >= 0, got {self.low}")
        if not self.high > self.low:
            raise ValueError(f"high must exceed low, got [{self.low}, {self.high}]")

    def _lst(self, s):
        u = (self.high - self.low) * s
        return cmath.exp(-self.low * s) * _phi1(u)

    def _lst_deriv(self, s):
        w = self.high - self.low
        u = w * s
        e = cmath.exp(-self.low * s)
        return self.low * e * _phi1(u) - w * e * _phi1_deriv(u)

    def moment(self, n):
        _check_order(n)
        a, b = self.low, self.high
        return (b ** (n + 1) - a ** (n + 1)) / ((n + 1) * (b - a))

    def sample(self, rng, size=None):
        return rng.uniform(self.low, self.high, size)


def _check_weights(weights: tuple[float, ...]) -> float:
    if len(weights) == 0:
        raise ValueError("weights must be nonempty")
    if any(w < 0 for w in weights):
        raise ValueError(f"weights must be nonnegative, got {weights}")
    total = math.fsum(weights)
    if abs(total - 1.0) > _WEIGHT_TOL:
        raise ValueError(f"weights must sum to 1 within {_WEIGHT_TOL}, got sum {total!r}")
    return total


@dataclass(frozen=True)
class HyperExponential(ServiceDistribution):
    """Probabilistic mixture of exponentials."""

    weights: tuple[float, ...]
    rates: tuple[float, ...]
    family = "hyperexponential"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.weights) != len(self.rates):
            raise ValueError("weights and rates must have the same length")
        total = _check_weights(self.weights)
        for i, r in enumerate(self.rates):
            _require_positive(f"rates[{i}]", r)
        object.__setattr__(self, "_wsum", total)

    def _lst(self, s):
        acc = sum(w * r / (r + s) for w, r in zip(self.weights, self.rates))
        return acc / self._wsum

    def _lst_deriv(self, s):
        acc = sum(w * r / (r + s) ** 2 for w, r in zip(self.weights, self.rates))
        return acc / self._wsum

    def moment(self, n):
        _check_order(n)
        if n == 1:
            acc = sum(w / r for w, r in zip(self.weights, self.rates))
        else:
            acc = sum(2.0 * w / r**2 for w, r in zip(self.weights, self.rates))
        return acc / self._wsum

    def sample(self, rng, size=None):
        p = np.asarray(self.weights) / self._wsum
        if size is None:
            return rng.exponential(1.0 / self.rates[rng.choice(len(p), p=p)])
        idx = rng.choice(len(p), p=p, size=size)
        scales = 1.0 / np.asarray(self.rates)
        return rng.exponential(scales[idx])


@dataclass(frozen=True)
class Mixture(ServiceDistribution):
    """Finite mixture of service distributions (components may nest)."""

    weights: tuple[float, ...]
    components: tuple[ServiceDistribution, ...]
    family = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.weights) != len(self.components):
            raise ValueError("weights and components must have the same length")
        for i, c in enumerate(self.components):
            if not isinstance(c, ServiceDistribution):
                raise ValueError(f"components[{i}] is not a service distribution")
        total = _check_weights(self.weights)
        object.__setattr__(self, "_wsum", total)

    def _lst(self, s):
        acc = sum(w * c._lst(s) for w, c in zip(self.weights, self.components))
        return acc / self._wsum

    def _lst_deriv(self, s):
        acc = sum(w * c._lst_deriv(s) for w, c in zip(self.weights, self.components))
        return acc / self._wsum

    def moment(self, n):
        _check_order(n)
        acc = sum(w * c.moment(n) for w, c in zip(self.weights, self.components))
        return acc / self._wsum

    def sample(self, rng, size=None):
        p = np.asarray(self.weights) / self._wsum
        if size is None:
            return self.components[rng.choice(len(p), p=p)].sample(rng)
        idx = rng.choice(len(p), p=p, size=size)
        out = np.empty(size, dtype=float)
        for j, comp in enumerate(self.components):
            mask = idx == j
            count = int(mask.sum())
            if count:
                out[mask] = comp.sample(rng, count)
        return out
