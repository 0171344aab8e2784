"""System description and compound-Poisson aggregation.

A system is an ordered list of source classes, each a Poisson packet
stream with its own service-time distribution, all sharing one FCFS
server.  For any tagged class, the remaining classes superpose into a
single compound-Poisson background process whose jump distribution is
the arrival-rate-weighted mixture of their service distributions.
"""

from dataclasses import dataclass
from functools import cached_property

from .distributions import Deterministic, Mixture, ServiceDistribution
from .errors import StabilityError

STABILITY_MARGIN = 1e-12


@dataclass(frozen=True)
class SourceClass:
    """One Poisson packet source: arrival rate plus service distribution."""

    arrival_rate: float
    service: ServiceDistribution

    @property
    def load(self) -> float:
        return self.arrival_rate * self.service.mean


@dataclass(frozen=True)
class SystemModel:
    """K source classes sharing one FCFS server, indexed 0..K-1."""

    classes: tuple[SourceClass, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(self.classes) == 0:
            raise ValueError("a system needs at least one source class")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @cached_property
    def total_rate(self) -> float:
        return sum(c.arrival_rate for c in self.classes)

    @cached_property
    def class_loads(self) -> tuple[float, ...]:
        return tuple(c.load for c in self.classes)

    @cached_property
    def total_load(self) -> float:
        return sum(self.class_loads)


@dataclass(frozen=True)
class BackgroundProcess:
    """Aggregated compound-Poisson process seen by a tagged class."""

    rate: float
    jump: ServiceDistribution
    load: float


def validate(model: SystemModel) -> SystemModel:
    """Check rate positivity and stability; return the model unchanged.

    Raises ValueError naming the offending class for nonpositive rates and
    StabilityError (carrying the computed total load) when the total load
    reaches 1.
    """
    for k, cls in enumerate(model.classes):
        if not cls.arrival_rate > 0:
            raise ValueError(
                f"classes[{k}].arrival_rate must be > 0, got {cls.arrival_rate}"
            )
    rho_all = model.total_load
    if not rho_all < 1.0 - STABILITY_MARGIN:
        raise StabilityError(
            f"system is unstable: total load rho_all = {rho_all:.6g} >= 1",
            total_load=rho_all,
        )
    return model


def aggregate_background(model: SystemModel, tagged: int) -> BackgroundProcess:
    """Superpose all classes except `tagged` into one background process.

    The background arrival rate is the sum of the non-tagged rates and the
    jump distribution is their rate-weighted service mixture.  For a
    single-class system the background is empty (rate and load zero, jump
    an arbitrary placeholder).
    """
    if not 0 <= tagged < model.num_classes:
        raise IndexError(f"tagged index {tagged} out of range [0, {model.num_classes})")
    others = [c for k, c in enumerate(model.classes) if k != tagged]
    return _superpose(others)


def aggregate_all(model: SystemModel) -> BackgroundProcess:
    """Superpose every class into one compound-Poisson process."""
    return _superpose(list(model.classes))


def _superpose(classes: list[SourceClass]) -> BackgroundProcess:
    if not classes:
        return BackgroundProcess(rate=0.0, jump=Deterministic(1.0), load=0.0)
    rate = sum(c.arrival_rate for c in classes)
    if len(classes) == 1:
        jump = classes[0].service
    else:
        jump = Mixture(
            weights=tuple(c.arrival_rate / rate for c in classes),
            components=tuple(c.service for c in classes),
        )
    return BackgroundProcess(rate=rate, jump=jump, load=rate * jump.mean)
