"""Scenario files: the single config format consumed by every command.

A scenario is a YAML mapping with a `classes` list plus optional
`analysis`, `simulation`, `tolerance`, and `output_dir` sections; see the
files under scenarios/ and the README for the full schema.  Parsing
produces a validated system model, so an unstable file never reaches a
command.
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .distributions import (
    Deterministic,
    Erlang,
    Exponential,
    Gamma,
    HyperExponential,
    Mixture,
    ServiceDistribution,
    Uniform,
)
from .errors import ScenarioError
from .model import SourceClass, SystemModel, validate

_FAMILY_PARAMS = {
    "exponential": ("rate",),
    "deterministic": ("value",),
    "erlang": ("shape", "rate"),
    "gamma": ("shape", "rate"),
    "uniform": ("low", "high"),
    "hyperexponential": ("weights", "rates"),
    "mixture": ("components",),
}


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: model, tagged classes, grids, sim options."""

    name: str
    model: SystemModel
    class_names: tuple[str, ...]
    tagged: tuple[int, ...]
    x_values: np.ndarray | None
    x_points: int
    x_span: float
    horizon: float
    warmup_fraction: float
    replications: int
    base_seed: int
    tolerance: float
    output_dir: str

    def with_overrides(
        self,
        out: str | None = None,
        seed: int | None = None,
        horizon: float | None = None,
        reps: int | None = None,
        tolerance: float | None = None,
    ) -> "Scenario":
        """Apply CLI flag overrides on top of the file values."""
        changes = {}
        if out is not None:
            changes["output_dir"] = out
        if seed is not None:
            changes["base_seed"] = seed
        if horizon is not None:
            changes["horizon"] = horizon
        if reps is not None:
            changes["replications"] = reps
        if tolerance is not None:
            changes["tolerance"] = tolerance
        return replace(self, **changes) if changes else self


def _as_float(raw, where: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ScenarioError(f"{where}: value must be finite, got {raw!r}")
    return value


def _as_int(raw, where: str) -> int:
    value = _as_float(raw, where)
    if int(value) != value:
        raise ScenarioError(f"{where}: expected an integer, got {raw!r}")
    return int(value)


def service_from_config(node, where: str) -> ServiceDistribution:
    """Build a service distribution from a config mapping."""
    if not isinstance(node, dict):
        raise ScenarioError(f"{where}: expected a mapping with a 'family' key")
    if "family" not in node:
        raise ScenarioError(f"{where}: missing 'family'")
    family = node["family"]
    if family not in _FAMILY_PARAMS:
        known = ", ".join(sorted(_FAMILY_PARAMS))
        raise ScenarioError(f"{where}: unknown family {family!r} (known: {known})")
    allowed = set(_FAMILY_PARAMS[family]) | {"family"}
    for key in node:
        if key not in allowed:
            raise ScenarioError(f"{where}: unexpected key {key!r} for family {family!r}")
    for key in _FAMILY_PARAMS[family]:
        if key not in node:
            raise ScenarioError(f"{where}: family {family!r} needs {key!r}")
    try:
        if family == "exponential":
            return Exponential(rate=_as_float(node["rate"], f"{where}.rate"))
        if family == "deterministic":
            return Deterministic(value=_as_float(node["value"], f"{where}.value"))
        if family == "erlang":
            return Erlang(
                shape=_as_int(node["shape"], f"{where}.shape"),
                rate=_as_float(node["rate"], f"{where}.rate"),
            )
        if family == "gamma":
            return Gamma(
                shape=_as_float(node["shape"], f"{where}.shape"),
                rate=_as_float(node["rate"], f"{where}.rate"),
            )
        if family == "uniform":
            return Uniform(
                low=_as_float(node["low"], f"{where}.low"),
                high=_as_float(node["high"], f"{where}.high"),
            )
        if family == "hyperexponential":
            weights = [_as_float(w, f"{where}.weights") for w in _seq(node["weights"], f"{where}.weights")]
            rates = [_as_float(r, f"{where}.rates") for r in _seq(node["rates"], f"{where}.rates")]
            return HyperExponential(weights=tuple(weights), rates=tuple(rates))
        components = _seq(node["components"], f"{where}.components")
        dists, weights = [], []
        for i, comp in enumerate(components):
            comp_where = f"{where}.components[{i}]"
            if not isinstance(comp, dict) or "weight" not in comp:
                raise ScenarioError(f"{comp_where}: needs a 'weight' and a family spec")
            weights.append(_as_float(comp["weight"], f"{comp_where}.weight"))
            spec = {k: v for k, v in comp.items() if k != "weight"}
            dists.append(service_from_config(spec, comp_where))
        return Mixture(weights=tuple(weights), components=tuple(dists))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _seq(raw, where: str) -> list:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ScenarioError(f"{where}: expected a nonempty list")
    return list(raw)


def parse_scenario(path) -> Scenario:
    """Load, validate, and normalize a scenario file.

    Raises ScenarioError for malformed input (every message names the
    offending field) and StabilityError when the configured loads are
    infeasible.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")

    classes_node = raw.get("classes")
    if not isinstance(classes_node, list) or not classes_node:
        raise ScenarioError("classes: expected a nonempty list")
    names, classes = [], []
    for k, node in enumerate(classes_node):
        where = f"classes[{k}]"
        if not isinstance(node, dict):
            raise ScenarioError(f"{where}: expected a mapping")
        if "arrival_rate" not in node:
            raise ScenarioError(f"{where}: missing 'arrival_rate'")
        rate = _as_float(node["arrival_rate"], f"{where}.arrival_rate")
        if not rate > 0:
            raise ScenarioError(f"{where}.arrival_rate: must be > 0, got {rate}")
        if "service" not in node:
            raise ScenarioError(f"{where}: missing 'service'")
        service = service_from_config(node["service"], f"{where}.service")
        names.append(str(node.get("name", f"class{k}")))
        classes.append(SourceClass(arrival_rate=rate, service=service))
    model = validate(SystemModel(classes=tuple(classes)))

    analysis = raw.get("analysis") or {}
    if not isinstance(analysis, dict):
        raise ScenarioError("analysis: expected a mapping")
    tagged = _parse_tagged(analysis.get("tagged", "all"), names)
    x_values, x_points, x_span = _parse_grid(analysis.get("x_grid"))

    sim = raw.get("simulation") or {}
    if not isinstance(sim, dict):
        raise ScenarioError("simulation: expected a mapping")
    horizon = _as_float(sim.get("horizon", 1.0e6), "simulation.horizon")
    warmup = _as_float(sim.get("warmup_fraction", 0.1), "simulation.warmup_fraction")
    reps = _as_int(sim.get("replications", 10), "simulation.replications")
    seed = _as_int(sim.get("base_seed", 12345), "simulation.base_seed")

    tolerance = _as_float(raw.get("tolerance", 0.01), "tolerance")
    if tolerance < 0:
        raise ScenarioError(f"tolerance: must be >= 0, got {tolerance}")

    return Scenario(
        name=str(raw.get("name", path.stem)),
        model=model,
        class_names=tuple(names),
        tagged=tagged,
        x_values=x_values,
        x_points=x_points,
        x_span=x_span,
        horizon=horizon,
        warmup_fraction=warmup,
        replications=reps,
        base_seed=seed,
        tolerance=tolerance,
        output_dir=str(raw.get("output_dir", "out")),
    )


def _parse_tagged(node, names: list[str]) -> tuple[int, ...]:
    if node == "all" or node is None:
        return tuple(range(len(names)))
    if not isinstance(node, list) or not node:
        raise ScenarioError("analysis.tagged: expected 'all' or a nonempty list")
    indices = []
    for item in node:
        if isinstance(item, str):
            if item not in names:
                raise ScenarioError(f"analysis.tagged: unknown class name {item!r}")
            indices.append(names.index(item))
        else:
            idx = _as_int(item, "analysis.tagged")
            if not 0 <= idx < len(names):
                raise ScenarioError(f"analysis.tagged: index {idx} out of range")
            indices.append(idx)
    return tuple(dict.fromkeys(indices))


def _parse_grid(node):
    if node is None:
        return None, 200, 20.0
    if not isinstance(node, dict):
        raise ScenarioError("analysis.x_grid: expected a mapping")
    if "values" in node:
        values = [_as_float(v, "analysis.x_grid.values") for v in _seq(node["values"], "analysis.x_grid.values")]
        arr = np.asarray(values, dtype=float)
        if np.any(arr < 0) or np.any(np.diff(arr) <= 0):
            raise ScenarioError("analysis.x_grid.values: must be nonnegative and strictly increasing")
        return arr, len(values), 0.0
    points = _as_int(node.get("points", 200), "analysis.x_grid.points")
    span = _as_float(node.get("span", 20.0), "analysis.x_grid.span")
    if points < 2 or span <= 0:
        raise ScenarioError("analysis.x_grid: points must be >= 2 and span > 0")
    return None, points, span
