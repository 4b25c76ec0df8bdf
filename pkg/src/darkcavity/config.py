"""Scenario configuration: JSON documents validated against a shipped schema."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .grid import Grid, make_grid
from .potentials import (
    AdiabaticChannel,
    EckartParams,
    FrequencyProfile,
    constant_potential,
    fit_tabulated,
    gaussian_damped_well,
    harmonic_potential,
    read_tabulated_csv,
)

SCENARIO_SUFFIX = ".json"


def load_schema() -> dict:
    text = resources.files("darkcavity").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


def shipped_scenarios() -> list[str]:
    root = resources.files("darkcavity").joinpath("scenarios")
    return sorted(p.name[: -len(SCENARIO_SUFFIX)] for p in root.iterdir() if p.name.endswith(SCENARIO_SUFFIX))


def scenario_path(name: str) -> Path:
    """Filesystem path of a shipped scenario, by bare name."""
    path = Path(str(resources.files("darkcavity").joinpath("scenarios", name + SCENARIO_SUFFIX)))
    if not path.is_file():
        raise ConfigError(f"no shipped scenario named {name!r}; available: {', '.join(shipped_scenarios())}")
    return path


def resolve_config_path(ref: str | Path) -> Path:
    """An existing file path, or else the name of a shipped scenario."""
    path = Path(ref)
    if path.is_file():
        return path
    if path.suffix in ("", SCENARIO_SUFFIX) and path.parent == Path("."):
        return scenario_path(path.stem)
    raise ConfigError(f"config file not found: {ref}")


def validate(document: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("invalid scenario:\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario document plus where it came from."""

    document: dict = field(repr=False)
    source: Path | None = None

    @classmethod
    def load(cls, ref: str | Path) -> "ScenarioConfig":
        path = resolve_config_path(ref)
        try:
            document = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(document, path)

    @classmethod
    def from_dict(cls, document: dict, source: Path | None = None) -> "ScenarioConfig":
        if not isinstance(document, dict):
            raise ConfigError("scenario must be a JSON object")
        validate(document)
        g = document["grid"]
        if g["x_max"] <= g["x_min"]:
            raise ConfigError("grid: x_max must exceed x_min")
        return cls(document, Path(source) if source else None)

    @property
    def name(self) -> str:
        return self.document["name"]

    @property
    def digest(self) -> str:
        canonical = json.dumps(self.document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    # -- physics objects -------------------------------------------------

    def grid(self) -> Grid:
        g = self.document["grid"]
        return make_grid(g["x_min"], g["x_max"], g["n_points"])

    def scaling(self, theta_override: float | None = None) -> tuple[float, float, int]:
        s = self.document["scaling"]
        center = s["theta_center"] if theta_override is None else theta_override
        return center, s.get("theta_span", 0.1), s.get("n_theta", 3)

    def static_barrier(self):
        spec = dict(self.document["channel"]["static_barrier"])
        model = spec.pop("model")
        if model == "eckart":
            return EckartParams(**spec)
        if model == "constant":
            return constant_potential(spec["value"])
        if model == "harmonic":
            return harmonic_potential(**spec)
        return gaussian_damped_well(**spec)

    def table_path(self) -> Path | None:
        spec = self.document["channel"].get("frequency")
        if not spec or spec["model"] != "table":
            return None
        path = Path(spec["path"])
        if not path.is_absolute() and self.source is not None:
            path = self.source.parent / path
        return path

    def frequency(self) -> FrequencyProfile | None:
        spec = self.document["channel"].get("frequency")
        if spec is None:
            return None
        model = spec["model"]
        if model == "constant":
            return FrequencyProfile.constant(spec["value"])
        if model == "tanh_step":
            return FrequencyProfile.tanh_step(
                spec["left"], spec["right"], spec.get("steepness", 1.0), spec.get("center", 0.0)
            )
        if model == "gaussian_well":
            return FrequencyProfile.gaussian_well(
                spec["asymptote"], spec["depth"], spec["width"], spec.get("center", 0.0)
            )
        path = self.table_path()
        if not path.is_file():
            raise ConfigError(f"frequency table not found: {path}")
        curve = read_tabulated_csv(path, spec["reference_frequency"])
        return fit_tabulated(curve, n_terms=spec.get("n_terms", 1), tolerance=spec.get("tolerance"))

    def channel(self) -> AdiabaticChannel:
        ch = self.document["channel"]
        return AdiabaticChannel(ch["mu"], self.static_barrier(), self.frequency(), ch.get("n_perp", 0))

    # -- cavity ----------------------------------------------------------

    @property
    def cavity(self) -> dict:
        return self.document.get("cavity", {})

    @property
    def selection(self) -> dict:
        return self.document.get("selection", {"db_index": 0})

    def epsilon_values(self, omega_cav: float | None = None, length: float | None = None) -> list[float]:
        """Sorted field strengths, always starting at 0.

        Explicit ``values`` win; otherwise ``max``/``count`` span a linear or
        log range; otherwise ``geometry_n_molecules`` maps each N through the
        mirror geometry (requires ``omega_cav`` and ``length``).
        """
        from .polariton import epsilon_from_geometry

        cav = self.cavity
        eps = cav.get("epsilon")
        if eps and "values" in eps:
            values = list(eps["values"])
        elif eps and "max" in eps:
            count = eps.get("count", 101)
            if eps.get("spacing", "linear") == "log":
                lo = eps.get("min", eps["max"] * 1e-4)
                if lo >= eps["max"]:
                    raise ConfigError("cavity.epsilon: min must be below max")
                values = list(np.geomspace(lo, eps["max"], count - 1))
            else:
                values = list(np.linspace(0.0, eps["max"], count))
        elif "geometry_n_molecules" in cav:
            if omega_cav is None or length is None:
                raise ConfigError("geometry mode needs the cavity frequency and mirror distance")
            values = [epsilon_from_geometry(omega_cav, length, cav["mirror_area"], n) for n in cav["geometry_n_molecules"]]
        else:
            raise ConfigError("cavity: give epsilon.values, epsilon.max or geometry_n_molecules")
        values = [0.0] + [float(v) for v in values if not (v == 0 or math.isnan(v))]
        return sorted(set(values))
