"""Configuration: environment-driven tolerances and the JSON config schema.

Tolerances can be overridden through ``SHOCKLAB_<FIELD>`` environment
variables (the CLI loads a ``.env`` file first). Config files are JSON
documents validated by the pydantic models below.
"""

import json
import os
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from shock_stability.errors import ConfigError


ENV_PREFIX = "SHOCKLAB_"
PRESET_PACKAGE = "shock_stability.presets"

# Widening of the HLL wave-speed bounds: the endpoint eigenvalues do not
# bound every intermediate state of a Riemann fan.
DAVIS_MARGIN = 1e-3


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by the checkers.

    Attributes:
        tol_rh: Relative Rankine-Hugoniot residual accepted for a discontinuity.
        tol_mono: Slack for monotonicity checks (Liu, strengthening).
        tol_sign: Slack for sign checks of the cornerstone inequality.
        gap_tol: Minimum spectral gap keeping the extreme eigenvalue simple.
        quad_tol: Absolute tolerance of adaptive Simpson quadrature.
        quad_depth: Recursion limit of adaptive Simpson quadrature.
        fd_step: Relative finite-difference step on states.
        sigma_fd_step: Finite-difference step on curve parameters.
    """

    tol_rh: float = 1e-9
    tol_mono: float = 1e-7
    tol_sign: float = 1e-10
    gap_tol: float = 1e-6
    quad_tol: float = 1e-9
    quad_depth: int = 30
    fd_step: float = 1e-6
    sigma_fd_step: float = 1e-5

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Build tolerances, overriding defaults from SHOCKLAB_* variables."""
        overrides: dict[str, Any] = {}
        for f in fields(cls):
            raw = os.getenv(f"{ENV_PREFIX}{f.name.upper()}")
            if raw is None:
                continue
            try:
                overrides[f.name] = int(raw) if f.type in (int, "int") else float(raw)
            except ValueError:
                raise ConfigError(f"{ENV_PREFIX}{f.name.upper()}={raw!r} is not a number")
        return replace(cls(), **overrides)


DEFAULT_TOLERANCES = Tolerances()


class SimBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(2000, gt=1)
    domain: tuple[float, float] = (-2.0, 1.5)
    cfl: float = Field(0.45, gt=0.0, le=0.9)
    t_end: float = Field(0.2, ge=0.0)
    snapshot_times: list[float] = Field(default_factory=list)
    margin: float = Field(DAVIS_MARGIN, ge=0.0)
    strict_boundaries: bool = True
    entropy_budget: Optional[float] = None

    @field_validator("domain")
    @classmethod
    def _domain_contains_origin(cls, value: tuple[float, float]) -> tuple[float, float]:
        lo, hi = value
        if not lo < 0.0 < hi:
            raise ValueError("domain must satisfy x_lo < 0 < x_hi")
        return value


class ShiftBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eps: Optional[float] = Field(None, gt=0.0)
    eta_floor: float = Field(1e-12, gt=0.0)
    window: Optional[float] = Field(None, gt=0.0)
    k_cells: int = Field(4, ge=1)
    layer_skip: int = Field(3, ge=0)


class ExperimentBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base: list[float]
    family: Literal["one", "n"] = "one"
    s: float = Field(1.0, gt=0.0)
    kind: Literal["riemann", "perturbed_shock"] = "perturbed_shock"
    eps: float = Field(0.05, gt=0.0)
    seed: int = 0
    bump_width: float = Field(0.15, gt=0.0)
    bump_offset: float = Field(0.3, gt=0.0)


class LabConfig(BaseModel):
    """Whole config document: system fields at top level plus optional blocks."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    type: Literal["isentropic", "full_euler", "scalar"]
    gamma: Optional[float] = None
    kappa: float = Field(1.0, gt=0.0)
    K: float = Field(10.0, gt=0.0)
    rho_floor: float = Field(1e-10, ge=0.0)
    pressure_law: Literal["power", "nonconvex_cubic", "table"] = "power"
    pressure_table: Optional[list[tuple[float, float]]] = None
    flux: Literal["burgers", "cubic"] = "burgers"
    sim: Optional[SimBlock] = None
    shift: Optional[ShiftBlock] = None
    experiment: Optional[ExperimentBlock] = None


def resolve_config_path(name_or_path: str | Path) -> Path | None:
    """Return a filesystem path, or None when the name refers to a bundled preset."""
    path = Path(name_or_path)
    if path.exists():
        return path
    return None


def _read_config_text(name_or_path: str | Path) -> tuple[str, str]:
    path = resolve_config_path(name_or_path)
    if path is not None:
        return path.read_text(encoding="utf-8"), str(path)

    name = Path(name_or_path).name
    if not name.endswith(".json"):
        name = f"{name}.json"
    preset = resources.files(PRESET_PACKAGE).joinpath(name)
    if not preset.is_file():
        raise ConfigError(f"config file not found: {name_or_path}")
    return preset.read_text(encoding="utf-8"), f"preset:{name}"


def load_lab_config(name_or_path: str | Path) -> LabConfig:
    """Parse and validate a config document.

    Args:
        name_or_path: Path to a JSON file, or the bare name of a bundled preset.

    Returns:
        The validated LabConfig.

    Raises:
        ConfigError: With ``source:line:col`` for JSON syntax errors and the
            dotted field location for schema violations.
    """
    text, source = _read_config_text(name_or_path)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from e

    try:
        return LabConfig.model_validate(document)
    except ValidationError as e:
        problems = []
        for err in e.errors():
            loc = ".".join(str(part) for part in err["loc"]) or "<root>"
            problems.append(f"field '{loc}': {err['msg']}")
        raise ConfigError(f"{source}: " + "; ".join(problems)) from e
