"""First-order HLL finite-volume solver with entropy-inequality instrumentation.

Cells hold conserved averages on a uniform grid; constant ghost states
pin the far-field values. Each step is forward Euler with
dt = cfl * dx / max|wave speed|, followed by the system's vacuum floor.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Literal, Optional

import numpy as np
from scipy.optimize import brentq

from shock_stability.config import DAVIS_MARGIN
from shock_stability.core import SystemSpec, as_state, relative_entropy
from shock_stability.errors import BlowUp, BoundaryReached, ConfigError, DomainError

logger = logging.getLogger("shocklab.solver")


@dataclass(eq=False)
class Field:
    """Piecewise-constant solution on a uniform grid over [x_lo, x_hi]."""

    x_lo: float
    x_hi: float
    cells: np.ndarray
    time: float
    u_left: np.ndarray
    u_right: np.ndarray

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.n) + 0.5) * self.dx

    def copy(self) -> "Field":
        return replace(self, cells=self.cells.copy(), u_left=self.u_left.copy(), u_right=self.u_right.copy())

    def flipped(self) -> "Field":
        """The field seen in the coordinate -x: cells and ghost states reversed."""
        return Field(
            x_lo=-self.x_hi,
            x_hi=-self.x_lo,
            cells=self.cells[::-1].copy(),
            time=self.time,
            u_left=self.u_right.copy(),
            u_right=self.u_left.copy(),
        )

    def extended(self) -> np.ndarray:
        return np.concatenate([self.u_left[None, :], self.cells, self.u_right[None, :]], axis=0)


@dataclass(frozen=True)
class InitSpec:
    """Initial data: a Riemann jump at x = 0, optionally with one smooth bump per side.

    For ``perturbed_shock`` the bump amplitudes are solved so the discrete
    integrals of eta(U0|U_L) on the left and eta(U0|U_R) on the right hit
    their targets: eps^4 on the side facing the shock's upstream state
    (left for one-family shocks, right for n-family shocks) and eps on the
    other side.
    """

    kind: Literal["riemann", "perturbed_shock"]
    u_left: np.ndarray
    u_right: np.ndarray
    eps: float = 0.05
    family: str = "one"
    seed: int = 0
    bump_width: float = 0.15
    bump_offset: float = 0.3

    @property
    def targets(self) -> tuple[float, float]:
        """(left target, right target) of the initial relative-entropy integrals."""
        small, large = self.eps**4, self.eps
        return (small, large) if self.family == "one" else (large, small)

    def mirrored(self) -> "InitSpec":
        return replace(
            self,
            u_left=self.u_right,
            u_right=self.u_left,
            family="n" if self.family == "one" else "one",
        )


@dataclass(frozen=True)
class SimConfig:
    """Solver run parameters."""

    sys: SystemSpec
    init: InitSpec
    N: int = 2000
    domain: tuple[float, float] = (-2.0, 1.5)
    cfl: float = 0.45
    t_end: float = 0.2
    snapshot_times: tuple[float, ...] = ()
    margin: float = DAVIS_MARGIN
    strict_boundaries: bool = True
    entropy_budget: Optional[float] = None
    boundary_cells: int = 2

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < 0.0 < hi:
            raise ConfigError(f"domain {self.domain} must contain 0")
        if not 0.0 < self.cfl <= 0.9:
            raise ConfigError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.N < 2:
            raise ConfigError(f"N must be at least 2, got {self.N}")
        if self.t_end < 0.0:
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}")

    @property
    def grid(self) -> tuple[float, float]:
        """Domain shifted by under half a cell so that x = 0 is a cell edge.

        The rounding is reflection-equivariant: the grid of (-x_hi, -x_lo)
        is the mirror image of the grid of (x_lo, x_hi).
        """
        lo, hi = self.domain
        n = self.N
        dx = (hi - lo) / n
        a = -lo / dx
        k = math.floor(a + 0.5) if 2.0 * a <= n else n - math.floor(n - a + 0.5)
        k = min(max(k, 1), n - 1)
        return -k * dx, (n - k) * dx


@dataclass
class StepInfo:
    """Diagnostics of one forward-Euler step."""

    dt: float
    residual: np.ndarray
    floor_events: int
    conservation_defect: float
    max_speed: float


@dataclass
class Trajectory:
    """Snapshots and step metadata of a run."""

    snapshots: list[Field] = field(default_factory=list)
    snapshot_residuals: list[np.ndarray] = field(default_factory=list)
    dts: list[float] = field(default_factory=list)
    entropy_violations: int = 0
    max_entropy_residual: float = 0.0
    cumulative_positive_residual: float = 0.0
    entropy_budget: float = 0.0
    floor_events: list[tuple[float, int]] = field(default_factory=list)
    conservation_defects: list[float] = field(default_factory=list)
    boundary_contacts: int = 0

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    @property
    def n_steps(self) -> int:
        return len(self.dts)

    @property
    def within_budget(self) -> bool:
        return self.cumulative_positive_residual <= self.entropy_budget

    def metadata(self) -> dict[str, Any]:
        return {
            "n_steps": self.n_steps,
            "dt_min": min(self.dts) if self.dts else 0.0,
            "dt_max": max(self.dts) if self.dts else 0.0,
            "dts": list(self.dts),
            "entropy_violations": self.entropy_violations,
            "max_entropy_residual": self.max_entropy_residual,
            "cumulative_positive_residual": self.cumulative_positive_residual,
            "entropy_budget": self.entropy_budget,
            "within_entropy_budget": self.within_budget,
            "floor_events": [list(e) for e in self.floor_events],
            "max_conservation_defect": max(self.conservation_defects, default=0.0),
            "boundary_contacts": self.boundary_contacts,
            "snapshot_times": [snap.time for snap in self.snapshots],
        }


# =============================================================================
# Fluxes
# =============================================================================


def wave_speed_bounds(
    sys: SystemSpec, u_l: np.ndarray, u_r: np.ndarray, margin: float = DAVIS_MARGIN,
) -> tuple[np.ndarray, np.ndarray]:
    """Davis bounds s_L = min lambda_minus - margin, s_R = max lambda_plus + margin."""
    s_l = np.minimum(sys.lambda_minus(u_l), sys.lambda_minus(u_r)) - margin
    s_r = np.maximum(sys.lambda_plus(u_l), sys.lambda_plus(u_r)) + margin
    return s_l, s_r


def _hll_combine(s_l, s_r, f_l, f_r, q_l, q_r):
    """Upwinded HLL combination (s_R f_l - s_L f_r + s_L s_R (q_r - q_l)) / (s_R - s_L)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        middle = (s_r * f_l - s_l * f_r + s_l * s_r * (q_r - q_l)) / (s_r - s_l)
    return np.where(s_l >= 0.0, f_l, np.where(s_r <= 0.0, f_r, middle))


def numerical_flux(sys: SystemSpec, u_l: Any, u_r: Any, margin: float = DAVIS_MARGIN) -> np.ndarray:
    """HLL flux between left and right states (vectorised over leading axes).

    Raises:
        DomainError: If either state lies outside the closed state domain.
    """
    u_l, u_r = as_state(u_l), as_state(u_r)
    if not (np.all(sys.domain_closure(u_l)) and np.all(sys.domain_closure(u_r))):
        raise DomainError("numerical flux evaluated outside the closed state domain")
    s_l, s_r = wave_speed_bounds(sys, u_l, u_r, margin)
    return _hll_combine(s_l[..., None], s_r[..., None], sys.flux(u_l), sys.flux(u_r), u_l, u_r)


def numerical_entropy_flux(sys: SystemSpec, u_l: Any, u_r: Any, margin: float = DAVIS_MARGIN) -> np.ndarray:
    """HLL entropy flux consistent with G: the HLL combination applied to (G, eta)."""
    u_l, u_r = as_state(u_l), as_state(u_r)
    s_l, s_r = wave_speed_bounds(sys, u_l, u_r, margin)
    return _hll_combine(s_l, s_r, sys.entropy_flux(u_l), sys.entropy_flux(u_r), sys.entropy(u_l), sys.entropy(u_r))


# =============================================================================
# Stepping
# =============================================================================


def stable_dt(sys: SystemSpec, fld: Field, cfl: float, margin: float = DAVIS_MARGIN) -> float:
    ext = fld.extended()
    s_l, s_r = wave_speed_bounds(sys, ext[:-1], ext[1:], margin)
    max_speed = float(np.max(np.maximum(np.abs(s_l), np.abs(s_r))))
    if max_speed <= 0.0:
        return math.inf
    return cfl * fld.dx / max_speed


def _interface_fluxes(sys: SystemSpec, fld: Field, margin: float) -> tuple[np.ndarray, np.ndarray, float]:
    ext = fld.extended()
    u_l, u_r = ext[:-1], ext[1:]
    s_l, s_r = wave_speed_bounds(sys, u_l, u_r, margin)
    fluxes = _hll_combine(s_l[:, None], s_r[:, None], sys.flux(u_l), sys.flux(u_r), u_l, u_r)
    entropy_fluxes = _hll_combine(s_l, s_r, sys.entropy_flux(u_l), sys.entropy_flux(u_r), sys.entropy(u_l), sys.entropy(u_r))
    max_speed = float(np.max(np.maximum(np.abs(s_l), np.abs(s_r))))
    return fluxes, entropy_fluxes, max_speed


def step(
    fld: Field,
    sys: SystemSpec,
    cfl: float = 0.45,
    margin: float = DAVIS_MARGIN,
    dt: Optional[float] = None,
) -> tuple[Field, StepInfo]:
    """One forward-Euler HLL step; ``dt`` is capped at the CFL-limited value.

    Raises:
        BlowUp: If a cell leaves the closed state domain after flooring.
    """
    fluxes, entropy_fluxes, max_speed = _interface_fluxes(sys, fld, margin)
    dt_cfl = cfl * fld.dx / max_speed if max_speed > 0.0 else math.inf
    dt = dt_cfl if dt is None else min(dt, dt_cfl)
    if not math.isfinite(dt):
        raise BlowUp("no finite time step: all wave speeds vanish and no step was requested", fld.time)

    ratio = dt / fld.dx
    updated = fld.cells - ratio * (fluxes[1:] - fluxes[:-1])
    defect = float(np.max(np.abs(
        (np.sum(updated, axis=0) - np.sum(fld.cells, axis=0)) * fld.dx + dt * (fluxes[-1] - fluxes[0])
    )))

    floor_events = 0
    if sys.floor is not None:
        updated, floor_events = sys.floor(updated)
    new_time = fld.time + dt
    if not np.all(np.isfinite(updated)) or not np.all(sys.domain_closure(updated)):
        bad = int(np.argmax(~(np.all(np.isfinite(updated), axis=-1) & sys.domain_closure(updated))))
        raise BlowUp(f"cell {bad} left the state domain: {updated[bad]}", new_time)

    after = replace(fld, cells=updated, time=new_time)
    residual = (sys.entropy(updated) - sys.entropy(fld.cells)) / dt + (entropy_fluxes[1:] - entropy_fluxes[:-1]) / fld.dx
    return after, StepInfo(dt=dt, residual=residual, floor_events=floor_events, conservation_defect=defect, max_speed=max_speed)


def entropy_residual(before: Field, after: Field, sys: SystemSpec, margin: float = DAVIS_MARGIN) -> np.ndarray:
    """r_i = (eta_i^{n+1} - eta_i^n)/dt + (G_{i+1/2} - G_{i-1/2})/dx with the HLL entropy flux."""
    dt = after.time - before.time
    if dt <= 0.0:
        return np.zeros(before.n)
    _, entropy_fluxes, _ = _interface_fluxes(sys, before, margin)
    return (sys.entropy(after.cells) - sys.entropy(before.cells)) / dt + (entropy_fluxes[1:] - entropy_fluxes[:-1]) / before.dx


# =============================================================================
# Initial data
# =============================================================================


def cosine_bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    """1/2 (1 + cos(pi (x - c)/w)) on |x - c| < w, zero elsewhere."""
    y = (x - center) / width
    return np.where(np.abs(y) < 1.0, 0.5 * (1.0 + np.cos(np.pi * y)), 0.0)


def split_lengths(fld: Field, x: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell lengths left and right of x; the cell containing x is split by length."""
    dx = fld.dx
    edges = fld.x_lo + np.arange(fld.n) * dx
    left_len = np.clip(x - edges, 0.0, dx)
    return left_len, dx - left_len


def side_integral(sys: SystemSpec, fld: Field, reference: np.ndarray, side: str, x: float = 0.0) -> float:
    """Midpoint-rule integral of eta(U|reference) left (or right) of x."""
    left_len, right_len = split_lengths(fld, x)
    lengths = left_len if side == "left" else right_len
    return float(np.dot(lengths, relative_entropy(sys, fld.cells, reference)))


def _solve_amplitude(
    sys: SystemSpec, x: np.ndarray, dx: float, reference: np.ndarray, profile: np.ndarray, direction: np.ndarray, target: float,
) -> float:
    def states(a: float) -> np.ndarray:
        return reference + a * profile[:, None] * direction[None, :]

    def valid(a: float) -> bool:
        return bool(np.all(sys.domain_interior(states(a))))

    def excess(a: float) -> float:
        return float(np.sum(relative_entropy(sys, states(a), reference)) * dx) - target

    a_hi = 1e-3
    while valid(2.0 * a_hi) and excess(a_hi) < 0.0 and a_hi < 1e3:
        a_hi *= 2.0
    while not valid(a_hi):
        a_hi *= 0.5
        if a_hi < 1e-12:
            raise ConfigError("no valid perturbation amplitude: bump direction leaves the state domain")
    if excess(a_hi) < 0.0:
        raise ConfigError(
            f"perturbation target {target:.3g} unreachable inside the state domain "
            f"(max {excess(a_hi) + target:.3g}); lower eps or widen the bump"
        )
    return float(brentq(excess, 0.0, a_hi, xtol=1e-14, rtol=1e-13))


def build_initial_field(sys: SystemSpec, config: SimConfig) -> Field:
    """Construct U0 on the grid of ``config`` from its InitSpec.

    Raises:
        ConfigError: If the bumps do not fit on their side of the domain or
            a target integral cannot be reached.
    """
    init = config.init
    lo, hi = config.grid
    u_left, u_right = as_state(init.u_left), as_state(init.u_right)
    fld = Field(
        x_lo=float(lo),
        x_hi=float(hi),
        cells=np.zeros((config.N, sys.m)),
        time=0.0,
        u_left=u_left.copy(),
        u_right=u_right.copy(),
    )
    x = fld.centers
    left = x < 0.0
    fld.cells[left] = u_left
    fld.cells[~left] = u_right
    if init.kind == "riemann":
        return fld

    w, offset = init.bump_width, init.bump_offset
    if offset - w <= 0.0 or -offset - w <= lo or offset + w >= hi:
        raise ConfigError(
            f"bumps of width {w} at +/-{offset} do not fit inside ({lo}, 0) and (0, {hi})"
        )
    rng = np.random.default_rng(init.seed)
    directions = rng.normal(size=(2, sys.m))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    target_left, target_right = init.targets

    for side, center, reference, direction, target in (
        ("left", -offset, u_left, directions[0], target_left),
        ("right", offset, u_right, directions[1], target_right),
    ):
        mask = left if side == "left" else ~left
        profile = cosine_bump(x[mask], center, w)
        amplitude = _solve_amplitude(sys, x[mask], fld.dx, reference, profile, direction, target)
        fld.cells[mask] = reference + amplitude * profile[:, None] * direction[None, :]
        logger.debug("%s bump amplitude %.6g for target %.3g", side, amplitude, target)
    return fld


# =============================================================================
# Shock location
# =============================================================================


def shock_location(fld: Field, component: int = 0) -> float:
    """First crossing of the midpoint between the ghost values, linearly interpolated."""
    values = fld.cells[:, component]
    mid = 0.5 * (fld.u_left[component] + fld.u_right[component])
    above = values - mid
    crossings = np.nonzero(np.sign(above[:-1]) != np.sign(above[1:]))[0]
    if crossings.size == 0:
        raise DomainError("no crossing of the midpoint value: field has no front")
    i = int(crossings[0])
    x = fld.centers
    t = above[i] / (above[i] - above[i + 1])
    return float(x[i] + t * (x[i + 1] - x[i]))


def mass_shock_location(fld: Field, component: int = 0) -> float:
    """Front position from the conserved total: x_lo + sum(U - U_R) dx / (U_L - U_R)."""
    jump = fld.u_left[component] - fld.u_right[component]
    if jump == 0.0:
        raise DomainError(f"component {component} does not jump across the front")
    return float(fld.x_lo + np.sum(fld.cells[:, component] - fld.u_right[component]) * fld.dx / jump)


# =============================================================================
# Runner
# =============================================================================

StepHook = Callable[[Field, Field, StepInfo], None]


class Simulation:
    """Time loop over ``step`` with snapshots, audits and an optional per-step hook.

    The hook receives (field_before, field_after, info) after every step.
    """

    def __init__(
        self,
        config: SimConfig,
        initial: Optional[Field] = None,
        hook: Optional[StepHook] = None,
    ):
        self.config = config
        self.sys = config.sys
        self.field = initial.copy() if initial is not None else build_initial_field(self.sys, config)
        self.hook = hook
        eta_scale = float(np.max(np.abs(self.sys.entropy(self.field.extended()))))
        self.eta_scale = max(eta_scale, 1e-300)
        lo, hi = config.domain
        self.trajectory = Trajectory(
            entropy_budget=config.entropy_budget if config.entropy_budget is not None else 1e-8 * self.eta_scale * (hi - lo)
        )

    def _targets(self) -> list[float]:
        times = sorted({float(t) for t in self.config.snapshot_times if 0.0 < t < self.config.t_end})
        return times + [self.config.t_end]

    def _check_boundaries(self, fld: Field) -> None:
        k = self.config.boundary_cells
        scale = 1.0 + float(np.max(np.abs(fld.extended())))
        tol = 1e-10 * scale
        touched = (
            np.max(np.abs(fld.cells[:k] - fld.u_left)) > tol
            or np.max(np.abs(fld.cells[-k:] - fld.u_right)) > tol
        )
        if not touched:
            return
        self.trajectory.boundary_contacts += 1
        if self.config.strict_boundaries:
            raise BoundaryReached("a wave reached the pinned boundary states; enlarge the domain", fld.time)
        if self.trajectory.boundary_contacts == 1:
            logger.warning("a wave reached the boundary at t=%.6g; continuing", fld.time)

    def advance(self, dt: Optional[float] = None) -> StepInfo:
        before = self.field
        after, info = step(before, self.sys, self.config.cfl, self.config.margin, dt)
        traj = self.trajectory
        traj.dts.append(info.dt)
        traj.conservation_defects.append(info.conservation_defect)
        if info.floor_events:
            traj.floor_events.append((after.time, info.floor_events))
            logger.warning("vacuum floor applied to %d cells at t=%.6g", info.floor_events, after.time)

        cell_tol = 1e-8 * self.eta_scale / info.dt
        positive = np.maximum(info.residual, 0.0)
        traj.entropy_violations += int(np.count_nonzero(info.residual > cell_tol))
        traj.max_entropy_residual = max(traj.max_entropy_residual, float(np.max(info.residual)))
        traj.cumulative_positive_residual += float(np.sum(positive)) * info.dt * before.dx

        self._check_boundaries(after)
        if self.hook is not None:
            self.hook(before, after, info)
        self.field = after
        self._last_residual = info.residual
        return info

    def run(self) -> Trajectory:
        config = self.config
        traj = self.trajectory
        traj.snapshots.append(self.field.copy())
        traj.snapshot_residuals.append(np.zeros(self.field.n))
        logger.info("run start: %s, N=%d, t_end=%.6g", self.sys.name, config.N, config.t_end)

        for target in self._targets():
            while self.field.time < target:
                remaining = target - self.field.time
                if remaining <= 1e-14 * max(1.0, target):
                    break
                self.advance(remaining)
            if target > 0.0 and traj.snapshots[-1].time != self.field.time:
                traj.snapshots.append(self.field.copy())
                traj.snapshot_residuals.append(self._last_residual.copy())

        if traj.entropy_violations:
            logger.warning("%d cell-steps exceeded the entropy tolerance", traj.entropy_violations)
        logger.info(
            "run finished: t=%.6g after %d steps, positive entropy residual %.3g (budget %.3g)",
            self.field.time, traj.n_steps, traj.cumulative_positive_residual, traj.entropy_budget,
        )
        return traj


def run(config: SimConfig, initial: Optional[Field] = None, hook: Optional[StepHook] = None) -> Trajectory:
    """Run a simulation to ``config.t_end``; snapshots at t=0, the requested times and t_end."""
    return Simulation(config, initial, hook).run()
