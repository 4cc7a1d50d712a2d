"""Shift path x(t) driven by the velocity functional V, with trace and jump audits.

The path is advanced in lockstep with the solver: the sample at t_n is
taken on the field at t_n, then x moves by dt * v_n. The velocity v_n is
the average of V over the cells overlapping (x, x + window).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from scipy.optimize import brentq

from shock_stability.core import SystemSpec, as_state, relative_entropy, relative_flux
from shock_stability.errors import ConfigError, OutOfDomain
from shock_stability.solver import Field, SimConfig, Simulation, StepInfo, Trajectory

logger = logging.getLogger("shocklab.shift")


@dataclass(frozen=True)
class VelocityParams:
    """Parameters of V: the drift eps, the 0/0 guard eta_floor and the reference U_L."""

    eps: float
    u_left_ref: np.ndarray
    eta_floor: float = 1e-12

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not self.eta_floor > 0.0:
            raise ConfigError(f"eta_floor must be positive, got {self.eta_floor}")


def velocity_field(sys: SystemSpec, states: Any, params: VelocityParams) -> np.ndarray:
    """V evaluated on an array of states ``(..., m)``.

    Off the vacuum set V = min(F(U,U_L)/eta(U|U_L) - eps, lambda_minus(U) - eps);
    on the vacuum set only the ratio branch applies. Where eta(U|U_L) falls
    below eta_floor the ratio takes its limit lambda_minus(U_L).
    """
    states = as_state(states)
    ref = as_state(params.u_left_ref)
    eta = np.asarray(relative_entropy(sys, states, ref), dtype=float)
    flux = np.asarray(relative_flux(sys, states, ref), dtype=float)
    lam_ref = float(sys.lambda_minus(ref))
    near = eta < params.eta_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(near, lam_ref, flux / np.where(near, 1.0, eta))
    ratio_branch = ratio - params.eps
    lam_branch = np.asarray(sys.lambda_minus(states), dtype=float) - params.eps
    vacuum = np.asarray(sys.singular_set(states), dtype=bool) & ~near
    return np.where(vacuum, ratio_branch, np.minimum(ratio_branch, lam_branch))


def velocity_V(sys: SystemSpec, u: Any, params: VelocityParams) -> float:
    """V(u) for a single state; V(U_L) = lambda_minus(U_L) - eps exactly."""
    return float(velocity_field(sys, as_state(u)[None, :], params)[0])


def _overlaps(fld: Field, a: float, b: float) -> tuple[int, np.ndarray]:
    """(first cell index, overlap lengths) of the cells meeting (a, b)."""
    if a < fld.x_lo - 1e-12 * fld.dx or b > fld.x_hi + 1e-12 * fld.dx:
        raise OutOfDomain(f"interval ({a:.6g}, {b:.6g}) leaves the grid [{fld.x_lo:.6g}, {fld.x_hi:.6g}]")
    dx = fld.dx
    first = max(int(math.floor((a - fld.x_lo) / dx)), 0)
    last = min(int(math.ceil((b - fld.x_lo) / dx)), fld.n)
    idx = np.arange(first, last)
    left_edges = fld.x_lo + idx * dx
    weights = np.clip(np.minimum(b, left_edges + dx) - np.maximum(a, left_edges), 0.0, None)
    return first, weights


def interval_average(fld: Field, a: float, b: float, values: Optional[np.ndarray] = None) -> Any:
    """Overlap-weighted average over (a, b) of the cell states (or of per-cell ``values``)."""
    first, weights = _overlaps(fld, a, b)
    total = float(np.sum(weights))
    if total <= 0.0:
        raise OutOfDomain(f"empty averaging interval ({a:.6g}, {b:.6g})")
    data = fld.cells if values is None else values
    chunk = data[first:first + weights.size]
    return np.tensordot(weights, chunk, axes=(0, 0)) / total


def default_window(fld: Field, eps: float) -> float:
    """max(4 dx, eps * span / 100)."""
    return max(4.0 * fld.dx, eps * (fld.x_hi - fld.x_lo) / 100.0)


def windowed_velocity(sys: SystemSpec, fld: Field, x: float, params: VelocityParams, window: Optional[float] = None) -> float:
    """Average of V over the cells overlapping (x, x + window), weighted by overlap length.

    Raises:
        OutOfDomain: If the window leaves the grid.
    """
    window = default_window(fld, params.eps) if window is None else window
    first, weights = _overlaps(fld, x, x + window)
    v = velocity_field(sys, fld.cells[first:first + weights.size], params)
    return float(np.dot(weights, v) / np.sum(weights))


def extract_traces(fld: Field, x: float, k_cells: int = 4, layer_skip: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """One-sided traces: averages over k_cells cells after skipping layer_skip cells each side of x.

    Raises:
        OutOfDomain: If either averaging interval leaves the grid.
    """
    if k_cells < 1:
        raise ConfigError(f"k_cells must be at least 1, got {k_cells}")
    dx = fld.dx
    skip = layer_skip * dx
    span = k_cells * dx
    u_minus = interval_average(fld, x - skip - span, x - skip)
    u_plus = interval_average(fld, x + skip, x + skip + span)
    return np.asarray(u_minus), np.asarray(u_plus)


@dataclass
class ShiftPath:
    """Samples of x(t), x'(t) and the one-sided traces along the path.

    ``x`` and ``time`` hold the current (not yet sampled) position.
    """

    x: float
    time: float
    window: float
    u_left: np.ndarray
    u_right: np.ndarray
    k_cells: int = 4
    layer_skip: int = 3
    times: list[float] = field(default_factory=list)
    positions: list[float] = field(default_factory=list)
    velocities: list[float] = field(default_factory=list)
    traces_minus: list[np.ndarray] = field(default_factory=list)
    traces_plus: list[np.ndarray] = field(default_factory=list)
    trace_variations: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    @property
    def xs(self) -> np.ndarray:
        return np.asarray(self.positions)

    @property
    def vs(self) -> np.ndarray:
        return np.asarray(self.velocities)

    @property
    def u_minus(self) -> np.ndarray:
        return np.asarray(self.traces_minus)

    @property
    def u_plus(self) -> np.ndarray:
        return np.asarray(self.traces_plus)

    def max_lipschitz_ratio(self) -> float:
        """max |x(t2) - x(t1)| / |t2 - t1| over consecutive samples."""
        t, x = self.t, self.xs
        dt = np.diff(t)
        keep = dt > 0.0
        if not np.any(keep):
            return 0.0
        return float(np.max(np.abs(np.diff(x)[keep]) / dt[keep]))


def new_path(fld: Field, params: VelocityParams, x0: float = 0.0, window: Optional[float] = None,
             k_cells: int = 4, layer_skip: int = 3) -> ShiftPath:
    return ShiftPath(
        x=float(x0),
        time=fld.time,
        window=default_window(fld, params.eps) if window is None else float(window),
        u_left=fld.u_left.copy(),
        u_right=fld.u_right.copy(),
        k_cells=k_cells,
        layer_skip=layer_skip,
    )


def _check_safe(path: ShiftPath, fld: Field) -> None:
    reach = (path.k_cells + path.layer_skip) * fld.dx
    if path.x - reach < fld.x_lo or path.x + max(path.window, reach) > fld.x_hi:
        raise OutOfDomain(f"shift position x={path.x:.6g} left the safe interior of [{fld.x_lo:.6g}, {fld.x_hi:.6g}]")


def trace_variation(sys: SystemSpec, fld: Field, x: float, params: VelocityParams,
                    k_cells: int = 4, layer_skip: int = 3) -> float:
    """Largest jump of V between neighbouring cells inside either trace interval."""
    dx = fld.dx
    skip, span = layer_skip * dx, k_cells * dx
    variation = 0.0
    for a, b in ((x - skip - span, x - skip), (x + skip, x + skip + span)):
        first, weights = _overlaps(fld, a, b)
        v = velocity_field(sys, fld.cells[first:first + weights.size], params)[weights > 0.0]
        if v.size > 1:
            variation = max(variation, float(np.max(np.abs(np.diff(v)))))
    return variation


def _record(path: ShiftPath, sys: SystemSpec, fld: Field, params: VelocityParams) -> float:
    _check_safe(path, fld)
    first, weights = _overlaps(fld, path.x, path.x + path.window)
    v_cells = velocity_field(sys, fld.cells[first:first + weights.size], params)
    v = float(np.dot(weights, v_cells) / np.sum(weights))
    u_minus, u_plus = extract_traces(fld, path.x, path.k_cells, path.layer_skip)
    variation = trace_variation(sys, fld, path.x, params, path.k_cells, path.layer_skip)

    path.times.append(fld.time)
    path.positions.append(path.x)
    path.velocities.append(v)
    path.traces_minus.append(u_minus)
    path.traces_plus.append(u_plus)
    path.trace_variations.append(variation)
    return v


def advance_shift(path: ShiftPath, sys: SystemSpec, fld: Field, dt: float, params: VelocityParams) -> ShiftPath:
    """Record the sample on ``fld`` (the field at the path's current time), then x += dt * v.

    Raises:
        OutOfDomain: If x leaves the safe interior of the grid.
    """
    if dt == 0.0:
        return path
    v = _record(path, sys, fld, params)
    path.x += dt * v
    path.time = fld.time + dt
    return path


def close_path(path: ShiftPath, sys: SystemSpec, fld: Field, params: VelocityParams) -> ShiftPath:
    """Record the terminal sample at the field's time without moving x."""
    if path.times and path.times[-1] == fld.time:
        return path
    _record(path, sys, fld, params)
    return path


SampleHook = Callable[[Field, ShiftPath], None]


def track_shift(
    config: SimConfig,
    params: VelocityParams,
    initial: Optional[Field] = None,
    window: Optional[float] = None,
    k_cells: int = 4,
    layer_skip: int = 3,
    x0: float = 0.0,
    on_sample: Optional[SampleHook] = None,
) -> tuple[Trajectory, ShiftPath]:
    """Run the solver with the shift path advanced after every step.

    ``on_sample`` is called with (field, path) right after each sample is
    recorded, including the terminal one.
    """
    sim = Simulation(config, initial)
    path = new_path(sim.field, params, x0, window, k_cells, layer_skip)

    def hook(before: Field, after: Field, info: StepInfo) -> None:
        advance_shift(path, config.sys, before, info.dt, params)
        if on_sample is not None:
            on_sample(before, path)

    sim.hook = hook
    trajectory = sim.run()
    close_path(path, config.sys, sim.field, params)
    if on_sample is not None:
        on_sample(sim.field, path)
    logger.info("shift path: %d samples, final x=%.6g", len(path), path.positions[-1])
    return trajectory, path


# =============================================================================
# Audits
# =============================================================================


@dataclass
class FilippovReport:
    """Sandwich V_min <= x' <= V_max per sample, with a per-sample slack."""

    v_min: np.ndarray
    v_max: np.ndarray
    slack: np.ndarray
    violations: np.ndarray
    vacuum_samples: int

    @property
    def n_samples(self) -> int:
        return int(self.v_min.size)

    @property
    def violation_fraction(self) -> float:
        return float(np.mean(self.violations)) if self.violations.size else 0.0


def filippov_check(path: ShiftPath, sys: SystemSpec, params: VelocityParams) -> FilippovReport:
    """Compare x'(t) against V evaluated on the traces.

    V_max = max(V(u_minus), V(u_plus)); V_min = min of the two, or -inf when
    a trace sits on the vacuum set. The slack is k_cells times the largest
    jump of V between neighbouring cells of the trace intervals, capped at
    half the sandwich width, plus 1e-9.
    """
    if not len(path):
        empty = np.zeros(0)
        return FilippovReport(empty, empty, empty, np.zeros(0, dtype=bool), 0)
    u_minus, u_plus = path.u_minus, path.u_plus
    v_minus = velocity_field(sys, u_minus, params)
    v_plus = velocity_field(sys, u_plus, params)
    vacuum = np.asarray(sys.singular_set(u_minus), dtype=bool) | np.asarray(sys.singular_set(u_plus), dtype=bool)
    v_max = np.maximum(v_minus, v_plus)
    v_min = np.where(vacuum, -np.inf, np.minimum(v_minus, v_plus))
    spread = path.k_cells * np.asarray(path.trace_variations, dtype=float)
    slack = np.minimum(spread, 0.5 * (v_max - v_min)) + 1e-9
    xp = path.vs
    violations = (xp > v_max + slack) | (xp < v_min - slack)
    report = FilippovReport(v_min=v_min, v_max=v_max, slack=slack, violations=violations, vacuum_samples=int(np.sum(vacuum)))
    if report.violation_fraction > 0.01:
        logger.warning("Filippov sandwich violated at %.1f%% of samples", 100.0 * report.violation_fraction)
    return report


@dataclass
class DafermosReport:
    """Jump relations along the path at samples with a resolved jump (NaN elsewhere).

    Attributes:
        rh_path: ||A(u+) - A(u-) - x'(u+ - u-)|| / ||u+ - u-||.
        rh_fitted: The same with the least-squares speed of the traces.
        fitted_speed: Least-squares speed of each trace pair.
        entropy_path: Positive part of G(u+) - G(u-) - x'(eta(u+) - eta(u-)).
        entropy_fitted: The same with the least-squares speed.
        jump_tol: Jumps at or below this norm are skipped.
    """

    rh_path: np.ndarray
    rh_fitted: np.ndarray
    fitted_speed: np.ndarray
    entropy_path: np.ndarray
    entropy_fitted: np.ndarray
    jump_tol: float

    @property
    def n_jumps(self) -> int:
        return int(np.sum(np.isfinite(self.rh_path)))

    def _max(self, values: np.ndarray) -> float:
        finite = values[np.isfinite(values)]
        return float(np.max(finite)) if finite.size else 0.0

    @property
    def max_rh_path(self) -> float:
        return self._max(self.rh_path)

    @property
    def max_rh_fitted(self) -> float:
        return self._max(self.rh_fitted)

    @property
    def max_entropy_path(self) -> float:
        return self._max(self.entropy_path)

    @property
    def max_entropy_fitted(self) -> float:
        return self._max(self.entropy_fitted)


def dafermos_check(path: ShiftPath, sys: SystemSpec, jump_tol: Optional[float] = None) -> DafermosReport:
    """Rankine-Hugoniot and entropy relations of the traces against x'(t)."""
    if jump_tol is None:
        jump_tol = 0.1 * float(np.linalg.norm(path.u_right - path.u_left))
    k = len(path)
    nan = np.full(k, np.nan)
    report = DafermosReport(nan.copy(), nan.copy(), nan.copy(), nan.copy(), nan.copy(), jump_tol)
    if not k:
        return report
    u_minus, u_plus = path.u_minus, path.u_plus
    jump = u_plus - u_minus
    norms = np.linalg.norm(jump, axis=-1)
    flux_jump = sys.flux(u_plus) - sys.flux(u_minus)
    eta_jump = sys.entropy(u_plus) - sys.entropy(u_minus)
    g_jump = sys.entropy_flux(u_plus) - sys.entropy_flux(u_minus)
    xp = path.vs

    for i in np.nonzero(norms > jump_tol)[0]:
        sigma = float(jump[i] @ flux_jump[i] / (jump[i] @ jump[i]))
        report.fitted_speed[i] = sigma
        report.rh_path[i] = float(np.linalg.norm(flux_jump[i] - xp[i] * jump[i])) / norms[i]
        report.rh_fitted[i] = float(np.linalg.norm(flux_jump[i] - sigma * jump[i])) / norms[i]
        report.entropy_path[i] = max(0.0, float(g_jump[i] - xp[i] * eta_jump[i]))
        report.entropy_fitted[i] = max(0.0, float(g_jump[i] - sigma * eta_jump[i]))
    return report


@dataclass(frozen=True)
class LemmaConstantEstimate:
    """Sampled C in V(U) >= lambda_minus(U_L) - C eps over eta(U|U_L) <= eps^2."""

    constant: float
    n_samples: int
    worst_state: Optional[np.ndarray] = field(default=None, compare=False)


def estimate_lemma_constant(
    sys: SystemSpec,
    params: VelocityParams,
    n: int = 200,
    rng: Optional[np.random.Generator] = None,
    radius: float = 1.0,
) -> LemmaConstantEstimate:
    """Estimate C = max (lambda_minus(U_L) - V(u)) / eps over the eps^2 sublevel set.

    States are drawn along random directions from U_L at a random fraction
    of the sublevel set's extent (found by root bracketing up to ``radius``).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ref = as_state(params.u_left_ref)
    level = params.eps**2
    lam_ref = float(sys.lambda_minus(ref))
    worst, worst_state, count = -math.inf, None, 0

    for _ in range(n):
        direction = rng.normal(size=sys.m)
        direction /= np.linalg.norm(direction)

        def excess(r: float) -> float:
            return relative_entropy(sys, ref + r * direction, ref) - level

        r_hi = radius
        while r_hi > 1e-12 and not bool(sys.domain_interior(ref + r_hi * direction)):
            r_hi *= 0.5
        if r_hi <= 1e-12:
            continue
        r_edge = brentq(excess, 0.0, r_hi, xtol=1e-14) if excess(r_hi) > 0.0 else r_hi
        u = ref + rng.uniform(0.0, 1.0) * r_edge * direction
        value = (lam_ref - velocity_V(sys, u, params)) / params.eps
        count += 1
        if value > worst:
            worst, worst_state = value, u

    logger.debug("lemma constant estimate %.6g from %d samples", worst, count)
    return LemmaConstantEstimate(constant=float(worst), n_samples=count, worst_state=worst_state)


@dataclass(frozen=True)
class WindowDrift:
    """Path drift between runs with window h and h/2."""

    window: float
    max_drift: float
    dx: float

    @property
    def converged(self) -> bool:
        return self.max_drift <= 2.0 * self.dx


def window_drift(
    config: SimConfig,
    params: VelocityParams,
    initial: Optional[Field] = None,
    window: Optional[float] = None,
    k_cells: int = 4,
    layer_skip: int = 3,
) -> WindowDrift:
    """Rerun the lockstep shift with half the window and report the largest position gap."""
    _, coarse = track_shift(config, params, initial, window, k_cells, layer_skip)
    _, fine = track_shift(config, params, initial, 0.5 * coarse.window, k_cells, layer_skip)
    n = min(len(coarse), len(fine))
    drift = float(np.max(np.abs(coarse.xs[:n] - fine.xs[:n]))) if n else 0.0
    dx = (config.domain[1] - config.domain[0]) / config.N
    return WindowDrift(window=coarse.window, max_drift=drift, dx=dx)
