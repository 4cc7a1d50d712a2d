"""Shock curves, admissibility classification and the structural identities.

Explicit curves are available for isentropic and full Euler; every other
system goes through predictor-corrector continuation of the Rankine-Hugoniot
equations. A one-family curve starts at its left state (``base``) and carries
right states; an n-family curve starts at its right state and carries left
states. Mirroring a system exchanges the two.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from shock_stability.config import DEFAULT_TOLERANCES, Tolerances
from shock_stability.core import SystemSpec, as_state, relative_entropy, relative_flux
from shock_stability.errors import (
    ContinuationStall,
    DomainError,
    EigenvalueCollision,
    NotADiscontinuity,
    RangeError,
)
from shock_stability.systems import PressureLaw, euler_primitive, from_primitive, sample_interior
from shock_stability.utils import adaptive_simpson, parameter_derivative

logger = logging.getLogger("shocklab.hugoniot")


class Family(str, Enum):
    ONE = "one"
    N = "n"

    @property
    def opposite(self) -> "Family":
        return Family.N if self is Family.ONE else Family.ONE

    @property
    def sign(self) -> float:
        return -1.0 if self is Family.ONE else 1.0


class Classification(str, Enum):
    ONE_SHOCK = "one_shock"
    N_SHOCK = "n_shock"
    CONTACT = "contact"
    INTERMEDIATE = "intermediate"
    INADMISSIBLE = "inadmissible"


CurveEvaluator = Callable[[float], tuple[np.ndarray, float]]


def extreme_speed(sys: SystemSpec, u: Any, family: Family) -> Any:
    return sys.lambda_minus(u) if family is Family.ONE else sys.lambda_plus(u)


@dataclass(frozen=True, eq=False)
class ShockCurveSample:
    """Samples (s, S_U(s), sigma_U(s)) of one shock curve.

    Attributes:
        family: Which extreme family the curve belongs to.
        base: The fixed endpoint U = S_U(0).
        s_grid: Ordered curve parameters starting at 0.
        states: S_U(s) per grid point, shape (k, m).
        speeds: sigma_U(s) per grid point.
        s_max: Last sampled parameter.
        s_limit: Largest parameter the evaluator accepts.
        method: "explicit" or "continuation".
    """

    family: Family
    base: np.ndarray
    s_grid: np.ndarray
    states: np.ndarray
    speeds: np.ndarray
    s_max: float
    s_limit: float
    method: str
    evaluator: CurveEvaluator = field(repr=False, compare=False)

    def state_at(self, s: float) -> np.ndarray:
        return self.evaluator(s)[0]

    def speed_at(self, s: float) -> float:
        return self.evaluator(s)[1]

    def sigma_prime(self, s: float, h: float = 1e-5) -> float:
        """d sigma/ds by second-order differences, one-sided near the ends."""
        return parameter_derivative(self.speed_at, s, 0.0, self.s_limit, h)

    def pair(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(u_minus, u_plus) of the discontinuity joining base and a curve state."""
        if self.family is Family.ONE:
            return self.base, state
        return state, self.base

    def mirrored(self) -> "ShockCurveSample":
        """The same states seen by the mirrored system: speeds negate, families swap."""
        evaluator = self.evaluator

        def negated(s: float) -> tuple[np.ndarray, float]:
            state, speed = evaluator(s)
            return state, -speed

        return replace(self, family=self.family.opposite, speeds=-self.speeds, evaluator=negated)


def rh_residual(sys: SystemSpec, u_minus: Any, u_plus: Any, sigma: float) -> float:
    """Sup-norm of A(u_plus) - A(u_minus) - sigma (u_plus - u_minus)."""
    u_minus, u_plus = as_state(u_minus), as_state(u_plus)
    return float(np.max(np.abs(sys.flux(u_plus) - sys.flux(u_minus) - sigma * (u_plus - u_minus))))


def entropy_production(sys: SystemSpec, u_minus: Any, u_plus: Any, sigma: float) -> float:
    """G(u_plus) - G(u_minus) - sigma (eta(u_plus) - eta(u_minus)); non-positive when entropic."""
    u_minus, u_plus = as_state(u_minus), as_state(u_plus)
    return float(
        sys.entropy_flux(u_plus) - sys.entropy_flux(u_minus)
        - sigma * (sys.entropy(u_plus) - sys.entropy(u_minus))
    )


def _sample(
    family: Family, base: np.ndarray, s_grid: Any, evaluator: CurveEvaluator, s_limit: float, method: str,
) -> ShockCurveSample:
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size == 0:
        raise RangeError("curve parameter grid must be a non-empty 1-D sequence")
    if np.any(s_grid < 0.0) or np.any(np.diff(s_grid) < 0.0):
        raise RangeError("curve parameters must be non-negative and ordered")
    points = [evaluator(float(s)) for s in s_grid]
    return ShockCurveSample(
        family=family,
        base=base,
        s_grid=s_grid,
        states=np.array([p[0] for p in points]),
        speeds=np.array([p[1] for p in points]),
        s_max=float(s_grid[-1]),
        s_limit=s_limit,
        method=method,
        evaluator=evaluator,
    )


# =============================================================================
# Explicit curves
# =============================================================================


def shock_curve_isentropic(sys: SystemSpec, base: Any, family: Family, s_grid: Any) -> ShockCurveSample:
    """Explicit isentropic Euler curve parameterised by the density jump s.

    The curve state has density rho + s and momentum (rho + s) u_S with
    u_S = u -/+ sqrt((P(rho+s) - P(rho)) s / (rho (rho+s))), which satisfies
    the mass equation exactly.
    """
    if sys.kind != "isentropic":
        raise DomainError(f"explicit isentropic curve requested for {sys.name}")
    family = Family(family)
    base = as_state(base)
    if not bool(sys.domain_interior(base)):
        raise DomainError(f"curve base {base} is not in the open domain")
    law: PressureLaw = sys.law
    rho, vel = base[0], base[1] / base[0]
    sign = family.sign
    s_limit = float(law.rho_max - rho)

    def evaluate(s: float) -> tuple[np.ndarray, float]:
        if s < 0.0:
            raise RangeError(f"curve parameter must be non-negative, got {s}")
        if s == 0.0:
            return base.copy(), float(vel + sign * np.sqrt(law.dp(rho)))
        if s > s_limit:
            raise DomainError(f"density {rho + s:.6g} leaves the pressure-law range")
        rho_s = rho + s
        jump = law.jump(rho, s)
        vel_s = vel + sign * np.sqrt(jump * s / (rho * rho_s))
        sigma = vel + sign * np.sqrt(rho_s / rho * jump / s)
        return np.array([rho_s, rho_s * vel_s]), float(sigma)

    return _sample(family, base, s_grid, evaluate, s_limit, "explicit")


def full_euler_pressure_ratio(gamma: float, density_ratio: Any) -> Any:
    """P_S/P across a shock with density ratio r: (beta r - 1)/(beta - r), beta = (gamma+1)/(gamma-1)."""
    beta = (gamma + 1.0) / (gamma - 1.0)
    return (beta * density_ratio - 1.0) / (beta - density_ratio)


def shock_curve_full_euler(sys: SystemSpec, base: Any, family: Family, s_grid: Any) -> ShockCurveSample:
    """Explicit full Euler curve parameterised by the density jump s.

    Raises:
        RangeError: For s beyond 0.99 of the density-ratio bound (beta - 1) rho.
    """
    if sys.kind != "full_euler":
        raise DomainError(f"explicit full Euler curve requested for {sys.name}")
    family = Family(family)
    base = as_state(base)
    if not bool(sys.domain_interior(base)):
        raise DomainError(f"curve base {base} is not in the open domain")
    gamma = float(sys.law)
    beta = (gamma + 1.0) / (gamma - 1.0)
    rho, vel, _, pressure = (float(x) for x in euler_primitive(base, gamma))
    sign = family.sign
    s_limit = 0.99 * (beta - 1.0) * rho

    def evaluate(s: float) -> tuple[np.ndarray, float]:
        if s < 0.0 or s > s_limit:
            raise RangeError(f"curve parameter {s} outside [0, {s_limit:.6g}]")
        rho_s = rho + s
        r = rho_s / rho
        # P_S - P = P (beta + 1)(r - 1)/(beta - r), with r - 1 = s/rho
        speed_gap = np.sqrt(rho_s * pressure * (beta + 1.0) / ((beta - r) * rho * rho))
        sigma = vel + sign * speed_gap
        if s == 0.0:
            return base.copy(), float(sigma)
        vel_s = vel + sign * speed_gap * s / rho_s
        p_s = pressure * full_euler_pressure_ratio(gamma, r)
        e_s = p_s / ((gamma - 1.0) * rho_s)
        state = np.array([rho_s, rho_s * vel_s, rho_s * (e_s + 0.5 * vel_s * vel_s)])
        return state, float(sigma)

    return _sample(family, base, s_grid, evaluate, s_limit, "explicit")


# =============================================================================
# Continuation
# =============================================================================


def _extreme_eigenpair(sys: SystemSpec, u: np.ndarray, family: Family, gap_tol: float) -> tuple[float, np.ndarray]:
    values, vectors = np.linalg.eig(sys.jacobian(u))
    scale = 1.0 + float(np.max(np.abs(values)))
    if np.max(np.abs(values.imag)) > 1e-10 * scale:
        raise EigenvalueCollision(f"flux Jacobian has complex eigenvalues at {u}")
    order = np.argsort(values.real)
    idx = order[0] if family is Family.ONE else order[-1]
    if len(order) > 1:
        neighbour = order[1] if family is Family.ONE else order[-2]
        gap = abs(values.real[idx] - values.real[neighbour])
        if gap < gap_tol:
            raise EigenvalueCollision(f"spectral gap {gap:.3g} below {gap_tol:g} at {u}")
    vector = vectors[:, idx].real
    return float(values.real[idx]), vector / np.linalg.norm(vector)


def shock_curve_continuation(
    sys: SystemSpec,
    base: Any,
    family: Family,
    step: float,
    n_steps: int,
    step_min: Optional[float] = None,
    newton_tol: float = 1e-10,
    max_newton: int = 25,
) -> ShockCurveSample:
    """Predictor-corrector continuation of the Rankine-Hugoniot locus.

    The curve parameter is the chord s = |S - U|. At fixed s the unknowns
    are the unit direction w and the speed sigma, solving
    (A(U + s w) - A(U))/s - sigma w = 0 and |w|^2 = 1 by Newton's method.
    The start direction is the extreme eigenvector of grad A(U), oriented
    so the extreme characteristic speed decreases (one family) or
    increases (n family). Continuation stops early at the domain boundary.

    Raises:
        ContinuationStall: Newton keeps failing below ``step_min``.
        EigenvalueCollision: The extreme eigenvalue loses simplicity.
    """
    family = Family(family)
    base = as_state(base)
    tol = sys.tolerances
    if not bool(sys.domain_interior(base)):
        raise DomainError(f"curve base {base} is not in the open domain")
    if n_steps < 0 or step <= 0.0:
        raise RangeError("continuation needs step > 0 and n_steps >= 0")
    step_min = step * 2.0**-12 if step_min is None else step_min

    lam0, w = _extreme_eigenpair(sys, base, family, tol.gap_tol)
    h_fd = 1e-6 * (1.0 + float(np.linalg.norm(base)))
    slope = (extreme_speed(sys, base + h_fd * w, family) - extreme_speed(sys, base - h_fd * w, family)) / (2.0 * h_fd)
    wanted = -1.0 if family is Family.ONE else 1.0
    if abs(slope) > 1e-9:
        if np.sign(slope) != wanted:
            w = -w
    elif w[np.argmax(np.abs(w))] < 0.0:
        w = -w

    flux_base = sys.flux(base)
    identity = np.eye(sys.m)

    def residual(s: float, w: np.ndarray, sigma: float) -> np.ndarray:
        rh = (sys.flux(base + s * w) - flux_base) / s - sigma * w
        return np.append(rh, 0.5 * (w @ w - 1.0))

    def correct(s: float, w: np.ndarray, sigma: float) -> Optional[tuple[np.ndarray, float]]:
        z = np.append(w, sigma)
        for _ in range(max_newton):
            w, sigma = z[:-1], z[-1]
            state = base + s * w
            if not np.all(np.isfinite(state)) or not bool(sys.domain_closure(state)):
                return None
            r = residual(s, w, sigma)
            if np.max(np.abs(r)) <= newton_tol:
                return w, float(sigma)
            jac = np.zeros((sys.m + 1, sys.m + 1))
            jac[:-1, :-1] = sys.jacobian(state) - sigma * identity
            jac[:-1, -1] = -w
            jac[-1, :-1] = w
            try:
                z = z - np.linalg.solve(jac, r)
            except np.linalg.LinAlgError:
                return None
        return None

    params, states, speeds = [0.0], [base.copy()], [lam0]
    history = [(w.copy(), lam0)]
    s_prev, h = 0.0, step
    while len(params) <= n_steps:
        s_try = s_prev + h
        w_pred, sigma_pred = history[-1]
        if len(history) > 1:
            ratio = h / (params[-1] - params[-2])
            w_pred = w_pred + ratio * (history[-1][0] - history[-2][0])
            sigma_pred = sigma_pred + ratio * (history[-1][1] - history[-2][1])

        corrected = correct(s_try, w_pred, sigma_pred)
        at_boundary = False
        if corrected is not None:
            state = base + s_try * corrected[0]
            at_boundary = not bool(sys.domain_interior(state))
        if corrected is None or at_boundary:
            h *= 0.5
            logger.debug("continuation step halved to %.3g at s=%.6g", h, s_prev)
            if h < step_min:
                if at_boundary:
                    logger.info("continuation reached the domain boundary at s=%.6g", s_prev)
                    break
                raise ContinuationStall(f"Newton corrector failed below step {step_min:.3g} at s={s_prev:.6g}")
            continue

        w_new, sigma_new = corrected
        state = base + s_try * w_new
        if sys.m > 1:
            _extreme_eigenpair(sys, state, family, tol.gap_tol)
        params.append(s_try)
        states.append(state)
        speeds.append(sigma_new)
        history.append((w_new, sigma_new))
        s_prev = s_try
        h = min(step, 2.0 * h)

    s_grid = np.array(params)
    states_arr = np.array(states)
    speeds_arr = np.array(speeds)
    if len(params) > 1:
        state_spline = CubicSpline(s_grid, states_arr, axis=0)
        speed_spline = CubicSpline(s_grid, speeds_arr)
    s_end = float(s_grid[-1])

    def evaluate(s: float) -> tuple[np.ndarray, float]:
        if s < 0.0 or s > s_end * (1.0 + 1e-12):
            raise RangeError(f"curve parameter {s} outside the continued range [0, {s_end:.6g}]")
        if s == 0.0 or len(params) == 1:
            return base.copy(), lam0
        return np.asarray(state_spline(s)), float(speed_spline(s))

    return ShockCurveSample(
        family=family,
        base=base,
        s_grid=s_grid,
        states=states_arr,
        speeds=speeds_arr,
        s_max=s_end,
        s_limit=s_end,
        method="continuation",
        evaluator=evaluate,
    )


def build_curve(sys: SystemSpec, base: Any, family: Family, s_grid: Any) -> ShockCurveSample:
    """Explicit curve when the system has one, continuation otherwise.

    For continuation the grid spacing sets the step and the grid length the
    number of steps; the returned samples sit on the continuation points.
    """
    family = Family(family)
    if sys.is_mirrored:
        return build_curve(sys.parent, base, family.opposite, s_grid).mirrored()
    if sys.kind == "isentropic":
        return shock_curve_isentropic(sys, base, family, s_grid)
    if sys.kind == "full_euler":
        return shock_curve_full_euler(sys, base, family, s_grid)
    s_grid = np.asarray(s_grid, dtype=float)
    n_steps = max(len(s_grid) - 1, 0)
    step = float(s_grid[-1]) / n_steps if n_steps else 1.0
    return shock_curve_continuation(sys, base, family, step, n_steps)


def terminal_parameter(sys: SystemSpec, base: Any, family: Family, n_scan: int = 200) -> float:
    """s_U: supremum of s keeping S_U(s) in the open domain (scan plus bisection)."""
    family = Family(family)
    base = as_state(base)
    root = sys.parent or sys
    if root.kind in ("isentropic", "full_euler"):
        start_curve = build_curve(sys, base, family, [0.0])

        def inside(s: float) -> bool:
            try:
                return bool(sys.domain_interior(start_curve.state_at(s)))
            except (DomainError, RangeError):
                return False

        cap = start_curve.s_limit
        if not np.isfinite(cap):
            cap = 1.0
            while inside(cap) and cap < 1e6:
                cap *= 2.0

        grid = np.linspace(0.0, cap, n_scan + 1)
        previous = 0.0
        for s in grid[1:]:
            if not inside(float(s)):
                lo, hi = previous, float(s)
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    lo, hi = (mid, hi) if inside(mid) else (lo, mid)
                return lo
            previous = float(s)
        return float(cap)

    curve = shock_curve_continuation(sys, base, family, step=0.05, n_steps=n_scan)
    return curve.s_max


def s_max_lipschitz_estimate(sys: SystemSpec, bases: Any, family: Family) -> float:
    """Largest |s_U - s_V| / |U - V| over all pairs of sampled bases (reported, not asserted)."""
    bases = np.atleast_2d(as_state(bases))
    terminal = np.array([terminal_parameter(sys, b, family) for b in bases])
    estimate = 0.0
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            dist = float(np.linalg.norm(bases[i] - bases[j]))
            if dist > 0.0:
                estimate = max(estimate, abs(terminal[i] - terminal[j]) / dist)
    return estimate


# =============================================================================
# Classification
# =============================================================================


@dataclass(frozen=True)
class AdmissibilityReport:
    """Admissibility data of a single discontinuity (u_minus, u_plus).

    Classification truth table: positive entropy production is
    ``inadmissible``; a speed matching a characteristic speed on both sides
    is a ``contact``; otherwise the one-family (n-family) Lax inequalities
    give ``one_shock`` (``n_shock``) and anything else is ``intermediate``.
    """

    sigma: float
    rh_residual: float
    entropy_production: float
    lax_one: bool
    lax_n: bool
    liu_monotone: bool
    strengthening: bool
    classification: Classification
    family: Optional[Family] = None


def _on_explicit_curve(
    sys: SystemSpec, base: np.ndarray, other: np.ndarray, family: Family,
) -> Optional[ShockCurveSample]:
    root = sys.parent or sys
    if root.kind not in ("isentropic", "full_euler"):
        return None
    s = float(other[0] - base[0])
    if s <= 0.0:
        return None
    try:
        grid = np.linspace(0.0, s, 65)
        curve = build_curve(sys, base, family, grid)
    except (DomainError, RangeError):
        return None
    scale = 1.0 + float(np.max(np.abs(other)))
    if np.max(np.abs(curve.states[-1] - other)) > 1e-8 * scale:
        return None
    return curve


def classify_discontinuity(sys: SystemSpec, u_minus: Any, u_plus: Any) -> AdmissibilityReport:
    """Least-squares speed, RH residual, entropy production and Lax/Liu data of a jump.

    Raises:
        NotADiscontinuity: For a degenerate jump or when the least-squares RH
            residual exceeds tol_rh relative to |u_plus - u_minus|.
    """
    u_minus, u_plus = as_state(u_minus), as_state(u_plus)
    tol = sys.tolerances
    jump = u_plus - u_minus
    jump_norm = float(np.max(np.abs(jump)))
    if jump_norm <= 1e-12 * (1.0 + float(np.max(np.abs(u_minus)))):
        raise NotADiscontinuity(f"degenerate jump |u_plus - u_minus| = {jump_norm:.3g}")

    flux_jump = sys.flux(u_plus) - sys.flux(u_minus)
    sigma = float(jump @ flux_jump / (jump @ jump))
    residual = float(np.max(np.abs(flux_jump - sigma * jump))) / jump_norm
    if residual > tol.tol_rh * (1.0 + abs(sigma)):
        raise NotADiscontinuity(f"Rankine-Hugoniot residual {residual:.3g} (relative) for speed {sigma:.6g}")

    production = entropy_production(sys, u_minus, u_plus, sigma)
    slack = tol.tol_mono * (1.0 + abs(sigma))
    lax_one = bool(sys.lambda_minus(u_minus) >= sigma - slack and sigma + slack >= sys.lambda_minus(u_plus))
    lax_n = bool(sys.lambda_plus(u_minus) >= sigma - slack and sigma + slack >= sys.lambda_plus(u_plus))

    contact = False
    if sys.m > 1:
        eig_minus = np.linalg.eigvals(sys.jacobian(u_minus)).real
        eig_plus = np.linalg.eigvals(sys.jacobian(u_plus)).real
        contact_tol = 1e-6 * (1.0 + abs(sigma))
        contact = bool(
            np.min(np.abs(eig_minus - sigma)) <= contact_tol and np.min(np.abs(eig_plus - sigma)) <= contact_tol
        )

    if production > tol.tol_sign * (1.0 + abs(sigma)) * (1.0 + jump_norm):
        classification = Classification.INADMISSIBLE
    elif contact:
        classification = Classification.CONTACT
    elif lax_one:
        classification = Classification.ONE_SHOCK
    elif lax_n:
        classification = Classification.N_SHOCK
    else:
        classification = Classification.INTERMEDIATE

    family = {Classification.ONE_SHOCK: Family.ONE, Classification.N_SHOCK: Family.N}.get(classification)
    liu = lax_one or lax_n
    strengthening = production <= 0.0

    if family is not None:
        base, other = (u_minus, u_plus) if family is Family.ONE else (u_plus, u_minus)
        curve = _on_explicit_curve(sys, base, other, family)
        if curve is not None:
            final = curve.speeds[-1]
            if family is Family.ONE:
                liu = bool(np.all(curve.speeds >= final - slack))
            else:
                liu = bool(np.all(curve.speeds <= final + slack))
            growth = np.array([relative_entropy(sys, base, state) for state in curve.states[1:]])
            strengthening = bool(np.all(np.diff(growth) >= -tol.tol_mono))

    return AdmissibilityReport(
        sigma=sigma,
        rh_residual=residual,
        entropy_production=production,
        lax_one=lax_one,
        lax_n=lax_n,
        liu_monotone=liu,
        strengthening=strengthening,
        classification=classification,
        family=family,
    )


# =============================================================================
# Hypothesis checks
# =============================================================================


@dataclass
class HypothesisReport:
    """Outcome of the curve and cross-family admissibility checks (or their n-family duals)."""

    family: Family
    origin_speed_error: float
    speed_monotone: bool
    extreme_sigma_prime: float
    liu_failure_intervals: list[tuple[float, float]]
    contact_branch: bool
    strengthening: Optional[bool]
    min_strengthening_rate: Optional[float]
    max_rh_residual: float
    rh_ok: bool
    slow_downstream_ok: Optional[bool] = None
    fast_jump_ok: Optional[bool] = None
    n_cross_pairs: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _runs(mask: np.ndarray, grid: np.ndarray) -> list[tuple[float, float]]:
    intervals = []
    start = None
    for i, flagged in enumerate(mask):
        if flagged and start is None:
            start = i
        if not flagged and start is not None:
            intervals.append((float(grid[start]), float(grid[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(grid[start]), float(grid[-1])))
    return intervals


def strengthening_rate(sys: SystemSpec, curve: ShockCurveSample, s: float, h: float = 1e-5) -> float:
    """d/ds eta(U|S(s)) = S'(s)^T D2eta(S(s)) (S(s) - U), S' by finite differences."""
    hi = curve.s_limit
    h = min(h, 0.25 * hi) if hi > 0 else h
    state = curve.state_at(s)
    if s - h < 0.0:
        tangent = (-3.0 * state + 4.0 * curve.state_at(s + h) - curve.state_at(s + 2.0 * h)) / (2.0 * h)
    elif s + h > hi:
        tangent = (3.0 * state - 4.0 * curve.state_at(s - h) + curve.state_at(s - 2.0 * h)) / (2.0 * h)
    else:
        tangent = (curve.state_at(s + h) - curve.state_at(s - h)) / (2.0 * h)
    return float(tangent @ sys.hessian(state) @ (state - curve.base))


def _cross_family_pairs(sys: SystemSpec, base: np.ndarray, radius: float, n_s: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Entropic discontinuities of the other extreme family with an endpoint near base."""
    pairs = []
    root = sys.parent or sys
    offsets = [np.zeros(sys.m)]
    for k in range(sys.m):
        for sign in (-1.0, 1.0):
            e = np.zeros(sys.m)
            e[k] = sign * 0.5 * radius
            offsets.append(e)
    for offset in offsets:
        v = base + offset
        if not bool(sys.domain_interior(v)):
            continue
        try:
            curve = build_curve(sys, v, Family.N, np.linspace(0.0, 2.0 * radius, n_s + 1)[1:])
        except (DomainError, RangeError, ContinuationStall, EigenvalueCollision):
            continue
        for state in curve.states:
            pairs.append((state, v))

        if root.kind == "full_euler":
            gamma = float(root.law)
            rho, vel, e, p = (float(x) for x in euler_primitive(v, gamma))
            for ratio in np.linspace(0.7, 1.3, 5):
                if abs(ratio - 1.0) < 1e-12:
                    continue
                rho_c = rho * ratio
                e_c = p / ((gamma - 1.0) * rho_c)
                other = from_primitive(sys, np.array([rho_c, vel, e_c]))
                pairs.append((v, other))
                pairs.append((other, v))
    return pairs


def cross_family_checks(
    sys: SystemSpec, base: Any, family: Family, radius: float = 0.2, n_s: int = 6,
) -> tuple[bool, bool, int]:
    """Cross-family admissibility over sampled discontinuities near base.

    Slow downstream: entropic (U, V) with V near base has sigma >= lambda_minus(V).
    Fast jump: entropic (U, V) with U near base and sigma < lambda_minus(U) is a one-shock.
    The n-family duals are the same checks on the mirrored system.
    """
    family = Family(family)
    base = as_state(base)
    if family is Family.N:
        return cross_family_checks(sys.mirrored(), base, Family.ONE, radius, n_s)

    tol = sys.tolerances
    slow_downstream_ok = fast_jump_ok = True
    n_pairs = 0
    for u_minus, u_plus in _cross_family_pairs(sys, base, radius, n_s):
        try:
            report = classify_discontinuity(sys, u_minus, u_plus)
        except NotADiscontinuity:
            continue
        if report.classification is Classification.INADMISSIBLE:
            continue
        n_pairs += 1
        slack = tol.tol_mono * (1.0 + abs(report.sigma))
        if np.linalg.norm(u_plus - base) <= radius and report.sigma < sys.lambda_minus(u_plus) - slack:
            slow_downstream_ok = False
        if (
            np.linalg.norm(u_minus - base) <= radius
            and report.sigma < sys.lambda_minus(u_minus) - slack
            and report.classification is not Classification.ONE_SHOCK
        ):
            fast_jump_ok = False
    return slow_downstream_ok, fast_jump_ok, n_pairs


def check_hypotheses(sys: SystemSpec, curve: ShockCurveSample, cross_family: Optional[bool] = None) -> HypothesisReport:
    """Check speed monotonicity and strengthening on the sample grid, plus the cross-family checks for Euler systems.

    Failed checks are recorded in the report, never raised.
    """
    tol = sys.tolerances
    family = curve.family
    failures: list[str] = []
    grid = curve.s_grid

    origin = float(extreme_speed(sys, curve.base, family))
    origin_error = abs(float(curve.speeds[0]) - origin)
    if origin_error > 1e-8 * (1.0 + abs(origin)):
        failures.append(f"sigma(0) differs from the extreme characteristic speed by {origin_error:.3g}")

    if grid.size > 1:
        sigma_prime = np.array([curve.sigma_prime(float(s), tol.sigma_fd_step) for s in grid])
    else:
        sigma_prime = np.zeros(1)
    if family is Family.ONE:
        violating = sigma_prime > tol.tol_mono
        extreme = float(np.max(sigma_prime))
    else:
        violating = sigma_prime < -tol.tol_mono
        extreme = float(np.min(sigma_prime))
    intervals = _runs(violating, grid)
    monotone = not np.any(violating)
    if not monotone:
        spans = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in intervals)
        failures.append(f"Liu monotonicity fails for s in {spans}")

    contact = bool(np.all(np.abs(sigma_prime) <= tol.tol_mono))
    strengthening = min_rate = None
    if not contact and grid.size > 1:
        rates = np.array([strengthening_rate(sys, curve, float(s), tol.sigma_fd_step) for s in grid])
        min_rate = float(np.min(rates))
        strengthening = bool(min_rate >= -tol.tol_mono)
        if not strengthening:
            failures.append(f"shock does not strengthen: min d/ds eta(U|S(s)) = {min_rate:.3g}")

    residuals = [
        rh_residual(sys, *curve.pair(state), float(speed)) for state, speed in zip(curve.states, curve.speeds)
    ]
    max_rh = float(np.max(residuals))
    flux_scale = 1.0 + float(np.max(np.abs(sys.flux(curve.states))))
    rh_ok = max_rh <= tol.tol_rh * flux_scale
    if not rh_ok:
        failures.append(f"Rankine-Hugoniot residual {max_rh:.3g} exceeds tolerance")

    report = HypothesisReport(
        family=family,
        origin_speed_error=origin_error,
        speed_monotone=monotone,
        extreme_sigma_prime=extreme,
        liu_failure_intervals=intervals,
        contact_branch=contact,
        strengthening=strengthening,
        min_strengthening_rate=min_rate,
        max_rh_residual=max_rh,
        rh_ok=rh_ok,
        failures=failures,
    )

    root = sys.parent or sys
    if cross_family is None:
        cross_family = root.kind in ("isentropic", "full_euler")
    if cross_family:
        report.slow_downstream_ok, report.fast_jump_ok, report.n_cross_pairs = cross_family_checks(sys, curve.base, family)
        if not report.slow_downstream_ok:
            failures.append("an entropic discontinuity violates sigma >= lambda_minus(V) near the base")
        if not report.fast_jump_ok:
            failures.append("an entropic discontinuity faster than lambda_minus is not a one-shock")
    return report


# =============================================================================
# Pressure-law convexity
# =============================================================================


@dataclass
class ConvexityProfile:
    """phi(s) = ((rho+s)/rho)(P(rho+s) - P(rho))/s and two evaluations of phi'(s)."""

    rho: float
    s_grid: np.ndarray
    phi: np.ndarray
    dphi_fd: np.ndarray
    dphi_integral: np.ndarray
    d2_rho_p: np.ndarray
    max_discrepancy: float


def pressure_convexity_profile(
    law: PressureLaw, rho: float, s_grid: Any, tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ConvexityProfile:
    """phi, phi' by differences and phi' = (1/(rho s^2)) int_rho^{rho+s} (q - rho)[qP]'' dq.

    Raises:
        QuadratureFailure: If the integral does not converge within the depth limit.
    """
    s_grid = np.asarray(s_grid, dtype=float)

    def phi(s: float) -> float:
        if s == 0.0:
            return float(law.dp(rho))
        return float((rho + s) / rho * law.jump(rho, s) / s)

    def dphi_integral(s: float) -> float:
        if s == 0.0:
            return float(law.d2_rho_p(rho)) / (2.0 * rho)
        value, _ = adaptive_simpson(
            lambda q: (q - rho) * float(law.d2_rho_p(q)), rho, rho + s,
            tolerances.quad_tol * rho * s * s, tolerances.quad_depth,
        )
        return value / (rho * s * s)

    s_hi = float(law.rho_max - rho)
    phis = np.array([phi(float(s)) for s in s_grid])
    fd = np.array([parameter_derivative(phi, float(s), 0.0, s_hi, tolerances.sigma_fd_step) for s in s_grid])
    integral = np.array([dphi_integral(float(s)) for s in s_grid])
    return ConvexityProfile(
        rho=float(rho),
        s_grid=s_grid,
        phi=phis,
        dphi_fd=fd,
        dphi_integral=integral,
        d2_rho_p=np.asarray(law.d2_rho_p(rho + s_grid), dtype=float),
        max_discrepancy=float(np.max(np.abs(fd - integral))),
    )


def strengthening_closed_form_derivative(law: PressureLaw, rho: float, s: float) -> float:
    """d/ds eta(U|S_U(s)) for isentropic Euler:
    (s(rho+s)P'(rho+s) + rho(P(rho+s) - P(rho))) / (2(rho+s)^2) + s S''(rho+s).
    """
    rho_s = rho + s
    bracket = s * rho_s * law.dp(rho_s) + rho * law.jump(rho, s)
    return float(bracket / (2.0 * rho_s * rho_s) + s * law.d2s(rho_s))


def literal_display_residual(sys: SystemSpec, base: Any, s: float, family: Family = Family.ONE) -> float:
    """Relative RH residual of the reading whose momentum is rho u +/- rho sqrt(...).

    That reading violates the mass equation for s > 0; the curve built by
    ``shock_curve_isentropic`` uses (rho + s) u_S instead.
    """
    family = Family(family)
    base = as_state(base)
    law: PressureLaw = sys.law
    rho, vel = base[0], base[1] / base[0]
    if s <= 0.0:
        return 0.0
    gap = np.sqrt(law.jump(rho, s) * s / (rho * (rho + s)))
    state = np.array([rho + s, rho * vel + family.sign * rho * gap])
    sigma = vel + family.sign * np.sqrt((rho + s) / rho * law.jump(rho, s) / s)
    u_minus, u_plus = (base, state) if family is Family.ONE else (state, base)
    return rh_residual(sys, u_minus, u_plus, float(sigma)) / float(np.max(np.abs(state - base)))


# =============================================================================
# Structural identities
# =============================================================================


@dataclass(frozen=True)
class IdentityCheck:
    """|LHS - RHS| of an identity along a curve, plus its sign check."""

    lhs: float
    rhs: float
    residual: float
    sign_ok: bool
    quad_error: float = 0.0


def _as_one_family(sys: SystemSpec, curve: ShockCurveSample) -> tuple[SystemSpec, ShockCurveSample]:
    if curve.family is Family.ONE:
        return sys, curve
    return sys.mirrored(), curve.mirrored()


def _curve_integral(sys: SystemSpec, curve: ShockCurveSample, integrand: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    tol = sys.tolerances
    h = tol.sigma_fd_step
    return adaptive_simpson(
        lambda tau: curve.sigma_prime(tau, h) * integrand(tau), a, b, tol.quad_tol, tol.quad_depth,
    )


def verify_lemma_decreasing(sys: SystemSpec, curve: ShockCurveSample, v: Any, s: float) -> IdentityCheck:
    """F(U+,V) - sigma eta(U+|V) = F(U-,V) - sigma eta(U-|V) + int_0^s sigma'(t) eta(U-|S(t)) dt.

    U- is the curve base and U+ = S(s); n-family curves are checked on the
    mirrored system. ``sign_ok`` is the inequality form (left side not above
    the first two right-hand terms).
    """
    sys, curve = _as_one_family(sys, curve)
    v = as_state(v)
    base = curve.base
    state, sigma = curve.evaluator(s)
    lhs = relative_flux(sys, state, v) - sigma * relative_entropy(sys, state, v)
    head = relative_flux(sys, base, v) - sigma * relative_entropy(sys, base, v)
    integral, err = _curve_integral(sys, curve, lambda t: relative_entropy(sys, base, curve.state_at(t)), 0.0, s)
    rhs = head + integral
    return IdentityCheck(
        lhs=float(lhs),
        rhs=float(rhs),
        residual=abs(float(lhs - rhs)),
        sign_ok=bool(lhs <= head + sys.tolerances.tol_sign * (1.0 + abs(head))),
        quad_error=err,
    )


def verify_cornerstone(sys: SystemSpec, curve: ShockCurveSample, s: float, s0: float) -> IdentityCheck:
    """F(S(s), S(s0)) - sigma(s) eta(S(s)|S(s0)) = int_{s0}^{s} sigma'(t)(eta(U|S(t)) - eta(U|S(s0))) dt <= 0."""
    sys, curve = _as_one_family(sys, curve)
    base = curve.base
    state, sigma = curve.evaluator(s)
    ref = curve.state_at(s0)
    lhs = relative_flux(sys, state, ref) - sigma * relative_entropy(sys, state, ref)
    eta_ref = relative_entropy(sys, base, ref)
    rhs, err = _curve_integral(
        sys, curve, lambda t: relative_entropy(sys, base, curve.state_at(t)) - eta_ref, s0, s,
    )
    return IdentityCheck(
        lhs=float(lhs),
        rhs=float(rhs),
        residual=abs(float(lhs - rhs)),
        sign_ok=bool(lhs <= sys.tolerances.tol_sign),
        quad_error=err,
    )


def entropy_loss_formula_residual(sys: SystemSpec, curve: ShockCurveSample, s: float) -> IdentityCheck:
    """G(S(s)) - G(U) = sigma(s)(eta(S(s)) - eta(U)) + int_0^s sigma'(t) eta(U|S(t)) dt."""
    sys, curve = _as_one_family(sys, curve)
    base = curve.base
    state, sigma = curve.evaluator(s)
    lhs = float(sys.entropy_flux(state) - sys.entropy_flux(base))
    integral, err = _curve_integral(sys, curve, lambda t: relative_entropy(sys, base, curve.state_at(t)), 0.0, s)
    rhs = float(sigma * (sys.entropy(state) - sys.entropy(base))) + integral
    return IdentityCheck(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs), sign_ok=bool(integral <= sys.tolerances.tol_sign), quad_error=err)


def origin_slope_relation(sys: SystemSpec, curve: ShockCurveSample, h: Optional[float] = None) -> tuple[float, float]:
    """(sigma'(0), 1/2 d/ds lambda(S(s)) at 0), both by one-sided differences."""
    h = h or sys.tolerances.sigma_fd_step * 10.0
    h = min(h, curve.s_limit / 4.0)
    family = curve.family
    sigma_prime = parameter_derivative(curve.speed_at, 0.0, 0.0, curve.s_limit, h)
    lam_prime = parameter_derivative(
        lambda s: float(extreme_speed(sys, curve.state_at(s), family)), 0.0, 0.0, curve.s_limit, h,
    )
    return sigma_prime, 0.5 * lam_prime


# =============================================================================
# Suite
# =============================================================================


@dataclass
class LemmaSuiteReport:
    """Every identity residual and sign check for one curve; JSON-serialisable via utils."""

    system: str
    family: Family
    base: list[float]
    s_max: float
    hypotheses: HypothesisReport
    cornerstone_max_residual: float
    cornerstone_max_lhs: float
    cornerstone_sign_ok: bool
    decreasing_max_residual: float
    decreasing_sign_ok: bool
    entropy_loss_max_residual: float
    origin_slope: tuple[float, float]
    strengthening_closed_form_error: Optional[float] = None
    convexity_min_d2_rho_p: Optional[float] = None
    convexity_fd_vs_integral: Optional[float] = None
    literal_display_residual: Optional[float] = None
    identity_tol: float = 1e-7
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def lemma_suite(
    sys: SystemSpec,
    base: Any,
    family: Family,
    s_max: float,
    n_grid: int = 9,
    n_random: int = 10,
    rng: Optional[np.random.Generator] = None,
    identity_tol: float = 1e-7,
) -> LemmaSuiteReport:
    """Build the curve from base and run every check on it."""
    family = Family(family)
    base = as_state(base)
    rng = rng or np.random.default_rng(0)
    grid = np.linspace(0.0, s_max, n_grid)
    curve = build_curve(sys, base, family, grid)
    grid = curve.s_grid
    hypotheses = check_hypotheses(sys, curve)
    failures = [f"hypotheses: {msg}" for msg in hypotheses.failures]

    corner = [verify_cornerstone(sys, curve, float(s), float(s0)) for s in grid for s0 in grid]
    corner_res = max(c.residual for c in corner)
    corner_lhs = max(c.lhs for c in corner)
    corner_ok = all(c.sign_ok for c in corner)
    if corner_res > identity_tol:
        failures.append(f"cornerstone identity residual {corner_res:.3g}")
    if not corner_ok:
        failures.append(f"cornerstone sign fails: max left side {corner_lhs:.3g}")

    vs = sample_interior(sys, 4 * n_random, rng)[:n_random]
    svals = rng.uniform(0.0, curve.s_max, size=len(vs))
    decreasing = [verify_lemma_decreasing(sys, curve, v, float(s)) for v, s in zip(vs, svals)]
    dec_res = max((d.residual for d in decreasing), default=0.0)
    dec_ok = all(d.sign_ok for d in decreasing)
    if dec_res > identity_tol:
        failures.append(f"entropy-loss identity residual {dec_res:.3g}")
    if not dec_ok:
        failures.append("entropy-loss inequality fails for some reference state")

    loss = max(entropy_loss_formula_residual(sys, curve, float(s)).residual for s in grid)
    if loss > identity_tol:
        failures.append(f"entropy-loss formula residual {loss:.3g}")

    report = LemmaSuiteReport(
        system=sys.name,
        family=family,
        base=base.tolist(),
        s_max=curve.s_max,
        hypotheses=hypotheses,
        cornerstone_max_residual=corner_res,
        cornerstone_max_lhs=corner_lhs,
        cornerstone_sign_ok=corner_ok,
        decreasing_max_residual=dec_res,
        decreasing_sign_ok=dec_ok,
        entropy_loss_max_residual=loss,
        origin_slope=origin_slope_relation(sys, curve),
        identity_tol=identity_tol,
        failures=failures,
    )

    if sys.kind == "isentropic":
        law: PressureLaw = sys.law
        rho = float(base[0])
        errors = [
            abs(strengthening_closed_form_derivative(law, rho, float(s)) - strengthening_rate(sys, curve, float(s)))
            for s in grid
        ]
        report.strengthening_closed_form_error = max(errors)
        profile = pressure_convexity_profile(law, rho, grid, sys.tolerances)
        report.convexity_min_d2_rho_p = float(np.min(profile.d2_rho_p))
        report.convexity_fd_vs_integral = profile.max_discrepancy
        report.literal_display_residual = literal_display_residual(sys, base, float(curve.s_max), family)
        if report.strengthening_closed_form_error > 1e-6:
            failures.append(f"strengthening closed form differs by {report.strengthening_closed_form_error:.3g}")

    for failure in failures:
        logger.warning("%s: %s", sys.name, failure)
    return report
