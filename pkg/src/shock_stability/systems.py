"""Concrete systems: isentropic Euler, full polytropic Euler and scalar laws.

All state functions take conserved variables with the component axis last:
``(rho, m)`` for isentropic Euler, ``(rho, m, E)`` for full Euler and ``(u,)``
for scalar laws.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.integrate
from scipy.interpolate import CubicSpline, PchipInterpolator

from shock_stability.config import DEFAULT_TOLERANCES, LabConfig, Tolerances, load_lab_config
from shock_stability.core import SystemSpec
from shock_stability.errors import ConfigError, DomainError

logger = logging.getLogger("shocklab.systems")

# Internal energy floor of the full Euler entropy
E_FLOOR = 1e-12


# =============================================================================
# Pressure laws
# =============================================================================


class PressureLaw:
    """Barotropic pressure law P(rho) with the entropy density it induces.

    Subclasses provide P, P', [rho P]'' and the entropy density S with
    S'' = P'/rho. ``jump(rho, s)`` returns P(rho + s) - P(rho) without
    cancellation.
    """

    name = "pressure law"
    rho_min = 0.0
    rho_max = np.inf

    def p(self, rho):
        raise NotImplementedError

    def dp(self, rho):
        raise NotImplementedError

    def d2_rho_p(self, rho):
        """Second derivative of rho -> rho P(rho)."""
        raise NotImplementedError

    def s(self, rho):
        raise NotImplementedError

    def ds(self, rho):
        raise NotImplementedError

    def d2s(self, rho):
        return self.dp(rho) / rho

    def jump(self, rho, s):
        return self.p(rho + s) - self.p(rho)

    def in_range(self, rho) -> np.ndarray:
        return (rho >= self.rho_min) & (rho <= self.rho_max)


class PowerLaw(PressureLaw):
    """P = kappa rho^gamma, S = kappa rho^gamma / (gamma - 1)."""

    def __init__(self, gamma: float, kappa: float = 1.0):
        if gamma <= 1.0:
            raise ConfigError(f"power-law pressure needs gamma > 1, got {gamma}")
        if kappa <= 0.0:
            raise ConfigError(f"power-law pressure needs kappa > 0, got {kappa}")
        self.gamma = float(gamma)
        self.kappa = float(kappa)
        self.name = f"power law kappa={kappa:g} gamma={gamma:g}"

    def p(self, rho):
        return self.kappa * np.power(rho, self.gamma)

    def dp(self, rho):
        return self.kappa * self.gamma * np.power(rho, self.gamma - 1.0)

    def d2_rho_p(self, rho):
        g = self.gamma
        return self.kappa * g * (g + 1.0) * np.power(rho, g - 1.0)

    def s(self, rho):
        return self.kappa * np.power(rho, self.gamma) / (self.gamma - 1.0)

    def ds(self, rho):
        return self.kappa * self.gamma * np.power(rho, self.gamma - 1.0) / (self.gamma - 1.0)

    def d2s(self, rho):
        return self.kappa * self.gamma * np.power(rho, self.gamma - 2.0)

    def jump(self, rho, s):
        return self.kappa * np.power(rho, self.gamma) * np.expm1(self.gamma * np.log1p(s / rho))


class CubicLaw(PressureLaw):
    """P = a rho + b rho^2 + c rho^3.

    S = a (rho ln rho - rho) + b rho^2 + c rho^3 / 2 so that S'' = P'/rho.
    """

    def __init__(self, a: float, b: float, c: float, name: Optional[str] = None):
        self.a, self.b, self.c = float(a), float(b), float(c)
        self.name = name or f"cubic law {a:g} rho + {b:g} rho^2 + {c:g} rho^3"

    def p(self, rho):
        return rho * (self.a + rho * (self.b + rho * self.c))

    def dp(self, rho):
        return self.a + rho * (2.0 * self.b + 3.0 * self.c * rho)

    def d2_rho_p(self, rho):
        return 2.0 * self.a + rho * (6.0 * self.b + 12.0 * self.c * rho)

    def s(self, rho):
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_part = np.where(rho > 0.0, rho * np.log(np.where(rho > 0.0, rho, 1.0)) - rho, 0.0)
        return self.a * log_part + self.b * rho**2 + 0.5 * self.c * rho**3

    def ds(self, rho):
        rho = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            return self.a * np.log(rho) + 2.0 * self.b * rho + 1.5 * self.c * rho**2

    def jump(self, rho, s):
        return s * (self.a + self.b * (2.0 * rho + s) + self.c * (3.0 * rho * rho + 3.0 * rho * s + s * s))


def nonconvex_cubic_law() -> CubicLaw:
    """P = rho - 1.7 rho^2 + rho^3: hyperbolic everywhere, [rho P]'' < 0 on about (0.307, 0.543)."""
    return CubicLaw(1.0, -1.7, 1.0, name="non-convex cubic rho - 1.7 rho^2 + rho^3")


class TabulatedLaw(PressureLaw):
    """Monotone cubic (PCHIP) interpolation of tabulated (rho, P) pairs.

    The entropy density is built from spline antiderivatives of P'/rho
    sampled on a fine grid; its additive affine part is arbitrary.
    """

    def __init__(self, table: list[tuple[float, float]], n_fine: int = 2049):
        data = np.asarray(table, dtype=float)
        if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 3:
            raise ConfigError("pressure_table needs at least three (rho, P) pairs")
        rho, pressure = data[:, 0], data[:, 1]
        if rho[0] <= 0.0:
            raise ConfigError("pressure_table densities must be positive")
        if np.any(np.diff(rho) <= 0.0) or np.any(np.diff(pressure) <= 0.0):
            raise ConfigError("pressure_table must be strictly increasing in rho and P")

        self.rho_min = float(rho[0])
        self.rho_max = float(rho[-1])
        self.name = f"tabulated law on [{self.rho_min:g}, {self.rho_max:g}]"
        self._p = PchipInterpolator(rho, pressure, extrapolate=False)
        self._dp = self._p.derivative(1)
        self._d2p = self._p.derivative(2)

        fine = np.linspace(self.rho_min, self.rho_max, n_fine)
        second = CubicSpline(fine, self._dp(fine) / fine)
        self._ds = second.antiderivative(1)
        self._s = second.antiderivative(2)

    def p(self, rho):
        return self._p(rho)

    def dp(self, rho):
        return self._dp(rho)

    def d2_rho_p(self, rho):
        return 2.0 * self._dp(rho) + rho * self._d2p(rho)

    def s(self, rho):
        return self._s(rho)

    def ds(self, rho):
        return self._ds(rho)


# =============================================================================
# State-domain box and converters
# =============================================================================


@dataclass(frozen=True)
class StateDomainBox:
    """Bound K on the primitive state norm plus the solver's vacuum threshold."""

    k_bound: float = 10.0
    rho_floor: float = 1e-10

    def __post_init__(self):
        if self.k_bound <= 0.0:
            raise ConfigError(f"K must be positive, got {self.k_bound}")
        if self.rho_floor < 0.0:
            raise ConfigError(f"rho_floor must be non-negative, got {self.rho_floor}")


def isentropic_from_primitive(rho, u) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    return np.stack([rho, rho * np.asarray(u, dtype=float)], axis=-1)


def euler_from_primitive(rho, u, e) -> np.ndarray:
    """Conserved (rho, rho u, rho E) from density, velocity and specific internal energy."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    e = np.asarray(e, dtype=float)
    return np.stack(np.broadcast_arrays(rho, rho * u, rho * (e + 0.5 * u * u)), axis=-1)


def _velocity(rho, mom):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rho > 0.0, mom / np.where(rho > 0.0, rho, 1.0), 0.0)


def euler_primitive(state, gamma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(rho, u, e, p) from full Euler conserved variables."""
    state = np.asarray(state, dtype=float)
    rho, mom, energy = state[..., 0], state[..., 1], state[..., 2]
    u = _velocity(rho, mom)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(rho > 0.0, energy / np.where(rho > 0.0, rho, 1.0) - 0.5 * u * u, 0.0)
    return rho, u, e, (gamma - 1.0) * rho * e


# =============================================================================
# Isentropic Euler
# =============================================================================


def make_isentropic(
    law: PressureLaw,
    box: StateDomainBox = StateDomainBox(),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SystemSpec:
    """Isentropic Euler with pressure law P and entropy eta = rho u^2/2 + S(rho).

    Raises:
        ConfigError: If P' is not positive on the sampled density range.
    """
    hi = min(law.rho_max, box.k_bound)
    lo = max(law.rho_min, 1e-6)
    sample = np.geomspace(lo, hi, 512)
    dp = law.dp(sample)
    if not np.all(np.isfinite(dp)) or np.any(dp <= 0.0):
        bad = sample[~(dp > 0.0)]
        raise ConfigError(f"{law.name}: P' must be positive, fails near rho={bad[0]:.6g}")

    K = box.k_bound

    def split(u):
        u = np.asarray(u, dtype=float)
        return u[..., 0], u[..., 1]

    def flux(u):
        rho, mom = split(u)
        vel = _velocity(rho, mom)
        return np.stack([mom, mom * vel + law.p(np.maximum(rho, 0.0))], axis=-1)

    def entropy(u):
        rho, mom = split(u)
        vel = _velocity(rho, mom)
        return 0.5 * mom * vel + law.s(np.maximum(rho, 0.0))

    def entropy_flux(u):
        rho, mom = split(u)
        vel = _velocity(rho, mom)
        with np.errstate(all="ignore"):
            return np.where(rho > 0.0, 0.5 * mom * vel * vel + mom * law.ds(np.maximum(rho, 0.0)), 0.0)

    def sound_speed(rho):
        with np.errstate(invalid="ignore"):
            return np.sqrt(np.maximum(law.dp(np.where(rho > 0.0, rho, 0.0)), 0.0))

    def lambda_minus(u):
        rho, mom = split(u)
        return _velocity(rho, mom) - sound_speed(rho)

    def lambda_plus(u):
        rho, mom = split(u)
        return _velocity(rho, mom) + sound_speed(rho)

    def domain_closure(u):
        rho, mom = split(u)
        vel = _velocity(rho, mom)
        finite = np.isfinite(rho) & np.isfinite(mom)
        vacuum_ok = (rho == 0.0) & (mom == 0.0) & (law.rho_min == 0.0)
        bulk = (rho > 0.0) & law.in_range(rho) & (np.hypot(rho, vel) <= K)
        return finite & (vacuum_ok | bulk)

    def domain_interior(u):
        rho, mom = split(u)
        vel = _velocity(rho, mom)
        return (
            np.isfinite(rho) & np.isfinite(mom)
            & (rho > law.rho_min) & (rho < law.rho_max)
            & (np.hypot(rho, vel) < K)
        )

    def singular_set(u):
        rho, _ = split(u)
        return rho <= 0.0

    def grad_eta(u):
        rho, mom = split(u)
        vel = mom / rho
        return np.array([-0.5 * vel * vel + law.ds(rho), vel])

    def hess_eta(u):
        rho, mom = split(u)
        vel = mom / rho
        return np.array([
            [vel * vel / rho + law.d2s(rho), -vel / rho],
            [-vel / rho, 1.0 / rho],
        ])

    def jac_flux(u):
        rho, mom = split(u)
        vel = mom / rho
        return np.array([
            [0.0, 1.0],
            [-vel * vel + law.dp(rho), 2.0 * vel],
        ])

    floor_value = max(box.rho_floor, law.rho_min)

    def floor(cells):
        rho = cells[..., 0]
        low = rho < floor_value
        n_events = int(np.count_nonzero(low))
        if n_events:
            cells = cells.copy()
            cells[low, 0] = floor_value
            cells[low, 1] = 0.0
        return cells, n_events

    return SystemSpec(
        name=f"isentropic Euler ({law.name})",
        kind="isentropic",
        m=2,
        components=("rho", "m"),
        flux=flux,
        entropy=entropy,
        entropy_flux=entropy_flux,
        lambda_minus=lambda_minus,
        lambda_plus=lambda_plus,
        domain_interior=domain_interior,
        domain_closure=domain_closure,
        singular_set=singular_set,
        grad_eta=grad_eta,
        hess_eta=hess_eta,
        jac_flux=jac_flux,
        floor=floor,
        law=law,
        tolerances=tolerances,
    )


# =============================================================================
# Full Euler
# =============================================================================


def make_full_euler(
    gamma: float,
    box: StateDomainBox = StateDomainBox(),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SystemSpec:
    """Full polytropic Euler with entropy eta = (gamma - 1) rho ln rho - rho ln e.

    Raises:
        ConfigError: If gamma <= 1.
    """
    if gamma <= 1.0:
        raise ConfigError(f"full Euler needs gamma > 1, got {gamma}")
    g = float(gamma)
    K = box.k_bound

    def prim(u):
        return euler_primitive(u, g)

    def flux(u):
        u = np.asarray(u, dtype=float)
        _, vel, _, p = prim(u)
        mom, energy = u[..., 1], u[..., 2]
        return np.stack([mom, mom * vel + p, (energy + p) * vel], axis=-1)

    def entropy(u):
        rho, _, e, _ = prim(u)
        if np.any((rho > 0.0) & ~(e >= E_FLOOR)):
            raise DomainError(f"full Euler entropy needs internal energy e >= {E_FLOOR:g}")
        with np.errstate(divide="ignore", invalid="ignore"):
            safe_rho = np.where(rho > 0.0, rho, 1.0)
            safe_e = np.where(rho > 0.0, e, 1.0)
            return np.where(rho > 0.0, (g - 1.0) * rho * np.log(safe_rho) - rho * np.log(safe_e), 0.0)

    def entropy_flux(u):
        rho, vel, _, _ = prim(u)
        return vel * entropy(u)

    def sound_speed(u):
        _, _, e, _ = prim(u)
        return np.sqrt(g * (g - 1.0) * np.maximum(e, 0.0))

    def lambda_minus(u):
        return prim(u)[1] - sound_speed(u)

    def lambda_plus(u):
        return prim(u)[1] + sound_speed(u)

    def domain_closure(u):
        u = np.asarray(u, dtype=float)
        rho, vel, e, _ = prim(u)
        finite = np.all(np.isfinite(u), axis=-1)
        vacuum_ok = (rho == 0.0) & (u[..., 1] == 0.0) & (u[..., 2] == 0.0)
        bulk = (rho > 0.0) & (e >= E_FLOOR) & (np.linalg.norm(np.stack([rho, vel, u[..., 2]], axis=-1), axis=-1) <= K)
        return finite & (vacuum_ok | bulk)

    def domain_interior(u):
        u = np.asarray(u, dtype=float)
        rho, vel, e, _ = prim(u)
        finite = np.all(np.isfinite(u), axis=-1)
        norm = np.linalg.norm(np.stack([rho, vel, u[..., 2]], axis=-1), axis=-1)
        return finite & (rho > 0.0) & (e > E_FLOOR) & (norm < K)

    def singular_set(u):
        return np.asarray(u, dtype=float)[..., 0] <= 0.0

    def grad_eta(u):
        rho, vel, e, _ = prim(u)
        return np.array([
            (g - 1.0) * (np.log(rho) + 1.0) - np.log(e) - vel * vel / (2.0 * e) + 1.0,
            vel / e,
            -1.0 / e,
        ])

    def hess_eta(u):
        rho, vel, e, _ = prim(u)
        v2 = vel * vel
        return np.array([
            [g * e * e + 0.25 * v2 * v2, -0.5 * v2 * vel, 0.5 * v2 - e],
            [-0.5 * v2 * vel, e + v2, -vel],
            [0.5 * v2 - e, -vel, 1.0],
        ]) / (rho * e * e)

    def jac_flux(u):
        u = np.asarray(u, dtype=float)
        rho, vel, _, p = prim(u)
        enthalpy = (u[2] + p) / rho
        return np.array([
            [0.0, 1.0, 0.0],
            [0.5 * (g - 3.0) * vel * vel, (3.0 - g) * vel, g - 1.0],
            [vel * (0.5 * (g - 1.0) * vel * vel - enthalpy), enthalpy - (g - 1.0) * vel * vel, g * vel],
        ])

    def floor(cells):
        rho, vel, e, _ = prim(cells)
        low_rho = rho < box.rho_floor
        low_e = ~low_rho & (e < E_FLOOR)
        n_events = int(np.count_nonzero(low_rho) + np.count_nonzero(low_e))
        if n_events:
            cells = cells.copy()
            cells[low_rho, 0] = box.rho_floor
            cells[low_rho, 1] = 0.0
            cells[low_rho, 2] = box.rho_floor * E_FLOOR
            cells[low_e, 2] = rho[low_e] * (E_FLOOR + 0.5 * vel[low_e] ** 2)
        return cells, n_events

    return SystemSpec(
        name=f"full Euler (gamma={g:g})",
        kind="full_euler",
        m=3,
        components=("rho", "m", "E"),
        flux=flux,
        entropy=entropy,
        entropy_flux=entropy_flux,
        lambda_minus=lambda_minus,
        lambda_plus=lambda_plus,
        domain_interior=domain_interior,
        domain_closure=domain_closure,
        singular_set=singular_set,
        grad_eta=grad_eta,
        hess_eta=hess_eta,
        jac_flux=jac_flux,
        floor=floor,
        law=g,
        tolerances=tolerances,
    )


def full_euler_relative_entropy_closed_form(gamma: float, u, v) -> float:
    """(gamma-1) h(rho_u|rho_v) - rho_u ln(e_u|e_v) + rho_u/(2 e_v) (vel_u - vel_v)^2, h(x) = x ln x."""
    rho_u, vel_u, e_u, _ = euler_primitive(u, gamma)
    rho_v, vel_v, e_v, _ = euler_primitive(v, gamma)
    h_rel = rho_u * np.log(rho_u) - rho_v * np.log(rho_v) - (np.log(rho_v) + 1.0) * (rho_u - rho_v)
    log_rel = np.log(e_u) - np.log(e_v) - (e_u - e_v) / e_v
    return float((gamma - 1.0) * h_rel - rho_u * log_rel + rho_u / (2.0 * e_v) * (vel_u - vel_v) ** 2)


# =============================================================================
# Scalar laws
# =============================================================================


@dataclass(frozen=True)
class ScalarFlux:
    """Scalar flux f with derivative f' and entropy flux G' = u f' for eta = u^2/2."""

    name: str
    f: Callable
    df: Callable
    entropy_flux: Optional[Callable] = None


BURGERS = ScalarFlux("burgers", lambda u: 0.5 * u * u, lambda u: u, lambda u: u**3 / 3.0)
CUBIC = ScalarFlux("cubic", lambda u: u**3 / 3.0, lambda u: u * u, lambda u: 0.25 * u**4)
SCALAR_FLUXES = {flux.name: flux for flux in (BURGERS, CUBIC)}


def make_scalar_convex(
    flux: ScalarFlux,
    k_bound: float = 10.0,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SystemSpec:
    """Scalar law u_t + f(u)_x = 0 with eta = u^2/2; both wave speeds equal f'(u)."""
    if flux.entropy_flux is not None:
        g_fn = flux.entropy_flux
    else:
        def _integral(x: float) -> float:
            return scipy.integrate.quad(lambda w: w * flux.df(w), 0.0, x)[0]

        g_fn = np.vectorize(_integral, otypes=[float])

    def scalar(u):
        return np.asarray(u, dtype=float)[..., 0]

    def speed(u):
        return flux.df(scalar(u))

    def closure(u):
        x = scalar(u)
        return np.isfinite(x) & (np.abs(x) <= k_bound)

    def interior(u):
        x = scalar(u)
        return np.isfinite(x) & (np.abs(x) < k_bound)

    return SystemSpec(
        name=f"scalar {flux.name}",
        kind="scalar",
        m=1,
        components=("u",),
        flux=lambda u: flux.f(np.asarray(u, dtype=float)),
        entropy=lambda u: 0.5 * scalar(u) ** 2,
        entropy_flux=lambda u: g_fn(scalar(u)),
        lambda_minus=speed,
        lambda_plus=speed,
        domain_interior=interior,
        domain_closure=closure,
        singular_set=lambda u: np.zeros(np.shape(scalar(u)), dtype=bool),
        grad_eta=lambda u: np.array([scalar(u)]),
        hess_eta=lambda u: np.array([[1.0]]),
        jac_flux=lambda u: np.array([[flux.df(scalar(u))]]),
        law=flux,
        tolerances=tolerances,
    )


# =============================================================================
# Sampling and config dispatch
# =============================================================================

DEFAULT_REGIONS = {
    "isentropic": ((0.2, 3.0), (-1.0, 1.0)),
    "full_euler": ((0.2, 3.0), (-1.0, 1.0), (0.5, 3.0)),
    "scalar": ((-2.0, 2.0),),
}


def from_primitive(sys: SystemSpec, primitive: np.ndarray) -> np.ndarray:
    """Conserved states from primitive columns (rho, u[, e]) or (u,)."""
    primitive = np.asarray(primitive, dtype=float)
    kind = (sys.parent or sys).kind
    if kind == "isentropic":
        return isentropic_from_primitive(primitive[..., 0], primitive[..., 1])
    if kind == "full_euler":
        return euler_from_primitive(primitive[..., 0], primitive[..., 1], primitive[..., 2])
    return primitive.copy()


def sample_interior(
    sys: SystemSpec,
    n: int,
    rng: np.random.Generator,
    region: Optional[tuple[tuple[float, float], ...]] = None,
) -> np.ndarray:
    """Uniform samples of primitive boxes mapped to interior conserved states."""
    kind = (sys.parent or sys).kind
    region = region or DEFAULT_REGIONS.get(kind)
    if region is None:
        raise ConfigError(f"no default sampling region for system kind '{kind}'")
    lows = np.array([lo for lo, _ in region])
    highs = np.array([hi for _, hi in region])
    states = from_primitive(sys, rng.uniform(lows, highs, size=(n, len(region))))
    return states[sys.domain_interior(states)]


def system_from_config(cfg: LabConfig, tolerances: Optional[Tolerances] = None) -> SystemSpec:
    """Build the system described by the top-level fields of a config document."""
    tolerances = tolerances or Tolerances.from_env()
    box = StateDomainBox(k_bound=cfg.K, rho_floor=cfg.rho_floor)

    if cfg.type == "isentropic":
        if cfg.pressure_law == "power":
            if cfg.gamma is None or cfg.gamma <= 1.0:
                raise ConfigError(f"field 'gamma': isentropic power law needs gamma > 1, got {cfg.gamma}")
            law: PressureLaw = PowerLaw(cfg.gamma, cfg.kappa)
        elif cfg.pressure_law == "nonconvex_cubic":
            law = nonconvex_cubic_law()
        else:
            if not cfg.pressure_table:
                raise ConfigError("field 'pressure_table': required when pressure_law is 'table'")
            law = TabulatedLaw(cfg.pressure_table)
        return make_isentropic(law, box, tolerances)

    if cfg.type == "full_euler":
        if cfg.gamma is None or cfg.gamma <= 1.0:
            raise ConfigError(f"field 'gamma': full Euler needs gamma > 1, got {cfg.gamma}")
        return make_full_euler(cfg.gamma, box, tolerances)

    return make_scalar_convex(SCALAR_FLUXES[cfg.flux], cfg.K, tolerances)


def load_system_config(path: str | Path) -> SystemSpec:
    """Parse a config document (file path or bundled preset name) into a SystemSpec."""
    cfg = load_lab_config(path)
    system = system_from_config(cfg)
    logger.debug("loaded system %s from %s", system.name, path)
    return system
