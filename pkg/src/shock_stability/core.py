"""System abstraction and relative-entropy calculus.

A ``SystemSpec`` bundles a 1-D conservation law ``U_t + A(U)_x = 0`` with a
strictly convex entropy pair ``(eta, G)``. Flux, entropy, entropy flux, wave
speeds and domain predicates act on arrays of shape ``(..., m)`` and
broadcast over leading axes. The derivative callbacks are optional and act on
a single state; when absent they fall back to central finite differences.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np
import scipy.linalg

from shock_stability.config import DEFAULT_TOLERANCES, Tolerances
from shock_stability.errors import DegenerateInput, DomainError
from shock_stability.utils import fd_gradient, fd_jacobian

logger = logging.getLogger("shocklab.core")

StateFn = Callable[[np.ndarray], np.ndarray]


def _negate(fn: StateFn) -> StateFn:
    def negated(u: np.ndarray) -> np.ndarray:
        return -fn(u)

    return negated


@dataclass(frozen=True)
class SystemSpec:
    """A conservation-law system with its designated convex entropy pair.

    Attributes:
        name: Human-readable label.
        kind: Family tag ("isentropic", "full_euler", "scalar", "generic");
            explicit shock-curve formulas are dispatched on it.
        m: Number of conserved components.
        components: Column names of the conserved variables.
        flux: A(U), vectorised.
        entropy: eta(U), vectorised.
        entropy_flux: G(U), vectorised.
        lambda_minus: Smallest characteristic speed, vectorised.
        lambda_plus: Largest characteristic speed, vectorised.
        domain_interior: Membership in the open state domain.
        domain_closure: Membership in the closed state domain.
        singular_set: Membership in the singular part of the boundary (vacuum).
        grad_eta: Optional closed-form entropy gradient (single state).
        hess_eta: Optional closed-form entropy Hessian (single state).
        jac_flux: Optional closed-form flux Jacobian (single state).
        floor: Optional vacuum floor ``cells -> (floored_cells, n_events)``.
        law: System-specific parameters (pressure law, gamma, scalar flux).
        parent: The unreversed system when this spec was built by ``mirrored``.
    """

    name: str
    kind: str
    m: int
    components: tuple[str, ...]
    flux: StateFn
    entropy: StateFn
    entropy_flux: StateFn
    lambda_minus: StateFn
    lambda_plus: StateFn
    domain_interior: StateFn
    domain_closure: StateFn
    singular_set: StateFn
    grad_eta: Optional[StateFn] = None
    hess_eta: Optional[StateFn] = None
    jac_flux: Optional[StateFn] = None
    floor: Optional[Callable[[np.ndarray], tuple[np.ndarray, int]]] = None
    law: Any = None
    parent: Optional["SystemSpec"] = field(default=None, compare=False, repr=False)
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, compare=False, repr=False)

    @property
    def is_mirrored(self) -> bool:
        return self.parent is not None

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Entropy gradient at a single state, closed form or finite differences."""
        u = np.asarray(u, dtype=float)
        if self.grad_eta is not None:
            return np.asarray(self.grad_eta(u), dtype=float)
        return fd_gradient(lambda w: float(self.entropy(w)), u, self.tolerances.fd_step)

    def hessian(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.hess_eta is not None:
            return np.asarray(self.hess_eta(u), dtype=float).reshape(self.m, self.m)
        hess = fd_jacobian(self.gradient, u, self.tolerances.fd_step)
        return 0.5 * (hess + hess.T)

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.jac_flux is not None:
            return np.asarray(self.jac_flux(u), dtype=float).reshape(self.m, self.m)
        return fd_jacobian(self.flux, u, self.tolerances.fd_step).reshape(self.m, self.m)

    def mirrored(self) -> "SystemSpec":
        """The reversed system U_t - A(U)_x = 0 seen in the coordinate -x.

        If U(t, x) solves this system then U(t, -x) solves the mirrored one.
        The entropy is unchanged, G and A change sign and the extreme wave
        speeds swap roles. Mirroring twice returns the original spec.
        """
        if self.parent is not None:
            return self.parent

        lam_minus, lam_plus = self.lambda_minus, self.lambda_plus
        jac = self.jac_flux
        return replace(
            self,
            name=f"{self.name} (mirrored)",
            flux=_negate(self.flux),
            entropy_flux=_negate(self.entropy_flux),
            lambda_minus=_negate(lam_plus),
            lambda_plus=_negate(lam_minus),
            jac_flux=_negate(jac) if jac is not None else None,
            parent=self,
        )

    def with_tolerances(self, tolerances: Tolerances) -> "SystemSpec":
        return replace(self, tolerances=tolerances)


@dataclass(frozen=True)
class ComparabilityEstimate:
    """Two-sided quadratic bounds c1|u-v|^2 <= eta(u|v) <= c2|u-v|^2."""

    c1: float
    c2: float
    sample_region: str
    n_pairs: int = 0
    hessian_min: float = float("nan")
    hessian_max: float = float("nan")


def as_state(u: Any) -> np.ndarray:
    return np.asarray(u, dtype=float)


def _require_reference(sys: SystemSpec, v: np.ndarray) -> None:
    if v.shape != (sys.m,):
        raise DomainError(f"reference state must have shape ({sys.m},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"reference state {v} is not finite")
    if bool(sys.singular_set(v)) or not bool(sys.domain_interior(v)):
        raise DomainError(f"entropy gradient undefined at {v}: state is not in the open domain")


def _require_closure(sys: SystemSpec, u: np.ndarray) -> None:
    if u.shape[-1] != sys.m:
        raise DomainError(f"state must have {sys.m} components, got shape {u.shape}")
    if not np.all(np.isfinite(u)) or not np.all(sys.domain_closure(u)):
        raise DomainError("state lies outside the closed state domain")


def relative_entropy(sys: SystemSpec, u: Any, v: Any) -> Any:
    """eta(u|v) = eta(u) - eta(v) - grad eta(v).(u - v).

    ``u`` may be a single state or an array of states ``(..., m)``; ``v`` is
    a single state in the open domain.
    """
    u = as_state(u)
    v = as_state(v)
    _require_reference(sys, v)
    _require_closure(sys, u)
    value = sys.entropy(u) - sys.entropy(v) - (u - v) @ sys.gradient(v)
    return float(value) if np.ndim(value) == 0 else value


def relative_flux(sys: SystemSpec, u: Any, v: Any) -> Any:
    """F(u, v) = G(u) - G(v) - grad eta(v).(A(u) - A(v))."""
    u = as_state(u)
    v = as_state(v)
    _require_reference(sys, v)
    _require_closure(sys, u)
    value = sys.entropy_flux(u) - sys.entropy_flux(v) - (sys.flux(u) - sys.flux(v)) @ sys.gradient(v)
    return float(value) if np.ndim(value) == 0 else value


def compatibility_residual(sys: SystemSpec, u: Any, step: Optional[float] = None) -> float:
    """Sup-norm of grad G(u) - grad eta(u)^T grad A(u), grad G by central differences."""
    u = as_state(u)
    _require_reference(sys, u)
    step = sys.tolerances.fd_step if step is None else step
    grad_g = fd_gradient(lambda w: float(sys.entropy_flux(w)), u, step)
    expected = sys.gradient(u) @ sys.jacobian(u)
    return float(np.max(np.abs(grad_g - expected)))


def hessian_eigenvalues(sys: SystemSpec, u: Any) -> np.ndarray:
    """Ascending eigenvalues of the entropy Hessian at u."""
    u = as_state(u)
    _require_reference(sys, u)
    return np.linalg.eigvalsh(sys.hessian(u))


def symmetrizer_residual(sys: SystemSpec, v: Any) -> float:
    """Asymmetry of D2eta(v) grad A(v); zero for a genuine entropy."""
    v = as_state(v)
    _require_reference(sys, v)
    sym = sys.hessian(v) @ sys.jacobian(v)
    return float(np.max(np.abs(sym - sym.T)))


def rayleigh_quotient_bounds(sys: SystemSpec, v: Any) -> tuple[float, float]:
    """Extreme generalized eigenvalues of (D2eta(v) grad A(v), D2eta(v)).

    These bound F(u, v)/eta(u|v) as u -> v and lie in
    [lambda_minus(v), lambda_plus(v)].
    """
    v = as_state(v)
    _require_reference(sys, v)
    hess = sys.hessian(v)
    sym = hess @ sys.jacobian(v)
    sym = 0.5 * (sym + sym.T)
    eigenvalues = scipy.linalg.eigh(sym, hess, eigvals_only=True)
    return float(eigenvalues[0]), float(eigenvalues[-1])


def comparability_constants(
    sys: SystemSpec,
    omega: Any,
    ambient: Any,
    hull_fractions: tuple[float, ...] = (0.25, 0.5, 0.75),
) -> ComparabilityEstimate:
    """Quadratic comparability constants between a compact set and an ambient set.

    Near pairs are controlled by the extreme Hessian eigenvalues (halved)
    sampled over omega and over convex combinations of omega/ambient points
    that stay in the open domain; far pairs contribute their exact ratio
    eta(u|v)/|u-v|^2. The returned constants bracket every sampled pair.

    Raises:
        DegenerateInput: If omega is empty or a sampled Hessian is not
            positive definite.
    """
    omega = np.atleast_2d(as_state(omega))
    ambient = np.atleast_2d(as_state(ambient))
    if omega.size == 0:
        raise DegenerateInput("comparability constants need a non-empty compact sample")

    hull_points = [v for v in omega]
    for v in omega:
        for u in ambient:
            for t in hull_fractions:
                w = (1.0 - t) * v + t * u
                if bool(sys.domain_interior(w)) and not bool(sys.singular_set(w)):
                    hull_points.append(w)

    eig_min, eig_max = np.inf, -np.inf
    for w in hull_points:
        eig = hessian_eigenvalues(sys, w)
        if eig[0] <= 0.0:
            raise DegenerateInput(f"entropy Hessian is not positive definite at {w} (eigenvalues {eig})")
        eig_min = min(eig_min, float(eig[0]))
        eig_max = max(eig_max, float(eig[-1]))

    c1, c2 = 0.5 * eig_min, 0.5 * eig_max
    n_pairs = 0
    for v in omega:
        dist2 = np.sum((ambient - v) ** 2, axis=-1)
        keep = dist2 > 1e-24
        if not np.any(keep):
            continue
        ratios = relative_entropy(sys, ambient[keep], v) / dist2[keep]
        ratios = np.atleast_1d(ratios)
        c1 = min(c1, float(np.min(ratios)))
        c2 = max(c2, float(np.max(ratios)))
        n_pairs += int(np.count_nonzero(keep))

    logger.debug("comparability constants c1=%.6g c2=%.6g over %d pairs", c1, c2, n_pairs)
    return ComparabilityEstimate(
        c1=c1,
        c2=c2,
        sample_region=f"{len(omega)} compact states, {len(ambient)} ambient states",
        n_pairs=n_pairs,
        hessian_min=eig_min,
        hessian_max=eig_max,
    )
