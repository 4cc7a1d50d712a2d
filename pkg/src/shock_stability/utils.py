"""Numerical and output utilities: quadrature, finite differences, CSV/JSON writers."""

import csv
import dataclasses
import json
import math
from collections.abc import Callable, Iterable, Sequence
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from shock_stability.errors import QuadratureFailure


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 30,
) -> tuple[float, float]:
    """Adaptive Simpson's rule integration.

    Args:
        f: Scalar integrand.
        a: Lower bound.
        b: Upper bound (may be smaller than ``a``).
        tol: Absolute error tolerance.
        max_depth: Maximum recursion depth.

    Returns:
        Tuple of (integral_value, error_estimate).

    Raises:
        QuadratureFailure: If a subinterval reaches ``max_depth`` without
            meeting its share of the tolerance.
    """
    if a == b:
        return 0.0, 0.0

    if a > b:
        result, error = adaptive_simpson(f, b, a, tol, max_depth)
        return -result, error

    def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def _adaptive(
        a: float, b: float, fa: float, fm: float, fb: float,
        whole: float, depth: int, tol: float,
    ) -> tuple[float, float]:
        m = (a + b) / 2.0
        h = (b - a) / 4.0
        flm = f((a + m) / 2.0)
        frm = f((m + b) / 2.0)

        left = _simpson(fa, flm, fm, h)
        right = _simpson(fm, frm, fb, h)
        error_estimate = (left + right - whole) / 15.0

        if abs(error_estimate) <= tol:
            return left + right + error_estimate, abs(error_estimate)
        if depth >= max_depth:
            raise QuadratureFailure(
                f"adaptive Simpson depth limit {max_depth} reached on [{a:.6g}, {b:.6g}] "
                f"(error estimate {abs(error_estimate):.3g} > {tol:.3g})"
            )

        l_val, l_err = _adaptive(a, m, fa, flm, fm, left, depth + 1, tol / 2.0)
        r_val, r_err = _adaptive(m, b, fm, frm, fb, right, depth + 1, tol / 2.0)
        return l_val + r_val, l_err + r_err

    fa = f(a)
    fb = f(b)
    fm = f((a + b) / 2.0)
    whole = _simpson(fa, fm, fb, (b - a) / 2.0)
    return _adaptive(a, b, fa, fm, fb, whole, 0, tol)


def fd_steps(u: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Per-component central-difference steps: max(rel_step, rel_step*|u_k|)."""
    return np.maximum(rel_step, rel_step * np.abs(u))


def fd_gradient(f: Callable[[np.ndarray], float], u: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a state."""
    u = np.asarray(u, dtype=float)
    h = fd_steps(u, rel_step)
    grad = np.empty_like(u)
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = h[k]
        grad[k] = (f(u + e) - f(u - e)) / (2.0 * h[k])
    return grad


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], u: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, column k = d f / d u_k."""
    u = np.asarray(u, dtype=float)
    h = fd_steps(u, rel_step)
    columns = []
    for k in range(u.size):
        e = np.zeros_like(u)
        e[k] = h[k]
        columns.append((np.asarray(f(u + e)) - np.asarray(f(u - e))) / (2.0 * h[k]))
    return np.stack(columns, axis=-1)


def parameter_derivative(
    g: Callable[[float], float], s: float, lo: float, hi: float, h: float = 1e-5,
) -> float:
    """Second-order derivative of g at s, one-sided near the ends of [lo, hi]."""
    h = min(h, 0.25 * (hi - lo)) if hi > lo else h
    if s - h < lo:
        return (-3.0 * g(s) + 4.0 * g(s + h) - g(s + 2.0 * h)) / (2.0 * h)
    if s + h > hi:
        return (3.0 * g(s) - 4.0 * g(s - h) + g(s - 2.0 * h)) / (2.0 * h)
    return (g(s + h) - g(s - h)) / (2.0 * h)


def format_float(x: float) -> str:
    """Format a float with 17 significant digits (exact round trip)."""
    return f"{x:.17g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows to CSV, formatting floats with 17 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [format_float(v) if isinstance(v, (float, np.floating)) else v for v in row]
            )
    return path


def read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    """Read a numeric CSV written by write_csv into named float columns."""
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    table = np.asarray(data, dtype=float).reshape(-1, len(header))
    return {name: table[:, i] for i, name in enumerate(header)}


def to_jsonable(obj: Any) -> Any:
    """Convert dataclasses, enums and numpy values into JSON-compatible types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON has no inf/nan literals
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def write_json(path: Path, payload: Any) -> Path:
    """Write a JSON report; floats use Python's shortest round-trip repr."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True), encoding="utf-8")
    return path
