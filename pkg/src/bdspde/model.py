"""Coefficient fields and the Beddington-DeAngelis reaction terms."""

from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError, PreconditionError

COEFFICIENT_NAMES = ("a1", "a2", "b1", "b2", "c1", "c2", "m1", "m2", "m3")


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Strictly positive coefficient fields on a grid plus two diffusivities.

    Scalars broadcast to constant fields of length ``M``.
    """

    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    d1: float
    d2: float
    M: int

    def __post_init__(self):
        for name in COEFFICIENT_NAMES:
            value = np.asarray(getattr(self, name), dtype=float)
            if value.ndim == 0:
                value = np.full(self.M, float(value))
            if value.shape != (self.M,):
                raise PreconditionError(
                    f"coefficient {name} has shape {value.shape}, expected ({self.M},)")
            if not np.all(np.isfinite(value)) or np.any(value <= 0):
                raise PreconditionError(f"coefficient {name} must be positive")
            value.flags.writeable = False
            object.__setattr__(self, name, value)
        for name in ("d1", "d2"):
            value = float(getattr(self, name))
            if not value > 0 or not np.isfinite(value):
                raise PreconditionError(f"diffusivity {name} must be positive")
            object.__setattr__(self, name, value)

    @classmethod
    def constant(cls, M, d1=1.0, d2=1.0, **values):
        missing = set(COEFFICIENT_NAMES) - set(values)
        if missing:
            raise PreconditionError(f"missing coefficients: {sorted(missing)}")
        return cls(M=M, d1=d1, d2=d2, **values)

    def replace(self, **changes):
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return CoefficientSet(**kwargs)

    def is_spatially_constant(self):
        return all(np.ptp(getattr(self, n)) == 0 for n in COEFFICIENT_NAMES)


@dataclass(frozen=True, eq=False)
class StatePair:
    U: np.ndarray
    V: np.ndarray

    def __iter__(self):
        yield self.U
        yield self.V


def _check_nonnegative(U, V):
    for label, field in (("U", U), ("V", V)):
        bad = np.flatnonzero(~(field >= 0))
        if bad.size:
            i = int(bad[0])
            raise PreconditionError(
                f"state {label} must be nonnegative; {label}[{i}] = {field.flat[i]!r}")


def reaction(coeffs, U, V):
    """Pointwise ``(F1, F2)`` without validation; used on the hot path."""
    predation = U * V / (coeffs.m1 + coeffs.m2 * U + coeffs.m3 * V)
    F1 = U * (coeffs.a1 - coeffs.b1 * U) - coeffs.c1 * predation
    F2 = V * (-coeffs.a2 - coeffs.b2 * V) + coeffs.c2 * predation
    return F1, F2


def eval_reaction(coeffs, state):
    """Beddington-DeAngelis drift ``(F1, F2)`` at a nonnegative state."""
    U = np.asarray(state.U, dtype=float)
    V = np.asarray(state.V, dtype=float)
    _check_nonnegative(U, V)
    return StatePair(*reaction(coeffs, U, V))


def radial_clamp(U, V, radius):
    """Project each point ``(u(x), v(x))`` outside the ball of ``radius`` onto it.

    Points inside the closed ball are returned untouched, bit for bit.
    """
    if np.isinf(radius):
        return U, V
    norm = np.hypot(U, V)
    outside = norm > radius
    if not np.any(outside):
        return U, V
    scale = np.where(outside, radius / np.where(outside, norm, 1.0), 1.0)
    return np.where(outside, U * scale, U), np.where(outside, V * scale, V)


def eval_truncated_reaction(n, coeffs, state):
    """Reaction evaluated at the radially truncated state ``f_n``."""
    if not n > 0:
        raise DomainError(f"truncation radius must be positive, got {n}")
    U = np.asarray(state.U, dtype=float)
    V = np.asarray(state.V, dtype=float)
    _check_nonnegative(U, V)
    return StatePair(*reaction(coeffs, *radial_clamp(U, V, n)))
