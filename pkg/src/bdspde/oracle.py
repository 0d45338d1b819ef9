"""Brute-force oracle for the spatially homogeneous deterministic system.

Classical RK4 in plain Python floats, refined by step halving until two
successive refinements agree to ``tol`` at every output time. It shares no
code with the SPDE stepper.
"""

from dataclasses import dataclass

from .errors import OracleError

MAX_HALVINGS = 20


@dataclass(frozen=True)
class PointState:
    u: float
    v: float


def _rhs(p, u, v):
    predation = u * v / (p["m1"] + p["m2"] * u + p["m3"] * v)
    du = u * (p["a1"] - p["b1"] * u) - p["c1"] * predation
    dv = v * (-p["a2"] - p["b2"] * v) + p["c2"] * predation
    return du, dv


def _rk4_path(p, u, v, T, n_out, substeps):
    h = T / (n_out * substeps)
    out = [(u, v)]
    for _ in range(n_out):
        for _ in range(substeps):
            k1u, k1v = _rhs(p, u, v)
            k2u, k2v = _rhs(p, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
            k3u, k3v = _rhs(p, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
            k4u, k4v = _rhs(p, u + h * k3u, v + h * k3v)
            u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
            v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        out.append((u, v))
    return out


def integrate_ode(coeffs, init, T, tol=1e-10, n_out=100, initial_substeps=1,
                 max_halvings=MAX_HALVINGS):
    """States at the ``n_out + 1`` equally spaced times ``0, T/n_out, ..., T``.

    ``coeffs`` maps the nine names ``a1 .. m3`` to positive scalars.
    """
    p = {k: float(coeffs[k]) for k in ("a1", "a2", "b1", "b2", "c1", "c2", "m1", "m2", "m3")}
    if any(not val > 0 for val in p.values()):
        raise OracleError("oracle coefficients must be positive")
    u0, v0 = float(init.u), float(init.v)
    if u0 < 0 or v0 < 0:
        raise OracleError("oracle initial state must be nonnegative")
    substeps = int(initial_substeps)
    previous = _rk4_path(p, u0, v0, T, n_out, substeps)
    for _ in range(max_halvings):
        substeps *= 2
        current = _rk4_path(p, u0, v0, T, n_out, substeps)
        gap = max(max(abs(a[0] - b[0]), abs(a[1] - b[1]))
                  for a, b in zip(previous, current))
        if gap < tol:
            return [PointState(u, v) for u, v in current]
        previous = current
    raise OracleError(f"RK4 did not reach tol={tol} within {max_halvings} halvings")
