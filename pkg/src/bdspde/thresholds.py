"""Norms, extinction/permanence thresholds and ensemble statistics.

Infima and suprema over the domain are taken over grid points.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, FitError, PreconditionError
from .noise import basis_bound, trace

EXTINCT_V = "ExtinctV"
PERMANENT_UV = "PermanentUV"
INDETERMINATE = "Indeterminate"

DELTA_MAX = 10.0
DELTA_TOL = 1e-10


def sup_norm(f):
    return float(np.max(f))


def inf_norm(f):
    return float(np.min(f))


def lp_norm(f, p):
    """``(integral of f^p)^(1/p)`` for a nonnegative field and ``p >= 1``."""
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("lp_norm is defined for nonnegative fields")
    return float(np.mean(f ** p) ** (1.0 / p))


def extinction_margin(coeffs):
    """``inf_x [a2 - c2/m2]``; positive margin implies predator extinction."""
    return inf_norm(coeffs.a2 - coeffs.c2 / coeffs.m2)


def compute_H0(coeffs, spec):
    C0 = basis_bound(spec)
    return inf_norm(coeffs.a1 - coeffs.c1 / coeffs.m3) - 1.5 * trace(spec, 1) * C0 ** 2


def _R0_parts(coeffs, spec, H0):
    """The quantities entering ``R0`` and the delta inequality."""
    b1 = coeffs.b1
    m1_c2 = coeffs.m1 / coeffs.c2
    return dict(
        a2_l1=lp_norm(coeffs.a2, 1),
        lam2=trace(spec, 2),
        m2_c2_sup=sup_norm(coeffs.m2 / coeffs.c2),
        first=lp_norm(b1, 1) * sup_norm(m1_c2) / H0,
        second=np.sqrt(lp_norm(b1, 1) * sup_norm(b1)) * lp_norm(m1_c2, 2) / H0,
    )


def compute_R0(coeffs, spec, H0):
    """Permanence index; requires ``H0 > 0``."""
    if not H0 > 0:
        raise PreconditionError(f"R0 is undefined for H0 = {H0} <= 0")
    q = _R0_parts(coeffs, spec, H0)
    return (-q["a2_l1"] - q["lam2"] / 2
            + 1.0 / (q["m2_c2_sup"] + min(q["first"], q["second"])))


def delta_inequality_lhs(coeffs, spec, H0, delta):
    """Left side of the inequality that ``delta`` must satisfy (``>= R0/2``)."""
    q = _R0_parts(coeffs, spec, H0)
    inner = min(q["first"] + delta, q["second"] + delta)
    return -q["a2_l1"] - q["lam2"] / 2 - delta + 1.0 / (q["m2_c2_sup"] + inner + delta)


def delta_hat(coeffs, H0, delta):
    """Permanence floor for ``limsup E int V^2`` given an admissible ``delta``."""
    b2_l2 = lp_norm(coeffs.b2, 2)
    m3_c2_sup = sup_norm(coeffs.m3 / coeffs.c2)
    b1_sup = sup_norm(coeffs.b1)
    return min(delta ** 2 / (4 * b2_l2 ** 2),
               H0 ** 2 * delta ** 2 / (4 * m3_c2_sup ** 2 * b1_sup ** 2))


def find_delta(coeffs, spec, H0, R0):
    """Largest ``delta`` in (0, 10] satisfying the delta inequality, and its floor.

    The left side is strictly decreasing in ``delta``, so bisection applies.
    """
    if not (H0 > 0 and R0 > 0):
        raise PreconditionError(f"need H0 > 0 and R0 > 0, got H0={H0}, R0={R0}")
    ok = lambda d: delta_inequality_lhs(coeffs, spec, H0, d) >= R0 / 2
    if ok(DELTA_MAX):
        delta = DELTA_MAX
    else:
        lo, hi = 0.0, DELTA_MAX
        while hi - lo > DELTA_TOL:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        delta = lo
        if not delta > 0:
            raise PreconditionError("no admissible delta found")
    return delta, delta_hat(coeffs, H0, delta)


@dataclass(frozen=True)
class ThresholdReport:
    extinction_margin: float
    H0: float
    R0: float
    delta: float
    delta_hat: float
    verdict: str
    fired_condition: str

    def as_items(self):
        return [("extinction_margin", self.extinction_margin), ("H0", self.H0),
                ("R0", self.R0), ("delta", self.delta), ("delta_hat", self.delta_hat),
                ("verdict", self.verdict), ("fired_condition", self.fired_condition)]


def classify(coeffs, spec):
    """Check the extinction condition, then the permanence condition.

    Neither is necessary; when both fail the verdict is ``Indeterminate``.
    """
    margin = extinction_margin(coeffs)
    H0 = compute_H0(coeffs, spec)
    R0 = compute_R0(coeffs, spec, H0) if H0 > 0 else float("nan")
    delta = dhat = float("nan")
    if H0 > 0 and R0 > 0:
        try:
            delta, dhat = find_delta(coeffs, spec, H0, R0)
        except PreconditionError:
            pass
    constant = coeffs.is_spatially_constant() and basis_bound(spec) == 1.0
    setting = "constant" if constant else "heterogeneous"
    if margin > 0:
        verdict, fired = EXTINCT_V, f"extinction/{setting}: inf(a2 - c2/m2) > 0"
    elif H0 > 0 and R0 > 0 and dhat > 0:
        verdict, fired = PERMANENT_UV, f"permanence/{setting}: H0 > 0 and R0 > 0"
    else:
        verdict, fired = INDETERMINATE, "none"
    return ThresholdReport(margin, H0, R0, delta, dhat, verdict, fired)


STAT_SERIES = ("intU", "intV", "intU2", "intV2", "intInvU")


@dataclass(eq=False)
class EnsembleStats:
    times: np.ndarray
    mean: dict
    std_err: dict
    n_traj: int

    def __getattr__(self, name):
        for prefix, table in (("mean_", "mean"), ("se_", "std_err")):
            if name.startswith(prefix) and name[len(prefix):] in STAT_SERIES:
                return self.__dict__[table][name[len(prefix):]]
        raise AttributeError(name)


def ensemble_reduce(records):
    """Pointwise ensemble means and standard errors, summed in record order."""
    records = list(records)
    if not records:
        raise DimensionError("no records to reduce")
    times = records[0].times
    for r in records[1:]:
        if r.times.shape != times.shape or not np.array_equal(r.times, times):
            raise DimensionError("records have mismatched time grids")
    n = len(records)
    mean, se = {}, {}
    for name in STAT_SERIES:
        data = np.stack([getattr(r, name) for r in records])
        # shifted sum keeps identical records exact: mean == record, se == 0
        shift = data[0]
        acc = np.zeros_like(shift)
        with np.errstate(invalid="ignore"):
            for row in data[1:]:
                acc = acc + (row - shift)
            m = shift + acc / n
        mean[name] = m
        if n > 1:
            with np.errstate(invalid="ignore"):
                dev = data - m
                se[name] = np.sqrt(np.sum(dev * dev, axis=0) / (n - 1) / n)
        else:
            se[name] = np.zeros_like(m)
    return EnsembleStats(times.copy(), mean, se, n)


def fit_decay_rate(stats, series, window):
    """Least-squares slope of ``log(mean series)`` against time on ``window``."""
    t_a, t_b = window
    t = stats.times
    mask = (t >= t_a) & (t <= t_b)
    y = stats.mean[series][mask]
    if mask.sum() < 2:
        raise FitError("window contains fewer than two samples")
    if not np.all(y > 0):
        raise FitError(f"{series} is not strictly positive on the window")
    slope, _ = np.polyfit(t[mask], np.log(y), 1)
    return float(slope)
