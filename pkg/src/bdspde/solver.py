"""Exponential time stepping of the mild formulation with positivity control.

One step of the default ``"heun"`` scheme for the prey reads::

    base  = U + U * dW1
    U~    = S(dt) [base + dt F1(U, V)]                       (predictor)
    U+    = S(dt) [base + dt/2 F1(U, V)] + dt/2 F1(U~, V~)   (corrector)

with ``S(dt)`` the exact Neumann heat semigroup and the same form for the
predator. The ``"euler"`` scheme is the plain exponential Euler-Maruyama step
``U+ = S(dt) [U + dt F1(U, V) + U * dW1]``. Both treat noise in the Ito sense
and reduce to the exact semigroup when drift and noise vanish.

Trajectories are integrated in batches (arrays of shape ``(n_traj, M)``);
randomness is keyed per trajectory, so batching never changes a path's draws.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, PositivityError, PreconditionError
from .model import StatePair, radial_clamp, reaction
from .noise import IncrementSampler, NoiseSpec
from .spectral import HeatSemigroup, build_grid

SCHEMES = ("heun", "euler")
POLICIES = ("clip", "reject")

# steps of noise drawn per Philox call
NOISE_BLOCK = 256
# trajectories per batch; fixed so results do not depend on the thread count
BATCH_SIZE = 256


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    T: float = 50.0
    record_stride: int = 100
    truncation_radius: float = float("inf")
    positivity_policy: str = "clip"
    M: int = 64
    spec: NoiseSpec = field(default_factory=NoiseSpec.zero)
    scheme: str = "heun"
    reject_tolerance: float = 1e-8

    def __post_init__(self):
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt}")
        if not self.T > 0:
            raise PreconditionError(f"T must be positive, got {self.T}")
        if self.dt > self.T:
            raise PreconditionError(f"dt = {self.dt} exceeds T = {self.T}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise PreconditionError("record_stride must be a positive integer")
        if self.record_stride * self.dt > self.T * (1 + 1e-12):
            raise PreconditionError("record_stride * dt exceeds T")
        if not self.truncation_radius > 0:
            raise PreconditionError("truncation_radius must be positive")
        if self.positivity_policy not in POLICIES:
            raise PreconditionError(
                f"positivity_policy must be one of {POLICIES}, got {self.positivity_policy!r}")
        if self.scheme not in SCHEMES:
            raise PreconditionError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if int(self.M) != self.M or self.M < 2:
            raise PreconditionError(f"M must be an integer >= 2, got {self.M}")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def record_steps(self):
        steps = list(range(0, self.n_steps + 1, self.record_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.array(steps)


@dataclass(eq=False)
class TrajectoryRecord:
    """Observables of one sample path at the recorded times."""

    trajectory_id: int
    times: np.ndarray
    intU: np.ndarray
    intV: np.ndarray
    intU2: np.ndarray
    intV2: np.ndarray
    intInvU: np.ndarray
    minU: np.ndarray
    minV: np.ndarray
    clip_mass: float
    total_mass: float
    final_U: np.ndarray
    final_V: np.ndarray

    SERIES = ("intU", "intV", "intU2", "intV2", "intInvU", "minU", "minV")

    @property
    def relative_clip_mass(self):
        """Clipped mass over the time-summed total mass of both species."""
        if self.total_mass == 0:
            return 0.0 if self.clip_mass == 0 else float("inf")
        return self.clip_mass / self.total_mass

    def same_as(self, other):
        """Bit-for-bit equality of every recorded quantity."""
        arrays = self.SERIES + ("times", "final_U", "final_V")
        return (all(np.array_equal(getattr(self, a), getattr(other, a), equal_nan=True)
                    for a in arrays)
                and self.clip_mass == other.clip_mass
                and self.total_mass == other.total_mass)


def apply_positivity(state, policy, tolerance=1e-8, grid=None):
    """Enforce nonnegativity; returns ``(state, clipped_mass)``.

    ``clip`` zeroes negative entries and reports the removed mass (quadrature
    integral of the negative parts). ``reject`` raises :class:`PositivityError`
    when an entry is below ``-tolerance`` and otherwise behaves like ``clip``.
    """
    if policy not in POLICIES:
        raise PreconditionError(f"unknown positivity policy {policy!r}")
    U = np.asarray(state.U, dtype=float)
    V = np.asarray(state.V, dtype=float)
    if grid is not None and U.shape[-1] != grid.M:
        raise PreconditionError("state does not match the grid")
    if policy == "reject":
        for label, f in (("U", U), ("V", V)):
            i = int(np.argmin(f))
            if f.flat[i] < -tolerance:
                raise PositivityError(label, i, float(f.flat[i]))
    removed = -(np.minimum(U, 0.0).mean(axis=-1) + np.minimum(V, 0.0).mean(axis=-1))
    return StatePair(np.maximum(U, 0.0), np.maximum(V, 0.0)), float(np.sum(removed))


def _validate_initial(f, M, label):
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        f = np.full(M, float(f))
    if f.shape != (M,):
        raise PreconditionError(f"{label} has shape {f.shape}, expected ({M},)")
    if not np.all(np.isfinite(f)):
        raise PreconditionError(f"{label} must be bounded")
    if np.any(f < 0):
        raise PreconditionError(f"{label} must be nonnegative")
    return f


class _Stepper:
    """Advances a batch of states one step at a time."""

    def __init__(self, coeffs, cfg):
        self.coeffs = coeffs
        self.cfg = cfg
        self.S1 = HeatSemigroup(cfg.M, coeffs.d1, cfg.dt)
        self.S2 = HeatSemigroup(cfg.M, coeffs.d2, cfg.dt)
        self.radius = cfg.truncation_radius

    def drift(self, U, V):
        return reaction(self.coeffs, *radial_clamp(U, V, self.radius))

    def __call__(self, U, V, dw1, dw2):
        dt = self.cfg.dt
        F1, F2 = self.drift(U, V)
        base1 = U + U * dw1
        base2 = V + V * dw2
        if self.cfg.scheme == "euler":
            return self.S1(base1 + dt * F1), self.S2(base2 + dt * F2)
        Up = np.maximum(self.S1(base1 + dt * F1), 0.0)
        Vp = np.maximum(self.S2(base2 + dt * F2), 0.0)
        G1, G2 = self.drift(Up, Vp)
        half = 0.5 * dt
        return (self.S1(base1 + half * F1) + half * G1,
                self.S2(base2 + half * F2) + half * G2)


def _observables(U, V):
    with np.errstate(divide="ignore"):
        inv = np.where(U > 0, 1.0 / np.where(U > 0, U, 1.0), np.inf)
    return (U.mean(axis=-1), V.mean(axis=-1), (U * U).mean(axis=-1),
            (V * V).mean(axis=-1), inv.mean(axis=-1), U.min(axis=-1), V.min(axis=-1))


def _run_batch(U0, V0, coeffs, cfg, trajectory_ids, master_seed, spec):
    """Integrate one batch; returns a list of records in ``trajectory_ids`` order."""
    grid = build_grid(cfg.M)
    ids = np.asarray(trajectory_ids, dtype=np.int64)
    n = ids.size
    U = np.tile(U0, (n, 1))
    V = np.tile(V0, (n, 1))
    stepper = _Stepper(coeffs, cfg)
    sampler = IncrementSampler(spec, grid, master_seed, ids)
    record_steps = cfg.record_steps()
    series = np.empty((len(record_steps), 7, n))
    series[0] = _observables(U, V)
    next_record = 1
    clip_mass = np.zeros(n)
    total_mass = np.zeros(n)
    n_steps = cfg.n_steps
    policy = cfg.positivity_policy
    tol = cfg.reject_tolerance

    for start in range(0, n_steps, NOISE_BLOCK):
        count = min(NOISE_BLOCK, n_steps - start)
        dW1, dW2 = sampler.block(start, count, cfg.dt)
        for j in range(count):
            k = start + j
            U, V = stepper(U, V, dW1[j], dW2[j])
            if not (np.isfinite(U).all() and np.isfinite(V).all()):
                bad = np.flatnonzero(~(np.isfinite(U).all(axis=-1) & np.isfinite(V).all(axis=-1)))
                raise BlowUpError(k, int(ids[bad[0]]))
            if U.min() < 0 or V.min() < 0:
                if policy == "reject":
                    for label, f in (("U", U), ("V", V)):
                        if f.min() < -tol:
                            row, col = np.unravel_index(np.argmin(f), f.shape)
                            raise PositivityError(label, int(col), float(f[row, col]))
                clip_mass -= np.minimum(U, 0.0).mean(axis=-1) + np.minimum(V, 0.0).mean(axis=-1)
                U = np.maximum(U, 0.0)
                V = np.maximum(V, 0.0)
            total_mass += U.mean(axis=-1) + V.mean(axis=-1)
            if next_record < len(record_steps) and k + 1 == record_steps[next_record]:
                series[next_record] = _observables(U, V)
                next_record += 1

    times = record_steps * cfg.dt
    records = []
    for i, tid in enumerate(ids):
        obs = {name: series[:, s, i].copy()
               for s, name in enumerate(TrajectoryRecord.SERIES)}
        records.append(TrajectoryRecord(
            trajectory_id=int(tid), times=times.copy(),
            clip_mass=float(clip_mass[i]), total_mass=float(total_mass[i]),
            final_U=U[i].copy(), final_V=V[i].copy(), **obs))
    return records


def simulate_ensemble(U0, V0, coeffs, cfg, trajectory_ids, master_seed,
                      threads=1, spec=None):
    """Simulate several trajectories; records come back in ``trajectory_ids`` order.

    ``spec`` overrides ``cfg.spec`` (used for Galerkin-truncated companions).
    """
    if coeffs.M != cfg.M:
        raise PreconditionError(f"coefficients live on M={coeffs.M}, config has M={cfg.M}")
    U0 = _validate_initial(U0, cfg.M, "U0")
    V0 = _validate_initial(V0, cfg.M, "V0")
    spec = cfg.spec if spec is None else spec
    ids = list(trajectory_ids)
    batches = [ids[i:i + BATCH_SIZE] for i in range(0, len(ids), BATCH_SIZE)]
    run = lambda batch: _run_batch(U0, V0, coeffs, cfg, batch, master_seed, spec)
    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]
    return [rec for batch in results for rec in batch]


def simulate_trajectory(U0, V0, coeffs, cfg, trajectory_id, master_seed):
    """Simulate a single sample path and return its :class:`TrajectoryRecord`."""
    return simulate_ensemble(U0, V0, coeffs, cfg, [trajectory_id], master_seed)[0]


def step(state, coeffs, stream, k, cfg):
    """Advance ``state`` by one step using the draws of step index ``k``.

    Applies the configured positivity policy to the result.
    """
    grid = build_grid(cfg.M)
    U = _validate_initial(state.U, cfg.M, "U")
    V = _validate_initial(state.V, cfg.M, "V")
    sampler = IncrementSampler(stream.spec, grid, stream.master_seed, [stream.trajectory_id])
    dW1, dW2 = sampler.block(k, 1, cfg.dt)
    U1, V1 = _Stepper(coeffs, cfg)(U, V, dW1[0, 0], dW2[0, 0])
    if not (np.isfinite(U1).all() and np.isfinite(V1).all()):
        raise BlowUpError(k, stream.trajectory_id)
    out, _ = apply_positivity(StatePair(U1, V1), cfg.positivity_policy,
                              cfg.reject_tolerance)
    return out


def simulate_galerkin_pair(U0, V0, coeffs, cfg, trajectory_id, master_seed, N_coarse):
    """Coupled runs with the full noise and with modes ``>= N_coarse`` removed.

    Both runs use the same draw for every shared mode.
    """
    pairs = simulate_galerkin_ensemble(U0, V0, coeffs, cfg, [trajectory_id],
                                       master_seed, N_coarse)
    return pairs[0][0], pairs[1][0]


def simulate_galerkin_ensemble(U0, V0, coeffs, cfg, trajectory_ids, master_seed,
                               N_coarse, threads=1):
    """Fine and coarse record lists for a set of trajectories."""
    if not 0 < N_coarse <= cfg.spec.N:
        raise PreconditionError(
            f"N_coarse must lie in 1..{cfg.spec.N}, got {N_coarse}")
    fine = simulate_ensemble(U0, V0, coeffs, cfg, trajectory_ids, master_seed, threads)
    coarse = simulate_ensemble(U0, V0, coeffs, cfg, trajectory_ids, master_seed, threads,
                               spec=cfg.spec.truncated(N_coarse))
    return fine, coarse


def galerkin_gap(fine, coarse):
    """Mean and standard error of the end-time squared L2 gap between paired runs."""
    gaps = np.array([
        np.mean((f.final_U - c.final_U) ** 2) + np.mean((f.final_V - c.final_V) ** 2)
        for f, c in zip(fine, coarse)
    ])
    se = gaps.std(ddof=1) / np.sqrt(gaps.size) if gaps.size > 1 else 0.0
    return float(gaps.mean()), float(se)
