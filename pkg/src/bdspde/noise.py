"""Q-Wiener increments with counter-based, mode-addressable randomness.

Every standard normal used by the solver is a pure function of
``(master_seed, trajectory_id, step, mode, species)``. The draw comes from one
Philox-4x32-10 block keyed by the seed with counter
``(trajectory_id, step, mode, stream)``; the four output words give two
53-bit uniforms, and Box-Muller turns them into two independent normals,
the cosine branch for the prey and the sine branch for the predator.
Because nothing is sequential, refining the mode set or reordering
trajectories never changes a shared draw.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import basis_matrix

_MASK32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = 0x9E3779B9
_PHILOX_W1 = 0xBB67AE85

NOISE_STREAM = 0x51D0


def philox4x32(c0, c1, c2, c3, k0, k1, rounds=10):
    """Vectorised Philox-4x32 block function.

    Counter words broadcast against each other; key words are Python ints.
    Returns four ``uint64`` arrays holding 32-bit output words.
    """
    x0, x1, x2, x3 = np.broadcast_arrays(
        *(np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    )
    k0 = int(k0) & 0xFFFFFFFF
    k1 = int(k1) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _PHILOX_W0) & 0xFFFFFFFF
            k1 = (k1 + _PHILOX_W1) & 0xFFFFFFFF
        p0 = x0 * _PHILOX_M0
        p1 = x2 * _PHILOX_M1
        x0, x1, x2, x3 = (
            (p1 >> np.uint64(32)) ^ x1 ^ np.uint64(k0),
            p1 & _MASK32,
            (p0 >> np.uint64(32)) ^ x3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
    return x0, x1, x2, x3


def _uniform53(hi, lo):
    """Uniform in (0, 1] from two 32-bit words."""
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)


def standard_normals(master_seed, trajectory_id, step, mode):
    """Return ``(xi_prey, xi_predator)`` for broadcastable counter arrays."""
    seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
    w0, w1, w2, w3 = philox4x32(trajectory_id, step, mode, NOISE_STREAM,
                                seed & 0xFFFFFFFF, seed >> 32)
    u1 = _uniform53(w0, w1)
    u2 = _uniform53(w2, w3)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return r * np.cos(theta), r * np.sin(theta)


@dataclass(frozen=True)
class NoiseSpec:
    """Eigenvalues of the two covariance operators on the cosine basis.

    ``lambda1[k]`` and ``lambda2[k]`` multiply mode ``e_k`` (``k = 0`` is the
    constant mode).
    """

    lambda1: tuple
    lambda2: tuple

    def __post_init__(self):
        l1 = tuple(float(v) for v in self.lambda1)
        l2 = tuple(float(v) for v in self.lambda2)
        n = max(len(l1), len(l2))
        l1 += (0.0,) * (n - len(l1))
        l2 += (0.0,) * (n - len(l2))
        for name, seq in (("lambda1", l1), ("lambda2", l2)):
            if any(not np.isfinite(v) or v < 0 for v in seq):
                raise ValueError(f"{name} eigenvalues must be finite and nonnegative")
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)

    @property
    def N(self):
        return len(self.lambda1)

    def eigenvalues(self, species):
        if species == 1:
            return np.array(self.lambda1)
        if species == 2:
            return np.array(self.lambda2)
        raise ValueError(f"species must be 1 or 2, got {species!r}")

    def truncated(self, n_modes):
        """Same spec with every mode ``k >= n_modes`` switched off."""
        keep = lambda seq: seq[:n_modes] + (0.0,) * max(0, len(seq) - n_modes)
        return NoiseSpec(keep(self.lambda1), keep(self.lambda2))

    @classmethod
    def zero(cls, N=1):
        return cls((0.0,) * N, (0.0,) * N)

    @classmethod
    def single_mode(cls, sigma1_sq, sigma2_sq):
        """Spatially constant noise: independent scalar Brownian motions."""
        return cls((sigma1_sq,), (sigma2_sq,))

    @classmethod
    def geometric(cls, sigma1_sq, sigma2_sq, q, N):
        """``lambda_{k,i} = sigma_i^2 q^k`` for ``k = 0..N-1``."""
        if not 0 < q < 1:
            raise ValueError(f"decay ratio q must lie in (0, 1), got {q}")
        w = q ** np.arange(N)
        return cls(tuple(sigma1_sq * w), tuple(sigma2_sq * w))


def trace(spec, species):
    return float(np.sum(spec.eigenvalues(species)))


def basis_bound(spec):
    """Sup norm of the active basis functions: 1 for mode 0 only, else sqrt(2).

    A spec with no active mode returns 1.
    """
    active = [k for k in range(spec.N)
              if spec.lambda1[k] > 0 or spec.lambda2[k] > 0]
    if any(k > 0 for k in active):
        return float(np.sqrt(2.0))
    return 1.0


@dataclass(frozen=True)
class NoiseStream:
    master_seed: int
    trajectory_id: int
    spec: NoiseSpec


class IncrementSampler:
    """Batched increments for a block of trajectories on a fixed grid.

    Precomputes ``sqrt(lambda_k) * e_k(x_j)`` so that one step for all
    trajectories and both species costs one Philox evaluation and two small
    matrix products.
    """

    def __init__(self, spec, grid, master_seed, trajectory_ids):
        self.spec = spec
        self.grid = grid
        self.master_seed = int(master_seed)
        self.trajectory_ids = np.atleast_1d(np.asarray(trajectory_ids, dtype=np.int64))
        E = basis_matrix(spec.N, grid)
        self.scaled1 = np.sqrt(spec.eigenvalues(1))[:, None] * E
        self.scaled2 = np.sqrt(spec.eigenvalues(2))[:, None] * E
        self.active = np.flatnonzero(
            (spec.eigenvalues(1) > 0) | (spec.eigenvalues(2) > 0))
        self.silent = self.active.size == 0

    def block(self, first_step, n_steps, dt):
        """Increments for steps ``first_step .. first_step+n_steps-1``.

        Returns two arrays of shape ``(n_steps, n_traj, M)``.
        """
        n_traj = self.trajectory_ids.size
        shape = (n_steps, n_traj, self.grid.M)
        if self.silent:
            return np.zeros(shape), np.zeros(shape)
        steps = np.arange(first_step, first_step + n_steps, dtype=np.int64)
        xi1, xi2 = standard_normals(
            self.master_seed,
            self.trajectory_ids[None, :, None],
            steps[:, None, None],
            self.active[None, None, :],
        )
        root_dt = np.sqrt(dt)
        dw1 = (xi1 * root_dt) @ self.scaled1[self.active]
        dw2 = (xi2 * root_dt) @ self.scaled2[self.active]
        return dw1, dw2


def sample_increment(stream, step, dt, species, grid):
    """Increment ``W_species(t_{step+1}) - W_species(t_step)`` on ``grid``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if species not in (1, 2):
        raise ValueError(f"species must be 1 or 2, got {species!r}")
    sampler = IncrementSampler(stream.spec, grid, stream.master_seed,
                               [stream.trajectory_id])
    dw1, dw2 = sampler.block(step, 1, dt)
    return (dw1 if species == 1 else dw2)[0, 0]
