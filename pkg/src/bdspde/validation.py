"""Self-check suite behind the ``validate`` subcommand."""

from dataclasses import dataclass

import numpy as np

from . import spectral
from .model import CoefficientSet
from .noise import IncrementSampler, NoiseSpec
from .oracle import PointState, integrate_ode
from .solver import SolverConfig, galerkin_gap, simulate_galerkin_ensemble, simulate_trajectory

DEFAULT_ENSEMBLE = 200
SAMPLES_PER_TRAJECTORY = 500
VALIDATION_SEED = 20240601

# constant-coefficient set shared by the oracle and Galerkin checks
REFERENCE_COEFFS = dict(a1=4.0, b1=1.0, c1=1.0, a2=0.1, b2=1.0, c2=4.0,
                        m1=1.0, m2=1.0, m3=1.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    std_err: float = float("nan")
    detail: str = ""


def check_semigroup(M=64):
    grid = spectral.build_grid(M)
    worst = 0.0
    for k in (0, 1, 2, 5, 20):
        ek = spectral.basis(k, grid.points)
        for d in (0.1, 1.0):
            for t in (0.01, 1.0):
                exact = np.exp(-d * (k * np.pi) ** 2 * t) * ek
                err = np.max(np.abs(spectral.apply_semigroup(ek, d, t, grid) - exact))
                worst = max(worst, err)
    return CheckResult("semigroup exactness", worst < 1e-12, worst, 1e-12)


def check_mass(M=64, n_fields=100, seed=VALIDATION_SEED):
    rng = np.random.default_rng(seed)
    grid = spectral.build_grid(M)
    worst = 0.0
    for _ in range(n_fields):
        f = rng.random(M) * rng.uniform(0.1, 10.0)
        d, t = rng.uniform(0.01, 2.0), rng.uniform(0.0, 2.0)
        err = abs(spectral.integrate(spectral.apply_semigroup(f, d, t, grid))
                  - spectral.integrate(f))
        worst = max(worst, err)
    return CheckResult("semigroup mass conservation", worst < 1e-12, worst, 1e-12)


def _increments(spec, grid, n_traj, n_steps, dt, seed):
    sampler = IncrementSampler(spec, grid, seed, np.arange(n_traj))
    dw1, _ = sampler.block(0, n_steps, dt)
    return dw1.reshape(-1, grid.M)


def check_noise_variance(n_traj=DEFAULT_ENSEMBLE, seed=VALIDATION_SEED):
    """Single constant mode: sample variance against ``sigma^2 dt``."""
    sigma_sq, dt = 0.25, 1e-2
    grid = spectral.build_grid(8)
    spec = NoiseSpec.single_mode(sigma_sq, 0.0)
    x = _increments(spec, grid, n_traj, SAMPLES_PER_TRAJECTORY, dt, seed)[:, 0]
    target = sigma_sq * dt
    var = x.var(ddof=1)
    centred = x - x.mean()
    se = np.sqrt(np.var(centred ** 2, ddof=1) / x.size)
    z = abs(var - target) / se
    return CheckResult("noise variance", z <= 4.0, var, target, se,
                       f"n={x.size}, |z|={z:.2f}")


def check_noise_covariance(n_traj=DEFAULT_ENSEMBLE, seed=VALIDATION_SEED):
    """Three-mode spec: pointwise variances and two-point covariances."""
    dt = 1e-2
    grid = spectral.build_grid(64)
    spec = NoiseSpec((0.2, 0.1, 0.05), (0.0, 0.0, 0.0))
    w = _increments(spec, grid, n_traj, SAMPLES_PER_TRAJECTORY, dt, seed)
    idx = (3, 21, 50)
    E = spectral.basis_matrix(3, grid)[:, idx]
    lam = np.array(spec.lambda1)
    worst_z, worst_se = 0.0, 0.0
    for a in range(3):
        for b in range(a, 3):
            target = dt * np.sum(lam * E[:, a] * E[:, b])
            xa, xb = w[:, idx[a]], w[:, idx[b]]
            prod = (xa - xa.mean()) * (xb - xb.mean())
            cov = prod.sum() / (prod.size - 1)
            se = prod.std(ddof=1) / np.sqrt(prod.size)
            z = abs(cov - target) / se
            if z >= worst_z:
                worst_z, worst_se = z, se
    return CheckResult("noise covariance", worst_z <= 4.0, worst_z, 4.0, worst_se,
                       f"n={w.shape[0]}, worst |z| over 6 moments")


def check_oracle(dt=1e-4, T=10.0, M=16, tol=1e-4):
    coeffs = CoefficientSet.constant(M, d1=0.1, d2=0.1, **REFERENCE_COEFFS)
    n_out = 100
    stride = int(round(T / dt / n_out))
    cfg = SolverConfig(dt=dt, T=T, record_stride=stride, M=M)
    rec = simulate_trajectory(0.5, 0.5, coeffs, cfg, 0, VALIDATION_SEED)
    ref = integrate_ode(REFERENCE_COEFFS, PointState(0.5, 0.5), T, tol=1e-11, n_out=n_out)
    u = np.array([p.u for p in ref])
    v = np.array([p.v for p in ref])
    err = max(np.max(np.abs(rec.intU - u)), np.max(np.abs(rec.intV - v)))
    return CheckResult("oracle agreement", err < tol, err, tol)


def galerkin_runs(n_traj=100, levels=(8, 16, 32), T=5.0, dt=1e-3, M=64, q=0.5,
                  sigma_sq=0.2, seed=VALIDATION_SEED, threads=1):
    """Yield ``(N, fine, coarse)`` coupled record lists for each level ``N``.

    The fine run carries ``2N`` geometric modes, the coarse run its first ``N``.
    """
    coeffs = CoefficientSet.constant(M, d1=0.1, d2=0.1, **REFERENCE_COEFFS)
    x = spectral.build_grid(M).points
    U0 = 0.5 + 0.25 * np.cos(np.pi * x)
    V0 = 0.5 - 0.25 * np.cos(2 * np.pi * x)
    for N in levels:
        spec = NoiseSpec.geometric(sigma_sq, sigma_sq, q, 2 * N)
        cfg = SolverConfig(dt=dt, T=T, record_stride=int(round(T / dt)), M=M, spec=spec)
        fine, coarse = simulate_galerkin_ensemble(U0, V0, coeffs, cfg, range(n_traj),
                                                  seed, N, threads=threads)
        yield N, fine, coarse


def galerkin_levels(n_traj=100, **kwargs):
    """End-time gap ``E|Z_2N - Z_N|^2`` with its standard error for each ``N``."""
    return [(N,) + galerkin_gap(fine, coarse)
            for N, fine, coarse in galerkin_runs(n_traj, **kwargs)]


def galerkin_monotone(levels):
    """True when each gap is below the previous one up to one combined standard error."""
    return all(g1 <= g0 + np.hypot(s0, s1)
               for (_, g0, s0), (_, g1, s1) in zip(levels, levels[1:]))


def check_galerkin(n_traj=100, seed=VALIDATION_SEED):
    levels = galerkin_levels(n_traj=n_traj, seed=seed)
    detail = ", ".join(f"N={N}: {g:.3e}" for N, g, _ in levels)
    return CheckResult("Galerkin convergence", galerkin_monotone(levels),
                       levels[-1][1], levels[0][1], levels[-1][2], detail)


def run_validation(n_traj=DEFAULT_ENSEMBLE, echo=print):
    """Run every check, print a table and return ``(all_passed, results)``."""
    n_traj = max(int(n_traj), 2)
    results = [
        check_semigroup(),
        check_mass(),
        check_noise_variance(n_traj),
        check_noise_covariance(n_traj),
        check_oracle(),
        check_galerkin(max(n_traj // 2, 2)),
    ]
    if echo is not None:
        echo(f"{'check':<30} {'status':<6} {'value':>12} {'threshold':>12} {'std_err':>12}  detail")
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            echo(f"{r.name:<30} {status:<6} {r.value:>12.4e} {r.threshold:>12.4e} "
                 f"{r.std_err:>12.4e}  {r.detail}")
    return all(r.passed for r in results), results
