"""Experiment orchestration and CSV output."""

import csv
import io
import logging

import numpy as np

from .solver import TrajectoryRecord, simulate_ensemble, simulate_trajectory
from .thresholds import STAT_SERIES, classify, ensemble_reduce

log = logging.getLogger(__name__)

ENSEMBLE_COLUMNS = ["time"] + [f"{p}_{s}" for s in STAT_SERIES for p in ("mean", "se")]
TRAJECTORY_COLUMNS = ["time"] + list(TrajectoryRecord.SERIES)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _config_items(cfg):
    items = [(f"coef.{n}", fd.to_text()) for n, fd in cfg.coefficients.items()]
    items += [("d1", cfg.d1), ("d2", cfg.d2), ("noise.family", cfg.noise_family),
              ("noise.sigma1_sq", cfg.sigma1_sq), ("noise.sigma2_sq", cfg.sigma2_sq),
              ("noise.q", cfg.q), ("noise.modes", cfg.modes),
              ("U0", cfg.U0.to_text()), ("V0", cfg.V0.to_text()),
              ("dt", cfg.dt), ("T", cfg.T), ("record_stride", cfg.record_stride),
              ("truncation_radius", cfg.truncation_radius),
              ("positivity_policy", cfg.positivity_policy), ("M", cfg.M),
              ("scheme", cfg.scheme), ("seed", cfg.seed)]
    return items


def _write_csv(path, meta, columns, rows):
    buf = io.StringIO()
    for key, value in meta:
        buf.write(f"# {key}={_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def write_error_report(path, cfg, exc):
    meta = [("status", "error"), ("error", str(exc).replace("\n", " "))]
    return _write_csv(path, meta + _config_items(cfg), ENSEMBLE_COLUMNS, [])


def run_ensemble(cfg, threads=1, out=None):
    """Simulate ``cfg.ensemble`` trajectories, reduce them and write the CSV.

    Returns ``(stats, report, records)``. Any blow-up propagates after an error
    report replaces the output file.
    """
    out = cfg.output if out is None else out
    coeffs = cfg.coefficient_set()
    solver_cfg = cfg.solver_config()
    report = classify(coeffs, solver_cfg.spec)
    U0, V0 = cfg.initial_fields()
    log.info("simulating %d trajectories (T=%g, dt=%g, M=%d)",
             cfg.ensemble, cfg.T, cfg.dt, cfg.M)
    try:
        records = simulate_ensemble(U0, V0, coeffs, solver_cfg, range(cfg.ensemble),
                                    cfg.seed, threads=threads)
    except Exception as exc:
        if out is not None:
            write_error_report(out, cfg, exc)
        raise
    stats = ensemble_reduce(records)
    clip = max(r.relative_clip_mass for r in records)
    meta = [("status", "ok"), ("n_traj", stats.n_traj),
            ("max_relative_clip_mass", clip)]
    meta += report.as_items() + _config_items(cfg)
    rows = []
    for i, t in enumerate(stats.times):
        row = [t]
        for s in STAT_SERIES:
            row += [stats.mean[s][i], stats.std_err[s][i]]
        rows.append(row)
    _write_csv(out, meta, ENSEMBLE_COLUMNS, rows)
    return stats, report, records


def run_single(cfg, trajectory_id=0, out=None):
    """Simulate one trajectory and write its observables."""
    coeffs = cfg.coefficient_set()
    U0, V0 = cfg.initial_fields()
    record = simulate_trajectory(U0, V0, coeffs, cfg.solver_config(), trajectory_id,
                                 cfg.seed)
    meta = [("status", "ok"), ("trajectory_id", trajectory_id),
            ("relative_clip_mass", record.relative_clip_mass)] + _config_items(cfg)
    rows = zip(record.times, *(getattr(record, s) for s in TrajectoryRecord.SERIES))
    _write_csv(out, meta, TRAJECTORY_COLUMNS, rows)
    return record


def threshold_report(cfg):
    return classify(cfg.coefficient_set(), cfg.noise_spec())


def read_csv(path):
    """Parse a CSV written by this module into ``(meta, columns, rows)``."""
    meta = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = np.array([[float(v) for v in row] for row in reader]).reshape(-1, len(columns))
    return meta, columns, rows
