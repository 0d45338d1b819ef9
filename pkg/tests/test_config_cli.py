from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdspde.cli import main
from bdspde.config import FieldDef, load_config, parse_config
from bdspde.errors import BlowUpError, ConfigError
from bdspde.experiment import ENSEMBLE_COLUMNS, read_csv, run_ensemble, run_single

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """\
[coefficients]
a1 = 4
b1 = 1
c1 = 1
a2 = 0.1
b2 = 1
c2 = 4
m1 = 1
m2 = 1
m3 = 1
d1 = 0.1
d2 = 0.1
"""

SMALL_RUN = """
[noise]
family = single
sigma1_sq = 0.05
sigma2_sq = 0.05

[solver]
dt = 1e-3
T = 0.2
record_stride = 50
M = 16

[experiment]
ensemble = 3
seed = 11
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------- parsing

def test_minimal_config_is_valid():
    cfg = parse_config(MINIMAL)
    assert cfg.coefficients["a1"] == FieldDef("constant", (4.0,))
    assert cfg.noise_family == "zero" and cfg.M == 64 and cfg.dt == 1e-3
    coeffs = cfg.coefficient_set()
    assert coeffs.is_spatially_constant() and np.all(coeffs.c2 == 4.0)


def test_zero_coefficient_rejected():
    text = MINIMAL.replace("m1 = 1", "m1 = 0")
    with pytest.raises(ConfigError, match="coefficient must be positive") as info:
        parse_config(text)
    assert info.value.key == "m1" and info.value.line == 8


def test_dt_above_horizon_rejected():
    text = MINIMAL + "\n[solver]\ndt = 2\nT = 1\n"
    with pytest.raises(ConfigError, match="dt") as info:
        parse_config(text)
    assert info.value.line is not None


@pytest.mark.parametrize("extra,key", [
    ("\n[solver]\nstep = 1\n", "solver.step"),
    ("\n[plotting]\ncolor = red\n", "plotting"),
])
def test_unknown_names_rejected(extra, key):
    with pytest.raises(ConfigError, match="unknown") as info:
        parse_config(MINIMAL + extra)
    assert info.value.key == key and info.value.line is not None


def test_missing_coefficient_names_key():
    text = MINIMAL.replace("c2 = 4\n", "")
    with pytest.raises(ConfigError, match="c2"):
        parse_config(text)


@pytest.mark.parametrize("line,pattern", [
    ("a2 = affine 0.5 -1", "positive"),          # crosses zero on [0, 1]
    ("a2 = cosine-bump 0.1 0.2", "positive"),
    ("a2 = polynomial 1 2", "unknown field family"),
    ("a2 = affine 1", "parameters"),
    ("a2 = nan", "NaN"),
])
def test_bad_field_definitions(line, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(MINIMAL.replace("a2 = 0.1", line))


def test_spatial_families_evaluate():
    text = MINIMAL.replace("a1 = 4", "a1 = affine 3 2").replace(
        "c2 = 4", "c2 = cosine-bump 4 1 2")
    cfg = parse_config(text + "\n[solver]\nM = 8\n")
    coeffs = cfg.coefficient_set()
    x = (np.arange(8) + 0.5) / 8
    assert np.allclose(coeffs.a1, 3 + 2 * x)
    assert np.allclose(coeffs.c2, 4 + np.cos(2 * np.pi * x))
    assert not coeffs.is_spatially_constant()


def test_round_trip():
    text = MINIMAL.replace("a1 = 4", "a1 = affine 3 2") + SMALL_RUN
    cfg = parse_config(text)
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.to_text() == cfg.to_text()


@settings(max_examples=40, deadline=None)
@given(base=st.floats(1.5, 50.0), amp=st.floats(-1.0, 1.0), k=st.integers(0, 6),
       seed=st.integers(0, 2 ** 40), q=st.floats(0.05, 0.95),
       policy=st.sampled_from(["clip", "reject"]))
def test_round_trip_property(base, amp, k, seed, q, policy):
    text = (MINIMAL.replace("b2 = 1", f"b2 = cosine-bump {base!r} {amp!r} {k}")
            + f"\n[noise]\nfamily = geometric\nq = {q!r}\n"
            + f"\n[solver]\npositivity_policy = {policy}\n"
            + f"\n[experiment]\nseed = {seed}\n")
    cfg = parse_config(text)
    assert parse_config(cfg.to_text()) == cfg


def test_shipped_configs_parse():
    for name in ("extinction.ini", "permanence.ini"):
        cfg = load_config(CONFIGS / name)
        assert cfg.ensemble == 200 and cfg.T == 50.0


# ---------------------------------------------------------------- orchestration

def test_ensemble_of_one_equals_record(tmp_path):
    cfg = parse_config(MINIMAL + SMALL_RUN).with_overrides(ensemble=1)
    out = tmp_path / "one.csv"
    stats, _, records = run_ensemble(cfg, out=str(out))
    (rec,) = records
    for name in ("intU", "intV", "intU2", "intV2", "intInvU"):
        assert np.array_equal(stats.mean[name], getattr(rec, name))
        assert np.all(stats.std_err[name] == 0)
    meta, columns, rows = read_csv(out)
    assert columns == ENSEMBLE_COLUMNS
    assert meta["n_traj"] == "1" and rows.shape == (len(rec.times), len(columns))
    assert np.array_equal(rows[:, columns.index("mean_intU")], rec.intU)


def test_same_seed_identical_files(tmp_path):
    cfg = parse_config(MINIMAL + SMALL_RUN)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_ensemble(cfg, out=str(a))
    run_ensemble(cfg, threads=2, out=str(b))
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    run_ensemble(cfg.with_overrides(seed=12), out=str(c))
    assert a.read_bytes() != c.read_bytes()


def test_extinction_verdict_in_header(tmp_path):
    cfg = load_config(CONFIGS / "extinction.ini").with_overrides(
        ensemble=2, T=0.1, record_stride=50, M=16)
    out = tmp_path / "ext.csv"
    run_ensemble(cfg, out=str(out))
    meta, _, _ = read_csv(out)
    assert meta["verdict"] == "ExtinctV"
    assert meta["extinction_margin"] == "0.5"
    assert meta["status"] == "ok"


def test_blow_up_writes_error_report(tmp_path):
    text = MINIMAL + SMALL_RUN + "\n[initial]\nU0 = constant 1e300\n"
    cfg = parse_config(text)
    out = tmp_path / "bad.csv"
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(BlowUpError):
            run_ensemble(cfg, out=str(out))
    meta, columns, rows = read_csv(out)
    assert meta["status"] == "error" and "non-finite" in meta["error"]
    assert columns == ENSEMBLE_COLUMNS and rows.size == 0


def test_single_run_csv(tmp_path):
    cfg = parse_config(MINIMAL + SMALL_RUN)
    out = tmp_path / "single.csv"
    rec = run_single(cfg, trajectory_id=0, out=str(out))
    meta, columns, rows = read_csv(out)
    assert columns[0] == "time" and "minV" in columns
    assert np.array_equal(rows[:, columns.index("intV")], rec.intV)
    assert meta["trajectory_id"] == "0"


# ---------------------------------------------------------------- command line

def test_cli_thresholds(tmp_path, capsys):
    path = str(CONFIGS / "permanence.ini")
    out = tmp_path / "thr.txt"
    assert main(["thresholds", "--config", path, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "verdict=PermanentUV" in printed
    assert out.read_text().strip() == printed.strip()


def test_cli_ensemble_and_overrides(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL + SMALL_RUN)
    out = tmp_path / "e.csv"
    code = main(["ensemble", "--config", path, "--out", str(out), "--traj", "2",
                 "--seed", "5", "--threads", "2"])
    assert code == 0
    assert "n_traj=2" in capsys.readouterr().out
    meta, _, _ = read_csv(out)
    assert meta["n_traj"] == "2" and meta["seed"] == "5"


def test_cli_simulate(tmp_path):
    path = _write(tmp_path, MINIMAL + SMALL_RUN)
    out = tmp_path / "s.csv"
    assert main(["simulate", "--config", path, "--out", str(out)]) == 0
    assert out.exists()


@pytest.mark.parametrize("args", [
    ["--traj", "0"], ["--seed", "-1"],
])
def test_cli_bad_overrides(tmp_path, args, capsys):
    path = _write(tmp_path, MINIMAL + SMALL_RUN)
    assert main(["ensemble", "--config", path] + args) == 1
    assert "config error" in capsys.readouterr().err


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL.replace("m1 = 1", "m1 = 0"))
    assert main(["thresholds", "--config", path]) == 1
    assert "line 8: m1: coefficient must be positive" in capsys.readouterr().err
    assert main(["thresholds", "--config", str(tmp_path / "missing.ini")]) == 1


def test_cli_runtime_error_exit_code(tmp_path, capsys):
    text = MINIMAL + SMALL_RUN + "\n[initial]\nU0 = constant 1e300\n"
    path = _write(tmp_path, text)
    out = tmp_path / "err.csv"
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["ensemble", "--config", path, "--out", str(out)]) == 2
    assert "runtime error" in capsys.readouterr().err
    assert read_csv(out)[0]["status"] == "error"


def test_cli_validation_exit_code(monkeypatch):
    import bdspde.cli as cli
    monkeypatch.setattr(cli, "run_validation", lambda n: (False, []))
    assert main(["validate", "--traj", "4"]) == 3
    monkeypatch.setattr(cli, "run_validation", lambda n: (True, []))
    assert main(["validate"]) == 0
