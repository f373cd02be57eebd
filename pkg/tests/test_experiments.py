import json
import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from chanlab.experiments.cli import EXIT_CONFIG, EXIT_GATE, EXIT_OK, main
from chanlab.experiments.config import ConfigError, parse_config
from chanlab.experiments.emit import emit
from chanlab.experiments.runners import (
    RunResult,
    _polar_ginibre,
    nested_c_matrices,
    run,
    stream_index,
    wilson_interval,
)
from chanlab.sampling import RngStream, orthonormalize, sample_isometry_batch
from chanlab.twirl import lambdas_of_blocks


def write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


HIST = """
kind = "lambda-histogram"
seed = 5
n_samples = 40
[grid]
d = [4]
s = [1, 3]
[params]
which = "{which}"
"""

ORACLE = """
kind = "moment-oracle"
seed = 8
n_samples = 2000
[grid]
d = [2]
s = [1, 2]
[params]
targets = [{{ target = "lambda1", p = [1, 2] }}, {{ target = "entryB2", p = [1] }}]
[tolerances]
z_max = {z}
"""

SPECTRAL = """
kind = "spectral"
seed = 3
n_samples = 3
[grid]
d = [6]
s = {{ rule = "linear", c = [1, 2] }}
[params]
scaling = "sC"
precision = "{precision}"
"""

SCAN = """
kind = "ppt-scan"
seed = 4
n_samples = 30
[grid]
d = [5]
s = [1, 3]
[params]
families = ["UU", "UUbar", "OO", "HH", "DUC", "CDUC", "DOC", "unstructured"]
"""

PPT2 = """
kind = "ppt2-sweep"
seed = 6
n_samples = 6
[grid]
d = [4]
s = {{ rule = "power", t = [2] }}
[params]
mode = "{mode}"
"""


def read_outputs(out):
    with open(out / "samples.csv") as fh:
        csv_text = fh.read()
    with open(out / "summary.json") as fh:
        summary = json.load(fh)
    return csv_text, summary


# ---------------------------------------------------------------------------
# config validation


@pytest.mark.parametrize(
    "raw",
    [
        {},
        {"kind": "nope", "n_samples": 1, "grid": {"d": [2], "s": [1]}},
        {"kind": "spectral", "n_samples": 0, "grid": {"d": [2], "s": [1]}, "params": {"scaling": "sC"}},
        {"kind": "spectral", "n_samples": 2, "grid": {"d": [0], "s": [1]}, "params": {"scaling": "sC"}},
        {"kind": "spectral", "n_samples": 2, "grid": {"d": [2]}, "params": {"scaling": "sC"}},
        {"kind": "spectral", "n_samples": 2, "grid": {"d": [2], "s": [1]}, "params": {"scaling": "bad"}},
        {"kind": "spectral", "n_samples": 2, "grid": {"d": [2], "s": [1]}},
        {"kind": "spectral", "n_samples": 2, "seed": -1, "grid": {"d": [2], "s": [1]}, "params": {"scaling": "sC"}},
        {"kind": "ppt-scan", "n_samples": 2, "grid": {"d": [2], "s": [1]}, "params": {"family": "XX"}},
        {"kind": "ppt-scan", "n_samples": 2, "grid": {"d": [2], "s": {"rule": "cubic"}}, "params": {"family": "UU"}},
        {"kind": "moment-oracle", "n_samples": 2, "grid": {"d": [2], "s": [1]}, "params": {"targets": []}},
        {"kind": "lambda-histogram", "n_samples": 2, "grid": {"d": [2], "s": [1]}, "params": {"which": "l1"}},
        {"kind": "ppt2-sweep", "n_samples": 2, "grid": {"d": [2], "s": [1]}, "params": {"mode": "x"}},
        {
            "kind": "spectral",
            "n_samples": 2,
            "grid": {"d": [2], "s": [1]},
            "params": {"scaling": "sC"},
            "tolerances": {"z": -1},
        },
    ],
)
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_grid_rules():
    cfg = parse_config(
        {"kind": "spectral", "n_samples": 1, "grid": {"d": [200], "s": {"rule": "linear", "c": [1, 9]}},
         "params": {"scaling": "sC"}}
    )
    assert [pt.s for pt in cfg.grid] == [200, 1800]
    cfg = parse_config(
        {"kind": "ppt-scan", "n_samples": 1, "grid": {"d": [100, 30], "s": {"rule": "power", "t": [0, 0.5, 1.3]}},
         "params": {"family": "DUC"}}
    )
    assert [(pt.d, pt.s) for pt in cfg.grid] == [
        (100, 1), (100, 10), (100, 399), (30, 1), (30, 6), (30, math.ceil(30**1.3)),
    ]
    assert cfg.params["families"] == ["DUC"]


def test_cli_overrides_take_precedence(tmp_path):
    from chanlab.experiments.config import load_config

    path = write(tmp_path, HIST.format(which="lambda1"))
    cfg = load_config(path, seed=99, threads=3, output="x")
    assert (cfg.seed, cfg.threads, cfg.output) == (99, 3, "x")


def test_exit_code_config_error(tmp_path):
    assert main(["histogram", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG
    bad = write(tmp_path, "kind = [unclosed")
    assert main(["histogram", "--config", bad]) == EXIT_CONFIG
    # a valid config under the wrong subcommand
    good = write(tmp_path, HIST.format(which="lambda1"))
    assert main(["spectral", "--config", good]) == EXIT_CONFIG
    assert main(["oracle", "--target", "lambda1", "--d", "3"]) == EXIT_CONFIG
    assert main(["oracle", "--target", "lambda1", "--d", "1", "--s", "1", "--p", "3"]) == EXIT_CONFIG


# ---------------------------------------------------------------------------
# runs and outputs


def test_histogram_run_and_rerun_is_byte_identical(tmp_path):
    path = write(tmp_path, HIST.format(which="lambda1"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["histogram", "--config", path, "--out", str(a)]) == EXIT_OK
    assert main(["histogram", "--config", path, "--out", str(b)]) == EXIT_OK
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    csv_text, summary = read_outputs(a)
    assert csv_text.splitlines()[0] == "d,s,rule,sample,value,scaled"
    assert len(csv_text.splitlines()) == 1 + 2 * 40
    assert summary["seed"] == 5 and summary["schema"] == 1
    assert summary["points"][1]["reference"]["moments"][:2] == [3.0, 12.0]
    c = tmp_path / "c"
    assert main(["histogram", "--config", path, "--out", str(c), "--seed", "6"]) == EXIT_OK
    assert (c / "samples.csv").read_bytes() != (a / "samples.csv").read_bytes()


@pytest.mark.parametrize("which", ["lambda1", "lambda2", "lambda3"])
def test_histogram_values_match_direct_sampling(which):
    cfg = parse_config(
        {"kind": "lambda-histogram", "seed": 11, "n_samples": 7, "grid": {"d": [3], "s": [1, 4]},
         "params": {"which": which}}
    )
    res = run(cfg)
    i = int(which[-1]) - 1
    for g, s in enumerate([1, 4]):
        V = sample_isometry_batch(3, s, 11, [stream_index(g, k) for k in range(7)])
        expected = lambdas_of_blocks(V.reshape(7, s, 3, 3))[i]
        got = np.array([r[4] for r in res.records if r[1] == s])
        assert np.allclose(got, expected, atol=1e-12)
        assert np.allclose([r[5] for r in res.records if r[1] == s], s * expected, atol=1e-12)


def test_thread_count_does_not_change_output(tmp_path):
    for text, sub in [
        (HIST.format(which="lambda3"), "histogram"),
        (SCAN, "ppt-scan"),
        (SPECTRAL.format(precision="double"), "spectral"),
        (PPT2.format(mode="independent"), "ppt2"),
    ]:
        path = write(tmp_path, text, f"{sub}.toml")
        one, four = tmp_path / f"{sub}1", tmp_path / f"{sub}4"
        assert main([sub, "--config", path, "--out", str(one), "--threads", "1"]) == EXIT_OK
        assert main([sub, "--config", path, "--out", str(four), "--threads", "4"]) == EXIT_OK
        assert (one / "samples.csv").read_bytes() == (four / "samples.csv").read_bytes()


def test_empty_records_give_header_only_csv(tmp_path):
    cfg = parse_config(
        {"kind": "spectral", "seed": 1, "n_samples": 1, "grid": {"d": [2], "s": [1]}, "params": {"scaling": "sC"}}
    )
    emit(cfg, RunResult(["a", "b"], [], {}), str(tmp_path / "e"))
    csv_text, summary = read_outputs(tmp_path / "e")
    assert csv_text == "a,b\n"
    assert summary["n"] == 0 and summary["seed"] == 1 and summary["schema"] == 1


def test_emit_reports_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = parse_config(
        {"kind": "spectral", "seed": 1, "n_samples": 1, "grid": {"d": [2], "s": [1]}, "params": {"scaling": "sC"}}
    )
    with pytest.raises(OSError, match="cannot write"):
        emit(cfg, RunResult(["a"], [], {}), str(blocker / "sub"))


def test_oracle_check_passes_and_gate_failure_exit_code(tmp_path):
    ok = write(tmp_path, ORACLE.format(z=4.0), "ok.toml")
    assert main(["oracle-check", "--config", ok, "--out", str(tmp_path / "ok")]) == EXIT_OK
    _, summary = read_outputs(tmp_path / "ok")
    rows = {(r["s"], r["target"], r["p"]): r for r in summary["rows"]}
    # E[lambda1^2] = 1 + s(d^2 - 1)/((ds)^2 - 1) = 1 + 6/15
    assert rows[(2, "lambda1", 2)]["exact"] == "7/5"
    assert rows[(1, "entryB2", 1)]["exact"] == "1/3"
    assert summary["gate"]["passed"]
    strict = write(tmp_path, ORACLE.format(z=0.0), "strict.toml")
    assert main(["oracle-check", "--config", strict, "--out", str(tmp_path / "strict")]) == EXIT_GATE


def test_oracle_bound_errors_are_reported_per_row():
    cfg = parse_config(
        {"kind": "moment-oracle", "seed": 2, "n_samples": 50, "grid": {"d": [1], "s": [1]},
         "params": {"targets": [{"target": "lambda1", "p": [1, 2]}]}}
    )
    res = run(cfg)
    rows = res.summary["rows"]
    assert Fraction(rows[0]["exact"]) == 1 and rows[0]["z"] == 0.0
    assert rows[1]["exact"] is None and "error" in rows[1]
    assert res.gate_passed


def test_oracle_subcommand(tmp_path, capsys):
    assert main(["oracle", "--target", "lambda1", "--d", "3", "--s", "2", "--p", "2"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["exact"] == "51/35"
    path = write(tmp_path, '[query]\ntarget = "entryA"\nd = 2\ns = 1\np = 2\n')
    target = tmp_path / "q.json"
    assert main(["oracle", "--config", path, "--out", str(target)]) == EXIT_OK
    assert json.loads(target.read_text())["exact"] == "1/3"


def test_spectral_outputs(tmp_path):
    path = write(tmp_path, SPECTRAL.format(precision="single"))
    assert main(["spectral", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_OK
    csv_text, summary = read_outputs(tmp_path / "o")
    spectra = (tmp_path / "o" / "spectra.csv").read_text().splitlines()
    assert len(spectra) == 1 + 2 * 3 * 6
    pts = summary["points"]
    assert [p["s"] for p in pts] == [6, 12]
    for p in pts:
        c = p["s"] / 6
        assert p["reference"]["moments"][:2] == pytest.approx([c, c * c + c])
        assert p["lambda_min_mean"] <= p["mean_of_spectrum"] <= p["lambda_max_mean"]


def replay_polar_draws(seed, index, d, bounds, real):
    gen = RngStream(seed, index).generator()
    parts = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        re, im = _polar_ginibre(gen, (b - a) * d, d, real)
        parts.append(re.astype(float) + 1j * im.astype(float))
    return np.concatenate(parts)


def test_polar_ginibre_moments():
    re, im = _polar_ginibre(np.random.default_rng(0), 400, 500, np.float64)
    z = re + 1j * im
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1, abs=0.01)
    assert z.real.var() == pytest.approx(0.5, abs=0.005)
    assert abs(np.mean(z**2)) < 0.01
    # real part is Gaussian: fourth moment 3 (1/2)^2
    assert np.mean(z.real**4) == pytest.approx(0.75, abs=0.02)


@pytest.mark.parametrize("precision", ["double", "single"])
def test_nested_c_matrices_match_direct_construction(precision):
    d, s_values = 4, [2, 5]
    Cs = nested_c_matrices(d, s_values, RngStream(9, 1), precision=precision, chunk_blocks=3)
    real = np.float64 if precision == "double" else np.float32
    # chunk boundaries: multiples of chunk_blocks together with each s
    G = replay_polar_draws(9, 1, d, [0, 2, 3, 5], real)
    tol = 1e-12 if precision == "double" else 1e-5
    for s in s_values:
        V = orthonormalize(G[: s * d], "qr").reshape(s, d, d)
        C = np.einsum("kij,kji->ij", V, V.conj())
        assert np.max(np.abs(Cs[s] - C)) < tol
        # Tr C = lambda3
        assert np.trace(C).real == pytest.approx(lambdas_of_blocks(V)[2])


def test_ppt_scan_outputs(tmp_path):
    path = write(tmp_path, SCAN)
    assert main(["ppt-scan", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_OK
    _, summary = read_outputs(tmp_path / "o")
    pts = summary["points"]
    assert len(pts) == 2 * 8
    for p in pts:
        lo, hi = p["wilson_95"]
        assert lo <= p["ppt_fraction"] <= hi
    hh = [p for p in pts if p["family"] == "HH"]
    assert hh[0]["reference_fraction"] == pytest.approx(0.5 * (1 + math.erf(1 / math.sqrt(2))))


@pytest.mark.parametrize("mode", ["independent", "equal", "conjugate"])
def test_ppt2_sweep_outputs(tmp_path, mode):
    path = write(tmp_path, PPT2.format(mode=mode))
    assert main(["ppt2", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_OK
    _, summary = read_outputs(tmp_path / "o")
    (p,) = summary["points"]
    assert p["s"] == 16 and p["n"] == 6
    # passing the composition conditions always yields a certificate
    assert p["certified"]["rate"] >= p["ppt2_conditions"]["rate"]


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(1 - hi)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_console_script_runs(tmp_path):
    cmd = [sys.executable, "-m", "chanlab.experiments.cli", "oracle", "--target", "lambda3", "--d", "2",
           "--s", "1", "--p", "2"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exact"] == "4/3"
