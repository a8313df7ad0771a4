import subprocess
import sys

import numpy as np
import pytest

from arbary import io
from arbary.cli import main
from arbary.config import KEY_HELP, RunConfig, load_config, parse_overrides, parse_text
from arbary.errors import InvalidArgument

SMALL_CFG = """\
# tiny settings for fast end-to-end runs
n_bins = 32
samples_per_class = 3
signal_length = 800
model_order = 3
max_outer_iters = 8
n_perturbed = 1
n_parcor = 0
n_gaussian = 0
sinkhorn_tol = 1e-8
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CFG)
    return path


def test_config_defaults_and_round_trip():
    cfg = RunConfig()
    assert (cfg.n_bins, cfg.epsilon, cfg.model_order) == (128, 0.07, 10)
    assert parse_text(cfg.to_text()) == cfg
    assert set(KEY_HELP) == set(RunConfig.__dataclass_fields__)
    assert len(cfg.portfolio()) == 10


def test_config_parsing(cfg_path):
    cfg = load_config(cfg_path)
    assert cfg.n_bins == 32 and cfg.sinkhorn_tol == 1e-8 and cfg.seed == 0
    assert parse_text("[run]\nshared_jitter = false\ndirection = 'centroid||test'\n").shared_jitter is False
    assert parse_overrides({"seed": "18446744073709551615"}).seed == 2**64 - 1


@pytest.mark.parametrize(
    "text",
    ["bogus = 1", "n_bins = 1", "epsilon = 0", "n_bins = 3.5", "armijo_shrink = 1.0", "no equals sign", "seed = 1\nseed = 2", "shared_jitter = maybe"],
)
def test_config_rejects(text):
    with pytest.raises(InvalidArgument):
        parse_text(text)


def test_portfolio_seeds_follow_root():
    a, b = RunConfig(seed=1).portfolio(), RunConfig(seed=2).portfolio()
    assert [s.kind for s in a] == [s.kind for s in b]
    assert all(x.seed != y.seed for x, y in zip(a, b))


def run(argv):
    return main([str(a) for a in argv])


def test_help_documents_every_key():
    for sub in ("synth", "barycenter", "sweep", "classify", "fit"):
        out = subprocess.run([sys.executable, "-m", "arbary.cli", sub, "--help"], capture_output=True, text=True)
        assert out.returncode == 0
        for key in KEY_HELP:
            assert key in out.stdout


def test_exit_codes(tmp_path, cfg_path, capsys):
    assert run(["synth", "--set", "nope=1"]) == 2
    assert run(["synth", "--config", tmp_path / "missing.cfg"]) == 2
    with pytest.raises(SystemExit) as info:
        run(["frobnicate"])
    assert info.value.code == 2
    assert run(["fit", tmp_path / "missing.json", "--out-dir", tmp_path]) == 4
    (tmp_path / "bad.json").write_text("{not json")
    assert run(["fit", tmp_path / "bad.json", "--out-dir", tmp_path]) == 4
    out = tmp_path / "o"
    assert run(["synth", "--config", cfg_path, "--out-dir", out]) == 0
    data = out / "synth_classes.json"
    assert run(["classify", data, data, "--config", cfg_path, "--out-dir", out]) == 2
    assert run(["classify", data, data, "--methods", "L2,XX", "--allow-same", "--out-dir", out]) == 2
    assert run(["sweep", data, "--orders", "a-b", "--out-dir", out]) == 2
    # a Sinkhorn budget far too small for the tolerance
    assert run(["barycenter", data, "--no-otp", "--config", cfg_path, "--out-dir", out, "--set", "sinkhorn_max_iters=2", "--set", "sinkhorn_tol=1e-15"]) == 3


def _snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_synth_determinism(tmp_path, cfg_path):
    for d in ("a", "b"):
        assert run(["synth", "--config", cfg_path, "--seed", 4, "--out-dir", tmp_path / d]) == 0
    assert _snapshot(tmp_path / "a") == _snapshot(tmp_path / "b")
    data = io.read_set_json(tmp_path / "a" / "synth_classes.json")
    assert len(data) == 15


def test_barycenter_command(tmp_path, cfg_path):
    assert run(["synth", "--kind", "ar", "--config", cfg_path, "--set", "n_targets=3", "--set", "target_order=4", "--out-dir", tmp_path]) == 0
    assert run(["barycenter", tmp_path / "synth_ar.json", "--config", cfg_path, "--out-dir", tmp_path]) == 0
    cols = io.read_columns_csv(tmp_path / "barycenter.csv")
    assert list(cols) == ["omega", "mean", "otbc", "otp"]
    for name in ("mean", "otbc", "otp"):
        assert np.all(cols[name] >= 0) and abs(cols[name].sum() - 1) <= 1e-8
    costs = (tmp_path / "barycenter_cost.csv").read_text().splitlines()
    assert costs[0] == "method,objective" and [c.split(",")[0] for c in costs[1:]] == ["mean", "otbc", "otp"]


def test_barycenter_two_spikes(tmp_path, cfg_path):
    import json

    n = 32
    w0 = 4  # bins from DC, so +-pi/4 with a unique circular midpoint at 0
    a, b = np.zeros(n), np.zeros(n)
    a[n // 2 + w0], b[n // 2 - w0] = 1.0, 1.0
    (tmp_path / "spikes.json").write_text(json.dumps({"n_bins": n, "labels": ["x", "x"], "psds": [a.tolist(), b.tolist()]}))
    assert run(["barycenter", tmp_path / "spikes.json", "--no-otp", "--config", cfg_path, "--out-dir", tmp_path]) == 0
    cols = io.read_columns_csv(tmp_path / "barycenter.csv")
    omega, mean, otbc = cols["omega"], cols["mean"], cols["otbc"]
    assert omega[np.argmax(otbc)] == 0.0
    assert otbc[np.abs(omega) < 0.5].sum() > 0.9
    assert mean[n // 2 + w0] == mean[n // 2 - w0] == 0.5


def test_sweep_and_fit(tmp_path, cfg_path):
    out = tmp_path / "s"
    assert run(["synth", "--kind", "ar", "--config", cfg_path, "--set", "n_targets=2", "--set", "target_order=4", "--out-dir", out]) == 0
    data = out / "synth_ar.json"
    for d in ("r1", "r2"):
        assert run(["sweep", data, "--orders", "2-4", "--config", cfg_path, "--out-dir", tmp_path / d]) == 0
    assert _snapshot(tmp_path / "r1") == _snapshot(tmp_path / "r2")
    cols = io.read_columns_csv(tmp_path / "r1" / "sweep.csv")
    assert list(cols["P"]) == [2, 3, 4]
    assert np.all(cols["cost_otp"] <= cols["cost_ywinit"])
    assert np.all(cols["cost_otp"] >= cols["cost_otbc"] - 1e-8)
    assert run(["fit", data, "--config", cfg_path, "--out-dir", out]) == 0
    import json

    doc = json.loads((out / "fit.json").read_text())
    assert doc["schema"] == "arbary/fit/1" and doc["suboptimality_gap"] >= -1e-8


def test_classify_determinism(tmp_path, cfg_path):
    assert run(["synth", "--config", cfg_path, "--seed", 0, "--out-dir", tmp_path / "d"]) == 0
    assert run(["synth", "--config", cfg_path, "--seed", 1, "--out-dir", tmp_path / "d", "--output", "test.json"]) == 0
    train, test = tmp_path / "d" / "synth_classes.json", tmp_path / "d" / "test.json"
    for d in ("a", "b"):
        assert run(["classify", train, test, "--config", cfg_path, "--out-dir", tmp_path / d]) == 0
    snap = _snapshot(tmp_path / "a")
    assert snap == _snapshot(tmp_path / "b")
    assert sorted(snap) == sorted(["metrics.json", "table.txt"] + [f"confusion_{m}.csv" for m in ("IS", "KL", "L2", "OT-BC", "OT-P")])
