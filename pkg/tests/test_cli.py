import json
import os

import pytest

from bridgelab.cli import main
from bridgelab.config import config_from_echo, parse_config
from bridgelab.errors import ConfigError

BASE = """
[model]
p0 = 1
rho0 = 1.0
design = standardized-orthonormal
noise = gaussian
sigma = 1.0

[penalty]
family = bridge
gamma = 0.5

[schedule]
c = 1.0
e = 0.6

[mc]
n = 100
n_grid = 50, 100
replications = 100
seed = 424242

[output]
dir = out
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(BASE)
    return str(path)


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE.replace("gamma = 0.5", "gama = 0.5"))
    code, _, err = _run(capsys, ["estimate", "--config", str(path)])
    assert code == 2
    assert "gama" in err


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE + "\n[plots]\nkind = fancy\n")
    with pytest.raises(ConfigError, match="plots"):
        parse_config(str(path))


def test_missing_required_fields(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[model]\np0 = 1\n\n[penalty]\nfamily = bridge\ngamma = 0.5\n")
    with pytest.raises(ConfigError, match="rho0"):
        parse_config(str(path))


def test_config_echo_round_trip(cfg_path):
    ec = parse_config(cfg_path)
    again = config_from_echo(ec.raw)
    assert again.mc == ec.mc
    assert again.n_single == ec.n_single


def test_invalid_value_messages_name_the_field(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE.replace("sigma = 1.0", "sigma = abc"))
    with pytest.raises(ConfigError, match=r"\[model\] sigma"):
        parse_config(str(path))


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def test_estimate_noiseless_recovers_truth(tmp_path, capsys):
    path = tmp_path / "exp.cfg"
    path.write_text(BASE.replace("sigma = 1.0", "sigma = 0.0")
                        .replace("family = bridge", "family = none")
                        .replace("gamma = 0.5", ""))
    code, out, _ = _run(capsys, ["estimate", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["theta_hat"] == [0.0, 1.0]
    assert payload["exact_zero_flags"] == [True]
    assert payload["converged"] is True


def test_estimate_byte_identical(cfg_path, capsys):
    code1, out1, _ = _run(capsys, ["estimate", "--config", cfg_path])
    code2, out2, _ = _run(capsys, ["estimate", "--config", cfg_path])
    assert code1 == code2 == 0
    assert out1 == out2


def test_estimate_seed_override_changes_data(cfg_path, capsys):
    _, out1, _ = _run(capsys, ["estimate", "--config", cfg_path])
    _, out2, _ = _run(capsys, ["estimate", "--config", cfg_path, "--seed", "7"])
    assert out1 != out2


def test_estimate_with_external_responses(tmp_path, capsys):
    import numpy as np

    from bridgelab.model import DesignSpec, generate_design
    from bridgelab.montecarlo import design_seed

    X = generate_design(DesignSpec(kind="standardized-orthonormal", p=2), 100,
                        design_seed(424242, 100))
    Y = X @ np.array([0.0, 1.0])  # noiseless responses from the configured truth
    resp = tmp_path / "responses.csv"
    resp.write_text("\n".join(repr(float(v)) for v in Y) + "\n")
    text = BASE.replace("family = bridge", "family = none").replace("gamma = 0.5", "")
    text = text.replace("sigma = 1.0", f"sigma = 1.0\nresponse_file = {resp}")
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    code, out, _ = _run(capsys, ["estimate", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["theta_hat"] == [0.0, 1.0]


# ---------------------------------------------------------------------------
# mc
# ---------------------------------------------------------------------------


def test_mc_emits_three_files(cfg_path, tmp_path, capsys):
    out_dir = str(tmp_path / "out")
    code, _, _ = _run(capsys, ["mc", "--config", cfg_path, "--out", out_dir])
    assert code == 0
    for name in ("replications.csv", "tail.csv", "summary.json"):
        assert os.path.exists(os.path.join(out_dir, name))

    lines = open(os.path.join(out_dir, "replications.csv")).read().splitlines()
    assert lines[0].startswith("n,rep,seed,theta_hat_1,theta_hat_2,zero_flag_1,objective,converged")
    assert len(lines) == 1 + 2 * 100

    tail_lines = open(os.path.join(out_dir, "tail.csv")).read().splitlines()
    assert tail_lines[0] == "n,r,p_hat,se,rL_phat_L2,rL_phat_L4"
    by_n = {}
    for row in tail_lines[1:]:
        cells = row.split(",")
        by_n.setdefault(cells[0], []).append(float(cells[2]))
    for vals in by_n.values():
        assert all(b <= a for a, b in zip(vals, vals[1:]))  # survival non-increasing

    summary = json.loads(open(os.path.join(out_dir, "summary.json")).read())
    for key in ("config", "selection_frequency", "moments", "limit_distance",
                "pldi_probe", "warnings"):
        assert key in summary
    for entry in summary["selection_frequency"].values():
        assert 0.0 <= entry["frequency"] <= 1.0

    ec = parse_config(cfg_path)
    assert config_from_echo(summary["config"]).mc == ec.mc


def test_mc_byte_identical_across_runs(cfg_path, tmp_path, capsys):
    d1, d2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert _run(capsys, ["mc", "--config", cfg_path, "--out", d1])[0] == 0
    assert _run(capsys, ["mc", "--config", cfg_path, "--out", d2])[0] == 0
    for name in ("replications.csv", "tail.csv", "summary.json"):
        a = open(os.path.join(d1, name), "rb").read()
        b = open(os.path.join(d2, name), "rb").read()
        assert a == b


def test_mc_io_error_exit_code(cfg_path, tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("a file, not a directory")
    code, _, err = _run(capsys, ["mc", "--config", cfg_path, "--out", str(blocker)])
    assert code == 3
    assert "i/o error" in err


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def test_check_bridge_sparse_slow(cfg_path, capsys):
    code, out, _ = _run(capsys, ["check", "--config", cfg_path])
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"]["tag"] == "sparse-slow"
    div = payload["penalty_conditions"]["divergence-lower-bound"]
    assert div["verdict"] == "satisfied"
    assert abs(div["fitted_exponent"] - 0.5) <= 1e-3
    assert "zero-block-tail-bound" in div["required_by"]
    assert payload["design_conditions"]["cross-block-root-n"]["verdict"] == "plausibly-bounded"


def test_check_scad_classification(tmp_path, capsys):
    path = tmp_path / "scad.cfg"
    path.write_text(BASE.replace("family = bridge", "family = scad")
                        .replace("gamma = 0.5", "a = 3.7")
                        .replace("c = 1.0", "c = 1.0")
                        .replace("e = 0.6", "e = -0.25"))
    code, out, _ = _run(capsys, ["check", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    pc = payload["penalty_conditions"]
    assert pc["divergence-lower-bound"]["verdict"] == "not-satisfied"
    assert pc["polynomial-growth-cap"]["verdict"] == "satisfied"
    assert pc["root-n-shift-continuity"]["verdict"] == "satisfied"
    assert pc["root-n-shift-continuity"]["kappa"] == 1


def test_check_unsupported_regime_structured_error(tmp_path, capsys):
    path = tmp_path / "steep.cfg"
    path.write_text(BASE.replace("e = 0.6", "e = 1.5"))
    code, out, _ = _run(capsys, ["check", "--config", str(path)])
    assert code == 4
    payload = json.loads(out)
    assert payload["error"] == "unsupported-regime"


# ---------------------------------------------------------------------------
# limit
# ---------------------------------------------------------------------------


def test_limit_sparse_normal_values(tmp_path, capsys):
    path = tmp_path / "lim.cfg"
    path.write_text(BASE.replace("c = 1.0", "c = 2.0").replace("e = 0.6", "e = 0.5"))
    code, out, _ = _run(capsys, ["limit", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"]["tag"] == "sparse-normal"
    assert payload["bias"][0] == pytest.approx(-0.5)
    assert payload["cov"][0][0] == pytest.approx(1.0)


def test_limit_zero_lambda0_bias_zero(tmp_path, capsys):
    path = tmp_path / "lim0.cfg"
    path.write_text(BASE.replace("e = 0.6", "e = 0.4"))
    code, out, _ = _run(capsys, ["limit", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"]["tag"] == "sparse-normal"
    assert payload["bias"][0] == 0.0


def test_limit_pseudo_true_soft_threshold(tmp_path, capsys):
    text = BASE.replace("p0 = 1", "p0 = 0").replace("gamma = 0.5", "gamma = 1.0")
    text = text.replace("c = 1.0", "c = 1.0").replace("e = 0.6", "e = 1.0")
    path = tmp_path / "pt.cfg"
    path.write_text(text)
    code, out, _ = _run(capsys, ["limit", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"]["tag"] == "pseudo-true"
    assert payload["pseudo_true_point"][0] == pytest.approx(0.5, abs=1e-9)


def test_limit_standard_sampler_moments(tmp_path, capsys):
    text = BASE.replace("p0 = 1", "p0 = 0").replace("gamma = 0.5", "gamma = 2.0")
    text = text.replace("e = 0.6", "e = 0.25")
    path = tmp_path / "std.cfg"
    path.write_text(text)
    code, out, _ = _run(capsys, ["limit", "--config", str(path)])
    assert code == 0
    payload = json.loads(out)
    assert payload["regime"]["tag"] == "standard"
    assert payload["argmin_samples"]["cov"][0][0] == pytest.approx(1.0, rel=0.1)


def test_limit_unsupported_regime_exit4(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE.replace("e = 0.6", "e = 2.0"))
    code, out, _ = _run(capsys, ["limit", "--config", str(path)])
    assert code == 4
