import json
import os

import pytest

from latflow import cli
from latflow.config import (
    ExperimentConfig,
    canonical_json,
    config_hash,
    report,
    run,
)
from latflow.errors import ConfigInvalid, MissingArtifact


def _cfg(kind, params, out_dir, seed=0, precision=128):
    return ExperimentConfig(kind=kind, params=params, precision_bits=precision,
                            seed=seed, out_dir=str(out_dir))


# ---------------------------------------------------------------------------
# config plumbing


def test_canonical_json_sorts_and_normalizes():
    a = canonical_json({"b": 1, "a": [1.5, 2]})
    b = canonical_json({"a": [1.5, 2.0], "b": 1})
    assert a == b
    assert a == '{"a":[1.5,2],"b":1}'


def test_config_round_trip_and_hash_stability(tmp_path):
    cfg = _cfg("exponent", {"y": "phi", "q_max": 100}, tmp_path)
    back = ExperimentConfig.from_dict(cfg.to_dict(), out_dir=str(tmp_path))
    assert back.to_dict() == cfg.to_dict()
    assert config_hash(back) == config_hash(cfg)
    other = _cfg("exponent", {"y": "phi", "q_max": 101}, tmp_path)
    assert config_hash(other) != config_hash(cfg)


def test_validation_errors(tmp_path):
    with pytest.raises(ConfigInvalid) as err:
        _cfg("singular", {"y": "phi", "c_grid": [], "n_max": 100}, tmp_path).validate()
    assert "params.c_grid" in err.value.field_errors
    with pytest.raises(ConfigInvalid):
        _cfg("nope", {}, tmp_path).validate()
    with pytest.raises(ConfigInvalid) as err:
        _cfg("exponent", {"y": "phi"}, tmp_path).validate()
    assert "params.q_max" in err.value.field_errors
    with pytest.raises(ConfigInvalid):
        _cfg("exponent", {"y": "phi", "q_max": -5}, tmp_path).validate()


def test_run_is_reproducible_and_ledger_appends(tmp_path):
    cfg = _cfg("exponent", {"y": "phi", "q_max": 2000}, tmp_path, seed=7)
    rec1 = run(cfg)
    contents1 = {p: open(p, "rb").read() for p in rec1.artifacts}
    rec2 = run(_cfg("exponent", {"y": "phi", "q_max": 2000}, tmp_path, seed=7))
    assert rec1.config_hash == rec2.config_hash
    for p in rec2.artifacts:
        assert open(p, "rb").read() == contents1[p]
    ledger = os.path.join(str(tmp_path), "runs.jsonl")
    lines = open(ledger).read().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["config_hash"] == rec1.config_hash


def test_report_mentions_verdicts_and_artifacts(tmp_path):
    rec = run(_cfg("kg-sum", {"m": 1, "n": 1, "k_max": 10**4,
                              "phi": {"kind": "power", "c": 1.0, "exponent": -2.0}},
                   tmp_path))
    text = report(rec)
    assert "kg-sum" in text and "diagnostic" in text
    os.remove(rec.artifacts[0])
    with pytest.raises(MissingArtifact):
        report(rec)


def test_orbit_artifact_columns(tmp_path):
    rec = run(_cfg("orbit", {"y": "1/3", "t_max": 8.0}, tmp_path))
    header = open(rec.artifacts[0]).read().splitlines()[0].split(",")
    assert header == ["t_1", "t_2", "delta", "certified", "witness"]
    assert rec.exit_code == 0


def test_construct_singular_artifact(tmp_path):
    rec = run(_cfg("construct-singular", {"s": 1, "n": 2, "levels": 2}, tmp_path))
    payload = json.loads(open(rec.artifacts[0]).read())
    assert payload["witnesses"] and payload["a0"] and payload["a_prime"]
    assert not payload["trivial"]


def test_dichotomy_runner_with_manifold_file(tmp_path):
    from latflow import manifolds as man

    spec_path = tmp_path / "curve.json"
    spec_path.write_text(json.dumps(man.mahler_curve(2).to_json()))
    rec = run(_cfg("dichotomy", {"manifold": str(spec_path), "count": 4,
                                 "q_max": 400}, tmp_path, seed=3))
    assert rec.verdicts["omega_median"] is not None


# ---------------------------------------------------------------------------
# CLI surface


def test_cli_exponent(tmp_path, capsys):
    code = cli.main(["exponent", "--Y", "phi", "--qmax", "3000",
                     "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "omega" in out


def test_cli_orbit_shape_mismatch_is_config_error(tmp_path):
    code = cli.main(["orbit", "--Y", "phi", "--m", "2", "--tmax", "6",
                     "--out", str(tmp_path)])
    assert code == 2


def test_y_json_file_input(tmp_path):
    y_path = tmp_path / "y.json"
    y_path.write_text(json.dumps({"m": 1, "n": 2, "entries": [["1/3", "2/5"]]}))
    rec = run(_cfg("approx", {"y": str(y_path), "q_max": 50}, tmp_path))
    assert rec.verdicts["rational"] is True


def test_cli_di(tmp_path, capsys):
    code = cli.main(["di", "--Y", "phi", "--epsilon", "0.9", "--tmax", "6",
                     "--out", str(tmp_path)])
    assert code == 0
    assert "in_di_up_to_horizon" in capsys.readouterr().out


def test_cli_config_file_and_bad_grid(tmp_path):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"kind": "singular",
                                    "params": {"y": "phi", "c_grid": [], "n_max": 100}}))
    code = cli.main(["singular", "--Y", "phi", "--nmax", "10",
                     "--config", str(cfg_path), "--out", str(tmp_path)])
    assert code == 2


def test_cli_gamma_and_xval(tmp_path, capsys):
    code = cli.main(["gamma", "--Y", "1/3", "--tmax", "12", "--out", str(tmp_path)])
    assert code == 0
    code = cli.main(["xval", "--Y", "1/3", "--qmax", "100", "--horizon", "12",
                     "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "verdicts_agree" in out
