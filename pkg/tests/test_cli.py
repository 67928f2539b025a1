import json

import numpy as np
import pytest

from urlr import io
from urlr.cli import main
from urlr.sweep import CURVE_HEADER


@pytest.fixture
def fixture_a(tmp_path):
    assert main(["fixtures", "--variant", "a", "--out", str(tmp_path / "a")]) == 0
    return tmp_path / "a"


def read_lines(path):
    return path.read_text().splitlines()


def test_fixtures_writes_all_variants(tmp_path):
    assert main(["fixtures", "--out", str(tmp_path)]) == 0
    for v in "abc":
        for name in ("labels.csv", "features.csv", "graph.csv", "truth.csv", "theta.csv"):
            assert (tmp_path / v / name).exists()
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "fixtures"


def test_fit_fixture_a_prunes_wrong_majority(fixture_a, tmp_path):
    out = tmp_path / "fit"
    code = main(["fit", str(fixture_a / "labels.csv"), str(fixture_a / "features.csv"),
                 "--method", "urlr", "--prune", "50", "--out", str(out)])
    assert code == 0
    pruned = read_lines(out / "pruned.csv")
    assert pruned[0] == "edge_index,src,dst,weight"
    assert any(line.split(",")[1:3] == ["0", "4"] for line in pruned[1:])
    result = json.loads((out / "result.json").read_text())
    assert list(result) == ["method", "config", "model_file", "pruned_edges", "diagnostics", "metrics"]
    assert [0, 4] in result["pruned_edges"]
    assert io.read_model(out / "model.txt").dim == 1
    assert read_lines(out / "path.csv")[0] == ",".join(io.PATH_HEADER)


def test_fit_is_byte_identical(fixture_a, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        main(["fit", str(fixture_a / "labels.csv"), str(fixture_a / "features.csv"),
              "--out", str(out)])
        outs.append(out)
    for name in ("model.txt", "pruned.csv", "path.csv", "result.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    m0, m1 = (json.loads((o / "manifest.json").read_text()) for o in outs)
    m0.pop("wall_clock_seconds")
    m1.pop("wall_clock_seconds")
    assert m0 == m1
    assert len(m0["inputs"]["labels"]["sha256"]) == 64


def test_raw_with_prune_warns(fixture_a, tmp_path, caplog):
    code = main(["fit", str(fixture_a / "labels.csv"), str(fixture_a / "features.csv"),
                 "--method", "raw", "--prune", "20", "--out", str(tmp_path / "raw")])
    assert code == 0
    assert "ignored" in caplog.text
    assert read_lines(tmp_path / "raw" / "pruned.csv") == ["edge_index,src,dst,weight"]


def test_missing_feature_row(tmp_path, capsys):
    (tmp_path / "l.csv").write_text("preferred,other\n0,1\n1,7\n")
    (tmp_path / "f.csv").write_text("id,f0\n0,1.0\n1,2.0\n")
    assert main(["fit", str(tmp_path / "l.csv"), str(tmp_path / "f.csv"),
                 "--out", str(tmp_path / "o")]) == 1
    assert "node 7" in capsys.readouterr().err


def test_config_file_with_flag_override(fixture_a, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"method": "raw", "prune_percent": 30, "n_lambdas": 20}))
    main(["fit", str(fixture_a / "labels.csv"), str(fixture_a / "features.csv"),
          "--config", str(cfg), "--method", "urlr", "--out", str(tmp_path / "o")])
    result = json.loads((tmp_path / "o" / "result.json").read_text())
    assert result["method"] == "urlr"
    assert result["config"]["prune_percent"] == 30.0 and result["config"]["n_lambdas"] == 20
    cfg.write_text(json.dumps({"lambda": 3}))
    assert main(["fit", str(fixture_a / "labels.csv"), str(fixture_a / "features.csv"),
                 "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 1


def test_predict_examples(tmp_path):
    io.write_features(tmp_path / "f.csv", np.array([[3.0], [7.0]]))
    (tmp_path / "m.txt").write_text("mu 0.001\ndim 1\nbeta\n1.0\n")
    assert main(["predict", str(tmp_path / "m.txt"), str(tmp_path / "f.csv"),
                 "--out", str(tmp_path / "s.csv")]) == 0
    assert read_lines(tmp_path / "s.csv") == ["id,score", "0,3.0", "1,7.0"]
    io.write_features(tmp_path / "f2.csv", np.ones((2, 2)))
    assert main(["predict", str(tmp_path / "m.txt"), str(tmp_path / "f2.csv"),
                 "--out", str(tmp_path / "s2.csv")]) == 1


def test_eval_scores_and_path(fixture_a, tmp_path):
    out = tmp_path / "fit"
    main(["fit", str(fixture_a / "labels.csv"), str(fixture_a / "features.csv"), "--out", str(out)])
    main(["predict", str(out / "model.txt"), str(fixture_a / "features.csv"),
          "--out", str(tmp_path / "s.csv")])
    assert main(["eval", "--scores", str(tmp_path / "s.csv"), "--truth-order",
                 str(fixture_a / "theta.csv"), "--truth-outliers", str(fixture_a / "truth.csv"),
                 "--path", str(out / "path.csv"), "--method", "urlr",
                 "--out", str(tmp_path / "m.csv")]) == 0
    header, row = read_lines(tmp_path / "m.csv")
    assert header == "method,seed,p,error_rate,onr,kendall_distance,auc"
    fields = row.split(",")
    assert fields[0] == "urlr" and float(fields[5]) == 0.0 and 0 <= float(fields[6]) <= 1


def test_eval_item_mismatch(tmp_path):
    io.write_scores(tmp_path / "a.csv", [1.0, 2.0])
    io.write_scores(tmp_path / "b.csv", [1.0, 2.0, 3.0])
    assert main(["eval", "--scores", str(tmp_path / "a.csv"), "--truth-order",
                 str(tmp_path / "b.csv"), "--out", str(tmp_path / "m.csv")]) == 1
    assert main(["eval", "--out", str(tmp_path / "m.csv")]) == 1


def test_synth_is_byte_identical(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_nodes": 12, "graph": "random_pairs", "n_pairs": 30,
                                "flip_prob": 0.2, "n_test": 5}))
    for k in range(2):
        assert main(["synth", "--spec", str(spec), "--seed", "3", "--out", str(tmp_path / f"s{k}")]) == 0
    for name in ("labels.csv", "features.csv", "graph.csv", "truth.csv", "theta.csv",
                 "test_features.csv", "test_theta.csv"):
        assert (tmp_path / "s0" / name).read_bytes() == (tmp_path / "s1" / name).read_bytes()
    assert json.loads((tmp_path / "s0" / "manifest.json").read_text())["seed"] == 3


def test_sweep_outputs(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_nodes": 15, "feature_dim": 3, "flip_prob": 0.2}))
    out = tmp_path / "sw"
    assert main(["sweep", "--spec", str(spec), "--axis", "prune", "--values", "0,20",
                 "--methods", "urlr,raw", "--seeds", "2", "--out", str(out)]) == 0
    curve = read_lines(out / "curve_prune.csv")
    assert curve[0] == ",".join(CURVE_HEADER)
    # 2 methods x 2 seeds x 2 values, plus mean and std rows per (method, value)
    assert len(curve) == 1 + 8 + 8
    metrics = read_lines(out / "metrics.csv")
    assert metrics[0] == ",".join(io.METRICS_HEADER) and len(metrics) == 9


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["fit"])
    assert info.value.code == 1
    assert main(["sweep", "--axis", "prune", "--values", "a,b", "--out", str(tmp_path)]) == 1
    assert main(["synth", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1


def test_numerical_failure_exit_2(tmp_path):
    g = tmp_path / "l.csv"
    g.write_text("preferred,other\n" + "".join(f"{i},{j}\n" for i in range(6) for j in range(6)
                                              if i < j))
    rng = np.random.default_rng(0)
    io.write_features(tmp_path / "f.csv", rng.standard_normal((6, 2)))
    code = main(["fit", str(g), str(tmp_path / "f.csv"), "--max-sweeps", "1",
                 "--cd-tolerance", "1e-300", "--out", str(tmp_path / "o")])
    assert code == 2
