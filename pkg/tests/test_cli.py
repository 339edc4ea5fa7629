import json

import pytest

from hsmc import cli
from hsmc.bench import run_oracle_check
from hsmc.clique import SolveReport, solve_max_clique, Clique


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def scene(tmp_path, capsys):
    d = tmp_path / "scene"
    assert run(capsys, "synth", "--inliers", 20, "--outliers", 80, "--classes", 3, "--seed", 7, "--out", d)[0] == 0
    return d


def test_synth_manifest_echoes_spec(scene):
    spec = json.loads((scene / "manifest.json").read_text())["spec"]
    assert (spec["num_inliers"], spec["num_outliers"], spec["num_classes"], spec["rng_seed"]) == (20, 80, 3, 7)


def test_synth_is_byte_identical(scene, tmp_path, capsys):
    other = tmp_path / "again"
    run(capsys, "synth", "--inliers", 20, "--outliers", 80, "--classes", 3, "--seed", 7, "--out", other)
    for f in sorted(p.name for p in scene.iterdir()):
        assert (scene / f).read_bytes() == (other / f).read_bytes()


def test_synth_rejects_two_inliers(tmp_path, capsys):
    code, _, err = run(capsys, "synth", "--inliers", 2, "--out", tmp_path / "x")
    assert code == 2 and "at least 3" in err


def _field(line, key):
    return float(line.split(f"{key}=")[1].split()[0])


def test_register_scene(scene, tmp_path, capsys):
    code, out, _ = run(capsys, "register", scene, "--out", tmp_path / "r.json")
    assert code == 0
    assert _field(out, "ang_err_deg") < 1.0
    assert json.loads((tmp_path / "r.json").read_text())["angular_error_deg"] < 1.0


def test_register_flat_uses_more_nodes(scene, capsys):
    _, hier, _ = run(capsys, "register", scene)
    code, flat, _ = run(capsys, "register", scene, "--flat")
    assert code == 0 and "method=flat" in flat
    assert _field(flat, "ang_err_deg") < 1.0
    assert _field(flat, "nodes") > _field(hier, "nodes")


def test_register_without_labels_falls_back(scene, capsys):
    for name in ("source.label", "target.label"):
        (scene / name).unlink()
    code, out, err = run(capsys, "register", scene)
    assert code == 0 and "method=flat" in out and "warning" in err


def test_register_explicit_files(scene, capsys):
    code, out, _ = run(capsys, "register", "--source", scene / "source.bin", "--target", scene / "target.bin",
                       "--source-labels", scene / "source.label", "--target-labels", scene / "target.label",
                       "--correspondences", scene / "correspondences.csv",
                       "--ground-truth", scene / "ground_truth.json")
    assert code == 0 and _field(out, "ang_err_deg") < 1.0


def test_register_missing_inputs(capsys):
    assert run(capsys, "register")[0] == 2


def test_config_precedence(tmp_path, monkeypatch):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"epsilon": 0.3, "threshold_factor": 3.0}))
    monkeypatch.setenv(cli.CONFIG_ENV, str(cfg_file))
    args = cli.build_parser().parse_args(["register", "x", "--epsilon", "0.2"])
    cfg = cli.load_config(args)
    assert cfg.epsilon == 0.2 and cfg.threshold_factor == 3.0 and cfg.ransac.epsilon == 0.2
    monkeypatch.delenv(cli.CONFIG_ENV)
    assert cli.load_config(cli.build_parser().parse_args(["register", "x"])).epsilon == 0.1


def test_bad_config_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "register", tmp_path, "--config", bad)[0] == 2


def test_bench_single_cell(tmp_path, capsys):
    out = tmp_path / "b.json"
    code, text, _ = run(capsys, "bench", "--seeds", 2, "--methods", "hsmc", "--out", out)
    assert code == 0
    rows = [l for l in text.splitlines() if l.strip() and not l.startswith(("-", "  rho"))]
    assert len(rows) == 1
    assert len(json.loads(out.read_text())["cells"]) == 1


def test_bench_deterministic(tmp_path, capsys):
    from hsmc.bench import deterministic_view

    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "bench", "--seeds", 5, "--correspondences", 100, "--out", a)
    run(capsys, "bench", "--seeds", 5, "--correspondences", 100, "--workers", 2, "--out", b)
    ra, rb = (deterministic_view(json.loads(p.read_text())) for p in (a, b))
    assert ra == rb


def test_oracle_check_default(capsys):
    code, out, _ = run(capsys, "oracle-check")
    assert code == 0 and "200/200" in out


def test_oracle_check_trivial(capsys):
    assert run(capsys, "oracle-check", "--n", 5, "--p", 0.0, "--graphs", 10)[0] == 0


def test_oracle_check_catches_corrupted_solver(capsys):
    def broken(g):
        r = solve_max_clique(g)
        return SolveReport(Clique(r.best_clique.vertices[:-1]), r.nodes_expanded, 0, False, True)

    args = cli.build_parser().parse_args(["oracle-check", "--graphs", "5"])
    assert cli.cmd_oracle_check(args, solver=broken) == 1
    out = capsys.readouterr().out
    assert "mismatch on graph 0" in out
    assert len(run_oracle_check(5, solver=broken)) == 5


def test_oracle_check_bad_range(capsys):
    assert run(capsys, "oracle-check", "--n", 40)[0] == 2
