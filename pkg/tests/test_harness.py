"""Persistence and orchestration: profile CSV round-trips, the branch
database, run manifests, declarative pipelines with resume, figure datasets,
and CLI exit codes."""

import json
import math

import numpy as np
import pytest

from nemchannel.analytic import AnalyticEquilibrium
from nemchannel.branchdb import (
    BranchDatabase,
    read_profile_csv,
    write_profile_csv,
)
from nemchannel.bvp import continue_in_G
from nemchannel.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from nemchannel.figures import FIGURE_IDS, reproduce_figure
from nemchannel.grid import GridProfile, uniform_grid
from nemchannel.manifest import RunManifest, config_hash, write_csv
from nemchannel.pipeline import (
    ENV_OUTPUT_ROOT,
    UsageError,
    run_config,
    run_stage,
)

SOLVE_CFG = {
    "stages": [
        {"name": "validate", "kind": "validate-coefficients"},
        {"name": "analytic", "kind": "statics-analytic", "B": 0.3},
        {"name": "solve", "kind": "statics-solve", "G": 2.0, "B": 0.5},
    ]
}


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def test_profile_csv_round_trip(tmp_path):
    z = uniform_grid(101)
    prof = GridProfile(z, np.sin(1.7 * z) + 0.123456789012345678)
    path = tmp_path / "p.csv"
    write_profile_csv(path, prof)
    back = read_profile_csv(path, residual_norm=3.5e-11)
    # 17 significant digits reproduce float64 exactly
    assert np.array_equal(back.z, prof.z)
    assert np.array_equal(back.theta, prof.theta)
    assert back.residual_norm == 3.5e-11
    assert path.read_text().splitlines()[0] == "z,theta"


def test_write_csv_formatting(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["name", "x", "y"],
                     [("alpha", 1.0 / 3.0, None), ("beta", 2, -1.5)])
    lines = path.read_text().splitlines()
    assert lines[0] == "name,x,y"
    assert lines[1].startswith("alpha,0.33333333333333331,")
    assert lines[1].endswith(",")  # None -> empty cell
    assert lines[2] == "beta,2,-1.5"


def test_config_hash_is_canonical():
    a = {"x": 1, "y": [1, 2], "z": {"p": 0.5}}
    b = {"z": {"p": 0.5}, "y": [1, 2], "x": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({**a, "x": 2})
    assert len(config_hash(a)) == 16


# ---------------------------------------------------------------------------
# branch database
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_branch():
    return continue_in_G(AnalyticEquilibrium("I", 0, 0.0, 0.0), 0.5,
                         [0.5, 1.0])


def test_branch_database_store_and_query(tmp_path, short_branch):
    db = BranchDatabase(tmp_path / "db")
    recs = db.add_branch(short_branch)
    assert len(db) == len(short_branch.points) == len(recs)
    hits = db.select(G=1.0)
    assert len(hits) == 1
    assert hits[0].label == "I+0"
    prof = db.load(hits[0])
    assert np.array_equal(prof.theta, short_branch.last.profile.theta)
    assert set(db.profiles_at(1.0, 0.5)) == {"I+0"}

    again = BranchDatabase(tmp_path / "db", create=False)
    assert len(again) == len(db)
    with pytest.raises(FileNotFoundError):
        BranchDatabase(tmp_path / "nothing-here", create=False)


def test_branch_database_verify_detects_tampering(tmp_path, short_branch):
    db = BranchDatabase(tmp_path / "db")
    db.add_branch(short_branch)
    assert db.verify() == []
    victim = db.records[-1]
    prof = db.load(victim)
    prof.theta[3] += 1e-6
    write_profile_csv(db.root / victim.file, prof)
    failures = BranchDatabase(tmp_path / "db").verify()
    assert len(failures) == 1
    assert victim.id in failures[0]


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def test_manifest_stage_bookkeeping(tmp_path):
    cfg = {"stages": [{"name": "s1", "kind": "statics-analytic", "B": 0.3}]}
    man = RunManifest(config=cfg, path=tmp_path / "manifest.json")
    artifact = tmp_path / "out.csv"
    artifact.write_text("x\n1\n")

    assert not man.stage_done("s1")
    man.mark_stage("s1", [artifact], summary={"count": 1})
    assert man.stage_done("s1")
    assert str(artifact) in man.outputs

    back = RunManifest.load(tmp_path / "manifest.json")
    assert back.matches(cfg)
    assert not back.matches({**cfg, "extra": 1})
    assert back.stage_done("s1")
    assert back.stages["s1"]["summary"] == {"count": 1}

    artifact.unlink()
    assert not back.stage_done("s1")

    man.mark_stage("s2", [], status="failed")
    assert not man.stage_done("s2")


# ---------------------------------------------------------------------------
# stages and pipelines
# ---------------------------------------------------------------------------

def test_run_stage_parameter_validation(tmp_path):
    with pytest.raises(UsageError, match="unknown stage kind"):
        run_stage("spectral-dance", {}, tmp_path)
    with pytest.raises(UsageError, match="missing required"):
        run_stage("statics-analytic", {}, tmp_path)
    with pytest.raises(UsageError, match="unknown parameters"):
        run_stage("statics-analytic", {"B": 0.3, "frobnicate": 1}, tmp_path)


def test_run_stage_statics_analytic(tmp_path):
    result = run_stage("statics-analytic", {"B": 0.3}, tmp_path)
    assert result["summary"]["count"] == 16
    eq = (tmp_path / "equilibria.csv").read_text().splitlines()
    assert eq[0] == "family,n,a,b,omega"
    assert len(eq) == 17
    folds = (tmp_path / "folds.csv").read_text().splitlines()
    assert len(folds) == 9  # header + first eight fold values


def test_run_config_end_to_end_resume_and_determinism(tmp_path):
    root = tmp_path / "run"
    man = run_config(SOLVE_CFG, output_root=root)
    assert all(v["status"] == "complete" for v in man.stages.values())
    eq_csv = root / "analytic" / "equilibria.csv"
    prof_csv = root / "solve" / "profile.csv"
    assert eq_csv.exists() and prof_csv.exists()

    # identical configuration into a fresh root: byte-identical artifacts
    root2 = tmp_path / "run2"
    run_config(SOLVE_CFG, output_root=root2)
    assert (root2 / "analytic" / "equilibria.csv").read_bytes() \
        == eq_csv.read_bytes()
    assert (root2 / "solve" / "profile.csv").read_bytes() \
        == prof_csv.read_bytes()

    # rerun into the same root: completed stages are skipped untouched
    stamps = (eq_csv.stat().st_mtime_ns, prof_csv.stat().st_mtime_ns)
    run_config(SOLVE_CFG, output_root=root)
    assert (eq_csv.stat().st_mtime_ns, prof_csv.stat().st_mtime_ns) == stamps

    # deleting one artifact invalidates only its own stage
    eq_csv.unlink()
    run_config(SOLVE_CFG, output_root=root)
    assert eq_csv.exists()
    assert prof_csv.stat().st_mtime_ns == stamps[1]

    # same root with a different configuration is refused
    other = {"stages": [{"name": "v", "kind": "validate-coefficients"}]}
    with pytest.raises(UsageError, match="different configuration"):
        run_config(other, output_root=root)


def test_run_config_rejects_malformed_configurations(tmp_path):
    with pytest.raises(UsageError, match="stages"):
        run_config({}, output_root=tmp_path / "a")
    with pytest.raises(UsageError, match="unknown top-level"):
        run_config({"stages": SOLVE_CFG["stages"], "verbose": True},
                   output_root=tmp_path / "b")
    dup = {"stages": [{"name": "s", "kind": "validate-coefficients"},
                      {"name": "s", "kind": "validate-coefficients"}]}
    with pytest.raises(UsageError, match="duplicate"):
        run_config(dup, output_root=tmp_path / "c")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(UsageError, match="not valid JSON"):
        run_config(bad, output_root=tmp_path / "d")


def test_run_config_applies_coefficient_overrides(tmp_path):
    cfg = {"coefficients": {"alpha6": -3.0},
           "stages": [{"name": "v", "kind": "validate-coefficients"}]}
    # alpha6 = -3 makes the mobility g negative somewhere: validation fails
    from nemchannel.bvp import ConvergenceError
    with pytest.raises(ConvergenceError, match="failed"):
        run_config(cfg, output_root=tmp_path / "run")
    report = json.loads((tmp_path / "run" / "v" / "validation.json").read_text())
    assert report["passed"] is False


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def test_reproduce_figure_quick_outputs(tmp_path):
    for fig in ("fig2", "fig4"):
        files = reproduce_figure(fig, tmp_path, quick=True)
        assert files, fig
        for f in files:
            lines = f.read_text().splitlines()
            assert len(lines) > 1, f
    folds = (tmp_path / "fig2" / "type1_folds.csv").read_text().splitlines()
    first = folds[1].split(",")
    assert int(first[0]) == 2
    assert float(first[2]) == pytest.approx(0.4344672564224433, abs=1e-12)
    with pytest.raises(ValueError, match="unknown figure"):
        reproduce_figure("fig99", tmp_path)
    assert "fig8" in FIGURE_IDS and "fig10" in FIGURE_IDS


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_success_and_outputs(tmp_path, capsys):
    rc = main(["statics-analytic", "--B", "0.3", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["count"] == 16
    assert (tmp_path / "equilibria.csv").exists()


def test_cli_argparse_failures_exit_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["statics-analytic"])  # --B is required
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == EXIT_USAGE


def test_cli_usage_error_exit(tmp_path, capsys):
    rc = main(["run-config", str(tmp_path / "missing.json")])
    assert rc == EXIT_USAGE
    assert "no such configuration" in capsys.readouterr().err


def test_cli_numeric_error_exit(tmp_path, capsys):
    # Type I n = 2 does not exist at B = 1 (beyond the zero-flow fold)
    rc = main(["statics-solve", "--G", "2", "--B", "1.0", "--family", "I",
               "--n", "2", "--out", str(tmp_path)])
    assert rc == EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err


def test_cli_run_config_and_env_root(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"stages": [{"name": "analytic", "kind": "statics-analytic",
                     "B": 0.3}]}))
    monkeypatch.setenv(ENV_OUTPUT_ROOT, str(tmp_path / "envroot"))
    rc = main(["run-config", str(cfg)])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["stages"] == {"analytic": "complete"}
    assert (tmp_path / "envroot" / "analytic" / "equilibria.csv").exists()
    assert (tmp_path / "envroot" / "manifest.json").exists()


def test_cli_env_root_for_single_stage(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT_ROOT, str(tmp_path / "stageroot"))
    rc = main(["folds", "--i", "2"])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["B_star"] == pytest.approx(0.43447, abs=1e-4)
    assert (tmp_path / "stageroot" / "fold.csv").exists()


def test_cli_coefficient_file_override(tmp_path, capsys):
    coeff = tmp_path / "coeff.json"
    coeff.write_text(json.dumps({"alpha6": -3.0}))
    rc = main(["validate-coefficients", "--coefficients", str(coeff),
               "--out", str(tmp_path / "v")])
    assert rc == EXIT_NUMERIC  # validation reports failure
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["passed"] is False
