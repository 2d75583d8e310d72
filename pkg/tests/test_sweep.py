import csv
import io
import json
from dataclasses import replace

import numpy as np
import pytest

import latmag.sweep as sweep_mod
from latmag import SolverError
from latmag.cli import main, read_config
from latmag.sweep import (
    EmptyWindow,
    SweepConfig,
    columns,
    emit,
    evaluate_point,
    metadata_path,
    run_gradient_family,
    run_sweep,
    to_csv,
    to_json,
)

SMALL = SweepConfig(n_x=7, n_y=7, b0_min=0.2, b0_max=0.8, b0_steps=3, grain_sizes=(1, 3), k_eigenvalues=4)


@pytest.fixture(scope="module")
def small_result():
    return run_sweep(SMALL)


# --- configuration ----------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(b0_min=0.5, b0_max=0.5),
        dict(b0_steps=1),
        dict(format="xml"),
        dict(grain_sizes=()),
        dict(grain_sizes=(8,)),
        dict(grain_sizes=(0,)),
        dict(k_eigenvalues=0),
        dict(k_eigenvalues=50),
    ],
)
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        replace(SMALL, **kwargs)


def test_window_is_clipped_to_reversal_bound():
    cfg = replace(SMALL, m_x=0.1)  # m_x L = 0.3 on a 7x7 lattice
    assert cfg.effective_b0_min() == pytest.approx(0.3)
    assert cfg.grid()[0] == pytest.approx(0.3)
    with pytest.raises(EmptyWindow):
        replace(SMALL, m_x=0.3).grid()


def test_default_grid():
    grid = SweepConfig().grid()
    assert len(grid) == 96 and grid[0] == 0.05 and grid[-1] == 1.0


# --- records and schema --------------------------------------------------------


def test_schema(small_result):
    assert columns(SMALL) == [
        "b0", "qfi", "fi_g1", "fi_g3", "r_g1", "r_g3", "e0", "e1", "e2", "e3", "gap", "delta_used", "status",
    ]
    assert small_result.ok
    assert len(small_result.records) == 3
    for r in small_result.records:
        assert len(r.eigenvalues) == 4
        assert r.fi[3] <= r.fi[1] * (1 + 1e-9) <= r.qfi * (1 + 1e-9) ** 2
        assert r.ratio[1] == pytest.approx(r.fi[1] / r.qfi)


def test_csv_layout(small_result):
    text = to_csv(small_result.records, SMALL)
    lines = text.splitlines()
    assert len(lines) == 4
    assert not any(line.endswith(",") for line in lines)
    rows = list(csv.reader(io.StringIO(text)))
    assert all(len(row) == len(rows[0]) for row in rows)
    # %.17g round-trips exactly
    assert float(rows[1][1]) == small_result.records[0].qfi


def test_json_round_trip(small_result):
    doc = json.loads(to_json(small_result.records, SMALL, small_result.metadata))
    assert doc["columns"] == columns(SMALL)
    assert doc["records"][2]["qfi"] == small_result.records[2].qfi
    assert doc["metadata"]["complete"] is True


def test_metadata_contents(small_result):
    meta = small_result.metadata
    assert meta["n_records"] == 3 and meta["n_failed"] == 0
    assert meta["config"]["n_x"] == 7
    assert "kernel_backend" in meta


def test_invalid_points_are_reported():
    cfg = replace(SMALL, b0_min=0.8, b0_max=1.2, b0_steps=3)
    res = run_sweep(cfg)
    assert [r.status for r in res.records] == ["ok", "ok", "invalid_magnetic_length"]
    bad = to_csv(res.records, cfg).splitlines()[-1].split(",")
    assert bad[-1] == "invalid_magnetic_length"
    assert all(cell == "" for cell in bad[1:-1])
    assert not res.ok


def test_solver_failure_becomes_status(monkeypatch):
    def boom(*a, **k):
        raise SolverError("no convergence")

    monkeypatch.setattr(sweep_mod, "solve_lowest", boom)
    rec = evaluate_point(SMALL, 0.5)
    assert rec.status == "solver_error" and rec.qfi is None


def test_determinism(tmp_path, small_result):
    again = run_sweep(SMALL)
    emit(small_result.records, SMALL, small_result.metadata, tmp_path / "a.csv")
    emit(again.records, SMALL, again.metadata, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()


def test_emit_requires_records(tmp_path):
    with pytest.raises(ValueError):
        emit([], SMALL, {}, tmp_path / "x.csv")


def test_dense_and_sparse_agree():
    a = evaluate_point(SMALL, 0.5)
    b = evaluate_point(replace(SMALL, solver="dense"), 0.5)
    assert a.qfi == pytest.approx(b.qfi, rel=1e-6)
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-9)


# --- gradient family -------------------------------------------------------------


def test_family_shared_grid_and_skip():
    cfg = replace(SMALL, b0_steps=2)
    fam = run_gradient_family(cfg, [0.0, 0.05, 0.5])
    assert list(fam.sweeps) == [0.0, 0.05]
    assert 0.5 in fam.skipped
    g0 = [r.b0 for r in fam.sweeps[0.0].records]
    g1 = [r.b0 for r in fam.sweeps[0.05].records]
    assert g0 == g1 and g0[0] == pytest.approx(0.2)
    for b0, best, q, values in fam.summary:
        assert q == max(values.values())


def test_single_member_family():
    fam = run_gradient_family(replace(SMALL, b0_steps=2), [0.0])
    assert all(best == 0.0 for _, best, _, _ in fam.summary)


def test_family_all_empty():
    with pytest.raises(EmptyWindow):
        run_gradient_family(SMALL, [1.0, 2.0])


# --- command line ----------------------------------------------------------------

ARGS = ["--nx", "7", "--ny", "7", "--b0-min", "0.2", "--b0-max", "0.8", "--b0-steps", "2", "--grains", "1,3", "--k", "3"]


def test_cli_csv_with_sidecar(tmp_path):
    out = tmp_path / "run.csv"
    assert main(ARGS + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("b0,qfi,fi_g1,fi_g3")
    meta = json.loads(metadata_path(out).read_text())
    assert meta["complete"] is True and meta["config"]["b0_steps"] == 2


def test_cli_json(tmp_path):
    out = tmp_path / "run.json"
    assert main(ARGS + ["--out", str(out), "--format", "json"]) == 0
    assert len(json.loads(out.read_text())["records"]) == 2


def test_cli_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nnx = 7\nny = 7\nb0-min = 0.2\nb0-steps = 4\ngrains = 1\nk = 2\n")
    assert read_config(cfg)["b0_steps"] == "4"
    out = tmp_path / "c.csv"
    assert main(["--config", str(cfg), "--b0-steps", "2", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3
    assert out.read_text().splitlines()[0] == "b0,qfi,fi_g1,r_g1,e0,e1,gap,delta_used,status"


def test_cli_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["--config", str(cfg)]) == 2


def test_cli_exit_codes(tmp_path):
    assert main(ARGS[:-6] + ["--b0-max", "0.1", "--grains", "1", "--out", str(tmp_path / "x.csv")]) == 2
    failing = ["--nx", "7", "--ny", "7", "--b0-min", "0.8", "--b0-max", "1.2", "--b0-steps", "3", "--grains", "1", "--k", "2"]
    assert main(failing + ["--out", str(tmp_path / "f.csv")]) == 1


def test_cli_family_outputs(tmp_path):
    out = tmp_path / "fam.csv"
    assert main(ARGS + ["--mx", "0,0.05", "--out", str(out)]) == 0
    assert (tmp_path / "fam_mx0.csv").exists() and (tmp_path / "fam_mx0.05.csv").exists()
    summary = (tmp_path / "fam_summary.csv").read_text().splitlines()
    assert summary[0] == "b0,best_mx,best_qfi,qfi_mx0,qfi_mx0.05"
    assert len(summary) == 3


def test_cli_dump_matrix(tmp_path):
    dump = tmp_path / "h.txt"
    assert main(ARGS + ["--out", str(tmp_path / "d.csv"), "--dump-matrix", str(dump)]) == 0
    rows = np.loadtxt(dump)
    assert rows.shape[1] == 4
    assert rows.shape[0] == 49 + 2 * (2 * 7 * 6 + 2 * 7 * 5)
    r, c = rows[:, 0].astype(int), rows[:, 1].astype(int)
    assert np.all(np.diff(r * 49 + c) > 0)


def test_worker_pool_matches_serial(small_result):
    pooled = run_sweep(replace(SMALL, workers=2))
    assert to_csv(pooled.records, SMALL) == to_csv(small_result.records, SMALL)
