import dataclasses
import math

import pytest

from spmdbench import ElemType
from spmdbench.harness import (RAW_HEADER, SUMMARY_HEADER, BenchmarkRecord,
                               RunPlan, SummaryRecord, UsageError,
                               VerificationError, execute, main, parse_cli,
                               phi_command, read_raw_csv, read_summary_csv,
                               resolve_backend, verify_plan, write_csv)
from spmdbench.metrics import stencil_bandwidth


def stencil_plan(**kw):
    args = dict(workload="stencil", L=12, iterations=3)
    args.update(kw)
    return RunPlan(**args)


class TestParseCli:
    def test_run_stencil(self):
        cmd, plan = parse_cli(["run", "stencil", "--L", "64", "--dtype", "f64",
                               "--iters", "100", "--csv", "out.csv"])
        assert cmd == "run"
        assert plan.workload == "stencil" and plan.L == 64
        assert plan.elem_type is ElemType.f64 and plan.iterations == 100
        assert plan.csv_path == "out.csv"

    def test_run_stream_pow2(self):
        _, plan = parse_cli(["run", "stream", "--N", "33554432"])
        assert plan.N == 2 ** 25

    def test_run_bude_bm1_style(self):
        _, plan = parse_cli(["run", "bude", "--ppwi", "4", "--wg", "64",
                             "--poses", "65536"])
        assert (plan.ppwi, plan.wg, plan.poses) == (4, 64, 65536)
        assert plan.elem_type is ElemType.f32

    def test_unknown_workload(self):
        with pytest.raises(UsageError):
            parse_cli(["run", "fft"])

    def test_unknown_flag(self):
        with pytest.raises(UsageError):
            parse_cli(["run", "stencil", "--frobnicate", "1"])

    def test_dtype_constraints(self):
        with pytest.raises(UsageError):
            parse_cli(["run", "bude", "--dtype", "f64"])
        with pytest.raises(UsageError):
            parse_cli(["run", "hf", "--dtype", "f32"])

    def test_phi_command_parse(self):
        cmd, ns = parse_cli(["phi", "--candidate", "a.csv", "--baseline",
                             "b.csv", "--cap"])
        assert cmd == "phi" and ns.cap

    def test_usage_exit_code(self, capsys):
        assert main(["run", "nonsense"]) == 1
        assert "usage error" in capsys.readouterr().err


class TestExecute:
    def test_stencil_counts_and_fom(self):
        records, summaries = execute(stencil_plan())
        assert len(records) == 3
        assert [r.iter for r in records] == [0, 1, 2]
        assert all(r.time_s > 0 for r in records)
        (s,) = summaries
        assert s.fom_name == "bandwidth_gbs" and s.fom_value > 0
        assert s.time_min_s == min(r.time_s for r in records)

    def test_stream_record_count(self):
        plan = RunPlan(workload="stream", N=512, tbsize=64, iterations=4)
        records, summaries = execute(plan)
        assert len(records) == 5 * 4
        assert len(summaries) == 5
        kernels = {r.kernel for r in records}
        assert kernels == {"copy", "mul", "add", "triad", "dot"}

    def test_bude_verifies_bitwise(self):
        plan = RunPlan(workload="bude", poses=64, ppwi=2, wg=8, natlig=3,
                       natpro=4, iterations=2, elem_type=ElemType.f32)
        records, summaries = execute(plan)
        assert summaries[0].fom_name == "gflops"
        assert records[0].dtype == "f32"

    def test_hf_wall_clock_fom(self):
        plan = RunPlan(workload="hf", natoms=3, iterations=2)
        _, summaries = execute(plan)
        (s,) = summaries
        assert s.fom_name == "wall_clock_s"
        assert s.fom_value == s.time_min_s

    def test_verification_failure_raises(self, monkeypatch):
        import spmdbench.harness as hmod
        monkeypatch.setitem(hmod.STENCIL_TOL, ElemType.f64, 0.0)
        with pytest.raises(VerificationError, match="laplacian"):
            execute(stencil_plan())

    def test_reproducible_modulo_times(self):
        plan = stencil_plan(seed=9)
        rec1, sum1 = execute(plan)
        rec2, sum2 = execute(plan)
        strip = lambda r: dataclasses.replace(r, time_s=0.0)
        assert [strip(r) for r in rec1] == [strip(r) for r in rec2]
        assert sum1[0].params == sum2[0].params

    def test_params_field_has_no_commas(self):
        for plan in (stencil_plan(),
                     RunPlan(workload="stream", N=256, tbsize=64, iterations=1),
                     RunPlan(workload="bude", poses=8, ppwi=1, wg=4, natlig=2,
                             natpro=2, iterations=1, elem_type=ElemType.f32),
                     RunPlan(workload="hf", natoms=2, iterations=1)):
            records, summaries = execute(plan)
            assert "," not in records[0].params
            assert "," not in summaries[0].params

    def test_workers_env_override(self, monkeypatch):
        monkeypatch.setenv("SPMDBENCH_WORKERS", "3")
        plan = stencil_plan(backend="parallel")
        assert resolve_backend(plan).worker_count == 3
        # explicit flag wins
        plan = stencil_plan(backend="parallel", workers=2)
        assert resolve_backend(plan).worker_count == 2


class TestVerifyCommand:
    def test_verify_passes(self):
        verify_plan(stencil_plan())

    def test_verify_exit_codes(self, monkeypatch):
        assert main(["verify", "stencil", "--L", "12"]) == 0
        import spmdbench.harness as hmod
        monkeypatch.setitem(hmod.STENCIL_TOL, ElemType.f64, 0.0)
        assert main(["verify", "stencil", "--L", "12"]) == 2


class TestCsv:
    def test_raw_round_trip_bitwise(self, tmp_path):
        plan = stencil_plan(csv_path=str(tmp_path / "raw.csv"))
        execute(plan)
        first = (tmp_path / "raw.csv").read_bytes()
        records = read_raw_csv(tmp_path / "raw.csv")
        write_csv(records, tmp_path / "again.csv", kind="raw")
        assert (tmp_path / "again.csv").read_bytes() == first

    def test_headers_exact(self, tmp_path):
        write_csv([], tmp_path / "r.csv", kind="raw")
        assert (tmp_path / "r.csv").read_text() == RAW_HEADER + "\n"
        write_csv([], tmp_path / "s.csv", kind="summary")
        assert (tmp_path / "s.csv").read_text() == SUMMARY_HEADER + "\n"

    def test_lf_endings_and_scientific(self, tmp_path):
        rec = BenchmarkRecord("stencil", "laplacian", "ref", "f64",
                              "L=4;grid=1x4x4;block=4x1x1", 0, 1.25e-4)
        write_csv([rec], tmp_path / "r.csv")
        raw = (tmp_path / "r.csv").read_bytes()
        assert b"\r" not in raw
        assert f"{1.25e-4:.17e}".encode() in raw
        assert float(f"{1.25e-4:.17e}") == 1.25e-4  # full-precision round trip

    def test_header_mismatch_rejected(self, tmp_path):
        (tmp_path / "bad.csv").write_text("time,stuff\n1,2\n")
        with pytest.raises(Exception, match="header"):
            read_raw_csv(tmp_path / "bad.csv")

    def test_summary_recompute_from_raw(self, tmp_path):
        plan = stencil_plan(iterations=5,
                            csv_path=str(tmp_path / "raw.csv"),
                            summary_csv_path=str(tmp_path / "sum.csv"))
        execute(plan)
        raw = read_raw_csv(tmp_path / "raw.csv")
        (summary,) = read_summary_csv(tmp_path / "sum.csv")
        tmin = min(r.time_s for r in raw)
        recomputed = stencil_bandwidth(12, 8, tmin)
        assert abs(recomputed - summary.fom_value) <= math.ulp(recomputed)

    def test_unwritable_path(self, tmp_path):
        plan = stencil_plan(csv_path=str(tmp_path / "nope" / "x.csv"))
        with pytest.raises(OSError):
            execute(plan)
        assert main(["run", "stencil", "--L", "12", "--iters", "1",
                     "--csv", str(tmp_path / "nope" / "x.csv")]) == 3


def _write_summary(path, rows):
    recs = [SummaryRecord(*row) for row in rows]
    write_csv(recs, path, kind="summary")


class TestPhiCommand:
    def test_self_comparison_is_unity(self, tmp_path, capsys):
        plan = stencil_plan(summary_csv_path=str(tmp_path / "s.csv"))
        execute(plan)
        res = phi_command(tmp_path / "s.csv", tmp_path / "s.csv")
        assert res["stencil"].phi == 1.0
        assert "phi = 1.00" in capsys.readouterr().out

    def test_synthetic_paper_rows(self, tmp_path, capsys):
        base, cand = [], []
        for i, e in enumerate((0.82, 0.87, 1.00, 1.00)):
            key = ("stencil", "laplacian", "f64", f"L={512 * (i + 1)}")
            base.append((key[0], key[1], "cuda", *key[2:],
                         "bandwidth_gbs", 100.0, 1.0, 1.0, 1.0, 0.0))
            cand.append((key[0], key[1], "mojo", *key[2:],
                         "bandwidth_gbs", 100.0 * e, 1.0, 1.0, 1.0, 0.0))
        _write_summary(tmp_path / "b.csv", base)
        _write_summary(tmp_path / "c.csv", cand)
        res = phi_command(tmp_path / "c.csv", tmp_path / "b.csv")
        assert res["stencil"].phi == pytest.approx(0.9225, abs=1e-12)
        assert "phi = 0.92" in capsys.readouterr().out

    def test_cap_clamps_entry(self, tmp_path, capsys):
        key = ("stream", "copy", "ref", "f64", "N=8")
        _write_summary(tmp_path / "b.csv", [(*key, "bandwidth_gbs", 2.0,
                                             1.0, 1.0, 1.0, 0.0)])
        _write_summary(tmp_path / "c.csv", [(*key, "bandwidth_gbs", 5.0,
                                             1.0, 1.0, 1.0, 0.0)])
        res = phi_command(tmp_path / "c.csv", tmp_path / "b.csv", cap=True)
        assert res["stream"].phi == 1.0
        assert "e=1.00" in capsys.readouterr().out

    def test_wall_clock_orientation(self, tmp_path, capsys):
        key = ("hf", "fock", "ref", "f64", "natoms=256;ngauss=3;tbsize=256")
        _write_summary(tmp_path / "b.csv", [(*key, "wall_clock_s", 0.178,
                                             0.178, 0.2, 0.3, 0.0)])
        _write_summary(tmp_path / "c.csv", [(*key, "wall_clock_s", 25.266,
                                             25.266, 26.0, 27.0, 0.0)])
        res = phi_command(tmp_path / "c.csv", tmp_path / "b.csv")
        assert res["hf"].phi == pytest.approx(0.178 / 25.266, rel=1e-12)
        out = capsys.readouterr().out
        assert "e=7.0e-3" in out and "inverted" in out

    def test_no_matching_keys(self, tmp_path, capsys):
        _write_summary(tmp_path / "b.csv", [("hf", "fock", "ref", "f64",
                                             "natoms=2", "wall_clock_s",
                                             1.0, 1, 1, 1, 0)])
        _write_summary(tmp_path / "c.csv", [("hf", "fock", "ref", "f64",
                                             "natoms=4", "wall_clock_s",
                                             1.0, 1, 1, 1, 0)])
        with pytest.raises(UsageError):
            phi_command(tmp_path / "c.csv", tmp_path / "b.csv")
        assert "unmatched key" in capsys.readouterr().out

    def test_main_phi_exit(self, tmp_path):
        plan = stencil_plan(summary_csv_path=str(tmp_path / "s.csv"))
        execute(plan)
        assert main(["phi", "--candidate", str(tmp_path / "s.csv"),
                     "--baseline", str(tmp_path / "s.csv")]) == 0


def test_list_command(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for w in ("stencil", "stream", "bude", "hf"):
        assert w in out
