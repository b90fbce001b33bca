import math
import struct

import numpy as np
import pytest

from zrp.cli import main, _parse_grid
from zrp.errors import ConfigError


def run_cli(*argv):
    return main(list(argv))


def write(path, text):
    path.write_text(text)
    return str(path)


BASE = """
[model]
c0 = 2.0
c1 = 1.0
a = 0.5

[run]
seed = 4242
replicas = 8

[output]
dir = {out}
"""


def read_rows(path):
    header = None
    rows = []
    comments = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


class TestConfig:
    def test_grid_specs(self):
        assert _parse_grid("1:2:0.5", "x") == [1.0, 1.5, 2.0]
        assert _parse_grid("3", "x") == [3.0]
        assert _parse_grid("1, 2, 4", "x") == [1.0, 2.0, 4.0]
        with pytest.raises(ConfigError):
            _parse_grid("1:2", "x")
        with pytest.raises(ConfigError):
            _parse_grid("1:0:1e-3:4", "x")

    def test_missing_seed_is_error(self, tmp_path):
        cfg = write(tmp_path / "c.ini", "[model]\nc0 = 2\nc1 = 1\n")
        assert run_cli("phase-diagram", "--config", cfg) == 2

    def test_seed_flag_suffices(self, tmp_path):
        assert run_cli("phase-diagram", "--seed", "5", "--out", str(tmp_path)) == 0

    def test_bad_model(self, tmp_path):
        cfg = write(tmp_path / "c.ini", "[model]\nc0 = 1\nc1 = 2\n[run]\nseed = 1\n")
        assert run_cli("phase-diagram", "--config", cfg) == 2

    def test_unknown_section(self, tmp_path):
        cfg = write(tmp_path / "c.ini", "[stuff]\nx = 1\n[run]\nseed = 1\n")
        assert run_cli("phase-diagram", "--config", cfg) == 2

    def test_kind_mismatch(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            "[experiment]\nkind = entropy\n[run]\nseed = 1\n",
        )
        assert run_cli("phase-diagram", "--config", cfg) == 2

    def test_missing_file(self):
        assert run_cli("phase-diagram", "--config", "/nonexistent.ini", "--seed", "1") == 2

    def test_resource_error_exit_code(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\nrho = 0.5:4.0:0.5\nl = 4000\n",
        )
        assert run_cli("entropy", "--config", cfg) == 3


class TestPhaseDiagram:
    def test_lattice_rows(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\na = 0.0:0.5:0.25\n",
        )
        assert run_cli("phase-diagram", "--config", cfg) == 0
        comments, header, rows = read_rows(tmp_path / "phase_diagram.csv")
        assert comments[0] == "# zrp-csv v1"
        assert any(c.startswith("# config: ") for c in comments)
        assert any(c == "# seed: 4242" for c in comments)
        assert header[:4] == ["a", "rho_c", "rho_meta", "rho_trans"]
        a0 = rows[0]
        assert float(a0[1]) == float(a0[2]) == float(a0[3]) == 1.0  # all coincide at a=0
        last = rows[-1]
        assert float(last[1]) < float(last[2]) < float(last[3])

    def test_particle_overlap(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path).replace("a = 0.5", "a = 0.5\nmode = particle")
            + "[experiment]\na = 0.5\n",
        )
        assert run_cli("phase-diagram", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "phase_diagram.csv")
        row = dict(zip(header, rows[0]))
        assert float(row["rho_meta"]) == pytest.approx(2.0)
        assert float(row["rho_c"]) == pytest.approx(1 / (math.sqrt(2) - 1), rel=1e-9)
        assert float(row["overlap_lo"]) == pytest.approx(2.0)
        assert float(row["overlap_hi"]) == pytest.approx(float(row["rho_c"]))
        assert "F:empty" in row["phases"]


class TestEntropy:
    def test_columns_and_convergence(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path)
            + "[experiment]\nrho = 0.5, 1.0, 3.5\nl = 40, 80\npressure_l = 2, 4, 8\n",
        )
        assert run_cli("entropy", "--config", cfg, "--svg") == 0
        _, header, rows = read_rows(tmp_path / "entropy.csv")
        assert header == ["rho", "s_fluid", "s_gcan", "s_can_analytic", "s_can_L40", "s_can_L80"]
        for row in rows:
            vals = dict(zip(header, (float(v) for v in row)))
            assert abs(vals["s_can_L80"] - vals["s_can_analytic"]) < abs(
                vals["s_can_L40"] - vals["s_can_analytic"]
            ) + 0.05
        assert (tmp_path / "entropy.svg").is_file()
        _, pheader, prows = read_rows(tmp_path / "pressure.csv")
        assert pheader[:3] == ["phi", "p_fluid", "p_gcan"]
        # finite-L normalization approaches the limiting pressure from above
        mid = prows[len(prows) // 2]
        pv = dict(zip(pheader, (float(v) for v in mid)))
        assert pv["log_z_L8"] >= pv["p_gcan"] - 1e-12
        assert abs(pv["log_z_L8"] - pv["p_gcan"]) <= abs(pv["log_z_L2"] - pv["p_gcan"])

    def test_particle_mode_pressure(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path).replace("a = 0.5", "a = 0.2\nmode = particle")
            + "[experiment]\nrho = 0.5, 1.0\nl = 30\npressure_l = 2, 4\nphi = 0.0:1.0:0.25\n",
        )
        assert run_cli("entropy", "--config", cfg) == 0
        _, pheader, prows = read_rows(tmp_path / "pressure.csv")
        last = dict(zip(pheader, (float(v) for v in prows[-1])))
        assert last["phi"] == 1.0  # beyond c1 but below phi_c(a) = 2^0.2
        assert math.isfinite(last["log_z_L4"])
        assert last["log_z_L4"] >= last["p_gcan"] - 1e-9


class TestRateFunction:
    def test_structure_and_inf(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\nrho = 1.2, 1.8, 3.0\n",
        )
        assert run_cli("rate-function", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "rate_function.csv")
        infs = [r for r in rows if r[2] == "inf"]
        assert infs, "rho_bg > rho region must be marked inf"
        _, sheader, srows = read_rows(tmp_path / "rate_function_summary.csv")
        summary = {float(r[0]): dict(zip(sheader, r)) for r in srows}
        assert len(summary[1.2]["local_minima"].split(";")) == 1
        assert len(summary[1.8]["local_minima"].split(";")) == 2
        assert float(summary[1.8]["global_minimum"]) == pytest.approx(1.8, abs=1e-6)
        assert float(summary[3.0]["global_minimum"]) == pytest.approx(1.0, abs=1e-6)
        assert float(summary[3.0]["branch_gap"]) <= 1e-12


class TestLifetimes:
    def test_sweep_and_regression(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\nrho = 2.5\nl = 10, 14, 18\n",
        )
        assert run_cli("lifetimes", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "lifetimes.csv")
        assert [r[0] for r in rows] == ["10", "14", "18"]
        _, rheader, rrows = read_rows(tmp_path / "lifetime_regression.csv")
        fits = [r for r in rrows if r[1] == "fit"]
        assert len(fits) == 2
        assert (tmp_path / "lifetime_tails.csv").is_file()
        assert (tmp_path / "lifetime_replicas.csv").is_file()

    def test_subcritical_density_rejected(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\nrho = 1.0\nl = 10, 14, 18\n",
        )
        assert run_cli("lifetimes", "--config", cfg) == 2

    def test_too_few_sizes_for_regression(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\nrho = 2.5\nl = 10, 14\n",
        )
        assert run_cli("lifetimes", "--config", cfg) == 1

    def test_records_file(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path) + "[experiment]\nrho = 2.5\nl = 10, 12, 14\n",
        )
        assert run_cli("lifetimes", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "records.csv")
        assert list(header) == ["params", "observable", "value", "stderr", "censored_fraction", "provenance"]
        sims = [r for r in rows if r[5] == "simulation"]
        analytic = [r for r in rows if r[5] == "analytic"]
        assert len(sims) == 6 and len(analytic) == 2
        assert all(r[3] != "" for r in sims)
        assert all(r[3] == "" for r in analytic)


class TestLLN:
    def test_summary(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path)
            + "[experiment]\nrho = 0.5, 2.0\nl = 2000\nr = 60\nbatches = 10\n",
        )
        assert run_cli("lln-check", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "lln_check.csv")
        data = {float(r[2]): dict(zip(header, r)) for r in rows}
        assert float(data[0.5]["target"]) == 0.5
        assert float(data[2.0]["target"]) == 1.0  # sticks to rho_c, not rho
        assert float(data[2.0]["max_abs_dev"]) < 0.1
        assert data[2.0]["in_regime"] == "true"


class TestOracle:
    def test_pass(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            "[model]\nc0 = 2\nc1 = 1\nexplicit_R = 2\n"
            "[experiment]\nl = 3\nn = 4\nevents = 5e5\n"
            f"[run]\nseed = 11\n[output]\ndir = {tmp_path}\n",
        )
        assert run_cli("oracle", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "oracle_report.csv")
        assert all(r[3] == "true" for r in rows)

    def test_failure_exit_code(self, tmp_path):
        # a far-too-short run cannot match the stationary law within TV 0.01
        cfg = write(
            tmp_path / "c.ini",
            "[model]\nc0 = 2\nc1 = 1\nexplicit_R = 2\n"
            "[experiment]\nl = 3\nn = 4\nevents = 200\n"
            f"[run]\nseed = 11\n[output]\ndir = {tmp_path}\n",
        )
        assert run_cli("oracle", "--config", cfg) == 4

    def test_too_large_rejected(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            f"[model]\nc0 = 2\nc1 = 1\n[experiment]\nl = 9\nn = 4\n[run]\nseed = 1\n[output]\ndir = {tmp_path}\n",
        )
        assert run_cli("oracle", "--config", cfg) == 2


class TestSimulate:
    def test_trajectory_and_events(self, tmp_path):
        cfg = write(
            tmp_path / "c.ini",
            BASE.format(out=tmp_path)
            + "[experiment]\nl = 20\nrho = 1.0\nphase = fluid\nt_end = 20\nsample_dt = 0.5\n"
            "events = 500\nevents_file = events.bin\n",
        )
        assert run_cli("simulate", "--config", cfg) == 0
        _, header, rows = read_rows(tmp_path / "trajectory.csv")
        assert header == ["t", "sigma_bg_per_L", "max_per_L", "A", "B"]
        assert len(rows) == 41
        blob = (tmp_path / "events.bin").read_bytes()
        assert len(blob) % 16 == 0 and len(blob) > 0
        t0, s0, d0 = struct.unpack_from("<dII", blob, 0)
        assert t0 > 0 and 0 <= s0 < 20 and 0 <= d0 < 20


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        body = (
            "[model]\nc0 = 2\nc1 = 1\na = 0.5\n"
            "[experiment]\nrho = 2.5\nl = 8, 10, 12\n"
            "[run]\nseed = 77\nreplicas = 5\n"
        )
        cfg1 = write(tmp_path / "c1.ini", body + f"[output]\ndir = {out1}\n")
        cfg2 = write(tmp_path / "c2.ini", body + f"[output]\ndir = {out2}\n")
        assert run_cli("lifetimes", "--config", cfg1) == 0
        assert run_cli("lifetimes", "--config", cfg2, "--workers", "3") == 0
        for name in ("lifetimes.csv", "lifetime_replicas.csv", "lifetime_regression.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
