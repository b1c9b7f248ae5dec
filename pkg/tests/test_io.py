"""File surfaces: VTK snapshots, the two CSV formats, run-flag parsing."""

import csv
import json

import numpy as np
import pytest

from lb2d.boundaries import open_mask
from lb2d.engine import state_from_macroscopic
from lb2d.fields import Layout, Precision
from lb2d.io import (BENCH_FIELDS, CliError, parse_run_config,
                     read_efficiency_csv, write_bench_csv, write_vtk)
from lb2d.perfport import PerfRecord

# 2x2 fluid at rest, single precision, t=0.  Density prints as exactly
# "1" because the float64 sum of the nine float32 weights lands within
# half a float32 ulp of one.
GOLDEN_2X2 = """\
# vtk DataFile Version 3.0
miniLB t=0
ASCII
DATASET STRUCTURED_POINTS
DIMENSIONS 2 2 1
ORIGIN 0 0 0
SPACING 1 1 1
POINT_DATA 4
SCALARS density float 1
LOOKUP_TABLE default
1
1
1
1
VECTORS velocity float
0 0 0
0 0 0
0 0 0
0 0 0
"""


def rest_state(n=2, precision=Precision.SINGLE, layout=Layout.COL):
    z = np.zeros((n, n))
    return state_from_macroscopic(np.ones((n, n)), z, z, open_mask(n, n),
                                  layout, precision)


def patterned_state(layout):
    # exact dyadics: the float64 equilibrium/moments roundtrip error is
    # far below a float32 ulp, so the printed values equal the inputs
    rho = np.array([[1.0, 1.25], [0.75, 1.5], [2.0, 0.5]])
    ux = np.array([[0.09375, -0.03125], [0.0625, 0.0], [0.015625, 0.125]])
    uy = np.array([[-0.046875, 0.0625], [0.03125, -0.125], [0.0, 0.09375]])
    return state_from_macroscopic(rho, ux, uy, open_mask(3, 2), layout,
                                  Precision.DOUBLE)


class TestWriteVtk:
    def test_rest_state_golden_bytes(self, tmp_path):
        path = tmp_path / "rest.vtk"
        write_vtk(path, rest_state())
        assert path.read_bytes() == GOLDEN_2X2.encode()

    def test_header_and_cell_order(self, tmp_path):
        path = tmp_path / "pat.vtk"
        write_vtk(path, patterned_state(Layout.COL))
        lines = path.read_text().split("\n")
        assert lines[-1] == ""  # trailing newline
        lines = lines[:-1]
        assert len(lines) == 10 + 6 + 1 + 6
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert lines[1] == "miniLB t=0"
        assert lines[4] == "DIMENSIONS 3 2 1"
        assert lines[7] == "POINT_DATA 6"
        # density block runs x fastest: y=0 row first
        assert lines[10:16] == ["1", "0.75", "2", "1.25", "1.5", "0.5"]
        assert lines[16] == "VECTORS velocity float"
        assert lines[17] == "0.09375 -0.046875 0"
        assert lines[18] == "0.0625 0.03125 0"
        assert lines[22] == "0.125 0.09375 0"

    def test_bytes_independent_of_layout(self, tmp_path):
        a, b = tmp_path / "row.vtk", tmp_path / "col.vtk"
        write_vtk(a, patterned_state(Layout.ROW))
        write_vtk(b, patterned_state(Layout.COL))
        assert a.read_bytes() == b.read_bytes()

    def test_timestep_in_title_line(self, tmp_path):
        state = rest_state()
        state.t = 123
        path = tmp_path / "late.vtk"
        write_vtk(path, state)
        assert path.read_text().split("\n")[1] == "miniLB t=123"


class TestBenchCsv:
    def test_roundtrip_success_and_error_rows(self, tmp_path):
        ok = PerfRecord(case="tgv", nx=64, ny=64, precision="single",
                        layout="col", schedule="auto", tx=1, ty=64,
                        steps=100, seconds=0.25, mlups=1638.4,
                        flops_per_cell=91, bytes_per_cell=72, ai=91 / 72)
        bad = PerfRecord(case="tgv", nx=64, ny=64, precision="mixed1",
                         layout="row", schedule="tiled(4,4)", tx=4, ty=4,
                         steps=100, error="ValueError: boom")
        path = tmp_path / "bench.csv"
        write_bench_csv([ok, bad], path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == BENCH_FIELDS
        assert rows[0]["error"] == ""
        # repr formatting survives the round trip bit for bit
        assert float(rows[0]["mlups"]) == 1638.4
        assert float(rows[0]["seconds"]) == 0.25
        assert float(rows[0]["ai"]) == 91 / 72
        assert rows[0]["flops_per_cell"] == "91"
        assert rows[1]["error"] == "ValueError: boom"
        for field in ("seconds", "mlups", "flops_per_cell",
                      "bytes_per_cell", "ai"):
            assert rows[1][field] == ""
        assert rows[1]["schedule"] == "tiled(4,4)"


class TestEfficiencyCsv:
    def write(self, tmp_path, text):
        path = tmp_path / "eff.csv"
        path.write_text(text)
        return path

    def test_parses_platforms(self, tmp_path):
        path = self.write(tmp_path,
                          "platform,efficiency\ncpu,0.62\ngpu, 0.71 \n")
        assert read_efficiency_csv(path) == [("cpu", 0.62), ("gpu", 0.71)]

    def test_na_means_unsupported(self, tmp_path):
        path = self.write(tmp_path,
                          "platform,efficiency\ncpu,0.62\nfpga,na\n")
        assert read_efficiency_csv(path) == [("cpu", 0.62), ("fpga", None)]

    def test_bad_value_names_its_line(self, tmp_path):
        path = self.write(tmp_path,
                          "platform,efficiency\ncpu,0.62\ngpu,fast\n")
        with pytest.raises(ValueError, match="line 3"):
            read_efficiency_csv(path)

    def test_missing_columns(self, tmp_path):
        path = self.write(tmp_path, "name,eff\ncpu,0.62\n")
        with pytest.raises(ValueError, match="columns"):
            read_efficiency_csv(path)

    def test_empty_table(self, tmp_path):
        path = self.write(tmp_path, "platform,efficiency\n")
        with pytest.raises(ValueError, match="no platforms"):
            read_efficiency_csv(path)


class TestParseRunConfig:
    def test_defaults(self):
        spec, config = parse_run_config([])
        assert (spec.name, spec.nx, spec.ny) == ("ldc", 128, 128)
        assert spec.re == 100.0 and spec.u0 == 0.1
        assert config.steps == 1000
        assert config.precision is Precision.SINGLE
        assert config.layout is Layout.COL
        assert config.schedule.kind == "auto"
        assert config.out_dir == "out"

    def test_ny_defaults_to_nx(self):
        spec, _ = parse_run_config(["--nx", "64"])
        assert (spec.nx, spec.ny) == (64, 64)
        spec, _ = parse_run_config(["--nx", "64", "--ny", "32"])
        assert (spec.nx, spec.ny) == (64, 32)

    def test_tiled_schedule(self):
        _, config = parse_run_config(
            ["--schedule", "tiled", "--tile-x", "8", "--tile-y", "4"])
        assert config.schedule.label() == "tiled(8,4)"

    def test_unknown_flag(self):
        with pytest.raises(CliError, match="unknown flag"):
            parse_run_config(["--frobnicate", "3"])

    def test_tiled_needs_tile_sizes(self):
        with pytest.raises(CliError, match="tile-x"):
            parse_run_config(["--schedule", "tiled"])

    def test_tiles_require_tiled_schedule(self):
        with pytest.raises(CliError, match="only apply"):
            parse_run_config(["--tile-x", "8"])

    def test_bad_int_value(self):
        with pytest.raises(CliError):
            parse_run_config(["--nx", "abc"])

    def test_domain_validation_becomes_cli_error(self):
        with pytest.raises(CliError):
            parse_run_config(["--u0", "0.9"])  # Mach guard

    def test_config_file_defaults_and_flag_override(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"nx": 48, "re": 250.0}))
        spec, _ = parse_run_config(["--config", str(path)])
        assert (spec.nx, spec.ny, spec.re) == (48, 48, 250.0)
        spec, _ = parse_run_config(["--config", str(path), "--nx", "64"])
        assert (spec.nx, spec.re) == (64, 250.0)

    def test_config_file_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"frobs": 1}))
        with pytest.raises(CliError, match="unknown config keys"):
            parse_run_config(["--config", str(path)])
