import numpy as np
import pytest

from savch import cli, io
from savch.cli import ConfigError, main, parse_config
from savch.diagnostics import DiagnosticsRecord
from savch.mesh import build_unit_square_mesh


def test_empty_file_gives_defaults(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("")
    cfg = parse_config(f)
    s = cfg.scheme
    assert (s.n, s.dt, s.T, s.potential.epsilon, s.potential.C0) == (16, 1e-3, 5.0, 0.1, 1.0)


def test_flag_overrides_file(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nepsilon = 0.1   # trailing\n\nn = 8\n")
    cfg = parse_config(f, {"epsilon": "0.2"})
    assert cfg.scheme.potential.epsilon == 0.2
    assert cfg.scheme.n == 8


def test_fractions_and_lists(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("time_dt_ladder = 1/100, 1/200\ntime_dt_reference = 1/1600\nsnapshots = 0, 0.5\n")
    cfg = parse_config(f)
    assert cfg.values["time_dt_ladder"] == [0.01, 0.005]
    assert cfg.snapshots == [0.0, 0.5]


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("dt = -1\n", "dt", 1),
        ("\nbogus = 3\n", "bogus", 2),
        ("n = abc\n", "n", 1),
        ("snapshots = 7\n", "snapshots", 1),
        ("formats = png\n", "formats", 1),
        ("space_n_ladder = 4, 12\n", "space_n_ladder", 1),
    ],
)
def test_validation_names_key_and_line(tmp_path, text, key, line):
    f = tmp_path / "c.cfg"
    f.write_text(text)
    with pytest.raises(ConfigError) as info:
        parse_config(f)
    assert info.value.key == key and info.value.line == line
    assert key in str(info.value)


def test_flag_validation():
    with pytest.raises(ConfigError) as info:
        parse_config(None, {"dt": "-1"})
    assert info.value.key == "dt"


def test_run_writes_trace_and_snapshots(tmp_path):
    out = tmp_path / "o"
    code = main(["run", "--n", "4", "--T", "0.02", "--out", str(out),
                 "--snapshots", "0,0.01,0.02", "--formats", "vtk,csv"])
    assert code == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "t,mass,energy_original,energy_modified,r,grad_mu_sq"
    assert len(lines) == 1 + 21
    recs = io.read_trace(out / "trace.csv")
    E = [r.energy_modified for r in recs]
    assert all(b <= a for a, b in zip(E, E[1:]))
    assert len(list(out.glob("phi_t*.vtk"))) == 3 and len(list(out.glob("phi_t*.csv"))) == 3


def test_run_six_snapshots(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--n", "4", "--T", "2", "--dt", "0.01", "--cadence", "50",
                 "--snapshots", "0,0.05,0.1,0.3,0.8,2", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("*.vtk")) == sorted(
        f"phi_t{t}.vtk" for t in ("0", "0.05", "0.1", "0.3", "0.8", "2")
    )


def test_large_cadence_keeps_endpoints(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--n", "2", "--T", "0.01", "--cadence", "100000", "--out", str(out)]) == 0
    recs = io.read_trace(out / "trace.csv")
    assert [r.t for r in recs] == [0.0, pytest.approx(0.01)]


def test_exit_codes(tmp_path, monkeypatch):
    assert main(["run", "--dt", "-1", "--out", str(tmp_path)]) == cli.EXIT_INVALID
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("nope = 1\n")
    assert main(["run", "--config", str(cfgfile)]) == cli.EXIT_INVALID

    from savch.errors import SolverError

    def boom(*a, **k):
        raise SolverError("singular")

    monkeypatch.setattr(cli, "run", boom)
    assert main(["run", "--out", str(tmp_path)]) == cli.EXIT_SOLVER


SMALL_TIME = ["--time-n", "4", "--time-dt-ladder", "1/2000,1/4000", "--time-dt-reference",
              "1/16000", "--time-T", "0.005"]


def test_conv_time_bands(tmp_path):
    out = tmp_path / "o"
    code = main(["conv-time", *SMALL_TIME, "--time-band", "0,5", "--out", str(out)])
    assert code == 0
    assert (out / "conv_time.csv").read_text().startswith("param,e_phi,rate_phi")
    assert (out / "conv_time.txt").exists()
    code = main(["conv-time", *SMALL_TIME, "--time-band", "3,4", "--out", str(out)])
    assert code == cli.EXIT_BANDS


def test_conv_space_writes_report(tmp_path):
    out = tmp_path / "o"
    code = main(["conv-space", "--space-n-ladder", "2,4", "--space-n-reference", "8",
                 "--space-dt", "1e-3", "--space-T", "0.003", "--space-band-h1=-10,10",
                 "--space-band-r=-10,10", "--out", str(out)])
    assert code == 0
    rows = (out / "conv_space.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[1].startswith("0.5,")


def test_vtk_snapshot_layout(tmp_path):
    m = build_unit_square_mesh(1)
    p = tmp_path / "s.vtk"
    io.write_snapshot(m, np.zeros(4), p, "vtk")
    text = p.read_text()
    assert text.startswith("# vtk DataFile Version")
    assert "DATASET UNSTRUCTURED_GRID" in text
    assert "POINTS 4 double" in text and "CELLS 2 8" in text
    assert "SCALARS phi double 1" in text
    pts, cells, types, phi = io.read_snapshot_vtk(p)
    assert pts.shape == (4, 3) and np.all(pts[:, 2] == 0)
    assert cells.shape == (2, 4) and np.all(cells[:, 0] == 3)
    assert np.all(types == io.VTK_TRIANGLE)
    assert not phi.any()


def test_csv_snapshot_round_trip(tmp_path):
    m = build_unit_square_mesh(5)
    phi = np.random.default_rng(9).standard_normal(m.num_nodes)
    p = tmp_path / "s.csv"
    io.write_snapshot(m, phi, p, "csv")
    xy, back = io.read_snapshot_csv(p)
    assert np.array_equal(back, phi) and np.array_equal(xy, m.nodes)
    assert len(p.read_text().splitlines()) == 1 + 36
    p2 = tmp_path / "t.csv"
    io.write_snapshot(m, phi, p2, "csv")
    assert p.read_bytes() == p2.read_bytes()


def test_vtk_round_trip_values(tmp_path):
    m = build_unit_square_mesh(3)
    phi = np.random.default_rng(10).standard_normal(m.num_nodes)
    p = tmp_path / "s.vtk"
    io.write_snapshot(m, phi, p)
    _, cells, _, back = io.read_snapshot_vtk(p)
    assert np.array_equal(back, phi)
    assert np.array_equal(cells[:, 1:], m.triangles)


def test_trace_round_trip(tmp_path):
    recs = [DiagnosticsRecord(0.1, 1e-17, 2.0 / 3.0, 1.0 / 7.0, 0.3, 12.5)]
    io.write_trace(recs, tmp_path / "t.csv")
    assert io.read_trace(tmp_path / "t.csv") == recs
