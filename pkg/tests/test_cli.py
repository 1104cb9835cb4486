import json

import numpy as np
import pytest

from braketsim import fraunhofer_geometry, make_model, save_geometry, save_model
from braketsim.cli import main
from conftest import random_hermitian


@pytest.fixture
def rabi_files(tmp_path):
    save_model(make_model([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]]), tmp_path / "model.json")
    (tmp_path / "initial.json").write_text(json.dumps({"amplitudes": [[1.0, 0.0], [0.0, 0.0]]}))
    return tmp_path


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_amone_table_model(rabi_files, capsys):
    out = rabi_files / "table.csv"
    assert main(["amone-table", "--model", str(rabi_files / "model.json"),
                 "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header[0] == "row"
    kinds = {r[0] for r in rows}
    assert kinds == {"column", "target"}
    assert "generator residual" in capsys.readouterr().out


def test_amone_table_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["amone-table", "--sweep", "101", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["p_mm", "S", "W", "abs_f_mm"]
    assert len(rows) == 101
    s = np.array([float(r[1]) for r in rows])
    assert s[0] == 1.0 and s[-1] == 0.0
    assert np.all(np.diff(s) <= 0)


def test_amone_table_needs_exactly_one_mode(tmp_path):
    assert main(["amone-table", "--out", str(tmp_path / "x.csv")]) == 2


def test_evolve_roundtrip_and_determinism(rabi_files):
    args = ["evolve", "--model", str(rabi_files / "model.json"),
            "--initial", str(rabi_files / "initial.json"),
            "--time", "0.8", "--trajectories", "20000", "--seed", "5"]
    out1, out2 = rabi_files / "a.csv", rabi_files / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2), "--threads", "4"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    header, rows = read_csv(out1)
    assert header == ["l", "m", "re_mean", "im_mean", "re_stderr", "im_stderr"]
    assert len(rows) == 4
    rho00 = float(rows[0][2])
    assert abs(rho00 - np.cos(0.8) ** 2) < 5 * float(rows[0][4])


def test_evolve_rejects_single_pair(rabi_files):
    assert main(["evolve", "--model", str(rabi_files / "model.json"),
                 "--initial", str(rabi_files / "initial.json"),
                 "--time", "0.5", "--trajectories", "1",
                 "--out", str(rabi_files / "x.csv")]) == 2


def test_missing_model_file_is_io_error(tmp_path):
    assert main(["evolve", "--model", str(tmp_path / "nope.json"),
                 "--initial", str(tmp_path / "nope2.json"),
                 "--time", "0.5", "--out", str(tmp_path / "x.csv")]) == 4


def test_malformed_model_file_is_validation_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["evolve", "--model", str(bad), "--initial", str(bad),
                 "--time", "0.5", "--out", str(tmp_path / "x.csv")]) == 2


def test_non_hermitian_model_file_rejected(tmp_path):
    bad = tmp_path / "model.json"
    bad.write_text(json.dumps({
        "dim": 2, "hbar": 1.0, "free_energies": [0.0, 0.0],
        "interaction": [[[0.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 0.0]]]}))
    (tmp_path / "initial.json").write_text(json.dumps({"amplitudes": [[1.0, 0.0], [0.0, 0.0]]}))
    assert main(["evolve", "--model", str(bad),
                 "--initial", str(tmp_path / "initial.json"),
                 "--time", "0.5", "--out", str(tmp_path / "x.csv")]) == 2


def test_unknown_command_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_epr_grid(tmp_path):
    out = tmp_path / "epr.csv"
    assert main(["epr", "--theta1", "0.0", "--theta1", "0.3", "--theta2", "0.2",
                 "--trajectories", "20000", "--seed", "3", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["theta", "kind", "exact", "mc_mean", "mc_stderr"]
    assert len(rows) == 8  # two theta1 values x one theta2 x four kinds
    for r in rows:
        assert abs(float(r[3]) - float(r[2])) < 5 * max(float(r[4]), 1e-12)


def test_epr_chsh(tmp_path, capsys):
    out = tmp_path / "chsh.csv"
    assert main(["epr", "--chsh", "0", "0.7853981633974483", "-0.39269908169872414",
                 "-1.1780972450961724", "--trajectories", "20000", "--seed", "1",
                 "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "CHSH exact = 2.828427" in text
    header, rows = read_csv(out)
    assert [r[0] for r in rows] == ["chsh_exact", "chsh_mc", "chsh_mc_stderr"]


def test_doubleslit_modes(tmp_path):
    geom = fraunhofer_geometry(points_per_slit=4, n_bins=21)
    save_geometry(geom, tmp_path / "geom.json")
    closed, pairs, mc = (tmp_path / n for n in ("c.csv", "p.csv", "m.csv"))
    base = ["doubleslit", "--geometry", str(tmp_path / "geom.json")]
    assert main(base + ["--mode", "closed", "--out", str(closed)]) == 0
    assert main(base + ["--mode", "pairs", "--out", str(pairs)]) == 0
    assert main(base + ["--mode", "mc", "--trajectories", "50000", "--seed", "2",
                        "--out", str(mc)]) == 0
    h1, r1 = read_csv(closed)
    h2, r2 = read_csv(pairs)
    assert h1 == h2 == ["x", "P_I", "P_II", "P_both"]
    for a, b in zip(r1, r2):
        for va, vb in zip(a, b):
            assert float(va) == pytest.approx(float(vb), rel=1e-12, abs=1e-25)
    h3, r3 = read_csv(mc)
    assert h3 == ["x", "P_I", "P_I_stderr", "P_II", "P_II_stderr",
                  "P_both", "P_both_stderr"]
    for row, exact in zip(r3, r1):
        for i in (1, 2, 3):
            mean, se = float(row[2 * i - 1]), float(row[2 * i])
            assert abs(mean - float(exact[i])) < 5 * max(se, 1e-9)


def test_doubleslit_single_configuration(tmp_path):
    save_geometry(fraunhofer_geometry(points_per_slit=2, n_bins=11), tmp_path / "geom.json")
    out = tmp_path / "one.csv"
    assert main(["doubleslit", "--geometry", str(tmp_path / "geom.json"),
                 "--slits", "I", "--out", str(out)]) == 0
    header, _rows = read_csv(out)
    assert header == ["x", "P_I"]


def test_compare_exact_passes_on_rabi(rabi_files, capsys):
    out = rabi_files / "cmp.csv"
    assert main(["compare-exact", "--model", str(rabi_files / "model.json"),
                 "--initial", str(rabi_files / "initial.json"),
                 "--time", "0.5", "--time", "1.0",
                 "--trajectories", "20000", "--seed", "9", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.count("-> pass") == 2
    header, rows = read_csv(out)
    assert header == ["time", "l", "m", "part", "mc_mean", "mc_stderr", "exact", "z"]
    assert len(rows) == 2 * 4 * 2  # times x matrix entries x (re, im)


def test_compare_exact_ladder(rabi_files, capsys):
    out = rabi_files / "ladder.csv"
    code = main(["compare-exact", "--model", str(rabi_files / "model.json"),
                 "--initial", str(rabi_files / "initial.json"),
                 "--time", "1.0", "--ladder", "1000", "3000", "10000", "30000",
                 "100000", "--seed", "49", "--out", str(out)])
    assert code == 0
    assert "slope" in capsys.readouterr().out
    header, rows = read_csv(out)
    assert header == ["pairs", "error_fro"]
    assert len(rows) == 5


def test_compare_exact_ladder_exact_case(tmp_path, capsys):
    save_model(make_model([0.3, -0.3], np.zeros((2, 2))), tmp_path / "model.json")
    (tmp_path / "initial.json").write_text(json.dumps({"amplitudes": [[1.0, 0.0], [0.0, 0.0]]}))
    assert main(["compare-exact", "--model", str(tmp_path / "model.json"),
                 "--initial", str(tmp_path / "initial.json"),
                 "--time", "1.0", "--ladder", "100", "200",
                 "--seed", "1", "--out", str(tmp_path / "l.csv")]) == 0
    assert "exact case" in capsys.readouterr().out


def test_plot_files_rendered(rabi_files, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["amone-table", "--sweep", "51", "--out", str(out), "--plot"]) == 0
    assert (tmp_path / "sweep.png").exists()
    geom = tmp_path / "geom.json"
    save_geometry(fraunhofer_geometry(points_per_slit=2, n_bins=11), geom)
    out2 = tmp_path / "prof.csv"
    assert main(["doubleslit", "--geometry", str(geom), "--out", str(out2),
                 "--plot"]) == 0
    assert (tmp_path / "prof.png").exists()


def test_dim4_random_model_compare(tmp_path):
    rng = np.random.default_rng(4)
    V = random_hermitian(4, rng)
    V += 0.6 * np.abs(V).sum(axis=0).max() * np.eye(4)
    save_model(make_model(rng.normal(size=4), V), tmp_path / "model.json")
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    a /= np.linalg.norm(a)
    (tmp_path / "initial.json").write_text(json.dumps(
        {"amplitudes": [[z.real, z.imag] for z in a]}))
    assert main(["compare-exact", "--model", str(tmp_path / "model.json"),
                 "--initial", str(tmp_path / "initial.json"),
                 "--time", "0.3", "--trajectories", "30000", "--seed", "6",
                 "--out", str(tmp_path / "cmp.csv")]) == 0
