import csv
import io
import json
import subprocess
import sys

import pytest

from spinweave.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_chain(capsys):
    code, out, _ = run(capsys, "spectrum", "--structure", "chain9", "--ratio", "1.0")
    assert code == 0
    table = rows(out)
    assert out.splitlines()[0] == "index,numeric,analytic,deviation"
    assert len(table) == 9
    assert max(float(r["deviation"]) for r in table) < 1e-10


@pytest.mark.parametrize("name, n", [("full17", 17), ("quotient11", 11), ("square9", 9)])
def test_spectrum_sizes(capsys, name, n):
    code, out, _ = run(capsys, "spectrum", "--structure", name, "--ratio", "0.5")
    table = rows(out)
    assert code == 0 and len(table) == n
    assert max(float(r["deviation"]) for r in table) < 1e-10


def test_invalid_ratio_is_usage_error(capsys):
    code, out, err = run(capsys, "spectrum", "--ratio", "1.5")
    assert code == 2 and out == ""
    assert "0 < ratio <= 1" in err and len(err.strip().splitlines()) == 1


def test_structure_all_rejected_outside_disorder(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--structure", "all"])
    assert exc.value.code == 2


def test_evolve_first_row_and_peak(capsys):
    code, out, _ = run(capsys, "evolve", "--ratio", "0.1", "--tmax", "100", "--dt", "0.01")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["t", "eof", "fidelity", "pop_A", "pop_B", "pop_C"]
    first = table[0]
    assert float(first["t"]) == 0 and float(first["eof"]) == 0 and float(first["fidelity"]) == pytest.approx(1.0)
    early = [r for r in table if float(r["t"]) < 25]
    peak = max(early, key=lambda r: float(r["eof"]))
    assert abs(float(peak["t"]) - 18.02) < 0.05


def test_evolve_structures_agree(capsys):
    cols = []
    for name in ("chain9", "full17"):
        _, out, _ = run(capsys, "evolve", "--structure", name, "--ratio", "0.6", "--tmax", "20")
        cols.append([float(r["eof"]) for r in rows(out)])
    assert max(abs(a - b) for a, b in zip(*cols)) < 1e-8


def test_sweep_single_row(capsys):
    code, out, err = run(capsys, "sweep", "--rmin", "0.7", "--rmax", "0.7", "--steps", "1")
    table = rows(out)
    assert code == 0 and len(table) == 1
    assert list(table[0]) == ["ratio", "t_peak", "eof_peak", "kind", "plateau_flag"]
    assert table[0]["kind"] == "first" and table[0]["plateau_flag"] in ("true", "false")
    assert "best grid point" in err


def test_sweep_finds_first_peak_optimum(capsys):
    _, out, _ = run(capsys, "sweep", "--rmin", "0.8", "--rmax", "0.86", "--steps", "61")
    best = max(rows(out), key=lambda r: float(r["eof_peak"]))
    assert abs(float(best["ratio"]) - 0.82846) < 1e-3
    assert abs(float(best["eof_peak"]) - 0.8745) < 1e-3


@pytest.mark.parametrize("n1, ratio", [(3, 0.504469524022), (2, 0.84446)])
def test_flat(capsys, n1, ratio):
    code, out, _ = run(capsys, "flat", "--n1", str(n1), "--n2", "1")
    [row] = rows(out)
    assert code == 0
    assert float(row["ratio"]) == pytest.approx(ratio, abs=1e-5)
    assert row["periodic"] == "true"
    assert float(row["e_over_eprime"]) == pytest.approx(n1, abs=1e-9)


def test_flat_without_solution_is_domain_error(capsys):
    code, out, err = run(capsys, "flat", "--n1", "1", "--n2", "1")
    assert code == 3 and out == ""
    assert "NoSolutionInDomain" in err


def test_partition_square_grid(capsys):
    code, out, _ = run(capsys, "partition", "--structure", "square9", "--seed-site", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["cells"] == [[1], [2, 4], [3, 7], [5], [6, 8], [9]]
    assert doc["violations"] == []
    assert len(doc["quotient"]["sites"]) == 6


def test_partition_full_graph(capsys):
    code, out, _ = run(capsys, "partition", "--structure", "full17", "--ratio", "0.5", "--seed-site", "A")
    assert code == 0 and len(json.loads(out)["cells"]) == 11


def test_partition_disconnected_input(capsys, tmp_path):
    path = tmp_path / "split.json"
    path.write_text(json.dumps({
        "sites": [{"id": k} for k in range(3)],
        "edges": [{"i": 0, "j": 1, "J": 1.0}],
    }))
    code, out, err = run(capsys, "partition", "--structure", "custom", "--input", str(path), "--seed-site", "1")
    assert code == 2 and "NotConnected" in err


def test_missing_input_file_is_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "partition", "--structure", "custom", "--input", str(tmp_path / "nope.json"))
    assert code == 4 and "cannot read" in err


def test_unwritable_output_is_io_error(capsys, tmp_path):
    code, _, _ = run(capsys, "spectrum", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 4


def test_build_round_trips_through_custom(capsys, tmp_path):
    path = tmp_path / "full.json"
    assert main(["build", "--structure", "full17", "--ratio", "0.3", "--out", str(path)]) == 0
    _, a, _ = run(capsys, "evolve", "--structure", "custom", "--input", str(path), "--tmax", "5")
    _, b, _ = run(capsys, "evolve", "--structure", "full17", "--ratio", "0.3", "--tmax", "5")
    assert a == b


def test_disorder_clean_row_and_determinism(capsys, tmp_path):
    argv = ["disorder", "--ratio", "0.828", "--kind", "diagonal", "--dmax", "0.5", "--dsteps", "3",
            "--realizations", "10", "--seed", "7"]
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(argv + ["--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    table = rows(paths[0].read_text())
    assert list(table[0]) == ["structure", "kind", "D", "mean_eof", "std_eof", "realizations", "seed"]
    assert {r["structure"] for r in table} == {"full17", "quotient11", "chain9"}
    clean = [r for r in table if float(r["D"]) == 0]
    assert all(float(r["std_eof"]) == 0 for r in clean)


def test_timestudy(capsys):
    code, out, _ = run(capsys, "timestudy", "--steps", "2", "--tmax", "50", "--seed", "3")
    table = rows(out)
    assert code == 0 and list(table[0]) == ["ratio", "t_E"] and len(table) == 2


def test_plot_writes_png(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--rmin", "0.5", "--rmax", "1", "--steps", "5", "--out", str(out), "--plot"]) == 0
    png = out.with_suffix(".png")
    assert out.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_plot_requires_out(capsys):
    code, _, err = run(capsys, "spectrum", "--plot")
    assert code == 2 and "--out" in err


def test_module_entry_point_is_byte_stable():
    cmd = [sys.executable, "-m", "spinweave", "evolve", "--ratio", "0.5", "--tmax", "10"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"t,eof,fidelity")
