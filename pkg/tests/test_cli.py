import csv

import pytest

from geostein.cli import main, parse_int_list
from geostein.errors import ConfigError


def test_parse_int_list():
    assert parse_int_list("0..3") == (0, 1, 2, 3)
    assert parse_int_list("50, 100,200") == (50, 100, 200)
    assert parse_int_list("1,4..5") == (1, 4, 5)
    for bad in ("", "a", "5..2", "1.5"):
        with pytest.raises(ConfigError):
            parse_int_list(bad)


def test_run_writes_csv_svg_and_dump(tmp_path, capsys):
    out, svg, grid = tmp_path / "r.csv", tmp_path / "f.svg", tmp_path / "g.csv"
    code = main(["run", "--kernel", "k1:alpha=3.5", "--n-grid", "20,40,80", "--seeds", "0..1",
                 "--points", "iid", "--out", str(out), "--emit-svg", str(svg), "--dump-interpolant", str(grid)])
    assert code == 0
    rows = list(csv.DictReader(line for line in out.read_text().splitlines() if not line.startswith("#")))
    assert len(rows) == 6 and {r["flag"] for r in rows} == {""}
    assert svg.read_text().startswith("<svg")
    assert grid.read_text().startswith("q1,q2,x1,x2,x3,f,f_hat")
    text = capsys.readouterr().out
    assert "fitted slope" in text and "predicted -0.750" in text


def test_single_n_and_seed_and_sigma(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--kernel", "k3:j=2,lambda=2", "--n", "30", "--seed", "3", "--sigma", "1000",
                 "--integrand", "linear", "--out", str(out)]) == 0
    rows = list(csv.reader(line for line in out.read_text().splitlines() if not line.startswith("#")))
    assert len(rows) == 2
    assert rows[1][:6] == ["30", "3", "k3:j=2,lambda=2", "3.5", "2.0", "fibonacci"]


@pytest.mark.parametrize("args", [
    ["--kernel", "k9"],
    ["--kernel", "k1:alpha=3"],
    ["--kernel", "k1:alpha=3.5", "--seeds", "x"],
    ["--kernel", "k1:alpha=3.5", "--integrand", "gaussian"],
    ["--kernel", "k1:alpha=3.5", "--target", "vmf:1,2"],
])
def test_config_errors_exit_2(tmp_path, args, capsys):
    assert main(["run", *args, "--out", str(tmp_path / "x.csv")]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_argument_exit_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--kernel", "k1:alpha=3.5", "--points", "hexagonal", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_all_cells_failed_exit_3(tmp_path, monkeypatch):
    import geostein.experiments as ex
    from geostein.errors import FactorizationFailure

    def boom(*a, **k):
        raise FactorizationFailure("forced")

    monkeypatch.setattr(ex, "assemble_KP", boom)
    assert main(["run", "--kernel", "k1:alpha=3.5", "--n-grid", "20,40", "--out", str(tmp_path / "x.csv")]) == 3
