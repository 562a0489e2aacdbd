import json
from fractions import Fraction

import pytest

from paramred.cli import main, parse_entry, parse_equation, parse_system
from paramred.errors import DimensionMismatch, ParseError
from paramred.linalg import Trunc

F = Fraction


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_entry_examples():
    b = parse_entry("(2*x+1)*eps^5")
    assert b.val_eps() == 5
    assert b.coeff(5).c == {F(1): __import__("paramred.coeff", fromlist=["QQ"]).QQ.from_fraction(2),
                            F(0): __import__("paramred.coeff", fromlist=["QQ"]).QQ.one()}
    b = parse_entry("x^3-eps")
    assert b.coeff(0).c.keys() == {F(3)}
    assert b.coeff(1).c.keys() == {F(0)}
    # xi with a declared sigma expands to x^sigma eps
    b = parse_entry("xi^2", sigma=F(-3))
    assert b.monomials()[0][1] == F(-6) and b.monomials()[0][2] == 2
    # rational literals and division by monomials
    b = parse_entry("1/2 * x / eps")
    c, xe, ke = b.monomials()[0]
    assert (c.as_fraction(), xe, ke) == (F(1, 2), F(1), F(-1))
    with pytest.raises(ParseError):
        parse_entry("1/(1+x)")


def test_parse_system_and_errors():
    src = parse_system("n=2 h=1 p=0 sigma=0  A=[[0,1],[x^3-eps,0]]")
    assert src.n == 2
    with pytest.raises(DimensionMismatch):
        parse_system("A=[[0,1],[0]]")
    with pytest.raises(ParseError):
        parse_system("n=2 h=1 sigma=1 A=[[0,1],[0,0]]")


def test_parse_equation():
    eq = parse_equation("sigma=0 D^3 f - (x/xi^2) D^2 f - (1/xi^5) f = 0")
    assert eq.n == 3
    assert eq.a[2].val_eps() == -2
    assert eq.a[0].val_eps() == -5
    assert eq.a[1].is_known_zero()


def test_cli_reduce_intro(tmp_path, capsys):
    f = tmp_path / "intro.sys"
    f.write_text("n=2 h=1 p=0 sigma=0 A=[[0,1],[x^3-eps,0]]")
    code, out, err = run_cli(capsys, "reduce", str(f))
    assert code == 0
    data = json.loads(out)
    leads = sorted(t["text"] for b in data["branches"] for t in b["terms"])
    assert leads == ["-2/5*x^(5/2)*eps^(-1)", "2/5*x^(5/2)*eps^(-1)"]
    assert data["restraining_indices"] == ["1/3"]


def test_cli_determinism(tmp_path, capsys):
    f = tmp_path / "intro.sys"
    f.write_text("n=2 h=1 p=0 sigma=0 A=[[0,1],[x^3-eps,0]]")
    code1, out1, _ = run_cli(capsys, "reduce", str(f), "--trace")
    code2, out2, _ = run_cli(capsys, "reduce", str(f), "--trace")
    assert code1 == code2 == 0
    assert out1 == out2


def test_cli_polygon(tmp_path, capsys):
    f = tmp_path / "eq.txt"
    f.write_text("sigma=0 D^3 f - (x/xi^2) D^2 f - (1/xi^5) f = 0")
    code, out, _ = run_cli(capsys, "polygon", str(f))
    assert code == 0
    data = json.loads(out)
    assert data["slopes"] == ["3/2", "2"]
    assert data["polynomials"] == ["x*X^2 + 1", "X^3 - x*X^2"]
    assert data["omega"] == "2"


def test_cli_omega_precondition_exit3(tmp_path, capsys):
    f = tmp_path / "h0.sys"
    f.write_text("n=1 h=0 p=0 sigma=0 A=[[x]]")
    code, out, err = run_cli(capsys, "omega", str(f))
    assert code == 3
    assert "precondition" in err


def test_cli_parse_error_exit2(tmp_path, capsys):
    f = tmp_path / "bad.sys"
    f.write_text("n=2 h=1 A=[[0,1],[0]]")
    code, out, err = run_cli(capsys, "reduce", str(f))
    assert code == 2


def test_cli_moser_rank_reduce(tmp_path, capsys):
    f = tmp_path / "algo.sys"
    f.write_text(
        "n=4 h=4 p=0 sigma=0 A=[[2*x*eps^3, 3*x^2*eps^4, 2*x*eps^2, (2*x+1)*eps^5],"
        "[0, eps^4, 0, 0],[0, 0, eps^2, 0],[-2*x, 0, 0, 0]]"
    )
    code, out, _ = run_cli(capsys, "moser", str(f))
    assert code == 0
    data = json.loads(out)
    assert data["h_history"][0][0] == 4
    assert data["system"]["h"] == 2
    assert data["theta"] != "0"


def test_cli_stretch_and_omega(tmp_path, capsys):
    f = tmp_path / "intro.sys"
    f.write_text("n=2 h=1 p=0 sigma=0 A=[[0,1],[x^3-eps,0]]")
    code, out, _ = run_cli(capsys, "stretch", str(f), "--rho", "1/3")
    assert code == 0
    data = json.loads(out)
    assert data["system"]["var"] == "tau"
    assert data["system"]["h"] == 2


def test_round_trip_emitted_system(tmp_path, capsys):
    f = tmp_path / "weber.sys"
    f.write_text("n=2 h=1 p=0 sigma=0 A=[[0,1],[x^2,0]]")
    code, out, _ = run_cli(capsys, "turning", str(f))
    assert code == 0
    data = json.loads(out)
    sysd = data["system"]
    # re-parse the emitted entries under the emitted presentation
    n = sysd["n"]
    text = "n=%d h=%s p=%s sigma=%s A=[[%s]]" % (
        n, sysd["h"], sysd["p"], sysd["sigma"],
        "],[".join(",".join("(%s)" % e for e in row) for row in sysd["A"]),
    )
    src2 = parse_system(text)
    sys2 = src2.to_system(Trunc())
    assert sys2.h == int(sysd["h"])
    assert str(sys2.sigma) == sysd["sigma"]
    # emitted entries parse back to the same raw operator
    again = sys2.entry_strings()
    assert again == sysd["A"]
