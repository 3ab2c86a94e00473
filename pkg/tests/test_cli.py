import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from momentsys.cli import ProblemFile, ResultBundle, format_report, main
from momentsys.errors import ParseError

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "problems"

EXPECTED_EXIT = {
    "basis_gamma": 0,
    "catalan_example": 0,
    "cov_gammaratio": 0,
    "jackson_q2": 0,
    "planar_diagonal": 0,
    "planar_jordan": 0,
    "resonant_check": 2,
    "zmb_jordan": 0,
    "zmb_q_jordan": 0,
}


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(argv, capsys=None):
    code = main(argv)
    out = capsys.readouterr().out if capsys else ""
    return code, out


def load(path):
    return json.loads(Path(path).read_text())


def test_catalan_solve(tmp_path, capsys):
    out = tmp_path / "cat"
    code, text = run(["solve", str(DEMOS / "catalan_example.toml"), "--out", str(out)], capsys)
    assert code == 0
    data = load(f"{out}.json")
    assert_allclose(data["hypothesis_reports"][0]["h2"]["bound_C"], 2.0, rtol=1e-12)
    s1 = np.array(data["solutions"][0]["series"]["coeffs"][1])
    assert_allclose(s1[:, 0], [1.0, 0.0], atol=1e-14)
    assert_allclose(s1[:, 1], [0.0, 0.0], atol=1e-14)
    assert all(r <= 1e-10 for r in data["residuals"])
    assert "mu = 1+0j" in text and "residual" in text


def test_check_resonant(tmp_path, capsys):
    out = tmp_path / "res"
    code, text = run(["check", str(DEMOS / "resonant_check.toml"), "--out", str(out)], capsys)
    assert code == 2
    data = load(f"{out}.json")
    assert data["hypothesis_reports"][0]["h1"]["resonances"][0] == 2
    assert "resonance table" in text


def test_zmb_diagonal(tmp_path):
    prob = write(tmp_path, "z.toml", 'version = 1\n[problem]\nmode = "zmb"\nsequence = "factorial"\n'
                 "A = [[0, 0], [0, 0]]\nB = [[1.5, 0], [0, 2.25]]\n")
    out = tmp_path / "z"
    assert main(["zmb", str(prob), "--out", str(out), "--quiet"]) == 0
    sol = load(f"{out}.json")["solutions"][0]
    cols = sol["columns"]
    assert [c["type"] for c in cols] == ["monomial", "monomial"]
    assert_allclose([c["mu"][0] for c in cols], [1.5, 2.25])
    assert_allclose(np.array(cols[0]["s0"])[:, 0], [1, 0])
    assert_allclose(np.array(cols[1]["s0"])[:, 0], [0, 1])


@pytest.mark.parametrize("name", sorted(EXPECTED_EXIT))
def test_demo_problems(tmp_path, name):
    out = tmp_path / name
    assert main(["run", str(DEMOS / f"{name}.toml"), "--out", str(out), "--quiet", "--csv"]) == EXPECTED_EXIT[name]
    data = load(f"{out}.json")
    if EXPECTED_EXIT[name] == 0:
        assert data["solutions"]
        assert all(r is not None and r <= 1e-10 for r in data["residuals"])


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["run", str(DEMOS / "planar_jordan.toml"), "--out", str(out), "--quiet", "--csv"])
    assert Path(f"{a}.json").read_bytes() == Path(f"{b}.json").read_bytes()
    assert Path(f"{a}.coeffs.csv").read_bytes() == Path(f"{b}.coeffs.csv").read_bytes()


def test_parse_error_exit_1(tmp_path):
    prob = write(tmp_path, "bad.toml", 'version = 1\n[problem]\nsequence = "nosuch"\nA = [[1]]\nB = [[1]]\n')
    out = tmp_path / "bad"
    assert main(["solve", str(prob), "--out", str(out), "--quiet"]) == 1
    assert load(f"{out}.json")["error"]["type"] == "ParseError"


def test_dimension_mismatch_exit_1(tmp_path):
    prob = write(tmp_path, "dim.toml", 'version = 1\n[problem]\nsequence = "factorial"\nA = [[1]]\nB = [[1, 0], [0, 2]]\n')
    assert main(["solve", str(prob), "--out", str(tmp_path / "dim"), "--quiet"]) == 1


def test_missing_file_exit_1(tmp_path):
    assert main(["solve", str(tmp_path / "none.toml"), "--out", str(tmp_path / "none"), "--quiet"]) == 1


def test_overrides(tmp_path):
    out = tmp_path / "t"
    main(["solve", str(DEMOS / "catalan_example.toml"), "--out", str(out), "--quiet", "--trunc", "7", "--pmax", "50"])
    data = load(f"{out}.json")
    assert len(data["solutions"][0]["series"]["coeffs"]) == 8
    assert data["hypothesis_reports"][0]["h1"]["checked_up_to"] == 50


def test_tolerance_flag_forces_exit_2(tmp_path):
    out = tmp_path / "t"
    assert main(["solve", str(DEMOS / "catalan_example.toml"), "--out", str(out), "--quiet", "--tol", "-1"]) == 2


def test_batch(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    for name in ("catalan_example", "resonant_check"):
        shutil.copy(DEMOS / f"{name}.toml", src)
    out = tmp_path / "out"
    assert main(["batch", str(src), "--out", str(out), "--quiet", "--workers", "2"]) == 2
    assert {p.name for p in out.glob("*.json")} == {"catalan_example.json", "resonant_check.json"}


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "momentsys", "check", str(DEMOS / "resonant_check.toml"), "--out", str(tmp_path / "x")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "FAILS" in proc.stdout


def test_report_no_solutions():
    bundle = ResultBundle("basis", {"problem": {"sequence": "catalan"}})
    assert "no Floquet solutions found in region" in format_report(bundle)


def test_problem_round_trip():
    pf = ProblemFile.from_toml((DEMOS / "zmb_q_jordan.toml").read_text())
    assert ProblemFile.from_toml(pf.to_toml()) == pf
    pf = ProblemFile.from_toml((DEMOS / "cov_gammaratio.toml").read_text())
    assert ProblemFile.from_toml(pf.to_toml()) == pf


def test_problem_file_errors():
    with pytest.raises(ParseError):
        ProblemFile.from_toml("not toml [")
    with pytest.raises(ParseError):
        ProblemFile.from_toml('[problem]\nsequence = "factorial"\nA = [[1]]\nB = [[1]]\nbogus = 1\n')
    with pytest.raises(ParseError):
        ProblemFile.from_toml('[problem]\nsequence = "factorial"\nA = [[1]]\nB = [[1]]\ntruncation = 0\n')


cplx = st.builds(complex, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.lists(cplx, min_size=n * n, max_size=n * n), st.lists(cplx, min_size=n * n, max_size=n * n), st.just(n))),
    st.sampled_from(["factorial", "catalan", "qfactorial:q=2.0", "gammaratio:alpha=2.0"]),
    st.integers(1, 40), st.one_of(st.none(), cplx))
def test_problem_round_trip_random(mats, seqname, N, lam):
    a, b, n = mats
    pf = ProblemFile(np.array(a).reshape(n, n), np.array(b).reshape(n, n), seqname, N=N, lam=lam)
    assert ProblemFile.from_toml(pf.to_toml()) == pf


def test_bundle_round_trip(tmp_path):
    out = tmp_path / "cat"
    main(["solve", str(DEMOS / "catalan_example.toml"), "--out", str(out), "--quiet"])
    text = Path(f"{out}.json").read_text()
    assert ResultBundle.from_json(text).to_json() == text
