import json
import shutil
import subprocess
import sys

import pytest

from wavebea.cli import EXIT_GOLDEN, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main


def _problem(tmp_path, text):
    p = tmp_path / "problem.yaml"
    p.write_text(text)
    return str(p)


def test_derive_writes_files_and_manifest(tmp_path):
    out = tmp_path / "o"
    assert main(["derive", "--order", "2", "--out-dir", str(out)]) == EXIT_OK
    names = sorted(p.name for p in out.iterdir())
    assert names == ["high_order_ode.txt", "lagrangian.txt", "manifest.json", "reduced_ode.txt"]
    red = (out / "reduced_ode.txt").read_text()
    assert "(alpha^2 + V1)" in red and "c^2 - 1" in red
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["files"]) == {"high_order_ode.txt", "lagrangian.txt", "reduced_ode.txt"}


def test_derive_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["derive", "--order", "2", "--out-dir", str(a)])
    main(["derive", "--order", "2", "--out-dir", str(b)])
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_derive_order_zero_is_continuous(tmp_path):
    out = tmp_path / "o"
    main(["derive", "--order", "0", "--out-dir", str(out)])
    red = (out / "reduced_ode.txt").read_text()
    assert "h^2" not in red


def test_derive_latex_and_json(tmp_path):
    assert main(["derive", "--format", "latex", "--out-dir", str(tmp_path / "l")]) == EXIT_OK
    assert "\\frac" in (tmp_path / "l" / "reduced_ode.tex").read_text()
    assert main(["derive", "--format", "json", "--out-dir", str(tmp_path / "j")]) == EXIT_OK
    data = json.loads((tmp_path / "j" / "result.json").read_text())
    assert set(data) == {"lagrangian", "high_order_ode", "reduced_ode"}


def test_problem_file(tmp_path):
    f = _problem(tmp_path, "kind: travelling\ndim: 1\nc: 1/2\ntrunc: 2\n")
    assert main(["derive", "--problem", f, "--out-dir", str(tmp_path / "o")]) == EXIT_OK
    assert "W_1" in (tmp_path / "o" / "reduced_ode.txt").read_text()


@pytest.mark.parametrize("text", ["c: 1\n", "kind: spinning\n", "speed: 2\n", "- a\n- b\n", "c: [\n"])
def test_validation_errors(tmp_path, text, capsys):
    f = _problem(tmp_path, text)
    assert main(["derive", "--problem", f]) == EXIT_VALIDATION
    assert "validation error" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["derive", "--bogus"])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == EXIT_USAGE
    assert main(["derive", "--problem", str(tmp_path / "missing.yaml")]) == EXIT_USAGE
    assert main(["derive", "--format", "csv"]) == EXIT_USAGE
    assert main(["simulate", "--preset", "nope"]) == EXIT_USAGE
    assert main(["fit-pseries", "--order", "3"]) == EXIT_USAGE


def test_hamiltonian_and_invariant(tmp_path):
    assert main(["hamiltonian", "--out-dir", str(tmp_path / "h")]) == EXIT_OK
    assert "flow check: True" in (tmp_path / "h" / "checks.txt").read_text()
    assert main(["invariant", "--out-dir", str(tmp_path / "i")]) == EXIT_OK
    assert "conserved on-shell: True" in (tmp_path / "i" / "checks.txt").read_text()
    f = _problem(tmp_path, "kind: travelling\ndim: 2\n")
    assert main(["invariant", "--problem", f]) == EXIT_VALIDATION


def test_fit_pseries(tmp_path):
    assert main(["fit-pseries", "--order", "4", "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "pseries_coefficients.txt").read_text().splitlines()
    assert len(rows) == 6
    assert rows[1].startswith("a_2,2  b(w,w)")


def test_simulate_fig4(tmp_path, capsys):
    assert main(["simulate", "--preset", "fig4", "--out-dir", str(tmp_path)]) == EXIT_OK
    man = json.loads((tmp_path / "fig4.manifest.json").read_text())
    assert man["settings"]["drift"]["I0"] < 1e-10
    header = (tmp_path / "fig4.csv").read_text().splitlines()[0]
    assert header == "xi,q1,q2,p1,p2,H0,I0"
    assert "I0: drift" in capsys.readouterr().out


def test_simulate_numeric_failure(tmp_path):
    assert main(["simulate", "--preset", "fig4", "--tol", "0", "--out-dir", str(tmp_path)]) == 4


def test_verify_output_format(capsys):
    code = main(["verify"])
    out = capsys.readouterr().out.splitlines()
    assert out[-1].endswith("golden identities matched")
    k, n = out[-1].split()[0].split("/")
    assert int(n) == len(out) - 1 == 28
    assert all(line.startswith(("PASS", "FAIL")) for line in out[:-1])
    assert code == (EXIT_OK if k == n else EXIT_GOLDEN)


@pytest.mark.skipif(shutil.which("wavebea") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["wavebea", "derive", "--order", "0"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "== reduced_ode.txt" in r.stdout
    r = subprocess.run([sys.executable, "-m", "wavebea.cli", "derive", "--nope"], capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE
