import io
import subprocess
import sys
from pathlib import Path

import pytest

from reliquant.cli import main
from reliquant.report import read_report

SAMPLES = Path(__file__).resolve().parents[1] / "samples"


def run(*argv):
    out = io.StringIO()
    try:
        code = main([str(a) for a in argv], out)
    except SystemExit as exc:
        code = exc.code
    return code, out.getvalue()


def test_plan_per_demand():
    code, out = run("plan", "--pfd", "1e-6", "--confidence", "0.99")
    assert code == 0
    assert "tests: 4605168" in out and "4.61e6" in out and "4.61 million failure-free tests" in out


def test_plan_per_hour():
    code, out = run("plan", "--rate", "1e-6", "--confidence", "0.99", "--per-hour")
    assert code == 0
    assert "hours: 4605170.18" in out and "4.61 million hours" in out


@pytest.mark.parametrize("argv", [
    ("plan", "--pfd", "1.5", "--confidence", "0.99"),
    ("plan", "--pfd", "0", "--confidence", "0.99"),
    ("plan", "--pfd", "1e-6", "--confidence", "1"),
    ("plan", "--pfd", "1e-6", "--confidence", "0.99", "--per-hour"),
    ("plan", "--confidence", "0.99"),
    ("plan", "--pfd", "x", "--confidence", "0.9"),
    ("bogus",),
])
def test_plan_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_tree_eval_both_methods():
    code, out = run("tree", "eval", SAMPLES / "fig1_optimistic.ft")
    assert code == 0
    exact = float(out.split("exact: ")[1].split()[0])
    assert exact == pytest.approx(1e-5, rel=1e-9)
    assert "rare_event:" in out


def test_tree_rank_inversion():
    def first_row(name):
        code, out = run("tree", "rank", SAMPLES / name)
        assert code == 0
        return out.splitlines()[1].split()[1]

    assert first_row("fig1_optimistic.ft") == "C"
    assert first_row("fig1_justified.ft") in ("A", "B")


def test_tree_cuts():
    code, out = run("tree", "cuts", SAMPLES / "fig1_justified.ft")
    assert out.splitlines() == ["{A, B}", "{C}"]


def test_tree_errors(tmp_path):
    empty = tmp_path / "empty.ft"
    empty.write_text("")
    assert run("tree", "eval", empty)[0] == 2
    bad = tmp_path / "bad.ft"
    bad.write_text("event A p=2\ntop A\n")
    assert run("tree", "eval", bad)[0] == 2
    assert run("tree", "eval", tmp_path / "missing.ft")[0] == 2


@pytest.fixture
def small_domain(tmp_path):
    path = tmp_path / "small.dom"
    path.write_text("field temp int 0 29\nfield pressure int 0 21\nfield rate int 0 7\n"
                    "field override flag\nfield armed flag\nfield sensor_ok flag\n")
    return path


def test_run_exhaustive_clean(small_domain, tmp_path):
    report, claim = tmp_path / "r.txt", tmp_path / "claim.ft"
    code, out = run("run", "--domain", small_domain, "--spec", SAMPLES / "exhaustive.spec",
                    "--subject", "builtin:monitor", "--oracle", "expected:monitor",
                    "--report", report, "--claim", claim, "--workers", "2")
    assert code == 0
    assert read_report(report).executed == 30 * 22 * 8 * 8
    assert claim.read_text().startswith("event sw_make_safe p=0.0")
    assert "exhaustively verified" in out


def test_run_mutant_exits_1(small_domain, tmp_path):
    code, out = run("run", "--domain", small_domain, "--spec", SAMPLES / "exhaustive.spec",
                    "--subject", "builtin:monitor_mutant", "--oracle", "expected:monitor",
                    "--report", tmp_path / "r.txt", "--show", "3")
    assert code == 1
    assert "first 3 of" in out
    code, out = run("report", tmp_path / "r.txt", "--show", "1")
    assert code == 0 and "first 1 of" in out


def test_run_partial(small_domain, tmp_path):
    code, out = run("run", "--domain", small_domain, "--spec", SAMPLES / "partial.spec",
                    "--subject", "builtin:monitor", "--oracle", "make-safe:make_safe_required",
                    "--report", tmp_path / "r.txt")
    assert code == 0 and "points satisfying make_safe_required" in out


def test_run_statistical(small_domain, tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text("mode=statistical\nn=20000\nseed=9\nprofile=nominal\n")
    prof = tmp_path / "p.prof"
    prof.write_text("profile nominal\nstratum w=3\n  restrict temp 0..23\nstratum w=1\n  restrict temp 24..29\n")
    args = ("run", "--domain", small_domain, "--spec", spec, "--subject", "builtin:monitor",
            "--oracle", "expected:monitor", "--profile", prof)
    code, out = run(*args, "--report", tmp_path / "a.txt", "--event-id", "sw")
    assert code == 0 and "event sw p=" in out
    run(*args, "--report", tmp_path / "b.txt", "--workers", "3")
    a, b = read_report(tmp_path / "a.txt"), read_report(tmp_path / "b.txt")
    assert a.deterministic_view() == b.deterministic_view()


def test_profile_outside_domain_is_usage_error(small_domain, tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text("mode=statistical\nn=10\nprofile=nominal\n")
    code, _ = run("run", "--domain", small_domain, "--spec", spec, "--subject", "builtin:monitor",
                  "--oracle", "expected:monitor", "--profile", SAMPLES / "profiles.prof",
                  "--report", tmp_path / "r.txt")
    assert code == 2


def test_run_usage_and_runtime_errors(small_domain, tmp_path):
    base = ("--domain", small_domain, "--report", tmp_path / "r.txt", "--oracle", "expected:monitor")
    # statistical without a profile file
    assert run("run", *base, "--spec", SAMPLES / "statistical.spec", "--subject", "builtin:monitor")[0] == 2
    # profile named in spec absent from the file
    spec = tmp_path / "s.spec"
    spec.write_text("mode=statistical\nn=10\nprofile=rush_hour\n")
    assert run("run", *base, "--spec", spec, "--subject", "builtin:monitor",
               "--profile", SAMPLES / "profiles.prof")[0] == 2
    assert run("run", *base, "--spec", SAMPLES / "exhaustive.spec", "--subject", "builtin:nope")[0] == 2
    assert run("run", *base, "--spec", SAMPLES / "exhaustive.spec", "--subject", "cmd:/no/such/binary")[0] == 3


def test_run_subprocess_subject(small_domain, tmp_path):
    code, _ = run("run", "--domain", small_domain, "--spec", SAMPLES / "exhaustive.spec",
                  "--subject", f"cmd:{sys.executable} {SAMPLES / 'monitor_sut.py'}",
                  "--oracle", "expected:monitor", "--report", tmp_path / "r.txt")
    assert code == 0


def test_report_errors(tmp_path):
    assert run("report", tmp_path / "missing.txt")[0] == 2
    corrupt = tmp_path / "c.txt"
    corrupt.write_text("format=reliquant-report/1\nmode=exhaustive\n")
    assert run("report", corrupt)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "reliquant", "plan", "--pfd", "1e-6", "--confidence", "0.99"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "4605168" in proc.stdout
