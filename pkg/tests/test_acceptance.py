"""Acceptance gate: one test per criterion, each printed as a PASS/FAIL line in the summary."""

import itertools
import subprocess
import sys
import time
from pathlib import Path

import mpmath
import pytest

from conftest import fig1_text, monitor_domain, timed
from oracles import brute_force_failures, random_tree, truth_table_probability
from reliquant import builtins
from reliquant.campaign import (
    CampaignSpec,
    Mode,
    Oracle,
    SubjectAdapter,
    parse_campaign_spec,
    run_campaign,
    run_exhaustive,
    run_partial_exhaustive,
)
from reliquant.domain import parse_domain
from reliquant.faulttree import Method, improvement_ranking, parse_fault_tree, top_event_probability
from reliquant.profile import parse_profiles
from reliquant.report import format_report
from reliquant.stats import format_sig, format_words, required_test_count, required_test_hours

HERE = Path(__file__).resolve().parent
SAMPLES = HERE.parent / "samples"
EXPECTED = Oracle.expected("monitor")
mpmath.mp.dps = 60


def _timing_free(report_text):
    drop = ("elapsed=", "throughput=", "throughput_per_worker=", "workers=")
    return "\n".join(ln for ln in report_text.splitlines() if not ln.startswith(drop))


@pytest.mark.criterion(1, "test count for pfd 1e-6 at C=0.99")
def test_criterion_1_test_count():
    seconds, n = timed(required_test_count, 1e-6, 0.99, repeat=20)
    oracle = int(mpmath.ceil(mpmath.log(mpmath.mpf("0.01")) / mpmath.log(1 - mpmath.mpf(10) ** -6)))
    assert n == oracle == 4_605_168
    assert format_sig(n) == "4.61e6"
    assert seconds < 1e-3


@pytest.mark.criterion(2, "test hours for rate 1e-6/h at C=0.99")
def test_criterion_2_test_hours():
    seconds, hours = timed(required_test_hours, 1e-6, 0.99, repeat=20)
    oracle = -mpmath.log(mpmath.mpf("0.01")) / mpmath.mpf(10) ** -6
    assert abs(hours - float(oracle)) <= 1e-6 * float(oracle)
    assert f"{format_words(hours)} hours" == "4.61 million hours"
    assert seconds < 1e-3


def _fig1(a):
    tree = parse_fault_tree(fig1_text(a))
    return top_event_probability(tree, Method.EXACT), improvement_ranking(tree)


@pytest.mark.criterion(3, "dominance inversion in the three-event tree")
def test_criterion_3_dominance_inversion():
    t0 = time.perf_counter()
    top_a, rank_a = _fig1("1e-31")
    top_b, rank_b = _fig1("1e-2")
    seconds = time.perf_counter() - t0

    def hand(a, b=1e-2, c=1e-5):
        return a * b + c - a * b * c

    assert top_a == pytest.approx(hand(1e-31), rel=1e-6)
    assert top_a == pytest.approx(1.0e-5, rel=1e-6)
    assert rank_a.ranking[0] == "C"
    assert top_b == pytest.approx(1.09999e-4, rel=1e-9)
    assert top_b == pytest.approx(hand(1e-2), rel=1e-12)
    assert set(rank_b.ranking[:2]) == {"A", "B"}
    assert seconds < 10e-3


@pytest.mark.criterion(4, "EXACT equals truth table on 500 random trees")
def test_criterion_4_oracle_equivalence():
    import random

    rnd = random.Random(500)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(500):
        tree = random_tree(rnd, max_events=12, log_p=(k % 2 == 1))
        exact = top_event_probability(tree, Method.EXACT)
        truth = truth_table_probability(tree)
        if truth > 0:
            worst = max(worst, abs(exact - truth) / truth)
        else:
            assert exact == 0
    assert worst <= 1e-12, worst
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(5, "2^20 exhaustive run, mutant detection, worker invariance")
def test_criterion_5_exhaustive():
    domain = parse_domain((SAMPLES / "monitor20.dom").read_text())
    assert domain.cardinality == 2**20
    monitor, mutant = SubjectAdapter.builtin("monitor"), SubjectAdapter.builtin("monitor_mutant")

    t0 = time.perf_counter()
    clean = run_exhaustive(domain, monitor, EXPECTED, CampaignSpec(Mode.EXHAUSTIVE, workers=1))
    single_worker = time.perf_counter() - t0
    assert clean.executed == 1_048_576 and clean.failure_count == 0
    assert clean.certificate.verified == 1_048_576
    assert single_worker < 120

    cap = 2**20
    bad = run_exhaustive(domain, mutant, EXPECTED, CampaignSpec(Mode.EXHAUSTIVE, workers=1, failure_cap=cap))
    brute = brute_force_failures([f.values for f in domain.fields], builtins.monitor_mutant,
                                 builtins.expected_monitor)
    assert brute
    ours = "\n".join(str(f.index) for f in bad.failures).encode()
    assert ours == "\n".join(map(str, brute)).encode()
    assert bad.failure_count == len(brute)

    for workers in (2, 4, 8):
        again = run_exhaustive(domain, monitor, EXPECTED, CampaignSpec(Mode.EXHAUSTIVE, workers=workers))
        assert again.deterministic_view() == clean.deterministic_view()
        again = run_exhaustive(domain, mutant, EXPECTED,
                               CampaignSpec(Mode.EXHAUSTIVE, workers=workers, failure_cap=cap))
        assert again.deterministic_view() == bad.deterministic_view()


@pytest.mark.criterion(6, "partial-exhaustive equals filtered brute force on 2^16")
def test_criterion_6_partial_exhaustive():
    domain = monitor_domain((32, 32, 8))
    assert domain.cardinality == 2**16
    seen = []

    def recording_reference(point):
        seen.append(point)
        return builtins.expected_monitor(point)

    t0 = time.perf_counter()
    spec = CampaignSpec(Mode.PARTIAL_EXHAUSTIVE, predicate="make_safe_required")
    result = run_partial_exhaustive(domain, "make_safe_required", SubjectAdapter.builtin("monitor"),
                                    Oracle.expected(recording_reference), spec)
    seconds = time.perf_counter() - t0
    brute = [p for p in itertools.product(*(f.values for f in domain.fields)) if builtins.make_safe_required(p)]
    assert seen == brute
    assert result.executed == len(brute) and result.failure_count == 0
    assert result.certificate.verified == len(brute)
    assert seconds < 10


@pytest.mark.criterion(7, "n=1e6 statistical claim and byte-identical replay")
def test_criterion_7_statistical():
    domain = parse_domain((SAMPLES / "monitor20.dom").read_text())
    profiles = parse_profiles((SAMPLES / "profiles.prof").read_text())
    spec = parse_campaign_spec((SAMPLES / "statistical.spec").read_text())
    assert spec.n == 10**6 and spec.confidence == 0.99
    monitor = SubjectAdapter.builtin("monitor")

    t0 = time.perf_counter()
    first = run_campaign(domain, spec, monitor, EXPECTED, profiles)
    seconds = time.perf_counter() - t0
    assert first.executed == 10**6 and first.failure_count == 0
    oracle = 1 - mpmath.mpf("0.01") ** (mpmath.mpf(1) / 10**6)
    assert abs(first.claim.bound - float(oracle)) <= 1e-6 * float(oracle)
    assert seconds < 60

    replay = run_campaign(domain, spec, monitor, EXPECTED, profiles)
    assert _timing_free(format_report(replay)).encode() == _timing_free(format_report(first)).encode()
    assert replay.deterministic_view() == first.deterministic_view()


PROPERTY_SUITES = [
    "test_domain.py::test_bijection",
    "test_domain.py::test_enumeration_matches_product",
    "test_domain.py::test_subrange_iteration",
    "test_domain.py::test_partition_soundness",
    "test_profile.py::test_mass_sums_to_one",
    "test_profile.py::test_normalized_weights_sum_to_one",
    "test_stats.py::test_count_is_tight",
    "test_stats.py::test_count_monotone",
    "test_stats.py::test_pfd_roundtrip_brackets_target",
    "test_stats.py::test_pfd_roundtrip_ratio_for_large_counts",
    "test_stats.py::test_hours_rate_inverse",
    "test_faulttree.py::test_monotone_in_each_probability",
    "test_faulttree.py::test_bounds",
    "test_faulttree.py::test_birnbaum_is_partial_derivative",
]


@pytest.mark.criterion(8, "property suites")
def test_criterion_8_property_suites():
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_SUITES],
        cwd=HERE, capture_output=True, text=True, check=False,
    )
    seconds = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stdout[-3000:]
    assert seconds < 120
