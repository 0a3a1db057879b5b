"""Acceptance criteria 1-10, each at its stated tolerance.

A criterion may be split over several tests; it passes only if all of
them do.  The terminal summary prints one PASS/FAIL line per criterion.
"""

import time
import pytest

from egbound.analysis import IntervalAnalysis
from egbound.cli import bundled_corpus, corpus_files, load_problem, soundness_check
from egbound.egraph import EGraph
from egbound.expr import parse_expr
from egbound.interval import Interval, leq, next_down, next_up, round_down, round_up
from egbound.rules import default_ruleset
from egbound.saturate import Config, naive_bound, run, saturate

from oracles import brute_range, diff_ratio, frac_sum, krawczyk_x1_sequence, share
from rule_oracle import check_rule

EQ6 = "(/ (+ x y) (+ (+ x y) 1))"
EQ8A = "(- 1 (/ (* 2 y) (+ x y)))"
EQ8B = "(/ (- x y) (+ x y))"
EQ8C = "(- (/ (* 2 x) (+ x y)) 1)"
FIG1 = "(/ x (+ x y))"
KRAWCZYK_X1 = "(/ (- 3 (* 1 y)) (- 1 (pow y 2)))"
KRAWCZYK_X2 = "(/ (- 1 (* 3 y)) (- 1 (pow y 2)))"

BOX_XY = {"x": Interval(0, 1), "y": Interval(1, 2)}
BOX_FIG1 = {"x": Interval(1, 2), "y": Interval(1, 2)}
BOX_K = {"y": Interval(-0.5, 0.5)}

# the worked examples become tight only after five or six rounds of the
# default rules; criteria 2 and 4 fix no round count, so they use this
EXTENDED = Config(iterations=6)


def steps(x, n):
    for _ in range(abs(n)):
        x = next_up(x) if n > 0 else next_down(x)
    return x


def ulps_box(lo, hi, n):
    return Interval(steps(lo, -n), steps(hi, n))


def ulp_distance(a, b):
    lo, hi = sorted((a, b))
    k = 0
    while lo < hi:
        lo = next_up(lo)
        k += 1
    return k


@pytest.fixture(scope="module")
def corpus():
    return {f.stem: load_problem(f) for f in corpus_files(bundled_corpus())}


@pytest.fixture(scope="module")
def corpus_runs(corpus):
    return {name: run(p.expression, p.preconditions) for name, p in corpus.items()}


# 1 ---------------------------------------------------------------------------

def test_criterion_1_dependency_problem():
    e = parse_expr("(- x x)")
    box = {"x": Interval(0, 1)}
    assert naive_bound(e, box) == Interval(-1, 1)
    t = time.perf_counter()
    r = run(e, box, Config(iterations=4))
    elapsed = time.perf_counter() - t
    assert r.optimized == Interval(0, 0)
    assert elapsed < 1.0


# 2 ---------------------------------------------------------------------------

def test_criterion_2_oracle_range():
    lo, hi = brute_range(frac_sum, [0, 1], [1, 2])
    assert abs(lo - 0.5) < 1e-12 and abs(hi - 0.75) < 1e-12


def test_criterion_2_conditional_tightening():
    e = parse_expr(EQ6)
    t = time.perf_counter()
    r = run(e, BOX_XY, EXTENDED)
    elapsed = time.perf_counter() - t
    assert leq(r.naive, ulps_box(0.25, 1.5, 8))
    assert leq(r.optimized, ulps_box(0.5, 0.75, 8))
    assert r.relative_width <= 0.21
    assert elapsed < 5.0


# 3 ---------------------------------------------------------------------------

def test_criterion_3_oracle_range():
    lo, hi = brute_range(diff_ratio, [0, 1], [1, 2])
    assert abs(lo + 1) < 1e-12 and abs(hi) < 1e-12


def test_criterion_3_meet_of_three_forms():
    g = EGraph(IntervalAnalysis(BOX_XY))
    roots = [g.add_expr(parse_expr(t)) for t in (EQ8A, EQ8B, EQ8C)]
    for r in roots[1:]:
        g.merge(roots[0], r)
    g.rebuild()
    g.propagate()
    d = g.data(roots[0])
    assert leq(Interval(-1, 0), d)
    assert leq(d, ulps_box(-1, 0, 8))


def test_criterion_3_saturation_from_first_form():
    r = run(parse_expr(EQ8A), BOX_XY, Config(iterations=4))
    assert leq(r.optimized, ulps_box(-1, 0, 8)), f"optimized {r.optimized!r}"


# 4 ---------------------------------------------------------------------------

def test_criterion_4_oracle_range():
    lo, hi = brute_range(share, [1, 1], [2, 2])
    assert abs(lo - 1 / 3) < 1e-12 and abs(hi - 2 / 3) < 1e-12


def test_criterion_4_division_invert():
    e = parse_expr(FIG1)
    r = run(e, BOX_FIG1, EXTENDED)
    assert leq(r.naive, ulps_box(0.25, 1, 8)) and leq(Interval(0.25, 1), r.naive)
    assert leq(r.optimized, ulps_box(1 / 3, 2 / 3, 8))
    # the tightening depends on the division-invert rule
    without = tuple(rule for rule in EXTENDED.ruleset if rule.name != "div-invert")
    ablated = run(e, BOX_FIG1, Config(iterations=6, ruleset=without))
    assert not leq(ablated.optimized, ulps_box(1 / 3, 2 / 3, 8))


# 5 ---------------------------------------------------------------------------

def test_criterion_5_krawczyk():
    e = parse_expr(KRAWCZYK_X1)
    s = saturate(e, BOX_K)
    rep = s.report
    assert rep.cycle_detected
    analysis = s.egraph.analysis
    assert not analysis.queue
    assert all(n <= analysis.update_cap for n in analysis.updates.values())
    assert leq(rep.optimized, rep.naive)

    x1_0 = naive_bound(e, BOX_K)
    x2_0 = naive_bound(parse_expr(KRAWCZYK_X2), BOX_K)
    oracle = krawczyk_x1_sequence((x1_0.lo, x1_0.hi), (x2_0.lo, x2_0.hi), (-0.5, 0.5),
                                  3, 1, len(s.history) - 1)
    assert len(s.history) == rep.iterations_run + 1
    for k, (got, (lo, hi)) in enumerate(zip(s.history, oracle)):
        want_lo, want_hi = round_down(lo), round_up(hi)
        assert ulp_distance(got.lo, want_lo) <= 2, (k, got, lo)
        assert ulp_distance(got.hi, want_hi) <= 2, (k, got, hi)


# 6 ---------------------------------------------------------------------------

def test_criterion_6_soundness_suite(corpus, corpus_runs):
    failed = {}
    for name, p in corpus.items():
        rep = soundness_check(p.expression, p.preconditions, corpus_runs[name].optimized,
                              10_000, seed=2024)
        assert rep.corners == 2 ** len(p.preconditions)
        if not rep.passed:
            failed[name] = rep.violations[:3]
    assert not failed


# 7 ---------------------------------------------------------------------------

def test_criterion_7_never_wider(corpus_runs):
    for name, r in corpus_runs.items():
        assert leq(r.optimized, r.naive), name
        assert r.relative_width <= steps(1.0, 4), name


def test_criterion_7_worked_examples_narrow(corpus_runs):
    firsts = ["01_sub_self", "02_frac_sum", "03_diff_ratio", "04_share"]
    widths = {n: corpus_runs[n].relative_width for n in firsts}
    assert all(w < 0.99 for w in widths.values()), widths


# 8 ---------------------------------------------------------------------------

@pytest.mark.parametrize("rule", default_ruleset(), ids=lambda r: r.name)
def test_criterion_8_rule_soundness(rule):
    checked, failures = check_rule(rule, samples=10_000, seed=8, rel_tol=1e-10)
    assert checked == 10_000
    assert not failures, failures[:3]


def test_criterion_8_rule_count():
    assert len(default_ruleset()) == 39


# 9 ---------------------------------------------------------------------------

def test_criterion_9_determinism(corpus, corpus_runs):
    for name, p in corpus.items():
        again = run(p.expression, p.preconditions)
        assert again.same_result(corpus_runs[name]), name


def test_criterion_9_budget_monotone(corpus):
    for name, p in corpus.items():
        two = run(p.expression, p.preconditions, Config(iterations=2))
        four = run(p.expression, p.preconditions, Config(iterations=4))
        assert leq(four.optimized, two.optimized), name


# 10 --------------------------------------------------------------------------

def test_criterion_10_performance(corpus):
    for name, p in corpus.items():
        t = time.perf_counter()
        run(p.expression, p.preconditions)
        assert time.perf_counter() - t < 10.0, name
