"""Command-line front end, problem files, soundness checking and corpus statistics.

Problem files look like::

    ; x - x over the unit interval
    (bound (pre (x 0 1)) (- x x))
"""

from __future__ import annotations

import argparse
import itertools
import math
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import interval as iv
from .analysis import ContradictionError, UnboundVariableError
from .expr import (
    DomainViolation, Expr, ParseError, SList, Token, build_expr, concrete_enclosure,
    concrete_eval, format_expr, free_vars, is_decimal_literal, oracle_value, read_one,
)
from .interval import Interval, IntervalLike, round_down, round_up
from .rules import Rewrite, default_ruleset, load_rules
from .saturate import Config, RunReport, saturate

log = logging.getLogger("egbound")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_UNBOUND = 4
EXIT_CONTRADICTION = 5
EXIT_IO = 6

CHECK_TOLERANCE = 1e-12


# --------------------------------------------------------------------------
# problem files

@dataclass
class ProblemFile:
    preconditions: dict[str, Interval]
    expression: Expr
    name: str = ""


def parse_problem(text: str, name: str = "") -> ProblemFile:
    datum = read_one(text)
    if (not isinstance(datum, SList) or len(datum.items) != 3
            or not isinstance(datum.items[0], Token) or datum.items[0].text != "bound"):
        raise ParseError("expected (bound (pre ...) EXPR)", datum.line, datum.column)
    pre = datum.items[1]
    if (not isinstance(pre, SList) or not pre.items
            or not isinstance(pre.items[0], Token) or pre.items[0].text != "pre"):
        raise ParseError("expected (pre (VAR LO HI) ...)", pre.line, pre.column)
    box: dict[str, Interval] = {}
    for entry in pre.items[1:]:
        if not isinstance(entry, SList) or len(entry.items) != 3 or not all(
                isinstance(t, Token) for t in entry.items):
            raise ParseError("precondition must be (VAR LO HI)", *_pos(entry))
        var, lo, hi = entry.items
        for t in (lo, hi):
            if not is_decimal_literal(t.text):
                raise ParseError(f"bad bound {t.text!r}", t.line, t.column)
        if var.text in box:
            raise ParseError(f"duplicate variable {var.text!r}", var.line, var.column)
        qlo, qhi = Fraction(lo.text), Fraction(hi.text)
        if qlo > qhi:
            raise ParseError(f"empty range for {var.text}", var.line, var.column)
        # outward rounding keeps the box a superset of the stated precondition
        box[var.text] = Interval(round_down(qlo), round_up(qhi))
    expr = build_expr(datum.items[2])
    missing = sorted(free_vars(expr) - set(box))
    if missing:
        raise UnboundVariableError(missing[0])
    return ProblemFile(box, expr, name)


def _pos(d) -> tuple[int, int]:
    return d.line, d.column


def load_problem(path) -> ProblemFile:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), path.stem)


def bundled_corpus() -> Path:
    return Path(str(resources.files(__package__).joinpath("corpus")))


def corpus_files(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.prob"))


# --------------------------------------------------------------------------
# soundness check

@dataclass
class SoundnessReport:
    samples: int
    corners: int
    violations: list[dict] = field(default_factory=list)
    domain_errors: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"passed": self.passed, "samples": self.samples, "corners": self.corners,
                "violations": self.violations, "domain_errors": self.domain_errors}


MAX_CORNER_DIMS = 12


def sample_points(box: Mapping[str, Interval], samples: int, seed: int) -> list[dict[str, float]]:
    """Uniform samples (deterministic in ``seed``) followed by every box corner."""
    names = sorted(box)
    for n in names:
        if iv.width(box[n]) == iv.INF:
            raise ValueError(f"cannot sample unbounded variable {n}")
    rng = np.random.default_rng(seed)
    lows = np.array([box[n].lo for n in names])
    highs = np.array([box[n].hi for n in names])
    draws = rng.uniform(lows, highs, size=(samples, len(names)))
    draws = np.clip(draws, lows, highs)
    points = [dict(zip(names, map(float, row))) for row in draws]
    if len(names) <= MAX_CORNER_DIMS:
        for corner in itertools.product(*[(box[n].lo, box[n].hi) for n in names]):
            points.append(dict(zip(names, corner)))
    return points


def _below(v, claimed: Interval) -> bool:
    if math.isinf(claimed.lo):
        return False
    lo = oracle_value(claimed.lo)
    return v < lo - CHECK_TOLERANCE * max(abs(lo), abs(v))


def _above(v, claimed: Interval) -> bool:
    if math.isinf(claimed.hi):
        return False
    hi = oracle_value(claimed.hi)
    return v > hi + CHECK_TOLERANCE * max(abs(hi), abs(v))


def _violates(e: Expr, rho, v, claimed: IntervalLike) -> bool:
    if claimed.is_empty:
        return True
    if not (_below(v, claimed) or _above(v, claimed)):
        return False
    # confirm with rigorous bounds, so the oracle's own rounding near
    # zero (e.g. ln(exp(x)) - x) is not reported as a violation
    try:
        lo, hi = concrete_enclosure(e, rho)
    except DomainViolation:
        return True
    return _below(hi, claimed) or _above(lo, claimed)


def soundness_check(e: Expr, box: Mapping[str, Interval], claimed: IntervalLike,
                    samples: int, seed: int = 0) -> SoundnessReport:
    """Evaluate ``e`` at random points and corners of ``box``; flag values outside ``claimed``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    points = sample_points(box, samples, seed)
    report = SoundnessReport(samples=samples, corners=len(points) - samples)
    for rho in points:
        try:
            v = concrete_eval(e, rho)
        except DomainViolation as exc:
            report.domain_errors.append({"point": rho, "error": str(exc)})
            continue
        if _violates(e, rho, v, claimed):
            report.violations.append({"point": rho, "value": float(v)})
    return report


# --------------------------------------------------------------------------
# corpus statistics

def quartiles(values: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    q = np.percentile(arr, [0, 25, 50, 75, 100])  # linear interpolation
    return dict(zip(("min", "lower_quartile", "median", "upper_quartile", "max"), map(float, q)))


@dataclass
class CorpusSummary:
    problems: dict[str, RunReport]
    relative_width: dict[str, float]
    runtime: dict[str, float]
    node_growth_percent: float

    def to_json(self) -> dict:
        return {
            "problems": {k: r.to_json() for k, r in self.problems.items()},
            "relative_width": self.relative_width,
            "runtime": self.runtime,
            "node_growth_percent": self.node_growth_percent,
        }


def summarize(reports: Mapping[str, RunReport]) -> CorpusSummary:
    if not reports:
        raise ValueError("need at least one report")
    rs = list(reports.values())
    growth = [100.0 * (r.node_count_end - r.node_count_start) / r.node_count_start for r in rs]
    return CorpusSummary(
        problems=dict(reports),
        relative_width=quartiles([r.relative_width for r in rs]),
        runtime=quartiles([r.wall_time for r in rs]),
        node_growth_percent=float(np.mean(growth)),
    )


# --------------------------------------------------------------------------
# running

def _run_file(path: str, cfg: Config) -> RunReport:
    prob = load_problem(path)
    return saturate(prob.expression, prob.preconditions, cfg).report


def run_corpus(directory, cfg: Config, parallel: int = 1) -> dict[str, RunReport]:
    files = corpus_files(directory)
    if not files:
        raise FileNotFoundError(f"no .prob files in {directory}")
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            reports = list(pool.map(_run_file, map(str, files), itertools.repeat(cfg)))
    else:
        reports = [_run_file(str(f), cfg) for f in files]
    return {f.stem: r for f, r in zip(files, reports)}


def format_report(name: str, r: RunReport) -> str:
    lines = [
        f"problem:        {name}",
        f"naive:          {r.naive!r}",
        f"optimized:      {r.optimized!r}",
        f"relative width: {r.relative_width!r} ({r.width_flag})",
        f"iterations:     {r.iterations_run} ({r.stop_reason})",
        f"nodes:          {r.node_count_start} -> {r.node_count_end}",
        f"rewrites:       {r.rewrites_applied}",
        f"cycle:          {'yes' if r.cycle_detected else 'no'}",
        f"time:           {r.wall_time:.3f} s",
    ]
    return "\n".join(lines)


def format_summary(s: CorpusSummary) -> str:
    out = []
    for name, r in s.problems.items():
        out.append(f"{name:28s} {r.relative_width:8.4f}  {r.wall_time:7.3f}s  "
                   f"naive {r.naive!r}  optimized {r.optimized!r}")
    rw, rt = s.relative_width, s.runtime
    out.append("")
    out.append("relative width  min {min:.4f}  q1 {lower_quartile:.4f}  median {median:.4f}"
               "  q3 {upper_quartile:.4f}  max {max:.4f}".format(**rw))
    out.append("runtime (s)     min {min:.4f}  q1 {lower_quartile:.4f}  median {median:.4f}"
               "  q3 {upper_quartile:.4f}  max {max:.4f}".format(**rt))
    out.append(f"node growth     {s.node_growth_percent:.1f}% on average")
    return "\n".join(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="egbound",
                                description="Bound real expressions with e-graphs and interval analysis.")
    sub = p.add_subparsers(dest="command", required=True)
    b = sub.add_parser("bound", help="bound one problem file or a corpus directory")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE", help="problem file")
    src.add_argument("--corpus", metavar="DIR",
                     help="directory of .prob files ('bundled' for the built-in corpus)")
    b.add_argument("--iters", type=_positive, default=4, metavar="N")
    b.add_argument("--node-limit", type=_positive, default=10_000, metavar="N")
    b.add_argument("--update-cap", type=_positive, default=1000, metavar="N")
    b.add_argument("--rules", metavar="FILE", help="replace the default ruleset")
    b.add_argument("--json", action="store_true", help="emit JSON")
    b.add_argument("--dot", metavar="FILE", help="write the final e-graph as GraphViz")
    b.add_argument("--check", type=_positive, metavar="SAMPLES",
                   help="Monte-Carlo check the optimized bound")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--parallel", type=_positive, default=1, metavar="N")
    b.add_argument("-v", "--verbose", action="store_true")
    return p


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def _bound_one(args, cfg: Config) -> int:
    prob = load_problem(args.input)
    sat = saturate(prob.expression, prob.preconditions, cfg)
    report = sat.report
    if args.dot:
        Path(args.dot).write_text(sat.egraph.to_dot(), encoding="utf-8")
    check = None
    if args.check:
        check = soundness_check(prob.expression, prob.preconditions, report.optimized,
                                args.check, args.seed)
    if args.json:
        out = report.to_json()
        out["expression"] = format_expr(prob.expression)
        if check is not None:
            out["soundness"] = check.to_json()
        print(json.dumps(out, indent=2))
    else:
        print(format_report(prob.name, report))
        if check is not None:
            verdict = "pass" if check.passed else f"FAIL ({len(check.violations)} violations)"
            print(f"soundness:      {verdict} over {check.samples} samples + "
                  f"{check.corners} corners")
    return EXIT_OK if check is None or check.passed else EXIT_CHECK_FAILED


def _bound_corpus(args, cfg: Config) -> int:
    directory = bundled_corpus() if args.corpus == "bundled" else Path(args.corpus)
    reports = run_corpus(directory, cfg, args.parallel)
    summary = summarize(reports)
    failed = []
    checks = {}
    if args.check:
        for path in corpus_files(directory):
            prob = load_problem(path)
            c = soundness_check(prob.expression, prob.preconditions,
                                reports[path.stem].optimized, args.check, args.seed)
            checks[path.stem] = c
            if not c.passed:
                failed.append(path.stem)
    if args.json:
        out = summary.to_json()
        for name, c in checks.items():
            out["problems"][name]["soundness"] = c.to_json()
        print(json.dumps(out, indent=2))
    else:
        print(format_summary(summary))
        if args.check:
            print(f"soundness       {len(checks) - len(failed)}/{len(checks)} pass"
                  + (f" (failed: {', '.join(failed)})" if failed else ""))
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        rules: list[Rewrite] = load_rules(args.rules) if args.rules else default_ruleset()
        cfg = Config(iterations=args.iters, node_limit=args.node_limit,
                     update_cap=args.update_cap, ruleset=tuple(rules))
        if args.input:
            return _bound_one(args, cfg)
        return _bound_corpus(args, cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnboundVariableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNBOUND
    except ContradictionError as exc:
        print(f"contradiction: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
