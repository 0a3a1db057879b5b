"""Equality-saturation driver and run reports."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from . import interval as iv
from .analysis import DEFAULT_UPDATE_CAP, IntervalAnalysis, UnboundVariableError
from .egraph import EGraph
from .expr import Binary, Const, Expr, Pow, Unary, Var, free_vars
from .interval import Interval, IntervalLike, iv_apply, make_const
from .rules import OpIndex, Rewrite, apply_match, default_ruleset, ematch

InputBox = Mapping[str, Interval]


@dataclass(frozen=True)
class Config:
    iterations: int = 4
    node_limit: int = 10_000
    update_cap: int = DEFAULT_UPDATE_CAP
    ruleset: tuple[Rewrite, ...] = field(default_factory=lambda: tuple(default_ruleset()))

    def __post_init__(self):
        for name in ("iterations", "node_limit", "update_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "ruleset", tuple(self.ruleset))


@dataclass
class RunReport:
    naive: IntervalLike
    optimized: IntervalLike
    relative_width: float
    width_flag: str  # finite | naive-infinite | both-infinite
    iterations_run: int
    node_count_start: int
    node_count_end: int
    rewrites_applied: int
    wall_time: float
    cycle_detected: bool
    stop_reason: str  # saturated | iteration-limit | node-limit

    def to_json(self) -> dict:
        out = asdict(self)
        out["naive"] = iv.to_json(self.naive)
        out["optimized"] = iv.to_json(self.optimized)
        out["relative_width"] = repr(self.relative_width)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "RunReport":
        obj = dict(obj)
        obj["naive"] = iv.from_json(obj["naive"])
        obj["optimized"] = iv.from_json(obj["optimized"])
        obj["relative_width"] = float(obj["relative_width"])
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in obj.items() if k in known})

    def same_result(self, other: "RunReport") -> bool:
        """Equality of everything except the wall-clock time."""
        a, b = self.to_json(), other.to_json()
        a.pop("wall_time")
        b.pop("wall_time")
        return a == b


def relative_width(naive: IntervalLike, optimized: IntervalLike) -> tuple[float, str]:
    wn, wo = iv.width(naive), iv.width(optimized)
    if math.isinf(wn):
        if math.isinf(wo):
            return 1.0, "both-infinite"
        return 0.0, "naive-infinite"
    if wn == 0.0:
        return 1.0, "finite"
    return wo / wn, "finite"


def check_box(e: Expr, box: InputBox) -> None:
    missing = sorted(free_vars(e) - set(box))
    if missing:
        raise UnboundVariableError(missing[0])


def naive_bound(e: Expr, box: InputBox) -> IntervalLike:
    """Plain interval evaluation of the syntax tree, no rewriting."""
    if isinstance(e, Var):
        try:
            return box[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Const):
        return make_const(e.value)
    if isinstance(e, Unary):
        return iv_apply(e.op, [naive_bound(e.child, box)])
    if isinstance(e, Binary):
        return iv_apply(e.op, [naive_bound(e.left, box), naive_bound(e.right, box)])
    if isinstance(e, Pow):
        return iv_apply("pow", [naive_bound(e.base, box)], e.exponent)
    raise TypeError(f"not an expression: {e!r}")


def detect_cycle(g: EGraph, root: int) -> bool:
    return g.has_cycle(root)


@dataclass
class Saturation:
    """A finished run: the report plus the graph it was read from."""

    report: RunReport
    egraph: EGraph
    root: int
    history: list[IntervalLike]


def search(g: EGraph, rules: Sequence[Rewrite]) -> list[tuple[Rewrite, int, dict]]:
    index = OpIndex(g)
    return [(r, cid, s) for r in rules for cid, s in ematch(g, r.lhs, index)]


def saturate(e: Expr, box: InputBox, cfg: Config | None = None,
             analysis: IntervalAnalysis | None = None,
             extra_roots: Sequence[Expr] = ()) -> Saturation:
    """Build the graph of ``e`` (plus ``extra_roots``, merged with it) and saturate.

    Each round matches every rule against a snapshot of the graph, then
    applies the matches in rule order (conditions are checked at
    application time, against the freshest data), then rebuilds and
    propagates.  Stops after ``cfg.iterations`` rounds, when a round
    changes nothing, or when the node limit is reached.
    """
    cfg = cfg or Config()
    check_box(e, box)
    for extra in extra_roots:
        check_box(extra, box)
    start = time.perf_counter()
    analysis = analysis or IntervalAnalysis(box, cfg.update_cap)
    g = EGraph(analysis)
    root = g.add_expr(e)
    for extra in extra_roots:
        g.merge(root, g.add_expr(extra))
    g.rebuild()
    g.propagate()
    history = [g.data(root)]
    naive = naive_bound(e, box)
    node_start = g.node_count

    applied = 0
    rounds = 0
    stop = "iteration-limit"
    for _ in range(cfg.iterations):
        if g.node_count >= cfg.node_limit:
            stop = "node-limit"
            break
        changed = 0
        for rule, cid, subst in search(g, cfg.ruleset):
            if g.node_count >= cfg.node_limit:
                stop = "node-limit"
                break
            if apply_match(g, rule, cid, subst):
                changed += 1
        g.rebuild()
        g.propagate()
        rounds += 1
        applied += changed
        history.append(g.data(root))
        if stop == "node-limit":
            break
        if changed == 0:
            stop = "saturated"
            break

    optimized = g.data(root)
    rel, flag = relative_width(naive, optimized)
    report = RunReport(
        naive=naive,
        optimized=optimized,
        relative_width=rel,
        width_flag=flag,
        iterations_run=rounds,
        node_count_start=node_start,
        node_count_end=g.node_count,
        rewrites_applied=applied,
        wall_time=time.perf_counter() - start,
        cycle_detected=g.has_cycle(root),
        stop_reason=stop,
    )
    return Saturation(report, g, g.find(root), history)


def run(e: Expr, box: InputBox, cfg: Config | None = None) -> RunReport:
    return saturate(e, box, cfg).report
