"""Rewrite rules over the e-graph: patterns, e-matching, interval-checked
conditions and the default ruleset.

Rules are written in the expression syntax with ``?``-prefixed pattern
variables::

    (rule div-invert (/ ?a ?b) (/ 1 (/ ?b ?a))
          (and (nonzero ?a) (nonzero (/ ?b ?a))))

A condition is a conjunction of ``(nonzero P)`` and ``(nonneg P)``
atoms.  Atoms are decided by interval evaluation of ``P`` under the
match, using the current class data; ``P`` is never added to the graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterator, NamedTuple, Sequence

from .egraph import EGraph, ENode
from .expr import Binary, Const, Expr, ParseError, Pow, SList, Token, Unary, Var, build_expr, read_sexprs
from .interval import IntervalLike, excludes_zero, is_nonnegative, iv_apply, make_const

Substitution = dict  # pattern variable name -> canonical class id


class PNode(NamedTuple):
    """Compiled pattern: ``op == "?"`` marks a pattern variable named by ``payload``."""

    op: str
    payload: object = None
    children: tuple["PNode", ...] = ()


def compile_pattern(e: Expr) -> PNode:
    if isinstance(e, Var):
        if e.name.startswith("?"):
            return PNode("?", e.name)
        return PNode("var", e.name)
    if isinstance(e, Const):
        return PNode("const", e.value)
    if isinstance(e, Unary):
        return PNode(e.op, None, (compile_pattern(e.child),))
    if isinstance(e, Binary):
        return PNode(e.op, None, (compile_pattern(e.left), compile_pattern(e.right)))
    if isinstance(e, Pow):
        return PNode("pow", e.exponent, (compile_pattern(e.base),))
    raise TypeError(f"not an expression: {e!r}")


def pattern_vars(p: PNode) -> set[str]:
    if p.op == "?":
        return {p.payload}
    out: set[str] = set()
    for c in p.children:
        out |= pattern_vars(c)
    return out


def format_pattern(p: PNode) -> str:
    from .egraph import fraction_literal
    from .expr import _OP_SYMBOL

    if p.op in ("?", "var"):
        return p.payload
    if p.op == "const":
        return fraction_literal(p.payload)
    if p.op == "pow":
        return f"(pow {format_pattern(p.children[0])} {p.payload})"
    return f"({_OP_SYMBOL[p.op]} {' '.join(format_pattern(c) for c in p.children)})"


@dataclass(frozen=True)
class Atom:
    kind: str  # "nonzero" | "nonneg"
    pattern: PNode

    def __str__(self) -> str:
        return f"({self.kind} {format_pattern(self.pattern)})"


@dataclass(frozen=True)
class Rewrite:
    name: str
    lhs: PNode
    rhs: PNode
    condition: tuple[Atom, ...] = ()

    def __post_init__(self):
        if self.lhs.op == "?":
            raise ValueError(f"rule {self.name}: left-hand side cannot be a bare variable")
        bound = pattern_vars(self.lhs)
        if not pattern_vars(self.rhs) <= bound:
            raise ValueError(f"rule {self.name}: right-hand side uses unbound variables")
        for atom in self.condition:
            if not pattern_vars(atom.pattern) <= bound:
                raise ValueError(f"rule {self.name}: condition uses unbound variables")

    def __str__(self) -> str:
        text = f"(rule {self.name} {format_pattern(self.lhs)} {format_pattern(self.rhs)}"
        if len(self.condition) == 1:
            text += f" {self.condition[0]}"
        elif self.condition:
            text += " (and " + " ".join(map(str, self.condition)) + ")"
        return text + ")"


# --------------------------------------------------------------------------
# rule text

def _atom_text(d) -> str:
    return d.text if isinstance(d, Token) else ""


def _parse_condition(d) -> tuple[Atom, ...]:
    if not isinstance(d, SList) or not d.items:
        raise ParseError("condition must be a list", d.line, d.column)
    head = _atom_text(d.items[0])
    if head == "and":
        atoms: list[Atom] = []
        for sub in d.items[1:]:
            atoms.extend(_parse_condition(sub))
        return tuple(atoms)
    if head in ("nonzero", "nonneg"):
        if len(d.items) != 2:
            raise ParseError(f"{head} takes one pattern", d.line, d.column)
        return (Atom(head, compile_pattern(build_expr(d.items[1], pattern_vars=True))),)
    raise ParseError(f"unknown condition {head!r}", d.line, d.column)


def parse_rules(text: str) -> list[Rewrite]:
    """Parse ``(rule NAME LHS RHS [CONDITION])`` forms."""
    rules: list[Rewrite] = []
    names: set[str] = set()
    for d in read_sexprs(text):
        if not isinstance(d, SList) or not d.items or _atom_text(d.items[0]) != "rule":
            raise ParseError("expected (rule NAME LHS RHS [CONDITION])", d.line, d.column)
        if len(d.items) not in (4, 5):
            raise ParseError("rule needs a name, lhs, rhs and optional condition",
                             d.line, d.column)
        name = _atom_text(d.items[1])
        if not name:
            raise ParseError("rule name must be a symbol", d.line, d.column)
        if name in names:
            raise ParseError(f"duplicate rule name {name!r}", d.line, d.column)
        names.add(name)
        lhs = compile_pattern(build_expr(d.items[2], pattern_vars=True))
        rhs = compile_pattern(build_expr(d.items[3], pattern_vars=True))
        cond = _parse_condition(d.items[4]) if len(d.items) == 5 else ()
        try:
            rules.append(Rewrite(name, lhs, rhs, cond))
        except ValueError as exc:
            raise ParseError(str(exc), d.line, d.column) from None
    return rules


def load_rules(path) -> list[Rewrite]:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read())


def default_ruleset() -> list[Rewrite]:
    text = resources.files(__package__).joinpath("default.rules").read_text(encoding="utf-8")
    return parse_rules(text)


# --------------------------------------------------------------------------
# e-matching

def _node_fits(p: PNode, n: ENode) -> bool:
    return p.op == n.op and p.payload == n.payload and len(p.children) == len(n.children)


class OpIndex:
    """Nodes of a rebuilt graph grouped by (op, payload) for fast root lookup."""

    def __init__(self, g: EGraph):
        self.by_op: dict[tuple, list[tuple[int, ENode]]] = {}
        for cid, n in g.nodes():
            self.by_op.setdefault((n.op, n.payload), []).append((cid, n))

    def candidates(self, p: PNode) -> list[tuple[int, ENode]]:
        return self.by_op.get((p.op, p.payload), [])


def _match_class(g: EGraph, p: PNode, cid: int, subst: Substitution) -> Iterator[Substitution]:
    cid = g.find(cid)
    if p.op == "?":
        bound = subst.get(p.payload)
        if bound is None:
            out = dict(subst)
            out[p.payload] = cid
            yield out
        elif bound == cid:
            yield subst
        return
    for n in g.classes[cid].nodes:
        if _node_fits(p, n):
            yield from _match_children(g, p.children, n.children, subst)


def _match_children(g: EGraph, ps: Sequence[PNode], cids: Sequence[int],
                    subst: Substitution) -> Iterator[Substitution]:
    if not ps:
        yield subst
        return
    for s in _match_class(g, ps[0], cids[0], subst):
        yield from _match_children(g, ps[1:], cids[1:], s)


def ematch(g: EGraph, p: PNode, index: OpIndex | None = None) -> list[tuple[int, Substitution]]:
    """All ``(class, substitution)`` matches of ``p``, deduplicated, in discovery order."""
    if p.op == "?":
        return [(cid, {p.payload: cid}) for cid in g.class_ids()]
    if index is None:
        index = OpIndex(g)
    out: list[tuple[int, Substitution]] = []
    seen: set = set()
    for cid, n in index.candidates(p):
        if not _node_fits(p, n):
            continue
        for s in _match_children(g, p.children, n.children, {}):
            key = (cid, tuple(sorted(s.items())))
            if key not in seen:
                seen.add(key)
                out.append((cid, s))
    return out


# --------------------------------------------------------------------------
# conditions and application

def eval_pattern(g: EGraph, p: PNode, subst: Substitution) -> IntervalLike:
    """Interval value of a pattern instance, without touching the graph."""
    if p.op == "?":
        return g.data(subst[p.payload])
    if p.op == "var":
        return g.analysis.make(g, ENode("var", (), p.payload))
    if p.op == "const":
        return make_const(p.payload)
    args = [eval_pattern(g, c, subst) for c in p.children]
    if p.op == "pow":
        return iv_apply("pow", args, p.payload)
    return iv_apply(p.op, args)


def eval_condition(condition: Sequence[Atom], subst: Substitution, g: EGraph) -> bool:
    for atom in condition:
        value = eval_pattern(g, atom.pattern, subst)
        if atom.kind == "nonzero":
            ok = excludes_zero(value)
        else:
            ok = is_nonnegative(value)
        if not ok:
            return False
    return True


def instantiate(g: EGraph, p: PNode, subst: Substitution) -> int:
    if p.op == "?":
        return g.find(subst[p.payload])
    kids = tuple(instantiate(g, c, subst) for c in p.children)
    if p.op == "const":
        return g.add(ENode("const", (), p.payload))
    return g.add(ENode(p.op, kids, p.payload))


def apply_match(g: EGraph, rule: Rewrite, cid: int, subst: Substitution) -> bool:
    """Apply one match if its condition holds; True iff the partition changed."""
    if rule.condition and not eval_condition(rule.condition, subst, g):
        return False
    new = instantiate(g, rule.rhs, subst)
    if g.find(new) == g.find(cid):
        return False
    g.merge(cid, new)
    return True


def apply_rule(g: EGraph, rule: Rewrite) -> int:
    """Match ``rule`` against the (rebuilt) graph and apply every match.

    Returns the number of merges that changed the partition.  The graph
    is left unrebuilt; call ``rebuild`` and ``propagate`` afterwards.
    """
    return sum(apply_match(g, rule, cid, s) for cid, s in ematch(g, rule.lhs))
