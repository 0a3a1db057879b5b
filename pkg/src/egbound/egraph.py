"""Hash-consed e-graph with deferred congruence-closure rebuilding.

Each canonical e-class carries one interval, maintained by the attached
:class:`~egbound.analysis.IntervalAnalysis`.  Class ids are dense
integers and are never reused; :meth:`EGraph.find` canonicalises them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Iterator, NamedTuple

from .expr import Binary, Const, Expr, Pow, Unary, Var
from .interval import ENTIRE, IntervalLike

if TYPE_CHECKING:
    from .analysis import IntervalAnalysis

ARITY = {"var": 0, "const": 0, "neg": 1, "sqrt": 1, "ln": 1, "exp": 1,
         "pow": 1, "add": 2, "sub": 2, "mul": 2, "div": 2}


class ENode(NamedTuple):
    """An operator applied to e-classes.

    ``payload`` is the variable name for ``var``, the exact value
    (a :class:`~fractions.Fraction`) for ``const`` and the integer
    exponent for ``pow``; otherwise None.
    """

    op: str
    children: tuple[int, ...] = ()
    payload: object = None

    def __repr__(self) -> str:
        head = self.op if self.payload is None else f"{self.op}:{self.payload}"
        if not self.children:
            return head
        return f"({head} {' '.join(map(str, self.children))})"


def var_node(name: str) -> ENode:
    return ENode("var", (), name)


def const_node(value) -> ENode:
    return ENode("const", (), Fraction(value))


@dataclass
class EClass:
    id: int
    nodes: list[ENode]
    parents: list[tuple[ENode, int]] = field(default_factory=list)
    data: IntervalLike = ENTIRE


class EGraph:
    def __init__(self, analysis: "IntervalAnalysis"):
        self.analysis = analysis
        self._uf: list[int] = []
        self.classes: dict[int, EClass] = {}
        self.hashcons: dict[ENode, int] = {}
        self._dirty: list[int] = []

    # -- union-find -------------------------------------------------------

    def find(self, cid: int) -> int:
        uf = self._uf
        root = cid
        while uf[root] != root:
            root = uf[root]
        while uf[cid] != root:
            uf[cid], cid = root, uf[cid]
        return root

    def canonicalize(self, node: ENode) -> ENode:
        if not node.children:
            return node
        return ENode(node.op, tuple(self.find(c) for c in node.children), node.payload)

    # -- queries ----------------------------------------------------------

    def data(self, cid: int) -> IntervalLike:
        return self.classes[self.find(cid)].data

    def __getitem__(self, cid: int) -> EClass:
        return self.classes[self.find(cid)]

    def __len__(self) -> int:
        return len(self.classes)

    @property
    def node_count(self) -> int:
        return len(self.hashcons)

    def lookup(self, node: ENode) -> int | None:
        cid = self.hashcons.get(self.canonicalize(node))
        return None if cid is None else self.find(cid)

    def lookup_expr(self, e: Expr) -> int | None:
        """Class of ``e`` if every one of its subterms is already present."""
        if isinstance(e, Var):
            return self.lookup(var_node(e.name))
        if isinstance(e, Const):
            return self.lookup(const_node(e.value))
        kids = [self.lookup_expr(c) for c in _expr_children(e)]
        if any(k is None for k in kids):
            return None
        return self.lookup(ENode(_expr_op(e), tuple(kids), _expr_payload(e)))

    def equiv(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def class_ids(self) -> list[int]:
        return sorted(self.classes)

    def nodes(self) -> Iterator[tuple[int, ENode]]:
        for cid in self.class_ids():
            for n in self.classes[cid].nodes:
                yield cid, n

    # -- mutation ---------------------------------------------------------

    def add(self, node: ENode) -> int:
        if ARITY.get(node.op) != len(node.children):
            raise ValueError(f"arity mismatch for {node!r}")
        node = self.canonicalize(node)
        hit = self.hashcons.get(node)
        if hit is not None:
            return self.find(hit)
        cid = len(self._uf)
        self._uf.append(cid)
        cls = EClass(cid, [node])
        self.classes[cid] = cls
        self.hashcons[node] = cid
        for child in node.children:
            self.classes[child].parents.append((node, cid))
        cls.data = self.analysis.initial(self, cid, node)
        return cid

    def add_expr(self, e: Expr) -> int:
        if isinstance(e, Var):
            return self.add(var_node(e.name))
        if isinstance(e, Const):
            return self.add(const_node(e.value))
        kids = tuple(self.add_expr(c) for c in _expr_children(e))
        return self.add(ENode(_expr_op(e), kids, _expr_payload(e)))

    def merge(self, a: int, b: int) -> int:
        """Union two classes; their intervals meet immediately."""
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        ca, cb = self.classes[a], self.classes[b]
        # keep the bigger class as root; ties go to the older id
        if (len(ca.nodes) + len(ca.parents), -a) < (len(cb.nodes) + len(cb.parents), -b):
            a, b, ca, cb = b, a, cb, ca
        data = self.analysis.on_merge(self, a, b)
        self._uf[b] = a
        ca.nodes.extend(cb.nodes)
        ca.parents.extend(cb.parents)
        del self.classes[b]
        narrowed = data != ca.data or data != cb.data
        ca.data = data
        self._dirty.append(a)
        self.analysis.merged(self, a, narrowed)
        return a

    def rebuild(self) -> int:
        """Restore the congruence invariant; returns the number of repairs."""
        repairs = 0
        while self._dirty:
            todo = sorted({self.find(c) for c in self._dirty})
            self._dirty.clear()
            for cid in todo:
                self._repair(self.find(cid))
                repairs += 1
        for cls in self.classes.values():
            seen: dict[ENode, None] = {}
            for n in cls.nodes:
                seen.setdefault(self.canonicalize(n), None)
            cls.nodes = list(seen)
        return repairs

    def _repair(self, cid: int) -> None:
        cls = self.classes[cid]
        parents, cls.parents = cls.parents, []
        for pnode, _ in parents:
            self.hashcons.pop(pnode, None)
        fresh: dict[ENode, int] = {}
        for pnode, pclass in parents:
            pnode = self.canonicalize(pnode)
            if pnode in fresh:
                self.merge(pclass, fresh[pnode])
            fresh[pnode] = self.find(pclass)
            self.hashcons[pnode] = fresh[pnode]
        # a merge above may have folded this class into another root
        self.classes[self.find(cid)].parents.extend(fresh.items())

    def propagate(self) -> None:
        self.analysis.propagate(self)

    # -- structure ----------------------------------------------------------

    def children_of(self, cid: int) -> set[int]:
        return {self.find(c) for n in self[cid].nodes for c in n.children}

    def reachable(self, root: int) -> list[int]:
        root = self.find(root)
        seen = {root}
        order = [root]
        i = 0
        while i < len(order):
            for c in sorted(self.children_of(order[i])):
                if c not in seen:
                    seen.add(c)
                    order.append(c)
            i += 1
        return order

    def has_cycle(self, root: int) -> bool:
        """True iff some class reachable from ``root`` reaches itself."""
        WHITE, GREY, BLACK = 0, 1, 2
        color: dict[int, int] = {}
        root = self.find(root)
        stack: list[tuple[int, Iterator[int]]] = [(root, iter(sorted(self.children_of(root))))]
        color[root] = GREY
        while stack:
            cid, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[cid] = BLACK
                stack.pop()
                continue
            state = color.get(nxt, WHITE)
            if state == GREY:
                return True
            if state == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(sorted(self.children_of(nxt)))))
        return False

    def extract(self, root: int) -> Expr:
        """Smallest-AST representative of a class (display only)."""
        best = self._best_nodes()
        return self._build(self.find(root), best)

    def _best_nodes(self) -> dict[int, tuple[int, ENode]]:
        best: dict[int, tuple[int, ENode]] = {}
        changed = True
        while changed:
            changed = False
            for cid, cls in self.classes.items():
                for n in cls.nodes:
                    try:
                        cost = 1 + sum(best[self.find(c)][0] for c in n.children)
                    except KeyError:
                        continue
                    if cid not in best or cost < best[cid][0]:
                        best[cid] = (cost, n)
                        changed = True
        return best

    def _build(self, cid: int, best) -> Expr:
        n = best[cid][1]
        kids = [self._build(self.find(c), best) for c in n.children]
        return node_to_expr(n, kids)

    def to_dot(self) -> str:
        lines = ["digraph egraph {", "  compound=true;", "  node [shape=box];"]
        for cid in self.class_ids():
            cls = self.classes[cid]
            lines.append(f"  subgraph cluster_{cid} {{")
            lines.append(f'    label="e{cid} {cls.data!r}"; style=dashed;')
            for i, n in enumerate(cls.nodes):
                lines.append(f'    n{cid}_{i} [label="{_node_label(n)}"];')
            lines.append("  }")
        for cid in self.class_ids():
            for i, n in enumerate(self.classes[cid].nodes):
                for child in n.children:
                    c = self.find(child)
                    lines.append(f"  n{cid}_{i} -> n{c}_0 [lhead=cluster_{c}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _node_label(n: ENode) -> str:
    if n.op == "var":
        return str(n.payload)
    if n.op == "const":
        return fraction_literal(n.payload)
    if n.op == "pow":
        return f"pow {n.payload}"
    return {"add": "+", "sub": "-", "mul": "*", "div": "/"}.get(n.op, n.op)


def fraction_literal(q: Fraction) -> str:
    """Decimal text for a rational whose denominator is 2**a * 5**b."""
    if q.denominator == 1:
        return str(q.numerator)
    den = q.denominator
    k = 0
    while (10 ** k) % den:
        k += 1
        if k > 1100:
            return f"{q.numerator}/{q.denominator}"
    scaled = abs(q.numerator) * (10 ** k // den)
    digits = str(scaled).rjust(k + 1, "0")
    text = f"{digits[:-k]}.{digits[-k:]}".rstrip("0")
    return ("-" if q < 0 else "") + text


def _expr_children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Unary):
        return (e.child,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def _expr_op(e: Expr) -> str:
    if isinstance(e, (Unary, Binary)):
        return e.op
    if isinstance(e, Pow):
        return "pow"
    return "var" if isinstance(e, Var) else "const"


def _expr_payload(e: Expr):
    if isinstance(e, Pow):
        return e.exponent
    return None


def node_to_expr(n: ENode, kids: Iterable[Expr]) -> Expr:
    kids = list(kids)
    if n.op == "var":
        return Var(n.payload)
    if n.op == "const":
        return Const(fraction_literal(n.payload))
    if n.op == "pow":
        return Pow(kids[0], n.payload)
    if len(kids) == 1:
        return Unary(n.op, kids[0])
    return Binary(n.op, kids[0], kids[1])
