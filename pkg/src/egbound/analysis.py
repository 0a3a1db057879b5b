"""Interval e-class analysis.

A class's interval is the meet of the interval extensions of all of its
nodes.  New classes start at the top element and are refined at once
from their first node; merges meet immediately; :meth:`propagate` runs
the narrowing worklist to quiescence, which also iterates around cycles
(each lap computes ``a <- a meet f(a)`` for the loop's function ``f``).
"""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Callable, Mapping

from .interval import EMPTY, ENTIRE, Interval, IntervalLike, iv_apply, leq, make_const, meet

if TYPE_CHECKING:
    from .egraph import EGraph, ENode

DEFAULT_UPDATE_CAP = 1000


class UnboundVariableError(LookupError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable {name!r} has no interval in the input box")


class ContradictionError(RuntimeError):
    """Two sound enclosures of the same class did not intersect.

    For a non-empty input box this can only come from an unsound rewrite
    or a bug, so the run is aborted.
    """

    def __init__(self, message: str, first: IntervalLike, second: IntervalLike,
                 classes: tuple[int, ...] = ()):
        self.first = first
        self.second = second
        self.classes = classes
        super().__init__(message)


class IntervalAnalysis:
    """Per-graph analysis state: input box, worklist and update counters.

    ``on_update`` (if set) is called as ``on_update(class_id, old, new)``
    whenever propagation narrows a class; it exists for tracing.
    """

    def __init__(self, box: Mapping[str, Interval], update_cap: int = DEFAULT_UPDATE_CAP,
                 on_update: Callable[[int, IntervalLike, IntervalLike], None] | None = None):
        if update_cap < 1:
            raise ValueError("update_cap must be positive")
        self.box = dict(box)
        self.update_cap = update_cap
        self.on_update = on_update
        self.queue: deque[int] = deque()
        self._queued: set[int] = set()
        self.updates: dict[int, int] = {}
        self.capped: set[int] = set()

    # -- node semantics ---------------------------------------------------

    def make(self, egraph: "EGraph", node: "ENode") -> IntervalLike:
        if node.op == "var":
            try:
                return self.box[node.payload]
            except KeyError:
                raise UnboundVariableError(node.payload) from None
        if node.op == "const":
            return make_const(node.payload)
        args = [egraph.data(c) for c in node.children]
        if node.op == "pow":
            return iv_apply("pow", args, node.payload)
        return iv_apply(node.op, args)

    def initial(self, egraph: "EGraph", cid: int, node: "ENode") -> IntervalLike:
        data = meet(ENTIRE, self.make(egraph, node))
        if data.is_empty:
            raise ContradictionError(
                f"e{cid} = {node!r} has an empty enclosure over the input box",
                ENTIRE, data, (cid,))
        return data

    def on_merge(self, egraph: "EGraph", a: int, b: int) -> IntervalLike:
        da, db = egraph.data(a), egraph.data(b)
        out = meet(da, db)
        if out.is_empty:
            raise ContradictionError(
                f"merging e{a} {da!r} with e{b} {db!r} gives an empty interval",
                da, db, (a, b))
        self.updates[a] = max(self.updates.get(a, 0), self.updates.get(b, 0))
        return out

    # -- worklist -----------------------------------------------------------

    def enqueue(self, cid: int) -> None:
        if cid not in self._queued:
            self._queued.add(cid)
            self.queue.append(cid)

    def merged(self, egraph: "EGraph", cid: int, narrowed: bool) -> None:
        self.enqueue(cid)
        if narrowed:
            for _, parent in egraph.classes[cid].parents:
                self.enqueue(egraph.find(parent))

    def propagate(self, egraph: "EGraph") -> int:
        """Narrow class data to quiescence; returns the number of updates."""
        count = 0
        while self.queue:
            cid = self.queue.popleft()
            self._queued.discard(cid)
            cid = egraph.find(cid)
            cls = egraph.classes[cid]
            for node in list(cls.nodes):
                old = cls.data
                new = meet(old, self.make(egraph, node))
                if leq(old, new):
                    continue
                if new.is_empty:
                    raise ContradictionError(
                        f"e{cid} {old!r} and its node {node!r} do not intersect",
                        old, self.make(egraph, node), (cid,))
                if self.updates.get(cid, 0) >= self.update_cap:
                    self.capped.add(cid)
                    break
                self.updates[cid] = self.updates.get(cid, 0) + 1
                cls.data = new
                count += 1
                if self.on_update is not None:
                    self.on_update(cid, old, new)
                for _, parent in cls.parents:
                    self.enqueue(egraph.find(parent))
        return count

    def seed_all(self, egraph: "EGraph") -> None:
        for cid in egraph.class_ids():
            self.enqueue(cid)


__all__ = ["ContradictionError", "DEFAULT_UPDATE_CAP", "EMPTY", "IntervalAnalysis",
           "UnboundVariableError"]
