"""Vertex-addition compression engine.

Grows a (possibly disconnected) subgraph of the dependency parse one
vertex at a time, starting from the query set.  Candidates come off a
priority queue that favors tree-neighbors of the current compression,
ties broken left to right; each vertex is popped at most once, so a
whole compression costs O(|V| log |V| + |E|).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator, Protocol

from qcomp.corpus import Instance, char_length


class InfeasibleInstance(ValueError):
    """The query alone already exceeds the character budget."""


class DecisionModel(Protocol):
    """Scores a popped candidate for inclusion; 1.0 means accept."""

    def score(self, state: "CompressionState", candidate: int) -> float: ...


class CompressionState:
    """State (C_i, P_i) of one in-progress compression.

    accepted/rejected/queue plus the currently popped candidate are
    pairwise disjoint and cover all token positions.  used_chars tracks
    the linearized length of the accepted set incrementally.
    """

    __slots__ = (
        "inst", "accepted", "rejected", "timestep", "used_chars",
        "accept_order", "initial_queue_size", "_neighbor_heap", "_in_queue",
        "_is_neighbor", "_pending", "_pending_idx", "_queue_size", "_next_order",
    )

    def __init__(self, inst: Instance):
        q = inst.query
        g = inst.graph
        self.inst = inst
        self.accepted: set[int] = set(q)
        self.rejected: set[int] = set()
        self.timestep = 0
        self.used_chars = char_length(g, q)
        if self.used_chars > inst.budget_chars:
            raise InfeasibleInstance(
                "query needs %d chars but budget is %d (%s)"
                % (self.used_chars, inst.budget_chars, g.id))
        # Query vertexes count as accepted at order 0; later accepts get 1, 2, ...
        self.accept_order: dict[int, int] = {p: 0 for p in q}
        self._next_order = 1

        self._pending: list[int] = [p for p in g.positions if p not in q]
        self._pending_idx = 0
        self._in_queue: set[int] = set(self._pending)
        self._queue_size = len(self._pending)
        self.initial_queue_size = self._queue_size
        self._neighbor_heap: list[int] = []
        self._is_neighbor: set[int] = set()
        for p in q:
            self._promote_neighbors(p)

    def _promote_neighbors(self, accepted_pos: int) -> None:
        g = self.inst.graph
        for nb in g.neighbors[accepted_pos]:
            if nb in self._in_queue and nb not in self._is_neighbor:
                self._is_neighbor.add(nb)
                heapq.heappush(self._neighbor_heap, nb)

    @property
    def queue_size(self) -> int:
        return self._queue_size

    def is_neighbor(self, v: int) -> bool:
        """True when v is tree-adjacent to the accepted set."""
        return v in self._is_neighbor or any(
            nb in self.accepted for nb in self.inst.graph.neighbors[v])

    def add_cost(self, v: int) -> int:
        """Character cost of accepting v (token length plus a space unless first)."""
        tok = self.inst.graph.token(v)
        return tok.char_len + (1 if self.accepted else 0)

    def pop(self) -> int:
        if self._queue_size == 0:
            raise RuntimeError("pop from empty queue")
        self._queue_size -= 1
        heap = self._neighbor_heap
        while heap:
            v = heapq.heappop(heap)
            if v in self._in_queue:
                self._in_queue.discard(v)
                return v
        while self._pending_idx < len(self._pending):
            v = self._pending[self._pending_idx]
            self._pending_idx += 1
            if v in self._in_queue:
                self._in_queue.discard(v)
                return v
        raise RuntimeError("queue bookkeeping out of sync")  # pragma: no cover

    def accept(self, v: int) -> None:
        self.used_chars += self.add_cost(v)
        self.accepted.add(v)
        self.accept_order[v] = self._next_order
        self._next_order += 1
        self._promote_neighbors(v)
        self.timestep += 1

    def reject(self, v: int) -> None:
        self.rejected.add(v)
        self.timestep += 1

    def snapshot(self) -> "StateView":
        return StateView(
            inst=self.inst,
            accepted=frozenset(self.accepted),
            used_chars=self.used_chars,
            timestep=self.timestep,
            queue_size=self._queue_size,
            initial_queue_size=self.initial_queue_size,
            accept_order=dict(self.accept_order),
        )


@dataclass(frozen=True)
class StateView:
    """Immutable copy of the feature-relevant parts of a CompressionState."""

    inst: Instance
    accepted: frozenset[int]
    used_chars: int
    timestep: int
    queue_size: int
    initial_queue_size: int
    accept_order: dict[int, int]

    def is_neighbor(self, v: int) -> bool:
        return any(nb in self.accepted for nb in self.inst.graph.neighbors[v])


@dataclass(frozen=True)
class Decision:
    """One oracle (or replayed) accept/reject decision."""

    instance_id: str
    candidate: int
    label: int
    state: StateView

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "candidate": self.candidate,
            "label": self.label,
            "timestep": self.state.timestep,
        }


def init_state(inst: Instance) -> CompressionState:
    """Start a compression: C = Q, P = V \\ Q.  Infeasible queries raise."""
    return CompressionState(inst)


def pop_next(state: CompressionState) -> int:
    """Pop the highest-priority candidate: neighbors of C first, then leftmost."""
    return state.pop()


def _run(inst: Instance, decide, snapshot: bool) -> tuple[set[int], list[Decision]]:
    state = init_state(inst)
    b = inst.budget_chars
    decisions: list[Decision] = []
    while state.used_chars < b and state.queue_size > 0:
        v = state.pop()
        view = state.snapshot() if snapshot else None
        accepted = decide(state, v) and state.used_chars + state.add_cost(v) <= b
        if snapshot:
            decisions.append(Decision(inst.id, v, int(accepted), view))
        if accepted:
            state.accept(v)
        else:
            state.reject(v)
    out = state.accepted
    assert inst.query <= out, "query dropped from compression of %s" % inst.id
    assert char_length(inst.graph, out) <= b, "budget exceeded on %s" % inst.id
    assert state.used_chars == char_length(inst.graph, out)
    return out, decisions


def compress(inst: Instance, model: DecisionModel) -> frozenset[int]:
    """Run vertex addition under a decision model; returns the kept positions.

    A pop is accepted iff the model scores it strictly above 0.5 and the
    grown compression still fits the budget.
    """
    out, _ = _run(inst, lambda state, v: model.score(state, v) > 0.5, snapshot=False)
    return frozenset(out)


def compress_with_decisions(inst: Instance, model: DecisionModel) -> tuple[frozenset[int], list[Decision]]:
    out, decisions = _run(inst, lambda state, v: model.score(state, v) > 0.5, snapshot=True)
    return frozenset(out), decisions


def oracle_path(inst: Instance) -> list[Decision]:
    """Replay the engine with the oracle policy (accept iff the vertex is gold).

    Emits one Decision per popped vertex and always reconstructs the gold
    set exactly, provided gold contains the query and fits the budget.
    """
    if inst.gold is None:
        raise ValueError("oracle_path needs a gold compression (%s)" % inst.id)
    if not inst.query <= inst.gold:
        raise ValueError("gold violates query containment on %s" % inst.id)
    if char_length(inst.graph, inst.gold) > inst.budget_chars:
        raise ValueError("gold longer than budget on %s" % inst.id)
    out, decisions = _run(inst, lambda state, v: v in inst.gold, snapshot=True)
    assert out == set(inst.gold), "oracle failed to reconstruct gold on %s" % inst.id
    return decisions


def iter_oracle_decisions(instances) -> Iterator[Decision]:
    for inst in instances:
        yield from oracle_path(inst)
