"""Edge-selection compression baseline: global objective, exact search, perceptron.

Compression is cast as picking a subtree of the (root-augmented) parse:
selected edges must form an arborescence rooted at 0, the implied vertex
set must contain the query and fit the budget, and the objective is the
sum of learned edge scores.  Decoding is depth-first branch and bound
over vertexes in parent-before-child order with an admissible
sum-of-positive-scores bound, so connectivity needs no auxiliary
constraints: an edge is selectable only when its head is already in the
solution (or is the root).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from qcomp.corpus import (
    DepEdge, ParseGraph, char_length, transform_root_edges,
)
from qcomp.features import FeatureConfig, Featurizer
from qcomp.learn import MODEL_FORMAT_VERSION, TrainingError, load_model_payload

PRUNE_SLACK = 1e-9  # explore ties so the canonical objective stays exact


@dataclass
class ILPModel:
    """Learned edge weights over the hashed edge-feature space."""

    weights: np.ndarray
    featurizer: Featurizer
    epochs_trained: int = 0
    train_stats: dict = field(default_factory=dict)

    def edge_score(self, g: ParseGraph, edge: DepEdge) -> float:
        return self.featurizer.edge_vector(g, edge).dot(self.weights)


@dataclass(frozen=True)
class ILPSolution:
    selected_edges: frozenset[DepEdge]
    objective: float
    nodes: frozenset[int]
    stats: dict


class _LimitReached(Exception):
    pass


def ensure_transformed(g: ParseGraph) -> ParseGraph:
    """Apply the root-edge transform unless the graph already has full root cover."""
    rooted = {e.child for e in g.all_edges if e.head == 0}
    if rooted == set(g.positions):
        return g
    return transform_root_edges(g)


def _check_transformed(g: ParseGraph) -> None:
    rooted = {e.child for e in g.all_edges if e.head == 0}
    if rooted != set(g.positions):
        raise ValueError("graph %s lacks root edges to every token; "
                         "run transform_root_edges first" % g.id)


def _in_edges(g: ParseGraph) -> dict[int, list[DepEdge]]:
    incoming: dict[int, list[DepEdge]] = {v: [] for v in g.positions}
    for e in g.tree_edges:
        incoming[e.child].append(e)
    for e in g.aug_edges:
        incoming[e.child].append(e)
    return incoming


def _objective(edges: Iterable[DepEdge], scores: dict[DepEdge, float]) -> float:
    """Canonical objective: scores summed in child order, so equal edge sets
    give bit-identical floats regardless of search order."""
    return sum(scores[e] for e in sorted(edges, key=lambda e: (e.child, e.head)))


def _grown_length(current_len: int, extra_chars: int, extra_count: int) -> int:
    if extra_count == 0:
        return current_len
    if current_len == 0:
        return extra_chars + extra_count - 1
    return current_len + extra_chars + extra_count


def _best_available(in_edges: Sequence[DepEdge], nodes: set[int],
                    scores: dict[DepEdge, float]) -> Optional[DepEdge]:
    best = None
    best_score = 0.0
    for e in in_edges:
        if e.head == 0 or e.head in nodes:
            s = scores[e]
            if best is None or s > best_score or (s == best_score and e.origin == "tree"):
                best, best_score = e, s
    return best


def decode(g: ParseGraph, model: ILPModel, query: frozenset[int], budget: int,
           node_limit: int = 500_000) -> ILPSolution:
    """Maximize the edge-score sum subject to tree, query and budget constraints.

    Exact when the search completes within node_limit (proven_optimal in
    stats); otherwise the best incumbent found so far is returned.
    """
    if node_limit <= 0:
        raise ValueError("node_limit must be positive")
    _check_transformed(g)
    query = frozenset(query)
    if char_length(g, query) > budget:
        raise ValueError("infeasible: query needs %d chars, budget %d (%s)"
                         % (char_length(g, query), budget, g.id))

    incoming = _in_edges(g)
    scores = {e: model.edge_score(g, e) for v in g.positions for e in incoming[v]}
    order = sorted(g.positions, key=lambda v: (g.depth[v], v))
    index_of = {v: i for i, v in enumerate(order)}
    n = len(order)

    # Admissible bound: every undecided vertex optimistically contributes its
    # best incoming score when positive.
    best_in = [max(scores[e] for e in incoming[v]) for v in order]
    suffix_opt = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_opt[i] = suffix_opt[i + 1] + max(0.0, best_in[i])

    # Exact chars still owed to undecided query vertexes, for feasibility pruning.
    q_chars = [0] * (n + 1)
    q_count = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        v = order[i]
        extra = g.token(v).char_len if v in query else 0
        q_chars[i] = q_chars[i + 1] + extra
        q_count[i] = q_count[i + 1] + (1 if v in query else 0)

    # Seed the incumbent with the always-feasible query-only solution.
    seed_nodes: set[int] = set()
    seed_edges: list[DepEdge] = []
    for v in sorted(query, key=lambda v: index_of[v]):
        e = _best_available(incoming[v], seed_nodes, scores)
        seed_edges.append(e)
        seed_nodes.add(v)
    best_edges = list(seed_edges)
    best_obj = _objective(seed_edges, scores)

    nodes: set[int] = set()
    chosen: list[DepEdge] = []
    expanded = 0

    def walk(i: int, obj: float, used: int) -> None:
        nonlocal best_edges, best_obj, expanded
        expanded += 1
        if expanded > node_limit:
            raise _LimitReached
        if _grown_length(used, q_chars[i], q_count[i]) > budget:
            return
        if obj + suffix_opt[i] <= best_obj - PRUNE_SLACK:
            return
        if i == n:
            canonical = _objective(chosen, scores)
            if canonical > best_obj:
                best_obj = canonical
                best_edges = list(chosen)
            return
        v = order[i]
        edge = _best_available(incoming[v], nodes, scores)
        cost = g.token(v).char_len + (1 if nodes else 0)
        fits = used + cost <= budget

        def include() -> None:
            nodes.add(v)
            chosen.append(edge)
            walk(i + 1, obj + scores[edge], used + cost)
            chosen.pop()
            nodes.discard(v)

        if v in query:
            if fits:
                include()
            return
        if fits and scores[edge] > 0.0:
            include()
            walk(i + 1, obj, used)
        else:
            walk(i + 1, obj, used)
            if fits:
                include()

    proven = True
    try:
        walk(0, 0.0, 0)
    except _LimitReached:
        proven = False
    solution = ILPSolution(
        selected_edges=frozenset(best_edges),
        objective=best_obj,
        nodes=frozenset(e.child for e in best_edges),
        stats={"nodes_expanded": expanded, "proven_optimal": proven},
    )
    validate_solution(g, solution, query, budget)
    return solution


def enumerate_exact(g: ParseGraph, model: ILPModel, query: frozenset[int],
                    budget: int) -> ILPSolution:
    """Brute-force oracle for decode: try every vertex subset.

    Each subset keeps its best available incoming edge per node (heads in
    the subset or the root), which is optimal for that node set because
    edges never form directed cycles here.
    """
    n = len(g.tokens)
    if n > 16:
        raise ValueError("enumerate_exact refuses |V| > 16 (%d tokens)" % n)
    _check_transformed(g)
    query = frozenset(query)
    incoming = _in_edges(g)
    scores = {e: model.edge_score(g, e) for v in g.positions for e in incoming[v]}

    best_obj = None
    best_edges: list[DepEdge] = []
    for mask in range(1 << n):
        subset = {v for v in g.positions if mask & (1 << (v - 1))}
        if not query <= subset:
            continue
        if char_length(g, subset) > budget:
            continue
        edges = []
        for v in sorted(subset):
            e = _best_available(incoming[v], subset, scores)
            edges.append(e)
        obj = _objective(edges, scores)
        if best_obj is None or obj > best_obj:
            best_obj = obj
            best_edges = edges
    if best_obj is None:
        raise ValueError("infeasible: query needs %d chars, budget %d (%s)"
                         % (char_length(g, query), budget, g.id))
    solution = ILPSolution(
        selected_edges=frozenset(best_edges),
        objective=best_obj,
        nodes=frozenset(e.child for e in best_edges),
        stats={"nodes_expanded": 1 << n, "proven_optimal": True},
    )
    validate_solution(g, solution, query, budget)
    return solution


def validate_solution(g: ParseGraph, sol: ILPSolution, query: frozenset[int],
                      budget: int) -> None:
    """Independent structural check, deliberately not reusing solver bookkeeping."""
    all_edges = set(g.all_edges)
    parent: dict[int, int] = {}
    for e in sol.selected_edges:
        if e not in all_edges:
            raise ValueError("selected edge %r is not in graph %s" % (e, g.id))
        if e.child in parent:
            raise ValueError("token %d has two selected incoming edges" % e.child)
        parent[e.child] = e.head
    if sol.nodes != set(parent):
        raise ValueError("solution nodes do not match selected edge children")
    for start in parent:
        seen = set()
        v = start
        while v != 0:
            if v in seen:
                raise ValueError("cycle in selected edges through %d" % start)
            if v not in parent:
                raise ValueError("selected subtree detached from root at %d" % v)
            seen.add(v)
            v = parent[v]
    if not query <= sol.nodes:
        raise ValueError("query not covered by solution on %s" % g.id)
    if char_length(g, sol.nodes) > budget:
        raise ValueError("solution exceeds budget on %s" % g.id)


# ---------------------------------------------------------------------------
# Training

def gold_arborescence(g: ParseGraph, gold: frozenset[int]) -> list[DepEdge]:
    """Edges covering gold: internal tree edges, root-augmented elsewhere."""
    aug = {e.child: e for e in g.aug_edges}
    edges = []
    for c in sorted(gold):
        tree_edge = g.parent[c]
        if tree_edge.head == 0 or tree_edge.head in gold:
            edges.append(tree_edge)
        else:
            edges.append(aug[c])
    return edges


def train_perceptron(pairs: Sequence[tuple[ParseGraph, frozenset[int]]],
                     featurizer: Featurizer, epochs: int = 6,
                     node_limit: int = 500_000,
                     val_pairs: Optional[Sequence[tuple[ParseGraph, frozenset[int]]]] = None,
                     keep_snapshots: bool = False) -> ILPModel:
    """Averaged structured perceptron on (sentence, gold) pairs.

    Each step decodes with the gold compression's length as the budget and
    no query, then moves weights toward the gold arborescence's features.
    Examples whose decode hits node_limit are skipped and counted.  The
    returned weights are the mean over per-example snapshots.
    """
    if not pairs:
        raise TrainingError("no training pairs")
    pairs = [(ensure_transformed(g), frozenset(gold)) for g, gold in pairs]
    if val_pairs is not None:
        val_pairs = [(ensure_transformed(g), frozenset(gold)) for g, gold in val_pairs]
    d = featurizer.config.D
    w = np.zeros(d)
    w_sum = np.zeros(d)
    steps = 0
    skipped = 0
    live = ILPModel(weights=w, featurizer=featurizer)
    history: list[float] = []
    snapshots: list[np.ndarray] = []

    for _ in range(epochs):
        for g, gold in pairs:
            budget = char_length(g, gold)
            sol = decode(g, live, frozenset(), budget, node_limit=node_limit)
            if not sol.stats["proven_optimal"]:
                skipped += 1
                continue
            if sol.nodes != gold:
                for e in gold_arborescence(g, gold):
                    for idx, val in featurizer.edge_vector(g, e).entries.items():
                        w[idx] += val
                for e in sol.selected_edges:
                    for idx, val in featurizer.edge_vector(g, e).entries.items():
                        w[idx] -= val
            w_sum += w
            steps += 1
            if keep_snapshots:
                snapshots.append(w.copy())
        if val_pairs is not None:
            avg = ILPModel(weights=w_sum / max(steps, 1), featurizer=featurizer)
            history.append(_mean_f1(avg, val_pairs, node_limit))

    if steps == 0:
        raise TrainingError("every training example was skipped (node_limit too low?)")
    stats = {"steps": steps, "skipped": skipped, "val_f1_history": history}
    if keep_snapshots:
        stats["snapshots"] = snapshots
    return ILPModel(
        weights=w_sum / steps,
        featurizer=featurizer,
        epochs_trained=epochs,
        train_stats=stats,
    )


def _mean_f1(model: ILPModel, pairs, node_limit: int) -> float:
    from qcomp.evaluation import token_f1
    scores = []
    for g, gold in pairs:
        sol = decode(g, model, frozenset(), char_length(g, gold), node_limit=node_limit)
        scores.append(token_f1(sol.nodes, gold)[2])
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Model file (same schema as the LR models, kind="ilp")

def save_ilp_model(model: ILPModel, path) -> None:
    nonzero = np.flatnonzero(model.weights)
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "ilp",
        "config": model.featurizer.config.to_dict(),
        "epochs_trained": model.epochs_trained,
        "weights": {str(int(i)): float(model.weights[i]) for i in nonzero},
        "lemma_vocab": sorted(model.featurizer.lemma_vocab),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_ilp_model(path) -> ILPModel:
    payload = load_model_payload(path)
    if payload["kind"] != "ilp":
        raise ValueError("expected an ilp model, found kind=%r" % payload["kind"])
    config = FeatureConfig.from_dict(payload["config"])
    featurizer = Featurizer(config, frozenset(payload["lemma_vocab"]))
    weights = np.zeros(config.D)
    for idx, value in payload["weights"].items():
        weights[int(idx)] = value
    return ILPModel(weights=weights, featurizer=featurizer,
                    epochs_trained=int(payload.get("epochs_trained", 0)))
