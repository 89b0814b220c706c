"""Named compression systems: the shared surface for evaluation, CLI and service.

A system is anything with a `name` and `compress(instance) -> frozenset`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from qcomp import engine, ilp
from qcomp.corpus import Instance, ParseGraph

VERTEX_LR = "vertex_lr"
ABLATED = "ablated"
RANDOM = "random"
ILP = "ilp"
ENGINE_NAMES = (VERTEX_LR, ABLATED, RANDOM, ILP)


@dataclass
class VertexSystem:
    """Vertex addition under any decision model (LR, ablated LR, or random)."""

    name: str
    model: engine.DecisionModel

    def compress(self, inst: Instance) -> frozenset[int]:
        return engine.compress(inst, self.model)


@dataclass
class IlpSystem:
    """Branch-and-bound edge selection; transforms each graph once and caches it."""

    model: ilp.ILPModel
    node_limit: int = 500_000
    name: str = ILP
    _transformed: dict[str, ParseGraph] = field(default_factory=dict, repr=False)

    def compress(self, inst: Instance) -> frozenset[int]:
        g = self._transformed.get(inst.graph.id)
        if g is None:
            g = ilp.ensure_transformed(inst.graph)
            self._transformed[inst.graph.id] = g
        sol = ilp.decode(g, self.model, inst.query, inst.budget_chars,
                         node_limit=self.node_limit)
        return sol.nodes


@dataclass
class OracleSystem:
    """Returns the gold compression; the evaluation ceiling."""

    name: str = "oracle"

    def compress(self, inst: Instance) -> frozenset[int]:
        decisions = engine.oracle_path(inst)
        accepted = set(inst.query)
        accepted.update(d.candidate for d in decisions if d.label == 1)
        return frozenset(accepted)


def load_system(name: str, path, node_limit: int = 500_000):
    """Build a named system from a model file, validating the model kind."""
    from qcomp.learn import load_lr_model, load_model_payload, load_random_policy

    kind = load_model_payload(path)["kind"]
    if name == ILP:
        if kind != "ilp":
            raise ValueError("system %s needs an ilp model, got kind=%r" % (name, kind))
        return IlpSystem(model=ilp.load_ilp_model(path), node_limit=node_limit)
    if name == RANDOM:
        return VertexSystem(name=name, model=load_random_policy(path))
    if name in (VERTEX_LR, ABLATED):
        expected = "lr" if name == VERTEX_LR else "lr-ablated"
        return VertexSystem(name=name, model=load_lr_model(path, expected_kinds=(expected,)))
    raise ValueError("unknown engine %r (known: %s)" % (name, ", ".join(ENGINE_NAMES)))
