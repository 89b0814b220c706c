"""Synthesize constrained-compression instances from (sentence, gold) pairs.

The budget is the gold compression's character length, and the query is
sampled from the gold's nouns: first draw a target query size from a
configured length distribution, then draw proper or common nouns without
replacement according to a mixture weight.  Sentences whose gold lacks
enough nouns are skipped, not errored.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from qcomp.corpus import Instance, ParseGraph, char_length

NOUN_TAGS = frozenset({"NOUN", "PROPN"})

# Placeholder defaults, configurable; the real-world query statistics the
# sampler imitates come from external query-log studies and are not
# reproduced here.
DEFAULT_LENGTH_PROBS = {1: 0.30, 2: 0.35, 3: 0.20, 4: 0.10, 5: 0.05}
DEFAULT_PROPER_WEIGHT = 0.4

PAPER_TRAIN_SIZE = 199_152
PAPER_VAL_RESERVE = 24_999


@dataclass(frozen=True)
class QueryLengthDist:
    """Distribution over query token counts plus the proper-noun mixture weight."""

    length_probs: dict[int, float]
    proper_weight: float = DEFAULT_PROPER_WEIGHT

    def __post_init__(self):
        if not self.length_probs:
            raise ValueError("empty query length distribution")
        if any(p < 0 for p in self.length_probs.values()):
            raise ValueError("negative probability in query length distribution")
        total = sum(self.length_probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError("length probabilities sum to %g, expected 1" % total)
        if not 0.0 <= self.proper_weight <= 1.0:
            raise ValueError("proper_weight must be in [0,1]")

    def sample_length(self, rng: random.Random) -> int:
        lengths = sorted(self.length_probs)
        weights = [self.length_probs[k] for k in lengths]
        return rng.choices(lengths, weights=weights, k=1)[0]

    @classmethod
    def default(cls) -> "QueryLengthDist":
        return cls(dict(DEFAULT_LENGTH_PROBS), DEFAULT_PROPER_WEIGHT)

    @classmethod
    def from_config(cls, path) -> "QueryLengthDist":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        probs = {int(k): float(v) for k, v in raw["length_probs"].items()}
        return cls(probs, float(raw.get("proper_weight", DEFAULT_PROPER_WEIGHT)))


@dataclass(frozen=True)
class Skip:
    """A sentence excluded from the dataset, with the reason."""

    graph_id: str
    reason: str


def build_instance(graph: ParseGraph, gold: Sequence[int], dist: QueryLengthDist,
                   rng: random.Random) -> Union[Instance, Skip]:
    """One (S, Q, b, C_g) tuple, or a Skip when gold has too few nouns."""
    gold = frozenset(gold)
    if not gold <= set(graph.positions):
        raise ValueError("gold positions outside sentence %s" % graph.id)
    target = dist.sample_length(rng)
    proper = sorted(v for v in gold if graph.token(v).upos == "PROPN")
    common = sorted(v for v in gold if graph.token(v).upos == "NOUN")
    if len(proper) + len(common) < target:
        return Skip(graph.id, "gold has %d nouns, query needs %d"
                    % (len(proper) + len(common), target))
    query: set[int] = set()
    while len(query) < target:
        want_proper = rng.random() < dist.proper_weight
        pool = proper if want_proper else common
        if not pool:
            pool = common if want_proper else proper
        v = pool.pop(rng.randrange(len(pool)))
        query.add(v)
    return Instance(graph=graph, query=frozenset(query),
                    budget_chars=char_length(graph, gold), gold=gold)


def synthetic_chain(n: int, token_len: int = 4) -> ParseGraph:
    """A head-initial chain of n fixed-width tokens, for scaling probes."""
    if n < 1:
        raise ValueError("chain needs at least one token")
    rows = []
    for i in range(1, n + 1):
        form = ("t%03d" % i)[:token_len].ljust(token_len, "x")
        rows.append((form, form, "NOUN", i - 1, "root" if i == 1 else "dep"))
    from qcomp.corpus import build_graph
    return build_graph("chain%d" % n, rows)


def _reserve_count(pool_size: int, reserve: Union[int, float], what: str) -> int:
    if isinstance(reserve, float):
        if not 0.0 < reserve < 1.0:
            raise ValueError("fractional %s reserve must be in (0,1)" % what)
        return round(pool_size * reserve)
    if reserve >= pool_size:
        fallback = round(pool_size * PAPER_VAL_RESERVE / PAPER_TRAIN_SIZE)
        warnings.warn("corpus smaller than requested %s reserve; "
                      "falling back to %d instances" % (what, fallback))
        return fallback
    return reserve


def split_corpus(instances: Sequence[Instance], seed: int,
                 val_reserve: Union[int, float] = PAPER_VAL_RESERVE,
                 test_tags: Optional[Sequence[bool]] = None,
                 test_reserve: Union[int, float] = 0,
                 ) -> tuple[list[Instance], list[Instance], list[Instance]]:
    """(train, validation, test) with the validation set carved from train.

    An upstream test split (test_tags[i] True = test) is honored as-is;
    test_reserve carves one from untagged corpora instead (mixing the two
    is an error).  Reserves are absolute counts, or fractions when given
    as floats in (0, 1); an absolute reserve that does not fit the corpus
    falls back to the reference corpus's proportion with a warning.
    """
    instances = list(instances)
    if test_tags is not None:
        if test_reserve:
            raise ValueError("test_reserve conflicts with an upstream test split")
        if len(test_tags) != len(instances):
            raise ValueError("test_tags length mismatch")
        test = [inst for inst, t in zip(instances, test_tags) if t]
        pool = [inst for inst, t in zip(instances, test_tags) if not t]
    else:
        test = []
        pool = instances
    order = list(range(len(pool)))
    random.Random(seed).shuffle(order)
    if test_tags is None and test_reserve:
        n_test = _reserve_count(len(pool), test_reserve, "test")
        test_idx = set(order[:n_test])
        test = [pool[i] for i in sorted(test_idx)]
        order = order[n_test:]
    n_val = _reserve_count(len(order), val_reserve, "validation")
    val_idx = set(order[:n_val])
    validation = [pool[i] for i in sorted(val_idx)]
    keep = set(order) - val_idx
    train = [pool[i] for i in range(len(pool)) if i in keep]
    return train, validation, test
