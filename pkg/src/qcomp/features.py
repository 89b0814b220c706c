"""Sparse hashed features for (state, candidate) scoring.

Three families: edge features describing the parse edge between the
candidate and the compression, stateful features describing the
candidate's relation to the growing compression, and interaction
features crossing every stateful indicator with the candidate's
dependency context.  Feature names are hashed into [0, D) with a fixed,
platform-independent hash, so indices are stable across runs and
machines.  The edge family is the single code path shared by the
logistic-regression scorer and the ILP edge scorer.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from qcomp.corpus import DepEdge, ParseGraph

NEGATION_WORDS = frozenset({"not", "never", "no"})
ROOT_UPOS = "ROOT"
ROOT_LEMMA = "<root>"
OOV = "<oov>"

# Fixed bucket edges; changing them invalidates trained models.
CHAR_LEN_BUCKETS = ((3, "<=3"), (7, "4-7"))
CHAR_LEN_TOP = "8+"
DIST_BUCKETS = ((1, "1"), (2, "2"), (5, "3-5"), (10, "6-10"))
DIST_TOP = "11+"
SET_SIZE_BUCKETS = ((5, None), (10, "6-10"), (20, "11-20"))
SET_SIZE_TOP = "21+"
MAX_CHILD_COUNT = 5
MAX_DEPTH = 10


def stable_hash(name: str, d: int) -> int:
    """Seed-free string hash into [0, d); identical on every platform."""
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % d


def char_len_bucket(n: int) -> str:
    for limit, tag in CHAR_LEN_BUCKETS:
        if n <= limit:
            return tag
    return CHAR_LEN_TOP


def dist_bucket(n: int) -> str:
    for limit, tag in DIST_BUCKETS:
        if n <= limit:
            return tag
    return DIST_TOP


def set_size_bucket(n: int) -> str:
    for limit, tag in SET_SIZE_BUCKETS:
        if n <= limit:
            return tag if tag is not None else str(n)
    return SET_SIZE_TOP


def tenth_bucket(numerator: int, denominator: int) -> int:
    """floor(10 * numerator / denominator) in exact integer arithmetic, capped at 10."""
    if denominator <= 0:
        return 10
    return min(numerator * 10 // denominator, 10)


@dataclass
class FeatureVector:
    """Sparse map hashed index -> value; colliding names sum."""

    entries: dict[int, float]
    D: int

    def dot(self, weights) -> float:
        return sum(weights[i] * v for i, v in self.entries.items())


@dataclass(frozen=True)
class FeatureConfig:
    use_edge: bool = True
    use_stateful: bool = True
    use_interaction: bool = True
    D: int = 2 ** 18
    lexical_vocab_cutoff: int = 5000

    def __post_init__(self):
        if self.D < 2 ** 16 or self.D & (self.D - 1):
            raise ValueError("D must be a power of two >= 2^16, got %d" % self.D)

    def to_dict(self) -> dict:
        return {
            "use_edge": self.use_edge,
            "use_stateful": self.use_stateful,
            "use_interaction": self.use_interaction,
            "D": self.D,
            "lexical_vocab_cutoff": self.lexical_vocab_cutoff,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(**d)


FULL = FeatureConfig()
ABLATED = FeatureConfig(use_edge=True, use_stateful=False, use_interaction=False)


def build_lemma_vocab(graphs: Iterable[ParseGraph], cutoff: int) -> frozenset[str]:
    """Top `cutoff` training lemmas (lowercased); everything else is OOV."""
    counts = Counter()
    for g in graphs:
        counts.update(t.lemma.lower() for t in g.tokens)
    return frozenset(lemma for lemma, _ in counts.most_common(cutoff))


def connecting_vertex(state, v: int) -> Optional[int]:
    """The accepted tree-neighbor of v added earliest; ties go left to right."""
    g = state.inst.graph
    best = None
    for nb in g.neighbors[v]:
        if nb in state.accepted:
            key = (state.accept_order[nb], nb)
            if best is None or key < best[0]:
                best = (key, nb)
    return None if best is None else best[1]


class Featurizer:
    """Names, hashes and assembles the feature families for one model.

    Holds the configuration and the training lemma vocabulary.  With
    collect_names=True every hashed name is recorded for the TSV
    inspection dump.
    """

    def __init__(self, config: FeatureConfig, lemma_vocab: frozenset[str] = frozenset(),
                 collect_names: bool = False):
        self.config = config
        self.lemma_vocab = frozenset(lemma_vocab)
        self.seen_names: Optional[dict[str, int]] = {} if collect_names else None

    # -- naming ------------------------------------------------------------

    def _lex(self, lemma: str) -> str:
        lemma = lemma.lower()
        return lemma if lemma in self.lemma_vocab else OOV

    def edge_feature_names(self, g: ParseGraph, u: Optional[int], v: int,
                           label: Optional[str] = None) -> list[str]:
        """Names for the edge (u, v); u is a head position, 0 for root, None for no edge."""
        if u is None:
            return ["e|no_edge"]
        if label is None:
            label = next(e.label for e in g.all_edges if e.head == u and e.child == v)
        tok_v = g.token(v)
        if u == 0:
            u_upos, u_lemma, u_pos = ROOT_UPOS, ROOT_LEMMA, 0
        else:
            tok_u = g.token(u)
            u_upos, u_lemma, u_pos = tok_u.upos, self._lex(tok_u.lemma), u
        names = [
            "e|label=%s" % label,
            "e|label_cupos=%s|%s" % (label, tok_v.upos),
            "e|hupos=%s" % u_upos,
            "e|depth=%s" % min(g.depth[v], MAX_DEPTH),
            "e|nchild=%s" % (str(len(g.children[v])) if len(g.children[v]) < MAX_CHILD_COUNT
                             else "%d+" % MAX_CHILD_COUNT),
            "e|clen=%s" % char_len_bucket(tok_v.char_len),
            "e|dist=%s" % dist_bucket(abs(u_pos - v)),
            "e|lemma=%s" % self._lex(tok_v.lemma),
            "e|lempair=%s|%s" % (u_lemma, self._lex(tok_v.lemma)),
        ]
        if tok_v.lemma.lower() in NEGATION_WORDS or tok_v.form.lower() in NEGATION_WORDS:
            names.append("e|neg")
        if not any(g.parent[c].label == "punct" for c in g.children[v]):
            names.append("e|nopunct")
        return names

    def stateful_feature_names(self, state, v: int) -> list[str]:
        inst = state.inst
        c = state.accepted
        if not c:
            span = "c_empty"
        elif v < min(c):
            span = "left_of_c"
        elif v > max(c):
            span = "right_of_c"
        else:
            span = "inside_c"
        names = [
            "s|%s" % span,
            "s|budget_used=%d" % tenth_bucket(state.used_chars, inst.budget_chars),
            "s|csize=%s" % set_size_bucket(len(c)),
            "s|queue_done=%d" % tenth_bucket(state.timestep, state.initial_queue_size),
            "s|vclen=%s" % char_len_bucket(inst.graph.token(v).char_len),
        ]
        if state.is_neighbor(v):
            names.append("s|adj")
        return names

    def interaction_feature_names(self, state, v: int,
                                  stateful: Optional[list[str]] = None) -> list[str]:
        """Cross every stateful indicator with v's dependency label and edge direction."""
        g = state.inst.graph
        if stateful is None:
            stateful = self.stateful_feature_names(state, v)
        dep_label = g.parent[v].label
        u = connecting_vertex(state, v)
        if u is None:
            direction = "no_edge"
        elif g.parent[v].head == u:
            direction = "u_governs_v"
        else:
            direction = "v_governs_u"
        names = []
        for s in stateful:
            names.append("x|%s*lbl=%s" % (s[2:], dep_label))
            names.append("x|%s*dir=%s" % (s[2:], direction))
        return names

    # -- hashing -----------------------------------------------------------

    def _hash_names(self, names: Iterable[str]) -> FeatureVector:
        d = self.config.D
        entries: dict[int, float] = {}
        for name in names:
            idx = stable_hash(name, d)
            entries[idx] = entries.get(idx, 0.0) + 1.0
            if self.seen_names is not None:
                self.seen_names[name] = idx
        return FeatureVector(entries, d)

    def edge_vector(self, g: ParseGraph, edge: DepEdge) -> FeatureVector:
        """Hashed edge family for one parse edge; the ILP's per-edge representation."""
        return self._hash_names(self.edge_feature_names(g, edge.head, edge.child, edge.label))

    def edge_features(self, g: ParseGraph, u: Optional[int], v: int) -> FeatureVector:
        return self._hash_names(self.edge_feature_names(g, u, v))

    def stateful_features(self, state, v: int) -> FeatureVector:
        return self._hash_names(self.stateful_feature_names(state, v))

    def interaction_features(self, state, v: int) -> FeatureVector:
        return self._hash_names(self.interaction_feature_names(state, v))

    def featurize(self, state, v: int) -> FeatureVector:
        """Union of the enabled families plus a constant bias feature."""
        g = state.inst.graph
        names = ["bias"]
        if self.config.use_edge:
            u = connecting_vertex(state, v)
            if u is None:
                names.extend(self.edge_feature_names(g, None, v))
            elif g.parent[v].head == u:
                names.extend(self.edge_feature_names(g, u, v, g.parent[v].label))
            else:
                names.extend(self.edge_feature_names(g, v, u, g.parent[u].label))
        if self.config.use_stateful or self.config.use_interaction:
            stateful = self.stateful_feature_names(state, v)
            if self.config.use_stateful:
                names.extend(stateful)
            if self.config.use_interaction:
                names.extend(self.interaction_feature_names(state, v, stateful))
        return self._hash_names(names)


def dump_feature_names(featurizer: Featurizer, weights, path) -> None:
    """TSV of name -> hashed index -> learned weight, for model inspection."""
    if featurizer.seen_names is None:
        raise ValueError("featurizer was not collecting names")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("name\tindex\tweight\n")
        for name in sorted(featurizer.seen_names):
            idx = featurizer.seen_names[name]
            fh.write("%s\t%d\t%.10g\n" % (name, idx, float(weights[idx])))
