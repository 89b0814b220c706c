"""Dependency-parsed sentences: CoNLL-U ingestion, graph transforms, linearization.

The character-length function used everywhere (budgets, gold lengths,
compression ratios) joins kept tokens with single spaces and counts no
leading or trailing space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

TREE = "tree"
ROOT_AUGMENTED = "root_augmented"
ROOT_AUG_LABEL = "root_aug"

# Edge labels that mark function words attached below the modifier they
# introduce; used by relabel_function_edges.
FUNCTION_LABELS = ("case", "cc")


class CorpusError(ValueError):
    """Malformed input: bad CoNLL-U, broken tree structure, bad instance."""


@dataclass(frozen=True)
class Token:
    """One sentence token; position is 1-based."""

    position: int
    form: str
    lemma: str
    upos: str

    def __post_init__(self):
        if self.position < 1:
            raise CorpusError("token position must be >= 1, got %d" % self.position)
        if not self.form:
            raise CorpusError("empty token form at position %d" % self.position)

    @property
    def char_len(self) -> int:
        return len(self.form)


@dataclass(frozen=True)
class DepEdge:
    """Directed dependency edge; head 0 is the synthetic root."""

    head: int
    child: int
    label: str
    origin: str = TREE

    def __post_init__(self):
        if self.head == self.child:
            raise CorpusError("self-loop edge at %d" % self.head)
        if self.child < 1:
            raise CorpusError("edge child must be a token position, got %d" % self.child)
        if self.origin == ROOT_AUGMENTED and self.head != 0:
            raise CorpusError("root_augmented edge must have head 0")
        if self.origin not in (TREE, ROOT_AUGMENTED):
            raise CorpusError("unknown edge origin %r" % self.origin)


@dataclass(frozen=True)
class ParseGraph:
    """Tokens plus dependency edges of one sentence.

    tree_edges form a single tree rooted at 0 over all tokens; aug_edges
    are added by transform_root_edges for the ILP and are empty before it.
    """

    id: str
    tokens: tuple[Token, ...]
    tree_edges: tuple[DepEdge, ...]
    aug_edges: tuple[DepEdge, ...] = ()

    @property
    def positions(self) -> range:
        return range(1, len(self.tokens) + 1)

    def token(self, position: int) -> Token:
        return self.tokens[position - 1]

    @cached_property
    def parent(self) -> dict[int, DepEdge]:
        """Incoming tree edge per token position."""
        return {e.child: e for e in self.tree_edges}

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {p: [] for p in self.positions}
        out[0] = []
        for e in self.tree_edges:
            out[e.head].append(e.child)
        return {h: tuple(sorted(c)) for h, c in out.items()}

    @cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        """Undirected adjacency over tree edges between real tokens (root excluded)."""
        adj: dict[int, set[int]] = {p: set() for p in self.positions}
        for e in self.tree_edges:
            if e.head >= 1:
                adj[e.head].add(e.child)
                adj[e.child].add(e.head)
        return {p: tuple(sorted(s)) for p, s in adj.items()}

    @cached_property
    def depth(self) -> dict[int, int]:
        """Tree depth per position; children of the root are depth 1."""
        depths: dict[int, int] = {}
        stack = [(c, 1) for c in self.children[0]]
        while stack:
            pos, d = stack.pop()
            depths[pos] = d
            stack.extend((c, d + 1) for c in self.children[pos])
        return depths

    @property
    def all_edges(self) -> tuple[DepEdge, ...]:
        return self.tree_edges + self.aug_edges

    def total_char_len(self) -> int:
        return linearize(self, self.positions)[1]


def _check_tree(n_tokens: int, edges: Iterable[DepEdge], where: str = "") -> None:
    """Raise unless edges form a single tree rooted at 0 over 1..n_tokens."""
    parent: dict[int, int] = {}
    for e in edges:
        if e.child in parent:
            raise CorpusError("token %d has two heads%s" % (e.child, where))
        if not 0 <= e.head <= n_tokens:
            raise CorpusError("head %d out of range%s" % (e.head, where))
        parent[e.child] = e.head
    if set(parent) != set(range(1, n_tokens + 1)):
        raise CorpusError("not every token has a head%s" % where)
    roots = [c for c, h in parent.items() if h == 0]
    if len(roots) != 1:
        raise CorpusError("expected exactly one root token, found %d%s" % (len(roots), where))
    for start in parent:
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                raise CorpusError("cycle through token %d%s" % (start, where))
            seen.add(node)
            node = parent[node]


def build_graph(graph_id: str, rows: list[tuple[str, str, str, int, str]]) -> ParseGraph:
    """Construct a validated graph from (form, lemma, upos, head, label) rows."""
    tokens = tuple(
        Token(position=i + 1, form=form, lemma=lemma, upos=upos)
        for i, (form, lemma, upos, _, _) in enumerate(rows)
    )
    edges = tuple(
        DepEdge(head=head, child=i + 1, label=label)
        for i, (_, _, _, head, label) in enumerate(rows)
    )
    _check_tree(len(tokens), edges, " in %s" % graph_id)
    return ParseGraph(id=graph_id, tokens=tokens, tree_edges=edges)


# ---------------------------------------------------------------------------
# CoNLL-U

_N_COLUMNS = 10


def parse_conllu(text: str) -> list[ParseGraph]:
    """Parse CoNLL-U text into one ParseGraph per sentence.

    Multiword-token ranges (1-2) and empty nodes (1.1) are skipped.
    LEMMA falls back to the lowercased FORM when '_'.  DEPS/MISC are
    ignored.  Malformed lines, out-of-range heads and non-tree structure
    raise CorpusError citing the offending line.
    """
    graphs: list[ParseGraph] = []
    sent_rows: list[tuple[str, str, str, int, str]] = []
    sent_lines: list[int] = []
    sent_id: Optional[str] = None

    def flush():
        nonlocal sent_rows, sent_lines, sent_id
        if not sent_rows:
            sent_id = None
            return
        gid = sent_id if sent_id is not None else "s%d" % (len(graphs) + 1)
        n = len(sent_rows)
        for lineno, (_, _, _, head, _) in zip(sent_lines, sent_rows):
            if not 0 <= head <= n:
                raise CorpusError("line %d: HEAD %d out of range for %d-token sentence"
                                  % (lineno, head, n))
        try:
            graphs.append(build_graph(gid, sent_rows))
        except CorpusError as err:
            raise CorpusError("sentence ending at line %d: %s" % (sent_lines[-1], err))
        sent_rows, sent_lines, sent_id = [], [], None

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            if line.startswith("# sent_id"):
                _, _, value = line.partition("=")
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != _N_COLUMNS:
            raise CorpusError("line %d: expected %d tab-separated columns, got %d"
                              % (lineno, _N_COLUMNS, len(cols)))
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue
        try:
            position = int(tok_id)
            head = int(cols[6])
        except ValueError:
            raise CorpusError("line %d: non-integer ID or HEAD column" % lineno)
        if position != len(sent_rows) + 1:
            raise CorpusError("line %d: token positions not contiguous (saw %d, expected %d)"
                              % (lineno, position, len(sent_rows) + 1))
        form = cols[1]
        lemma = cols[2] if cols[2] != "_" else form.lower()
        sent_rows.append((form, lemma, cols[3], head, cols[7]))
        sent_lines.append(lineno)
    flush()
    return graphs


def serialize_conllu(graphs: Iterable[ParseGraph]) -> str:
    """Render graphs back to CoNLL-U; inverse of parse_conllu on well-formed input."""
    blocks = []
    for g in graphs:
        lines = ["# sent_id = %s" % g.id]
        for tok in g.tokens:
            edge = g.parent[tok.position]
            lines.append("\t".join([
                str(tok.position), tok.form, tok.lemma, tok.upos, "_", "_",
                str(edge.head), edge.label, "_", "_",
            ]))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# Graph transforms

def transform_root_edges(g: ParseGraph) -> ParseGraph:
    """Add one root_augmented edge (0, v) per token v lacking a tree edge from 0.

    Solver preprocessing: lets the ILP splice subclauses directly under the
    root.  Calling it on an already-transformed graph is an error.
    """
    if g.aug_edges:
        raise CorpusError("graph %s already has root_augmented edges" % g.id)
    rooted = {e.child for e in g.tree_edges if e.head == 0}
    aug = tuple(
        DepEdge(head=0, child=v, label=ROOT_AUG_LABEL, origin=ROOT_AUGMENTED)
        for v in g.positions if v not in rooted
    )
    return ParseGraph(id=g.id, tokens=g.tokens, tree_edges=g.tree_edges, aug_edges=aug)


def relabel_function_edges(g: ParseGraph) -> ParseGraph:
    """Suffix modifier/conjunct edge labels with their function-word lemma.

    For each 'case' or 'cc' edge (h, w), the tree edge into h gets the
    suffix ':<lemma(w).lower()>' (nmod -> nmod:in, conj -> conj:and).
    With several function children the leftmost wins.  No matching
    pattern leaves the graph unchanged.
    """
    # Leftmost function child per head decides the suffix.
    func_child: dict[int, int] = {}
    for e in g.tree_edges:
        if e.label in FUNCTION_LABELS and e.head >= 1:
            if e.head not in func_child or e.child < func_child[e.head]:
                func_child[e.head] = e.child
    if not func_child:
        return g
    suffix = {head: g.token(child).lemma.lower() for head, child in func_child.items()}
    new_edges = tuple(
        DepEdge(e.head, e.child, "%s:%s" % (e.label, suffix[e.child]), e.origin)
        if e.child in suffix else e
        for e in g.tree_edges
    )
    return ParseGraph(id=g.id, tokens=g.tokens, tree_edges=new_edges, aug_edges=g.aug_edges)


def linearize(g: ParseGraph, verts: Iterable[int]) -> tuple[str, int]:
    """Render a vertex set left-to-right; returns (text, char length).

    Length counts single separating spaces: sum of token lengths plus
    max(0, |verts| - 1).  The empty set gives ("", 0).
    """
    ordered = sorted(set(verts))
    if any(v not in g.positions for v in ordered):
        raise CorpusError("vertex outside graph %s" % g.id)
    forms = [g.token(v).form for v in ordered]
    text = " ".join(forms)
    return text, len(text)


def char_length(g: ParseGraph, verts: Iterable[int]) -> int:
    vs = set(verts)
    if not vs:
        return 0
    return sum(g.token(v).char_len for v in vs) + len(vs) - 1


# ---------------------------------------------------------------------------
# Instances

@dataclass(frozen=True)
class Instance:
    """A constrained-compression problem: sentence, query, budget, optional gold."""

    graph: ParseGraph
    query: frozenset[int]
    budget_chars: int
    gold: Optional[frozenset[int]] = None

    def __post_init__(self):
        object.__setattr__(self, "query", frozenset(self.query))
        if self.gold is not None:
            object.__setattr__(self, "gold", frozenset(self.gold))
        positions = set(self.graph.positions)
        if not self.query <= positions:
            raise CorpusError("query positions outside sentence %s" % self.graph.id)
        if self.gold is not None:
            if not self.gold <= positions:
                raise CorpusError("gold positions outside sentence %s" % self.graph.id)
            if not self.query <= self.gold:
                raise CorpusError("query not contained in gold for %s" % self.graph.id)
        if self.budget_chars < 1:
            raise CorpusError("budget must be >= 1, got %d" % self.budget_chars)

    @property
    def id(self) -> str:
        return self.graph.id


# ---------------------------------------------------------------------------
# JSON-lines interchange
#
# One object per line:
#   {"id": ..., "tokens": [{"form","lemma","upos"}...],
#    "edges": [[head, child, "label"]...],
#    "query": [...], "budget": int, "gold": [...]}
# query/budget/gold are optional; files of bare graphs omit them.

def graph_to_dict(g: ParseGraph) -> dict:
    return {
        "id": g.id,
        "tokens": [{"form": t.form, "lemma": t.lemma, "upos": t.upos} for t in g.tokens],
        "edges": [[e.head, e.child, e.label] for e in g.tree_edges],
    }


def graph_from_dict(d: dict) -> ParseGraph:
    heads = {child: (head, label) for head, child, label in d["edges"]}
    rows = []
    for i, t in enumerate(d["tokens"]):
        head, label = heads.get(i + 1, (0, "root"))
        rows.append((t["form"], t["lemma"], t["upos"], head, label))
    return build_graph(str(d["id"]), rows)


def instance_to_dict(inst: Instance) -> dict:
    d = graph_to_dict(inst.graph)
    d["query"] = sorted(inst.query)
    d["budget"] = inst.budget_chars
    if inst.gold is not None:
        d["gold"] = sorted(inst.gold)
    return d


def instance_from_dict(d: dict) -> Instance:
    return Instance(
        graph=graph_from_dict(d),
        query=frozenset(d.get("query", ())),
        budget_chars=int(d["budget"]),
        gold=frozenset(d["gold"]) if d.get("gold") is not None else None,
    )


def write_jsonl(path, dicts: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in dicts:
            fh.write(json.dumps(d, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_graphs(path) -> list[ParseGraph]:
    return [graph_from_dict(d) for d in read_jsonl(path)]


def load_instances(path) -> list[Instance]:
    return [instance_from_dict(d) for d in read_jsonl(path)]


def write_instances(path, instances: Iterable[Instance]) -> None:
    write_jsonl(path, (instance_to_dict(i) for i in instances))
