"""Shared builders: toy parses and a seeded synthetic desk corpus.

Desk sentences follow a subject-verb-object template with optional
modifiers, so dependency labels carry real signal.  Golds are connected
subtrees kept with label-dependent probabilities, which makes them
reconstructable by a learned model while leaving plenty of variance.
"""

from __future__ import annotations

import random

import pytest

from qcomp.corpus import Instance, ParseGraph, build_graph
from qcomp.datagen import QueryLengthDist, build_instance, Skip

NOUNS = ["cat", "dogs", "mayor", "police", "report", "council", "budget",
         "strike", "museum", "river", "airport", "teacher", "garden", "plan",
         "statement", "deal", "bridge", "school"]
PROPER = ["Syracuse", "Hughes", "QPR", "London", "Mary", "Acme", "Nile",
          "Parliament", "Atlas", "Erie"]
VERBS = ["said", "runs", "approved", "announced", "visited", "closed", "won",
         "signed", "built", "rejected", "opened", "praised"]
DETS = ["the", "a", "this"]
ADJS = ["big", "old", "new", "green", "public", "local", "quiet"]
ADVS = ["quickly", "again", "now", "finally"]
ADPS = ["in", "on", "at", "near"]

KEEP_PROB = {
    "root": 1.0, "nsubj": 0.92, "obj": 0.88, "obl": 0.45, "nmod": 0.40,
    "conj": 0.50, "amod": 0.28, "advmod": 0.30, "det": 0.22, "case": 0.40,
    "cc": 0.45, "punct": 0.08,
}


def _noun(rng: random.Random) -> tuple[str, str]:
    if rng.random() < 0.3:
        form = rng.choice(PROPER)
        return form, "PROPN"
    return rng.choice(NOUNS), "NOUN"


def _noun_phrase(rng: random.Random, rows: list, head_label: str, head_of: int,
                 depth: int = 0):
    """Append det? amod* noun (case-marked nmod chain?) (cc conj?); returns noun index."""
    pre = []
    if rng.random() < 0.7:
        pre.append((rng.choice(DETS), "DET", "det"))
    while rng.random() < 0.4 and len(pre) < 3:
        pre.append((rng.choice(ADJS), "ADJ", "amod"))
    noun_idx = len(rows) + len(pre) + 1
    for form, upos, label in pre:
        rows.append([form, form.lower(), upos, noun_idx, label])
    form, upos = _noun(rng)
    rows.append([form, form.lower(), upos, head_of, head_label])
    if depth < 2 and rng.random() < 0.35:
        adp = rng.choice(ADPS)
        case_idx = len(rows) + 1
        rows.append([adp, adp, "ADP", 0, "case"])  # head patched to the nmod noun
        inner = _noun_phrase(rng, rows, "nmod", noun_idx, depth + 1)
        rows[case_idx - 1][3] = inner
    if depth < 2 and rng.random() < 0.2:
        cc_idx = len(rows) + 1
        rows.append(["and", "and", "CCONJ", 0, "cc"])
        conj = _noun_phrase(rng, rows, "conj", noun_idx, depth + 1)
        rows[cc_idx - 1][3] = conj
    return noun_idx


def random_sentence(rng: random.Random, sent_id: str) -> ParseGraph:
    """Template clause with rich modifiers, 10-30ish tokens.

    [NP] (advmod) VERB [NP] ([case NP])* (and VERB [NP])? .
    """
    rows: list = []
    _noun_phrase(rng, rows, "nsubj", 0)  # head patched once the verb is placed
    if rng.random() < 0.35:
        adv = rng.choice(ADVS)
        rows.append([adv, adv, "ADV", 0, "advmod"])
    verb_idx = len(rows) + 1
    verb = rng.choice(VERBS)
    rows.append([verb, verb, "VERB", 0, "root"])
    _noun_phrase(rng, rows, "obj", verb_idx)
    for _ in range(2):
        if rng.random() < 0.45:
            adp = rng.choice(ADPS)
            case_idx = len(rows) + 1
            rows.append([adp, adp, "ADP", 0, "case"])
            obl = _noun_phrase(rng, rows, "obl", verb_idx)
            rows[case_idx - 1][3] = obl
    if rng.random() < 0.35:
        cc_idx = len(rows) + 1
        rows.append(["and", "and", "CCONJ", 0, "cc"])
        verb2_idx = len(rows) + 1
        verb2 = rng.choice(VERBS)
        rows.append([verb2, verb2, "VERB", verb_idx, "conj"])
        rows[cc_idx - 1][3] = verb2_idx
        _noun_phrase(rng, rows, "obj", verb2_idx)
    rows.append([".", ".", "PUNCT", verb_idx, "punct"])
    for row in rows:
        if row[3] == 0 and row[4] in ("nsubj", "advmod"):
            row[3] = verb_idx
    return build_graph(sent_id, [tuple(r) for r in rows])


def subtree_gold(rng: random.Random, g: ParseGraph) -> frozenset[int]:
    """Connected subtree from the root child, kept by per-label probability."""
    root_child = next(e.child for e in g.tree_edges if e.head == 0)
    kept = {root_child}
    stack = [root_child]
    while stack:
        head = stack.pop()
        for child in g.children[head]:
            label = g.parent[child].label.split(":")[0]
            if rng.random() < KEEP_PROB.get(label, 0.4):
                kept.add(child)
                stack.append(child)
    return frozenset(kept)


DESK_DIST = QueryLengthDist({1: 0.5, 2: 0.3, 3: 0.2}, proper_weight=0.4)


def desk_corpus(seed: int, n_sentences: int, dist: QueryLengthDist = DESK_DIST,
                ) -> list[Instance]:
    """Seeded instances with golds guaranteed to respect query and budget."""
    rng = random.Random(seed)
    out = []
    i = 0
    while len(out) < n_sentences:
        g = random_sentence(rng, "desk%05d" % i)
        i += 1
        gold = subtree_gold(rng, g)
        inst = build_instance(g, gold, dist, rng)
        if isinstance(inst, Skip):
            continue
        out.append(inst)
    return out


def toy_graph() -> ParseGraph:
    """'The big dog runs in the park' with a standard UD-style parse."""
    return build_graph("toy", [
        ("The", "the", "DET", 3, "det"),
        ("big", "big", "ADJ", 3, "amod"),
        ("dog", "dog", "NOUN", 4, "nsubj"),
        ("runs", "run", "VERB", 0, "root"),
        ("in", "in", "ADP", 7, "case"),
        ("the", "the", "DET", 7, "det"),
        ("park", "park", "NOUN", 4, "obl"),
    ])


def chain_graph(forms: list[str], graph_id: str = "chain") -> ParseGraph:
    """Chain parse 0 -> 1 -> 2 -> ...; token i heads i+1."""
    rows = [(form, form.lower(), "NOUN", i, "root" if i == 0 else "dep")
            for i, form in enumerate(forms)]
    return build_graph(graph_id, rows)


def random_tree(rng: random.Random, n: int, graph_id: str = "rt") -> ParseGraph:
    """Arbitrary random parse tree: any attachment shape, mixed labels."""
    forms = ["".join(rng.choices("abcdefgh", k=rng.randint(1, 8))) for _ in range(n)]
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = {order[0]: 0}
    for i, pos in enumerate(order[1:], start=1):
        heads[pos] = order[rng.randrange(i)]
    labels = ["nsubj", "obj", "det", "amod", "obl", "nmod", "case", "advmod", "conj"]
    upos = ["NOUN", "VERB", "DET", "ADJ", "ADP", "PROPN", "ADV"]
    rows = []
    for pos in range(1, n + 1):
        rows.append((forms[pos - 1], forms[pos - 1], rng.choice(upos), heads[pos],
                     "root" if heads[pos] == 0 else rng.choice(labels)))
    return build_graph(graph_id, rows)


class ConstantModel:
    """Decision stub with a fixed score."""

    def __init__(self, p: float):
        self.p = p

    def score(self, state, candidate):
        return self.p


@pytest.fixture
def toy():
    return toy_graph()
