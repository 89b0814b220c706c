"""Trigram language model with interpolated absolute discounting, plus SLOR.

Counts are case-folded.  Each order pads its context with sentence-start
markers; no end-of-sentence event is scored, so sequence probability is
the product of one conditional per real token.  That keeps the SLOR
identity exact: under an order-1 model the sequence probability is the
product of the very unigram probabilities SLOR subtracts, so SLOR is 0.

SLOR(seq) = (log P_model(seq) - sum log P_unigram(token)) / len(seq),
natural log; start markers are excluded from the length and the unigram
sum.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

BOS = "<s>"
UNK = "<unk>"
DISCOUNT = 0.75


class LMError(ValueError):
    pass


class TrigramLM:
    """Interpolated absolute-discount n-gram model, orders 1..3."""

    def __init__(self, order: int = 3, discount: float = DISCOUNT):
        if not 1 <= order <= 3:
            raise LMError("order must be 1..3, got %d" % order)
        if not 0.0 < discount < 1.0:
            raise LMError("discount must be in (0,1), got %g" % discount)
        self.order = order
        self.discount = discount
        self.counts: dict[int, Counter] = {k: Counter() for k in range(1, order + 1)}
        self.context_total: dict[int, Counter] = {k: Counter() for k in range(2, order + 1)}
        self.context_types: dict[int, Counter] = {k: Counter() for k in range(2, order + 1)}
        self.vocab: frozenset[str] = frozenset()
        self.total_tokens = 0

    def _count_sentence(self, tokens: Sequence[str]) -> None:
        toks = [t.lower() for t in tokens]
        self.counts[1].update((w,) for w in toks)
        for k in range(2, self.order + 1):
            padded = [BOS] * (k - 1) + toks
            for i in range(k - 1, len(padded)):
                self.counts[k][tuple(padded[i - k + 1:i + 1])] += 1

    def _finalize(self) -> None:
        self.vocab = frozenset(w for (w,) in self.counts[1])
        self.total_tokens = sum(self.counts[1].values())
        for k in range(2, self.order + 1):
            for ngram, c in self.counts[k].items():
                ctx = ngram[:-1]
                self.context_total[k][ctx] += c
                self.context_types[k][ctx] += 1

    def _prob(self, k: int, ctx: tuple[str, ...], w: str) -> float:
        d = self.discount
        if k == 1:
            floor = 1.0 / (len(self.vocab) + 1)
            c = self.counts[1].get((w,), 0)
            types = len(self.counts[1])
            return max(c - d, 0.0) / self.total_tokens + (d * types / self.total_tokens) * floor
        total = self.context_total[k].get(ctx, 0)
        if total == 0:
            return self._prob(k - 1, ctx[1:], w)
        c = self.counts[k].get(ctx + (w,), 0)
        types = self.context_types[k][ctx]
        return max(c - d, 0.0) / total + (d * types / total) * self._prob(k - 1, ctx[1:], w)

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """P(word | context); context longer than order-1 is truncated left."""
        if self.order > 1:
            ctx = tuple(t.lower() for t in context)[-(self.order - 1):]
        else:
            ctx = ()
        return self._prob(len(ctx) + 1, ctx, word.lower())

    def unigram_prob(self, word: str) -> float:
        return self._prob(1, (), word.lower())


def train_lm(sentences: Iterable[Sequence[str]], order: int = 3,
             discount: float = DISCOUNT) -> TrigramLM:
    """Count a token-sequence corpus into a ready-to-score model."""
    lm = TrigramLM(order=order, discount=discount)
    n = 0
    for sent in sentences:
        if sent:
            lm._count_sentence(sent)
            n += 1
    if n == 0 or lm.counts[1].total() == 0:
        raise LMError("empty training corpus")
    lm._finalize()
    return lm


def conditional_logprobs(lm, seq: Sequence[str]) -> list[float]:
    """Natural-log conditional per token, start-padded context."""
    if not seq:
        raise LMError("cannot score an empty sequence")
    ctx: tuple[str, ...] = (BOS,) * (lm.order - 1)
    out = []
    for tok in seq:
        w = tok.lower()
        out.append(math.log(lm.prob(w, ctx)))
        ctx = (ctx + (w,))[1:] if lm.order > 1 else ()
    return out


def logprob(lm, seq: Sequence[str]) -> float:
    return sum(conditional_logprobs(lm, seq))


def slor(lm, seq: Sequence[str]) -> float:
    """Length- and unigram-normalized log probability (readability proxy)."""
    if not seq:
        raise LMError("cannot score an empty sequence")
    model_lp = sum(conditional_logprobs(lm, seq))
    unigram_lp = sum(math.log(lm.unigram_prob(t)) for t in seq)
    return (model_lp - unigram_lp) / len(seq)


# ---------------------------------------------------------------------------
# ARPA persistence
#
# Probabilities are written fully interpolated and backoff weights are the
# interpolation masses, so a reloaded file reproduces the counted model's
# scores up to text-format rounding.

def _log10(p: float) -> float:
    return -99.0 if p <= 0 else math.log10(p)


def write_arpa(lm: TrigramLM, path) -> None:
    grams: dict[int, dict[tuple[str, ...], tuple[float, float | None]]] = {}
    for k in range(1, lm.order + 1):
        entries: dict[tuple[str, ...], tuple[float, float | None]] = {}
        for ngram in sorted(lm.counts[k]):
            p = lm._prob(k, ngram[:-1], ngram[-1])
            entries[ngram] = (_log10(p), None)
        if k < lm.order:
            # contexts of (k+1)-grams need backoff weights, including BOS-only ones
            for ctx, total in lm.context_total[k + 1].items():
                bow = lm.discount * lm.context_types[k + 1][ctx] / total
                lp, _ = entries.get(ctx, (-99.0, None))
                entries[ctx] = (lp, math.log10(bow))
        grams[k] = entries
    unk_p = lm._prob(1, (), UNK)
    grams[1].setdefault((UNK,), (_log10(unk_p), None))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\\data\\\n")
        for k in range(1, lm.order + 1):
            fh.write("ngram %d=%d\n" % (k, len(grams[k])))
        for k in range(1, lm.order + 1):
            fh.write("\n\\%d-grams:\n" % k)
            for ngram in sorted(grams[k]):
                lp, bow = grams[k][ngram]
                line = "%.17g\t%s" % (lp, " ".join(ngram))
                if bow is not None:
                    line += "\t%.17g" % bow
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


class ArpaLM:
    """Scores from an ARPA file with the standard backoff recursion."""

    def __init__(self, order: int, probs: dict[tuple[str, ...], float],
                 bows: dict[tuple[str, ...], float]):
        self.order = order
        self.probs = probs
        self.bows = bows

    def _prob(self, ctx: tuple[str, ...], w: str) -> float:
        ngram = ctx + (w,)
        if ngram in self.probs:
            return 10.0 ** self.probs[ngram]
        if not ctx:
            return 10.0 ** self.probs[(UNK,)]
        bow = 10.0 ** self.bows[ctx] if ctx in self.bows else 1.0
        return bow * self._prob(ctx[1:], w)

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        ctx = tuple(t.lower() for t in context)
        if self.order > 1:
            ctx = ctx[-(self.order - 1):]
        else:
            ctx = ()
        return self._prob(ctx, word.lower())

    def unigram_prob(self, word: str) -> float:
        return self._prob((), word.lower())


def read_arpa(path) -> ArpaLM:
    probs: dict[tuple[str, ...], float] = {}
    bows: dict[tuple[str, ...], float] = {}
    order = 0
    section = 0
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line in ("\\data\\", "\\end\\"):
                continue
            if line.startswith("ngram "):
                order = max(order, int(line.split("=")[0].split()[1]))
                continue
            if line.startswith("\\") and line.endswith("-grams:"):
                section = int(line[1:].split("-")[0])
                continue
            parts = line.split("\t")
            tokens = tuple(parts[1].split(" "))
            if len(tokens) != section:
                raise LMError("malformed ARPA line: %r" % line)
            probs[tokens] = float(parts[0])
            if len(parts) > 2:
                bows[tokens] = float(parts[2])
    if order == 0 or not probs:
        raise LMError("no n-gram entries found in %s" % path)
    return ArpaLM(order=order, probs=probs, bows=bows)
