"""Metrics and measurement protocols: token F1, ratio, SLOR, latency, bootstrap.

All timing lives under "timing" keys in serialized reports so determinism
checks can strip it; everything else is reproducible bit for bit under a
fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from qcomp.corpus import Instance, char_length, linearize

REPORT_VERSION = 1


def token_f1(pred: Iterable[int], gold: Iterable[int]) -> tuple[float, float, float]:
    """Set-overlap precision/recall/F1 over kept token positions."""
    pred, gold = set(pred), set(gold)
    if not gold:
        raise ValueError("gold compression is empty")
    if not pred:
        return 0.0, 0.0, 0.0
    hits = len(pred & gold)
    p = hits / len(pred)
    r = hits / len(gold)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def compression_ratio(pred: Iterable[int], graph) -> float:
    """Character length of the compression over the full sentence's."""
    pred = set(pred)
    if not pred:
        raise ValueError("compression is empty")
    return char_length(graph, pred) / char_length(graph, graph.positions)


@dataclass(frozen=True)
class BenchResult:
    mean_ms: float
    std_ms: float
    n: int

    def to_dict(self) -> dict:
        return {"mean_ms": self.mean_ms, "std_ms": self.std_ms, "n": self.n}


def latency_bench(system, instances: Sequence[Instance], n: int = 100_000,
                  seed: int = 0, warmup: int = 100) -> BenchResult:
    """Mean wall-clock ms per compression over n draws with replacement.

    Featurization is inside the measured call, matching per-sentence
    serving cost.  The first `warmup` calls are unmeasured.
    """
    if not instances:
        raise ValueError("empty benchmark corpus")
    import random as _random
    rng = _random.Random(seed)
    for inst in (rng.choice(instances) for _ in range(min(warmup, n))):
        system.compress(inst)
    times = np.empty(n)
    for i in range(n):
        inst = rng.choice(instances)
        t0 = time.perf_counter()
        system.compress(inst)
        times[i] = time.perf_counter() - t0
    return BenchResult(mean_ms=float(times.mean() * 1e3),
                       std_ms=float(times.std() * 1e3), n=n)


@dataclass(frozen=True)
class BootstrapResult:
    """Paired bootstrap comparison; p_value is the one-sided tail.

    One-sided: fraction of resamples where the overall-worse system's mean
    meets or beats the overall-better system's (add-one smoothed, so the
    value lies in (0, 1]).  Two-sided: twice that, capped at 1.
    """

    p_value: float
    p_two_sided: float
    mean_a: float
    mean_b: float
    resamples: int

    def to_dict(self) -> dict:
        return {"p_value": self.p_value, "p_two_sided": self.p_two_sided,
                "mean_a": self.mean_a, "mean_b": self.mean_b,
                "resamples": self.resamples}


def paired_bootstrap(per_instance_a: Sequence[float], per_instance_b: Sequence[float],
                     resamples: int = 10_000, seed: int = 0) -> BootstrapResult:
    """Significance of the mean gap between paired per-instance scores."""
    a = np.asarray(per_instance_a, dtype=np.float64)
    b = np.asarray(per_instance_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired scores differ in length: %d vs %d" % (len(a), len(b)))
    if len(a) < 2:
        raise ValueError("need at least 2 paired instances")
    diffs = a - b
    if float(diffs.mean()) < 0.0:
        diffs = -diffs
    rng = np.random.default_rng(seed)
    n = len(diffs)
    reversals = 0
    chunk = max(1, min(resamples, 4_000_000 // max(n, 1)))
    done = 0
    while done < resamples:
        rows = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(rows, n))
        reversals += int(np.count_nonzero(diffs[idx].mean(axis=1) <= 0.0))
        done += rows
    p_one = (reversals + 1) / (resamples + 1)
    return BootstrapResult(p_value=p_one, p_two_sided=min(1.0, 2 * p_one),
                           mean_a=float(a.mean()), mean_b=float(b.mean()),
                           resamples=resamples)


def linearity_probe(system, sizes: Sequence[int] = (10, 20, 40, 80, 160),
                    repeats: int = 30, batches: int = 5,
                    ) -> tuple[list[int], list[float], float]:
    """Wall time per compression on synthetic chains, with a linear-fit R^2.

    Per size the best batch mean is kept (minimum over batches damps
    scheduler noise).  Budget is the full sentence, query empty, so every
    vertex is popped once.
    """
    from qcomp.datagen import synthetic_chain

    times_ms = []
    for n in sizes:
        g = synthetic_chain(n)
        inst = Instance(graph=g, query=frozenset(),
                        budget_chars=char_length(g, g.positions))
        for _ in range(3):
            system.compress(inst)
        best = float("inf")
        for _ in range(batches):
            t0 = time.perf_counter()
            for _ in range(repeats):
                system.compress(inst)
            best = min(best, (time.perf_counter() - t0) / repeats)
        times_ms.append(best * 1e3)
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(times_ms)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / total if total > 0 else 1.0
    return list(sizes), times_ms, r2


# ---------------------------------------------------------------------------
# Whole-suite evaluation

@dataclass
class EvalReport:
    system: str
    rows: list[dict]
    aggregates: dict
    significance: list[dict] = field(default_factory=list)

    def metric_values(self, metric: str) -> list[Optional[float]]:
        return [row.get(metric) for row in self.rows]

    def to_dict(self) -> dict:
        return {"version": REPORT_VERSION, "system": self.system, "rows": self.rows,
                "aggregates": self.aggregates, "significance": self.significance}

    def to_tsv(self) -> str:
        cols = ["instance_id", "f1", "precision", "recall", "ratio", "slor"]
        lines = ["\t".join(cols)]
        for row in self.rows:
            lines.append("\t".join(
                "" if row.get(c) is None else
                (row[c] if isinstance(row[c], str) else "%.10g" % row[c])
                for c in cols))
        return "\n".join(lines) + "\n"


def evaluate_suite(system, instances: Sequence[Instance], lm=None) -> EvalReport:
    """Compress every instance, score against gold, aggregate.

    Per-instance failures are recorded on the row instead of aborting the
    suite.  SLOR columns appear only when a language model is supplied.
    """
    from qcomp.lm import slor as slor_fn

    if not instances:
        raise ValueError("no instances to evaluate")
    rows = []
    for inst in instances:
        if inst.gold is None:
            raise ValueError("instance %s lacks a gold compression" % inst.id)
        row: dict = {"instance_id": inst.id}
        try:
            t0 = time.perf_counter()
            pred = system.compress(inst)
            elapsed_ms = (time.perf_counter() - t0) * 1e3
            p, r, f1 = token_f1(pred, inst.gold)
            row.update(precision=p, recall=r, f1=f1,
                       kept=sorted(pred), timing={"latency_ms": elapsed_ms})
            row["ratio"] = compression_ratio(pred, inst.graph) if pred else None
            if lm is not None and pred:
                tokens = linearize(inst.graph, pred)[0].split(" ")
                row["slor"] = slor_fn(lm, tokens)
            elif lm is not None:
                row["slor"] = None
        except Exception as err:  # noqa: BLE001 - per-instance isolation is the contract
            row["error"] = "%s: %s" % (type(err).__name__, err)
        rows.append(row)

    ok = [r for r in rows if "error" not in r]
    def mean_of(key):
        vals = [r[key] for r in ok if r.get(key) is not None]
        return float(np.mean(vals)) if vals else None
    aggregates = {
        "n_instances": len(rows),
        "n_failed": len(rows) - len(ok),
        "mean_f1": mean_of("f1"),
        "mean_ratio": mean_of("ratio"),
        "mean_slor": mean_of("slor"),
        "timing": {"mean_latency_ms": float(np.mean([r["timing"]["latency_ms"] for r in ok]))
                   if ok else None},
    }
    return EvalReport(system=getattr(system, "name", type(system).__name__),
                      rows=rows, aggregates=aggregates)


def compare_reports(report_a: EvalReport, report_b: EvalReport,
                    metrics: Sequence[str] = ("f1", "slor"),
                    resamples: int = 10_000, seed: int = 0) -> list[dict]:
    """Paired bootstrap per metric over rows shared by both reports."""
    by_id_b = {row["instance_id"]: row for row in report_b.rows}
    entries = []
    for metric in metrics:
        a_vals, b_vals = [], []
        for row in report_a.rows:
            other = by_id_b.get(row["instance_id"])
            if other is None:
                continue
            va, vb = row.get(metric), other.get(metric)
            if va is not None and vb is not None:
                a_vals.append(va)
                b_vals.append(vb)
        if len(a_vals) < 2:
            continue
        result = paired_bootstrap(a_vals, b_vals, resamples=resamples, seed=seed)
        entry = {"metric": metric, "system_a": report_a.system,
                 "system_b": report_b.system}
        entry.update(result.to_dict())
        entries.append(entry)
    return entries
