"""Decision models for vertex addition: logistic regression and the random prior.

Training is deterministic: full-batch L2-regularized logistic loss
minimized with L-BFGS to a fixed gradient tolerance, so the same
decision stream always yields the same weights.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.optimize
import scipy.sparse

from qcomp.engine import Decision, compress
from qcomp.evaluation import token_f1
from qcomp.features import FeatureConfig, Featurizer, FeatureVector

MODEL_FORMAT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass
class LRModel:
    """Binary logistic regression over hashed features; the vertex-addition scorer."""

    weights: np.ndarray
    bias: float
    featurizer: Featurizer
    inverse_reg_c: float

    def predict(self, fv: FeatureVector) -> float:
        return _sigmoid(fv.dot(self.weights) + self.bias)

    def score(self, state, candidate: int) -> float:
        return self.predict(self.featurizer.featurize(state, candidate))


def _sigmoid(z: float) -> float:
    # Clamped to the open interval (0, 1); huge logits must not overflow.
    if z >= 0:
        p = 1.0 / (1.0 + np.exp(-min(z, 700.0)))
    else:
        ez = np.exp(max(z, -700.0))
        p = ez / (1.0 + ez)
    return float(min(max(p, 1e-15), 1.0 - 1e-15))


def _design_matrix(decisions: Sequence[Decision], featurizer: Featurizer):
    data, indices, indptr, labels = [], [], [0], []
    for dec in decisions:
        fv = featurizer.featurize(dec.state, dec.candidate)
        for idx, val in fv.entries.items():
            indices.append(idx)
            data.append(val)
        indptr.append(len(indices))
        labels.append(dec.label)
    x = scipy.sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(decisions), featurizer.config.D))
    return x, np.asarray(labels, dtype=np.float64)


def train_lr(decisions: Sequence[Decision], featurizer: Featurizer, c: float = 10.0,
             max_iter: int = 200, tol: float = 1e-6) -> LRModel:
    """Fit the inclusion model on oracle decisions.

    Minimizes sum_i log(1 + exp(-y_i z_i)) + ||w||^2 / (2c) with an
    unregularized bias, full batch, to gradient norm `tol` or `max_iter`
    passes.  Needs at least one decision of each label.
    """
    decisions = list(decisions)
    labels = {d.label for d in decisions}
    if labels != {0, 1}:
        raise TrainingError("need both accept and reject decisions, saw labels %s" % sorted(labels))
    x, y = _design_matrix(decisions, featurizer)
    # Unobserved hashed columns have an L2 optimum of exactly 0, so optimize
    # over the observed columns only and scatter back afterwards.
    observed = np.unique(x.indices) if x.nnz else np.zeros(0, dtype=np.int64)
    x = x[:, observed]
    sign = 2.0 * y - 1.0
    n_iter = [0]

    def objective(theta):
        w, b = theta[:-1], theta[-1]
        z = sign * (x @ w + b)
        loss = float(np.sum(np.logaddexp(0.0, -z))) + 0.5 / c * float(w @ w)
        if not np.isfinite(loss):
            raise TrainingError("non-finite loss at iteration %d" % n_iter[0])
        # d/dz log(1+exp(-z)) = -sigmoid(-z)
        g_z = -sign / (1.0 + np.exp(np.clip(z, -700.0, 700.0)))
        grad_w = x.T @ g_z + w / c
        grad = np.concatenate([grad_w, [float(np.sum(g_z))]])
        n_iter[0] += 1
        return loss, grad

    theta0 = np.zeros(len(observed) + 1)
    result = scipy.optimize.minimize(
        objective, theta0, jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-12, "maxls": 50})
    if not np.all(np.isfinite(result.x)):
        raise TrainingError("non-finite weights after optimization")
    weights = np.zeros(featurizer.config.D)
    weights[observed] = result.x[:-1]
    return LRModel(weights=weights, bias=float(result.x[-1]),
                   featurizer=featurizer, inverse_reg_c=c)


def grid_search_c(decisions: Sequence[Decision], featurizer: Featurizer,
                  val_instances, grid: Sequence[float] = (0.1, 1.0, 10.0, 100.0)):
    """Pick the inverse regularization constant by validation-set token F1."""
    results = {}
    best = None
    for c in grid:
        model = train_lr(decisions, featurizer, c=c)
        scores = []
        for inst in val_instances:
            pred = compress(inst, model)
            scores.append(token_f1(pred, inst.gold)[2])
        mean_f1 = sum(scores) / len(scores)
        results[c] = mean_f1
        if best is None or mean_f1 > results[best]:
            best = c
    return best, results


# ---------------------------------------------------------------------------
# Random baseline

@dataclass
class RandomPolicy:
    """Accepts candidates i.i.d. with the empirical training accept rate."""

    accept_prob: float
    rng_seed: int

    def __post_init__(self):
        self._rng = random.Random(self.rng_seed)

    def score(self, state, candidate: int) -> float:
        return 1.0 if self._rng.random() < self.accept_prob else 0.0

    def reset(self) -> None:
        self._rng = random.Random(self.rng_seed)


def fit_random_policy(decisions: Sequence[Decision], seed: int = 0) -> RandomPolicy:
    decisions = list(decisions)
    if not decisions:
        raise TrainingError("cannot fit a random policy on zero decisions")
    rate = sum(d.label for d in decisions) / len(decisions)
    return RandomPolicy(accept_prob=rate, rng_seed=seed)


# ---------------------------------------------------------------------------
# Model files
#
# One JSON object: {"format_version", "kind", "config", "c", "bias",
# "weights": {index: value, nonzero only}, "lemma_vocab"}.  Random
# policies store {"accept_prob", "seed"} instead of weights.

def save_lr_model(model: LRModel, path, kind: str = "lr") -> None:
    nonzero = np.flatnonzero(model.weights)
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": kind,
        "config": model.featurizer.config.to_dict(),
        "c": model.inverse_reg_c,
        "bias": model.bias,
        "weights": {str(int(i)): float(model.weights[i]) for i in nonzero},
        "lemma_vocab": sorted(model.featurizer.lemma_vocab),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def save_random_policy(policy: RandomPolicy, path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "random",
        "accept_prob": policy.accept_prob,
        "seed": policy.rng_seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model_payload(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError("unsupported model format_version %r in %s" % (version, path))
    return payload


def load_lr_model(path, expected_kinds: Iterable[str] = ("lr", "lr-ablated")) -> LRModel:
    payload = load_model_payload(path)
    if payload["kind"] not in tuple(expected_kinds):
        raise ValueError("expected a %s model, found kind=%r" % ("/".join(expected_kinds), payload["kind"]))
    config = FeatureConfig.from_dict(payload["config"])
    featurizer = Featurizer(config, frozenset(payload["lemma_vocab"]))
    weights = np.zeros(config.D)
    for idx, value in payload["weights"].items():
        i = int(idx)
        if not 0 <= i < config.D:
            raise ValueError("weight index %d outside hashed space D=%d" % (i, config.D))
        weights[i] = value
    return LRModel(weights=weights, bias=float(payload["bias"]),
                   featurizer=featurizer, inverse_reg_c=float(payload["c"]))


def load_random_policy(path) -> RandomPolicy:
    payload = load_model_payload(path)
    if payload["kind"] != "random":
        raise ValueError("expected a random policy, found kind=%r" % payload["kind"])
    return RandomPolicy(accept_prob=float(payload["accept_prob"]), rng_seed=int(payload["seed"]))
