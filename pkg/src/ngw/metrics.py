"""Evaluation functionals: empirical GW statistics, Bures-Wasserstein scores,
retrieval accuracy, and a two-sample energy-distance test.

Pair statistics run over all ordered pairs up to 4096 samples; above that
they switch to split-half cross pairs, which keeps the expectation identical
while bounding memory and runtime. Accumulation is blocked in a fixed order,
so results are reproducible.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegenerateMetric
from .linalg import psd_sqrt
from .validation import as_matrix, as_vector, check_count

FULL_PAIR_LIMIT = 4096
_BLOCK = 1024


def _apply_map(T, X: np.ndarray) -> np.ndarray:
    Z = T(X)
    return as_matrix(Z, name="T(X)")


def _cross_pair_mean(XA, XB, ZA, ZB) -> float:
    """Mean of (<x_j, x_l> - <z_j, z_l>)^2 over the cross pairs, blocked."""
    total = 0.0
    for start in range(0, XA.shape[0], _BLOCK):
        stop = start + _BLOCK
        G = XA[start:stop] @ XB.T
        if ZA is not None:
            G = G - ZA[start:stop] @ ZB.T
        total += float(np.sum(G * G))
    return total / (XA.shape[0] * XB.shape[0])


def _pair_mean(X: np.ndarray, Z: np.ndarray | None) -> float:
    """U-statistic (or split-half estimate) of (<x,x'> - <z,z'>)^2 over j != l."""
    K = X.shape[0]
    if K < 2:
        raise ContractViolation("pair statistics need at least 2 samples")
    if K <= FULL_PAIR_LIMIT:
        G = X @ X.T
        if Z is not None:
            G = G - Z @ Z.T
        D = G * G
        return float((D.sum() - np.trace(D)) / (K * (K - 1)))
    half = K // 2
    if Z is None:
        return _cross_pair_mean(X[:half], X[half:], None, None)
    return _cross_pair_mean(X[:half], X[half:], Z[:half], Z[half:])


def empirical_innergw(T, X) -> float:
    """Empirical inner-product GW objective of a map over a sample of its source.

    Mean over sample pairs of the squared mismatch between source inner
    products and mapped inner products. T is any callable mapping a sample
    array row-wise.
    """
    X = as_matrix(X, name="X")
    if X.shape[0] < 2:
        raise ContractViolation("empirical_innergw needs at least 2 samples")
    Z = _apply_map(T, X)
    if Z.shape[0] != X.shape[0]:
        raise ContractViolation("T must map rows to rows")
    return _pair_mean(X, Z)


def empirical_const(X, Y) -> float:
    """Map-independent part of the expanded objective.

    Sum of the two within-set pair means of squared inner products.
    """
    X = as_matrix(X, name="X")
    Y = as_matrix(Y, name="Y")
    return _pair_mean(X, None) + _pair_mean(Y, None)


def gaussian_fit(samples) -> tuple[np.ndarray, np.ndarray]:
    """Mean and (1/K-normalized) covariance of a sample array."""
    S = as_matrix(samples, name="samples")
    mean = S.mean(axis=0)
    centered = S - mean
    cov = centered.T @ centered / S.shape[0]
    return mean, 0.5 * (cov + cov.T)


def bw2(mean1, cov1, mean2, cov2) -> float:
    """Squared Bures-Wasserstein distance between two Gaussians (closed form)."""
    m1 = as_vector(mean1, name="mean1")
    m2 = as_vector(mean2, name="mean2")
    c1 = as_matrix(cov1, name="cov1")
    c2 = as_matrix(cov2, name="cov2")
    if m1.size != m2.size or c1.shape != c2.shape or c1.shape[0] != m1.size:
        raise ContractViolation("bw2 requires matching dimensions")
    root1 = psd_sqrt(c1)
    inner = root1 @ c2 @ root1
    cross = psd_sqrt(0.5 * (inner + inner.T))
    value = float(np.sum((m1 - m2) ** 2) + np.trace(c1) + np.trace(c2)
                  - 2.0 * np.trace(cross))
    return value


def bw_uvp(T, mu_samples, nu_samples) -> float:
    """Unexplained variance percentage of a map's pushforward against the target.

    100 * BW2^2 between the Gaussian fits of T(mu samples) and of the target
    samples, normalized by half the target's total variance.
    """
    X = as_matrix(mu_samples, name="mu_samples")
    Y = as_matrix(nu_samples, name="nu_samples")
    if X.shape[0] < 2 or Y.shape[0] < 2:
        raise ContractViolation("bw_uvp needs at least 2 samples on each side")
    Z = _apply_map(T, X)
    mz, cz = gaussian_fit(Z)
    my, cy = gaussian_fit(Y)
    var_nu = float(np.trace(cy))
    if var_nu <= 0.0:
        raise DegenerateMetric("target variance is zero")
    return 100.0 * bw2(mz, cz, my, cy) / (0.5 * var_nu)


def topk_accuracy(mapped, targets, lexicon, k: int) -> float:
    """Fraction of queries whose k nearest targets (cosine) hit a valid index.

    lexicon is an iterable of (query index, collection of valid target
    indices). Ties in similarity are broken toward the lower target index.
    """
    k = check_count(k, "k")
    Q = as_matrix(mapped, name="mapped")
    V = as_matrix(targets, name="targets")
    if Q.shape[1] != V.shape[1]:
        raise ContractViolation("mapped and targets must share a dimension")
    entries = [(int(q), sorted(int(t) for t in valid)) for q, valid in lexicon]
    if not entries:
        raise ContractViolation("lexicon is empty")
    for q, valid in entries:
        if not 0 <= q < Q.shape[0]:
            raise ContractViolation(f"query index {q} out of range")
        if any(not 0 <= t < V.shape[0] for t in valid):
            raise ContractViolation(f"target index out of range for query {q}")

    qn = Q / np.maximum(np.linalg.norm(Q, axis=1, keepdims=True), 1e-12)
    tn = V / np.maximum(np.linalg.norm(V, axis=1, keepdims=True), 1e-12)

    k_eff = min(k, V.shape[0])
    hits = 0
    queries = np.array([q for q, _ in entries])
    for start in range(0, queries.size, _BLOCK):
        block = queries[start:start + _BLOCK]
        scores = qn[block] @ tn.T
        # stable sort on negated scores: equal scores keep ascending index
        top = np.argsort(-scores, axis=1, kind="stable")[:, :k_eff]
        for row, (_, valid) in enumerate(entries[start:start + _BLOCK]):
            if not set(top[row]).isdisjoint(valid):
                hits += 1
    return hits / len(entries)


# ---- energy distance ------------------------------------------------------------


def _pairwise_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    sq = np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0)
    return np.sqrt(sq)


def energy_distance(X, Y) -> float:
    """Two-sample energy statistic: 2 E|x-y| - E|x-x'| - E|y-y'|."""
    X = as_matrix(X, name="X")
    Y = as_matrix(Y, name="Y")
    if X.shape[1] != Y.shape[1]:
        raise ContractViolation("X and Y must share a dimension")
    if X.shape[0] < 2 or Y.shape[0] < 2:
        raise ContractViolation("energy distance needs >= 2 points per side")
    dxy = float(np.mean(_pairwise_dists(X, Y)))
    dxx = float(np.mean(_pairwise_dists(X, X)))
    dyy = float(np.mean(_pairwise_dists(Y, Y)))
    return 2.0 * dxy - dxx - dyy


def energy_test_pvalue(X, Y, n_permutations: int = 200, seed: int = 0) -> float:
    """Permutation p-value for the null that X and Y share a distribution."""
    X = as_matrix(X, name="X")
    Y = as_matrix(Y, name="Y")
    observed = energy_distance(X, Y)
    pool = np.vstack([X, Y])
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    at_least = 1
    for _ in range(check_count(n_permutations, "n_permutations")):
        idx = rng.permutation(pool.shape[0])
        stat = energy_distance(pool[idx[:n]], pool[idx[n:]])
        if stat >= observed:
            at_least += 1
    return at_least / (n_permutations + 1)


# ---- reporting -------------------------------------------------------------------


@dataclass(frozen=True)
class MetricReport:
    name: str
    value: float
    sample_count: int
    seed: int

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ContractViolation(f"metric {self.name!r} is not finite")
        if self.sample_count < 1:
            raise ContractViolation("sample_count must be >= 1")


RESULTS_FIELDS = ("run_id", "metric", "value", "samples", "seed")


def append_report(path, run_id: str, report: MetricReport) -> None:
    """Append one row to a CSV results ledger, writing the header if new."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(RESULTS_FIELDS)
        writer.writerow([run_id, report.name, repr(report.value),
                         report.sample_count, report.seed])
