"""Held-out k-NN error rates on full training data and on subsamples.

All neighbor searches are exact under the Euclidean metric. Distance ties are
broken by the lowest original row index, which makes every result reproducible
and permutation effects testable. Search is brute force with vectorized
distance accumulation; at the sample sizes this package targets that is both
fast enough and trivially correct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LabeledDataset

__all__ = [
    "SplitDataset",
    "ErrorRateTable",
    "NeighborIndex",
    "build_index",
    "knn_predict",
    "holdout_error_rate",
    "subsampled_error_rate",
    "error_table",
]


@dataclass(frozen=True)
class SplitDataset:
    """Equal-size disjoint train/test halves of a single draw.

    Build one 2N sample per trial and cut it in half: every subsample
    estimator is then evaluated on the same N held-out points.
    """

    train: LabeledDataset
    test: LabeledDataset

    def __post_init__(self) -> None:
        if self.train.n != self.test.n:
            raise ValueError(
                f"train and test halves must be the same size: "
                f"{self.train.n} != {self.test.n}"
            )
        if self.train.d != self.test.d:
            raise ValueError("train and test dimensions differ")

    @classmethod
    def from_dataset(cls, data: LabeledDataset) -> "SplitDataset":
        """Split one dataset into halves by row order (first half trains)."""
        if data.n % 2 != 0:
            raise ValueError(f"need an even number of rows to split, got {data.n}")
        half = data.n // 2
        return cls(
            train=LabeledDataset(points=data.points[:half], labels=data.labels[:half]),
            test=LabeledDataset(points=data.points[half:], labels=data.labels[half:]),
        )


@dataclass(frozen=True)
class ErrorRateTable:
    """Held-out error rates on the (k, subsample fraction) grid."""

    ks: tuple[int, ...]
    ls: tuple[float, ...]
    rates: np.ndarray
    n_train: int
    repeats: int

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        if rates.shape != (len(self.ks), len(self.ls)):
            raise ValueError(
                f"rates must be |ks| x |ls| = {(len(self.ks), len(self.ls))}, "
                f"got {rates.shape}"
            )
        if np.any(rates < 0.0) or np.any(rates > 1.0):
            raise ValueError("error rates must lie in [0, 1]")
        ls = tuple(float(l) for l in self.ls)
        if any(not (0.0 < l <= 1.0) for l in ls):
            raise ValueError("subsample fractions must lie in (0, 1]")
        if any(b <= a for a, b in zip(ls, ls[1:])):
            raise ValueError("subsample fractions must be strictly increasing")
        object.__setattr__(self, "ks", tuple(int(k) for k in self.ks))
        object.__setattr__(self, "ls", ls)
        object.__setattr__(self, "rates", rates)

    def rate(self, k: int, l: float) -> float:
        return float(self.rates[self.ks.index(k), self.ls.index(float(l))])


class NeighborIndex:
    """Exact Euclidean k-nearest-neighbor queries over a fixed point set.

    Results are identical to a brute-force scan; ties in distance resolve to
    the lowest original row index. Read-only after construction.
    """

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("need a nonempty 2-d point set")
        self._points = points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def d(self) -> int:
        return self._points.shape[1]

    def _sq_distances(self, queries: np.ndarray) -> np.ndarray:
        # Accumulating per coordinate keeps the arithmetic identical for
        # bitwise-equal points, which is what makes the tie-break exact.
        out = np.zeros((queries.shape[0], self.n))
        for j in range(self.d):
            diff = queries[:, j][:, None] - self._points[None, :, j]
            out += diff * diff
        return out

    def query(self, queries: np.ndarray, k: int) -> np.ndarray:
        """Indices of the ``k`` nearest points per query row, nearest first.

        Ties are ordered by ascending row index. Accepts an (m, d) batch or a
        single d-vector; returns (m, k) or (k,) respectively.
        """
        queries = np.asarray(queries, dtype=float)
        single = queries.ndim == 1
        queries = np.atleast_2d(queries)
        if queries.shape[1] != self.d:
            raise ValueError(
                f"query dimension {queries.shape[1]} != index dimension {self.d}"
            )
        if not 1 <= k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= {self.n}, got {k}")

        out = np.empty((queries.shape[0], k), dtype=np.intp)
        chunk = max(1, (1 << 23) // max(1, self.n))
        for start in range(0, queries.shape[0], chunk):
            d2 = self._sq_distances(queries[start : start + chunk])
            out[start : start + chunk] = self._select(d2, k)
        return out[0] if single else out

    def _select(self, d2: np.ndarray, k: int) -> np.ndarray:
        n = self.n
        if k == n:
            cand = np.broadcast_to(np.arange(n), d2.shape).copy()
            candv = d2
        else:
            cand = np.argpartition(d2, k - 1, axis=1)[:, :k]
            candv = np.take_along_axis(d2, cand, axis=1)
            # Rows where values tied with the k-th smallest straddle the
            # partition boundary need the full ordering to break ties by index.
            kth = candv.max(axis=1)
            straddled = np.flatnonzero((d2 <= kth[:, None]).sum(axis=1) > k)
            for row in straddled:
                order = np.lexsort((np.arange(n), d2[row]))[:k]
                cand[row] = order
                candv[row] = d2[row, order]
        order = np.lexsort((cand, candv), axis=-1)[:, :k]
        return np.take_along_axis(cand, order, axis=-1)


def build_index(points: np.ndarray) -> NeighborIndex:
    """Build an exact nearest-neighbor index over ``points``."""
    return NeighborIndex(points)


def _validate_k_for_training(k: int, n_train: int) -> int:
    k = int(k)
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be an odd positive integer, got {k}")
    if k > n_train:
        raise ValueError(f"k = {k} exceeds the training size {n_train}")
    return k


def _vote(neighbor_labels: np.ndarray, k: int) -> np.ndarray:
    # odd k: strictly more than k/2 ones means majority 1, no tie possible
    return (neighbor_labels[:, :k].sum(axis=1) * 2 > k).astype(np.int8)


def knn_predict(index: NeighborIndex, labels: np.ndarray, query: np.ndarray, k: int):
    """Majority-vote label among the ``k`` nearest indexed points.

    ``k`` must be odd (no vote ties) and no larger than the indexed set.
    Accepts a single query vector or an (m, d) batch.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != index.n:
        raise ValueError(f"need one label per indexed point, got {labels.shape[0]}")
    k = _validate_k_for_training(k, index.n)
    query = np.asarray(query, dtype=float)
    single = query.ndim == 1
    neighbors = index.query(np.atleast_2d(query), k)
    votes = _vote(labels[neighbors], k)
    return int(votes[0]) if single else votes


def _holdout_rates(split: SplitDataset, ks: tuple[int, ...]) -> np.ndarray:
    """Held-out error rate per k, sharing one neighbor query across all k."""
    index = NeighborIndex(split.train.points)
    neighbors = index.query(split.test.points, max(ks))
    neighbor_labels = split.train.labels[neighbors]
    return np.array(
        [
            float(np.mean(_vote(neighbor_labels, k) != split.test.labels))
            for k in ks
        ]
    )


def holdout_error_rate(split: SplitDataset, k: int) -> float:
    """Fraction of test points misclassified by k-NN on the full training half."""
    k = _validate_k_for_training(k, split.train.n)
    return float(_holdout_rates(split, (k,))[0])


def _subsample_size(l: float, n_train: int) -> int:
    return int(round(l * n_train))


def _validate_subsample(k: int, l: float, n_train: int) -> None:
    _validate_k_for_training(k, n_train)
    if not 0.0 < l <= 1.0:
        raise ValueError(f"subsample fraction must lie in (0, 1], got {l}")
    if int(np.floor(l * n_train)) < k:
        raise ValueError(
            f"subsample of fraction {l} of {n_train} training points is "
            f"smaller than k = {k}"
        )


def _rates_for_draws(
    split: SplitDataset, ks: tuple[int, ...], draws: list[np.ndarray]
) -> np.ndarray:
    """Mean error rate per k over the given subsample index draws."""
    acc = np.zeros(len(ks))
    for rows in draws:
        sub_index = NeighborIndex(split.train.points[rows])
        neighbors = sub_index.query(split.test.points, max(ks))
        neighbor_labels = split.train.labels[rows][neighbors]
        for ki, k in enumerate(ks):
            acc[ki] += float(np.mean(_vote(neighbor_labels, k) != split.test.labels))
    return acc / len(draws)


def _draw_streams(seed, n_streams: int) -> list[np.random.Generator]:
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in base.spawn(n_streams)]


def subsampled_error_rate(
    split: SplitDataset, k: int, l: float, repeats: int = 1, seed=0
) -> float:
    """Mean held-out error over ``repeats`` subsample draws of fraction ``l``.

    Each repeat draws ``round(l * N)`` training rows uniformly without
    replacement, trains k-NN on them, and evaluates on the full test half.
    With ``l = 1`` the single draw is the whole training set, so the result
    equals :func:`holdout_error_rate` bit-exactly.
    """
    _validate_subsample(k, l, split.train.n)
    if repeats < 1:
        raise ValueError(f"repeats must be positive, got {repeats}")
    size = _subsample_size(l, split.train.n)
    draws = [
        rng.choice(split.train.n, size=size, replace=False)
        for rng in _draw_streams(seed, repeats)
    ]
    return float(_rates_for_draws(split, (k,), draws)[0])


def error_table(
    split: SplitDataset, ks, ls, repeats: int = 1, seed=0
) -> ErrorRateTable:
    """Fill the full (k, l) grid of mean subsampled error rates.

    For a given fraction ``l`` the same subsample draws are reused across
    every ``k`` (one neighbor query at max(k) serves them all), which couples
    the per-k estimates and lowers the variance of any linear combination.
    Draw streams derive deterministically from ``(seed, l-index,
    repeat-index)``, so the table is reproducible cell by cell.

    All (k, l) preconditions are checked up front; violations are aggregated
    into a single error before any computation starts.
    """
    ks = tuple(int(k) for k in ks)
    ls = tuple(float(l) for l in ls)
    if not ks or not ls:
        raise ValueError("need at least one k and one subsample fraction")
    if repeats < 1:
        raise ValueError(f"repeats must be positive, got {repeats}")
    problems = []
    for k in ks:
        for l in ls:
            try:
                _validate_subsample(k, l, split.train.n)
            except ValueError as exc:
                problems.append(f"(k={k}, l={l}): {exc}")
    if problems:
        raise ValueError(
            "invalid error-table configuration:\n  " + "\n  ".join(problems)
        )

    streams = _draw_streams(seed, len(ls) * repeats)
    rates = np.empty((len(ks), len(ls)))
    for li, l in enumerate(ls):
        size = _subsample_size(l, split.train.n)
        draws = [
            streams[li * repeats + rep].choice(split.train.n, size=size, replace=False)
            for rep in range(repeats)
        ]
        rates[:, li] = _rates_for_draws(split, ks, draws)
    return ErrorRateTable(
        ks=ks, ls=ls, rates=rates, n_train=split.train.n, repeats=repeats
    )
