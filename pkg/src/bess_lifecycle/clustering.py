"""K-means over daily price profiles with a dynamic-time-warping metric."""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
from typing import Sequence

import numba
import numpy as np

from .errors import EmptyInput, KTooLarge
from .market_data import MarketDay

MAX_ITER = 50
DBA_ITER = 10
METRICS = ("dtw", "euclidean")


@numba.njit(cache=True)
def _dtw_table(a, b):
    n, m = a.shape[0], b.shape[0]
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = (a[i - 1] - b[j - 1]) ** 2
            best = D[i - 1, j - 1]
            if D[i - 1, j] < best:
                best = D[i - 1, j]
            if D[i, j - 1] < best:
                best = D[i, j - 1]
            D[i, j] = cost + best
    return D


@numba.njit(cache=True)
def _dtw_sq(a, b):
    return _dtw_table(a, b)[a.shape[0], b.shape[0]]


@numba.njit(cache=True)
def _dtw_path(a, b):
    """Optimal warping path as (i, j) index pairs, from the end backwards."""
    D = _dtw_table(a, b)
    i, j = a.shape[0], b.shape[0]
    path = np.empty((i + j, 2), dtype=np.int64)
    k = 0
    while True:
        path[k, 0] = i - 1
        path[k, 1] = j - 1
        k += 1
        if i == 1 and j == 1:
            break
        diag = D[i - 1, j - 1]
        up = D[i - 1, j]
        left = D[i, j - 1]
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return path[:k]


@numba.njit(cache=True)
def _dtw_sq_matrix(X, C):
    out = np.empty((X.shape[0], C.shape[0]))
    for i in range(X.shape[0]):
        for j in range(C.shape[0]):
            out[i, j] = _dtw_sq(X[i], C[j])
    return out


@numba.njit(cache=True)
def _dba_update(center, members):
    sums = np.zeros(center.shape[0])
    counts = np.zeros(center.shape[0])
    for r in range(members.shape[0]):
        path = _dtw_path(center, members[r])
        for k in range(path.shape[0]):
            sums[path[k, 0]] += members[r, path[k, 1]]
            counts[path[k, 0]] += 1.0
    return sums / counts


def dtw_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """DTW distance with squared pointwise cost: sqrt of the cheapest warping."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("DTW needs non-empty sequences")
    return float(np.sqrt(_dtw_sq(a, b)))


def dba(center: np.ndarray, members: np.ndarray, n_iter: int = DBA_ITER) -> np.ndarray:
    """DTW barycenter averaging refined from ``center``."""
    center = np.ascontiguousarray(center, dtype=float)
    members = np.ascontiguousarray(members, dtype=float)
    for _ in range(n_iter):
        center = _dba_update(center, members)
    return center


def squared_distances(X: np.ndarray, C: np.ndarray, metric: str) -> np.ndarray:
    """Pairwise squared distances, shape ``(len(X), len(C))``."""
    X = np.ascontiguousarray(X, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    if metric == "dtw":
        return _dtw_sq_matrix(X, C)
    if metric == "euclidean":
        return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def _znorm(v: np.ndarray) -> np.ndarray:
    sd = v.std()
    if sd == 0:
        return np.zeros_like(v)
    return (v - v.mean()) / sd


def featurize(days: Sequence[MarketDay]) -> np.ndarray:
    """72-value rows: z-normalized energy, regulation (cap + perf), reserve."""
    return np.array(
        [
            np.concatenate(
                [
                    _znorm(d.price_energy),
                    _znorm(d.price_reg_cap + d.price_reg_perf),
                    _znorm(d.price_res),
                ]
            )
            for d in days
        ]
    )


def _kmeans_pp(X: np.ndarray, k: int, metric: str, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = squared_distances(X, X[chosen], metric)[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = next(i for i in range(n) if i not in chosen)
        chosen.append(idx)
        d2 = np.minimum(d2, squared_distances(X, X[[idx]], metric)[:, 0])
    return X[chosen].copy()


def kmeans(X: np.ndarray, k: int, metric: str = "dtw", seed: int = 0):
    """Lloyd iterations; returns ``(centroids, labels, inertia)``.

    Stops after ``MAX_ITER`` rounds or when labels stop changing. The labels
    returned are always nearest-centroid labels for the returned centroids.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    X = np.ascontiguousarray(X, dtype=float)
    n = X.shape[0]
    if n == 0:
        raise EmptyInput("no days to cluster")
    if k < 1:
        raise ValueError("k must be at least 1")
    distinct = np.unique(X, axis=0).shape[0]
    if k > distinct:
        raise KTooLarge(f"k={k} exceeds the {distinct} distinct days")
    rng = np.random.default_rng(seed)
    C = _kmeans_pp(X, k, metric, rng)
    labels = None
    for _ in range(MAX_ITER):
        d2 = squared_distances(X, C, metric)
        new = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = X[labels == j]
            if members.shape[0] == 0:
                # re-seed an empty cluster at the worst-served point
                worst = int(np.argmax(d2[np.arange(n), labels]))
                C[j] = X[worst]
                continue
            C[j] = dba(C[j], members) if metric == "dtw" else members.mean(axis=0)
    d2 = squared_distances(X, C, metric)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return C, labels, inertia


@dataclasses.dataclass
class ClusterModel:
    k: int
    metric: str
    seed: int
    centroids: np.ndarray  # (k, 72) in feature space
    profiles: list[MarketDay]  # mean raw prices of each cluster's members
    assignments: dict[dt.date, int]
    day_counts: list[int]
    inertia: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "metric": self.metric,
            "seed": self.seed,
            "inertia": self.inertia,
            "day_counts": list(self.day_counts),
            "assignments": {d.isoformat(): int(i) for d, i in sorted(self.assignments.items())},
            "centroids": [list(map(float, c)) for c in self.centroids],
            "profiles": [
                {
                    "date": p.date.isoformat(),
                    "price_energy": p.price_energy.tolist(),
                    "price_reg_cap": p.price_reg_cap.tolist(),
                    "price_reg_perf": p.price_reg_perf.tolist(),
                    "price_res": p.price_res.tolist(),
                }
                for p in self.profiles
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ClusterModel":
        profiles = [
            MarketDay(
                dt.date.fromisoformat(p["date"]),
                p["price_energy"],
                p["price_reg_cap"],
                p["price_reg_perf"],
                p["price_res"],
            )
            for p in data["profiles"]
        ]
        return cls(
            k=int(data["k"]),
            metric=data["metric"],
            seed=int(data["seed"]),
            centroids=np.array(data["centroids"], dtype=float),
            profiles=profiles,
            assignments={dt.date.fromisoformat(d): int(i) for d, i in data["assignments"].items()},
            day_counts=[int(c) for c in data["day_counts"]],
            inertia=float(data["inertia"]),
        )


def cluster_days(days: Sequence[MarketDay], k: int, metric: str = "dtw", seed: int = 0) -> ClusterModel:
    """Group days by price shape and summarize each group."""
    days = list(days)
    if not days:
        raise EmptyInput("no days to cluster")
    X = featurize(days)
    C, labels, inertia = kmeans(X, k, metric, seed)
    profiles = []
    d2 = squared_distances(X, C, metric)
    for j in range(k):
        idx = np.flatnonzero(labels == j)
        medoid = days[int(idx[np.argmin(d2[idx, j])])]
        profiles.append(
            MarketDay(
                medoid.date,
                np.mean([days[i].price_energy for i in idx], axis=0),
                np.mean([days[i].price_reg_cap for i in idx], axis=0),
                np.mean([days[i].price_reg_perf for i in idx], axis=0),
                np.mean([days[i].price_res for i in idx], axis=0),
            )
        )
    return ClusterModel(
        k=k,
        metric=metric,
        seed=seed,
        centroids=C,
        profiles=profiles,
        assignments={d.date: int(l) for d, l in zip(days, labels)},
        day_counts=[int(np.sum(labels == j)) for j in range(k)],
        inertia=inertia,
    )


def best_of_seeds(days: Sequence[MarketDay], k: int, metric: str = "dtw", seeds=range(5)) -> ClusterModel:
    """Lowest-inertia model over several seeds (first seed wins ties)."""
    best = None
    for seed in seeds:
        model = cluster_days(days, k, metric, seed)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def inertia_curve(days: Sequence[MarketDay], ks: Sequence[int], metric: str = "dtw", seeds=range(5)) -> dict[int, float]:
    """Best inertia per cluster count, the input of an elbow plot."""
    return {k: best_of_seeds(days, k, metric, seeds).inertia for k in ks}
