"""Covering radii of finite point clouds: a finite-scale stand-in for the
Hausdorff and Kuratowski measures of noncompactness.

r_p(S) is the smallest radius for which p closed balls centred at points of S
(or of a supplied candidate set) cover S. Only properties that hold exactly
for this discrete, fixed-cardinality quantity are checked here; the limit
statements about infinite sets are out of reach at this scale.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

EXACT_MAX_POINTS = 25
EXACT_MAX_SMALL_P = 3
_CHUNK = 20000
_SLACK = 1e-12


class TooLargeForExact(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("a point cloud needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def n_distinct(self) -> int:
        return np.unique(self.points, axis=0).shape[0]

    def scaled(self, c: float) -> "PointCloud":
        return PointCloud(c * self.points)

    def union(self, other: "PointCloud") -> "PointCloud":
        return PointCloud(np.vstack([self.points, other.points]))

    def minkowski_sum(self, other: "PointCloud") -> "PointCloud":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        s = self.points[:, None, :] + other.points[None, :, :]
        return PointCloud(s.reshape(-1, self.dim))

    def mapped(self, fn: Callable) -> "PointCloud":
        return PointCloud(np.array([np.atleast_1d(fn(x)) for x in self.points], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(self.dim)])
        for row in self.points:
            w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PointCloud":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows:
            try:
                [float(x) for x in rows[0]]
            except ValueError:
                rows = rows[1:]
        return cls(np.array([[float(x) for x in r] for r in rows]))


@dataclass
class CoverReport:
    p: int
    radius: float
    centers: list
    exact: bool

    def to_dict(self) -> dict:
        return {"p": self.p, "radius": self.radius,
                "centers": [list(map(float, c)) for c in self.centers], "exact": self.exact}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1))


def _check_p(p: int, size: int):
    if not 1 <= p <= size:
        raise ValueError(f"p must lie in [1, {size}], got {p}")


def covering_radius_exact(S: PointCloud, p: int, candidates: PointCloud | None = None) -> CoverReport:
    """Minimal common radius over all p-subsets of candidate centres.

    Centres come from S unless ``candidates`` is given. Exhaustive, so guarded
    to at most 25 candidates unless p <= 3. Among equal radii the
    lexicographically first subset wins.
    """
    cand = S if candidates is None else candidates
    if cand.dim != S.dim:
        raise ValueError("dimension mismatch between cloud and candidates")
    _check_p(p, len(cand))
    K = len(cand)
    if K > EXACT_MAX_POINTS and p > EXACT_MAX_SMALL_P:
        raise TooLargeForExact(
            f"exhaustive p-center search over {K} candidates with p={p} is too large; "
            "use covering_radius_greedy")
    D = _dist(cand.points, S.points)
    best, best_idx = math.inf, None
    combos = itertools.combinations(range(K), p)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp)
        rad = D[idx].min(axis=1).max(axis=1)
        j = int(np.argmin(rad))
        if rad[j] < best:
            best, best_idx = float(rad[j]), idx[j]
    centers = [cand.points[i].copy() for i in best_idx]
    return CoverReport(p=p, radius=best, centers=centers, exact=True)


def covering_radius_greedy(S: PointCloud, p: int) -> CoverReport:
    """Farthest-point-first centres, starting from point 0; ties go to the lowest index.

    The radius is at most twice the exact discrete value.
    """
    _check_p(p, len(S))
    pts = S.points
    chosen = [0]
    d = _dist(pts[:1], pts)[0]
    while len(chosen) < p and d.max() > 0.0:
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, _dist(pts[nxt:nxt + 1], pts)[0])
    return CoverReport(p=p, radius=float(d.max()), centers=[pts[i].copy() for i in chosen],
                       exact=False)


def _diameter(pts: np.ndarray) -> float:
    if pts.shape[0] < 2:
        return 0.0
    return float(_dist(pts, pts).max())


def kuratowski_partition_greedy(S: PointCloud, q: int) -> float:
    """Largest part diameter after assigning points to q farthest-first centres.

    An upper bound on the optimal q-part value (and within a factor 2 of it).
    """
    _check_p(q, len(S))
    pts = S.points
    cov = covering_radius_greedy(S, q)
    C = np.array(cov.centers)
    label = np.argmin(_dist(C, pts), axis=0)
    return max(_diameter(pts[label == j]) for j in range(C.shape[0]))


def _set_partitions(n: int, q: int):
    # restricted growth strings with at most q blocks
    a = [0] * n

    def rec(i, blocks):
        if i == n:
            yield list(a)
            return
        for b in range(min(blocks + 1, q)):
            a[i] = b
            yield from rec(i + 1, max(blocks, b + 1))

    yield from rec(0, 0)


def kuratowski_partition_exact(S: PointCloud, q: int, max_points: int = 10) -> float:
    """Optimal max part diameter over partitions into at most q parts (tiny clouds only)."""
    _check_p(q, len(S))
    if len(S) > max_points:
        raise TooLargeForExact(f"partition enumeration limited to {max_points} points")
    D = _dist(S.points, S.points)
    best = math.inf
    for labels in _set_partitions(len(S), q):
        lab = np.array(labels)
        worst = 0.0
        for b in range(lab.max() + 1):
            ix = np.flatnonzero(lab == b)
            if ix.size > 1:
                worst = max(worst, float(D[np.ix_(ix, ix)].max()))
                if worst >= best:
                    break
        best = min(best, worst)
    return best


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def _feasible(size: int, p: int) -> bool:
    return 1 <= p <= size and (size <= EXACT_MAX_POINTS or p <= EXACT_MAX_SMALL_P)


@dataclass
class PropertyReport:
    results: list = field(default_factory=list)

    def add(self, name: str, passed: bool | None, **values):
        self.results.append({"property": name, "passed": passed, **values})

    @property
    def all_passed(self) -> bool:
        return all(r["passed"] is not False for r in self.results)

    def __getitem__(self, name: str) -> dict:
        for r in self.results:
            if r["property"] == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"all_passed": self.all_passed, "results": self.results}


def check_scaling(S: PointCloud, c: float, p: int) -> tuple[bool, float, float]:
    lhs = covering_radius_exact(S.scaled(c), p).radius
    rhs = abs(c) * covering_radius_exact(S, p).radius
    return _close(lhs, rhs), lhs, rhs


def check_monotone(S1: PointCloud, S2: PointCloud, p: int) -> tuple[bool, float, float]:
    """S1 within U = S1 u S2, centres drawn from U for both radii."""
    U = S1.union(S2)
    small = covering_radius_exact(S1, p, candidates=U).radius
    big = covering_radius_exact(U, p).radius
    return small <= big + _SLACK, small, big


def check_union(S1: PointCloud, S2: PointCloud, p1: int, p2: int) -> tuple[bool, float, float]:
    U = S1.union(S2)
    lhs = covering_radius_exact(U, p1 + p2).radius
    rhs = max(covering_radius_exact(S1, p1).radius, covering_radius_exact(S2, p2).radius)
    return lhs <= rhs + _SLACK, lhs, rhs


def check_minkowski(S1: PointCloud, S2: PointCloud, p1: int, p2: int) -> tuple[bool, float, float]:
    M = S1.minkowski_sum(S2)
    lhs = covering_radius_exact(M, p1 * p2).radius
    rhs = covering_radius_exact(S1, p1).radius + covering_radius_exact(S2, p2).radius
    return lhs <= rhs + _SLACK, lhs, rhs


def radius_profile(S: PointCloud) -> list[float]:
    """r_p(S) for p = 1 .. number of distinct points."""
    return [covering_radius_exact(S, p).radius for p in range(1, S.n_distinct() + 1)]


def check_profile(S: PointCloud) -> tuple[bool, list[float]]:
    prof = radius_profile(S)
    mono = all(b <= a + _SLACK for a, b in zip(prof, prof[1:]))
    return mono and prof[-1] == 0.0, prof


def check_greedy(S: PointCloud, p: int) -> tuple[bool, float, float]:
    g = covering_radius_greedy(S, p).radius
    e = covering_radius_exact(S, p).radius
    return g <= 2.0 * e + _SLACK, g, e


def mnc_property_suite(S1: PointCloud, S2: PointCloud, c: float, p: int,
                       profile_max_points: int = 12) -> PropertyReport:
    """Evaluate the covering-radius analogues of the standard measure properties.

    Checks whose exhaustive search would exceed the size guard are recorded
    with ``passed=None`` instead of being run.
    """
    rep = PropertyReport()
    n1, n2 = len(S1), len(S2)
    nu = n1 + n2

    if _feasible(n1, p):
        ok, lhs, rhs = check_scaling(S1, c, p)
        rep.add("scaling", ok, lhs=lhs, rhs=rhs, c=c, p=p)
        ok, g, e = check_greedy(S1, p)
        rep.add("greedy_factor_two", ok, greedy=g, exact=e, p=p)
    else:
        rep.add("scaling", None, reason="size guard")
        rep.add("greedy_factor_two", None, reason="size guard")

    if _feasible(nu, p) and p <= n1:
        ok, small, big = check_monotone(S1, S2, p)
        rep.add("monotonicity", ok, subset=small, superset=big, p=p)
    else:
        rep.add("monotonicity", None, reason="size guard")

    if _feasible(nu, 2 * p) and _feasible(n1, p) and _feasible(n2, p):
        ok, lhs, rhs = check_union(S1, S2, p, p)
        rep.add("union", ok, lhs=lhs, rhs=rhs, p1=p, p2=p)
    else:
        rep.add("union", None, reason="size guard")

    if S1.dim == S2.dim and _feasible(n1 * n2, p) and _feasible(n1, p):
        ok, lhs, rhs = check_minkowski(S1, S2, p, 1)
        rep.add("minkowski", ok, lhs=lhs, rhs=rhs, p1=p, p2=1)
    else:
        rep.add("minkowski", None, reason="size guard")

    if n1 <= profile_max_points:
        ok, prof = check_profile(S1)
        rep.add("profile_to_zero", ok, radii=prof)
    else:
        rep.add("profile_to_zero", None, reason="size guard")
    return rep


def sadovskii_gap(eta: Callable, S: PointCloud, p: int) -> tuple[float, float, bool]:
    """(r_p(S), r_p(eta(S)), strict decrease) for a map applied point by point."""
    image = S.mapped(eta)
    r_s = covering_radius_exact(S, p).radius
    r_i = covering_radius_exact(image, p).radius
    return r_s, r_i, r_i < r_s
