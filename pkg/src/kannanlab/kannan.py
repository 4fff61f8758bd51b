"""Empirical Kannan-type equicontraction checks for two-argument maps T(u, v).

T satisfies the condition with constant k when, for every parameter v and
every pair u1, u2,

    ||T(u1, v) - T(u2, v)|| <= k (||T(u1, v) - u1|| + ||T(u2, v) - u2||),

with one k in [0, 1/2) shared by all v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.stats import qmc

from .funcspace import GridFunction, grid, norm, sup_norm

KANNAN_LIMIT = 0.5
_SLACK = 1e-12


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; ``special`` points are always sampled."""

    lo: float
    hi: float
    special: tuple = ()

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lo - _SLACK) & (x <= self.hi + _SLACK)))

    def nodes(self, density: int) -> np.ndarray:
        pts = np.linspace(self.lo, self.hi, density)
        if self.special:
            pts = np.union1d(pts, np.asarray(self.special, dtype=float))
        return pts


@dataclass(frozen=True)
class FunctionBall:
    """Closed sup-norm ball of given radius centred at 0 in the n-node grid space."""

    radius: float
    n: int
    degree: int = 5

    def contains(self, u) -> bool:
        return (isinstance(u, GridFunction) and u.n == self.n
                and sup_norm(u) <= self.radius * (1 + 1e-9) + _SLACK)

    def sample(self, rng: np.random.Generator, count: int) -> list[GridFunction]:
        """Random trigonometric polynomials rescaled into the ball.

        The first half of the coefficient vectors come from a scrambled Sobol
        sequence, the rest are Gaussian. The zero function is always included.
        """
        if count < 1:
            return []
        t = grid(self.n)
        k = np.arange(self.degree + 1)
        basis = np.vstack([np.cos(np.pi * np.outer(k, t)),
                           np.sin(np.pi * np.outer(k[1:], t))])
        dim = basis.shape[0]
        n_qmc = count // 2
        coeffs, scales = [], []
        if n_qmc:
            sob = qmc.Sobol(d=dim + 1, scramble=True, seed=rng)
            pts = sob.random_base2(int(math.ceil(math.log2(n_qmc))))[:n_qmc]
            coeffs.append(2.0 * pts[:, 1:] - 1.0)
            scales.append(pts[:, 0])
        n_mc = count - 1 - n_qmc
        if n_mc > 0:
            coeffs.append(rng.standard_normal((n_mc, dim)))
            scales.append(rng.uniform(0.0, 1.0, n_mc))
        out = [GridFunction(np.zeros(self.n))]
        if coeffs:
            C = np.vstack(coeffs)
            S = np.concatenate(scales)
            for c, s in zip(C, S):
                vals = c @ basis
                peak = np.max(np.abs(vals))
                if peak == 0.0:
                    vals = np.zeros(self.n)
                else:
                    vals = vals * (self.radius * s / peak)
                out.append(GridFunction(vals))
        return out[:count]


@dataclass
class ParametrizedMap:
    """A map T(u, v) together with the domains it is declared on.

    ``evaluate`` on scalar domains should accept numpy arrays for u
    (broadcasting against a scalar v); the scalar scan relies on this and
    falls back to elementwise calls otherwise. ``gamma`` is the norm weight
    used when elements are grid functions.
    """

    evaluate: Callable[[Any, Any], Any]
    u_domain: Any
    v_domain: Any
    gamma: float = 0.0
    name: str = ""

    def __call__(self, u, v):
        return self.evaluate(u, v)

    def dist(self, a, b) -> float:
        return norm(a - b, self.gamma)

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.u_domain, Interval) and isinstance(self.v_domain, Interval)


@dataclass
class KannanReport:
    k_min: float
    worst_pair: tuple | None
    samples: int
    degenerate_pairs: int
    violations: int = 0
    per_v_max: list = field(default_factory=list, repr=False)

    @property
    def satisfied(self) -> bool:
        return self.k_min < KANNAN_LIMIT

    def to_dict(self) -> dict:
        wp = None
        if self.worst_pair is not None:
            wp = [_jsonable(x) for x in self.worst_pair]
        return {
            "k_min": _jsonable(self.k_min),
            "satisfied": self.satisfied,
            "samples": self.samples,
            "worst_pair": wp,
            "degenerate_pairs": self.degenerate_pairs,
        }


def _jsonable(x):
    if isinstance(x, GridFunction):
        return x.values.tolist()
    x = float(x)
    if math.isinf(x):
        return "inf"
    if math.isnan(x):
        return "nan"
    return x


def kannan_ratio(T: ParametrizedMap, u1, u2, v) -> float:
    """N/D for one triple.

    Returns 0.0 when N = 0 and D > 0, ``nan`` when N = D = 0 (the inequality
    is vacuous) and ``inf`` when D = 0 < N (no finite k works).
    """
    for name, x, dom in (("u1", u1, T.u_domain), ("u2", u2, T.u_domain), ("v", v, T.v_domain)):
        if not dom.contains(x):
            raise ValueError(f"{name} outside the declared domain of {T.name or 'T'}")
    t1, t2 = T(u1, v), T(u2, v)
    num = T.dist(t1, t2)
    den = T.dist(t1, u1) + T.dist(t2, u2)
    if den == 0.0:
        return math.nan if num == 0.0 else math.inf
    return num / den


def _eval_many(T: ParametrizedMap, U: np.ndarray, v: float) -> np.ndarray:
    try:
        out = np.asarray(T(U, v), dtype=float)
    except (TypeError, ValueError):
        out = None
    if out is None or out.shape != U.shape:
        out = np.array([float(T(float(u), v)) for u in U])
    return out


def _max_ratio_scalar(Tu: np.ndarray, r: np.ndarray) -> tuple[float, int, int]:
    """max over ordered pairs of |Tu_i - Tu_j| / (r_i + r_j), r_i + r_j > 0.

    Dinkelbach iteration: for fixed k the linearised objective
    |Tu_i - Tu_j| - k (r_i + r_j) separates into max_i (Tu_i - k r_i) minus
    min_j (Tu_j + k r_j), so each step is O(m) and k increases strictly
    until it equals the maximum over the finite set.
    """
    k, bi, bj = 0.0, 0, 0
    for _ in range(200):
        i = int(np.argmax(Tu - k * r))
        j = int(np.argmin(Tu + k * r))
        if (Tu[i] - k * r[i]) - (Tu[j] + k * r[j]) <= 0.0:
            break
        den = r[i] + r[j]
        if den == 0.0:
            break
        k_new = abs(Tu[i] - Tu[j]) / den
        if k_new <= k:
            break
        k, bi, bj = k_new, i, j
    return k, bi, bj


def _scan_scalar(T: ParametrizedMap, density: int) -> KannanReport:
    U = T.u_domain.nodes(density)
    V = T.v_domain.nodes(density)
    m = U.size
    pairs_per_v = m * (m + 1) // 2
    best, worst = -1.0, None
    degenerate = violations = 0
    per_v = []
    for v in V:
        Tu = _eval_many(T, U, float(v))
        r = np.abs(Tu - U)
        fixed = np.flatnonzero(r == 0.0)
        if fixed.size:
            _, counts = np.unique(Tu[fixed], return_counts=True)
            degenerate += int(np.sum(counts * (counts + 1) // 2))
            if counts.size > 1:
                nf = fixed.size
                violations += nf * (nf - 1) // 2 - int(np.sum(counts * (counts - 1) // 2))
                per_v.append((math.inf, float(U[fixed[0]]), float(U[fixed[-1]]), float(v)))
                if best < math.inf:
                    best, worst = math.inf, (float(U[fixed[0]]), float(U[fixed[-1]]), float(v))
                continue
        k, i, j = _max_ratio_scalar(Tu, r)
        per_v.append((float(k), float(U[i]), float(U[j]), float(v)))
        if k > best:
            best, worst = k, (float(U[i]), float(U[j]), float(v))
    samples = pairs_per_v * V.size
    if degenerate == samples:
        raise ValueError("map is constant-fixed everywhere")
    return KannanReport(k_min=max(best, 0.0), worst_pair=worst, samples=samples,
                        degenerate_pairs=degenerate, violations=violations, per_v_max=per_v)


def brute_force_ratios(T: ParametrizedMap, density: int) -> np.ndarray:
    """Every unordered-pair ratio on the tensor grid, computed directly.

    Slow reference path, shape (len(V), m, m); meant for small densities.
    """
    U = T.u_domain.nodes(density)
    V = T.v_domain.nodes(density)
    out = np.empty((V.size, U.size, U.size))
    for a, v in enumerate(V):
        Tu = np.array([float(T(float(u), float(v))) for u in U])
        r = np.abs(Tu - U)
        num = np.abs(Tu[:, None] - Tu[None, :])
        den = r[:, None] + r[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[a] = num / den
    return out


def _scan_functions(T: ParametrizedMap, density: int, seed: int) -> KannanReport:
    rng = np.random.default_rng(seed)
    Us = T.u_domain.sample(rng, density)
    Vs = T.v_domain.sample(rng, density)
    m = len(Us)
    weight = np.exp(-T.gamma * grid(Us[0].n))
    Uarr = np.stack([u.values for u in Us])
    best, worst = -1.0, None
    degenerate = violations = 0
    per_v = []
    iu, ju = np.triu_indices(m)
    for b, v in enumerate(Vs):
        Tarr = np.stack([T(u, v).values for u in Us])
        r = np.max(np.abs(Tarr - Uarr) * weight, axis=1)
        num = np.max(np.abs(Tarr[iu] - Tarr[ju]) * weight, axis=1)
        den = r[iu] + r[ju]
        degen = (den == 0.0) & (num == 0.0)
        viol = (den == 0.0) & (num > 0.0)
        degenerate += int(degen.sum())
        violations += int(viol.sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.inf)
        ratio[degen] = -1.0
        p = int(np.argmax(ratio))
        per_v.append((float(ratio[p]), int(iu[p]), int(ju[p]), b))
        if ratio[p] > best:
            best, worst = float(ratio[p]), (Us[iu[p]], Us[ju[p]], v)
    samples = len(Vs) * iu.size
    if degenerate == samples:
        raise ValueError("map is constant-fixed everywhere")
    return KannanReport(k_min=max(best, 0.0), worst_pair=worst, samples=samples,
                        degenerate_pairs=degenerate, violations=violations, per_v_max=per_v)


def estimate_kannan_constant(T: ParametrizedMap, grid_density: int, seed: int = 0) -> KannanReport:
    """Largest Kannan ratio over a finite sample of triples (u1, u2, v).

    Scalar domains: every unordered pair of the ``grid_density``-point grid
    (plus the domain's special points) for every v on the same grid.
    Grid-function domains: ``grid_density`` sampled u's and v's, all pairs.
    Degenerate pairs (both sides zero) are excluded from the maximum.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be at least 2")
    if T.is_scalar:
        return _scan_scalar(T, grid_density)
    return _scan_functions(T, grid_density, seed)


def verify_kannan(T: ParametrizedMap, k: float, grid_density: int, seed: int = 0):
    """Check the condition at constant ``k`` on the sample.

    Returns ``(ok, witnesses)``; ``witnesses`` holds up to ten
    ``(ratio, u1, u2, v)`` tuples exceeding k, worst first.
    """
    if not 0.0 <= k < KANNAN_LIMIT:
        raise ValueError("k must lie in [0, 1/2)")
    rep = estimate_kannan_constant(T, grid_density, seed=seed)
    if rep.k_min <= k + _SLACK:
        return True, []
    if T.is_scalar:
        bad = [w for w in rep.per_v_max if w[0] > k + _SLACK]
        bad.sort(key=lambda w: -w[0])
        return False, bad[:10]
    return False, [(rep.k_min, *rep.worst_pair)]


def _piecewise(base_scale: float, exceptional: float, name: str) -> ParametrizedMap:
    def evaluate(u, v):
        u_arr = np.asarray(u, dtype=float)
        v_arr = np.asarray(v, dtype=float)
        out = np.where((u_arr == 1.0) & (v_arr == 1.0), exceptional, (u_arr + v_arr) * base_scale)
        return float(out) if out.ndim == 0 else out

    dom = Interval(0.0, 1.0, special=(1.0,))
    return ParametrizedMap(evaluate, dom, dom, name=name)


def build_example_2_3() -> ParametrizedMap:
    """T(u, v) = (u + v)/4 on [0, 1]^2, except T(1, 1) = 1/5."""
    return _piecewise(0.25, 0.2, "example-2.3")


def build_example_lp() -> ParametrizedMap:
    """The span{e1} example in its scalar coordinate: (t_u + t_y)/16, T(1, 1) = 1/18.

    ||t e1||_p = |t| for every p, so the coordinate model is isometric.
    """
    return _piecewise(1.0 / 16.0, 1.0 / 18.0, "example-lp")
