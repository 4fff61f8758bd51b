"""Grid functions on I = [0, 1], the weighted sup norm and finite differences."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from numbers import Real

import numpy as np

DEFAULT_NODES = 1001


@dataclass(frozen=True)
class NormParams:
    gamma: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gamma):
            raise ValueError("gamma must be finite")


class GridFunction:
    """Real function sampled at the nodes t_i = i/(n-1) of a uniform grid on [0, 1].

    Instances are immutable; arithmetic with another grid function requires
    the same node count (no interpolation).
    """

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.array(values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if arr.size < 3:
            raise ValueError(f"insufficient nodes: need at least 3, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function values must be finite")
        arr.flags.writeable = False
        self._values = arr

    @classmethod
    def from_callable(cls, fn, n: int = DEFAULT_NODES) -> "GridFunction":
        t = grid(n)
        return cls(np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape))

    @classmethod
    def constant(cls, c: float, n: int = DEFAULT_NODES) -> "GridFunction":
        return cls(np.full(n, float(c)))

    @classmethod
    def zeros(cls, n: int = DEFAULT_NODES) -> "GridFunction":
        return cls(np.zeros(n))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.size

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def t(self) -> np.ndarray:
        return grid(self.n)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.n != self.n:
                raise ValueError(
                    f"grid mismatch: {self.n} nodes vs {other.n} nodes")
            return other._values
        if isinstance(other, Real):
            return float(other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self._values + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self._values - o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(o - self._values)

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GridFunction(self._values * o)

    __rmul__ = __mul__

    def __truediv__(self, c):
        if not isinstance(c, Real):
            return NotImplemented
        return GridFunction(self._values / float(c))

    def __neg__(self):
        return GridFunction(-self._values)

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._values, other._values))

    def __hash__(self):
        return hash(self._values.tobytes())

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"GridFunction(n={self.n}, max|u|={np.max(np.abs(self._values)):.6g})"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "value"])
        for ti, ui in zip(self.t, self._values):
            writer.writerow([f"{ti:.17g}", f"{ui:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
            raise ValueError("expected header 't,value'")
        body = [r for r in rows[1:] if r]
        t = np.array([float(r[0]) for r in body])
        u = cls([float(r[1]) for r in body])
        if not np.allclose(t, u.t, rtol=0.0, atol=1e-12):
            raise ValueError("t column is not the uniform grid on [0, 1]")
        return u


def grid(n: int) -> np.ndarray:
    if n < 3:
        raise ValueError(f"insufficient nodes: need at least 3, got {n}")
    return np.linspace(0.0, 1.0, n)


def weighted_sup_norm(u: GridFunction, p: NormParams | float = 0.0) -> float:
    """max_i |u(t_i)| exp(-gamma t_i); the plain sup norm when gamma = 0."""
    gamma = p.gamma if isinstance(p, NormParams) else float(p)
    if gamma == 0.0:
        return float(np.max(np.abs(u.values)))
    return float(np.max(np.abs(u.values) * np.exp(-gamma * u.t)))


def sup_norm(u: GridFunction) -> float:
    return weighted_sup_norm(u, 0.0)


def norm(x, gamma: float = 0.0) -> float:
    """Norm of a scalar, a vector in R^d (Euclidean) or a grid function."""
    if isinstance(x, GridFunction):
        return weighted_sup_norm(x, gamma)
    if isinstance(x, np.ndarray) and x.ndim > 0:
        return float(np.linalg.norm(x))
    return abs(float(x))


def fd_second_derivative(u: GridFunction) -> GridFunction:
    """Second derivative by finite differences.

    Central differences at interior nodes; at the endpoints the one-sided
    second-order stencil (2u0 - 5u1 + 4u2 - u3)/h^2. With only three nodes
    the single interior value is copied to both ends.
    """
    v = u.values
    if v.size < 3:
        raise ValueError("insufficient nodes")
    h2 = u.h ** 2
    d2 = np.empty_like(v)
    d2[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / h2
    if v.size >= 4:
        # 2u0 - 5u1 + 4u2 - u3 written in differences: exact zero on constants
        d2[0] = (2.0 * (v[0] - v[1]) - 3.0 * (v[1] - v[2]) + (v[2] - v[3])) / h2
        d2[-1] = (2.0 * (v[-1] - v[-2]) - 3.0 * (v[-2] - v[-3]) + (v[-3] - v[-4])) / h2
    else:
        d2[0] = d2[-1] = d2[1]
    return GridFunction(d2)


def fd_first_derivative_at_zero(u: GridFunction) -> float:
    v = u.values
    if v.size < 3:
        raise ValueError("insufficient nodes")
    return float((-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * u.h))
