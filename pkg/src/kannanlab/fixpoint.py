"""Picard iteration, solvers for u = T(u, C(u)) and the m-th invariance check."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np

from .funcspace import GridFunction, NormParams, norm
from .kannan import FunctionBall

log = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class SelfMapViolation(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-10
    max_iter: int = 1000
    norm: NormParams = NormParams()
    inner_tol_factor: float = 0.1
    stall_limit: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    @property
    def gamma(self) -> float:
        return self.norm.gamma


@dataclass
class ConvergenceReport:
    iterations: int
    step_norms: list[float]
    final_residual: float
    observed_ratio: float
    converged: bool
    message: str = ""
    rate_bound: float | None = None
    inner_iterations: int = 0

    @property
    def rate_ok(self) -> bool:
        return self.rate_bound is None or self.observed_ratio <= self.rate_bound + 1e-6

    def to_dict(self) -> dict:
        d = {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "observed_ratio": self.observed_ratio,
            "step_norms": list(self.step_norms),
        }
        if self.message:
            d["message"] = self.message
        if self.rate_bound is not None:
            d["rate_bound"] = self.rate_bound
        if self.inner_iterations:
            d["inner_iterations"] = self.inner_iterations
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class BallSpec:
    center: Any
    radius: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def contains(self, x, slack: float = 1e-12) -> bool:
        return norm(x - self.center, self.gamma) <= self.radius * (1 + 1e-12) + slack


def _step_ratios(steps: list[float], scale: float) -> list[float]:
    # ratios below the rounding floor carry no information
    floor = 64 * _EPS * max(1.0, scale)
    return [b / a for a, b in zip(steps, steps[1:]) if a > floor]


def _finish(steps, residual, converged, message, scale, **extra) -> ConvergenceReport:
    ratios = _step_ratios(steps, scale)
    return ConvergenceReport(
        iterations=len(steps),
        step_norms=[float(s) for s in steps],
        final_residual=float(residual),
        observed_ratio=float(max(ratios)) if ratios else 0.0,
        converged=converged,
        message=message,
        **extra,
    )


def picard_fixed_point(T_v: Callable, u0, cfg: SolveConfig = SolveConfig(), *,
                       ball: BallSpec | None = None, kannan_k: float | None = None):
    """Iterate u <- T_v(u) until the step norm drops to ``cfg.tol``.

    With ``ball`` given every iterate must stay inside it
    (``SelfMapViolation`` otherwise). With ``kannan_k`` the report carries the
    rate bound k/(1-k) that consecutive step ratios of a Kannan map obey.
    """
    g = cfg.gamma
    if ball is not None and not ball.contains(u0):
        raise SelfMapViolation("self-map violation: starting point outside the ball")
    u = u0
    steps: list[float] = []
    stall = 0
    converged = False
    message = "max_iter exhausted"
    for _ in range(cfg.max_iter):
        u_next = T_v(u)
        if ball is not None and not ball.contains(u_next):
            raise SelfMapViolation(
                f"self-map violation: iterate {len(steps) + 1} left the ball")
        s = norm(u_next - u, g)
        steps.append(s)
        u = u_next
        if s <= cfg.tol:
            converged, message = True, ""
            break
        stall = stall + 1 if len(steps) > 1 and s >= steps[-2] else 0
        if stall >= cfg.stall_limit:
            message = f"step norms did not decrease for {stall} consecutive iterations"
            break
    residual = norm(T_v(u) - u, g)
    rate = None if kannan_k is None else kannan_k / (1.0 - kannan_k)
    rep = _finish(steps, residual, converged, message, norm(u, g), rate_bound=rate)
    if not rep.rate_ok:
        log.warning("observed step ratio %.6g exceeds Kannan rate bound %.6g",
                    rep.observed_ratio, rate)
    return u, rep


def solve_implicit_nested(T: Callable, C: Callable, u0, cfg: SolveConfig = SolveConfig()):
    """Outer iteration u <- f(C(u)), where f(v) is the fixed point of T(., v).

    Each f(v) is a Picard solve at ``cfg.tol * cfg.inner_tol_factor``, warm
    started from the current outer iterate. Convergence requires both a
    small outer step and ||T(u, C(u)) - u|| <= tol.
    """
    g = cfg.gamma
    inner_cfg = replace(cfg, tol=cfg.tol * cfg.inner_tol_factor)
    u = u0
    steps: list[float] = []
    inner_total = 0
    stall = 0
    converged = False
    message = "max_iter exhausted"
    residual = float("nan")
    for it in range(cfg.max_iter):
        v = C(u)
        u_next, inner = picard_fixed_point(lambda w, v=v: T(w, v), u, inner_cfg)
        inner_total += inner.iterations
        if not inner.converged:
            raise ConvergenceError(
                f"inner fixed-point solve failed at outer iteration {it + 1}: {inner.message}")
        s = norm(u_next - u, g)
        steps.append(s)
        u = u_next
        if s <= cfg.tol:
            residual = norm(T(u, C(u)) - u, g)
            if residual <= cfg.tol:
                converged, message = True, ""
                break
        stall = stall + 1 if len(steps) > 1 and s >= steps[-2] else 0
        if stall >= cfg.stall_limit:
            message = f"step norms did not decrease for {stall} consecutive iterations"
            break
    if not converged:
        residual = norm(T(u, C(u)) - u, g)
    return u, _finish(steps, residual, converged, message, norm(u, g),
                      inner_iterations=inner_total)


def solve_implicit_direct(T: Callable, C: Callable, u0, cfg: SolveConfig = SolveConfig()):
    """Iterate u <- T(u, C(u)) with the same stopping contract as the nested solver."""
    g = cfg.gamma

    def eta(w):
        return T(w, C(w))

    u = u0
    steps: list[float] = []
    stall = 0
    converged = False
    message = "max_iter exhausted"
    residual = float("nan")
    for _ in range(cfg.max_iter):
        u_next = eta(u)
        s = norm(u_next - u, g)
        steps.append(s)
        u = u_next
        if s <= cfg.tol:
            residual = norm(eta(u) - u, g)
            if residual <= cfg.tol:
                converged, message = True, ""
                break
        stall = stall + 1 if len(steps) > 1 and s >= steps[-2] else 0
        if stall >= cfg.stall_limit:
            message = f"step norms did not decrease for {stall} consecutive iterations"
            break
    if not converged:
        residual = norm(eta(u) - u, g)
    return u, _finish(steps, residual, converged, message, norm(u, g))


@dataclass
class CrossCheck:
    u_nested: Any
    nested: ConvergenceReport
    u_direct: Any
    direct: ConvergenceReport
    difference: float
    tol: float

    @property
    def agree(self) -> bool:
        return self.nested.converged and self.direct.converged and self.difference <= 10 * self.tol


def cross_validate(T: Callable, C: Callable, u0, cfg: SolveConfig = SolveConfig()) -> CrossCheck:
    un, rn = solve_implicit_nested(T, C, u0, cfg)
    ud, rd = solve_implicit_direct(T, C, u0, cfg)
    return CrossCheck(un, rn, ud, rd, norm(un - ud, cfg.gamma), cfg.tol)


def _ball_samples(ball: BallSpec, samples: int, rng: np.random.Generator) -> list:
    c = ball.center
    r = ball.radius
    out = [c]
    if isinstance(c, GridFunction):
        for d in FunctionBall(r, c.n).sample(rng, samples)[1:]:
            out.append(c + d)
    elif isinstance(c, np.ndarray) and c.ndim > 0:
        dim = c.size
        for _ in range(samples - 1):
            d = rng.standard_normal(c.shape)
            d *= r * rng.uniform() ** (1.0 / dim) / np.linalg.norm(d)
            out.append(c + d)
    else:
        c = float(c)
        out.extend([c - r, c + r])
        out.extend(c + r * rng.uniform(-1.0, 1.0, max(samples - 3, 0)))
    return out[:samples]


@dataclass
class InvarianceResult:
    ok: bool
    witness: Any
    scaling: str
    factor: float
    checked: int

    def __iter__(self):
        yield self.ok
        yield self.witness


def check_mth_invariant(eta: Callable, ball: BallSpec, q: float, m: int, samples: int, *,
                        scaling: str = "origin", seed: int = 0) -> InvarianceResult:
    """Sample the ball and test eta(x) in q^m B.

    ``scaling="origin"`` reads q B(c, r) as B(q c, q r); ``"center"`` reads
    it as B(c, q r). The centre is always the first sample. Unpacks as
    ``(ok, witness)``; the witness is the first failing point or None.
    """
    if not 0.0 <= q < 0.5:
        raise ValueError("q must lie in [0, 1/2)")
    if m < 1 or samples < 1:
        raise ValueError("m and samples must be at least 1")
    if scaling not in ("origin", "center"):
        raise ValueError("scaling must be 'origin' or 'center'")
    f = q ** m
    target = ball.center * f if scaling == "origin" else ball.center
    rad = ball.radius * f
    slack = 1e-12 * max(1.0, ball.radius)
    rng = np.random.default_rng(seed)
    pts = _ball_samples(ball, samples, rng)
    for x in pts:
        if norm(eta(x) - target, ball.gamma) > rad + slack:
            return InvarianceResult(False, x, scaling, f, len(pts))
    return InvarianceResult(True, None, scaling, f, len(pts))
