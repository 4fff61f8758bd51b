"""Second-order initial value problems recast as u = T(u, C(u)).

Two problem families on I = [0, 1], with C the Volterra operator of the
Green kernel sin(omega (t - s))/omega:

APP_I   u'' + omega^2 u = f(t, u) (Cu)(t),  u(0) = a, u'(0) = b,
        T(u, v) = a cos(omega t) + b sin(omega t) + C(f(., u) v).

APP_II  u'' = u + f(t, u) - omega C(u + f(., u)),  u(0) = u'(0) = 0,
        T(u, v) = v + C(f(., u)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fixpoint import ConvergenceReport, SolveConfig, cross_validate, solve_implicit_nested
from .funcspace import (GridFunction, NormParams, fd_first_derivative_at_zero,
                        fd_second_derivative, grid, sup_norm)
from .kannan import FunctionBall, ParametrizedMap
from .operators import KernelParams, apply_volterra, contraction_bound

APP_I = "APP_I"
APP_II = "APP_II"
VARIANTS = (APP_I, APP_II)
F_KINDS = ("sin", "cos", "zero")


class HypothesisError(ValueError):
    def __init__(self, failing: list[str]):
        self.failing = failing
        super().__init__("hypotheses fail: " + ", ".join(failing))


@dataclass(frozen=True)
class FSpec:
    """f(t, u) = lam * sin(u), lam * cos(u) or 0; bounded by M = |lam|."""

    kind: str = "zero"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in F_KINDS:
            raise ValueError(f"f kind must be one of {F_KINDS}, got {self.kind!r}")
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")

    @property
    def M(self) -> float:
        return 0.0 if self.kind == "zero" else abs(self.lam)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.lam == 0.0

    def __call__(self, t, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "sin":
            return self.lam * np.sin(u)
        if self.kind == "cos":
            return self.lam * np.cos(u)
        return np.zeros(np.broadcast(np.asarray(t), u).shape)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lambda": self.lam}


@dataclass(frozen=True)
class IvpParams:
    omega: float
    gamma: float = 0.0
    a: float = 0.0
    b: float = 0.0
    f: FSpec = FSpec()
    variant: str = APP_I
    n: int = 2001

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.omega == 0 or not math.isfinite(self.omega):
            raise ValueError("omega must be finite and nonzero")
        if self.variant == APP_II and (self.a != 0 or self.b != 0):
            raise ValueError("APP_II has zero initial data: a = b = 0")
        if self.n < 3:
            raise ValueError("insufficient nodes")
        _check_bound(self.f)

    @property
    def kernel(self) -> KernelParams:
        return KernelParams(self.omega, self.gamma)

    @property
    def M(self) -> float:
        return self.f.M

    def to_dict(self) -> dict:
        return {"variant": self.variant, "omega": self.omega, "gamma": self.gamma,
                "a": self.a, "b": self.b, "f": self.f.to_dict(), "n": self.n}


def _check_bound(f: FSpec, samples: int = 4001):
    u = np.linspace(-4 * math.pi, 4 * math.pi, samples)
    t = np.linspace(0.0, 1.0, samples)
    peak = float(np.max(np.abs(f(t, u))))
    if peak > f.M * (1 + 1e-12) + 1e-15:
        raise ValueError(f"sampled |f| = {peak} exceeds the declared bound M = {f.M}")


def _base(params: IvpParams) -> GridFunction:
    t = grid(params.n)
    w = params.omega
    return GridFunction(params.a * np.cos(w * t) + params.b * np.sin(w * t))


def _domains(params: IvpParams):
    return FunctionBall(1.0, params.n), FunctionBall(1.0 / abs(params.omega), params.n)


def build_map_app1(params: IvpParams) -> ParametrizedMap:
    if params.variant != APP_I:
        raise ValueError("build_map_app1 needs variant APP_I")
    kp = params.kernel
    base = _base(params)
    t = grid(params.n)
    f = params.f

    def evaluate(u: GridFunction, v: GridFunction) -> GridFunction:
        return base + apply_volterra(GridFunction(f(t, u.values) * v.values), kp)

    ud, vd = _domains(params)
    return ParametrizedMap(evaluate, ud, vd, gamma=params.gamma, name="app1")


def build_map_app2(params: IvpParams, probes: int = 4, seed: int = 0) -> ParametrizedMap:
    """T(u, v) = v + C(f(., u)); checks ||T(u, v1) - T(u, v2)|| = ||v1 - v2|| on probes."""
    if params.variant != APP_II:
        raise ValueError("build_map_app2 needs variant APP_II")
    kp = params.kernel
    t = grid(params.n)
    f = params.f

    def evaluate(u: GridFunction, v: GridFunction) -> GridFunction:
        return v + apply_volterra(GridFunction(f(t, u.values)), kp)

    ud, vd = _domains(params)
    T = ParametrizedMap(evaluate, ud, vd, gamma=params.gamma, name="app2")
    rng = np.random.default_rng(seed)
    us = ud.sample(rng, probes + 1)[1:]
    vs = vd.sample(rng, 2 * probes + 1)[1:]
    for i, u in enumerate(us):
        v1, v2 = vs[2 * i], vs[2 * i + 1]
        lhs = T.dist(T(u, v1), T(u, v2))
        rhs = T.dist(v1, v2)
        if abs(lhs - rhs) > 1e-12 * max(1.0, rhs):
            raise RuntimeError(f"v-Lipschitz identity broken on probe {i}: {lhs} vs {rhs}")
    return T


def build_map(params: IvpParams) -> ParametrizedMap:
    return build_map_app1(params) if params.variant == APP_I else build_map_app2(params)


@dataclass
class HypothesisReport:
    variant: str
    cond_ii: bool
    slack_ii: float
    cond_iii: bool
    slack_iii: float
    k: float
    f_nonzero: bool
    cond_i_pass_rate: float | None = None
    notes: tuple[str, ...] = ()

    @property
    def all_pass(self) -> bool:
        return self.cond_ii and self.cond_iii and self.f_nonzero

    @property
    def failing(self) -> list[str]:
        out = []
        if not self.f_nonzero:
            out.append("f nonzero")
        if not self.cond_ii:
            out.append("(ii)")
        if not self.cond_iii:
            out.append("(iii)")
        return out

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "cond_i_pass_rate": self.cond_i_pass_rate,
            "cond_ii": {"pass": self.cond_ii, "slack": self.slack_ii},
            "cond_iii": {"pass": self.cond_iii, "slack": self.slack_iii},
            "k": self.k,
            "f_nonzero": self.f_nonzero,
            "all_pass": self.all_pass,
            "failing": self.failing,
            "notes": list(self.notes),
        }


def sample_condition_i(params: IvpParams, samples: int = 16, seed: int = 0) -> float:
    """Fraction of random (u1, u2, v) triples meeting the pointwise form of condition (i).

    Read at t = s: |f(s, u1(s)) - f(s, u2(s))| <= |u1(s) - T(u1, v)(s)| + |u2(s) - T(u2, v)(s)|
    at every node.
    """
    if samples < 1:
        return float("nan")
    T = build_map(params)
    rng = np.random.default_rng(seed)
    us = T.u_domain.sample(rng, 2 * samples + 1)[1:]
    vs = T.v_domain.sample(rng, samples + 1)[1:]
    t = grid(params.n)
    passed = 0
    for i in range(samples):
        u1, u2, v = us[2 * i], us[2 * i + 1], vs[i]
        lhs = np.abs(params.f(t, u1.values) - params.f(t, u2.values))
        rhs = np.abs(u1.values - T(u1, v).values) + np.abs(u2.values - T(u2, v).values)
        passed += bool(np.all(lhs <= rhs + 1e-12))
    return passed / samples


def check_hypotheses(params: IvpParams, cond_i_samples: int = 16, seed: int = 0) -> HypothesisReport:
    """Conditions (ii) and (iii) in closed form, (i) sampled.

    (ii)  APP_I:  M <= omega^2 (1 - |a| - |b|);   APP_II:  M <= |omega|/8 - 1
    (iii) |gamma + 2 omega| < |omega (gamma^2 + omega^2)| / 2, equivalent to k < 1/2.
    """
    w, g, M = params.omega, params.gamma, params.M
    if params.variant == APP_I:
        rhs_ii = w * w * (1.0 - abs(params.a) - abs(params.b))
    else:
        rhs_ii = abs(w) / 8.0 - 1.0
    lhs_iii = abs(g + 2.0 * w)
    rhs_iii = abs(w * (g * g + w * w)) / 2.0
    rate = sample_condition_i(params, cond_i_samples, seed) if cond_i_samples else None
    notes = ()
    if params.variant == APP_II and not params.f.is_zero:
        # bounded and linear in u forces f constant in u
        notes = (f"f = {params.f.kind}(u) is bounded but not linear in u; "
                 "the linearity requirement is not checked",)
    return HypothesisReport(
        variant=params.variant,
        cond_ii=M <= rhs_ii,
        slack_ii=rhs_ii - M,
        cond_iii=lhs_iii < rhs_iii,
        slack_iii=rhs_iii - lhs_iii,
        k=contraction_bound(params.kernel),
        f_nonzero=not params.f.is_zero,
        cond_i_pass_rate=rate,
        notes=notes,
    )


@dataclass
class IvpSolution:
    u: GridFunction
    report: ConvergenceReport
    hypotheses: HypothesisReport
    overridden: bool
    params: IvpParams
    sup_norm: float = field(init=False)

    def __post_init__(self):
        self.sup_norm = sup_norm(self.u)

    @property
    def in_unit_ball(self) -> bool:
        return self.sup_norm <= 1.0 + 1e-12

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "overridden": self.overridden,
            "hypotheses": self.hypotheses.to_dict(),
            "convergence": self.report.to_dict(),
            "sup_norm": self.sup_norm,
            "in_unit_ball": self.in_unit_ball,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _solver_setup(params: IvpParams, cfg: SolveConfig | None):
    cfg = SolveConfig() if cfg is None else cfg
    cfg = replace(cfg, norm=NormParams(params.gamma))
    kp = params.kernel
    T = build_map(params)
    return cfg, T, (lambda u: apply_volterra(u, kp))


def solve_ivp(params: IvpParams, cfg: SolveConfig | None = None, override: bool = False,
              hypotheses: HypothesisReport | None = None) -> IvpSolution:
    """Solve the integral form with the nested solver, starting from u = 0.

    Raises ``HypothesisError`` naming the failed conditions unless
    ``override`` is set; the override is recorded on the result.
    """
    hyp = check_hypotheses(params) if hypotheses is None else hypotheses
    if not hyp.all_pass and not override:
        raise HypothesisError(hyp.failing)
    cfg, T, C = _solver_setup(params, cfg)
    u, rep = solve_implicit_nested(T, C, GridFunction.zeros(params.n), cfg)
    return IvpSolution(u, rep, hyp, overridden=override and not hyp.all_pass, params=params)


def cross_check_ivp(params: IvpParams, cfg: SolveConfig | None = None):
    """Nested and direct solves of the same instance (no hypothesis gate)."""
    cfg, T, C = _solver_setup(params, cfg)
    return cross_validate(T, C, GridFunction.zeros(params.n), cfg)


def residual_ode(u: GridFunction, params: IvpParams, slope_tol: float = 1e-4) -> dict:
    """Finite-difference residual of the differential form at interior nodes.

    APP_I reports the initial slope against both b and b*omega, since the
    integral form has u'(0) = b*omega. APP_II reports the equation as posed
    ("literal", factor omega on the integral) and the form the integral
    equation actually satisfies ("consistent", factor omega^2).
    """
    if u.n != params.n:
        raise ValueError("grid mismatch between u and params")
    t = u.t
    w = params.omega
    kp = params.kernel
    d2 = fd_second_derivative(u).values
    fu = params.f(t, u.values)
    slope = fd_first_derivative_at_zero(u)
    inner = slice(1, u.n - 1)
    if params.variant == APP_I:
        cu = apply_volterra(u, kp).values
        res = d2 + w * w * u.values - fu * cu
        err_b = abs(slope - params.b)
        err_bw = abs(slope - params.b * w)
        matches = [name for name, e in (("b", err_b), ("b*omega", err_bw)) if e <= slope_tol]
        return {
            "variant": APP_I,
            "ode_residual": float(np.max(np.abs(res[inner]))),
            "initial_value_error": abs(float(u.values[0]) - params.a),
            "initial_slope": slope,
            "slope_error_vs_b": err_b,
            "slope_error_vs_b_omega": err_bw,
            "slope_matches": matches,
        }
    cw = apply_volterra(GridFunction(u.values + fu), kp).values
    lit = d2 - u.values - fu + w * cw
    con = d2 - u.values - fu + w * w * cw
    return {
        "variant": APP_II,
        "ode_residual": float(np.max(np.abs(lit[inner]))),
        "ode_residual_consistent": float(np.max(np.abs(con[inner]))),
        "initial_value_error": abs(float(u.values[0])),
        "initial_slope_error": abs(slope),
    }
