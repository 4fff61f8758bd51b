"""Fixed-point toolkit for implicit equations u = T(u, C(u)) with Kannan-type
equicontraction maps T and a compact Volterra operator C."""

from .fixpoint import (BallSpec, ConvergenceError, ConvergenceReport, SelfMapViolation,
                       SolveConfig, check_mth_invariant, cross_validate, picard_fixed_point,
                       solve_implicit_direct, solve_implicit_nested)
from .funcspace import (GridFunction, NormParams, fd_first_derivative_at_zero,
                        fd_second_derivative, weighted_sup_norm)
from .ivp import (APP_I, APP_II, FSpec, HypothesisError, HypothesisReport, IvpParams,
                  build_map_app1, build_map_app2, check_hypotheses, residual_ode, solve_ivp)
from .kannan import (FunctionBall, Interval, KannanReport, ParametrizedMap, build_example_2_3,
                     build_example_lp, estimate_kannan_constant, kannan_ratio, verify_kannan)
from .mnc import (CoverReport, PointCloud, covering_radius_exact, covering_radius_greedy,
                  kuratowski_partition_greedy, mnc_property_suite, sadovskii_gap)
from .operators import (KernelParams, apply_volterra, contraction_bound, green_kernel,
                        kernel_bound_report, kernel_weighted_integral)

__version__ = "0.1.0"
