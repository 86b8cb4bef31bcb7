"""Classical and scaled scenario approaches for bilinear chance constraints."""
from .distributions import (AffinePushforward, Elliptical, GaussianMixture, MultivariateNormal,
                            WeibullIndependent, ldp_data, log_density, sample, tail_index)
from .problem import (ChanceProblem, IntervalConstraint, Linear, Quadratic, SampledProgram,
                      assemble, canonicalize, pole_assignment, pole_assignment_problem)
from .samplesize import ScenarioConfig, classical_size, reduction_exponent, scaled_size
from .solver import SolveReport, SolverOptions, feasibility_check, solve, solve_qp
from .validate import (ViolationEstimate, estimate_violation, tail_ratio, rate_function,
                       feasibility_ratio)

__version__ = "0.1.0"
