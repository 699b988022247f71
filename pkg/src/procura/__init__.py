"""Online resource allocation with marginally increasing procurement costs."""

from .cost_model import (
    CostFunction,
    MonomialTerm,
    SolverConfig,
    SurrogateSpec,
    Valuation,
    concave_conjugate,
    concave_conjugate_at_gradient,
    conjugate_cost,
    eval_cost,
    eval_valuation,
    grad_cost,
    grad_valuation,
    validate_assumptions,
)
from .errors import ConjugateInfiniteError, ConvergenceError, DomainError, InfeasibleError
from .grid import GridSpec, Variant
from .instances import gen_adversarial_gradient, gen_adversarial_scalar, gen_random_linear
from .offline import Instance, OfflineSolution, brute_force_offline, dual_objective, solve_offline
from .online import RunRecord, compute_Ds, posted_price, run_sequential, run_simultaneous, step_marginal
from .surrogate import (
    DesignReport,
    alpha_ratio,
    design_chan,
    design_poly,
    design_quasiconvex,
    feasibility_violation,
    optimal_rho,
    solve_feasibility,
)

__version__ = "0.1.0"
