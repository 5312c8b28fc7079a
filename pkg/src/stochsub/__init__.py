"""Stochastic monotone submodular maximization over matroids.

Exact and Monte Carlo evaluation of set and policy values, the myopic adaptive
policy, greedy and continuous-greedy baselines with pipage rounding, exact
adaptive and non-adaptive optima for small instances, and the scenario LP
bounding the adaptivity gap.
"""

from .bounds import GAP, GapCertificate, adaptive_upper_bound, f_plus, verify_gap_chain
from .errors import (
    EnumerationTooLargeError,
    InvalidArgumentError,
    InvalidInstanceError,
    InvalidPointError,
    InvalidRealizationError,
    LPError,
    StochSubError,
    UnsupportedMatroidError,
)
from .evaluate import (
    coverage_closed_form,
    conditional_expected_value,
    eval_f,
    expected_value_exact,
    expected_value_mc,
    marginal_conditional,
    multilinear_extension,
    scenario_table,
    validate_objective,
)
from .matroid import ExplicitMatroid, Matroid, PartitionMatroid, UniformMatroid
from .model import (
    ConcaveOfSum,
    Coverage,
    DiscreteDistribution,
    ExplicitTable,
    Instance,
    StochasticElement,
)
from .oracles import make_oracle
from .policies import (
    DecisionTreeValue,
    PolicyTrace,
    continuous_greedy,
    evaluate_adaptive_exact,
    greedy_nonadaptive,
    optimal_adaptive_exact,
    optimal_nonadaptive_exact,
    pipage_round,
    run_myopic_adaptive,
)

__version__ = "0.1.0"
