"""Joint pricing and bipartite matching under price-dependent stochastic demand.

Pipeline: build or load a market instance, solve the convex flow
reduction for near-optimal prices, then evaluate the realized expected
profit with an exact b-matching oracle.
"""

from .demand import (
    PriceStatus,
    RevenueCurve,
    inverse_mean_demand,
    mean_demand,
    revenue_cost,
    sample_capacity,
)
from .errors import (
    BudgetError,
    DomainError,
    EmptyMarketError,
    InfeasibleFlowError,
    InputError,
    NonConvexError,
    ParseError,
    PriceflowError,
    SolverError,
)
from .evaluate import (
    APPROX_RATIO,
    BoundVerdict,
    EvalReport,
    Realization,
    check_bounds,
    estimate_expected_profit,
    exact_expected_profit,
    fhat,
    match_profit,
)
from .flow import (
    Arc,
    FlowNetwork,
    FlowSolution,
    residual_optimality_violation,
    solve_convex_mcf,
    solve_linear_mcf,
)
from .generators import generate_crowdsourcing, generate_ridehail
from .instance import (
    DemandModel,
    Edge,
    MarketInstance,
    build_instance,
    read_instance,
    validate_instance,
    write_instance,
)
from .pricer import (
    PriceAssignment,
    SurrogateValue,
    build_fp_network,
    price_capped_mrp,
    price_grid_search,
    price_mrp,
    read_prices,
    solve_prices,
    surrogate_value,
    write_prices,
)
from .responses import Interval, LinearResponse, LogisticResponse, TabulatedResponse

__version__ = "0.1.0"
