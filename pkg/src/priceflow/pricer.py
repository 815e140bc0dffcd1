"""Price optimization via a convex min-cost flow, plus reference baselines.

The main pipeline builds a flow network whose min-cost solution encodes
the surrogate-optimal mean demand per group, solves it exactly on a
grid, and inverts the mean-demand map to read off prices. Baselines
(single-price reserve pricing with and without a supply cap, and plain
grid search over the surrogate) share the same surrogate evaluator.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .demand import (
    LinearCurve,
    PriceStatus,
    RevenueCurve,
    ZeroCurve,
    effective_demand_cap,
    inverse_mean_demand,
    mean_demand,
)
from .errors import BudgetError, EmptyMarketError, InputError, ParseError
from .flow import Arc, FlowNetwork, FlowSolution, solve_convex_mcf
from .instance import MarketInstance

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class PriceAssignment:
    """Per-group prices with extraction statuses and the surrogate value."""

    prices: dict[str, float]
    statuses: dict[str, PriceStatus]
    fhat: float
    method: str
    flow: FlowSolution | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SurrogateValue:
    """Grid evaluation of the surrogate objective with its tolerance.

    The true surrogate lies in [value, value + tolerance]: grid flows
    are feasible for the continuous relaxation, and rounding a
    continuous optimum down to the grid loses at most ``tolerance``.
    """

    value: float
    tolerance: float


def default_delta(inst: MarketInstance) -> float:
    """Grid step 1e-3 times the largest group count."""
    if not inst.groups:
        raise EmptyMarketError("instance has no demand groups")
    return 1e-3 * max(m.count for m in inst.demand.values())


def build_fp_network(inst: MarketInstance) -> FlowNetwork:
    """Flow network whose min cost encodes the optimal pricing surrogate.

    Nodes are a source, every resource, every group, and a sink. Source
    to resource arcs carry capacities at zero cost; per-edge arcs carry
    the negated match profit; group to sink arcs carry the convex
    revenue cost; a free source-sink bypass absorbs slack so exactly
    C = min(total mean-demand cap, total capacity) units always route.
    """
    if not inst.groups or not inst.resources or not inst.edges:
        raise EmptyMarketError("instance has no matchable market")
    zcap = {v: effective_demand_cap(inst.demand[v]) for v in inst.groups}
    total_c = sum(inst.capacities.values())
    supply = min(sum(zcap.values()), float(total_c))

    nodes = ["s", "t"] + [f"u:{u}" for u in inst.resources] + [f"v:{v}" for v in inst.groups]
    arcs = [Arc("s", "t", supply, ZeroCurve(), key=("bypass",))]
    for u in inst.resources:
        arcs.append(Arc("s", f"u:{u}", float(inst.capacities[u]), ZeroCurve(), key=("supply", u)))
    for i, e in enumerate(inst.edges):
        cap = min(float(inst.capacities[e.u]), zcap[e.v])
        arcs.append(Arc(f"u:{e.u}", f"v:{e.v}", cap, LinearCurve(-e.w), key=("edge", i)))
    for v in inst.groups:
        arcs.append(Arc(f"v:{v}", "t", zcap[v], RevenueCurve(inst.demand[v]), key=("sink", v)))
    return FlowNetwork(nodes=nodes, arcs=arcs, balances={"s": supply, "t": -supply})


def fp_discretization_slack(net: FlowNetwork, sol: FlowSolution) -> float:
    """Upper bound on the surrogate loss of the grid optimum.

    Rounding a continuous optimal flow down to the grid moves each edge
    arc by at most one grid step and each group sink arc by at most its
    degree many steps; each step costs at most the arc's largest
    incremental cost.
    """
    degree: dict[str, int] = {}
    for a in net.arcs:
        if a.key and a.key[0] == "edge":
            degree[a.head] = degree.get(a.head, 0) + 1
    slack = 0.0
    for a, max_inc in zip(net.arcs, sol.stats["per_arc_max_inc"]):
        if a.key and a.key[0] == "edge":
            slack += max_inc
        elif a.key and a.key[0] == "sink":
            slack += max_inc * degree.get(a.tail, 1)
    return slack


def solve_prices(inst: MarketInstance, delta: float | None = None) -> PriceAssignment:
    """Optimize prices by solving the flow reduction and inverting demand.

    Returns grid-optimal prices: the surrogate value of the result is
    within the reported ``fp_slack`` of the best achievable by any
    price vector.
    """
    if delta is None:
        delta = default_delta(inst)
    net = build_fp_network(inst)
    sol = solve_convex_mcf(net, delta)
    flows = sol.flow_by_key(net)

    prices: dict[str, float] = {}
    statuses: dict[str, PriceStatus] = {}
    for v in inst.groups:
        z_v = flows[("sink", v)]
        prices[v], statuses[v] = inverse_mean_demand(inst.demand[v], z_v)

    fhat = 0.0
    for i, e in enumerate(inst.edges):
        fhat += (prices[e.v] + e.w) * flows[("edge", i)]

    closed_slack = sum(
        2e-9 * inst.demand[v].count * (abs(prices[v]) + 1.0)
        for v in inst.groups
        if statuses[v] is PriceStatus.MARKET_CLOSED
    )
    diagnostics = {
        "delta": delta,
        "fp_objective": sol.objective,
        "fp_slack": fp_discretization_slack(net, sol) + closed_slack,
        "augmentations": sol.stats["augmentations"],
    }
    return PriceAssignment(
        prices=prices,
        statuses=statuses,
        fhat=fhat,
        method="proposed",
        flow=sol,
        diagnostics=diagnostics,
    )


def build_surrogate_network(inst: MarketInstance, prices: dict[str, float]) -> FlowNetwork:
    """Linear-cost network whose min cost is the negated surrogate at fixed prices."""
    if not inst.groups or not inst.resources or not inst.edges:
        raise EmptyMarketError("instance has no matchable market")
    xi = {v: mean_demand(inst.demand[v], prices[v]) for v in inst.groups}
    total_c = float(sum(inst.capacities.values()))
    supply = min(sum(xi.values()), total_c)

    nodes = ["s", "t"] + [f"u:{u}" for u in inst.resources] + [f"v:{v}" for v in inst.groups]
    arcs = [Arc("s", "t", supply, ZeroCurve(), key=("bypass",))]
    for u in inst.resources:
        arcs.append(Arc("s", f"u:{u}", float(inst.capacities[u]), ZeroCurve(), key=("supply", u)))
    for i, e in enumerate(inst.edges):
        arcs.append(
            Arc(f"u:{e.u}", f"v:{e.v}", min(float(inst.capacities[e.u]), xi[e.v]),
                LinearCurve(-e.w), key=("edge", i))
        )
    for v in inst.groups:
        arcs.append(Arc(f"v:{v}", "t", xi[v], LinearCurve(-prices[v]), key=("sink", v)))
    return FlowNetwork(nodes=nodes, arcs=arcs, balances={"s": supply, "t": -supply})


def surrogate_value(
    inst: MarketInstance, prices: dict[str, float], delta: float | None = None
) -> SurrogateValue:
    """Evaluate the surrogate objective at a fixed price vector on the grid."""
    if delta is None:
        delta = default_delta(inst)
    net = build_surrogate_network(inst, prices)
    sol = solve_convex_mcf(net, delta)
    tol = delta * sum(abs(e.w + prices[e.v]) for e in inst.edges)
    return SurrogateValue(value=-sol.objective, tolerance=tol)


# ---------------------------------------------------------------------------
# Single-price baselines


def _extended_prob(response, x: float) -> float:
    """Response extended to all prices: floor acceptance below the domain,
    zero acceptance above it."""
    dom = response.domain
    if dom.lo is not None and x < dom.lo:
        return float(response.prob(dom.lo))
    if dom.hi is not None and x > dom.hi:
        return 0.0
    return float(response.prob(x))


def _search_interval(response) -> tuple[float, float]:
    dom = response.domain
    if dom.hi is not None:
        return dom.lo, dom.hi
    lo = dom.lo if dom.lo is not None else float(response.inverse_prob(1.0 - 1e-12))
    return lo, float(response.inverse_prob(1e-12))


def _golden_section(fn, a: float, b: float, tol: float) -> tuple[float, float]:
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fn(x2)
    xs = max((a, x1, x2, b), key=fn)
    return xs, fn(xs)


def _maximize_piecewise(fn, breakpoints: list[float], tol_rel: float = 1e-6) -> tuple[float, float]:
    """Coarse scan plus golden-section refinement on every smooth piece."""
    pts = sorted(set(breakpoints))
    lo, hi = pts[0], pts[-1]
    tol = tol_rel * max(hi - lo, 1.0)
    best_x, best_f = lo, fn(lo)
    for a, b in zip(pts, pts[1:]):
        if b - a <= 0:
            continue
        grid = [a + (b - a) * k / 32 for k in range(33)]
        vals = [fn(x) for x in grid]
        k = max(range(33), key=lambda i: vals[i])
        ga, gb = grid[max(k - 1, 0)], grid[min(k + 1, 32)]
        x, f = _golden_section(fn, ga, gb, tol)
        for cand_x, cand_f in ((x, f), (a, fn(a)), (b, fn(b))):
            if cand_f > best_f:
                best_x, best_f = cand_x, cand_f
    return best_x, best_f


def _single_price_assignment(
    inst: MarketInstance, x_hat: float, method: str, delta: float | None, extra: dict
) -> PriceAssignment:
    prices, statuses = {}, {}
    for v in inst.groups:
        model = inst.demand[v]
        x_v = model.domain.clip(x_hat)
        prices[v] = x_v
        if model.domain.hi is not None and x_hat > model.domain.hi:
            statuses[v] = PriceStatus.MARKET_CLOSED
        else:
            statuses[v] = PriceStatus.INTERIOR
    sv = surrogate_value(inst, prices, delta)
    return PriceAssignment(
        prices=prices,
        statuses=statuses,
        fhat=sv.value,
        method=method,
        diagnostics={"common_price": x_hat, "fhat_tolerance": sv.tolerance, **extra},
    )


def _reserve_price(
    inst: MarketInstance, capped: bool, delta: float | None
) -> PriceAssignment:
    if not inst.groups or not inst.edges:
        raise EmptyMarketError("reserve pricing needs at least one group and edge")
    w_hat = sum(e.w for e in inst.edges) / len(inst.edges)
    responses = [inst.demand[v].response for v in inst.groups]
    num_u = len(inst.resources)

    def aggregate(x: float) -> float:
        return sum(_extended_prob(r, x) for r in responses)

    if capped:
        # Expected active participants, capped by the number of resources.
        def objective(x: float) -> float:
            return (x + w_hat) * min(float(num_u), aggregate(x))
    else:
        def objective(x: float) -> float:
            return (x + w_hat) * aggregate(x)

    intervals = [_search_interval(r) for r in responses]
    inter_lo = max(iv[0] for iv in intervals)
    inter_hi = min(iv[1] for iv in intervals)
    if inter_lo > inter_hi:
        # Domains do not overlap; fall back to one price per group.
        prices, statuses = {}, {}
        for v in inst.groups:
            r = inst.demand[v].response
            a, b = _search_interval(r)
            fn = lambda x, r=r: (x + w_hat) * float(r.prob(x))
            x_v, _ = _maximize_piecewise(fn, [a, b])
            prices[v] = r.domain.clip(x_v)
            statuses[v] = PriceStatus.INTERIOR
        sv = surrogate_value(inst, prices, delta)
        return PriceAssignment(
            prices=prices,
            statuses=statuses,
            fhat=sv.value,
            method="capped_mrp" if capped else "mrp",
            diagnostics={"fallback_per_node": True, "fhat_tolerance": sv.tolerance},
        )

    breakpoints = sorted({p for iv in intervals for p in iv})
    x_hat, _ = _maximize_piecewise(objective, breakpoints)
    return _single_price_assignment(
        inst, x_hat, "capped_mrp" if capped else "mrp", delta, {"fallback_per_node": False}
    )


def price_mrp(inst: MarketInstance, delta: float | None = None) -> PriceAssignment:
    """One reserve price for every group: argmax (x + mean w) * sum_v p_v(x)."""
    return _reserve_price(inst, capped=False, delta=delta)


def price_capped_mrp(inst: MarketInstance, delta: float | None = None) -> PriceAssignment:
    """Reserve price with the demand term capped by the resource count."""
    return _reserve_price(inst, capped=True, delta=delta)


def price_grid_search(
    inst: MarketInstance,
    grid_points_per_node: int = 20,
    delta: float | None = None,
    budget: int = 200_000,
    mode: str = "exhaustive",
) -> PriceAssignment:
    """Maximize the surrogate over a per-group price grid.

    Exhaustive search enumerates the full grid product (subject to
    ``budget``); coordinate mode sweeps one group at a time and handles
    larger markets at the cost of global optimality.
    """
    if not inst.groups:
        raise EmptyMarketError("grid search needs at least one group")
    if grid_points_per_node < 1:
        raise InputError("grid_points_per_node must be >= 1")
    grids = {}
    for v in inst.groups:
        a, b = _search_interval(inst.demand[v].response)
        k = grid_points_per_node
        grids[v] = [a + (b - a) * i / max(k - 1, 1) for i in range(k)]

    def evaluate(prices: dict[str, float]) -> float:
        return surrogate_value(inst, prices, delta).value

    if mode == "exhaustive":
        combos = grid_points_per_node ** len(inst.groups)
        if combos > budget:
            raise BudgetError(
                f"{combos} grid combinations exceed the budget of {budget}; "
                "use mode='coordinate' or fewer points"
            )
        best_prices, best_val = None, -math.inf
        for combo in itertools.product(*(grids[v] for v in inst.groups)):
            prices = dict(zip(inst.groups, combo))
            val = evaluate(prices)
            if val > best_val:
                best_prices, best_val = prices, val
    elif mode == "coordinate":
        best_prices = {v: grids[v][len(grids[v]) // 2] for v in inst.groups}
        best_val = evaluate(best_prices)
        for _sweep in range(5):
            improved = False
            for v in inst.groups:
                for cand in grids[v]:
                    trial = {**best_prices, v: cand}
                    val = evaluate(trial)
                    if val > best_val:
                        best_prices, best_val, improved = trial, val, True
            if not improved:
                break
    else:
        raise InputError(f"unknown grid-search mode {mode!r}")

    statuses = {}
    for v in inst.groups:
        model = inst.demand[v]
        at_top = model.domain.hi is not None and best_prices[v] >= model.domain.hi
        statuses[v] = PriceStatus.MARKET_CLOSED if at_top else PriceStatus.INTERIOR
    return PriceAssignment(
        prices=best_prices,
        statuses=statuses,
        fhat=best_val,
        method="grid_search",
        diagnostics={"grid_points_per_node": grid_points_per_node, "mode": mode},
    )


# ---------------------------------------------------------------------------
# Price file format: JSON map of group -> {price, status} plus provenance.


def write_prices(pa: PriceAssignment, path: str | Path) -> None:
    doc = {
        "method": pa.method,
        "fhat": pa.fhat,
        "groups": {
            v: {"price": pa.prices[v], "status": pa.statuses[v].value} for v in pa.prices
        },
        "diagnostics": {
            k: v for k, v in pa.diagnostics.items() if isinstance(v, (int, float, str, bool))
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_prices(path: str | Path) -> PriceAssignment:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        prices = {v: float(g["price"]) for v, g in doc["groups"].items()}
        statuses = {v: PriceStatus(g["status"]) for v, g in doc["groups"].items()}
        return PriceAssignment(
            prices=prices,
            statuses=statuses,
            fhat=float(doc["fhat"]),
            method=doc.get("method", "unknown"),
            diagnostics=doc.get("diagnostics", {}),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: malformed price file ({exc})") from exc
