"""Shared builders for small hand-made market instances."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from priceflow import DemandModel, LinearResponse, LogisticResponse, build_instance
from priceflow.demand import PriceStatus
from priceflow.pricer import PriceAssignment


def linear_model(q: float, n: int = 1, family: str = "binomial") -> DemandModel:
    return DemandModel(family=family, count=n, response=LinearResponse(q=q))


def logistic_model(
    q: float, beta: float = 1.3, gamma: float = 0.3 * np.sqrt(3.0) / np.pi, n: int = 1,
    family: str = "binomial",
) -> DemandModel:
    return DemandModel(family=family, count=n, response=LogisticResponse(q=q, beta=beta, gamma=float(gamma)))


def one_by_one(q: float, w: float, n: int = 1, c: int = 1):
    """Single resource, single linear-demand group, one edge."""
    return build_instance({"u0": c}, {"v0": linear_model(q, n)}, [("u0", "v0", w)])


def fixed_prices(inst, prices: dict[str, float], method: str = "fixed") -> PriceAssignment:
    statuses = {v: PriceStatus.INTERIOR for v in prices}
    return PriceAssignment(prices=prices, statuses=statuses, fhat=0.0, method=method)


class TableCurve:
    """Cost curve defined by its exact values on the grid."""

    kind = "table"

    def __init__(self, values, delta):
        self.values = list(values)
        self.delta = delta

    def evaluate(self, z):
        idx = np.rint(np.asarray(z, dtype=float) / self.delta).astype(int)
        return np.asarray(self.values, dtype=float)[idx]


def random_grid_network(rng, exact=True, max_total_grid=200_000):
    """Random small network with convex piecewise costs.

    With ``exact=True`` all values are dyadic rationals so float sums
    are exact and solver/oracle objectives must agree to the bit.
    Returns (FlowNetwork, arc specs for the oracle, balances, delta).
    """
    from priceflow.flow import Arc, FlowNetwork

    n_nodes = int(rng.integers(2, 6))
    nodes = [f"n{i}" for i in range(n_nodes)]
    n_arcs = int(rng.integers(3, 9))
    delta = float(rng.choice([0.25, 0.5, 1.0])) if exact else float(rng.uniform(0.1, 1.0))
    arcs = []
    specs = []
    while True:
        total_grid = 1
        arcs.clear()
        specs.clear()
        for _ in range(n_arcs):
            a, b = rng.choice(n_nodes, size=2, replace=False)
            cap_units = int(rng.integers(0, 7))
            if exact:
                first = float(rng.integers(-8, 9)) / 4.0
                steps = rng.integers(0, 4, size=max(cap_units - 1, 0)) / 4.0
            else:
                first = float(rng.uniform(-2.0, 2.0))
                steps = rng.uniform(0.0, 1.0, size=max(cap_units - 1, 0))
            inc = np.concatenate([[first], first + np.cumsum(steps)]) if cap_units else []
            values = np.concatenate([[0.0], np.cumsum(inc)]) if cap_units else [0.0]
            curve = TableCurve(values, delta)
            arcs.append(Arc(nodes[a], nodes[b], cap_units * delta, curve))
            specs.append((nodes[a], nodes[b], cap_units * delta, curve))
            total_grid *= cap_units + 1
        if total_grid <= max_total_grid:
            break
    supply_units = int(rng.integers(0, 7))
    src, snk = rng.choice(n_nodes, size=2, replace=False)
    balances = {nodes[src]: supply_units * delta, nodes[snk]: -supply_units * delta}
    net = FlowNetwork(nodes=nodes, arcs=arcs, balances=balances)
    return net, specs, balances, delta


def random_small_instance(
    rng,
    max_u: int = 3,
    max_v: int = 2,
    families: tuple[str, ...] = ("binomial",),
    max_n: int = 1,
):
    """Small random market; redraws until normalization keeps it nonempty."""
    while True:
        num_u = int(rng.integers(1, max_u + 1))
        num_v = int(rng.integers(1, max_v + 1))
        resources = {f"u{i}": int(rng.integers(1, 3)) for i in range(num_u)}
        demand = {}
        for j in range(num_v):
            family = str(rng.choice(families))
            n = int(rng.integers(1, max_n + 1))
            if rng.random() < 0.7:
                model = linear_model(float(rng.uniform(2.0, 10.0)), n=n, family=family)
            else:
                model = logistic_model(float(rng.uniform(2.0, 10.0)), n=n, family=family)
            demand[f"v{j}"] = model
        edges = []
        for i in range(num_u):
            for j in range(num_v):
                if rng.random() < 0.8 or i == j % num_u:
                    edges.append((f"u{i}", f"v{j}", float(rng.uniform(-3.0, 3.0))))
        inst = build_instance(resources, demand, edges)
        if inst.groups and inst.resources:
            return inst


def random_admissible_prices(inst, rng) -> dict[str, float]:
    prices = {}
    for v in inst.groups:
        r = inst.demand[v].response
        dom = r.domain
        if dom.hi is not None:
            prices[v] = float(rng.uniform(dom.lo, dom.hi))
        else:
            prices[v] = float(rng.uniform(r.center - 2 * r.width, r.center + 3 * r.width))
    return prices


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
