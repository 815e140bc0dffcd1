"""Synthetic instance generators for the two reference market shapes.

Both generators are deterministic given a seed and record their
parameters in the instance metadata so outputs are clearly labeled as
synthetic. Geometry is invented (points uniform in a square region); it
stands in for proprietary trip data while keeping the same cost and
demand structure.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .instance import DemandModel, MarketInstance, build_instance
from .responses import LinearResponse, LogisticResponse

#: Opportunity cost per hour of a busy vehicle; edge weights are
#: w = -RIDEHAIL_COST_RATE * (hours to serve the request).
RIDEHAIL_COST_RATE = 18.0

#: Sigmoid shape constants for fare acceptance.
RIDEHAIL_BETA = 1.3
RIDEHAIL_GAMMA = 0.3 * np.sqrt(3.0) / np.pi

#: Sigmoid shape constants for wage acceptance.
CROWD_BETA = 1.25
CROWD_GAMMA = 0.25 / np.pi


def generate_ridehail(
    seed: int,
    num_taxis: int,
    num_groups: int,
    *,
    response: str = "linear",
    region_km: float = 5.0,
    speed_kmh: float = 30.0,
    fare_per_km: float = 10.0,
    centroid_noise_km: float = 0.0,
) -> MarketInstance:
    """Taxis and requester groups scattered uniformly in a square region.

    Each taxi has unit capacity. Each group v draws one potential
    requester (n = 1, binomial family) whose acceptance falls with the
    fare; the base fare q_v is proportional to the trip distance. Edge
    weights are the negated time cost for taxi u to serve group v:
    w = -18 * (pickup + trip distance) / speed.
    """
    if num_taxis < 1 or num_groups < 1:
        raise InputError("need at least one taxi and one group")
    if response not in ("linear", "logistic"):
        raise InputError(f"unknown response form {response!r}")
    rng = np.random.default_rng(seed)

    taxis = rng.uniform(0.0, region_km, size=(num_taxis, 2))
    origins = rng.uniform(0.0, region_km, size=(num_groups, 2))
    dests = rng.uniform(0.0, region_km, size=(num_groups, 2))
    if centroid_noise_km > 0.0:
        taxis = taxis + rng.normal(0.0, centroid_noise_km, size=taxis.shape)
        origins = origins + rng.normal(0.0, centroid_noise_km, size=origins.shape)
        dests = dests + rng.normal(0.0, centroid_noise_km, size=dests.shape)

    trip_dist = np.linalg.norm(dests - origins, axis=1)

    resources = {f"taxi{i}": 1 for i in range(num_taxis)}
    demand = {}
    edges = []
    for j in range(num_groups):
        name = f"req{j}"
        q = float(fare_per_km * max(trip_dist[j], 0.1))
        if response == "linear":
            resp = LinearResponse(q=q)
        else:
            resp = LogisticResponse(q=q, beta=RIDEHAIL_BETA, gamma=float(RIDEHAIL_GAMMA))
        demand[name] = DemandModel(family="binomial", count=1, response=resp)
        for i in range(num_taxis):
            pickup = float(np.linalg.norm(taxis[i] - origins[j]))
            tau_hours = (pickup + float(trip_dist[j])) / speed_kmh
            edges.append((f"taxi{i}", name, -RIDEHAIL_COST_RATE * tau_hours))

    meta = {
        "generator": "ridehail",
        "synthetic": True,
        "seed": seed,
        "params": {
            "num_taxis": num_taxis,
            "num_groups": num_groups,
            "response": response,
            "region_km": region_km,
            "speed_kmh": speed_kmh,
            "fare_per_km": fare_per_km,
            "centroid_noise_km": centroid_noise_km,
        },
    }
    return build_instance(resources, demand, edges, metadata=meta)


def generate_crowdsourcing(
    seed: int,
    num_tasks: int,
    num_worker_types: int,
    *,
    response: str = "linear",
    family: str = "poisson",
    max_task_capacity: int = 3,
    max_worker_count: int = 3,
    edge_density: float = 1.0,
) -> MarketInstance:
    """Tasks with integer capacities matched to worker types paid negative prices.

    Edge weights in [0, 1] proxy per-worker correct-answer rates. Wages
    are negative: q_v ~ Uniform[-0.4, -0.1]. The demand family is
    selectable; the binomial family uses n = 1, the poisson family draws
    n in 1..max_worker_count.
    """
    if num_tasks < 1 or num_worker_types < 1:
        raise InputError("need at least one task and one worker type")
    if response not in ("linear", "sigmoid"):
        raise InputError(f"unknown response form {response!r}")
    if family not in ("binomial", "poisson"):
        raise InputError(f"unknown family {family!r}")
    if not 0.0 < edge_density <= 1.0:
        raise InputError("edge_density must be in (0, 1]")
    rng = np.random.default_rng(seed)

    resources = {
        f"task{i}": int(rng.integers(1, max_task_capacity + 1)) for i in range(num_tasks)
    }
    demand = {}
    for j in range(num_worker_types):
        q = float(rng.uniform(-0.4, -0.1))
        if response == "linear":
            resp = LinearResponse(q=q)
        else:
            resp = LogisticResponse(q=q, beta=CROWD_BETA, gamma=float(CROWD_GAMMA))
        n = 1 if family == "binomial" else int(rng.integers(1, max_worker_count + 1))
        demand[f"worker{j}"] = DemandModel(family=family, count=n, response=resp)

    edges = []
    for i in range(num_tasks):
        for j in range(num_worker_types):
            if edge_density < 1.0 and rng.random() > edge_density:
                continue
            edges.append((f"task{i}", f"worker{j}", float(rng.uniform(0.0, 1.0))))

    meta = {
        "generator": "crowdsourcing",
        "synthetic": True,
        "seed": seed,
        "params": {
            "num_tasks": num_tasks,
            "num_worker_types": num_worker_types,
            "response": response,
            "family": family,
            "max_task_capacity": max_task_capacity,
            "max_worker_count": max_worker_count,
            "edge_density": edge_density,
        },
    }
    return build_instance(resources, demand, edges, metadata=meta)
