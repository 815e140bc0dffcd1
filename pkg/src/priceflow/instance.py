"""Market data model: bipartite supply/demand instances with stochastic group capacities.

A :class:`MarketInstance` holds resource nodes with integer capacities,
participant-group nodes with a price-dependent demand model each, and
weighted edges giving the profit per match. Construction normalizes the
instance: isolated nodes, zero-count groups, and groups that cannot be
profitable at any admissible price are removed, with every removal
recorded in ``metadata["removals"]``.

Instances are immutable after construction and safe to share across
threads; all operations treat them as read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InputError, ParseError
from .responses import Interval, response_from_params

FAMILIES = ("binomial", "poisson")

#: Interior grid size used by the per-node analytic checks.
CHECK_GRID_POINTS = 101

#: Tolerance for the non-increasing hazard-ratio check.
LOG_CONCAVITY_TOL = 1e-9


class Edge(NamedTuple):
    u: str
    v: str
    w: float


@dataclass(frozen=True)
class DemandModel:
    """Stochastic capacity of one group: Bin(n, p(x)) or Po(n * p(x))."""

    family: str
    count: int
    response: object

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown demand family {self.family!r}")
        if self.count < 0 or self.count != int(self.count):
            raise InputError("demand count n must be a nonnegative integer")

    @property
    def domain(self) -> Interval:
        return self.response.domain


@dataclass
class MarketInstance:
    resources: list[str]
    groups: list[str]
    edges: list[Edge]
    capacities: dict[str, int]
    demand: dict[str, DemandModel]
    metadata: dict = field(default_factory=dict)

    def incident_edges(self, node: str) -> list[Edge]:
        return [e for e in self.edges if node in (e.u, e.v)]

    def group_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.v == v]

    def summary(self) -> str:
        return f"|U|={len(self.resources)} |V|={len(self.groups)} |E|={len(self.edges)}"


def build_instance(
    resources: dict[str, int],
    demand: dict[str, DemandModel],
    edges: list[tuple[str, str, float]],
    metadata: dict | None = None,
) -> MarketInstance:
    """Assemble and normalize a market instance.

    Structural errors (unknown endpoints, capacities < 1) raise
    :class:`InputError`. Nodes that cannot take part in any matching are
    removed and recorded rather than rejected: isolated nodes, groups
    with n = 0, and groups v where no admissible price exceeds
    -max(w_e) over the incident edges.
    """
    for u, c in resources.items():
        if int(c) != c or c < 1:
            raise InputError(f"capacity must be >= 1 (resource {u!r} has {c})")
    edge_list = []
    for u, v, w in edges:
        if u not in resources:
            raise InputError(f"edge ({u!r}, {v!r}) references unknown resource {u!r}")
        if v not in demand:
            raise InputError(f"edge ({u!r}, {v!r}) references unknown group {v!r}")
        edge_list.append(Edge(u, v, float(w)))

    removals: list[list[str]] = []
    active_u = set(resources)
    active_v = set(demand)

    for v, model in demand.items():
        if model.count == 0:
            active_v.discard(v)
            removals.append([v, "zero demand count"])

    # Removing one side can isolate the other, so sweep until stable.
    changed = True
    while changed:
        changed = False
        kept = [e for e in edge_list if e.u in active_u and e.v in active_v]
        for u in sorted(active_u):
            if not any(e.u == u for e in kept):
                active_u.discard(u)
                removals.append([u, "isolated"])
                changed = True
        for v in sorted(active_v):
            ev = [e for e in kept if e.v == v]
            if not ev:
                active_v.discard(v)
                removals.append([v, "isolated"])
                changed = True
                continue
            w_max = max(e.w for e in ev)
            dom = demand[v].domain
            # Need some admissible x with x + w_max > 0.
            if dom.hi is not None and dom.hi <= -w_max:
                active_v.discard(v)
                removals.append([v, "no profitable price"])
                changed = True

    meta = dict(metadata or {})
    if removals:
        meta["removals"] = meta.get("removals", []) + removals

    return MarketInstance(
        resources=sorted(active_u),
        groups=sorted(active_v),
        edges=[e for e in edge_list if e.u in active_u and e.v in active_v],
        capacities={u: int(resources[u]) for u in sorted(active_u)},
        demand={v: demand[v] for v in sorted(active_v)},
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# Validation


@dataclass
class NodeVerdict:
    node: str
    passed: bool
    checks: dict[str, bool]
    reasons: list[str]


@dataclass
class ValidationReport:
    verdicts: dict[str, NodeVerdict]
    flagged_for_removal: list[str]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values()) and not self.flagged_for_removal


def _check_grid(model: DemandModel) -> np.ndarray:
    """Interior evaluation grid; unbounded domains are probed out to a
    large multiple of the response scale."""
    dom = model.domain
    if model.response.kind == "logistic":
        # Stay within +-25 widths: beyond that the acceptance probability
        # saturates in float and its derivative rounds to exactly zero.
        center, width = model.response.center, model.response.width
        lo = dom.lo if dom.lo is not None else center - 25.0 * width
        hi = center + 25.0 * width
    else:
        lo, hi = dom.lo, dom.hi
    span = hi - lo
    return np.linspace(lo + 1e-6 * span, hi - 1e-6 * span, CHECK_GRID_POINTS)


def validate_node(name: str, model: DemandModel) -> NodeVerdict:
    grid = _check_grid(model)
    p = np.asarray(model.response.prob(grid), dtype=float)
    dp = np.asarray(model.response.deriv(grid), dtype=float)
    checks = {}
    reasons = []

    checks["range"] = bool(np.all((p >= -1e-12) & (p <= 1.0 + 1e-12)))
    if not checks["range"]:
        reasons.append("response evaluates outside [0, 1]")

    checks["monotone"] = bool(np.all(dp < 0.0))
    if not checks["monotone"]:
        reasons.append("response is not strictly decreasing (increasing)")

    if checks["range"] and checks["monotone"]:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(p > 0, dp / np.where(p > 0, p, 1.0), -np.inf)
        diffs = np.diff(ratio)
        tol = LOG_CONCAVITY_TOL * (1.0 + np.abs(ratio[:-1]))
        checks["log_concave"] = bool(np.all(diffs <= tol))
        if not checks["log_concave"]:
            reasons.append("hazard ratio p'/p increases somewhere")
    else:
        checks["log_concave"] = False

    dom = model.domain
    if dom.hi is not None:
        boundary_ok = abs(float(model.response.prob(dom.hi))) <= 1e-9
    else:
        # Probe far beyond the curve scale: acceptance must vanish.
        boundary_ok = float(model.response.prob(grid[-1])) <= 1e-6
    checks["boundary"] = boundary_ok
    if not boundary_ok:
        reasons.append("acceptance probability does not vanish at the top of the domain")

    passed = all(checks.values())
    return NodeVerdict(node=name, passed=passed, checks=checks, reasons=reasons)


def validate_instance(inst: MarketInstance) -> ValidationReport:
    """Run the per-node analytic checks and flag structurally dead nodes.

    Each group is checked on a grid of >= 100 interior points for
    monotonicity (sampled derivative), log-concavity of the hazard ratio
    within ``LOG_CONCAVITY_TOL``, the [0, 1] range, and a vanishing
    acceptance probability at the top of the domain.
    """
    verdicts = {v: validate_node(v, m) for v, m in inst.demand.items()}
    flagged = []
    for u in inst.resources:
        if not any(e.u == u for e in inst.edges):
            flagged.append(u)
    for v in inst.groups:
        ev = inst.group_edges(v)
        if not ev:
            flagged.append(v)
            continue
        dom = inst.demand[v].domain
        w_max = max(e.w for e in ev)
        if dom.hi is not None and dom.hi <= -w_max:
            flagged.append(v)
        if inst.demand[v].count == 0:
            flagged.append(v)
    return ValidationReport(verdicts=verdicts, flagged_for_removal=flagged)


# ---------------------------------------------------------------------------
# File format
#
# JSON with top-level keys:
#   resources: [{"id", "capacity"}]
#   groups:    [{"id", "family", "n", "response": {"kind", "params", "domain"}}]
#   edges:     [{"u", "v", "w"}]
#   metadata:  free-form dict (generator provenance, removal records)
# Reals are serialized with full shortest-roundtrip precision.


def _domain_to_json(dom: Interval) -> list:
    return [dom.lo, dom.hi]


def write_instance(inst: MarketInstance, path: str | Path) -> None:
    doc = {
        "resources": [{"id": u, "capacity": inst.capacities[u]} for u in inst.resources],
        "groups": [
            {
                "id": v,
                "family": inst.demand[v].family,
                "n": inst.demand[v].count,
                "response": {
                    "kind": inst.demand[v].response.kind,
                    "params": inst.demand[v].response.params(),
                    "domain": _domain_to_json(inst.demand[v].domain),
                },
            }
            for v in inst.groups
        ],
        "edges": [{"u": e.u, "v": e.v, "w": e.w} for e in inst.edges],
        "metadata": inst.metadata,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_instance(path: str | Path) -> MarketInstance:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc

    try:
        resources = {r["id"]: r["capacity"] for r in doc["resources"]}
        demand = {}
        for g in doc["groups"]:
            response = response_from_params(g["response"]["kind"], g["response"]["params"])
            demand[g["id"]] = DemandModel(family=g["family"], count=int(g["n"]), response=response)
        edges = [(e["u"], e["v"], float(e["w"])) for e in doc["edges"]]
    except KeyError as exc:
        raise ParseError(f"{path}: missing field {exc.args[0]!r}") from exc

    for r in doc["resources"]:
        c = r["capacity"]
        if not isinstance(c, int) or c < 1:
            raise InputError(f"{path}: capacity must be >= 1 (resource {r['id']!r} has {c!r})")

    return build_instance(resources, demand, edges, metadata=doc.get("metadata"))
