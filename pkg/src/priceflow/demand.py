"""Mean demand maps and the revenue cost curves built from them.

For a group with count n and response p, the mean demand is
xi(x) = n * p(x), a strictly decreasing map from the price domain onto
n times the response range. Pricing works with its inverse: the revenue
cost curve z -> -xi^{-1}(z) * z is convex whenever the response has a
non-increasing hazard ratio, which is what makes the flow reduction a
convex problem.

All functions here are pure over immutable models; sampling takes an
explicit generator owned by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .instance import DemandModel


class PriceStatus(Enum):
    INTERIOR = "interior"
    CLAMPED_CEILING = "clamped_ceiling"
    MARKET_CLOSED = "market_closed"


#: Relative demand level below which a group is treated as closed.
DEFAULT_Z_FLOOR_REL = 1e-9

#: Relative clamp below an unattained range supremum.
CEILING_REL = 1e-9


def mean_demand(model: DemandModel, x: float) -> float:
    """xi(x) = n * p(x) for a price x in the domain, clamped to [0, n * sup p]."""
    if not model.domain.contains(x):
        raise DomainError(f"price {x} outside domain of model")
    raw = model.count * float(model.response.prob(x))
    return min(max(raw, 0.0), model.count * float(model.response.range_sup))


def mean_demand_derivative(model: DemandModel, x: float) -> float:
    if not model.domain.contains(x):
        raise DomainError(f"price {x} outside domain of model")
    return model.count * float(model.response.deriv(x))


def demand_sup(model: DemandModel) -> tuple[float, bool]:
    """Supremum of the mean-demand range and whether it is attained."""
    return model.count * float(model.response.range_sup), bool(model.response.sup_attained)


def effective_demand_cap(model: DemandModel) -> float:
    """Largest mean-demand level the flow network may route to this group.

    When the supremum of the range is not attained (open interval), the
    cap is pulled just below it so the inverse price stays finite.
    """
    sup, attained = demand_sup(model)
    return sup if attained else (1.0 - CEILING_REL) * sup


def inverse_mean_demand(
    model: DemandModel, z: float, z_floor: float | None = None
) -> tuple[float, PriceStatus]:
    """The unique price x with xi(x) = z, with explicit boundary policy.

    Demand below the floor (default 1e-9 * n) means no participant is
    expected: the price is capped at xi^{-1}(floor) when zero demand is
    unreachable, or at the exact boundary price otherwise, and the
    status is MARKET_CLOSED. Demand at an unattained range supremum is
    clamped just below it with status CLAMPED_CEILING.
    """
    if model.count == 0:
        raise DomainError("model has zero demand count; no price is defined")
    n = model.count
    sup, attained = demand_sup(model)
    tol = 1e-9 * max(1.0, sup)
    if z < -tol or z > sup + tol:
        raise DomainError(f"demand level {z} outside [0, {sup}]")
    if z_floor is None:
        z_floor = DEFAULT_Z_FLOOR_REL * n

    if z < z_floor:
        if model.response.zero_attained:
            price = float(model.response.inverse_prob(max(z, 0.0) / n))
        else:
            price = float(model.response.inverse_prob(z_floor / n))
        return price, PriceStatus.MARKET_CLOSED
    ceiling = (1.0 - CEILING_REL) * sup
    if not attained and z > ceiling:
        return float(model.response.inverse_prob(ceiling / n)), PriceStatus.CLAMPED_CEILING
    z = min(z, sup)
    return float(model.response.inverse_prob(z / n)), PriceStatus.INTERIOR


def revenue_cost(model: DemandModel, z: float) -> float:
    """Cost -xi^{-1}(z) * z of routing mean demand z, extended by 0 at z = 0.

    The extension is the unique continuous one: for responses whose
    range is open at 0 the inverse price diverges, but z * xi^{-1}(z)
    still vanishes as z -> 0.
    """
    sup, attained = demand_sup(model)
    tol = 1e-9 * max(1.0, sup)
    if z < -tol or z > sup + tol:
        raise DomainError(f"demand level {z} outside [0, {sup}]")
    if z <= 0.0:
        return 0.0
    if not attained and z >= sup:
        raise DomainError(f"demand level {z} at unattained supremum {sup}")
    return -float(model.response.inverse_prob(min(z, sup) / model.count)) * z


# ---------------------------------------------------------------------------
# Cost curves for flow arcs. The solver only needs vectorized evaluation
# on grid points inside a declared domain plus a kind tag; linear and
# zero kinds let it take constant-marginal shortcuts.


@dataclass(frozen=True)
class ZeroCurve:
    kind = "zero"

    def evaluate(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class LinearCurve:
    """cost(z) = slope * z."""

    slope: float
    kind = "linear"

    def evaluate(self, z):
        return self.slope * np.asarray(z, dtype=float)


@dataclass(frozen=True)
class RevenueCurve:
    """cost(z) = -xi^{-1}(z) * z on [0, effective cap]; convex under the
    model's hazard-ratio condition."""

    model: DemandModel
    kind = "revenue"

    @property
    def z_max(self) -> float:
        return effective_demand_cap(self.model)

    def evaluate(self, z):
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        n = self.model.count
        out = np.zeros_like(z)
        pos = z > 0.0
        if np.any(pos):
            prices = np.asarray(self.model.response.inverse_prob(z[pos] / n), dtype=float)
            out[pos] = -prices * z[pos]
        return float(out[0]) if scalar else out


def check_revenue_convexity(model: DemandModel, num_points: int = 1000) -> float:
    """Most negative second difference of the revenue cost on a uniform grid.

    Nonnegative (up to -1e-7 times the cost scale) certifies convexity.
    """
    curve = RevenueCurve(model)
    zs = np.linspace(0.0, curve.z_max, num_points)
    vals = curve.evaluate(zs)
    second = np.diff(vals, 2)
    return float(second.min(initial=0.0))


# ---------------------------------------------------------------------------
# Sampling and probability mass


def sample_capacity(model: DemandModel, x: float, rng: np.random.Generator) -> int:
    """Draw a realized capacity at price x from the model's family."""
    if not model.domain.contains(x):
        raise DomainError(f"price {x} outside domain of model")
    p = float(np.clip(model.response.prob(x), 0.0, 1.0))
    if model.family == "binomial":
        return int(rng.binomial(model.count, p))
    return int(rng.poisson(model.count * p))


def capacity_pmf(
    model: DemandModel, x: float, poisson_eps: float = 1e-9
) -> tuple[np.ndarray, np.ndarray, float]:
    """Support, probabilities, and truncated tail mass of the capacity at x.

    Binomial supports are exact; Poisson supports stop at the smallest K
    whose remaining tail mass is at most ``poisson_eps``.
    """
    p = float(np.clip(model.response.prob(x), 0.0, 1.0))
    if model.family == "binomial":
        n = model.count
        ks = np.arange(n + 1)
        probs = np.array(
            [math.comb(n, k) * p**k * (1.0 - p) ** (n - k) for k in ks], dtype=float
        )
        return ks, probs, 0.0
    lam = model.count * p
    if lam == 0.0:
        return np.array([0]), np.array([1.0]), 0.0
    probs = [math.exp(-lam)]
    cum = probs[0]
    k = 0
    k_max = int(lam + 60.0 * math.sqrt(lam) + 100)
    while 1.0 - cum > poisson_eps and k < k_max:
        k += 1
        probs.append(probs[-1] * lam / k)
        cum += probs[-1]
    return np.arange(k + 1), np.array(probs, dtype=float), max(0.0, 1.0 - cum)
