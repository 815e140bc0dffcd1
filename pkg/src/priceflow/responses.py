"""Price-response curves: the acceptance probability of a group as a function of price.

Every response is strictly decreasing, maps its price domain into [0, 1],
and exposes a closed-form (or bisected) inverse on its range. Supported
kinds:

* ``LinearResponse`` - affine ramp from 1 down to 0 over an interval
  scaled by a base price ``q`` (positive q for fares, negative q for wages).
* ``LogisticResponse`` - sigmoid acceptance with center ``beta * q`` and
  width ``gamma * |q|``, defined on an interval unbounded above.
* ``TabulatedResponse`` - monotone cubic interpolation of (price, prob)
  samples, for plugging in arbitrary curves without code changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import expit, logit

from .errors import DomainError, InputError, ParseError

#: Relative slack used when testing domain membership, so prices produced
#: by float round-trips of an endpoint are still accepted.
DOMAIN_EPS = 1e-9


@dataclass(frozen=True)
class Interval:
    """A price domain: closed at finite endpoints, ``None`` means unbounded."""

    lo: float | None
    hi: float | None

    def __post_init__(self):
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise InputError(f"empty price interval [{self.lo}, {self.hi}]")

    def contains(self, x: float) -> bool:
        scale = max(abs(self.lo or 0.0), abs(self.hi or 0.0), 1.0)
        tol = DOMAIN_EPS * scale
        if self.lo is not None and x < self.lo - tol:
            return False
        if self.hi is not None and x > self.hi + tol:
            return False
        return True

    def clip(self, x: float) -> float:
        if self.lo is not None and x < self.lo:
            return self.lo
        if self.hi is not None and x > self.hi:
            return self.hi
        return x

    @property
    def bounded_above(self) -> bool:
        return self.hi is not None


@dataclass(frozen=True)
class LinearResponse:
    """p(x) = 3 - 2x/q on [q, 1.5q] for q > 0, p(x) = 2x/q - 2 on [1.5q, q] for q < 0.

    Both branches fall from 1 at the low end of the domain to 0 at the
    high end, with slope -2/|q|.
    """

    q: float

    kind = "linear"

    def __post_init__(self):
        if not self.q or not math.isfinite(self.q):
            raise InputError("linear response needs a nonzero finite base price q")

    @property
    def domain(self) -> Interval:
        if self.q > 0:
            return Interval(self.q, 1.5 * self.q)
        return Interval(1.5 * self.q, self.q)

    def prob(self, x):
        if self.q > 0:
            return 3.0 - 2.0 * np.asarray(x, dtype=float) / self.q
        return 2.0 * np.asarray(x, dtype=float) / self.q - 2.0

    def deriv(self, x):
        return np.full_like(np.asarray(x, dtype=float), -2.0 / abs(self.q))

    def inverse_prob(self, z):
        z = np.asarray(z, dtype=float)
        if self.q > 0:
            return (3.0 - z) * self.q / 2.0
        return (z + 2.0) * self.q / 2.0

    # Range endpoints: p attains both 1 (at the low end) and 0 (at the top).
    range_sup = 1.0
    sup_attained = True
    zero_attained = True

    def params(self) -> dict:
        return {"q": self.q}


@dataclass(frozen=True)
class LogisticResponse:
    """p(x) = 1 - 1/(1 + exp(-(x - beta*q) / (gamma*|q|))).

    The domain is unbounded above; ``lo`` optionally bounds it below
    (e.g. nonnegative fares). p never reaches 0 or 1 on an unbounded
    domain, so the range is open at both ends.
    """

    q: float
    beta: float
    gamma: float
    lo: float | None = None

    kind = "logistic"

    def __post_init__(self):
        if not self.q or not math.isfinite(self.q):
            raise InputError("logistic response needs a nonzero finite base price q")
        if self.gamma <= 0:
            raise InputError("logistic response needs gamma > 0")

    @property
    def center(self) -> float:
        return self.beta * self.q

    @property
    def width(self) -> float:
        return self.gamma * abs(self.q)

    @property
    def domain(self) -> Interval:
        return Interval(self.lo, None)

    def prob(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.width
        return expit(-t)

    def deriv(self, x):
        p = self.prob(x)
        return -p * (1.0 - p) / self.width

    def inverse_prob(self, z):
        z = np.asarray(z, dtype=float)
        return self.center - self.width * logit(z)

    @property
    def range_sup(self) -> float:
        if self.lo is None:
            return 1.0
        return float(self.prob(self.lo))

    @property
    def sup_attained(self) -> bool:
        return self.lo is not None

    zero_attained = False

    def params(self) -> dict:
        out = {"q": self.q, "beta": self.beta, "gamma": self.gamma}
        if self.lo is not None:
            out["lo"] = self.lo
        return out


@dataclass(frozen=True)
class TabulatedResponse:
    """Monotone cubic (PCHIP) interpolation through (price, prob) samples.

    The samples must have strictly increasing prices. The inverse is
    obtained by bisection to an absolute tolerance of 1e-12 times the
    price scale, which assumes a decreasing curve; non-monotone tables
    can be constructed (the validator flags them) but cannot be inverted.
    """

    xs: tuple[float, ...]
    ps: tuple[float, ...]
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)
    _dinterp: PchipInterpolator = field(init=False, repr=False, compare=False)

    kind = "custom"

    def __post_init__(self):
        if len(self.xs) != len(self.ps) or len(self.xs) < 2:
            raise InputError("tabulated response needs >= 2 (price, prob) pairs")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise InputError("tabulated response prices must be strictly increasing")
        interp = PchipInterpolator(self.xs, self.ps)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())

    @property
    def domain(self) -> Interval:
        return Interval(self.xs[0], self.xs[-1])

    def prob(self, x):
        return self._interp(np.asarray(x, dtype=float))

    def deriv(self, x):
        return self._dinterp(np.asarray(x, dtype=float))

    def inverse_prob(self, z):
        scalar = np.isscalar(z)
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        tol = 1e-12 * max(1.0, abs(self.xs[-1] - self.xs[0]))
        out = np.array([self._bisect(zi, tol) for zi in zs])
        return float(out[0]) if scalar else out

    def _bisect(self, z: float, tol: float) -> float:
        lo, hi = self.xs[0], self.xs[-1]
        plo, phi = float(self.prob(lo)), float(self.prob(hi))
        if not phi <= z <= plo:
            raise DomainError(f"probability {z} outside tabulated range [{phi}, {plo}]")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if float(self.prob(mid)) >= z:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    @property
    def range_sup(self) -> float:
        return float(self.ps[0])

    sup_attained = True

    @property
    def zero_attained(self) -> bool:
        return self.ps[-1] <= 0.0

    def params(self) -> dict:
        return {"x": list(self.xs), "p": list(self.ps)}


RESPONSE_KINDS = {
    "linear": LinearResponse,
    "logistic": LogisticResponse,
    "custom": TabulatedResponse,
}


def response_from_params(kind: str, params: dict):
    """Build a response from its serialized (kind, params) form."""
    if kind == "linear":
        return LinearResponse(q=float(params["q"]))
    if kind == "logistic":
        lo = params.get("lo")
        return LogisticResponse(
            q=float(params["q"]),
            beta=float(params["beta"]),
            gamma=float(params["gamma"]),
            lo=None if lo is None else float(lo),
        )
    if kind == "custom":
        return TabulatedResponse(
            xs=tuple(float(v) for v in params["x"]),
            ps=tuple(float(v) for v in params["p"]),
        )
    raise ParseError(f"unknown response kind {kind!r}")
