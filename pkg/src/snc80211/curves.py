"""Curve and bounding-function algebra for stochastic tail bounds.

Traffic and service processes are summarized by a linear envelope ``r * t``
paired with a decreasing tail-bound function ("bounding function"). Two
composition rules combine an arrival bound with a service bound: a min-plus
convolution for the general case and a complemented Stieltjes convolution
when the two processes are independent.

Bounding functions clamp to [0, 1] on evaluation but keep their raw
exponential parameters so the convolutions can use closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

__all__ = [
    "SigmaRho",
    "BoundingFunction",
    "CurveWithBound",
    "ta_curve_from_sigma_rho",
    "vb_curve_from_sigma_rho",
    "vb_curve_martingale",
    "ta_to_vb",
    "minplus_convolve",
    "independent_tail_convolve",
    "independent_tail_sum_uncomplemented",
]

CURVE_KINDS = ("ta-arrival", "vb-arrival", "ws-service")


@dataclass(frozen=True)
class SigmaRho:
    """An MGF envelope triple (theta, sigma, rho).

    Encodes (1/theta) * log E exp(theta * X(s, s+t)) <= rho * t + sigma for
    all windows, i.e. the process is (sigma(theta), rho(theta))-upper
    constrained at this theta.
    """

    theta: float
    sigma: float
    rho: float

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")


@dataclass(frozen=True)
class BoundingFunction:
    """A nonincreasing tail bound, exponential ``a * exp(-theta x)`` or tabulated.

    ``evaluate`` clamps to [0, 1]; ``raw`` returns the unclamped value that
    the convolution algebra works with.
    """

    prefactor: float = 1.0
    decay: float = 1.0
    table: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.table is None:
            if self.prefactor < 0:
                raise ValueError("prefactor must be nonnegative")
            if not self.decay > 0:
                raise ValueError("decay must be positive")
        else:
            vals = tuple(float(v) for v in self.table)
            if not vals:
                raise ValueError("empty table")
            if any(b > a + 1e-12 for a, b in zip(vals, vals[1:])):
                raise ValueError("tabulated bound must be nonincreasing")
            object.__setattr__(self, "table", vals)

    @classmethod
    def exponential(cls, prefactor: float, decay: float) -> "BoundingFunction":
        return cls(prefactor=prefactor, decay=decay)

    @classmethod
    def tabulated(cls, values) -> "BoundingFunction":
        return cls(table=tuple(values))

    @property
    def is_exponential(self) -> bool:
        return self.table is None

    def raw(self, x) -> float:
        """Unclamped value at x >= 0 (tabulated bounds extend with their last value)."""
        if x < 0:
            raise ValueError("x must be nonnegative")
        if self.table is None:
            return self.prefactor * math.exp(-self.decay * x)
        i = int(x)
        return self.table[min(i, len(self.table) - 1)]

    def evaluate(self, x) -> float:
        """Value at x clamped to [0, 1], a usable tail probability."""
        return min(1.0, max(0.0, self.raw(x)))


@dataclass(frozen=True)
class CurveWithBound:
    """A linear curve ``rate * t`` with its tail-bound function.

    kind is one of 'ta-arrival' (traffic-amount bound), 'vb-arrival'
    (virtual-backlog bound) or 'ws-service' (weak stochastic service).
    """

    rate: float
    bound: BoundingFunction
    kind: str

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"kind must be one of {CURVE_KINDS}")
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise ValueError("rate must be finite and nonnegative")

    def curve(self, t) -> float:
        return self.rate * t


def ta_curve_from_sigma_rho(sr: SigmaRho, r: float) -> CurveWithBound:
    """Traffic-amount arrival curve r*t with bound exp(theta*sigma) * exp(-theta*x).

    Requires r >= rho; below the envelope rate the bound does not hold.
    """
    if r < sr.rho:
        raise ValueError(f"ta curve needs rate r >= rho, got r={r} < rho={sr.rho}")
    a = math.exp(sr.theta * sr.sigma)
    return CurveWithBound(rate=r, bound=BoundingFunction.exponential(a, sr.theta), kind="ta-arrival")


def vb_curve_from_sigma_rho(sr: SigmaRho, r: float) -> CurveWithBound:
    """Virtual-backlog arrival curve with the geometric-sum prefactor.

    bound(x) = exp(theta*sigma) / (1 - exp(theta*(rho - r))) * exp(-theta*x),
    valid only for r strictly above rho (the prefactor diverges at r = rho).
    """
    if r <= sr.rho:
        raise ValueError(f"vb curve needs rate r > rho strictly, got r={r}, rho={sr.rho}")
    # 1 - e^{theta(rho-r)} via expm1 for accuracy when r is close to rho
    denom = -math.expm1(sr.theta * (sr.rho - r))
    a = math.exp(sr.theta * sr.sigma) / denom
    return CurveWithBound(rate=r, bound=BoundingFunction.exponential(a, sr.theta), kind="vb-arrival")


def vb_curve_martingale(sr: SigmaRho, r: float) -> CurveWithBound:
    """Virtual-backlog curve with prefactor exactly 1, bound exp(-theta*x).

    Valid for processes with independent per-slot increments (a supermartingale
    argument removes the geometric prefactor); the caller asserts that
    property, it cannot be checked here. Requires r >= rho + sigma.
    """
    if r < sr.rho + sr.sigma:
        raise ValueError(
            f"martingale vb curve needs r >= rho + sigma, got r={r} < {sr.rho + sr.sigma}"
        )
    return CurveWithBound(rate=r, bound=BoundingFunction.exponential(1.0, sr.theta), kind="vb-arrival")


def ta_to_vb(curve: CurveWithBound, delta: float) -> CurveWithBound:
    """Convert a ta arrival curve to a vb one by relaxing the rate by delta.

    The vb bounding function is the tail sum f(x) + f(x+delta) + ... whose
    geometric closed form is a / (1 - exp(-theta*delta)); the rate becomes
    r + delta.
    """
    if curve.kind != "ta-arrival":
        raise ValueError("ta_to_vb expects a ta-arrival curve")
    if not curve.bound.is_exponential:
        raise ValueError("ta_to_vb needs an exponential bounding function")
    if delta <= 0:
        raise ValueError("delta must be positive")
    theta = curve.bound.decay
    a = curve.bound.prefactor / (-math.expm1(-theta * delta))
    return CurveWithBound(rate=curve.rate + delta, bound=BoundingFunction.exponential(a, theta), kind="vb-arrival")


def minplus_convolve(f: BoundingFunction, g: BoundingFunction, x: int) -> float:
    """Min-plus convolution min over 0<=y<=x of f(y) + g(x-y), clamped to [0,1].

    For two exponentials the minimum over real y is taken analytically: both
    endpoints plus the interior stationary point where the two derivatives
    cancel. Tabulated bounds fall back to integer-grid minimization.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if f.is_exponential and g.is_exponential:
        val = _minplus_exponential(f.prefactor, f.decay, g.prefactor, g.decay, x)
    else:
        val = min(f.raw(y) + g.raw(x - y) for y in range(int(x) + 1))
    return min(1.0, max(0.0, val))


def _minplus_exponential(a1, t1, a2, t2, x) -> float:
    if a1 == 0.0:
        return a2 * math.exp(-t2 * x)
    if a2 == 0.0:
        return a1 * math.exp(-t1 * x)
    ends = min(a1 + a2 * math.exp(-t2 * x), a1 * math.exp(-t1 * x) + a2)
    # stationary point of a1 e^{-t1 y} + a2 e^{-t2 (x-y)} in y
    ystar = (math.log((t1 * a1) / (t2 * a2)) + t2 * x) / (t1 + t2)
    if 0.0 < ystar < x:
        ends = min(ends, a1 * math.exp(-t1 * ystar) * (1.0 + t1 / t2))
    return ends


def independent_tail_convolve(f: BoundingFunction, g: BoundingFunction, x: int) -> float:
    """Tail bound for the sum of two independent quantities bounded by f and g.

    Uses the complemented Stieltjes form
        1 - sum_{k=0..x} (Gbar(k) - Gbar(k-1)) * Fbar(x-k)
    with Fbar(m) = max(0, 1 - f(m)), Gbar likewise and Gbar(-1) = 0. This
    equals the classical independent-sum bound
        g(x) + sum_k (g(k-1) - g(k)) * f(x-k)
    written with clamped f, g, and is nonincreasing in x.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    s = 0.0
    gbar_prev = 0.0
    for k in range(int(x) + 1):
        gbar_k = max(0.0, 1.0 - g.raw(k))
        dg = gbar_k - gbar_prev
        if dg != 0.0:
            fbar = max(0.0, 1.0 - f.raw(x - k))
            s += dg * fbar
        gbar_prev = gbar_k
    return min(1.0, max(0.0, 1.0 - s))


def independent_tail_sum_uncomplemented(f: BoundingFunction, g: BoundingFunction, x: int) -> float:
    """Diagnostic only: the uncomplemented sum sum_k (Gbar(k)-Gbar(k-1)) Fbar(x-k).

    This quantity is nondecreasing in x and tends to one, so it is not a
    valid tail bound; it is kept solely so the two accumulations can be
    compared side by side. Do not use it as a bound.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    s = 0.0
    gbar_prev = 0.0
    for k in range(int(x) + 1):
        gbar_k = max(0.0, 1.0 - g.raw(k))
        s += (gbar_k - gbar_prev) * max(0.0, 1.0 - f.raw(x - k))
        gbar_prev = gbar_k
    return s
