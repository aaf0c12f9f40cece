"""High-probability bounds on the uniform estimation error sup [u - u_hat].

All functions are pure and evaluate closed forms in double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from acperf.allocation import Allocation
from acperf.errors import AcperfError, HypothesisError
from acperf.estimation import tau_squared
from acperf.scenario import MomentSummary

METHODS = ("tail", "finite", "finite-even", "infinite")
_EXP_FLOOR = -745.0  # below this exp() underflows to 0 in double precision


@dataclass(frozen=True)
class BoundInput:
    """Everything a bound needs.

    ``moments`` describe the worst-case configuration (largest tau^2);
    ``C`` is the utility range U - L.  ``m`` is only read by the finite
    bounds, ``h``/``lipschitz``/``radius`` only by the infinite bound.
    """

    delta: float
    alloc: Allocation
    C: float
    moments: MomentSummary
    m: int | None = None
    h: int | None = None
    lipschitz: float | None = None
    radius: float | None = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise AcperfError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.C > 0:
            raise AcperfError(f"C must be positive, got {self.C}")
        if self.alloc.total < 1:
            raise AcperfError("bounds need N >= 1")

    @property
    def N(self) -> int:
        return self.alloc.total

    @property
    def n(self) -> int:
        return self.alloc.n_max

    @property
    def tau_sq(self) -> float:
        return tau_squared(self.moments, self.alloc)

    def echo(self) -> dict:
        return {
            "delta": self.delta, "m": self.m, "N": self.N, "K": self.alloc.K,
            "n": self.n, "sum_sq": self.alloc.sum_sq, "C": self.C,
            "within_var": self.moments.within_var, "across_var": self.moments.across_var,
            "tau_sq": self.tau_sq, "h": self.h, "lipschitz": self.lipschitz,
            "radius": self.radius,
        }


@dataclass(frozen=True)
class BoundResult:
    epsilon: float
    method: str
    inputs: dict

    def __post_init__(self):
        if self.method not in METHODS:
            raise AcperfError(f"unknown bound method {self.method!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise AcperfError(f"bound evaluated to {self.epsilon!r}")

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "method": self.method, "inputs": dict(self.inputs)}


def log_deviation_tail(epsilon, N, tau_sq, n, C) -> float:
    """Natural log of :func:`deviation_tail`."""
    if not epsilon > 0:
        raise AcperfError("epsilon must be positive")
    denom = 2.0 * tau_sq + 2.0 * n * C * epsilon / 3.0
    if denom <= 0:
        return -math.inf
    return -N * epsilon**2 / denom


def deviation_tail(epsilon, N, tau_sq, n, C) -> float:
    """Bernstein-type bound on P(u - u_hat >= epsilon) for a single configuration.

    Returns ``exp(-N eps^2 / (2 tau^2 + 2 n C eps / 3))``.
    """
    e = log_deviation_tail(epsilon, N, tau_sq, n, C)
    return 0.0 if e < _EXP_FLOOR else math.exp(e)


def _log_m_over_delta(m, delta) -> float:
    if m is None:
        raise AcperfError("the finite bound needs the configuration count m")
    if m < 1:
        raise AcperfError(f"m must be at least 1, got {m}")
    # math.log accepts arbitrarily large ints, so m = 10**30 is fine
    return math.log(m) - math.log(delta)


def finite_bound(inp: BoundInput) -> BoundResult:
    """Uniform error bound over a finite configuration set of size m."""
    L = _log_m_over_delta(inp.m, inp.delta)
    N, a, mo = inp.N, inp.alloc, inp.moments
    var = mo.within_var / N + a.sum_sq / N**2 * mo.across_var
    eps = 2.0 * inp.n * inp.C * L / (3.0 * N) + math.sqrt(2.0 * L * var)
    return BoundResult(eps, "finite", inp.echo())


def finite_even_bound(inp: BoundInput) -> BoundResult:
    """Finite bound specialised to the even allocation when K divides N."""
    L = _log_m_over_delta(inp.m, inp.delta)
    N, K = inp.N, inp.alloc.K
    if N % K or len(set(inp.alloc.counts)) != 1:
        raise AcperfError(f"finite-even needs the even allocation with K | N (N={N}, K={K})")
    mo = inp.moments
    eps = 2.0 * inp.C * L / (3.0 * K) + math.sqrt(2.0 * L * (mo.within_var / N + mo.across_var / K))
    return BoundResult(eps, "finite-even", inp.echo())


def covering_ball(eta, radius, h) -> float:
    """Upper bound on the log covering number of the radius-R ball in R^h."""
    if not eta > 0 or not radius > 0:
        raise AcperfError("eta and radius must be positive")
    if h < 1:
        raise AcperfError("h must be a positive integer")
    return h * math.log(3.0 * radius / eta)


def covering_function_class(eta, radius, lipschitz, h) -> float:
    """Log covering number bound for the utility class under the sup metric."""
    if not lipschitz > 0:
        raise AcperfError("lipschitz must be positive")
    return covering_ball(eta / lipschitz, radius, h)


def solve_inequality(k, l, b, c) -> float:
    """Return eps0 with eps0**k * l + b * ln(eps0) >= c.

    eps0 = ((c + b * max(ln l - ln c, 0) / k) / l) ** (1/k).  The left side
    is increasing in eps, so the result is nudged up by whole ulps in the
    rare case rounding leaves it a hair short of c.  Returns inf when the
    root overflows a double.
    """
    if min(k, l, b, c) <= 0:
        raise AcperfError("k, l, b and c must all be positive")
    base = (c + b * max(math.log(l) - math.log(c), 0.0) / k) / l
    try:
        eps = base ** (1.0 / k)
    except OverflowError:
        return math.inf  # root lies beyond double range; inf satisfies the inequality
    if eps == 0.0:
        raise AcperfError(f"eps0 underflows double precision (k={k}, l={l}, b={b}, c={c})")
    for _ in range(64):
        try:
            if eps**k * l + b * math.log(eps) >= c:
                break
        except OverflowError:
            break
        eps = math.nextafter(eps, math.inf)
    return eps


def infinite_bound(inp: BoundInput) -> BoundResult:
    """Uniform error bound for a configuration space inside a ball in R^h.

    Requires h * ln(12 * lipschitz * radius) >= 1.
    """
    if inp.h is None or inp.lipschitz is None or inp.radius is None:
        raise AcperfError("the infinite bound needs h, lipschitz and radius")
    if inp.h < 1 or not inp.lipschitz > 0 or not inp.radius > 0:
        raise AcperfError("h, lipschitz and radius must be positive")
    complexity = inp.h * math.log(12.0 * inp.lipschitz * inp.radius)
    if complexity < 1:
        raise HypothesisError(
            f"h*ln(12*lipschitz*radius) = {complexity:.6g} < 1; the infinite-space bound does not apply")
    scale = 8.0 * inp.tau_sq + 4.0 * inp.n * inp.C / 3.0
    radicand = (complexity + math.log(1.0 / inp.delta)
                + 0.5 * inp.h * math.log(inp.N / scale)) * scale / inp.N
    if radicand < 0:
        raise HypothesisError(f"N={inp.N} is too small for the infinite-space bound (negative radicand)")
    return BoundResult(math.sqrt(radicand), "infinite", inp.echo())


def evaluate(method: str, inp: BoundInput, epsilon: float | None = None) -> BoundResult:
    """Dispatch by method name; ``tail`` needs ``epsilon`` and returns the probability."""
    if method == "finite":
        return finite_bound(inp)
    if method == "finite-even":
        return finite_even_bound(inp)
    if method == "infinite":
        return infinite_bound(inp)
    if method == "tail":
        if epsilon is None:
            raise AcperfError("the tail method needs --epsilon")
        p = deviation_tail(epsilon, inp.N, inp.tau_sq, inp.n, inp.C)
        return BoundResult(p, "tail", {**inp.echo(), "epsilon": epsilon})
    raise AcperfError(f"unknown bound method {method!r}; choose from {METHODS}")
