"""Closed-form envelope constants and measure bounds, with exact checkers.

Everything here is a direct formula evaluation: the product-envelope
constants controlling |T_w^n(x) - c| along all-bad words, the truncated
series bound on the stationary mass of small sets in the finite regime,
its logarithmic majorant, and the escape-time constants used by the
return-time lower bound.  The envelope checks run in exact log-distance
arithmetic so superexponentially deep excursions are compared without
underflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from rimlab.maps import MapKind, MoebiusForm, PowerForm
from rimlab.system import RandomSystem, delta_neighborhood

__all__ = [
    "UndefinedEnvelope",
    "EnvelopeConstants",
    "EnvelopeCheck",
    "BoundParameters",
    "envelope_constants",
    "check_envelope",
    "bad_word_log_distance",
    "bound_parameters",
    "kappa_exponent",
    "measure_bound",
    "log_bound",
    "refined_measure_bound",
    "fit_constant",
    "escape_constants",
    "exponent_chain_ratio",
]

TAIL_EPS = 1e-12


class UndefinedEnvelope(ValueError):
    """Requested an envelope constant outside its domain of definition."""


@dataclass(frozen=True)
class EnvelopeConstants:
    """Product-envelope constants for all-bad words.

    k_tilde/m_tilde bound |T_w^n(x) - c| between (k_tilde |x-c|)^L and
    (m_tilde |x-c|)^L with L the product of the word's orders; they exist
    only when every bad order exceeds 1.  With order-1 maps present the
    lower bound uses k_hat with per-map exponents max(eta_b, ell_b) and the
    upper bound uses m_hat (defined when some order exceeds 1) on the
    contraction neighborhood of radius delta.
    """

    k_tilde: Optional[float]
    m_tilde: Optional[float]
    m_hat: Optional[float]
    k_hat: float
    eta: tuple[float, ...]
    eta_hat: tuple[float, ...]
    delta: float


def envelope_constants(system: RandomSystem,
                       eta: Optional[Sequence[float]] = None) -> EnvelopeConstants:
    """Closed-form constants from the per-map (env_k, env_m, order) triples."""
    if not system.sigma_b:
        raise UndefinedEnvelope("system has no bad maps")
    bad = [system.maps[b] for b in system.sigma_b]
    orders = [m.order for m in bad]
    ell_min, ell_max = min(orders), max(orders)
    k_min = min(m.env_k for m in bad)

    k_tilde = m_tilde = None
    if ell_min > 1.0:
        k_tilde = (k_min / ell_max) ** (1.0 / (ell_min - 1.0))
        m_max = max(m.env_m for m in bad)
        m_tilde = (m_max / ell_min) ** (1.0 / (ell_min - 1.0))

    m_hat = None
    if ell_max > 1.0:
        upsilon = min(o for o in orders if o > 1.0)
        m_big = max(m.env_m / m.order for m in bad if m.order > 1.0)
        m_hat = m_big ** (1.0 / (upsilon - 1.0))

    if eta is None:
        eta = tuple(1.5 if m.order == 1.0 else m.order for m in bad)
    else:
        eta = tuple(float(e) for e in eta)
        if len(eta) != len(bad):
            raise ValueError("eta must have one entry per bad map")
        if any(e <= 1.0 for e in eta):
            raise ValueError("every eta entry must exceed 1")
    eta_hat = tuple(max(e, m.order) for e, m in zip(eta, bad))
    k_hat = (k_min / max(eta_hat)) ** (1.0 / (min(eta_hat) - 1.0))

    return EnvelopeConstants(k_tilde, m_tilde, m_hat, k_hat, eta, eta_hat,
                             delta_neighborhood(system))


# ---------------------------------------------------------------------------
# exact log-distance iteration along bad words
# ---------------------------------------------------------------------------

def _branch_log_step(form, z: float, sigma: float, logd: float) -> float:
    """log |T(z + sigma e^logd) - T(z)|; mirrors the compiled kernel."""
    if isinstance(form, PowerForm):
        u_z = (z - form.x0) / form.w
        if u_z == 0.0:
            return math.log(abs(form.b)) + form.k * (logd - math.log(abs(form.w)))
        d = math.exp(logd)
        h = sigma * d / (form.w * u_z)
        base = math.log(abs(form.b * form.k / form.w)) + (form.k - 1.0) * math.log(u_z)
        if h == 0.0:
            return logd + base
        corr = math.log(abs(math.expm1(form.k * math.log1p(h)) / (form.k * h)))
        return logd + base + corr
    assert isinstance(form, MoebiusForm)
    den_z = form.r * z + form.s
    d = math.exp(logd)
    den_x = den_z + form.r * sigma * d
    return (logd + math.log(abs(form.p * form.s - form.q * form.r))
            - math.log(abs(den_z)) - math.log(abs(den_x)))


def bad_word_log_distance(system: RandomSystem, side: int, logd: float,
                          word: Sequence[int]) -> tuple[int, float]:
    """Exact log |T_w^n(x) - c| for x = c - d (side < 0) or c + d (side > 0).

    Only valid while the orbit stays attached to c, which holds for all-bad
    words whenever d is inside the branch (bad maps fix c and are monotone
    on each side).
    """
    c = system.c
    for j in word:
        m = system.maps[j]
        if m.kind is not MapKind.BAD:
            raise ValueError(f"map index {j} is not bad")
        br = m.branches[0] if side < 0 else m.branches[1]
        sigma = -1.0 if side < 0 else 1.0
        logd = _branch_log_step(br.form, c, sigma, logd)
        side = side * int(br.monotonicity)
    return side, logd


@dataclass(frozen=True)
class EnvelopeCheck:
    """Margins (in log space) of the product-envelope bounds at one sample."""

    passed: bool
    lower_margin: float          # log|T^n(x)-c| - L*log(K |x-c|) >= 0
    upper_margin: Optional[float]
    upper_applicable: bool
    log_distance: float
    exponent_lower: float        # product of exponents used in the lower bound
    exponent_upper: Optional[float]
    constants: str               # "tilde" or "hat"


def check_envelope(system: RandomSystem, x: float, word: Sequence[int],
                   env: Optional[EnvelopeConstants] = None) -> EnvelopeCheck:
    """Evaluate both envelope inequalities exactly; margins in log space."""
    if env is None:
        env = envelope_constants(system)
    word = list(word)
    if any(j not in system.sigma_b for j in word):
        raise ValueError("word must use bad indices only")
    c = system.c
    if x == c:
        return EnvelopeCheck(True, 0.0, 0.0, True, -math.inf, 1.0, 1.0,
                             "tilde" if env.k_tilde else "hat")
    d0 = abs(x - c)
    side = -1 if x < c else 1
    _, log_dn = bad_word_log_distance(system, side, math.log(d0), word)

    orders = {b: system.maps[b].order for b in system.sigma_b}
    ell_product = 1.0
    for j in word:
        ell_product *= orders[j]

    if env.k_tilde is not None:
        lower = ell_product * (math.log(env.k_tilde) + math.log(d0))
        upper = ell_product * (math.log(env.m_tilde) + math.log(d0))
        return EnvelopeCheck(
            passed=(log_dn >= lower) and (log_dn <= upper),
            lower_margin=log_dn - lower, upper_margin=upper - log_dn,
            upper_applicable=True, log_distance=log_dn,
            exponent_lower=ell_product, exponent_upper=ell_product,
            constants="tilde")

    eta_of = {b: e for b, e in zip(system.sigma_b, env.eta_hat)}
    eta_product = 1.0
    for j in word:
        eta_product *= eta_of[j]
    lower = eta_product * (math.log(env.k_hat) + math.log(d0))
    ok = log_dn >= lower
    upper_margin = None
    upper_ok = True
    applicable = env.m_hat is not None and d0 <= env.delta
    if applicable:
        upper = ell_product * (math.log(env.m_hat) + math.log(d0))
        upper_margin = upper - log_dn
        upper_ok = log_dn <= upper
    return EnvelopeCheck(ok and upper_ok, log_dn - lower, upper_margin,
                         applicable, log_dn, eta_product,
                         ell_product if applicable else None, "hat")


# ---------------------------------------------------------------------------
# measure bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundParameters:
    """Scalars entering the small-set mass bounds, plus fitted constants."""

    theta: float
    r_max: float
    ell_max: float
    kappa_exponent: float        # positive exactly when theta < 1
    c_const: float = 1.0
    k_const: float = 1.0
    provenance: str = "unfitted (C = K = 1)"


def kappa_exponent(theta: float, ell_max: float) -> float:
    return math.log(1.0 / theta) / (1.0 + math.log(ell_max))


def bound_parameters(system: RandomSystem, c_const: float = 1.0,
                     k_const: float = 1.0, provenance: str = "unfitted (C = K = 1)") -> BoundParameters:
    th = float(sum(system.p[b] * system.maps[b].order for b in system.sigma_b))
    r_max = max(system.maps[g].order for g in system.sigma_g)
    ell_max = max(system.maps[b].order for b in system.sigma_b)
    return BoundParameters(th, r_max, ell_max, kappa_exponent(th, ell_max),
                           c_const, k_const, provenance)


def default_k_terms(theta: float, eps: float = TAIL_EPS) -> int:
    return max(1, int(math.ceil(math.log(eps * (1.0 - theta)) / math.log(theta))))


def measure_bound(params: BoundParameters, lebesgue_a: float,
                  k_terms: Optional[int] = None) -> float:
    """C * sum_k theta^k * lam^(ell_max^-k / r_max), tail-majorized truncation.

    Returns +inf in the infinite regime theta >= 1 where the series
    diverges and the bound is vacuous.
    """
    if not 0.0 <= lebesgue_a <= 1.0:
        raise ValueError("lebesgue_a must lie in [0,1]")
    th = params.theta
    if th >= 1.0:
        return math.inf
    if k_terms is None:
        k_terms = default_k_terms(th)
    lam = lebesgue_a
    total = 0.0
    for k in range(k_terms + 1):
        total += th ** k * lam ** (params.ell_max ** (-k) / params.r_max)
    total += th ** (k_terms + 1) / (1.0 - th)
    return params.c_const * total


def log_bound(params: BoundParameters, lebesgue_a: float) -> float:
    """K / log^kappa(1/lam): the logarithmic majorant of measure_bound."""
    if params.theta >= 1.0:
        return math.inf
    if not 0.0 < lebesgue_a < 1.0:
        raise ValueError("lebesgue_a must lie in (0,1)")
    return params.k_const / math.log(1.0 / lebesgue_a) ** params.kappa_exponent


def refined_measure_bound(system: RandomSystem, lebesgue_a: float,
                          c_const: float = 1.0, word_budget: int = 8) -> float:
    """Word-resolved variant: C * sum_g p_g sum_b-words p_w L_w lam^(1/(L_w r_g)).

    Enumerates bad words up to word_budget by multiset (the summand only
    depends on the multiset of orders) and majorizes the tail by the
    geometric remainder.
    """
    if not 0.0 <= lebesgue_a <= 1.0:
        raise ValueError("lebesgue_a must lie in [0,1]")
    th = float(sum(system.p[b] * system.maps[b].order for b in system.sigma_b))
    if th >= 1.0:
        return math.inf
    lam = lebesgue_a
    bad = list(system.sigma_b)
    total = 0.0
    for g in system.sigma_g:
        p_g = system.p[g]
        r_g = system.maps[g].order
        s = 0.0
        for k in range(word_budget + 1):
            for combo in itertools.combinations_with_replacement(bad, k):
                mult = _multinomial(combo, bad)
                p_w = mult
                ell_w = 1.0
                for b in combo:
                    p_w *= system.p[b]
                    ell_w *= system.maps[b].order
                s += p_w * ell_w * lam ** (1.0 / (ell_w * r_g))
        s += th ** (word_budget + 1) / (1.0 - th)
        total += p_g * s
    return c_const * total


def _multinomial(combo: tuple[int, ...], alphabet: list[int]) -> float:
    counts = [sum(1 for c in combo if c == a) for a in alphabet]
    n = len(combo)
    out = math.factorial(n)
    for c in counts:
        out //= math.factorial(c)
    return float(out)


def fit_constant(shape_values: Sequence[float], empirical: Sequence[float]) -> float:
    """Smallest C with empirical <= C * shape everywhere (max of the ratios)."""
    if len(shape_values) != len(empirical) or not shape_values:
        raise ValueError("need matching nonempty value lists")
    return max(e / s for e, s in zip(empirical, shape_values))


# ---------------------------------------------------------------------------
# escape-time constants
# ---------------------------------------------------------------------------

def sup_derivative(system: RandomSystem) -> float:
    """sup over maps and x of |DT|; attained at the endpoints for all families."""
    from rimlab.maps import eval3

    best = 0.0
    for m in system.maps:
        best = max(best, abs(eval3(m, 0.0)[1]), abs(eval3(m, 1.0)[1]))
    return best


def escape_constants(system: RandomSystem, g: int,
                     boundary_distance: float) -> tuple[float, float, float]:
    """(k1, k2, zeta): return after a deep bad block needs >= k1 + k2*L steps.

    L is the order product of the block; boundary_distance is the distance
    from the return target to {0, 1}.
    """
    zeta = sup_derivative(system)
    m_g = system.maps[g].env_m
    r_g = system.maps[g].order
    k1 = (1.0 + math.log(boundary_distance * r_g / m_g)) / math.log(zeta)
    k2 = math.log(2.0 ** r_g) / math.log(zeta)
    return k1, k2, zeta


def exponent_chain_ratio(ells: Sequence[float]) -> float:
    """(1 + sum of suffix products) / (full product) for an order word.

    Strictly below 1/(min(ells) - 1) for every word with all entries > 1,
    which is what makes the product-envelope constants close.
    """
    ells = list(ells)
    if not ells:
        raise ValueError("need a nonempty word")
    n = len(ells)
    total = 1.0
    for i in range(n - 1):
        prod = 1.0
        for j in range(n - 1, n - 2 - i, -1):
            prod *= ells[j]
        total += prod
    full = 1.0
    for e in ells:
        full *= e
    return total / full
