"""Interval maps on [0,1] with a shared interior turning point.

Two classes of maps are supported.  A *good* map has both branches onto
(0,1), sends {0, c, 1} into {0, 1} and is expanding at the endpoints; its
derivative vanishes (or not, for order 1) like |x-c|^(r-1) at the turning
point c.  A *bad* map fixes c, keeps each branch inside (0,c) or (c,1),
and attracts towards c with critical order ell.  All builtin families are
piecewise power-law or Moebius in a normalized branch coordinate, so exact
derivatives up to third order are available everywhere, which is what the
Schwarzian and envelope machinery downstream relies on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

__all__ = [
    "MapKind",
    "Monotonicity",
    "PowerForm",
    "MoebiusForm",
    "BranchDescriptor",
    "MapDescriptor",
    "ValidationReport",
    "ConditionCheck",
    "CriticalPointError",
    "OutOfRangeError",
    "InversionError",
    "evaluate",
    "deriv",
    "schwarzian",
    "branch_inverse",
    "validate_map",
    "make_map",
    "doubling",
    "good_power",
    "bad_unimodal",
    "bad_antisym",
    "bad_moebius",
    "BUILTIN_FAMILIES",
    "BUILTIN_ALIASES",
]

# Tolerances shared with the validation and inversion routines.
SCHWARZIAN_SLACK = 1e-9          # "non-positive" allows this much rounding
DERIV_ZERO_TOL = 1e-30           # |DT| below this counts as a critical point
INVERSION_TOL = 1e-12            # |T(x) - y| guarantee of branch_inverse
INVERSION_MAX_ITER = 200


class CriticalPointError(ValueError):
    """Raised when an operation needs DT(x) != 0 but x is critical."""


class OutOfRangeError(ValueError):
    """Raised when a requested preimage lies outside the branch range."""


class InversionError(RuntimeError):
    """Raised when bisection fails to meet the inversion tolerance."""


class MapKind(enum.Enum):
    GOOD = "good"
    BAD = "bad"


class Monotonicity(enum.IntEnum):
    INCREASING = 1
    DECREASING = -1


def _upow(u: float, k: float) -> float:
    # Mirrors the compiled kernel exactly; keep in sync with stepper._upow.
    if k == 1.0:
        return u
    if k == 2.0:
        return u * u
    if k == 3.0:
        return u * u * u
    return u ** k


def _upow_signed(u: float, e: float) -> float:
    """u**e for u >= 0 with the u = 0 edge cases made explicit."""
    if u == 0.0:
        if e > 0.0:
            return 0.0
        if e == 0.0:
            return 1.0
        return math.inf
    return _upow(u, e)


@dataclass(frozen=True)
class PowerForm:
    """T(x) = a + b * u**k with branch coordinate u = (x - x0) / w.

    The parameters are chosen so u runs over (0,1) on the branch domain.
    """

    a: float
    b: float
    x0: float
    w: float
    k: float

    def u(self, x: float) -> float:
        return (x - self.x0) / self.w

    def value(self, x: float) -> float:
        return self.a + self.b * _upow(self.u(x), self.k)

    def derivs(self, x: float) -> tuple[float, float, float, float]:
        u = self.u(x)
        k, b, w = self.k, self.b, self.w
        t = self.a + b * _upow(u, k)
        c2 = k * (k - 1.0)
        c3 = c2 * (k - 2.0)
        d1 = b * k / w * _upow_signed(u, k - 1.0)
        d2 = 0.0 if c2 == 0.0 else b * c2 / (w * w) * _upow_signed(u, k - 2.0)
        d3 = 0.0 if c3 == 0.0 else b * c3 / (w * w * w) * _upow_signed(u, k - 3.0)
        return t, d1, d2, d3


@dataclass(frozen=True)
class MoebiusForm:
    """T(x) = (p*x + q) / (r*x + s); Schwarzian derivative is identically 0."""

    p: float
    q: float
    r: float
    s: float

    def value(self, x: float) -> float:
        return (self.p * x + self.q) / (self.r * x + self.s)

    def derivs(self, x: float) -> tuple[float, float, float, float]:
        den = self.r * x + self.s
        jac = self.p * self.s - self.q * self.r
        t = (self.p * x + self.q) / den
        d1 = jac / (den * den)
        d2 = -2.0 * self.r * jac / (den * den * den)
        d3 = 6.0 * self.r * self.r * jac / (den * den * den * den)
        return t, d1, d2, d3


BranchForm = PowerForm | MoebiusForm


@dataclass(frozen=True)
class BranchDescriptor:
    domain: tuple[float, float]       # open subinterval, (0,c) or (c,1)
    range_: tuple[float, float]       # (0,c), (c,1) or (0,1)
    monotonicity: Monotonicity
    form: BranchForm

    def contains(self, x: float) -> bool:
        return self.domain[0] < x < self.domain[1]


@dataclass(frozen=True)
class MapDescriptor:
    """One interval map with branch structure and critical data.

    Immutable after construction; all operations on it are pure.
    """

    name: str
    family: str
    kind: MapKind
    c: float
    order: float                      # critical order (r for good, ell for bad)
    env_k: float                      # lower envelope constant, in (0,1)
    env_m: float                      # upper envelope constant, > order
    branches: tuple[BranchDescriptor, BranchDescriptor]
    value_at_0: float
    value_at_c: float
    value_at_1: float
    params: tuple[tuple[str, float], ...] = field(default=())

    @property
    def left(self) -> BranchDescriptor:
        return self.branches[0]

    @property
    def right(self) -> BranchDescriptor:
        return self.branches[1]

    def branch_for(self, x: float) -> BranchDescriptor:
        if x == self.c:
            raise CriticalPointError(f"{self.name}: x = c has no single branch")
        return self.branches[0] if x < self.c else self.branches[1]

    def with_envelope(self, env_k: float, env_m: float) -> "MapDescriptor":
        return replace(self, env_k=env_k, env_m=env_m)

    def with_kind(self, kind: MapKind) -> "MapDescriptor":
        return replace(self, kind=kind)


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------

def evaluate(m: MapDescriptor, x: float) -> float:
    """T(x) for x in [0,1].  Exact stored values at 0, c and 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x!r} outside [0,1]")
    if x == 0.0:
        return m.value_at_0
    if x == 1.0:
        return m.value_at_1
    if x == m.c:
        return m.value_at_c
    return m.branch_for(x).form.value(x)


def eval3(m: MapDescriptor, x: float) -> tuple[float, float, float, float]:
    """(T, DT, D2T, D3T) at x; branch-closure values at 0, c and 1.

    At x = c the left-branch limit is used (for order > 1 the one-sided
    derivative limits agree in absolute value; for order 1 families the
    derivative may jump and the left limit is the convention).
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x!r} outside [0,1]")
    if x == m.c:
        t, d1, d2, d3 = m.branches[0].form.derivs(x)
        return m.value_at_c, d1, d2, d3
    t, d1, d2, d3 = m.branch_for(x).form.derivs(x)
    if x == 0.0:
        t = m.value_at_0
    elif x == 1.0:
        t = m.value_at_1
    return t, d1, d2, d3


def deriv(m: MapDescriptor, x: float, order: int = 1) -> float:
    """Exact analytic derivative of the requested order (1, 2 or 3)."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return eval3(m, x)[order]


def schwarzian(m: MapDescriptor, x: float) -> float:
    """D3T/DT - 1.5*(D2T/DT)^2; raises CriticalPointError where DT ~ 0."""
    _, d1, d2, d3 = eval3(m, x)
    if abs(d1) < DERIV_ZERO_TOL:
        raise CriticalPointError(f"{m.name}: derivative vanishes at x = {x!r}")
    r = d2 / d1
    return d3 / d1 - 1.5 * r * r


def branch_inverse(m: MapDescriptor, branch: BranchDescriptor, y: float) -> float:
    """Unique x in the branch closure with |T(x) - y| <= INVERSION_TOL.

    Monotone bisection; range endpoints map to exact domain endpoints.
    """
    lo, hi = branch.range_
    if not lo <= y <= hi:
        raise OutOfRangeError(
            f"{m.name}: y = {y!r} outside branch range [{lo}, {hi}]"
        )
    a, b = branch.domain
    inc = branch.monotonicity is Monotonicity.INCREASING
    if y == lo:
        return a if inc else b
    if y == hi:
        return b if inc else a
    f = branch.form
    sign = 1.0 if inc else -1.0
    for _ in range(INVERSION_MAX_ITER):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break  # interval collapsed to adjacent floats
        if sign * (f.value(mid) - y) < 0.0:
            a = mid
        else:
            b = mid
    x = 0.5 * (a + b)
    if not (abs(f.value(x) - y) <= INVERSION_TOL or abs(f.value(a) - y) <= INVERSION_TOL):
        raise InversionError(f"{m.name}: bisection stalled at y = {y!r}")
    if abs(f.value(a) - y) < abs(f.value(x) - y):
        x = a
    return x


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    margin: float                 # smallest observed slack; negative on fail
    witness: Optional[float]      # worst-offending grid point, if any
    note: str = ""


@dataclass(frozen=True)
class ValidationReport:
    map_name: str
    grid_points: int
    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> tuple[ConditionCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def __str__(self) -> str:
        lines = [f"validation of {self.map_name} on {self.grid_points} grid points"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = f" at x={c.witness:.9g}" if c.witness is not None else ""
            lines.append(f"  [{status}] {c.name}: margin={c.margin:.3e}{extra}{c.note and ' ' + c.note}")
        return "\n".join(lines)


def _expected_ranges(m: MapDescriptor) -> tuple[tuple[float, float], ...] | None:
    if m.kind is MapKind.GOOD:
        return ((0.0, 1.0),)
    return ((0.0, m.c), (m.c, 1.0))


def validate_map(m: MapDescriptor, grid_points: int = 1024) -> ValidationReport:
    """Check class conditions on a uniform grid; failures are reported, not raised.

    Checks: endpoint images, branch ranges and surjectivity limits, branch
    monotonicity, the derivative envelope with (env_k, env_m, order),
    non-positive Schwarzian up to rounding slack, and expansion at 0 and 1.
    """
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    c = m.c
    checks: list[ConditionCheck] = []

    # endpoint images
    if m.kind is MapKind.GOOD:
        ok = m.value_at_0 in (0.0, 1.0) and m.value_at_1 in (0.0, 1.0) and m.value_at_c in (0.0, 1.0)
        checks.append(ConditionCheck("endpoint-images", ok, 0.0 if ok else -1.0, None,
                                     "T({0,c,1}) must lie in {0,1}"))
    else:
        ok = m.value_at_0 in (0.0, 1.0) and m.value_at_1 in (0.0, 1.0)
        gap = abs(m.value_at_c - c)
        ok = ok and gap == 0.0
        checks.append(ConditionCheck("endpoint-images", ok, -gap if gap else 0.0, None,
                                     "T({0,1}) in {0,1} and T(c) = c"))

    # branch ranges: declared ranges must match the class, and the branch must
    # approach its range endpoints near the domain endpoints.
    allowed = _expected_ranges(m)
    h = max(1.0 / grid_points, 1e-7)
    zeta = 0.0  # grid max |DT|, filled by the envelope sweep below
    xs = [i / (grid_points - 1) for i in range(grid_points)]
    d1s = {}
    for x in xs:
        if x == c:
            continue
        d1s[x] = eval3(m, x)[1]
        zeta = max(zeta, abs(d1s[x]))

    worst_gap, worst_x, ranges_ok = 0.0, None, True
    for br in m.branches:
        if br.range_ not in allowed:
            ranges_ok = False
            worst_gap = -1.0
            break
        a, b = br.domain
        probes = ((a + h * (b - a), br.range_[0] if br.monotonicity is Monotonicity.INCREASING else br.range_[1]),
                  (b - h * (b - a), br.range_[1] if br.monotonicity is Monotonicity.INCREASING else br.range_[0]))
        for x, target in probes:
            gap = abs(br.form.value(x) - target)
            tol = 4.0 * zeta * h * (b - a) + 1e-9
            if gap > tol and gap > worst_gap:
                ranges_ok, worst_gap, worst_x = False, gap, x
    checks.append(ConditionCheck("branch-ranges", ranges_ok,
                                 -worst_gap if not ranges_ok else 0.0, worst_x,
                                 "branches onto (0,1)" if m.kind is MapKind.GOOD
                                 else "branches onto (0,c) or (c,1)"))

    # monotonicity: constant derivative sign per branch
    mono_ok, mono_x = True, None
    for br in m.branches:
        want = float(br.monotonicity)
        for x in xs:
            if not br.contains(x):
                continue
            d = d1s.get(x)
            if d is None or abs(d) < DERIV_ZERO_TOL:
                continue
            if math.copysign(1.0, d) != want:
                mono_ok, mono_x = False, x
                break
    checks.append(ConditionCheck("monotone-branches", mono_ok, 0.0 if mono_ok else -1.0, mono_x))

    # derivative envelope on the grid
    lo_margin, lo_x = math.inf, None
    hi_margin, hi_x = math.inf, None
    for x in xs:
        if x == c:
            continue
        env = _upow_signed(abs(x - c), m.order - 1.0)
        ad = abs(d1s[x])
        ml = ad - m.env_k * env
        mh = m.env_m * env - ad
        if ml < lo_margin:
            lo_margin, lo_x = ml, x
        if mh < hi_margin:
            hi_margin, hi_x = mh, x
    checks.append(ConditionCheck("envelope-lower", lo_margin >= 0.0, lo_margin, lo_x,
                                 f"env_k={m.env_k:g}"))
    checks.append(ConditionCheck("envelope-upper", hi_margin >= 0.0, hi_margin, hi_x,
                                 f"env_m={m.env_m:g}"))

    # Schwarzian <= 0 (+ slack); an exclusion radius around c skips the
    # derivative zero for orders > 1
    s_margin, s_x = math.inf, None
    for x in xs:
        if abs(x - c) < 1.0 / grid_points:
            continue
        try:
            s = schwarzian(m, x)
        except CriticalPointError:
            continue
        margin = SCHWARZIAN_SLACK - s
        if margin < s_margin:
            s_margin, s_x = margin, x
    checks.append(ConditionCheck("schwarzian-nonpositive", s_margin >= 0.0, s_margin, s_x))

    # expansion at the endpoints
    d0 = abs(eval3(m, 0.0)[1])
    d1 = abs(eval3(m, 1.0)[1])
    margin = min(d0 - 1.0, d1 - 1.0)
    checks.append(ConditionCheck("endpoint-expansion", margin > 0.0, margin,
                                 0.0 if d0 <= d1 else 1.0, f"|DT(0)|={d0:g}, |DT(1)|={d1:g}"))

    # envelope constant normalization: env_k < 1 <= order < env_m
    # (order 1 is allowed for good maps and for non-superattracting bad maps)
    norm_ok = 0.0 < m.env_k < 1.0 <= m.order < m.env_m
    checks.append(ConditionCheck("constant-normalization", norm_ok, 0.0 if norm_ok else -1.0, None,
                                 "env_k < 1 <= order < env_m"))

    return ValidationReport(m.name, grid_points, tuple(checks))


# ---------------------------------------------------------------------------
# Builtin families
# ---------------------------------------------------------------------------

def _check_c(c: float) -> None:
    if not 0.0 < c < 1.0:
        raise ValueError(f"critical point c = {c!r} must lie in (0,1)")


def _clamp_envelope(k_exact: float, m_exact: float, order: float,
                    env_k: Optional[float], env_m: Optional[float]) -> tuple[float, float]:
    # Exact coefficients get a hair of slack, then are clamped to the
    # normalization env_k < 1 <= order < env_m.
    if env_k is None:
        env_k = min(0.99, 0.999 * k_exact)
    if env_m is None:
        env_m = max(1.001 * m_exact, math.nextafter(order, math.inf))
    return env_k, env_m


def doubling(c: float = 0.5, env_k: Optional[float] = None,
             env_m: Optional[float] = None, name: str = "doubling") -> MapDescriptor:
    """Full two-branch linear expanding map; T(x) = x/c and (x-c)/(1-c)."""
    _check_c(c)
    left = BranchDescriptor((0.0, c), (0.0, 1.0), Monotonicity.INCREASING,
                            PowerForm(0.0, 1.0, 0.0, c, 1.0))
    right = BranchDescriptor((c, 1.0), (0.0, 1.0), Monotonicity.INCREASING,
                             PowerForm(0.0, 1.0, c, 1.0 - c, 1.0))
    k_exact = 1.0 / max(c, 1.0 - c)
    m_exact = 1.0 / min(c, 1.0 - c)
    ek, em = _clamp_envelope(k_exact, m_exact, 1.0, env_k, env_m)
    return MapDescriptor(name, "doubling", MapKind.GOOD, c, 1.0, ek, em,
                         (left, right), 0.0, 1.0, 1.0)


def good_power(r: float, c: float = 0.5, env_k: Optional[float] = None,
               env_m: Optional[float] = None, name: Optional[str] = None) -> MapDescriptor:
    """Unimodal full-branch map 1 - u**r in the branch coordinate (r >= 1).

    At c = 1/2 and r = 2 this is exactly 4x(1-x); r = 1 is the tent map.
    """
    _check_c(c)
    if r < 1.0:
        raise ValueError("good_power needs r >= 1")
    left = BranchDescriptor((0.0, c), (0.0, 1.0), Monotonicity.INCREASING,
                            PowerForm(1.0, -1.0, c, -c, r))
    right = BranchDescriptor((c, 1.0), (0.0, 1.0), Monotonicity.DECREASING,
                             PowerForm(1.0, -1.0, c, 1.0 - c, r))
    coeffs = (r / _upow(c, r), r / _upow(1.0 - c, r))
    ek, em = _clamp_envelope(min(coeffs), max(coeffs), r, env_k, env_m)
    return MapDescriptor(name or f"good-power(r={r:g})", "good-power", MapKind.GOOD,
                         c, r, ek, em, (left, right), 0.0, 1.0, 0.0,
                         params=(("r", r),))


def bad_unimodal(ell: float, c: float = 0.5, env_k: Optional[float] = None,
                 env_m: Optional[float] = None, name: Optional[str] = None) -> MapDescriptor:
    """Unimodal attracting map c - c*u**ell onto (0,c); superattracting at c.

    At c = 1/2 and ell = 2 this is exactly 2x(1-x).
    """
    _check_c(c)
    if ell <= 1.0:
        raise ValueError("bad_unimodal needs ell > 1")
    left = BranchDescriptor((0.0, c), (0.0, c), Monotonicity.INCREASING,
                            PowerForm(c, -c, c, -c, ell))
    right = BranchDescriptor((c, 1.0), (0.0, c), Monotonicity.DECREASING,
                             PowerForm(c, -c, c, 1.0 - c, ell))
    coeffs = (ell / _upow(c, ell - 1.0), c * ell / _upow(1.0 - c, ell))
    ek, em = _clamp_envelope(min(coeffs), max(coeffs), ell, env_k, env_m)
    return MapDescriptor(name or f"bad-unimodal(ell={ell:g})", "bad-unimodal", MapKind.BAD,
                         c, ell, ek, em, (left, right), 0.0, c, 0.0,
                         params=(("ell", ell),))


def bad_antisym(ell: float, c: float = 0.5, env_k: Optional[float] = None,
                env_m: Optional[float] = None, name: Optional[str] = None) -> MapDescriptor:
    """Decreasing attracting map swapping the sides of c; T(0)=1, T(1)=0.

    At c = 1/2 and ell = 3 this is exactly 1/2 - 4(x-1/2)**3.
    """
    _check_c(c)
    if ell <= 1.0:
        raise ValueError("bad_antisym needs ell > 1")
    left = BranchDescriptor((0.0, c), (c, 1.0), Monotonicity.DECREASING,
                            PowerForm(c, 1.0 - c, c, -c, ell))
    right = BranchDescriptor((c, 1.0), (0.0, c), Monotonicity.DECREASING,
                             PowerForm(c, -c, c, 1.0 - c, ell))
    coeffs = ((1.0 - c) * ell / _upow(c, ell), c * ell / _upow(1.0 - c, ell))
    ek, em = _clamp_envelope(min(coeffs), max(coeffs), ell, env_k, env_m)
    return MapDescriptor(name or f"bad-antisym(ell={ell:g})", "bad-antisym", MapKind.BAD,
                         c, ell, ek, em, (left, right), 1.0, c, 0.0,
                         params=(("ell", ell),))


def bad_moebius(s: float, c: float = 0.5, env_k: Optional[float] = None,
                env_m: Optional[float] = None, name: Optional[str] = None) -> MapDescriptor:
    """Order-1 attracting map built from a Moebius branch on each side.

    Fixes 0, c and 1 with |DT(c)| = s in (0,1) and |DT(0)| = |DT(1)| = 1/s;
    the Schwarzian derivative is identically zero.
    """
    _check_c(c)
    if not 0.0 < s < 1.0:
        raise ValueError("bad_moebius needs s in (0,1)")
    b = (1.0 / s - 1.0) / c
    left = BranchDescriptor((0.0, c), (0.0, c), Monotonicity.INCREASING,
                            MoebiusForm(1.0 / s, 0.0, b, 1.0))
    # right side: T - c = s*w*(x-c) / (w - (1-s)(x-c)) with w = 1-c,
    # expanded into (p2*x + q2) / (r2*x + s2)
    w = 1.0 - c
    r2 = -(1.0 - s)
    s2 = w + (1.0 - s) * c
    p2 = c * r2 + s * w
    q2 = c * (s2 - s * w)
    right = BranchDescriptor((c, 1.0), (c, 1.0), Monotonicity.INCREASING,
                             MoebiusForm(p2, q2, r2, s2))
    ek, em = _clamp_envelope(s, 1.0 / s, 1.0, env_k, env_m)
    return MapDescriptor(name or f"bad-moebius(s={s:g})", "bad-moebius", MapKind.BAD,
                         c, 1.0, ek, em, (left, right), 0.0, c, 1.0,
                         params=(("s", s),))


BUILTIN_FAMILIES = {
    "doubling": (doubling, (), "full linear two-branch expanding map (good, order 1)"),
    "good-power": (good_power, ("r",), "unimodal full-branch map, critical order r >= 1 (good)"),
    "bad-unimodal": (bad_unimodal, ("ell",), "unimodal map attracting to c, order ell > 1 (bad)"),
    "bad-antisym": (bad_antisym, ("ell",), "decreasing side-swapping map, order ell > 1 (bad)"),
    "bad-moebius": (bad_moebius, ("s",), "Moebius-branch map, |DT(c)| = s in (0,1) (bad, order 1)"),
}

# Convenience aliases for the classical c = 1/2 examples.
BUILTIN_ALIASES = {
    "T4": ("good-power", {"r": 2.0}),
    "tent": ("good-power", {"r": 1.0}),
    "T2": ("bad-unimodal", {"ell": 2.0}),
    "cubic": ("bad-antisym", {"ell": 3.0}),
}


def make_map(family: str, c: float = 0.5, env_k: Optional[float] = None,
             env_m: Optional[float] = None, name: Optional[str] = None,
             **params: float) -> MapDescriptor:
    """Instantiate a builtin family (or alias) by name."""
    alias_name = None
    if family in BUILTIN_ALIASES:
        alias_name = family
        family, defaults = BUILTIN_ALIASES[family]
        merged = dict(defaults)
        merged.update(params)
        params = merged
    if family not in BUILTIN_FAMILIES:
        raise ValueError(f"unknown map family {family!r}")
    factory, wanted, _ = BUILTIN_FAMILIES[family]
    unknown = set(params) - set(wanted)
    if unknown:
        raise ValueError(f"family {family!r} does not take parameters {sorted(unknown)}")
    missing = set(wanted) - set(params)
    if missing:
        raise ValueError(f"family {family!r} needs parameters {sorted(missing)}")
    args = [params[w] for w in wanted]
    return factory(*args, c=c, env_k=env_k, env_m=env_m,
                   name=name or alias_name or None)
