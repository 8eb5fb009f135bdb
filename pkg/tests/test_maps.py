import math

import numpy as np
import pytest
import sympy as sp

from rimlab import maps
from rimlab.maps import (
    CriticalPointError,
    MapKind,
    Monotonicity,
    OutOfRangeError,
    bad_antisym,
    bad_moebius,
    bad_unimodal,
    branch_inverse,
    deriv,
    doubling,
    evaluate,
    good_power,
    make_map,
    schwarzian,
    validate_map,
)


def T4():
    return make_map("T4")


def T2():
    return make_map("T2")


def cubic():
    return make_map("cubic")


ALL_BUILTINS = lambda: [
    doubling(),
    good_power(1.0),
    good_power(2.0),
    good_power(3.5),
    bad_unimodal(2.0),
    bad_unimodal(1.7),
    bad_antisym(3.0),
    bad_antisym(2.2),
    bad_moebius(0.5),
]


# ---------------------------------------------------------------------------
# sympy oracle: exact symbolic derivatives of the classical c = 1/2 examples
# ---------------------------------------------------------------------------

X = sp.symbols("x")
SYMBOLIC = {
    "T4": 4 * X * (1 - X),
    "T2": 2 * X * (1 - X),
    "cubic": sp.Rational(1, 2) - 4 * (X - sp.Rational(1, 2)) ** 3,
}


def oracle_derivs(name, x, order):
    expr = sp.diff(SYMBOLIC[name], X, order)
    return float(expr.subs(X, sp.Float(x, 30)))


def oracle_schwarzian(name, x):
    f = SYMBOLIC[name]
    d1, d2, d3 = (sp.diff(f, X, k) for k in (1, 2, 3))
    s = d3 / d1 - sp.Rational(3, 2) * (d2 / d1) ** 2
    return float(s.subs(X, sp.Float(x, 30)))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_eval_known_points():
    assert evaluate(T4(), 0.375) == pytest.approx(0.9375, abs=0)
    assert evaluate(T2(), 0.5) == 0.5  # c is fixed for bad maps
    assert evaluate(cubic(), 0.0) == 1.0


def test_eval_endpoints_land_on_01():
    for m in ALL_BUILTINS():
        assert evaluate(m, 0.0) in (0.0, 1.0)
        assert evaluate(m, 1.0) in (0.0, 1.0)
        if m.kind is MapKind.GOOD:
            assert evaluate(m, m.c) in (0.0, 1.0)
        else:
            assert evaluate(m, m.c) == m.c


def test_eval_matches_symbolic_forms():
    xs = np.linspace(0.0, 1.0, 257)
    for name in SYMBOLIC:
        m = make_map(name)
        f = sp.lambdify(X, SYMBOLIC[name], "math")
        for x in xs:
            if x in (0.0, 0.5, 1.0):
                continue
            assert evaluate(m, float(x)) == pytest.approx(f(float(x)), abs=1e-14)


def test_eval_rejects_outside_unit_interval():
    with pytest.raises(ValueError):
        evaluate(T4(), -0.1)
    with pytest.raises(ValueError):
        evaluate(T4(), 1.1)


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def test_deriv_known_points():
    assert deriv(T4(), 0.0, 1) == pytest.approx(4.0, abs=0)
    assert deriv(T2(), 0.5, 1) == 0.0  # superattracting fixed point
    assert deriv(cubic(), 0.0, 1) == pytest.approx(-3.0, abs=1e-15)


@pytest.mark.parametrize("name", sorted(SYMBOLIC))
@pytest.mark.parametrize("order", [1, 2, 3])
def test_deriv_matches_sympy_oracle(name, order):
    m = make_map(name)
    for x in np.linspace(0.01, 0.99, 37):
        got = deriv(m, float(x), order)
        want = oracle_derivs(name, float(x), order)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_deriv_matches_finite_differences():
    # first derivative vs centered differences, away from {0, c, 1}
    h = 1e-7
    for m in ALL_BUILTINS():
        for x in np.linspace(0.0, 1.0, 211):
            x = float(x)
            if min(x, 1 - x, abs(x - m.c)) < 1e-3:
                continue
            fd = (evaluate(m, x + h) - evaluate(m, x - h)) / (2 * h)
            assert deriv(m, x, 1) == pytest.approx(fd, abs=1e-6)


# ---------------------------------------------------------------------------
# Schwarzian derivative
# ---------------------------------------------------------------------------

def test_schwarzian_known_values():
    # frozen from the symbolic oracle below
    assert schwarzian(T4(), 0.0) == pytest.approx(-6.0, rel=1e-12)
    assert schwarzian(T2(), 0.0) == pytest.approx(-6.0, rel=1e-12)
    assert oracle_schwarzian("T4", 0.0) == pytest.approx(-6.0, rel=1e-12)
    assert oracle_schwarzian("T2", 0.0) == pytest.approx(-6.0, rel=1e-12)


def test_schwarzian_linear_and_moebius_branches_are_zero():
    for x in np.linspace(0.02, 0.98, 41):
        x = float(x)
        if x == 0.5:
            continue
        assert schwarzian(doubling(), x) == pytest.approx(0.0, abs=1e-12)
        assert abs(schwarzian(bad_moebius(0.5), x)) < 1e-9


@pytest.mark.parametrize("name", sorted(SYMBOLIC))
def test_schwarzian_matches_sympy_oracle(name):
    m = make_map(name)
    for x in np.linspace(0.03, 0.97, 29):
        x = float(x)
        if abs(x - 0.5) < 1e-6:
            continue
        assert schwarzian(m, x) == pytest.approx(oracle_schwarzian(name, x), rel=1e-10)


def test_schwarzian_rejects_critical_point():
    with pytest.raises(CriticalPointError):
        schwarzian(T4(), 0.5)


def test_schwarzian_composition_identity():
    # S(T2 o T1)(x) = S(T2)(T1 x) * |DT1(x)|^2 + S(T1)(x), via chain-rule
    # derivatives of the composition on one side.
    builtins = ALL_BUILTINS()
    xs = np.linspace(0.001, 0.999, 1000)
    for m1 in builtins:
        for m2 in builtins:
            for x in xs[::7]:  # thinned here; the acceptance suite runs the full grid
                x = float(x)
                try:
                    lhs = _composition_schwarzian(m1, m2, x)
                    rhs = schwarzian(m2, evaluate(m1, x)) * deriv(m1, x, 1) ** 2 + schwarzian(m1, x)
                except (CriticalPointError, ValueError):
                    continue
                assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs), abs(rhs))


def _composition_schwarzian(m1, m2, x):
    t1, a1, a2, a3 = maps.eval3(m1, x)
    _, b1, b2, b3 = maps.eval3(m2, t1)
    d1 = b1 * a1
    d2 = b2 * a1 * a1 + b1 * a2
    d3 = b3 * a1 ** 3 + 3 * b2 * a1 * a2 + b1 * a3
    if abs(d1) < maps.DERIV_ZERO_TOL:
        raise CriticalPointError("composition critical")
    r = d2 / d1
    return d3 / d1 - 1.5 * r * r


# ---------------------------------------------------------------------------
# branch inversion
# ---------------------------------------------------------------------------

def test_branch_inverse_known_points():
    m = T4()
    x = branch_inverse(m, m.left, 0.5)
    assert x == pytest.approx((1 - math.sqrt(0.5)) / 2, abs=1e-10)
    assert branch_inverse(m, m.left, 1.0) == 0.5
    b = T2()
    assert branch_inverse(b, b.left, 0.5) == 0.5


def test_branch_inverse_is_right_inverse():
    rng = np.random.default_rng(11)
    for m in ALL_BUILTINS():
        for br in m.branches:
            lo, hi = br.range_
            for y in lo + (hi - lo) * rng.random(50):
                y = float(y)
                x = branch_inverse(m, br, y)
                assert br.domain[0] <= x <= br.domain[1]
                assert abs(br.form.value(x) - y) <= 1e-12


def test_branch_inverse_out_of_range():
    m = T2()
    with pytest.raises(OutOfRangeError):
        branch_inverse(m, m.left, 0.75)  # left branch range is (0, c)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_t4_with_explicit_constants():
    m = good_power(2.0, env_k=0.99, env_m=8.01, name="T4")
    report = validate_map(m, 1024)
    assert report.passed, str(report)


def test_validate_t2_with_explicit_constants():
    m = bad_unimodal(2.0, env_k=0.99, env_m=4.01, name="T2")
    report = validate_map(m, 1024)
    assert report.passed, str(report)


def test_validate_relabelled_t2_fails_as_good():
    m = bad_unimodal(2.0, env_k=0.99, env_m=4.01).with_kind(MapKind.GOOD)
    report = validate_map(m, 1024)
    assert not report.passed
    names = {c.name for c in report.failures()}
    assert "branch-ranges" in names or "endpoint-images" in names


def test_validate_all_builtin_defaults():
    for m in ALL_BUILTINS():
        report = validate_map(m, 512)
        assert report.passed, str(report)


def test_validate_rejects_tiny_grid():
    with pytest.raises(ValueError):
        validate_map(T4(), 32)


def test_envelope_is_exact_for_power_families():
    # |DT4| = 8|x-c| and |DT2| = 4|x-c| exactly on a grid
    m4, m2 = T4(), T2()
    for x in np.linspace(0.0, 1.0, 513):
        x = float(x)
        assert abs(deriv(m4, x, 1)) == pytest.approx(8 * abs(x - 0.5), abs=1e-13)
        assert abs(deriv(m2, x, 1)) == pytest.approx(4 * abs(x - 0.5), abs=1e-13)


def test_moebius_family_fixed_points_and_slopes():
    for s in (0.3, 0.5, 0.8):
        m = bad_moebius(s)
        assert evaluate(m, 0.0) == 0.0
        assert evaluate(m, 1.0) == 1.0
        assert evaluate(m, 0.5) == 0.5
        assert deriv(m, 0.5, 1) == pytest.approx(s, rel=1e-12)
        assert deriv(m, 0.0, 1) == pytest.approx(1 / s, rel=1e-12)
        assert deriv(m, 1.0, 1) == pytest.approx(1 / s, rel=1e-12)


def test_offcenter_families_validate():
    for c in (0.3, 0.62):
        for m in (doubling(c=c), good_power(2.5, c=c), bad_unimodal(3.0, c=c),
                  bad_antisym(3.0, c=c), bad_moebius(0.4, c=c)):
            report = validate_map(m, 512)
            assert report.passed, str(report)


def test_offcenter_endpoint_contraction_is_caught():
    # bad_unimodal with ell = 2 at c = 0.3 has |DT(1)| = 0.6/0.7 < 1, which
    # violates expansion at the endpoints and must be reported.
    report = validate_map(bad_unimodal(2.0, c=0.3), 512)
    assert not report.passed
    assert any(c.name == "endpoint-expansion" for c in report.failures())


def test_make_map_rejects_bad_requests():
    with pytest.raises(ValueError):
        make_map("no-such-family")
    with pytest.raises(ValueError):
        make_map("good-power")  # missing r
    with pytest.raises(ValueError):
        make_map("doubling", r=2.0)  # stray parameter
    with pytest.raises(ValueError):
        make_map("bad-unimodal", ell=1.0)  # needs ell > 1
    with pytest.raises(ValueError):
        make_map("T4", c=1.5)
