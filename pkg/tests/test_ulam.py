import math

import numpy as np
import pytest

from rimlab.maps import branch_inverse, make_map
from rimlab.system import make_rng, make_system, orbit_histogram
from rimlab.ulam import (
    ConstructionError,
    DensityEstimate,
    Normalization,
    ResolutionMismatch,
    build_ulam,
    cdf_distance,
    interval_mass,
    lq_norm,
    power_iterate,
    push_lebesgue,
    single_map_ulam,
)


def logistic_pair(p4=0.5):
    return make_system([make_map("T4"), make_map("T2")], [p4, 1.0 - p4])


def doubling_system():
    # tiny bad weight keeps the system valid while the doubling map dominates
    return make_system([make_map("doubling"), make_map("T2")], [1.0 - 1e-12, 1e-12])


def uniform_density(n):
    return DensityEstimate(np.ones(n), n, Normalization.PROBABILITY)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def test_doubling_ulam_rows_are_two_halves():
    mat, used_quad = single_map_ulam(make_map("doubling"), 4)
    assert not used_quad
    dense = mat.toarray()
    assert np.array_equal(dense, np.array([
        [0.5, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.5],
        [0.5, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.5],
    ]))


def test_row_sums_tight_across_systems_and_resolutions():
    systems = [logistic_pair(0.5), logistic_pair(0.7),
               make_system([make_map("T4"), make_map("cubic")], [0.5, 0.5])]
    for sys_ in systems:
        for n in (16, 64, 1 << 10, 1 << 12):
            op = build_ulam(sys_, n)
            assert np.abs(op.row_sums() - 1.0).max() <= 1e-12


def test_row_sums_tight_with_offcenter_c():
    # c is not a cell boundary here; rows must still telescope to 1
    sys_ = make_system([make_map("good-power", r=2.0, c=0.3),
                        make_map("bad-antisym", ell=3.0, c=0.3)], [0.6, 0.4])
    op = build_ulam(sys_, 1 << 10)
    assert np.abs(op.row_sums() - 1.0).max() <= 1e-12


def test_degenerate_weight_reproduces_single_map_matrix():
    sys_ = logistic_pair(0.5)
    single, _ = single_map_ulam(sys_.maps[0], 64)
    # convexity with a vertex weight: p concentrated on map 0
    lopsided = make_system([make_map("T4"), make_map("T2")], [1.0 - 1e-15, 1e-15])
    op = build_ulam(lopsided, 64)
    assert np.abs((op.matrix - single).toarray()).max() <= 1e-12


def test_build_rejects_tiny_partition():
    with pytest.raises(ValueError):
        build_ulam(logistic_pair(), 8)


def test_quadrature_fallback_is_close_to_exact():
    m = make_map("T4")
    exact, _ = single_map_ulam(m, 128)
    quad, used = single_map_ulam(m, 128, quad_order=64, force_quadrature=True)
    assert used
    sums = np.asarray(quad.sum(axis=1)).ravel()
    assert np.abs(sums - 1.0).max() <= 1e-9
    assert np.abs((exact - quad).toarray()).max() < 0.05


def test_triplet_export_round_trips():
    op = build_ulam(logistic_pair(), 16)
    lines = op.to_triplets().strip().splitlines()
    coo = op.matrix.tocoo()
    assert len(lines) == coo.nnz
    r, c, v = lines[0].split()
    assert op.matrix[int(r), int(c)] == float(v)


# ---------------------------------------------------------------------------
# fixed vectors
# ---------------------------------------------------------------------------

def test_doubling_fixed_vector_is_uniform():
    op = build_ulam(doubling_system(), 256)
    d = power_iterate(op)
    assert d.converged
    assert np.abs(d.values - 1.0).max() <= 1e-10


def test_rank_one_matrix_fixed_vector_is_its_row():
    import scipy.sparse as sp
    from rimlab.ulam import UlamOperator

    rng = make_rng(4)
    row = rng.random(32)
    row /= row.sum()
    mat = sp.csr_matrix(np.tile(row, (32, 1)))
    op = UlamOperator(32, mat, (1.0,), "synthetic")
    d = power_iterate(op)
    assert np.abs(d.masses() - row).max() <= 1e-12


def test_mixture_density_shape_matches_theory():
    # interior local minimum with blow-up near 0; boundary cells dominate
    op = build_ulam(logistic_pair(0.6), 1 << 12)
    d = power_iterate(op)
    assert d.converged
    inner = d.values[d.n_cells // 3: 2 * d.n_cells // 3]
    assert d.values[0] > 10 * inner.mean()
    assert d.min_value() > 0.0


def test_positivity_across_resolutions_for_finite_regime():
    sys_ = logistic_pair(0.6)  # theta = 0.8
    for n in (1 << 8, 1 << 10, 1 << 12):
        d = power_iterate(build_ulam(sys_, n))
        assert d.min_value() > 0.0


# ---------------------------------------------------------------------------
# pushforwards
# ---------------------------------------------------------------------------

def test_push_zero_is_uniform_and_doubling_invariant():
    op = build_ulam(doubling_system(), 128)
    d0 = push_lebesgue(op, 0)
    assert np.abs(d0.values - 1.0).max() == 0.0
    d5 = push_lebesgue(op, 5)
    assert np.abs(d5.values - 1.0).max() <= 1e-9


def test_push_mass_conservation():
    op = build_ulam(logistic_pair(0.5), 1 << 10)
    for n in (1, 10, 1000):
        d = push_lebesgue(op, n)
        assert abs(d.masses().sum() - 1.0) <= 1e-9


def test_push_one_step_mass_near_c_matches_preimage_oracle():
    # lambda_1(I_c(eps)) = sum_j p_j lambda(T_j^-1 I_c(eps)), computed from
    # exact branch inversion of the interval endpoints
    sys_ = logistic_pair(0.5)
    eps = 2.0 ** -5
    lo, hi = 0.5 - eps, 0.5 + eps
    expected = 0.0
    for j, p in enumerate(sys_.p):
        m = sys_.maps[j]
        total = 0.0
        for br in m.branches:
            rlo, rhi = br.range_
            a, b = max(lo, rlo), min(hi, rhi)
            if b <= a:
                continue
            xa, xb = branch_inverse(m, br, a), branch_inverse(m, br, b)
            total += abs(xb - xa)
        expected += p * total
    n = 1 << 10
    d = push_lebesgue(build_ulam(sys_, n), 1)
    got = interval_mass(d, lo, hi)
    assert abs(got - expected) <= 2.0 / n


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def test_lq_norm_uniform_and_indicator():
    for q in (1.0, 1.5, 2.0, 7.0):
        assert lq_norm(uniform_density(64), q) == pytest.approx(1.0)
    n = 64
    d = DensityEstimate(np.where(np.arange(n) < n // 2, 2.0, 0.0), n,
                        Normalization.PROBABILITY)
    assert lq_norm(d, 2.0) == pytest.approx(math.sqrt(2.0))
    with pytest.raises(ValueError):
        lq_norm(d, 0.5)


def test_cdf_distance_basics():
    n = 64
    u = uniform_density(n)
    assert cdf_distance(u, u) == 0.0
    d = DensityEstimate(np.where(np.arange(n) < n // 2, 2.0, 0.0), n,
                        Normalization.PROBABILITY)
    # CDFs are 2x vs x on [0, 1/2]: the largest boundary gap is at x = 1/2
    assert cdf_distance(u, d) == pytest.approx(0.5)
    with pytest.raises(ResolutionMismatch):
        cdf_distance(u, uniform_density(32))


def test_interval_mass_partial_cells():
    d = uniform_density(10)
    assert interval_mass(d, 0.05, 0.25) == pytest.approx(0.2)


# ---------------------------------------------------------------------------
# two-oracle agreement (small-scale preview of the acceptance criterion)
# ---------------------------------------------------------------------------

def _arcsine_masses(n):
    # invariant measure of the full quadratic map: CDF = (2/pi) asin(sqrt x)
    edges = np.linspace(0.0, 1.0, n + 1)
    return np.diff(2.0 / math.pi * np.arcsin(np.sqrt(edges)))


def test_t4_orbit_histogram_matches_arcsine_law():
    # the orbit histogram is an unbiased estimator of the exact measure
    sys_ = make_system([make_map("T4"), make_map("T2")], [1.0 - 1e-12, 1e-12])
    n = 1 << 8
    h = orbit_histogram(sys_, 0.2137, 2 * 10 ** 6, n, seed=99)
    assert np.abs(h - _arcsine_masses(n)).sum() < 0.03


def test_t4_fixed_vector_bias_decays_with_resolution():
    # the fixed vector of the discretized operator carries a boundary bias
    # from the x^(-1/2) density singularity; it must shrink as cells refine
    sys_ = make_system([make_map("T4"), make_map("T2")], [1.0 - 1e-12, 1e-12])
    errs = []
    for e in (8, 10, 12):
        n = 1 << e
        d = power_iterate(build_ulam(sys_, n))
        errs.append(np.abs(d.masses() - _arcsine_masses(n)).sum())
    assert errs[0] < 0.08
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.03
