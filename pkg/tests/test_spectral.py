"""Operator assembly, wavelet spectra, kernels, and path sampling.

Reference values come from dense linear algebra run on matrices assembled
independently from scalar distance queries (numpy eigvalsh / scipy expm /
numpy pinv), and from exact rational quadrature of the eigenvalue integral.
"""

from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from padic_spectra import builtin_models, spectral
from padic_spectra.elliptic import CurveSpec, build_elliptic_model
from padic_spectra.models import ModelError, build_projective_model

# dense eigvalsh of the s=2 operator on P1(F_5) at level 2, independent run
P1_DENSE_SPECTRUM = [
    (0.0, 1),
    (1.077777777778, 1),
    (1.2, 4),
    (5.938888888889, 8),
    (6.0, 16),
]

# exact rational quadrature on E: y^2 = x^3 - x over F_13 at level 2, s=2;
# keyed by region label, (depth-1 ball, depth-2 ball)
E13_S2_EXACT = {
    "a": (Fraction(25103, 1600), Fraction(293903, 1600)),
    "b": (Fraction(328367, 19600), Fraction(3621167, 19600)),
    "c": (Fraction(46397, 3136), Fraction(573245, 3136)),
}

# reduced top-block eigenvalues of the same model, dense reference
E13_S2_REDUCED = [
    0.0,
    2.0109442483753672,
    2.060267857142847,
    2.060267857142847,
    3.2586986087674945,
    4.565918367346935,
    4.565918367346935,
    4.565918367346935,
]

# scipy.linalg.expm / numpy pinv on the dense 104-cell operator
E13_HEAT_T07_00 = 3.0304346042147023
E13_HEAT_T07_013 = 1.1556920866319103
E13_GREEN_00 = 13.75504127599562
E13_GREEN_013 = -0.9037828947368313


@pytest.fixture(scope="module")
def p1_model():
    model, _, _ = build_projective_model(5, 1, 2)
    return model


@pytest.fixture(scope="module")
def e13_model():
    return build_elliptic_model(CurveSpec(13, -1, 0), 2)


def _region_label(model, top_index):
    region = model.tops[top_index].region
    return {frozenset({0}): "a", frozenset({0, 1}): "b", frozenset({1}): "c"}[
        frozenset(region)
    ]


# -- operator assembly ---------------------------------------------------------


def test_float_operator_rows_sum_to_zero(p1_model):
    L = spectral.assemble_operator(p1_model, 2)
    assert np.abs(L.sum(axis=1)).max() < 1e-12
    assert np.abs(L - L.T).max() == 0
    off = L[~np.eye(len(L), dtype=bool)]
    assert (off < 0).all()


def test_exact_operator_is_rational_and_balanced(p1_model):
    L = spectral.assemble_operator(p1_model, 2, exact=True)
    assert L.dtype == object
    for i in range(p1_model.num_cells):
        assert sum(L[i]) == 0
        assert isinstance(L[i, 0], Fraction)
    # d(0,1) = 1/5 (cells split at depth 1), mu_cell = 1/25
    assert L[0, 1] == -Fraction(1, 5) ** -2 * Fraction(1, 25)


def test_exact_and_float_operators_agree(e13_model):
    Lf = spectral.assemble_operator(e13_model, 2)
    Le = spectral.assemble_operator(e13_model, 2, exact=True)
    sample = [(0, 0), (0, 1), (0, 13), (5, 90), (103, 103)]
    for i, j in sample:
        assert Lf[i, j] == pytest.approx(float(Le[i, j]), rel=1e-14)


def test_operator_cell_limit():
    model, _, _ = build_projective_model(5, 2, 2)
    with pytest.raises(ModelError):
        spectral.assemble_operator(model, 2, max_cells=100)


# -- wavelet classes ------------------------------------------------------------


def test_wavelets_are_eigenvectors(p1_model):
    L = spectral.assemble_operator(p1_model, 2)
    ball = p1_model.ball(0)
    W = spectral.wavelet_family(p1_model, ball)
    lam = spectral.wavelet_eigenvalue_numeric(p1_model, ball, 2)
    assert W.shape == (4, p1_model.num_cells)
    for w in W:
        assert np.abs(L @ w - float(lam) * w).max() < 1e-10
    lo, hi = ball.cell_range
    outside = np.ones(p1_model.num_cells, dtype=bool)
    outside[lo:hi] = False
    assert np.abs(W[:, outside]).max() == 0


def test_wavelets_are_mean_zero(p1_model):
    W = spectral.wavelet_family(p1_model, p1_model.ball(0))
    assert np.abs(W.sum(axis=1)).max() < 1e-10


def test_single_cell_balls_carry_no_wavelets(p1_model):
    with pytest.raises(ModelError):
        spectral.wavelet_family(p1_model, p1_model.ball(0, (1,)))


def test_exact_eigenvalues_match_rational_quadrature(e13_model):
    for ti in range(len(e13_model.tops)):
        label = _region_label(e13_model, ti)
        lam1 = spectral.wavelet_eigenvalue_numeric(e13_model, e13_model.ball(ti), 2)
        assert lam1 == E13_S2_EXACT[label][0]


def test_class_enumeration_matches_dense_spectrum(p1_model):
    summary = spectral.enumerate_spectrum(p1_model, 2)
    got = sorted(
        [(round(float(c.eigenvalue), 9), c.multiplicity) for c in summary.classes]
    )
    # two single-chart poles are spectrally degenerate: 4 + 4 at 1069/180
    assert got == [(5.938888889, 4), (5.938888889, 4), (6.0, 16)]
    assert summary.total_dimension == p1_model.num_cells
    assert summary.complement_dimension == len(p1_model.tops)


def test_full_dense_spectrum_reconstruction(p1_model):
    L = spectral.assemble_operator(p1_model, 2)
    dense = np.sort(np.linalg.eigvalsh(L))
    expected = np.sort(
        np.concatenate([[v] * m for v, m in P1_DENSE_SPECTRUM])
    )
    assert np.abs(dense - expected).max() < 1e-9


def test_reduced_block_eigenvalues_frozen(e13_model):
    got = spectral.reduced_block_eigenvalues(e13_model, 2)
    assert np.abs(np.sort(got) - np.array(E13_S2_REDUCED)).max() < 1e-9


def test_reduced_block_can_sit_below_wavelet_minimum(e13_model):
    summary = spectral.enumerate_spectrum(e13_model, 2)
    nonzero = [v for v in summary.reduced_eigenvalues if v > 1e-10]
    assert min(nonzero) < summary.lambda_min_wavelet


def test_spectrum_json_carries_exact_values(e13_model):
    doc = spectral.enumerate_spectrum(e13_model, 2).to_json_dict()
    exacts = {c["eigenvalue_exact"] for c in doc["classes"]}
    assert "46397/3136" in exacts
    assert doc["total_dimension"] == 104


# -- kernels ------------------------------------------------------------------


def test_heat_kernel_spot_values(e13_model):
    K = spectral.heat_kernel(e13_model, 2, 0.7)
    assert K[0, 0] == pytest.approx(E13_HEAT_T07_00, abs=1e-9)
    assert K[0, 13] == pytest.approx(E13_HEAT_T07_013, abs=1e-9)


def test_heat_kernel_matches_dense_exponential(e13_model):
    L = spectral.assemble_operator(e13_model, 2)
    mu = float(e13_model.cell_measure)
    for t in (0.1, 1.3):
        K = spectral.heat_kernel(e13_model, 2, t)
        ref = scipy.linalg.expm(-t * L) / mu
        assert np.abs(K - ref).max() < 1e-9


def test_heat_kernel_mass_and_symmetry(e13_model):
    mu = float(e13_model.cell_measure)
    K = spectral.heat_kernel(e13_model, 2, 0.4)
    assert np.abs((K * mu).sum(axis=1) - 1).max() < 1e-12
    assert np.abs(K - K.T).max() < 1e-12


def test_heat_kernel_at_time_zero_is_identity(e13_model):
    K = spectral.heat_kernel(e13_model, 2, 0.0)
    mu = float(e13_model.cell_measure)
    assert np.abs(K - np.eye(len(K)) / mu).max() < 1e-12


def test_heat_kernel_semigroup(e13_model):
    mu = float(e13_model.cell_measure)
    K1 = spectral.heat_kernel(e13_model, 2, 0.3)
    K2 = spectral.heat_kernel(e13_model, 2, 0.4)
    K3 = spectral.heat_kernel(e13_model, 2, 0.7)
    assert np.abs((K1 * mu) @ K2 - K3).max() < 1e-9


def test_heat_kernel_rejects_negative_time(e13_model):
    with pytest.raises(ValueError):
        spectral.heat_kernel(e13_model, 2, -0.1)


def test_literal_constant_term_loses_unit_mass(e13_model):
    mu = float(e13_model.cell_measure)
    total = float(e13_model.total_measure)
    K = spectral.heat_kernel(e13_model, 2, 0.7, paper_constant_term=True)
    Kref = spectral.heat_kernel(e13_model, 2, 0.7)
    # with the bare constant term the rows integrate to mu(X) = 8/13, not 1
    assert np.abs((K * mu).sum(axis=1) - total).max() < 1e-9
    assert np.abs(K - Kref).max() > 1e-3
    # both kernels share the wavelet part, so the gap is constant per top pair
    per = e13_model.cells_per_top
    ntops = len(e13_model.tops)
    D = (K - Kref).reshape(ntops, per, ntops, per)
    assert np.abs(D - D[:, :1, :, :1]).max() < 1e-10


def test_wavelet_only_heat_kernel_keeps_mass_drops_mixing(e13_model):
    mu = float(e13_model.cell_measure)
    per = e13_model.cells_per_top
    K = spectral.heat_kernel(e13_model, 2, 0.5, complement=False)
    # normalized constant term: rows still integrate to 1
    assert np.abs((K * mu).sum(axis=1) - 1).max() < 1e-12
    # but cross-fiber entries are frozen at the flat constant
    flat = e13_model.branching / len(e13_model.tops)
    assert np.abs(K[:per, per : 2 * per] - flat).max() < 1e-12
    # the bare-1 form carries no complement either, so the flag wins
    A = spectral.heat_kernel(e13_model, 2, 0.5, paper_constant_term=True, complement=False)
    B = spectral.heat_kernel(e13_model, 2, 0.5, paper_constant_term=True)
    assert (A == B).all()


def test_wavelet_only_semigroup_drops_cross_fiber_part(e13_model):
    rng = np.random.default_rng(13)
    h = rng.normal(size=e13_model.num_cells)
    per = e13_model.cells_per_top
    ntops = len(e13_model.tops)
    means = h.reshape(ntops, per).mean(axis=1)
    projected = h - np.repeat(means - means.mean(), per)
    L = spectral.assemble_operator(e13_model, 2)
    ref = scipy.linalg.expm(-0.4 * L) @ projected
    got = spectral.semigroup_apply(e13_model, 2, 0.4, h, complement=False)
    assert np.abs(got - ref).max() < 1e-9
    # on the spanned subspace both modes agree
    agree = spectral.semigroup_apply(e13_model, 2, 0.4, projected)
    assert np.abs(got - agree).max() < 1e-9


def test_wavelet_only_green_cross_fiber_zero(e13_model):
    per = e13_model.cells_per_top
    mu = float(e13_model.cell_measure)
    G = spectral.green_function(e13_model, 2, complement=False)
    assert np.abs(G[:per, per:]).max() == 0.0
    assert np.abs((G * mu).sum(axis=1)).max() < 1e-9


def test_green_function_spot_values(e13_model):
    G = spectral.green_function(e13_model, 2)
    assert G[0, 0] == pytest.approx(E13_GREEN_00, abs=1e-9)
    assert G[0, 13] == pytest.approx(E13_GREEN_013, abs=1e-9)


def test_green_inverts_off_constants(e13_model):
    L = spectral.assemble_operator(e13_model, 2)
    G = spectral.green_function(e13_model, 2)
    n = len(L)
    mu = float(e13_model.cell_measure)
    proj = np.eye(n) - np.full((n, n), 1.0 / n)
    assert np.abs(L @ G * mu - proj).max() < 1e-9


def test_green_warns_below_s_one(p1_model):
    with pytest.warns(UserWarning):
        spectral.green_function(p1_model, 1)


def test_reduced_green_exact_pseudoinverse(e13_model):
    Gp = spectral.green_reduced_exact(e13_model, 2)
    Q = spectral.reduced_operator(e13_model, 2, exact=True)
    k = len(Gp)
    for i in range(k):
        for j in range(k):
            prod = sum(Q[i, l] * Gp[l][j] for l in range(k))
            expected = (1 if i == j else 0) - Fraction(1, k)
            assert prod == expected


def test_reduced_green_exact_is_level_independent():
    curve = CurveSpec(13, -1, 0)
    g2 = spectral.green_reduced_exact(build_elliptic_model(curve, 2), 2)
    g3 = spectral.green_reduced_exact(build_elliptic_model(curve, 3), 2)
    assert g2 == g3


def test_semigroup_apply_matches_dense(e13_model):
    rng = np.random.default_rng(5)
    h = rng.normal(size=e13_model.num_cells)
    L = spectral.assemble_operator(e13_model, 2)
    for t in (0.2, 1.0):
        got = spectral.semigroup_apply(e13_model, 2, t, h)
        ref = scipy.linalg.expm(-t * L) @ h
        assert np.abs(got - ref).max() < 1e-9


def test_semigroup_apply_shape_check(e13_model):
    with pytest.raises(ValueError):
        spectral.semigroup_apply(e13_model, 2, 0.5, np.zeros(7))


# -- path sampling ---------------------------------------------------------------


def test_sample_paths_requires_seed(e13_model):
    with pytest.raises(ValueError):
        spectral.sample_paths(e13_model, 2, 0.5, 100, seed=None)


def test_sample_paths_deterministic(e13_model):
    a = spectral.sample_paths(e13_model, 2, 0.5, 400, seed=11, start=0)
    b = spectral.sample_paths(e13_model, 2, 0.5, 400, seed=11, start=0)
    assert (a.empirical_law == b.empirical_law).all()
    assert (a.first_holding == b.first_holding).all()
    c = spectral.sample_paths(e13_model, 2, 0.5, 400, seed=12, start=0)
    assert (a.empirical_law != c.empirical_law).any()


def test_sample_paths_law_is_a_distribution(e13_model):
    r = spectral.sample_paths(e13_model, 2, 0.5, 300, seed=4)
    assert r.empirical_law.sum() == pytest.approx(1.0)
    assert (r.empirical_law >= 0).all()
    assert len(r.trajectories) <= 10
    assert (r.first_holding > 0).all()


def test_sample_paths_step_cap(e13_model):
    with pytest.raises(RuntimeError):
        spectral.sample_paths(
            e13_model, 2, 50.0, 500, seed=3, _rate_cap_steps=10
        )


def test_sample_paths_json_summary(e13_model):
    doc = spectral.sample_paths(e13_model, 2, 0.5, 200, seed=9).to_json_dict()
    for key in ("empirical_law", "jumps", "first_holding_mean", "trajectories"):
        assert key in doc


def test_sample_paths_at_time_zero_is_point_mass(e13_model):
    r = spectral.sample_paths(e13_model, 2, 0.0, 64, seed=6, start=5)
    assert r.empirical_law[5] == 1.0
    assert r.empirical_law.sum() == 1.0


# -- structural invariants ---------------------------------------------------------


def test_eigen_residual_every_builtin_model():
    for label, model in builtin_models():
        L = spectral.assemble_operator(model, 2)
        for depth in range(1, model.level):
            for ball in model.balls(depth):
                W = spectral.wavelet_family(model, ball)
                lam = float(spectral.wavelet_eigenvalue_numeric(model, ball, 2))
                resid = np.abs(L @ W.T - lam * W.T).max()
                assert resid < 1e-10, (label, ball.id_string, resid)


def test_exact_difference_vectors_are_eigenvectors(e13_model):
    # any mean-zero vector constant on the children of a ball lies in the
    # same eigenspace as the character rows; in rational arithmetic the
    # residual vanishes identically
    L = spectral.assemble_operator(e13_model, 2, exact=True)
    n = e13_model.num_cells
    ball = e13_model.ball(3)
    lam = spectral.wavelet_eigenvalue_numeric(e13_model, ball, 2, exact=True)
    lo, hi = ball.cell_range
    width = (hi - lo) // e13_model.branching
    for k in range(e13_model.branching - 1):
        v = [Fraction(0)] * n
        for x in range(lo + k * width, lo + (k + 1) * width):
            v[x] = Fraction(1)
        for x in range(lo + (k + 1) * width, lo + (k + 2) * width):
            v[x] = Fraction(-1)
        support = [j for j in range(n) if v[j]]
        for i in range(n):
            assert sum(L[i, j] * v[j] for j in support) == lam * v[i]


def test_rayleigh_quotients_are_basis_independent(e13_model):
    # character rows vs a Gram-Schmidt basis of child-indicator differences:
    # both must give the ball's eigenvalue as Rayleigh quotient
    L = spectral.assemble_operator(e13_model, 2)
    ball = e13_model.ball(0)
    lam = float(spectral.wavelet_eigenvalue_numeric(e13_model, ball, 2))
    c = e13_model.branching
    lo, hi = ball.cell_range
    width = (hi - lo) // c
    raw = np.zeros((c - 1, e13_model.num_cells))
    for k in range(c - 1):
        raw[k, lo + k * width : lo + (k + 1) * width] = 1.0
        raw[k, lo + (k + 1) * width : lo + (k + 2) * width] = -1.0
    gram_schmidt = np.linalg.qr(raw.T)[0].T
    for v in list(gram_schmidt) + list(spectral.wavelet_family(e13_model, ball)):
        quotient = np.real(np.vdot(v, L @ v) / np.vdot(v, v))
        assert quotient == pytest.approx(lam, rel=1e-10)


def test_positive_maximum_principle(e13_model):
    # the generator -L pushes down at any maximum; checked on 100 random h
    L = spectral.assemble_operator(e13_model, 2)
    rng = np.random.default_rng(7)
    for _ in range(100):
        h = rng.normal(size=e13_model.num_cells)
        x0 = int(np.argmax(h))
        assert -(L @ h)[x0] <= 1e-12


def test_spectrum_dimensions_account_for_every_cell():
    for label, model in builtin_models():
        summary = spectral.enumerate_spectrum(model, 2)
        wavelet_dim = sum(cls.multiplicity for cls in summary.classes)
        assert wavelet_dim + len(model.tops) == model.num_cells, label


def test_semigroup_functional_equation_on_random_vector(e13_model):
    rng = np.random.default_rng(11)
    h = rng.normal(size=e13_model.num_cells)
    joint = spectral.semigroup_apply(e13_model, 2, 0.8, h)
    nested = spectral.semigroup_apply(
        e13_model, 2, 0.3, spectral.semigroup_apply(e13_model, 2, 0.5, h)
    )
    assert np.abs(joint - nested).max() < 1e-9


def test_green_rows_integrate_to_zero(e13_model):
    mu = float(e13_model.cell_measure)
    G = spectral.green_function(e13_model, 2)
    assert np.abs((G * mu).sum(axis=1)).max() < 1e-9
