"""Elliptic fiber models: point counts, closed-form spectra, hearing.

Point counts were recomputed with an independent Legendre-symbol sum
(N = 1 + sum over x of 1 + chi(x^3 + Ax + B)); the F_25 counts with
standalone arithmetic in Z[w]/(w^2 - 2) mod 5.  Closed-form eigenvalues
are frozen from exact rational quadrature of the distance kernel.
"""

from fractions import Fraction

import pytest

from padic_spectra import spectral
from padic_spectra.elliptic import (
    AmbiguousMatchError,
    CurveSpec,
    HypothesisError,
    NoMatchError,
    branch_points_rational,
    build_elliptic_model,
    closed_form_discrepancies,
    closed_form_eigenvalue,
    count_points_bruteforce,
    hasse_window,
    hear_points,
    kappa_term,
    lambda0,
    lambda0_argmin,
    published_eigenvalue,
    serre_invariant,
)

# Legendre-sum oracle values
POINT_COUNTS = [
    (13, -1, 0, 8),
    (17, -1, 0, 16),
    (19, -1, 0, 20),
    (13, -7, 6, 16),
    (13, 6, 6, 16),
    (17, 3, 13, 20),
    (17, 8, 8, 24),
    (29, 22, 6, 32),
    (29, 14, 14, 36),
]

# exact quadrature, y^2 = x^3 - x over F_13, level 2 (N = 8):
# region -> {s: (depth-1 eigenvalue, depth-2 eigenvalue)}
E13_CLOSED = {
    "a": {
        2: (Fraction(25103, 1600), Fraction(293903, 1600)),
        3: (Fraction(11225487, 64000), Fraction(1838297487, 64000)),
    },
    "b": {
        2: (Fraction(328367, 19600), Fraction(3621167, 19600)),
        3: (Fraction(493239513, 2744000), Fraction(78828951513, 2744000)),
    },
    "c": {
        2: (Fraction(46397, 3136), Fraction(573245, 3136)),
        3: (Fraction(30256239, 175616), Fraction(5043741807, 175616)),
    },
}


# -- curve construction ------------------------------------------------------


def test_small_characteristic_rejected():
    for p in (2, 3):
        with pytest.raises(ValueError):
            CurveSpec(p, 1, 1)


def test_singular_curve_rejected():
    # 4 + 27*9 = 247 = 19*13
    with pytest.raises(ValueError):
        CurveSpec(13, 1, 3)


def test_coefficients_reduce_mod_p():
    a = CurveSpec(13, -1, 0)
    b = CurveSpec(13, 12, 13)
    assert a.A == b.A and a.B == b.B


def test_vector_coefficients_for_extension_fields():
    c1 = CurveSpec(5, 2, 1, f=2)
    c2 = CurveSpec(5, [2, 0], [1, 0], f=2)
    assert c1.A == c2.A and c1.B == c2.B
    assert c1.q == 25


@pytest.mark.parametrize("p,a4,a6,N", POINT_COUNTS)
def test_point_counts(p, a4, a6, N):
    assert count_points_bruteforce(CurveSpec(p, a4, a6)) == N


def test_point_count_extension_field():
    assert count_points_bruteforce(CurveSpec(5, -1, 0, f=2)) == 32
    assert count_points_bruteforce(CurveSpec(5, 2, 1, f=2)) == 35


def test_threaded_count_agrees():
    curve = CurveSpec(29, 22, 6)
    assert count_points_bruteforce(curve, threads=4) == 32


def test_serre_invariant():
    assert serre_invariant(CurveSpec(13, -1, 0)) == 8
    assert serre_invariant(CurveSpec(17, -1, 0)) == 0
    assert serre_invariant(CurveSpec(19, -1, 0)) == 2


def test_branch_points_rationality():
    assert branch_points_rational(CurveSpec(13, -1, 0))   # x^3 - x splits
    assert branch_points_rational(CurveSpec(13, -7, 6))   # (x-1)(x-2)(x+3)
    assert not branch_points_rational(CurveSpec(13, 0, 2))  # 11 is not a cube


def test_hasse_window():
    assert hasse_window(13) == (6, 22)
    assert hasse_window(17) == (9, 27)


# -- model construction ------------------------------------------------------


def test_fiber_census():
    model = build_elliptic_model(CurveSpec(13, -1, 0), 2)
    labels = [model.label_of(t * 13) for t in range(len(model.tops))]
    assert labels.count("a") == 1
    assert labels.count("b") == 4
    assert labels.count("c") == 3
    assert model.num_cells == 104
    assert model.total_measure == Fraction(8, 13)


def test_nerve_weights_from_fiber_counts():
    # chart 0 covers a+b fibers, chart 1 covers b+c, the overlap is b
    model = build_elliptic_model(CurveSpec(13, -1, 0), 2)
    entries = {
        frozenset(e["charts"]): e["weight"] for e in model.nerve.to_json_entries()
    }
    assert entries[frozenset({0})] == "5/13"
    assert entries[frozenset({1})] == "7/13"
    assert entries[frozenset({0, 1})] == "4/13"


def test_level_must_be_at_least_two():
    with pytest.raises(ValueError):
        build_elliptic_model(CurveSpec(13, -1, 0), 1)


def test_nonsplit_curve_refused():
    with pytest.raises(HypothesisError):
        build_elliptic_model(CurveSpec(13, 0, 2), 2)


# -- closed-form eigenvalues ----------------------------------------------------


@pytest.mark.parametrize("region", ["a", "b", "c"])
@pytest.mark.parametrize("s", [2, 3])
def test_closed_form_matches_rational_quadrature(region, s):
    lam1 = closed_form_eigenvalue(Fraction(1, 13), region, s, 8, 13)
    lam2 = closed_form_eigenvalue(Fraction(1, 169), region, s, 8, 13)
    assert lam1 == E13_CLOSED[region][s][0]
    assert lam2 == E13_CLOSED[region][s][1]


@pytest.mark.parametrize("region", ["a", "b", "c"])
def test_closed_form_collapses_at_s_zero(region):
    for mu in (Fraction(1, 13), Fraction(1, 169)):
        assert closed_form_eigenvalue(mu, region, 0, 8, 13) == Fraction(8, 13)


def test_closed_form_matches_model_quadrature_float():
    model = build_elliptic_model(CurveSpec(17, -1, 0), 2)
    for ti in range(len(model.tops)):
        region = model.label_of(ti * 17)
        lam = spectral.wavelet_eigenvalue_numeric(model, model.ball(ti), 1.5)
        ref = closed_form_eigenvalue(Fraction(1, 17), region, 1.5, 16, 17)
        assert abs(lam - ref) <= 1e-10 * abs(ref)


def test_kappa_needs_at_least_six_points():
    with pytest.raises(HypothesisError):
        kappa_term("a", 2, 5, 13)


def test_published_form_disagrees_with_quadrature():
    # the printed closed form misses the s=0 collapse in every region
    for region in ("a", "b", "c"):
        pub = published_eigenvalue(Fraction(1, 13), region, 0, 8, 13)
        assert pub != Fraction(8, 13)
    rows = closed_form_discrepancies(8, 13, 2)
    assert rows
    assert all(abs(r["delta"]) > 0 for r in rows)
    assert {r["region"] for r in rows} == {"a", "b", "c"}


# -- hearing --------------------------------------------------------------------


def test_lambda0_is_exact_for_integer_s():
    lam = lambda0(CurveSpec(13, -1, 0), s=2)
    assert lam == Fraction(46397, 3136)


def test_lambda0_argmin_reports_ties():
    assert lambda0_argmin(8, 13, s=2) == [(Fraction(1, 13), "c")]
    ties = lambda0_argmin(8, 13, s=0)
    assert len(ties) == 3


def test_hearing_round_trip_exact():
    lam = lambda0(CurveSpec(13, -1, 0), s=2)
    result = hear_points(float(lam), 13, 2)
    assert result.N == 8
    assert result.method == "forward-search"
    assert result.window == (6, 22)


@pytest.mark.parametrize("p,a4,a6,N", POINT_COUNTS[:7])
def test_hearing_round_trip_table(p, a4, a6, N):
    curve = CurveSpec(p, a4, a6)
    lam = lambda0(curve, s=2)
    assert hear_points(float(lam), p, 2).N == N


def test_hearing_float_exponent():
    curve = CurveSpec(13, -7, 6)
    model = build_elliptic_model(curve, 2)
    lam = spectral.enumerate_spectrum(model, 2.7).lambda_min_wavelet
    assert hear_points(lam, 13, 2.7).N == 16


def test_hearing_no_match_outside_window():
    with pytest.raises(NoMatchError):
        hear_points(1000.0, 13, 2)


def test_hearing_no_match_when_perturbed_beyond_tolerance():
    lam = float(lambda0(CurveSpec(13, -1, 0), s=2))
    with pytest.raises(NoMatchError):
        hear_points(lam + 1e-6, 13, 2)


def test_hearing_ambiguous_with_sloppy_tolerance():
    lam = float(lambda0(CurveSpec(13, -1, 0), s=2))
    with pytest.raises(AmbiguousMatchError):
        hear_points(lam, 13, 2, tolerance=10)


def test_paper_formula_diagnostics_present():
    lam = float(lambda0(CurveSpec(13, -7, 6), s=2))
    result = hear_points(lam, 13, 2)
    pf = result.paper_formulas
    assert set(pf) == {"s1", "sandwich_lo", "sandwich_hi", "t0"}
    assert pf["sandwich_lo"] == pytest.approx(15.326473736292586)
    assert pf["sandwich_hi"] == pytest.approx(21.489710604438876)
    assert pf["t0"] == pytest.approx(-0.48971060443887815)
    assert any("contain the recovered N" in n for n in result.notes)


def test_sandwich_failure_is_reported_not_raised():
    # N = 16 < q + 1 = 18: the recovered count sits below the printed bounds
    lam = float(lambda0(CurveSpec(17, -1, 0), s=2))
    result = hear_points(lam, 17, 2)
    assert result.N == 16
    assert any("do NOT contain" in n for n in result.notes)


def test_hearing_result_serializes():
    lam = float(lambda0(CurveSpec(13, -1, 0), s=2))
    doc = hear_points(lam, 13, 2).to_json_dict()
    assert doc["N_recovered"] == 8
    assert doc["hasse_window"] == [6, 22]
    assert "paper_formulas" in doc and "notes" in doc
