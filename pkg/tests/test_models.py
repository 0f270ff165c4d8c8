"""Cell models: construction census, measures, joins, distance, serialization.

Census values are combinatorial: a projective n-space over F_q has
(q^(n+1)-1)/(q-1) residue points, each top ball is an n-dimensional unit
polydisc of measure q^(-n), and every level multiplies the cell count by
the branching factor q^n.
"""

from fractions import Fraction

import numpy as np
import pytest

from padic_spectra.models import (
    Ball,
    ModelError,
    build_projective_model,
    build_Y_model,
    geodesic_distance,
    model_to_json,
    verify_ball_transition_consistency,
)


@pytest.fixture(scope="module")
def p1():
    model, atlas, nerve = build_projective_model(5, 1, 2)
    return model, atlas, nerve


@pytest.fixture(scope="module")
def p2():
    model, atlas, nerve = build_projective_model(5, 2, 2)
    return model, atlas, nerve


# -- census ---------------------------------------------------------------


@pytest.mark.parametrize(
    "p,n,level,tops,cells,total",
    [
        (5, 1, 2, 6, 30, Fraction(6, 5)),
        (5, 1, 3, 6, 150, Fraction(6, 5)),
        (5, 2, 2, 31, 775, Fraction(31, 25)),
        (7, 2, 2, 57, 2793, Fraction(57, 49)),
    ],
)
def test_projective_census(p, n, level, tops, cells, total):
    model, _, _ = build_projective_model(p, n, level)
    assert len(model.tops) == tops
    assert model.num_cells == cells
    assert model.total_measure == total
    assert model.branching == p**n


def test_y_model_census():
    model, _, _ = build_Y_model(5, 2, 2)
    assert len(model.tops) == 15
    assert model.num_cells == 375
    assert model.total_measure == Fraction(3, 5)
    # pairwise overlaps only: no point lies on all three coordinate spheres
    regions = {frozenset(t.region) for t in model.tops}
    assert frozenset({0, 1, 2}) not in regions
    assert frozenset({0, 1}) in regions


def test_total_measure_is_sum_of_cells(p1):
    model, _, _ = p1
    assert model.num_cells * model.cell_measure == model.total_measure


# -- nerve ------------------------------------------------------------------


@pytest.mark.parametrize("p", [5, 7])
def test_projective_plane_nerve_weights(p):
    _, _, nerve = build_projective_model(p, 2, 2)
    one = Fraction(1)
    for entry in nerve.to_json_entries():
        k = len(entry["charts"])
        expected = (one - Fraction(1, p)) ** (k - 1)
        num, den = entry["weight"].split("/")
        assert Fraction(int(num), int(den)) == expected


def test_nerve_weight_equals_overlap_measure(p2):
    model, _, nerve = p2
    mu_top = Fraction(1, model.branching)
    for entry in nerve.to_json_entries():
        charts = set(entry["charts"])
        overlap = sum(
            (mu_top for t in model.tops if charts <= t.region), Fraction(0)
        )
        num, den = entry["weight"].split("/")
        assert Fraction(int(num), int(den)) == overlap


def test_nerve_is_connected(p1):
    _, _, nerve = p1
    assert nerve.is_connected()


# -- balls and joins ----------------------------------------------------------


def test_ball_measure_halving(p1):
    model, _, _ = p1
    top = model.ball(0)
    child = model.ball(0, (1,))
    assert top.measure == Fraction(1, 5)
    assert child.measure == Fraction(1, 25)
    assert child.cell_range == (1, 2)
    assert child.parent().measure == top.measure


def test_ball_depth_capped_by_level(p1):
    model, _, _ = p1
    with pytest.raises(ModelError):
        Ball(model, 0, (1, 2))


def test_join_within_a_top(p1):
    model, _, _ = p1
    assert model.join(0, 0).measure == model.cell_measure
    assert model.join(0, 4).measure == Fraction(1, 5)


def test_join_across_tops_goes_through_chart_ball(p1):
    model, _, _ = p1
    # tops 0 and 1 both carry chart 0, whose domain is the unit ball
    assert model.geodesic_distance(0, 6) == 1


def test_distance_between_opposite_poles(p1):
    model, _, _ = p1
    # the two ends of the line share no chart; the path crosses everything
    assert model.geodesic_distance(0, 29) == Fraction(6, 5)
    assert model.geodesic_distance(29, 0) == Fraction(6, 5)


def test_distance_matrix_matches_scalar_queries(p1):
    model, _, _ = p1
    D, mu = model.distance_matrix()
    assert mu == model.cell_measure
    scale = model.branching**model.level
    for x in range(0, model.num_cells, 7):
        for y in range(0, model.num_cells, 11):
            assert Fraction(int(D[x, y]), scale) == geodesic_distance(model, x, y)


def test_distance_matrix_symmetric_positive(p1):
    model, _, _ = p1
    D, _ = model.distance_matrix()
    assert (D == D.T).all()
    assert (D > 0).all()
    # self-distance is the cell's own extent
    assert (np.diag(D) == 1).all()


def test_digits_roundtrip(p1):
    model, _, _ = p1
    for cell in range(model.num_cells):
        t = model.top_index_of(cell)
        assert model.cell_id(t, model.digits_of(cell)) == cell


def test_representative_structure(p1):
    model, _, _ = p1
    rep = model.representative(7)
    assert rep["chart"] in model.chart_ids
    assert len(rep["coordinate_digits"]) == model.level


# -- transitions ---------------------------------------------------------------


def test_ball_transition_consistency_on_the_line(p1):
    model, atlas, _ = p1
    checked, failures = verify_ball_transition_consistency(model, atlas, max_depth=2)
    assert checked > 0
    assert failures == []


# -- serialization ---------------------------------------------------------------


def test_model_json_shape(p1):
    model, _, _ = p1
    doc = model_to_json(model, include_cells=False)
    assert doc["schema"] == "padic-spectra/model-v1"
    assert doc["total_measure"] == "6/5"
    assert doc["num_cells"] == 30
    assert {"charts": [0, 1], "weight": "4/5"} in doc["simplices"]
    assert "cells" not in doc


def test_model_json_with_cells(p1):
    model, _, _ = p1
    doc = model_to_json(model)
    assert len(doc["cells"]) == model.num_cells
