import numpy as np
import pytest
from numpy.testing import assert_allclose

from nlgame import numerics as nx
from nlgame.classical import (
    DeterministicStrategy,
    Infeasible,
    LocalDecomposition,
    classical_value,
    classical_value_lp,
    enumerate_deterministic,
    local_membership,
    pr_box,
    vertex_matrix,
    vertex_scores,
)
from nlgame.errors import TooLarge
from nlgame.model import Correlation, Game, Strategy, achieved_correlation, chsh_game, expected_score, random_povm


def test_vertex_counts():
    assert len(enumerate_deterministic((2, 2, 2, 2))) == 16
    assert len(enumerate_deterministic((1, 1, 3, 2))) == 6


def test_vertices_are_deterministic_tables():
    for v in enumerate_deterministic((2, 3, 2, 2)):
        t = v.correlation_table(2, 2)
        assert set(np.unique(t)) <= {0.0, 1.0}
        assert_allclose(t.sum(axis=(2, 3)), 1.0)


def test_enumeration_order_is_lexicographic():
    verts = enumerate_deterministic((2, 1, 2, 2))
    assert [(v.f, v.g) for v in verts[:3]] == [((0, 0), (0,)), ((0, 0), (1,)), ((0, 1), (0,))]


def test_vertex_matrix_matches_tables():
    shape = (2, 3, 3, 2)
    V = vertex_matrix(shape)
    for row, v in zip(V, enumerate_deterministic(shape)):
        assert_allclose(row, v.correlation_table(3, 2).reshape(-1))


def test_vertex_scores_match_direct_sum():
    rng = np.random.default_rng(0)
    w = rng.standard_normal((2, 2, 3, 3))
    direct = [np.sum(w * v.correlation_table(3, 3)) for v in enumerate_deterministic(w.shape)]
    assert_allclose(vertex_scores(w), direct, atol=1e-12)


def test_too_large():
    with pytest.raises(TooLarge):
        enumerate_deterministic((10, 10, 4, 4))
    with pytest.raises(TooLarge):
        classical_value(Game(np.full((1, 1), 1.0), np.ones((1, 1, 3, 3))), max_vertices=8)


def test_chsh_classical_value():
    value, witness = classical_value(chsh_game())
    assert value == pytest.approx(0.75, abs=1e-12)
    assert witness == DeterministicStrategy((0, 0), (0, 0))


def test_constant_game():
    g = Game(np.full((2, 2), 0.25), np.full((2, 2, 3, 2), 0.4))
    assert classical_value(g)[0] == pytest.approx(0.4)


def test_classical_value_equals_lp_and_dominates_vertices():
    rng = np.random.default_rng(1)
    for _ in range(25):
        g = Game(rng.dirichlet(np.ones(4)).reshape(2, 2), rng.random((2, 2, 2, 2)))
        value, witness = classical_value(g)
        assert value == pytest.approx(classical_value_lp(g), abs=1e-10)
        assert expected_score(g, witness.correlation(2, 2)) == pytest.approx(value)
        for v in enumerate_deterministic(g.shape):
            assert expected_score(g, v.correlation(2, 2)) <= value + 1e-12


def test_membership_of_vertex():
    v = DeterministicStrategy((1, 0), (0, 1))
    res = local_membership(v.correlation(2, 2))
    assert isinstance(res, LocalDecomposition)
    assert res.weights.sum() == pytest.approx(1.0)
    assert_allclose(res.reconstruct(2, 2), v.correlation_table(2, 2), atol=1e-12)
    assert res.vertices[int(np.argmax(res.weights))] == v


def test_membership_of_mixture():
    rng = np.random.default_rng(2)
    verts = enumerate_deterministic((2, 2, 3, 2))
    w = rng.dirichlet(np.ones(5))
    picks = rng.choice(len(verts), 5, replace=False)
    p = sum(wi * verts[i].correlation_table(3, 2) for wi, i in zip(w, picks))
    res = local_membership(Correlation(p))
    assert res.feasible
    assert res.residual <= 1e-10
    assert abs(res.weights.sum() - 1) <= 1e-9
    assert_allclose(res.reconstruct(3, 2), p, atol=1e-9)


def test_pr_box_is_rejected_by_chsh():
    res = local_membership(pr_box())
    assert isinstance(res, Infeasible)
    f = res.functional
    assert f.value == pytest.approx(1.0, abs=1e-12)
    assert f.vertex_max == pytest.approx(0.75, abs=1e-12)
    assert_allclose(f.coefficients, chsh_game().weights(), atol=1e-12)
    # soundness: recompute from scratch
    again = f.recheck(pr_box())
    assert again.gap == pytest.approx(f.gap, abs=1e-10)
    far = res.farkas
    assert far.value > far.vertex_max + 1e-10


def test_separable_strategies_are_local():
    rng = np.random.default_rng(3)
    for _ in range(15):
        R = np.stack([random_povm(2, 2, rng) for _ in range(2)])
        S = np.stack([random_povm(3, 2, rng) for _ in range(2)])
        w = rng.dirichlet(np.ones(3))
        gamma = sum(wi * np.kron(nx.random_density(2, rng), nx.random_density(2, rng)) for wi in w)
        res = local_membership(achieved_correlation(Strategy(R, S, gamma)))
        assert res.feasible, res.residual
