import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nlgame import numerics as nx
from nlgame.classicalize import perfect_guessing_strategy
from nlgame.errors import DomainError, NotPSD
from nlgame.guessing import (
    Ensemble,
    allows_perfect_guessing,
    discriminate,
    discriminate_iterative,
    guessing_probability,
    guessing_table,
    helstrom_binary,
    min_entropy,
    perfectly_distinguishable,
    pre_measurement_guessing,
    pretty_good_measurement,
    success_probability,
)
from nlgame.model import (
    Strategy,
    chsh_optimal_strategy,
    noisy_chsh_strategy,
    product_strategy,
    random_strategy,
    second_player_states,
)
from oracles import trine_grid_oracle, trine_states

P_CHSH = 0.5 + math.sqrt(2) / 4


def test_perfectly_distinguishable_examples():
    assert perfectly_distinguishable([np.diag([0.5, 0]), np.diag([0, 0.5])])
    a = nx.projector(nx.ket(math.pi / 8)) / 2
    b = nx.projector(nx.ket(5 * math.pi / 8)) / 2
    assert perfectly_distinguishable([a, b])
    sps_states = [nx.projector(nx.ket(math.pi / 8)) * 0.4, nx.projector(nx.ket(math.pi / 8)) * 0.1]
    assert not perfectly_distinguishable(sps_states)


def test_allows_perfect_guessing_chsh_witness():
    v = allows_perfect_guessing(chsh_optimal_strategy())
    assert not v
    assert v.witness == (0, 0, 0)
    assert v.overlap == pytest.approx(1.0)


def test_allows_perfect_guessing_generator():
    rng = np.random.default_rng(0)
    for _ in range(10):
        g = perfect_guessing_strategy(rng, (2, 2, 3, 2))
        assert allows_perfect_guessing(g.strategy)


def private_coin_strategy():
    # Alice ignores the state and flips a fair coin; the state is classical
    R = np.full((2, 2, 1, 1), 0.5, dtype=complex)
    S = np.stack([np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])])] * 2).astype(complex)
    return Strategy(R, S, np.diag([0.5, 0.5]).astype(complex))


def test_private_randomness_breaks_perfect_guessing():
    s = private_coin_strategy()
    assert not allows_perfect_guessing(s)
    assert pre_measurement_guessing(s, 0).p_guess == pytest.approx(0.5)


def test_helstrom_examples():
    r = helstrom_binary(np.eye(2) / 4, np.eye(2) / 4)
    assert r.conditional == pytest.approx(0.5)
    r = helstrom_binary(np.diag([0.5, 0]), np.diag([0, 0.5]))
    assert r.p_guess == pytest.approx(1.0)
    with pytest.raises(NotPSD):
        helstrom_binary(np.diag([1.0, -0.1]), np.eye(2))


def test_helstrom_povm_self_consistent():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = np.stack([nx.random_psd(3, rng) for _ in range(2)])
        s /= np.trace(s.sum(0)).real
        r = helstrom_binary(s[0], s[1])
        assert success_probability(r.povm, s) == pytest.approx(r.p_guess, abs=1e-12)
        assert_allclose(r.povm.sum(0), np.eye(3), atol=1e-12)


def test_chsh_helstrom_total():
    s = chsh_optimal_strategy()
    sps = second_player_states(s, 0, 0)
    total = sum(helstrom_binary(*sps.ensemble(y)).p_guess for y in range(2))
    assert total == pytest.approx(P_CHSH, abs=1e-12)


def test_iterative_matches_helstrom_on_binary():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(2, 5))
        s = np.stack([nx.random_psd(d, rng, int(rng.integers(1, d + 1))) for _ in range(2)])
        s *= rng.uniform(0.2, 1.0) / np.trace(s.sum(0)).real
        it = discriminate_iterative(Ensemble(s))
        worst = max(worst, abs(it.p_guess - helstrom_binary(s[0], s[1]).p_guess))
    assert worst <= 1e-6


def test_iterative_boundary_optimum_with_tiny_gap():
    # outcome 1 should take everything; along e1 it wins by only 2e-6, where the
    # fixed point alone creeps by a factor (0.3 / 0.300002)^2 per step
    s = np.stack([np.diag([0.0, 0.3]), np.diag([0.4, 0.300002])])
    h = helstrom_binary(s[0], s[1]).p_guess
    assert h == pytest.approx(0.700002, abs=1e-12)
    r = discriminate_iterative(Ensemble(s))
    assert abs(r.p_guess - h) <= 1e-9
    assert r.p_guess <= h + 1e-12
    assert h - r.p_guess <= r.gap_bound + 1e-12
    assert np.all(np.diff(r.history) >= 0)


def test_iterative_history_is_monotone():
    rng = np.random.default_rng(3)
    for _ in range(30):
        s = np.stack([nx.random_psd(3, rng, 1) for _ in range(4)])
        s /= np.trace(s.sum(0)).real
        r = discriminate_iterative(Ensemble(s))
        assert np.all(np.diff(r.history) >= 0)
        assert r.gap_bound >= 0
        assert_allclose(r.povm.sum(0), np.eye(3), atol=1e-8)


def test_iterative_perfectly_distinguishable():
    s = np.stack([np.diag([0.2, 0, 0]), np.diag([0, 0.5, 0]), np.diag([0, 0, 0.3])])
    r = discriminate_iterative(Ensemble(s))
    assert r.p_guess == pytest.approx(1.0, abs=1e-8)


def test_trine_against_grid_oracle():
    states = trine_states()
    oracle = trine_grid_oracle(states)
    assert oracle == pytest.approx(2 / 3, abs=1e-6)
    r = discriminate_iterative(Ensemble(states))
    assert r.p_guess == pytest.approx(oracle, abs=1e-4)
    assert r.p_guess == pytest.approx(2 / 3, abs=1e-4)


def test_pgm_is_a_povm():
    rng = np.random.default_rng(4)
    s = np.stack([nx.random_psd(4, rng, 1) for _ in range(3)])
    m = pretty_good_measurement(Ensemble(s))
    assert_allclose(m.sum(0), np.eye(4), atol=1e-10)
    for e in m:
        assert nx.is_psd(e)


def test_chsh_guessing_probability_all_inputs():
    s = chsh_optimal_strategy()
    for a in range(2):
        for b in range(2):
            r = guessing_probability(s, a, b)
            assert r.p_guess == pytest.approx(P_CHSH, abs=1e-6)
            assert min_entropy(r) == pytest.approx(-math.log2(P_CHSH), abs=1e-9)


def test_chsh_pre_measurement_is_perfect():
    s = chsh_optimal_strategy()
    for a in range(2):
        pre = pre_measurement_guessing(s, a)
        assert pre.p_guess == pytest.approx(1.0, abs=1e-9)


def test_generator_guessing_is_perfect():
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = perfect_guessing_strategy(rng, (2, 2, 3, 3)).strategy
        for a in range(2):
            assert pre_measurement_guessing(s, a).p_guess == pytest.approx(1.0, abs=1e-9)
            for b in range(2):
                assert guessing_probability(s, a, b).p_guess == pytest.approx(1.0, abs=1e-9)


def test_uncorrelated_product_gives_uniform_guess():
    R = np.stack([np.stack([np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0]), np.diag([0, 0, 1.0])])])
    S = np.stack([np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])])])
    s = product_strategy(R, S, np.eye(3) / 3, np.diag([0.3, 0.7]))
    assert guessing_probability(s, 0, 0).p_guess == pytest.approx(1 / 3)


def test_monotonicity_and_floor():
    rng = np.random.default_rng(6)
    for _ in range(20):
        s = random_strategy(rng, (2, 2, 3, 2), dim_d=2, dim_e=3)
        for a in range(2):
            pre = pre_measurement_guessing(s, a).p_guess
            posts = [guessing_probability(s, a, b).p_guess for b in range(2)]
            assert pre >= max(posts) - 1e-8
            assert min(posts) >= 1 / 3 - 1e-9


def test_noisy_chsh_below_perfect():
    r = guessing_probability(noisy_chsh_strategy(0.9), 0, 0)
    assert r.p_guess < P_CHSH


def test_guessing_table_worst_case():
    t = guessing_table(chsh_optimal_strategy())
    assert len(t["per_input"]) == 4
    assert t["worst"].p_guess == pytest.approx(P_CHSH, abs=1e-6)


def test_min_entropy_examples():
    assert min_entropy(0.5) == pytest.approx(1.0)
    assert min_entropy(1.0) == 0.0
    assert min_entropy(1.0 + 1e-14) == 0.0
    with pytest.raises(DomainError):
        min_entropy(1.1)
    assert min_entropy(P_CHSH) == pytest.approx(-math.log2(P_CHSH), abs=1e-9)
    with pytest.raises(DomainError):
        min_entropy(0.0)


def test_zero_mass_branch_is_skipped():
    # Bob's y = 1 never happens
    R = np.stack([np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])])]).astype(complex)
    S = np.stack([np.stack([np.eye(2), np.zeros((2, 2))])]).astype(complex)
    gamma = np.diag([0.5, 0, 0, 0.5]).astype(complex)
    r = guessing_probability(Strategy(R, S, gamma), 0, 0)
    assert r.p_guess == pytest.approx(1.0)
    assert r.povm.shape == (2, 2, 2, 2)


def test_discriminate_dispatch():
    s = np.stack([np.diag([0.5, 0]), np.diag([0, 0.5])])
    assert discriminate(Ensemble(s)).method == "helstrom"
    assert discriminate(Ensemble(trine_states())).method == "iterative"
