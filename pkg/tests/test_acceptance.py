"""Acceptance criteria 1-10, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the pytest terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from acceptance_log import criterion
from nlgame import io
from nlgame import numerics as nx
from nlgame.classical import classical_value, local_membership, pr_box
from nlgame.classicalize import classicalize, perfect_guessing_strategy, random_game
from nlgame.cli import main
from nlgame.guessing import (
    Ensemble,
    allows_perfect_guessing,
    discriminate_iterative,
    guessing_probability,
    helstrom_binary,
    min_entropy,
    perfectly_distinguishable,
    pre_measurement_guessing,
)
from nlgame.model import (
    achieved_correlation,
    chsh_game,
    chsh_optimal_strategy,
    expected_score,
    noisy_chsh_strategy,
    second_player_states,
)
from oracles import trine_grid_oracle, trine_states

P_CHSH = 0.5 + math.sqrt(2) / 4
N_THEOREM = 200
N_FACTOR = 50


def generator_instance(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(int(v) for v in rng.integers(2, 4, size=4))
    return perfect_guessing_strategy(rng, shape, max_total_dim=24), random_game(rng, shape)


def test_criterion_1_classical_value(tmp_path, capsys):
    with criterion(1, "CHSH classical value is 3/4") as info:
        path = tmp_path / "chsh.json"
        io.write_document(path, chsh_game())
        t0 = time.perf_counter()
        code = main(["classical-value", str(path), "--format", "machine"])
        elapsed = time.perf_counter() - t0
        out = json.loads(capsys.readouterr().out)
        value, _ = classical_value(chsh_game())
        info["detail"] = f"value {out['classical_value']}, {elapsed:.3f} s"
        assert code == 0
        assert abs(out["classical_value"] - 0.75) <= 1e-12
        assert abs(value - 0.75) <= 1e-12
        assert elapsed < 1.0


def test_criterion_2_quantum_score():
    with criterion(2, "CHSH quantum score is 1/2 + sqrt(2)/4") as info:
        t0 = time.perf_counter()
        score = expected_score(chsh_game(), achieved_correlation(chsh_optimal_strategy()))
        elapsed = time.perf_counter() - t0
        info["detail"] = f"score {score:.12f}, {elapsed:.4f} s"
        assert abs(score - 0.85355339059) <= 1e-9
        assert abs(score - P_CHSH) <= 1e-9
        assert elapsed < 1.0


def test_criterion_3_second_player_states():
    with criterion(3, "second-player states at (a, b) = (0, 0)") as info:
        cond = second_player_states(chsh_optimal_strategy(), 0, 0).conditioned_on_bob()
        hi, lo = P_CHSH, 0.5 - math.sqrt(2) / 4
        p1 = nx.projector(nx.ket(math.pi / 8))
        p5 = nx.projector(nx.ket(5 * math.pi / 8))
        # rows x (Alice's output), columns y (Bob's output)
        expected = [[hi * p1, lo * p5], [lo * p1, hi * p5]]
        err = max(np.max(np.abs(cond[x, y] - expected[x][y])) for x in range(2) for y in range(2))
        info["detail"] = f"max entry error {err:.1e}"
        assert err <= 1e-9


def test_criterion_4_bob_guessing():
    with criterion(4, "Bob's post-measurement guessing probability and min-entropy") as info:
        s = chsh_optimal_strategy()
        worst_p, worst_h = 0.0, 0.0
        for a in range(2):
            for b in range(2):
                r = guessing_probability(s, a, b)
                worst_p = max(worst_p, abs(r.p_guess - 0.85355339059))
                worst_h = max(worst_h, abs(min_entropy(r) - 0.2284))
        info["detail"] = f"max |p - target| {worst_p:.1e}, max |H - 0.2284| {worst_h:.1e}"
        assert worst_p <= 1e-6
        assert worst_h <= 1e-3
        assert min_entropy(guessing_probability(s, 0, 0)) < 1


def test_criterion_5_certified_erasure():
    with criterion(5, "pre-measurement guessing is perfect, post is not") as info:
        s = chsh_optimal_strategy()
        pre = [pre_measurement_guessing(s, a).p_guess for a in range(2)]
        post = max(guessing_probability(s, a, b).p_guess for a in range(2) for b in range(2))
        info["detail"] = f"pre {min(pre):.10f}, post {post:.10f}"
        for p in pre:
            assert abs(p - 1.0) <= 1e-9
            assert p > post


def test_criterion_6_theorem_end_to_end():
    with criterion(6, f"perfect guessing implies classical on {N_THEOREM} generator outputs") as info:
        t0 = time.perf_counter()
        worst = dict(comm=0.0, tau=0.0, lp=0.0)
        for seed in range(N_THEOREM):
            gen, game = generator_instance(seed)
            s = gen.strategy
            assert max(s.shape) <= 3
            assert s.dim_d * s.dim_e <= 24
            verdict = allows_perfect_guessing(s)
            assert verdict, f"seed {seed}: witness {verdict.witness}"
            cert = classicalize(s, game)
            member = local_membership(achieved_correlation(s), tol=1e-7)
            assert member.feasible, f"seed {seed}"
            worst["comm"] = max(worst["comm"], cert.commutator_norm)
            worst["tau"] = max(worst["tau"], cert.tau_check)
            worst["lp"] = max(worst["lp"], member.residual)
        elapsed = time.perf_counter() - t0
        info["detail"] = (f"max commutator {worst['comm']:.1e}, max tau {worst['tau']:.1e}, "
                          f"max LP residual {worst['lp']:.1e}, {elapsed:.1f} s")
        assert worst["comm"] <= 1e-8
        assert worst["tau"] <= 1e-8
        assert worst["lp"] <= 1e-7
        assert elapsed < 60.0


def test_criterion_7_contrapositive():
    with criterion(7, "high-scoring CHSH strategies refuse perfect guessing") as info:
        strategies = [chsh_optimal_strategy()] + [noisy_chsh_strategy(v) for v in np.linspace(0.7074, 0.99, 12)]
        lowest = 1.0
        for s in strategies:
            score = expected_score(chsh_game(), achieved_correlation(s))
            assert score > 0.7501
            lowest = min(lowest, score)
            verdict = allows_perfect_guessing(s)
            assert not verdict
            a, b, y = verdict.witness
            # the witness ensemble really has overlapping supports
            assert not perfectly_distinguishable(second_player_states(s, a, b).ensemble(y))
        info["detail"] = f"{len(strategies)} strategies, lowest score {lowest:.5f}"


def test_criterion_8_discrimination_oracles():
    with criterion(8, "iterative discrimination against Helstrom and the trine grid oracle") as info:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(200):
            d = int(rng.integers(2, 5))
            s = np.stack([nx.random_psd(d, rng, int(rng.integers(1, d + 1))) for _ in range(2)])
            s *= rng.uniform(0.1, 1.0) / np.trace(s.sum(0)).real
            it = discriminate_iterative(Ensemble(s))
            worst = max(worst, abs(it.p_guess - helstrom_binary(s[0], s[1]).p_guess))
        states = trine_states()
        oracle = trine_grid_oracle(states)
        trine = discriminate_iterative(Ensemble(states)).p_guess
        info["detail"] = f"binary max diff {worst:.1e}, trine {trine:.6f}, oracle {oracle:.6f}"
        assert worst <= 1e-6
        assert abs(trine - 2 / 3) <= 1e-4
        assert abs(trine - oracle) <= 1e-4


def test_criterion_9_factorization():
    with criterion(9, f"factorization residuals and congruence drift on {N_FACTOR} instances") as info:
        worst_res, worst_drift, worst_total = 0.0, 0.0, 0.0
        for seed in range(1000, 1000 + N_FACTOR):
            gen, game = generator_instance(seed)
            cert = classicalize(gen.strategy, game)
            fac = cert.factorization
            worst_res = max(worst_res, fac.residual_M, fac.residual_N)
            worst_drift = max(worst_drift, cert.max_correlation_drift)
            total = achieved_correlation(cert.final_strategy).max_deviation(achieved_correlation(gen.strategy))
            worst_total = max(worst_total, total)
        info["detail"] = (f"max residual {worst_res:.1e}, max step drift {worst_drift:.1e}, "
                          f"end-to-end drift {worst_total:.1e}")
        assert worst_res <= 1e-8
        assert worst_drift <= 1e-9
        assert worst_total <= 1e-9


def test_criterion_10_pr_box():
    with criterion(10, "PR box is outside the local polytope") as info:
        verdict = local_membership(pr_box())
        assert not verdict.feasible
        f = verdict.functional.recheck(pr_box())
        info["detail"] = f"value {f.value:.6f}, vertex max {f.vertex_max:.6f}, gap {f.gap:.6f}"
        assert f.vertex_max == pytest.approx(0.75, abs=1e-9)
        assert f.value == pytest.approx(1.0, abs=1e-9)
        assert f.gap >= 0.2499
