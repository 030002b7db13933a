import json
import math

import numpy as np
import pytest

from nlgame import io
from nlgame.cli import main, sig10
from nlgame.classical import classical_value
from nlgame.model import Game, Strategy, chsh_game

P_CHSH = 0.5 + math.sqrt(2) / 4


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def machine(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "machine")
    assert code == 0, err
    return json.loads(out), out


@pytest.fixture
def chsh_file(tmp_path, capsys):
    path = tmp_path / "chsh.json"
    assert main(["chsh-demo", "--write", str(path)]) == 0
    capsys.readouterr()
    return str(path)


@pytest.fixture
def gen_file(tmp_path, capsys):
    path = tmp_path / "gen.json"
    assert main(["generate", str(path), "--seed", "3", "--shape", "2", "3", "3", "2"]) == 0
    capsys.readouterr()
    return str(path)


def test_score(capsys, chsh_file):
    data, _ = machine(capsys, "score", chsh_file)
    assert data["score"] == pytest.approx(P_CHSH, abs=1e-9)
    assert data["no_signaling_residual"] <= 1e-12


def test_score_deterministic_strategy(tmp_path, capsys):
    # Alice answers a, Bob answers 0, on a product state
    e0, e1 = np.diag([1.0, 0]), np.diag([0, 1.0])
    R = np.stack([np.stack([np.eye(2), 0 * e0]), np.stack([0 * e0, np.eye(2)])])
    S = np.stack([np.stack([np.eye(2), 0 * e0])] * 2)
    s = Strategy(R.astype(complex), S.astype(complex), np.kron(e0, e1).astype(complex))
    path = tmp_path / "det.json"
    io.write_document(path, chsh_game(), s)
    data, _ = machine(capsys, "score", str(path))
    # x = a, y = 0: wins iff a = a AND b, i.e. except at (a, b) = (1, 0)
    assert data["score"] == pytest.approx(0.75)


def test_corrupted_file_exit_2(tmp_path, capsys, chsh_file):
    bad = tmp_path / "bad.json"
    bad.write_text(open(chsh_file).read().replace("0.25", "NaN", 1))
    code, _, err = run(capsys, "score", str(bad))
    assert code == 2
    assert "line" in err


def test_classical_value(capsys, chsh_file, tmp_path):
    data, _ = machine(capsys, "classical-value", chsh_file)
    assert data["classical_value"] == pytest.approx(0.75, abs=1e-12)
    const = tmp_path / "const.json"
    io.write_document(const, Game(np.full((2, 2), 0.25), np.full((2, 2, 2, 3), 0.3)))
    data, _ = machine(capsys, "classical-value", str(const))
    assert data["classical_value"] == pytest.approx(0.3)
    rng = np.random.default_rng(0)
    g = Game(rng.dirichlet(np.ones(4)).reshape(2, 2), rng.random((2, 2, 3, 2)))
    path = tmp_path / "rand.json"
    io.write_document(path, g)
    data, _ = machine(capsys, "classical-value", str(path))
    assert data["classical_value"] == pytest.approx(classical_value(g)[0], rel=1e-9)


def test_classical_value_too_large(tmp_path, capsys):
    path = tmp_path / "big.json"
    io.write_document(path, Game(np.full((2, 2), 0.25), np.ones((2, 2, 3, 3))))
    code, _, err = run(capsys, "classical-value", str(path), "--max-vertices", "10")
    assert code == 2
    assert "81" in err


def test_guess_post_and_pre(capsys, chsh_file, gen_file):
    data, _ = machine(capsys, "guess", chsh_file)
    assert len(data["rows"]) == 4
    for row in data["rows"]:
        assert row["p_guess"] == pytest.approx(P_CHSH, abs=1e-6)
        assert row["min_entropy"] == pytest.approx(-math.log2(P_CHSH), abs=1e-6)
    data, _ = machine(capsys, "guess", chsh_file, "--pre")
    for row in data["rows"]:
        assert row["p_guess"] == pytest.approx(1.0, abs=1e-9)
    data, _ = machine(capsys, "guess", gen_file)
    assert data["worst"]["p_guess"] == pytest.approx(1.0, abs=1e-9)


def test_classicalize_and_verify(capsys, gen_file, tmp_path):
    cert = tmp_path / "cert.json"
    data, _ = machine(capsys, "classicalize", gen_file, "-o", str(cert))
    assert data["local"] is True
    assert data["commutator_norm"] <= 1e-8
    assert data["tau_check"] <= 1e-8
    assert cert.exists()
    data, _ = machine(capsys, "verify-certificate", gen_file, str(cert))
    assert data["ok"] is True


def test_classicalize_chsh_exit_3(capsys, chsh_file, tmp_path):
    code, _, err = run(capsys, "classicalize", chsh_file, "-o", str(tmp_path / "c.json"))
    assert code == 3
    assert "(0, 0, 0)" in err


def test_classicalize_incomplete_support_exit_3(capsys, tmp_path, gen_file):
    doc = json.load(open(gen_file))
    doc["game"]["q"] = [[0.5, 0.5, 0.0], [0.0, 0.0, 0.0]]
    path = tmp_path / "partial.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "classicalize", str(path), "-o", str(tmp_path / "c.json"))
    assert code == 3
    assert "q(0,2) = 0" in err and "q(1,1) = 0" in err


def test_chsh_demo(capsys):
    data, _ = machine(capsys, "chsh-demo")
    assert data["classical_value"] == pytest.approx(0.75)
    assert data["quantum_score"] == pytest.approx(P_CHSH, abs=1e-9)
    w = data["state_weights"]
    hi, lo = P_CHSH, 0.5 - math.sqrt(2) / 4
    assert [w["00"], w["01"], w["10"], w["11"]] == pytest.approx([hi, lo, lo, hi], abs=1e-9)
    assert data["adversary_min_entropy"] == pytest.approx(1.0)
    assert data["bob_min_entropy_post"] == pytest.approx(-math.log2(P_CHSH), abs=1e-9)
    assert data["bob_p_guess_pre"] == pytest.approx(1.0, abs=1e-9)
    assert data["bob_p_guess_pre"] > data["bob_p_guess_post"]


def test_text_output(capsys):
    code, out, _ = run(capsys, "chsh-demo")
    assert code == 0
    assert "quantum score: 0.8535533906" in out


def test_machine_output_round_trips(capsys, chsh_file):
    data, raw = machine(capsys, "score", chsh_file)
    assert json.dumps(sig10(data)) == raw.strip()
    assert sig10(data) == data


def test_deterministic_given_seed(capsys, gen_file, tmp_path):
    _, first = machine(capsys, "classicalize", gen_file, "-o", str(tmp_path / "a.json"), "--seed", "5")
    _, second = machine(capsys, "classicalize", gen_file, "-o", str(tmp_path / "a.json"), "--seed", "5")
    assert first == second


def test_bad_flags(capsys, chsh_file):
    with pytest.raises(SystemExit) as info:
        main(["score", chsh_file, "--tol", "-1"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["score", chsh_file, "--no-such-flag"])
