"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 hypothesis not met, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .classical import MAX_VERTICES, classical_value, local_membership
from .classicalize import (
    alice_nondestructive_chain,
    classicalize,
    perfect_guessing_strategy,
    random_game,
    verify_certificate,
)
from .classicalize.pipeline import TOL
from .errors import (
    HypothesisNotMet,
    InputError,
    NotCompleteSupport,
    NotPerfectGuessing,
    NumericalError,
)
from .guessing import PG_TOL, guessing_probability, min_entropy, pre_measurement_guessing
from .model import (
    achieved_correlation,
    chsh_game,
    chsh_optimal_strategy,
    expected_score,
    second_player_states,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4


def sig10(v):
    """Round to 10 significant digits (machine output)."""
    if isinstance(v, dict):
        return {k: sig10(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [sig10(x) for x in v]
    if isinstance(v, np.ndarray):
        return sig10(v.tolist())
    if isinstance(v, (bool, np.bool_)) or v is None or isinstance(v, str):
        return bool(v) if isinstance(v, np.bool_) else v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(f"{float(v):.10g}")


class Reporter:
    def __init__(self, fmt: str, out=None):
        self.fmt = fmt
        self.out = out or sys.stdout
        self.data = {}

    def put(self, key: str, value, label: str | None = None, text: str | None = None):
        self.data[key] = value
        if self.fmt == "text":
            shown = text if text is not None else _fmt(value)
            print(f"{label or key}: {shown}", file=self.out)

    def line(self, text: str):
        if self.fmt == "text":
            print(text, file=self.out)

    def finish(self):
        if self.fmt == "machine":
            json.dump(sig10(self.data), self.out)
            self.out.write("\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _read(paths, need_game: bool, need_strategy: bool):
    game = strategy = None
    for p in paths:
        g, s = io.read_document(p)
        game = g if g is not None else game
        strategy = s if s is not None else strategy
    if need_game and game is None:
        raise io.ParseError("no 'game' found in the input files")
    if need_strategy and strategy is None:
        raise io.ParseError("no 'strategy' found in the input files")
    return game, strategy


def _correlation_lines(rep: Reporter, p: np.ndarray):
    n_a, n_b, n_x, n_y = p.shape
    for a in range(n_a):
        for b in range(n_b):
            rows = "  ".join(" ".join(f"{p[a, b, x, y]:.6f}" for y in range(n_y)) for x in range(n_x))
            rep.line(f"  p(x,y|{a},{b}) = {rows}")


def cmd_score(args, rep: Reporter) -> int:
    game, strategy = _read(args.files, True, True)
    if game.shape != strategy.shape:
        raise io.ParseError(f"game shape {game.shape} does not match strategy shape {strategy.shape}")
    corr = achieved_correlation(strategy)
    rep.put("correlation", corr.p, text="")
    _correlation_lines(rep, corr.p)
    rep.put("score", expected_score(game, corr), "expected score")
    rep.put("no_signaling_residual", corr.no_signaling_residual(), "no-signaling residual")
    return EXIT_OK


def cmd_classical_value(args, rep: Reporter) -> int:
    game, _ = _read(args.files, True, False)
    value, witness = classical_value(game, args.max_vertices)
    rep.put("classical_value", value, "classical value")
    rep.put("witness", {"f": list(map(int, witness.f)), "g": list(map(int, witness.g))},
            "witness (x = f[a], y = g[b])", f"f = {list(map(int, witness.f))}, g = {list(map(int, witness.g))}")
    return EXIT_OK


def cmd_guess(args, rep: Reporter) -> int:
    _, strategy = _read(args.files, False, True)
    n_a, n_b = strategy.shape[:2]
    if args.pre:
        rows = []
        for a in range(n_a):
            r = pre_measurement_guessing(strategy, a)
            rows.append({"a": a, "p_guess": r.p_guess, "min_entropy": min_entropy(r)})
            rep.line(f"a={a}: p_guess = {r.p_guess:.10g}, min-entropy = {min_entropy(r):.10g} bits")
        mode = "pre"
    else:
        rows = []
        for a in range(n_a):
            for b in range(n_b):
                r = guessing_probability(strategy, a, b)
                rows.append({"a": a, "b": b, "p_guess": r.p_guess, "min_entropy": min_entropy(r),
                             "gap_bound": r.gap_bound})
                rep.line(f"(a,b)=({a},{b}): p_guess = {r.p_guess:.10g}, "
                         f"min-entropy = {min_entropy(r):.10g} bits")
        mode = "post"
    worst = max(rows, key=lambda r: r["p_guess"])
    rep.data["mode"] = mode
    rep.data["rows"] = rows
    rep.put("worst", worst, "worst case",
            f"p_guess = {worst['p_guess']:.10g}, min-entropy = {worst['min_entropy']:.10g} bits")
    return EXIT_OK


def cmd_classicalize(args, rep: Reporter) -> int:
    game, strategy = _read(args.files, True, True)
    cert = classicalize(strategy, game, args.tol, args.tol_pg, args.seed)
    out = Path(args.output)
    io.write_certificate(out, cert)
    corr = achieved_correlation(strategy)
    member = local_membership(corr, max_vertices=args.max_vertices)
    rep.put("certificate", str(out), "certificate written to")
    rep.put("dims", {"E1": cert.factorization.dim1, "E2": cert.factorization.dim2}, "dims",
            f"E1 = {cert.factorization.dim1}, E2 = {cert.factorization.dim2}")
    rep.put("commutator_norm", cert.commutator_norm, "commutator norm")
    rep.put("tau_check", cert.tau_check, "tau check")
    rep.put("min_rho_eigenvalue", cert.min_rho_eigenvalue, "min eigenvalue of rho")
    rep.put("max_correlation_drift", cert.max_correlation_drift, "max correlation drift")
    rep.put("local", bool(member.feasible), "achieved correlation is local",
            f"{'yes' if member.feasible else 'no'} (residual {member.residual:.3g})")
    rep.put("membership_residual", member.residual, "membership residual")
    chain = alice_nondestructive_chain(cert.final_strategy, args.tol)
    rep.put("chain_deviation", chain.correlation.max_deviation(corr), "nondestructive chain deviation")
    return EXIT_OK


def cmd_verify(args, rep: Reporter) -> int:
    _, strategy = _read([args.strategy], False, True)
    cert = io.read_certificate(args.certificate)
    v = verify_certificate(strategy, cert, args.tol)
    rep.put("ok", bool(v.ok), "certificate verified")
    rep.put("commutator_norm", v.commutator_norm, "recomputed commutator norm")
    rep.put("declared_commutator_norm", cert.commutator_norm, "declared commutator norm")
    rep.put("final_state_error", v.final_state_error, "final state error")
    rep.put("correlation_drift", v.correlation_drift, "correlation drift")
    return EXIT_OK if v.ok else EXIT_NUMERICAL


def cmd_generate(args, rep: Reporter) -> int:
    rng = np.random.default_rng(args.seed)
    shape = tuple(args.shape)
    gen = perfect_guessing_strategy(rng, shape)
    game = random_game(rng, shape)
    io.write_document(args.output, game, gen.strategy)
    rep.put("written", args.output, "written")
    rep.put("dims", gen.dims, "dims")
    return EXIT_OK


def cmd_chsh_demo(args, rep: Reporter) -> int:
    game = chsh_game()
    strategy = chsh_optimal_strategy()
    if args.write:
        io.write_document(args.write, game, strategy)
        rep.put("written", args.write, "demo files written to")
    value, _ = classical_value(game)
    corr = achieved_correlation(strategy)
    rep.put("classical_value", value, "classical value")
    rep.put("quantum_score", expected_score(game, corr), "quantum score")

    sps = second_player_states(strategy, 0, 0)
    cond = sps.conditioned_on_bob()
    rep.line("second-player states at (a,b) = (0,0), conditioned on Bob's output y:")
    weights = {}
    for x in range(2):
        for y in range(2):
            w = float(np.real(np.trace(cond[x, y])))
            weights[f"{x}{y}"] = w
            rep.line(f"  x={x} y={y}: weight {w:.10g}")
            rep.line("    " + np.array2string(cond[x, y].real, precision=6, suppress_small=True)
                     .replace("\n", "\n    "))
    rep.data["state_weights"] = weights
    rep.data["states"] = [[[[float(v) for v in row] for row in cond[x, y].real] for y in range(2)]
                          for x in range(2)]

    # gamma is pure, so an outside adversary is uncorrelated with Alice
    p_adv = float(np.max(corr.alice_marginals()[0, 0]))
    rep.put("adversary_p_guess", p_adv, "adversary guessing probability")
    rep.put("adversary_min_entropy", -math.log2(p_adv), "adversary min-entropy (bits)")
    post = guessing_probability(strategy, 0, 0)
    pre = pre_measurement_guessing(strategy, 0)
    rep.put("bob_p_guess_post", post.p_guess, "Bob guessing after measuring")
    rep.put("bob_min_entropy_post", min_entropy(post), "Bob min-entropy after measuring (bits)")
    rep.put("bob_p_guess_pre", pre.p_guess, "Bob guessing before measuring")
    rep.put("bob_min_entropy_pre", min_entropy(pre), "Bob min-entropy before measuring (bits)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive, default=TOL, help="commutation tolerance")
    common.add_argument("--tol-pg", type=_positive, default=PG_TOL, help="support-overlap tolerance")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--format", choices=("text", "machine"), default="text")
    common.add_argument("--max-vertices", type=int, default=MAX_VERTICES)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nlgame", description="Nonlocal game strategy toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="achieved correlation and expected score")
    p.add_argument("files", nargs="+", help="file(s) holding the game and strategy")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("classical-value", parents=[common], help="best deterministic score")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_classical_value)

    p = sub.add_parser("guess", parents=[common], help="Bob's probability of guessing Alice's output")
    p.add_argument("files", nargs="+")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--pre", action="store_true", help="before Bob measures")
    mode.add_argument("--post", action="store_true", help="after Bob measures (default)")
    p.set_defaults(func=cmd_guess)

    p = sub.add_parser("classicalize", parents=[common], help="build and write a certificate")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output", default="certificate.json")
    p.set_defaults(func=cmd_classicalize)

    p = sub.add_parser("verify-certificate", parents=[common], help="replay a certificate")
    p.add_argument("strategy")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", parents=[common], help="write a random perfect-guessing instance")
    p.add_argument("output")
    p.add_argument("--shape", type=int, nargs=4, default=[2, 2, 2, 2], metavar=("A", "B", "X", "Y"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("chsh-demo", parents=[common], help="CHSH numbers end to end")
    p.add_argument("--write", metavar="FILE", help="also write the CHSH game and strategy")
    p.set_defaults(func=cmd_chsh_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rep = Reporter(args.format)
    err = sys.stderr
    if args.verbose:
        print(f"command {args.command}, seed {args.seed}, tol {args.tol}, tol-pg {args.tol_pg}", file=err)
    try:
        code = args.func(args, rep)
    except NotCompleteSupport as exc:
        print(f"error: {exc}", file=err)
        for a, b in exc.zero_pairs:
            print(f"  q({a},{b}) = 0", file=err)
        return EXIT_HYPOTHESIS
    except NotPerfectGuessing as exc:
        print(f"error: {exc}", file=err)
        if exc.witness is not None:
            print(f"  witness (a, b, y) = {tuple(exc.witness)}", file=err)
        return EXIT_HYPOTHESIS
    except HypothesisNotMet as exc:
        print(f"error: {exc}", file=err)
        return EXIT_HYPOTHESIS
    except InputError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_NUMERICAL
    rep.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
