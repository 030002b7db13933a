"""JSON interchange format for games, strategies and certificates.

A document is a JSON object with a ``game`` and/or a ``strategy`` member::

    {
      "game": {
        "alphabets": {"A": [0, 1], "B": [0, 1], "X": [0, 1], "Y": [0, 1]},
        "q": [[0.25, 0.25], [0.25, 0.25]],
        "H": [[[[1, 0], [0, 1]], ...], ...]          # H[a][b][x][y]
      },
      "strategy": {
        "dimD": 2, "dimE": 2,
        "R": [[M, M], [M, M]],                        # R[a][x], dimD x dimD
        "S": [[M, M], [M, M]],                        # S[b][y], dimE x dimE
        "gamma": M                                    # (dimD*dimE) square, D factor first
      }
    }

A matrix M is a row-major list of rows.  Entries are real numbers or
``[re, im]`` pairs; the writer always emits pairs.  NaN and infinities are
rejected.  Operators that must be PSD are clamped: eigenvalues in
[-1e-9, 0) become 0, anything more negative is an error.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import InputError, NotPSD
from .model import Game, Strategy, clamp_psd

CLAMP_TOL = 1e-9


class ParseError(InputError):
    """Malformed document; ``where`` is a JSON path or 'line L column C'."""

    def __init__(self, message, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def _reject_constant(name):
    raise ValueError(f"non-finite constant {name} is not allowed")


def _finite_float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"number {text} overflows to infinity")
    return v


def loads(text: str, source: str = "<string>") -> dict:
    try:
        return json.loads(text, parse_constant=_reject_constant, parse_float=_finite_float)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{source}: line {exc.lineno} column {exc.colno}") from None
    except ValueError as exc:
        # raised from the hooks above; locate the offending token by hand
        raise ParseError(str(exc), f"{source}: {_locate_bad_number(text)}") from None


_TOKEN = re.compile(r"-?Infinity|NaN|-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")


def _locate_bad_number(text: str) -> str:
    for lineno, line in enumerate(text.splitlines(), 1):
        for m in _TOKEN.finditer(line):
            tok = m.group()
            if tok.lstrip("-") in ("Infinity", "NaN") or not math.isfinite(float(tok)):
                return f"line {lineno} column {m.start() + 1}"
    return "unknown position"


def load(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(exc), str(path)) from None
    return loads(text, str(path))


def _scalar(v, where: str) -> complex:
    if isinstance(v, bool):
        raise ParseError("expected a number, got a boolean", where)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        return complex(v[0], v[1])
    raise ParseError(f"expected a number or [re, im], got {v!r}", where)


def parse_matrix(obj, where: str, shape: tuple | None = None) -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError("expected a matrix (list of rows)", where)
    n_cols = len(obj[0])
    rows = []
    for i, row in enumerate(obj):
        if len(row) != n_cols:
            raise ParseError(f"row {i} has {len(row)} entries, expected {n_cols}", where)
        rows.append([_scalar(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)])
    m = np.array(rows, dtype=complex)
    if shape is not None and m.shape != shape:
        raise ParseError(f"expected shape {shape}, got {m.shape}", where)
    return m


def _real_table(obj, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected a rectangular table of real numbers", where) from None
    if arr.ndim != ndim:
        raise ParseError(f"expected a {ndim}-dimensional table, got {arr.ndim}", where)
    return arr


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", where)
    if key not in doc:
        raise ParseError(f"missing field '{key}'", where)
    return doc[key]


def parse_game(doc: dict, where: str = "game") -> Game:
    q = _real_table(_require(doc, "q", where), f"{where}.q", 2)
    h = _real_table(_require(doc, "H", where), f"{where}.H", 4)
    alph = doc.get("alphabets")
    if alph is not None:
        if not isinstance(alph, dict) or set(alph) != set("ABXY"):
            raise ParseError("alphabets must have exactly the keys A, B, X, Y", f"{where}.alphabets")
        alph = tuple(alph[k] for k in "ABXY")
    try:
        return Game(q, h, alph)
    except InputError as exc:
        raise ParseError(str(exc), where) from None


def _clamped(m: np.ndarray, where: str) -> np.ndarray:
    try:
        return clamp_psd(m, CLAMP_TOL)
    except (NotPSD, InputError) as exc:
        raise ParseError(str(exc), where) from None


def _povm_table(obj, dim: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ParseError("expected a list of POVMs", where)
    table = []
    n_out = None
    for i, povm in enumerate(obj):
        if not isinstance(povm, list) or not povm:
            raise ParseError("expected a list of POVM elements", f"{where}[{i}]")
        if n_out is None:
            n_out = len(povm)
        elif len(povm) != n_out:
            raise ParseError(f"{len(povm)} outcomes, expected {n_out}", f"{where}[{i}]")
        table.append([_clamped(parse_matrix(m, f"{where}[{i}][{j}]", (dim, dim)), f"{where}[{i}][{j}]")
                      for j, m in enumerate(povm)])
    return np.array(table, dtype=complex)


def parse_strategy(doc: dict, where: str = "strategy", tol: float = 1e-9) -> Strategy:
    dims = []
    for key in ("dimD", "dimE"):
        v = _require(doc, key, where)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ParseError(f"{key} must be a positive integer", f"{where}.{key}")
        dims.append(v)
    dim_d, dim_e = dims
    R = _povm_table(_require(doc, "R", where), dim_d, f"{where}.R")
    S = _povm_table(_require(doc, "S", where), dim_e, f"{where}.S")
    g = _clamped(parse_matrix(_require(doc, "gamma", where), f"{where}.gamma",
                              (dim_d * dim_e, dim_d * dim_e)), f"{where}.gamma")
    try:
        return Strategy(R, S, g).validate(tol)
    except InputError as exc:
        raise ParseError(str(exc), where) from None


def read_document(path) -> tuple:
    """(game or None, strategy or None) from one file."""
    doc = load(path)
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", str(path))
    game = parse_game(doc["game"]) if "game" in doc else None
    strategy = parse_strategy(doc["strategy"]) if "strategy" in doc else None
    if game is None and strategy is None:
        raise ParseError("document has neither 'game' nor 'strategy'", str(path))
    return game, strategy


# writers

def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _table_to_json(t) -> list:
    t = np.asarray(t)
    if t.ndim == 2:
        return matrix_to_json(t)
    return [_table_to_json(s) for s in t]


def game_to_json(game: Game) -> dict:
    return {
        "alphabets": {k: list(s) for k, s in zip("ABXY", game.alphabets)},
        "q": game.q.tolist(),
        "H": game.H.tolist(),
    }


def strategy_to_json(strategy: Strategy) -> dict:
    return {
        "dimD": strategy.dim_d,
        "dimE": strategy.dim_e,
        "R": _table_to_json(strategy.R),
        "S": _table_to_json(strategy.S),
        "gamma": matrix_to_json(strategy.gamma),
    }


def write_document(path, game: Game | None = None, strategy: Strategy | None = None) -> None:
    doc = {}
    if game is not None:
        doc["game"] = game_to_json(game)
    if strategy is not None:
        doc["strategy"] = strategy_to_json(strategy)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _complex_table(obj, where: str) -> np.ndarray:
    arr = np.array(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise ParseError("expected [re, im] pairs", where)
    return arr[..., 0] + 1j * arr[..., 1]


def certificate_to_json(cert) -> dict:
    fac = cert.factorization
    return {
        "seed": cert.seed,
        "tolerances": dict(cert.tolerances),
        "commutator_norm": cert.commutator_norm,
        "tau_check": cert.tau_check,
        "min_rho_eigenvalue": cert.min_rho_eigenvalue,
        "dims": {"E1": fac.dim1, "E2": fac.dim2},
        "steps": [
            {
                "kind": s.kind,
                "direction": s.direction,
                "isometry": None if s.isometry is None else matrix_to_json(s.isometry),
                "traced_dims": None if s.traced_dims is None else list(s.traced_dims),
                "correlation_drift": s.correlation_drift,
            }
            for s in cert.steps
        ],
        "projectors": {
            "Q": _table_to_json(cert.projectors.Q),
            "residual": cert.projectors.residual,
            "completed": [list(p) for p in cert.projectors.completed],
        },
        "commutation": {
            "commutator_norm": cert.commutation.commutator_norm,
            "cross_term_norm": cert.commutation.cross_term_norm,
        },
        "factorization": {
            "embedding": matrix_to_json(fac.embedding),
            "dim1": fac.dim1,
            "dim2": fac.dim2,
            "Sbar": _table_to_json(fac.M_bar),
            "Qbar": _table_to_json(fac.N_bar),
            "residual_S": fac.residual_M,
            "residual_Q": fac.residual_N,
            "blocks": [list(b) for b in fac.blocks],
            "attempts": fac.attempts,
        },
        "final_strategy": strategy_to_json(cert.final_strategy),
        "correlation": cert.correlation.p.tolist(),
    }


def certificate_from_json(doc: dict):
    from .classicalize.factorization import Factorization
    from .classicalize.pipeline import (
        ClassicalizationCertificate,
        CommutationReport,
        CongruenceStep,
        InducedProjectors,
    )
    from .model import Correlation

    try:
        steps = [
            CongruenceStep(
                s["kind"], s["direction"],
                None if s["isometry"] is None else _complex_table(s["isometry"], "steps.isometry"),
                None if s["traced_dims"] is None else tuple(s["traced_dims"]),
                s["correlation_drift"],
            )
            for s in doc["steps"]
        ]
        f = doc["factorization"]
        fac = Factorization(
            _complex_table(f["embedding"], "factorization.embedding"), f["dim1"], f["dim2"],
            _complex_table(f["Sbar"], "factorization.Sbar"),
            _complex_table(f["Qbar"], "factorization.Qbar"),
            f["residual_S"], f["residual_Q"], [tuple(b) for b in f["blocks"]], f["attempts"],
        )
        p = doc["projectors"]
        proj = InducedProjectors(_complex_table(p["Q"], "projectors.Q"), p["residual"],
                                 [tuple(c) for c in p["completed"]])
        c = doc["commutation"]
        return ClassicalizationCertificate(
            steps=steps,
            final_strategy=parse_strategy(doc["final_strategy"], "final_strategy"),
            commutator_norm=doc["commutator_norm"],
            tau_check=doc["tau_check"],
            min_rho_eigenvalue=doc["min_rho_eigenvalue"],
            projectors=proj,
            commutation=CommutationReport(c["commutator_norm"], c["cross_term_norm"]),
            factorization=fac,
            tolerances=doc["tolerances"],
            seed=doc["seed"],
            correlation=Correlation(np.array(doc["correlation"], dtype=float)),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed certificate: {exc}", "certificate") from None


def write_certificate(path, cert) -> None:
    Path(path).write_text(json.dumps({"certificate": certificate_to_json(cert)}) + "\n")


def read_certificate(path):
    doc = load(path)
    if not isinstance(doc, dict) or "certificate" not in doc:
        raise ParseError("missing 'certificate' member", str(path))
    return certificate_from_json(doc["certificate"])
