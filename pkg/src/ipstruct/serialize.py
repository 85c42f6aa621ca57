"""JSON formats for channels, codes and reports.

Complex matrices are nested row-major lists whose entries are ``[re, im]``
pairs, e.g. ``[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]`` for the 2x2 identity.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .channel import Channel, from_kraus
from .codes import Code, IPSReport, make_code
from .errors import IPSError
from .matcore import DEFAULT_TOL, Tolerance


class ParseError(IPSError, ValueError):
    stage = "parse"


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(data, d: int | None = None, what: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what} is not a nested array of numbers") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"{what} must be a square array of [re, im] pairs, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ParseError(f"{what} has dimension {arr.shape[0]}, expected {d}")
    return arr[..., 0] + 1j * arr[..., 1]


def _load_json(path) -> tuple[dict, bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path} must contain a JSON object")
    return data, raw


def _dim(data: dict, path) -> int:
    d = data.get("dim")
    if not isinstance(d, int) or d < 1:
        raise ParseError(f"{path}: 'dim' must be a positive integer")
    return d


def channel_to_dict(E: Channel, label: str | None = None) -> dict:
    return {"dim": E.dim, "label": label if label is not None else E.label,
            "kraus": [encode_matrix(K) for K in E.kraus]}


def channel_from_dict(data: dict, tol: Tolerance = DEFAULT_TOL, path="<input>") -> Channel:
    d = _dim(data, path)
    kraus = data.get("kraus")
    if not isinstance(kraus, list) or not kraus:
        raise ParseError(f"{path}: 'kraus' must be a non-empty list of matrices")
    mats = [decode_matrix(K, d, f"Kraus operator {i}") for i, K in enumerate(kraus)]
    return from_kraus(mats, tol, label=str(data.get("label", "")))


def load_channel(path, tol: Tolerance = DEFAULT_TOL) -> tuple[Channel, bytes]:
    data, raw = _load_json(path)
    return channel_from_dict(data, tol, path), raw


def save_json(data: dict, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def code_to_dict(basis, samples) -> dict:
    basis = [np.asarray(b) for b in basis]
    return {"dim": int(basis[0].shape[0]), "basis": [encode_matrix(b) for b in basis],
            "samples": [encode_matrix(s) for s in samples]}


def code_from_dict(data: dict, tol: Tolerance = DEFAULT_TOL, path="<code>") -> Code:
    d = _dim(data, path)
    basis = data.get("basis")
    if not isinstance(basis, list) or not basis:
        raise ParseError(f"{path}: 'basis' must be a non-empty list of matrices")
    samples = data.get("samples")
    mats = [decode_matrix(b, d, f"basis element {i}") for i, b in enumerate(basis)]
    smp = None
    if samples:
        smp = [decode_matrix(s, d, f"sample {i}") for i, s in enumerate(samples)]
    return make_code(mats, smp, tol)


def load_code(path, tol: Tolerance = DEFAULT_TOL) -> Code:
    data, _ = _load_json(path)
    return code_from_dict(data, tol, path)


def digest(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def report_to_dict(rep: IPSReport, tol: Tolerance, input_digest: str = "",
                   generated_at: str | None = None) -> dict:
    cr = rep.channel_report
    out = {
        "mode": rep.mode,
        "shape": [[int(a), int(b)] for a, b in rep.shape],
        "support_rank": int(rep.support_rank),
        "fixed_dim": int(rep.fixed_dim),
        "rotating_dim": int(rep.rotating_dim),
        "tau_states": [encode_matrix(t) for t in rep.tau_states],
        "diagnostics": {
            "unital": bool(cr.is_unital),
            "unital_residual": cr.unital_residual,
            "tp_residual": cr.tp_residual,
            "min_choi_eigenvalue": cr.min_choi_eigenvalue,
            "commutant_dim": int(rep.commutant_dim),
            "spectral_gap": rep.spectral_gap,
            "echo_codomain_dim": 0 if rep.echo is None else int(rep.echo.codomain_dim),
            "warnings": list(rep.warnings),
        },
        "tolerances": tol.as_dict(),
        "tool_version": __version__,
        "input_digest": input_digest,
    }
    if generated_at is not None:
        out["generated_at"] = generated_at
    return out
