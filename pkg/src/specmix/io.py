"""JSON reading and writing for maps, certificates and spectral reports.

See ``docs/formats.md`` for the schemas.  Complex numbers are ``[re, im]``
pairs; real matrices may be written as plain nested lists.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .bounds import CertKind, DetailedBalanceCert
from .core import MapKind, MapMatrix, NormKind, TransitionMap, natural_from_kraus

TOL_STOCHASTIC = 1e-9


def encode_matrix(M, real_shorthand: bool = True) -> list:
    A = np.asarray(M)
    if real_shorthand and (A.dtype.kind == "f" or not np.any(A.imag)):
        return [[float(x) for x in row] for row in A.real]
    return [[[float(z.real), float(z.imag)] for z in row] for row in A.astype(complex)]


def decode_matrix(data) -> np.ndarray:
    """Nested list of reals or of ``[re, im]`` pairs to an ndarray."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr
    raise ValueError(f"cannot decode a matrix from an array of shape {arr.shape}")


def _looks_stochastic(A: np.ndarray) -> bool:
    return (A.dtype.kind == "f" and A.min() >= -TOL_STOCHASTIC
            and np.max(np.abs(A.sum(axis=0) - 1)) <= TOL_STOCHASTIC)


def map_from_dict(data: dict[str, Any]) -> TransitionMap:
    """Build a TransitionMap from its JSON form.

    Either ``{"dim", "entries"}`` or a Kraus form ``{"base_dim", "kraus"}``.
    Without a ``"kind"`` a Kraus form is quantum, a real column-stochastic
    matrix is classical and anything else is generic.
    """
    bounds = {NormKind(k): float(v) for k, v in data.get("power_bounds", {}).items()}
    meta = data.get("metadata", {})
    if "kraus" in data:
        kraus = [decode_matrix(K) for K in data["kraus"]]
        M = natural_from_kraus(kraus)
        d = int(data.get("base_dim", kraus[0].shape[0]))
        return TransitionMap(MapMatrix(M), MapKind.QUANTUM, d, bounds, meta)
    if "entries" not in data:
        raise ValueError("map JSON needs 'entries' or 'kraus'")
    A = decode_matrix(data["entries"])
    if "dim" in data and int(data["dim"]) != A.shape[0]:
        raise ValueError(f"declared dim {data['dim']} does not match {A.shape[0]} rows")
    kind = data.get("kind")
    if kind is None:
        kind = MapKind.CLASSICAL if _looks_stochastic(A) else MapKind.GENERIC
    return TransitionMap(MapMatrix(A), MapKind(kind), data.get("base_dim"), bounds, meta)


def map_to_dict(tmap: TransitionMap) -> dict[str, Any]:
    out: dict[str, Any] = {
        "dim": tmap.dim,
        "kind": tmap.kind.value,
        "entries": encode_matrix(tmap.entries, tmap.kind is MapKind.CLASSICAL),
        "power_bounds": {k.value: v for k, v in sorted(tmap.power_bounds.items(), key=lambda kv: kv[0].value)},
        "metadata": tmap.metadata,
    }
    if tmap.base_dim is not None:
        out["base_dim"] = tmap.base_dim
    return out


def cert_to_dict(cert: DetailedBalanceCert) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": cert.kind.value, "residual": cert.residual}
    if cert.kind is CertKind.CLASSICAL_PI:
        out["pi"] = [float(p) for p in cert.pi]
    elif cert.kind is CertKind.QUANTUM_SIGMA:
        out["sigma"] = encode_matrix(cert.sigma, real_shorthand=False)
        if cert.gibbs is not None:
            out["gibbs"] = {"H_norm": cert.gibbs[0], "beta": cert.gibbs[1]}
    else:
        out["B"] = encode_matrix(cert.B, real_shorthand=False)
    return out


def cert_from_dict(data: dict[str, Any], T) -> DetailedBalanceCert:
    """Rebuild a certificate and recompute its residual against ``T``."""
    kind = CertKind(data["kind"])
    if kind is CertKind.CLASSICAL_PI:
        return DetailedBalanceCert.classical(T, data["pi"])
    if kind is CertKind.QUANTUM_SIGMA:
        g = data.get("gibbs")
        gibbs = None if g is None else (g["H_norm"], g["beta"])
        return DetailedBalanceCert.quantum(T, decode_matrix(data["sigma"]), gibbs=gibbs)
    return DetailedBalanceCert.general(T, decode_matrix(data["B"]))


def _plain(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, (np.ndarray, MapMatrix)):
        a = np.asarray(o)
        if np.iscomplexobj(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()
        return a.tolist()
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain) + "\n"


def read_json(path) -> Any:
    return json.loads(Path(path).read_text())


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def load_map(path) -> TransitionMap:
    return map_from_dict(read_json(path))


def save_map(path, tmap: TransitionMap) -> None:
    write_json(path, map_to_dict(tmap))
