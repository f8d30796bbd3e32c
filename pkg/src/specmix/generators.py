"""Structured and random instance families, each carrying its own certificate.

Every generator is a pure function of its parameters and seed; the RNG is
created per call from the seed and never shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.stats import ortho_group

from .bounds import DetailedBalanceCert
from .core import MapKind, MapMatrix, NormKind, TransitionMap, natural_from_kraus, vec
from .errors import InvariantError

FAMILIES = (
    "slow_chain",
    "metropolis",
    "sigma_depolarizing",
    "pinching_mix",
    "model_operator",
    "random_stochastic",
    "random_channel",
    "jordan_synthetic",
)


def _meta(family: str, **params) -> dict:
    return {"family": family, "params": params}


def slow_chain(lambdas: Sequence[float]) -> TransitionMap:
    """Lower-bidiagonal chain with diagonal ``(lambda_1, ..., lambda_{D-1}, 1)``.

    Mass started in state 1 needs ``D-1`` steps to reach the absorbing state,
    so ``||T^n - T_inf||_{1->1} = 2`` for ``n <= D-2`` whatever the spectrum.
    """
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if np.any((lam < 0) | (lam >= 1)):
        raise ValueError("slow-chain eigenvalues must lie in [0, 1)")
    T = np.diag(np.append(lam, 1.0)) + np.diag(1 - lam, -1)
    return TransitionMap(MapMatrix(T), MapKind.CLASSICAL, metadata=_meta("slow_chain", lambdas=lam.tolist()))


def metropolis_chain(pi: Sequence[float], proposal) -> tuple[TransitionMap, DetailedBalanceCert]:
    """Metropolis chain ``T_ij = P_ij min(1, pi_i/pi_j)`` for ``i != j`` (column-stochastic)."""
    pi = np.asarray(pi, dtype=float)
    P = np.asarray(proposal, dtype=float)
    if np.any(pi <= 0):
        raise ValueError("pi must be strictly positive")
    pi = pi / pi.sum()
    if P.shape != (pi.size, pi.size):
        raise ValueError("proposal shape does not match pi")
    if np.max(np.abs(P - P.T)) > 1e-12 or P.min() < 0 or np.max(np.abs(P.sum(axis=0) - 1)) > 1e-12:
        raise ValueError("proposal must be symmetric and stochastic")
    T = P * np.minimum(1.0, pi[:, None] / pi[None, :])
    np.fill_diagonal(T, 0.0)
    np.fill_diagonal(T, 1.0 - T.sum(axis=0))
    tmap = TransitionMap(MapMatrix(T), MapKind.CLASSICAL, metadata=_meta("metropolis", pi=pi.tolist()))
    return tmap, DetailedBalanceCert.classical(T, pi)


def random_metropolis(d: int, beta: float, seed: int) -> tuple[TransitionMap, DetailedBalanceCert]:
    """Metropolis chain for a Gibbs distribution of random energies in [0, 1]."""
    rng = np.random.default_rng(seed)
    energies = rng.random(d)
    pi = np.exp(-beta * energies)
    S = rng.random((d, d))
    S = np.triu(S, 1)
    S = S + S.T
    P = S / (S.sum(axis=0).max() * (1 + rng.random()))
    np.fill_diagonal(P, 1 - P.sum(axis=0))
    return metropolis_chain(pi / pi.sum(), P)


def gibbs_state(H, beta: float) -> np.ndarray:
    """``exp(-beta H) / tr exp(-beta H)`` for Hermitian ``H``."""
    H = np.asarray(H, dtype=complex)
    w, v = np.linalg.eigh(H)
    p = np.exp(-beta * (w - w.min()))
    return (v * (p / p.sum())) @ v.conj().T


def random_hamiltonian(d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = 0.5 * (A + A.conj().T)
    return H / np.linalg.norm(H, 2)


def _pinching(projectors: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(P.conj(), P) for P in projectors)


def _depolarizing(sigma: np.ndarray, p: float) -> np.ndarray:
    d = sigma.shape[0]
    return (1 - p) * np.eye(d * d) + p * np.outer(vec(sigma), vec(np.eye(d)))


def _check_sigma(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=complex)
    w = np.linalg.eigvalsh(0.5 * (sigma + sigma.conj().T))
    if w.min() <= 1e-14 or abs(np.trace(sigma).real - 1) > 1e-12:
        raise ValueError("sigma must be a full-rank density matrix")
    return sigma


def sigma_depolarizing(sigma, p: float, gibbs: tuple[float, float] | None = None
                       ) -> tuple[TransitionMap, DetailedBalanceCert]:
    """``X -> (1-p) X + p sigma tr X``, balanced with respect to ``sqrt(sigma) . sqrt(sigma)``.

    ``gibbs=(||H||, beta)`` marks ``sigma`` as a Gibbs state for the Gibbs bound.
    """
    sigma = _check_sigma(sigma)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    T = _depolarizing(sigma, p)
    tmap = TransitionMap(MapMatrix(T), MapKind.QUANTUM, metadata=_meta("sigma_depolarizing", p=p))
    return tmap, DetailedBalanceCert.quantum(T, sigma, gibbs=gibbs)


def pinching_mix(sigma, terms: Sequence[dict], gibbs: tuple[float, float] | None = None
                 ) -> tuple[TransitionMap, DetailedBalanceCert]:
    """Convex mixture of pinchings in the eigenbasis of ``sigma`` and sigma-depolarizing maps.

    Each term is ``{"kind": "pinching", "blocks": [[0], [1, 2]], "weight": w}``
    (``blocks`` defaults to the full pinching) or
    ``{"kind": "depolarizing", "p": p, "weight": w}``.  Non-diagonal ``sigma``
    is diagonalised first; the rotation is recorded in the metadata.
    """
    sigma = _check_sigma(sigma)
    d = sigma.shape[0]
    weights = np.array([float(t["weight"]) for t in terms])
    if weights.size == 0 or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("term weights must be a convex combination")
    _, U = np.linalg.eigh(sigma)
    T = np.zeros((d * d, d * d), dtype=complex)
    for t, w in zip(terms, weights):
        if t["kind"] == "pinching":
            blocks = t.get("blocks") or [[i] for i in range(d)]
            if sorted(i for b in blocks for i in b) != list(range(d)):
                raise ValueError("pinching blocks must partition the eigenbasis")
            projectors = [U[:, b] @ U[:, b].conj().T for b in blocks]
            T += w * _pinching(projectors)
        elif t["kind"] == "depolarizing":
            T += w * _depolarizing(sigma, float(t["p"]))
        else:
            raise ValueError(f"unknown term kind {t['kind']!r}")
    meta = _meta("pinching_mix", terms=[dict(t) for t in terms])
    meta["rotation"] = [[[z.real, z.imag] for z in row] for row in U]
    tmap = TransitionMap(MapMatrix(T), MapKind.QUANTUM, metadata=meta)
    return tmap, DetailedBalanceCert.quantum(T, sigma, gibbs=gibbs)


def model_operator(zeros: Sequence[complex]) -> MapMatrix:
    """Compression of multiplication by ``z`` to the model space of the zeros.

    In the orthonormalised basis of Cauchy kernels ``k_j(z) = 1/(1 - conj(z_j) z)``
    the adjoint acts as ``diag(conj z)``, giving
    ``M_B = (G^(1/2) diag(conj z) G^(-1/2))^*`` with Gram matrix ``G``.
    """
    z = np.asarray(zeros, dtype=complex).reshape(-1)
    if z.size == 0:
        raise ValueError("at least one zero is required")
    if np.any(np.abs(z) >= 1):
        raise ValueError("zeros must lie strictly inside the unit disc")
    if z.size > 1 and np.min(np.abs(z[:, None] - z[None, :]) + np.eye(z.size)) < 1e-12:
        raise ValueError("repeated zeros give confluent kernels, which are not supported")
    G = 1.0 / (1.0 - z[None, :].conj() * z[:, None])
    if np.linalg.cond(G) > 1e12:
        raise ValueError("kernel Gram matrix is numerically singular: zeros too close")
    w, v = np.linalg.eigh(0.5 * (G + G.conj().T))
    Gh = (v * np.sqrt(w)) @ v.conj().T
    Gh_inv = (v / np.sqrt(w)) @ v.conj().T
    Mstar = Gh @ np.diag(z.conj()) @ Gh_inv
    return MapMatrix(Mstar.conj().T)


def random_zeros(k: int, seed: int, radius_max: float = 0.85, min_gap: float = 0.05,
                 radius: float | None = None) -> np.ndarray:
    """``k`` seeded zeros in the disc (or on ``|z| = radius``) with pairwise gaps >= ``min_gap``."""
    rng = np.random.default_rng(seed)
    for _ in range(10000):
        if radius is None:
            r = radius_max * np.sqrt(rng.random(k))
        else:
            r = np.full(k, float(radius))
        z = r * np.exp(2j * np.pi * rng.random(k))
        if k == 1 or np.min(np.abs(z[:, None] - z[None, :]) + np.eye(k) * 10) >= min_gap:
            return z
    raise ValueError("could not place zeros with the requested gap")


def with_unitary_part(M_B, unitary) -> TransitionMap:
    """Contraction ``U (+) M_B`` whose asymptotic part is the unitary block."""
    M = np.asarray(M_B)
    U = np.asarray(unitary, dtype=complex)
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
        raise ValueError("unitary block is not unitary")
    E = sla.block_diag(U, M)
    return TransitionMap(MapMatrix(E), MapKind.GENERIC, power_bounds={NormKind.OP_INF: 1.0},
                         metadata=_meta("model_operator", unitary_dim=U.shape[0]))


def random_stochastic(d: int, seed: int) -> TransitionMap:
    """Column-stochastic matrix with flat-Dirichlet columns."""
    if d < 1:
        raise ValueError("d must be positive")
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.ones(d), size=d).T
    T = T / T.sum(axis=0)
    return TransitionMap(MapMatrix(T), MapKind.CLASSICAL, metadata=_meta("random_stochastic", d=d, seed=seed))


def random_kraus(d: int, kraus_count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(kraus_count, d, d)) + 1j * rng.normal(size=(kraus_count, d, d))
    S = np.einsum("kji,kjl->il", G.conj(), G)
    w, v = np.linalg.eigh(S)
    S_inv_half = (v / np.sqrt(w)) @ v.conj().T
    return [g @ S_inv_half for g in G]


def random_channel(d: int, kraus_count: int, seed: int) -> TransitionMap:
    """Channel with Gaussian Kraus operators normalised by ``(sum G^* G)^(-1/2)``."""
    if d < 2 or kraus_count < 1:
        raise ValueError("need d >= 2 and kraus_count >= 1")
    T = natural_from_kraus(random_kraus(d, kraus_count, seed))
    meta = _meta("random_channel", d=d, kraus_count=kraus_count, seed=seed)
    return TransitionMap(MapMatrix(T), MapKind.QUANTUM, metadata=meta)


def jordan_form(blocks: Sequence[tuple[complex, int]]) -> np.ndarray:
    parts = []
    for lam, size in blocks:
        J = lam * np.eye(size, dtype=complex) + np.diag(np.ones(size - 1), 1)
        parts.append(J)
    J = sla.block_diag(*parts)
    return J.real if np.all(np.isreal(J)) else J


def jordan_synthetic(blocks: Sequence[tuple[complex, int]], kappa_target: float, seed: int) -> MapMatrix:
    """Jordan matrix conjugated by ``S = Q1 diag(s) Q2`` with ``cond(S) = kappa_target``.

    ``s`` is geometric from 1 to ``kappa_target`` so the condition number is
    hit exactly; ``kappa_target = 1`` returns the Jordan matrix itself.
    """
    if kappa_target < 1:
        raise ValueError("kappa_target must be >= 1")
    if any(abs(lam) >= 1 for lam, _ in blocks):
        raise ValueError("block eigenvalues must lie inside the unit disc")
    J = jordan_form(blocks)
    D = J.shape[0]
    if kappa_target == 1 or D == 1:
        return MapMatrix(J)
    rng = np.random.default_rng(seed)
    Q1 = ortho_group.rvs(D, random_state=rng)
    Q2 = ortho_group.rvs(D, random_state=rng)
    s = np.geomspace(1.0, kappa_target, D)
    S = (Q1 * s) @ Q2
    S_inv = (Q2.T / s) @ Q1.T
    return MapMatrix(S @ J @ S_inv)


@dataclass(frozen=True)
class GeneratedInstance:
    tmap: TransitionMap
    cert: DetailedBalanceCert | None
    family: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0


def _complex_list(values) -> list[complex]:
    out = []
    for v in values:
        out.append(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v))
    return out


def _sigma_param(params: dict, seed: int) -> tuple[np.ndarray, tuple[float, float] | None]:
    if "sigma" in params:
        rows = params["sigma"]
        sigma = np.array([_complex_list(r) for r in rows])
        return sigma, None
    if "sigma_diag" in params:
        s = np.asarray(params["sigma_diag"], dtype=float)
        return np.diag(s / s.sum()).astype(complex), None
    d = int(params.get("d", 2))
    beta = float(params.get("beta", 1.0))
    H = random_hamiltonian(d, seed)
    return gibbs_state(H, beta), (float(np.linalg.norm(H, 2)), beta)


def generate(family: str, params: dict | None = None, seed: int = 0) -> GeneratedInstance:
    """Build an instance of ``family`` from JSON-style parameters.

    Parameters (all optional) per family:

    - ``slow_chain``: ``lambdas`` (default ``[0.5, 0.5]``)
    - ``metropolis``: ``d``, ``beta`` for a random target, or explicit ``pi`` and ``proposal``
    - ``sigma_depolarizing``: ``p``, and ``sigma`` (rows of ``[re, im]``), ``sigma_diag``, or
      ``d``, ``beta`` for the Gibbs state of a random Hamiltonian
    - ``pinching_mix``: as above plus ``terms``, a list of
      ``{"kind": "pinching", "blocks": [[0, 1], [2]], "weight": w}`` or
      ``{"kind": "depolarizing", "p": p, "weight": w}``
    - ``model_operator``: ``zeros`` (``[re, im]`` pairs), or ``count``, ``radius_max``, ``min_gap``, ``radius``
    - ``random_stochastic``: ``d``
    - ``random_channel``: ``d``, ``kraus_count``
    - ``jordan_synthetic``: ``blocks`` as ``[[value, size], ...]``, ``kappa``

    Instances with a detailed-balance certificate return it in ``cert``.
    """
    params = dict(params or {})
    cert = None
    if family == "slow_chain":
        tmap = slow_chain(params.get("lambdas", [0.5, 0.5]))
    elif family == "metropolis":
        if "pi" in params:
            tmap, cert = metropolis_chain(params["pi"], params["proposal"])
        else:
            tmap, cert = random_metropolis(int(params.get("d", 3)), float(params.get("beta", 1.0)), seed)
    elif family == "sigma_depolarizing":
        sigma, gibbs = _sigma_param(params, seed)
        tmap, cert = sigma_depolarizing(sigma, float(params.get("p", 0.5)), gibbs)
    elif family == "pinching_mix":
        sigma, gibbs = _sigma_param(params, seed)
        terms = params.get("terms") or [
            {"kind": "pinching", "weight": 0.5},
            {"kind": "depolarizing", "p": 0.4, "weight": 0.5},
        ]
        tmap, cert = pinching_mix(sigma, terms, gibbs)
    elif family == "model_operator":
        if "zeros" in params:
            zeros = _complex_list(params["zeros"])
        else:
            zeros = random_zeros(int(params.get("count", 3)), seed,
                                 float(params.get("radius_max", 0.85)), float(params.get("min_gap", 0.05)),
                                 params.get("radius"))
        M = model_operator(zeros)
        tmap = TransitionMap(M, MapKind.GENERIC, power_bounds={NormKind.OP_INF: 1.0},
                             metadata=_meta("model_operator", zeros=[[z.real, z.imag] for z in zeros]))
    elif family == "random_stochastic":
        tmap = random_stochastic(int(params.get("d", 4)), seed)
    elif family == "random_channel":
        tmap = random_channel(int(params.get("d", 2)), int(params.get("kraus_count", 2)), seed)
    elif family == "jordan_synthetic":
        blocks = [(complex(*b[0]) if isinstance(b[0], list) else complex(b[0]), int(b[1]))
                  for b in params.get("blocks", [[0.5, 2]])]
        M = jordan_synthetic(blocks, float(params.get("kappa", 10.0)), seed)
        tmap = TransitionMap(M, MapKind.GENERIC, metadata=_meta("jordan_synthetic", kappa=params.get("kappa", 10.0)))
    else:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if cert is not None and not cert.accepted:
        raise InvariantError("detailed_balance", f"certificate residual {cert.residual:.3g} too large")
    return GeneratedInstance(tmap, cert, family, params, seed)
