"""Transition maps in dense-matrix form, their norms, powers and asymptotic part.

Quantum maps are stored through their natural representation: with the
column-major vectorisation ``vec(X) = X.reshape(-1, order="F")`` a map
``X -> sum_i K_i X K_i^*`` becomes the ``d^2 x d^2`` matrix
``sum_i conj(K_i) (x) K_i``.  Trace preservation is then
``T^* vec(1) = vec(1)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, InvariantError, ToleranceError, UnboundedSemigroupError
from .spectral import TOL_CLUSTER, SpectralData, cluster_eigenvalues, eigendecompose

TOL_UNIT = 1e-8
TOL_MAP = 1e-9
N_CHECK = 64
HERMITIAN_RESTARTS = 64
HERMITIAN_TOL = 1e-10
HERMITIAN_MAX_ITER = 1000
# restarts are seeded so that norm values are reproducible run to run
HERMITIAN_SEED = 20240611


class MapKind(str, enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum_natural"
    GENERIC = "generic"


class NormKind(str, enum.Enum):
    OP_INF = "op_inf"
    ONE_CLASSICAL = "one_to_one_classical"
    ONE_HERMITIAN = "one_to_one_hermitian"


# The diamond norm is never computed, only reached through norm_convert.
DIAMOND = "diamond"


def vec(X) -> np.ndarray:
    """Column-major vectorisation."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, d: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``d x d`` matrix."""
    return np.asarray(v).reshape((d, d), order="F")


def natural_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Natural representation ``sum_i conj(K_i) (x) K_i`` of a Kraus map."""
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    if not kraus:
        raise DimensionError("at least one Kraus operator is required")
    d = kraus[0].shape[0]
    if any(K.shape != (d, d) for K in kraus):
        raise DimensionError("Kraus operators must all be square of the same size")
    return sum(np.kron(K.conj(), K) for K in kraus)


def base_dim_of(D: int) -> int:
    d = math.isqrt(D)
    if d * d != D:
        raise DimensionError(f"D = {D} is not a perfect square")
    return d


@dataclass(frozen=True)
class MapMatrix:
    """Dense square matrix with finite entries; the stored array is read-only."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries)
        if arr.dtype.kind not in "fc":
            arr = arr.astype(float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DimensionError(f"expected a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvariantError("finite_entries", "matrix contains NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return self.entries.dtype.kind == "f"

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_array(M) -> np.ndarray:
    if isinstance(M, TransitionMap):
        return M.matrix.entries
    if isinstance(M, MapMatrix):
        return M.entries
    return np.asarray(M)


def _default_bounds(kind: MapKind, D: int) -> dict[NormKind, float]:
    if kind is MapKind.CLASSICAL:
        return {NormKind.ONE_CLASSICAL: 1.0, NormKind.OP_INF: math.sqrt(D)}
    if kind is MapKind.QUANTUM:
        return {NormKind.ONE_HERMITIAN: 1.0, NormKind.OP_INF: D ** 0.25}
    return {}


@dataclass(frozen=True)
class TransitionMap:
    """A linear map together with its kind and declared power bounds.

    Parameters
    ----------
    matrix : MapMatrix or array_like
        Matrix in the canonical form (natural representation for quantum maps).
    kind : MapKind or str
    base_dim : int, optional
        ``d`` with ``D = d**2``; inferred for quantum maps.
    power_bounds : mapping NormKind -> float, optional
        Overrides for ``C = sup_n ||T^n||``.  Values for ``op_inf`` and the
        classical 1-to-1 norm are checked against ``n <= N_CHECK`` powers;
        the Hermitian 1-to-1 value is checked by the verification harness.
    metadata : mapping, optional
        Free-form provenance (generator family, parameters, seed).
    """

    matrix: MapMatrix
    kind: MapKind = MapKind.GENERIC
    base_dim: int | None = None
    power_bounds: Mapping[NormKind, float] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)
    tol: float = TOL_MAP

    def __post_init__(self):
        if not isinstance(self.matrix, MapMatrix):
            object.__setattr__(self, "matrix", MapMatrix(self.matrix))
        kind = MapKind(self.kind)
        object.__setattr__(self, "kind", kind)
        T = self.matrix.entries
        D = self.matrix.dim
        if kind is MapKind.CLASSICAL:
            if not self.matrix.is_real:
                if np.max(np.abs(T.imag)) > self.tol:
                    raise InvariantError("classical_real", "stochastic matrix has complex entries")
                T = T.real
                object.__setattr__(self, "matrix", MapMatrix(T))
            if T.min() < -self.tol:
                raise InvariantError("classical_nonnegative", f"entry {T.min():.3g} is negative")
            dev = np.max(np.abs(T.sum(axis=0) - 1))
            if dev > self.tol:
                raise InvariantError("classical_column_sums", f"columns deviate from 1 by {dev:.3g}")
        if kind is MapKind.QUANTUM:
            d = base_dim_of(D)
            if self.base_dim is not None and self.base_dim != d:
                raise DimensionError(f"base_dim {self.base_dim} does not match D = {D}")
            object.__setattr__(self, "base_dim", d)
            one = vec(np.eye(d))
            dev = np.max(np.abs(T.conj().T @ one - one))
            if dev > self.tol:
                raise InvariantError("trace_preserving", f"adjoint moves the identity by {dev:.3g}")
        elif self.base_dim is not None and self.base_dim ** 2 != D:
            raise DimensionError(f"base_dim {self.base_dim} does not match D = {D}")
        bounds = _default_bounds(kind, D)
        supplied = {NormKind(k): float(v) for k, v in dict(self.power_bounds).items()}
        for norm, C in supplied.items():
            if C < 0 or not math.isfinite(C):
                raise InvariantError("power_bound", f"C for {norm.value} must be finite and >= 0")
            if norm is NormKind.ONE_HERMITIAN and self.base_dim is None:
                raise DimensionError("the Hermitian 1-to-1 norm needs base_dim")
            if norm is not NormKind.ONE_HERMITIAN:
                worst = max_power_norm(T, norm, N_CHECK)
                if worst > C + 1e-8 * max(1.0, C):
                    raise InvariantError(
                        "power_bound", f"||T^n|| reaches {worst:.6g} > C = {C:.6g} in {norm.value}"
                    )
        bounds.update(supplied)
        object.__setattr__(self, "power_bounds", dict(bounds))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def entries(self) -> np.ndarray:
        return self.matrix.entries

    def power_bound(self, norm) -> float | None:
        """Declared ``C`` for ``norm`` or ``None`` when unknown."""
        return self.power_bounds.get(NormKind(norm))

    @classmethod
    def from_kraus(cls, kraus, **kwargs) -> "TransitionMap":
        return cls(MapMatrix(natural_from_kraus(kraus)), MapKind.QUANTUM, **kwargs)


def max_power_norm(M, norm, n_max: int = N_CHECK, base_dim: int | None = None) -> float:
    """``max_{0 <= n <= n_max} ||M^n||`` by repeated multiplication."""
    M = as_array(M)
    P = np.eye(M.shape[0], dtype=M.dtype)
    worst = op_norm(P, norm, base_dim)
    for _ in range(n_max):
        P = P @ M
        worst = max(worst, op_norm(P, norm, base_dim))
    return worst


def _hermitian_one_norm(M: np.ndarray, d: int) -> float:
    """Max of ``||Phi(psi psi^*)||_1`` over unit ``psi`` by alternating ascent.

    Each step fixes the polar unitary ``W`` of the current image and moves
    ``psi`` to the top eigenvector of the Hermitian part of ``Phi^*(W)``.
    The objective ``max_W Re tr(W^* Phi(psi psi^*))`` never decreases.
    """
    rng = np.random.default_rng(HERMITIAN_SEED)
    starts = rng.normal(size=(HERMITIAN_RESTARTS, d)) + 1j * rng.normal(size=(HERMITIAN_RESTARTS, d))
    starts = np.vstack([np.eye(d, dtype=complex), starts])
    psi = starts / np.linalg.norm(starts, axis=1, keepdims=True)
    b = psi.shape[0]
    Mt = M.T
    Mh = M.conj()  # rows of v @ Mh equal (M^H v^T)^T

    def image(p):
        vx = (p.conj()[:, :, None] * p[:, None, :]).reshape(b, d * d)  # vec(psi psi^*)
        return (vx @ Mt).reshape(b, d, d).transpose(0, 2, 1)

    prev = None
    for _ in range(HERMITIAN_MAX_ITER):
        Y = image(psi)
        U, s, Vh = np.linalg.svd(Y)
        val = s.sum(axis=1)
        if prev is not None and np.all(val - prev <= HERMITIAN_TOL):
            break
        prev = val
        W = U @ Vh
        vw = W.transpose(0, 2, 1).reshape(b, d * d)
        A = (vw @ Mh).reshape(b, d, d).transpose(0, 2, 1)
        H = 0.5 * (A + A.conj().transpose(0, 2, 1))
        _, vecs = np.linalg.eigh(H)
        psi = vecs[:, :, -1]
    return float(val.max())


def op_norm(M, norm, base_dim: int | None = None) -> float:
    """Operator norm of ``M`` in ``norm``.

    ``op_inf`` is the largest singular value, ``one_to_one_classical`` the
    maximum absolute column sum and ``one_to_one_hermitian`` the trace-norm
    to trace-norm norm on Hermitian inputs (``base_dim`` required).
    """
    M = as_array(M)
    norm = NormKind(norm)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if norm is NormKind.OP_INF:
        return float(np.linalg.norm(M, 2))
    if norm is NormKind.ONE_CLASSICAL:
        return float(np.abs(M).sum(axis=0).max())
    if base_dim is None:
        raise DimensionError("the Hermitian 1-to-1 norm needs base_dim")
    if base_dim ** 2 != M.shape[0]:
        raise DimensionError(f"base_dim {base_dim} does not match D = {M.shape[0]}")
    if not np.any(M):
        return 0.0
    return _hermitian_one_norm(M.astype(complex), base_dim)


def _norm_tag(x) -> str:
    return DIAMOND if x == DIAMOND else NormKind(x).value


def norm_convert(value: float, from_norm, to_norm, kind, D: int) -> tuple[float, float]:
    """Interval guaranteed to contain the ``to_norm`` value of a map whose
    ``from_norm`` value is ``value``.

    Supports the classical op_inf / 1-to-1 pair (factor ``D^(1/2)``), the
    quantum op_inf / Hermitian 1-to-1 pair (factor ``D^(1/4)``) and the
    Hermitian 1-to-1 / diamond pair (``||T||_1 <= ||T||_dia <= D^(1/2) ||T||_1``),
    together with their compositions.
    """
    if value < 0:
        raise ValueError("norm values are nonnegative")
    src, dst = _norm_tag(from_norm), _norm_tag(to_norm)
    kind = MapKind(kind)
    if D < 1:
        raise ValueError("D must be positive")
    if value == 0:
        return (0.0, 0.0)
    if src == dst:
        return (float(value), float(value))
    r2, r4 = math.sqrt(D), D ** 0.25
    op, c1, h1 = NormKind.OP_INF.value, NormKind.ONE_CLASSICAL.value, NormKind.ONE_HERMITIAN.value
    # factors (lo, hi) with lo * value <= target <= hi * value
    table: dict[tuple[str, str], tuple[float, float]] = {}
    if kind is MapKind.CLASSICAL:
        table = {(op, c1): (1 / r2, r2), (c1, op): (1 / r2, r2)}
    elif kind is MapKind.QUANTUM:
        table = {
            (op, h1): (1 / r4, r4),
            (h1, op): (1 / r4, r4),
            (h1, DIAMOND): (1.0, r2),
            (DIAMOND, h1): (1 / r2, 1.0),
            (op, DIAMOND): (1 / r4, r2 * r4),
            (DIAMOND, op): (1 / (r2 * r4), r4),
        }
    if (src, dst) not in table:
        raise ValueError(f"no conversion from {src} to {dst} for {kind.value} maps")
    lo, hi = table[(src, dst)]
    return (value * lo, value * hi)


def power(M, n: int) -> MapMatrix:
    """``M**n`` by repeated squaring (``M**0`` is the identity)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return MapMatrix(np.linalg.matrix_power(as_array(M), int(n)))


def _unit_clusters(T: np.ndarray, spec: SpectralData | None, tol_unit: float, tol_cluster: float):
    if spec is not None:
        clusters = list(spec.clusters)
    else:
        clusters = cluster_eigenvalues(eigendecompose(T).values, tol_cluster)
    top = max(abs(c.value) for c in clusters)
    if top > 1 + tol_unit:
        raise UnboundedSemigroupError(f"spectral radius {top:.12g} exceeds 1")
    unit = [c for c in clusters if abs(c.value) >= 1 - tol_unit]
    for c in unit:
        if c.jordan_sizes and max(c.jordan_sizes) > 1:
            raise UnboundedSemigroupError(f"nontrivial Jordan block at unit eigenvalue {c.value:.6g}")
    return unit


def asymptotic_part(
    T,
    spec: SpectralData | None = None,
    tol_unit: float = TOL_UNIT,
    tol_cluster: float = TOL_CLUSTER,
) -> MapMatrix:
    """Peripheral part ``T_inf = sum_{|lambda| = 1} lambda P_lambda``.

    ``spec`` (spectral data of ``T`` itself) is optional; without it the
    eigenvalues of ``T`` are clustered here.  One projector
    ``P = V (W^* V)^{-1} W^*`` is built per unit-modulus cluster from the
    right and left null spaces of ``T - lambda I``.

    Raises
    ------
    UnboundedSemigroupError
        If an eigenvalue lies outside the unit disc or a unit cluster is defective.
    """
    T = as_array(T)
    D = T.shape[0]
    scale = max(1.0, np.linalg.norm(T, 2))
    out = np.zeros((D, D), dtype=complex)
    for c in _unit_clusters(T, spec, tol_unit, tol_cluster):
        lam = c.value / abs(c.value)
        m = c.multiplicity
        U, s, Vh = np.linalg.svd(T - lam * np.eye(D))
        null_tol = max(1e-6 * scale, 100 * c.radius * scale)
        if s[D - m] > null_tol:
            raise UnboundedSemigroupError(
                f"unit eigenvalue {lam:.6g} has geometric multiplicity below {m}: defective"
            )
        V = Vh[D - m:].conj().T
        W = U[:, D - m:]
        P = V @ np.linalg.solve(W.conj().T @ V, W.conj().T)
        out += lam * P
    if np.isrealobj(T):
        out = out.real
    return MapMatrix(out)


def distance_curve(
    T,
    T_inf,
    n_values: Iterable[int],
    norm,
    base_dim: int | None = None,
    kappa: float = 1.0,
    n_cross_checks: int = 8,
) -> list[tuple[int, float]]:
    """``[(n, ||(T - T_inf)^n||)]`` for each requested ``n``.

    On up to ``n_cross_checks`` evenly spread ``n`` the identity
    ``T^n - T_inf^n = (T - T_inf)^n`` is confirmed to ``1e-8 * kappa``.
    """
    if isinstance(T, TransitionMap) and base_dim is None:
        base_dim = T.base_dim
    Tm = as_array(T)
    Ti = as_array(T_inf)
    A = Tm - Ti
    ns = sorted(set(int(n) for n in n_values))
    if ns and ns[0] < 0:
        raise ValueError("n must be nonnegative")
    checks = set(ns[:: max(1, len(ns) // n_cross_checks)][:n_cross_checks]) if ns else set()
    results: dict[int, float] = {}
    P = np.eye(A.shape[0], dtype=A.dtype)
    cur = 0
    for n in ns:
        P = P @ np.linalg.matrix_power(A, n - cur)
        cur = n
        results[n] = op_norm(P, norm, base_dim)
        if n in checks:
            direct = np.linalg.matrix_power(Tm, n) - np.linalg.matrix_power(Ti, n)
            gap = float(np.linalg.norm(direct - P, 2))
            if gap > 1e-8 * max(1.0, kappa):
                raise ToleranceError(f"T^n - T_inf^n differs from (T - T_inf)^n at n={n}", gap)
    return [(n, results[n]) for n in ns]
