"""Eigenstructure of dense matrices: clusters, Jordan blocks, minimal
polynomials and the Blaschke products built from them.

Floating-point spectra never show exact multiplicities, so everything here
works with *clusters*: groups of computed eigenvalues that are numerically
indistinguishable.  Jordan structure is read off the rank sequence of
``(T11 - lambda I)^k`` where ``T11`` is the diagonal block of a reordered
Schur form belonging to one cluster.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, ToleranceError

TOL_CLUSTER = 1e-7
TOL_RANK = 1e-9
EIG_RESIDUAL = 1e-9

# A defective eigenvalue of index k splits into k computed eigenvalues spread
# over roughly (eps * cond)^(1/k).  Computed eigenvalues are merged when they
# lie within DEFECT_MERGE_FACTOR first-order perturbation radii of each other,
# never further apart than DEFECT_MERGE_CAP.
DEFECT_MERGE_FACTOR = 64.0
DEFECT_MERGE_CAP = 1e-3

SUP_GRID_MIN = 4096
SUP_GRID_MAX = 1 << 20
# eigenvector bases worse than 1/sqrt(eps) are treated as defective
KAPPA_DEFECTIVE = 1 / math.sqrt(np.finfo(float).eps)
SUP_ANGLE_TOL = 1e-12


def canonical_order(values: Sequence[complex]) -> np.ndarray:
    """Indices sorting ``values`` by non-decreasing modulus, then phase in (-pi, pi]."""
    values = np.asarray(values, dtype=complex)
    phase = np.angle(values)
    phase = np.where(phase <= -np.pi, np.pi, phase)
    return np.lexsort((phase, np.round(np.abs(values), 12)))


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residual: float

    @property
    def condition(self) -> np.ndarray:
        """Per-eigenvalue condition numbers ``1/|w_i^* v_i|`` (unit vectors)."""
        overlap = np.abs(np.sum(self.left.conj() * self.right, axis=0))
        with np.errstate(divide="ignore"):
            return np.where(overlap > 0, 1.0 / overlap, np.inf)


def eigendecompose(M) -> EigenDecomposition:
    """Eigenvalues with unit-norm right and left eigenvectors, canonically ordered.

    Raises ConvergenceError when the LAPACK driver fails or the achieved
    residual exceeds ``1e-9 * ||M||``.
    """
    M = np.asarray(M)
    try:
        w, vl, vr = sla.eig(M, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = canonical_order(w)
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    vl = vl / np.linalg.norm(vl, axis=0)
    scale = np.linalg.norm(M, 2) if M.size else 0.0
    res_r = np.linalg.norm(M @ vr - vr * w, axis=0).max(initial=0.0)
    res_l = np.linalg.norm(vl.conj().T @ M - w[:, None] * vl.conj().T, axis=1).max(initial=0.0)
    residual = float(max(res_r, res_l))
    if residual > EIG_RESIDUAL * max(scale, np.finfo(float).tiny):
        raise ConvergenceError("eigenvector residual above tolerance", residual)
    return EigenDecomposition(w, vr, vl, residual)


@dataclass(frozen=True)
class Cluster:
    """Numerically coincident eigenvalues, represented by their mean."""

    value: complex
    members: tuple[complex, ...]
    jordan_sizes: tuple[int, ...] = ()

    @property
    def multiplicity(self) -> int:
        return len(self.members)

    @property
    def radius(self) -> float:
        return float(max(abs(m - self.value) for m in self.members))

    @property
    def index(self) -> int:
        """Multiplicity of this eigenvalue in the minimal polynomial."""
        return max(self.jordan_sizes) if self.jordan_sizes else 1

    def with_sizes(self, sizes: Sequence[int]) -> "Cluster":
        return Cluster(self.value, self.members, tuple(sorted(sizes, reverse=True)))


def cluster_eigenvalues(
    eigs: Sequence[complex],
    tol_cluster: float = TOL_CLUSTER,
    merge_radii: Sequence[float] | None = None,
) -> list[Cluster]:
    """Single-linkage clustering of eigenvalues in the complex plane.

    Two eigenvalues link when their distance is at most ``tol_cluster`` or,
    if ``merge_radii`` is given, at most ``min(max(r_i, r_j), DEFECT_MERGE_CAP)``.
    """
    if tol_cluster <= 0:
        raise ValueError("tol_cluster must be positive")
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        return []
    if eigs.size == 1:
        labels = np.array([1])
    else:
        dist = np.abs(eigs[:, None] - eigs[None, :])
        reach = np.full(dist.shape, tol_cluster)
        if merge_radii is not None:
            r = np.asarray(merge_radii, dtype=float)
            pair = np.minimum(np.maximum(r[:, None], r[None, :]), DEFECT_MERGE_CAP)
            reach = np.maximum(reach, pair)
        scaled = dist / reach
        iu = np.triu_indices(eigs.size, 1)
        labels = fcluster(linkage(scaled[iu], method="single"), t=1.0, criterion="distance")
    clusters = []
    for lab in np.unique(labels):
        members = eigs[labels == lab]
        clusters.append(Cluster(complex(members.mean()), tuple(complex(m) for m in members)))
    order = canonical_order([c.value for c in clusters])
    return [clusters[i] for i in order]


def _cluster_block(M: np.ndarray, reps: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Schur block and orthonormal invariant-subspace basis for cluster ``i``.

    Schur eigenvalues are assigned to their nearest representative, which is
    robust against the reordering perturbing split defective eigenvalues.
    """

    def select(x):
        return int(np.argmin(np.abs(reps - x))) == i

    T, Z, sdim = sla.schur(M.astype(complex), output="complex", sort=select)
    return T[:sdim, :sdim], Z[:, :sdim]


def _rank_sequence(N: np.ndarray, scale: float, tol_rank: float) -> list[int]:
    k = N.shape[0]
    ranks = [k]
    growth = max(1.0, np.linalg.norm(N, 2)) if k else 1.0
    P = np.eye(k, dtype=complex)
    for j in range(1, k + 1):
        P = P @ N
        thr = tol_rank * scale * growth ** (j - 1)
        sv = np.linalg.svd(P, compute_uv=False)
        ranks.append(int(np.sum(sv > thr)))
    return ranks


def _sizes_from_ranks(ranks: list[int]) -> list[int]:
    k = ranks[0]
    if ranks[-1] != 0:
        raise ToleranceError(f"cluster block is not numerically nilpotent (rank sequence {ranks})")
    at_least = [ranks[j - 1] - ranks[j] for j in range(1, k + 1)]
    if any(b > a for a, b in zip(at_least, at_least[1:])) or any(a < 0 for a in at_least):
        raise ToleranceError(f"inconsistent rank sequence {ranks}")
    sizes = []
    for j in range(1, k + 1):
        nxt = at_least[j] if j < k else 0
        sizes += [j] * (at_least[j - 1] - nxt)
    return sorted(sizes, reverse=True)


def jordan_structure(
    M, clusters: Sequence[Cluster], tol_rank: float = TOL_RANK, which: Sequence[int] | None = None
) -> list[tuple[int, ...]]:
    """Jordan block sizes for every cluster (or the clusters listed in ``which``), largest first.

    The number of blocks of size >= k equals ``r_{k-1} - r_k`` with
    ``r_k = rank((T11 - lambda I)^k)`` on the cluster's invariant subspace,
    singular values being thresholded at ``tol_rank * ||M||``.
    """
    M = np.asarray(M)
    reps = np.array([c.value for c in clusters], dtype=complex)
    scale = np.linalg.norm(M, 2)
    out = []
    for i in range(len(clusters)) if which is None else which:
        c = clusters[i]
        if c.multiplicity == 1:
            out.append((1,))
            continue
        T11, _ = _cluster_block(M, reps, i)
        if T11.shape[0] != c.multiplicity:
            raise ToleranceError(
                f"invariant subspace of cluster {c.value:.6g} has dimension {T11.shape[0]}, "
                f"expected {c.multiplicity}"
            )
        N = T11 - c.value * np.eye(c.multiplicity)
        out.append(tuple(_sizes_from_ranks(_rank_sequence(N, scale, tol_rank))))
    return out


def _nilpotent_chains(N: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    """Columns C with ``N C = C J`` for J the nilpotent Jordan matrix of ``sizes``."""
    k = N.shape[0]
    smax = max(sizes)
    powers = [np.eye(k, dtype=complex)]
    for _ in range(smax):
        powers.append(powers[-1] @ N)

    def kernel(j):
        dim = sum(min(s, j) for s in sizes)
        if dim == 0:
            return np.zeros((k, 0), dtype=complex)
        _, _, vh = np.linalg.svd(powers[j])
        return vh[k - dim:].conj().T

    level: dict[int, list[np.ndarray]] = {j: [] for j in range(1, smax + 1)}
    chains = []
    for j in range(smax, 0, -1):
        need = sum(1 for s in sizes if s == j)
        if need == 0:
            continue
        span = [kernel(j - 1)] + [v[:, None] for v in level[j]]
        S = np.hstack(span)
        K = kernel(j)
        if S.shape[1]:
            Q, _ = np.linalg.qr(S)
            K = K - Q @ (Q.conj().T @ K)
        U, _, _ = np.linalg.svd(K)
        for col in range(need):
            v = U[:, col]
            chain = [np.linalg.matrix_power(N, j - 1 - t) @ v for t in range(j)]
            chains.append(np.column_stack(chain))
            for t in range(1, j):
                level[j - t].append(powers[t] @ v)
    return np.hstack(chains)


def jordan_basis(M, clusters: Sequence[Cluster]) -> np.ndarray:
    """A transform ``A`` with ``A^{-1} M A`` in (numerical) Jordan form.

    Clusters need ``jordan_sizes``.  Each cluster contributes an orthonormal
    Schur basis of its invariant subspace times a Jordan chain basis of the
    nilpotent part.
    """
    M = np.asarray(M)
    reps = np.array([c.value for c in clusters], dtype=complex)
    cols = []
    for i, c in enumerate(clusters):
        T11, Z = _cluster_block(M, reps, i)
        if all(s == 1 for s in c.jordan_sizes):
            cols.append(Z)
        else:
            N = T11 - c.value * np.eye(T11.shape[0])
            cols.append(Z @ _nilpotent_chains(N, c.jordan_sizes))
    return np.hstack(cols)


@dataclass(frozen=True)
class SpectralData:
    """Spectral summary of one matrix (in practice ``T - T_inf``).

    ``mu`` is the spectral radius, ``d_mu`` the largest Jordan block among
    clusters of modulus ``mu`` and ``kappa`` the condition number of the
    computed Jordan (or eigenvector) transform, ``None`` if unavailable.
    """

    eigenvalues: tuple[complex, ...]
    clusters: tuple[Cluster, ...]
    mu: float
    d_mu: int
    kappa: float | None
    jordan_mode: str = "rank"
    tol_cluster: float = TOL_CLUSTER

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def cluster_radius(self) -> float:
        return max((c.radius for c in self.clusters), default=0.0)

    @property
    def diagonalizable(self) -> bool:
        return all(s == 1 for c in self.clusters for s in c.jordan_sizes)


def _snap_zero(clusters: list[Cluster], tol: float) -> list[Cluster]:
    return [Cluster(0j, c.members, c.jordan_sizes) if abs(c.value) <= tol else c for c in clusters]


def spectral_data(
    A,
    tol_cluster: float = TOL_CLUSTER,
    tol_rank: float = TOL_RANK,
    jordan_mode: str = "rank",
) -> SpectralData:
    """Cluster the spectrum of ``A`` and recover its Jordan structure.

    ``jordan_mode="diagonalizable"`` skips the rank tests and treats every
    cluster as semisimple; ``kappa`` is then the eigenvector condition number.
    """
    A = np.asarray(A)
    if jordan_mode not in ("rank", "diagonalizable"):
        raise ValueError(f"unknown jordan_mode {jordan_mode!r}")
    eig = eigendecompose(A)
    scale = np.linalg.norm(A, 2)
    if jordan_mode == "diagonalizable":
        clusters = _snap_zero(cluster_eigenvalues(eig.values, tol_cluster), tol_cluster)
        clusters = [c.with_sizes([1] * c.multiplicity) for c in clusters]
        kappa = float(np.linalg.cond(eig.right))
        if not kappa <= KAPPA_DEFECTIVE:
            raise ToleranceError(
                f"eigenvector basis has condition {kappa:.3g}; the matrix looks defective", kappa
            )
    else:
        radii = DEFECT_MERGE_FACTOR * eig.condition * np.finfo(float).eps * max(scale, 1.0)
        merged = cluster_eigenvalues(eig.values, tol_cluster, radii)
        clusters = []
        for c in merged:
            if c.multiplicity > 1 and c.radius > tol_cluster:
                # merged beyond plain tolerance: keep only if numerically one eigenvalue
                try:
                    jordan_structure(A, merged, tol_rank, which=[merged.index(c)])
                except ToleranceError:
                    clusters.extend(cluster_eigenvalues(c.members, tol_cluster))
                    continue
            clusters.append(c)
        order = canonical_order([c.value for c in clusters])
        clusters = _snap_zero([clusters[i] for i in order], tol_cluster)
        sizes = jordan_structure(A, clusters, tol_rank)
        clusters = [c.with_sizes(s) for c, s in zip(clusters, sizes)]
        try:
            kappa = float(np.linalg.cond(jordan_basis(A, clusters)))
        except (np.linalg.LinAlgError, ValueError):
            kappa = None
        if kappa is not None and not math.isfinite(kappa):
            kappa = None
    mu = max((abs(c.value) for c in clusters), default=0.0)
    d_mu = max((c.index for c in clusters if abs(abs(c.value) - mu) <= tol_cluster), default=1)
    return SpectralData(
        eigenvalues=tuple(complex(v) for v in eig.values),
        clusters=tuple(clusters),
        mu=float(mu),
        d_mu=int(d_mu),
        kappa=kappa,
        jordan_mode=jordan_mode,
        tol_cluster=tol_cluster,
    )


@dataclass(frozen=True)
class BlaschkeData:
    """Zeros of a minimal polynomial with multiplicities.

    The associated Blaschke product is ``prod ((z - lam)/(1 - conj(lam) z))^mult``.
    """

    roots: tuple[tuple[complex, int], ...]
    annihilation_residual: float | None = None
    cluster_radius: float = 0.0

    def __post_init__(self):
        if not self.roots:
            raise ValueError("a minimal polynomial has at least one root")
        for lam, mult in self.roots:
            if abs(lam) >= 1:
                raise ValueError(f"Blaschke zero {lam} is not inside the unit disc")
            if mult < 1:
                raise ValueError("root multiplicities must be positive")

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> "BlaschkeData":
        """Build from a flat list of zeros, merging exact repeats."""
        counts: dict[complex, int] = {}
        for r in roots:
            counts[complex(r)] = counts.get(complex(r), 0) + 1
        keys = list(counts)
        return cls(tuple((keys[i], counts[keys[i]]) for i in canonical_order(keys)))

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.roots)

    @property
    def zeros(self) -> list[complex]:
        """Zeros repeated according to multiplicity, canonically ordered."""
        return [lam for lam, m in self.roots for _ in range(m)]


def minimal_polynomial(spec: SpectralData, matrix=None, tol_annihilate: float | None = None) -> BlaschkeData:
    """Minimal polynomial of the analysed matrix as Blaschke zero data.

    When ``matrix`` is supplied the annihilation residual ``||m(M)||`` is
    computed and must not exceed ``tol_annihilate`` (default ``1e-8 * max(1, kappa)``).
    """
    roots = tuple((c.value, c.index) for c in spec.clusters)
    residual = None
    if matrix is not None:
        M = np.asarray(matrix, dtype=complex)
        eye = np.eye(M.shape[0])
        P = eye.astype(complex)
        for lam, mult in roots:
            P = P @ np.linalg.matrix_power(M - lam * eye, mult)
        residual = float(np.linalg.norm(P, 2))
        if tol_annihilate is None:
            tol_annihilate = 1e-8 * max(1.0, spec.kappa or 1.0)
        if residual > tol_annihilate:
            raise ToleranceError("minimal polynomial does not annihilate the matrix", residual)
    return BlaschkeData(roots, residual, spec.cluster_radius)


def blaschke_eval(B: BlaschkeData, z, inverse: bool = False):
    """Evaluate the Blaschke product (or its reciprocal) at ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1 + 1e-12):
        raise ValueError("Blaschke products are evaluated on the closed unit disc")
    num = np.ones_like(z)
    den = np.ones_like(z)
    for lam, mult in B.roots:
        num = num * (z - lam) ** mult
        den = den * (1 - np.conj(lam) * z) ** mult
    if inverse:
        if np.any(num == 0):
            raise ValueError("1/B evaluated at a zero of B")
        out = den / num
    else:
        out = num / den
    return complex(out) if out.ndim == 0 else out


def _log_inv_modulus(B: BlaschkeData, radius: float, theta):
    z = radius * np.exp(1j * np.asarray(theta, dtype=float))
    if B.degree > 40:  # the running product could overflow; sum logs instead
        acc = np.zeros(z.shape)
        for lam, mult in B.roots:
            acc += mult * (np.log(np.abs(1 - np.conj(lam) * z)) - np.log(np.abs(z - lam)))
        return acc
    ratio = np.ones(z.shape)
    for lam, mult in B.roots:
        f = np.abs(1 - np.conj(lam) * z) / np.abs(z - lam)
        ratio *= f if mult == 1 else f ** mult
    return np.log(ratio)


def default_grid_points(B: BlaschkeData, radius: float) -> int:
    gap = min(abs(radius - abs(lam)) for lam, _ in B.roots)
    want = math.ceil(64 * B.degree / gap) if gap > 0 else SUP_GRID_MAX
    return int(min(SUP_GRID_MAX, max(SUP_GRID_MIN, want)))


def blaschke_inv_sup(B: BlaschkeData, radius: float, grid_points: int | None = None) -> float:
    """``max |1/B(z)|`` over ``|z| = radius``.

    Uniform angular grid followed by golden-section refinement (to 1e-12 in
    angle) around the best local maxima; the result never exceeds the true
    supremum.  Results are memoised on ``(zeros, radius, grid_points)``.
    """
    return _inv_sup_cached(B.roots, float(radius), grid_points)


@functools.lru_cache(maxsize=4096)
def _inv_sup_cached(roots, radius: float, grid_points: int | None) -> float:
    B = BlaschkeData(roots)
    if not 0 <= radius < 1:
        raise ValueError("radius must lie in [0, 1)")
    for lam, _ in B.roots:
        if abs(radius - abs(lam)) <= 1e-12:
            raise ValueError(f"radius {radius} meets the zero {lam}: the supremum is infinite")
    if radius == 0:
        return float(np.exp(_log_inv_modulus(B, 0.0, 0.0)))
    n = grid_points or default_grid_points(B, radius)
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    vals = _log_inv_modulus(B, radius, theta)
    best = float(vals.max())
    peaks = np.flatnonzero((vals > np.roll(vals, 1)) & (vals > np.roll(vals, -1)))
    # only peaks close to the grid maximum can overtake it after refinement
    peaks = peaks[vals[peaks] >= best - 1e-2]
    peaks = peaks[np.argsort(vals[peaks])[::-1][: len(B.roots) + 1]]
    h = 2 * np.pi / n
    roots = [(complex(lam), complex(lam).conjugate(), mult) for lam, mult in B.roots]

    def neg(t):
        z = radius * cmath.exp(1j * t)
        return -sum(m * (math.log(abs(1 - lc * z)) - math.log(abs(z - lam))) for lam, lc, m in roots)

    for i in peaks:
        t = float(theta[i])
        try:
            res = minimize_scalar(neg, bracket=(t - h, t, t + h), method="golden",
                                  tol=SUP_ANGLE_TOL / (abs(t) + h))
        except ValueError:
            continue
        best = max(best, -float(res.fun))
    return float(np.exp(best))


def single_factor_sup(lam: complex, c: float) -> float:
    """Exact ``sup_{|z|=c} |(1 - conj(lam) z)/(z - lam)|`` for ``|lam| < c <= 1``."""
    a = abs(lam)
    if not a < c <= 1:
        raise ValueError("need |lambda| < c <= 1")
    return (1 - a * c) / (c - a)
