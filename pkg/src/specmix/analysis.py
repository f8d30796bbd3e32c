"""One-call spectral analysis of a transition map.

:func:`analyze_map` splits ``T`` into its peripheral part ``T_inf`` and the
decaying remainder ``T - T_inf`` and gathers the spectral data every bound
needs.  :meth:`MapAnalysis.bound_context` packages that data for one norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import BoundContext, DetailedBalanceCert
from .core import (TOL_UNIT, MapMatrix, NormKind, TransitionMap, _unit_clusters,
                   asymptotic_part, op_norm)
from .errors import ToleranceError
from .spectral import (TOL_CLUSTER, TOL_RANK, BlaschkeData, Cluster, SpectralData,
                       cluster_eigenvalues, eigendecompose, jordan_structure, minimal_polynomial, spectral_data)

# families whose instances are diagonalisable with probability one
GENERIC_FAMILIES = frozenset({"random_stochastic", "random_channel"})


@dataclass(frozen=True)
class MapAnalysis:
    tmap: TransitionMap
    t_inf: MapMatrix
    eigenvalues: tuple[complex, ...]
    unit_clusters: tuple[Cluster, ...]
    spec: SpectralData
    blaschke: BlaschkeData

    @property
    def remainder(self) -> np.ndarray:
        return self.tmap.entries - self.t_inf.entries

    @property
    def mu(self) -> float:
        return self.spec.mu

    @property
    def stationary(self) -> bool:
        """``T`` already equals its asymptotic part (``T - T_inf = 0`` numerically)."""
        return float(np.linalg.norm(self.remainder, 2)) <= 1e-12 * max(1.0, np.linalg.norm(self.tmap.entries, 2))

    @property
    def defective(self) -> bool:
        """``T - T_inf`` has a nontrivial Jordan block (flagged for the Blaschke bounds)."""
        return not self.spec.diagonalizable

    @property
    def contractive(self) -> bool:
        return op_norm(self.tmap.entries, NormKind.OP_INF) <= 1 + 1e-12

    def bound_context(self, norm, cert: DetailedBalanceCert | None = None, C: float | None = None) -> BoundContext:
        norm = NormKind(norm)
        if C is None:
            C = self.tmap.power_bound(norm)
        return BoundContext(
            norm=norm.value,
            D=self.tmap.dim,
            mu=self.spec.mu,
            d_mu=self.spec.d_mu,
            kappa=self.spec.kappa,
            blaschke=self.blaschke,
            C=C,
            contractive=self.contractive,
            cert=cert,
            base_dim=self.tmap.base_dim,
        )

    def summary(self) -> dict:
        """JSON-ready report of the spectral data."""

        def cx(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "dim": self.tmap.dim,
            "kind": self.tmap.kind.value,
            "eigenvalues": [cx(z) for z in self.eigenvalues],
            "unit_clusters": [{"value": cx(c.value), "multiplicity": c.multiplicity} for c in self.unit_clusters],
            "clusters": [
                {"value": cx(c.value), "multiplicity": c.multiplicity,
                 "jordan_sizes": list(c.jordan_sizes), "radius": c.radius}
                for c in self.spec.clusters
            ],
            "mu": self.spec.mu,
            "d_mu": self.spec.d_mu,
            "kappa": self.spec.kappa,
            "jordan_mode": self.spec.jordan_mode,
            "min_poly_roots": [{"value": cx(r), "multiplicity": m} for r, m in self.blaschke.roots],
            "min_poly_degree": self.blaschke.degree,
            "annihilation_residual": self.blaschke.annihilation_residual,
            "cluster_radius": self.blaschke.cluster_radius,
            "defective": self.defective,
            "stationary": self.stationary,
        }


def default_jordan_mode(tmap: TransitionMap) -> str:
    return "diagonalizable" if tmap.metadata.get("family") in GENERIC_FAMILIES else "rank"


def analyze_map(
    tmap: TransitionMap,
    jordan_mode: str | None = None,
    tol_unit: float = TOL_UNIT,
    tol_cluster: float = TOL_CLUSTER,
    tol_rank: float = TOL_RANK,
) -> MapAnalysis:
    """Asymptotic part, spectral data and minimal polynomial of ``T - T_inf``.

    In ``"diagonalizable"`` mode the minimal polynomial is still checked by
    its annihilation residual; on failure, or when the eigenvector basis is
    numerically singular, the rank test is run instead.
    """
    if not isinstance(tmap, TransitionMap):
        tmap = TransitionMap(tmap)
    T = tmap.entries
    eig = eigendecompose(T)
    unit = _unit_clusters(T, None, tol_unit, tol_cluster)
    if unit:
        clusters_T = cluster_eigenvalues(eig.values, tol_cluster)
        reps = [c.value for c in clusters_T]
        idx = [reps.index(c.value) for c in unit]
        unit = [c.with_sizes(s) for c, s in zip(unit, jordan_structure(T, clusters_T, tol_rank, idx))]
    t_inf = asymptotic_part(T, None, tol_unit, tol_cluster)
    R = T - t_inf.entries
    mode = jordan_mode or default_jordan_mode(tmap)
    try:
        spec = spectral_data(R, tol_cluster, tol_rank, mode)
        blaschke = minimal_polynomial(spec, R)
    except ToleranceError:
        if mode == "rank":
            raise
        spec = spectral_data(R, tol_cluster, tol_rank, "rank")
        blaschke = minimal_polynomial(spec, R)
    return MapAnalysis(tmap, t_inf, tuple(complex(v) for v in eig.values), tuple(unit), spec, blaschke)
