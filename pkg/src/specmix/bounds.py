"""Closed-form convergence bounds for ``||T^n - T_inf^n||``.

Each bound is a pure function of spectral or detailed-balance data.  A bound
whose hypotheses fail raises :class:`BoundNotApplicable`; the dispatcher
:func:`bound_records` turns that into an explicit ``applicable=False``
record so that "large" and "invalid" are never confused.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BoundNotApplicable, InvariantError, ToleranceError
from .spectral import BlaschkeData, blaschke_inv_sup

# e**2 rounded once so golden values are bit-stable across platforms
E2 = 7.38905609893065
TOL_GRAM = 1e-8


def _check_mu(mu: float) -> None:
    if not 0 <= mu < 1:
        raise ValueError(f"spectral radius mu = {mu} must lie in [0, 1)")


def _require_n_large(mu: float, n: int) -> None:
    if not n > mu / (1 - mu):
        raise BoundNotApplicable(f"needs n > mu/(1-mu) = {mu / (1 - mu):.6g}, got n = {n}")


def _zero_power(base: float, exponent: int) -> float:
    """``base**exponent`` with ``0**k`` mapped to inf for k < 0."""
    if base == 0 and exponent < 0:
        return math.inf
    return base ** exponent


def schur_bound(mu: float, D: int, C: float, n: int) -> float:
    """``2 mu^(n-D+1) n^(D-1) (mu + 2C)^(D-1)`` from a Schur triangularisation."""
    _check_mu(mu)
    if n < 1:
        raise BoundNotApplicable("defined for n >= 1")
    if C <= 0:
        raise ValueError("C must be positive")
    return 2 * _zero_power(mu, n - D + 1) * float(n) ** (D - 1) * (mu + 2 * C) ** (D - 1)


def jordan_empirical_bound(kappa: float | None, mu: float, d_mu: int, n: int) -> float:
    """``kappa * d_mu * n^(d_mu-1) mu^(n-d_mu+1)`` with the *computed* transform condition number.

    Only an empirical curve: the constant of the Jordan-form estimate is
    not known a priori and smaller-modulus blocks are ignored.
    """
    _check_mu(mu)
    if kappa is None:
        raise BoundNotApplicable("no condition number for the Jordan transform")
    if n < 1:
        raise BoundNotApplicable("defined for n >= 1")
    return kappa * d_mu * float(n) ** (d_mu - 1) * _zero_power(mu, n - d_mu + 1)


def wiener_main_bound(mu: float, m_degree: int, C: float, n: int, sup_inv_B: float) -> float:
    """``mu^(n+1) 4 C e^2 sqrt|m| (|m|+1) / (n (1-(1+1/n)mu)^(3/2)) * sup|1/B|``.

    ``sup_inv_B`` is the supremum of ``|1/B|`` on the circle of radius ``mu (1 + 1/n)``.
    """
    _check_mu(mu)
    _require_n_large(mu, n)
    if mu == 0:
        return 0.0
    pref = 4 * C * E2 * math.sqrt(m_degree) * (m_degree + 1)
    return mu ** (n + 1) * pref / (n * (1 - (1 + 1 / n) * mu) ** 1.5) * sup_inv_B


def factor_product(B: BlaschkeData, mu: float, n: int, tol: float = 1e-10) -> float:
    """Product of single-factor suprema over the zeros, one modulus-``mu`` zero excluded."""
    zeros = list(B.zeros)
    for i, lam in enumerate(zeros):
        if abs(abs(lam) - mu) <= tol * max(1.0, mu):
            del zeros[i]
            break
    else:
        raise ValueError(f"no zero of modulus mu = {mu} among the Blaschke zeros")
    c = mu * (1 + 1 / n)
    prod = 1.0
    for lam in zeros:
        a = min(abs(lam), mu)
        prod *= (1 - c * a) / (c - a)
    return prod


def wiener_factorized_bound(B: BlaschkeData, mu: float, C: float, n: int) -> float:
    """Main bound with ``sup|1/B|`` replaced by the per-factor product."""
    _check_mu(mu)
    _require_n_large(mu, n)
    if mu == 0:
        return 0.0
    m = B.degree
    pref = 4 * C * E2 * math.sqrt(m) * (m + 1)
    return mu ** n * pref / (1 - (1 + 1 / n) * mu) ** 1.5 * factor_product(B, mu, n)


def contractive_bound(mu: float, m_degree: int, n: int, sup_inv_B: float) -> float:
    """``mu^(n+1) 2|m| e / (n (1-(1+1/n)^2 mu^2)) * sup|1/B|`` for contractions."""
    _check_mu(mu)
    _require_n_large(mu, n)
    if mu == 0:
        return 0.0
    return mu ** (n + 1) * 2 * m_degree * math.e / (n * (1 - ((1 + 1 / n) * mu) ** 2)) * sup_inv_B


class CertKind(str, enum.Enum):
    CLASSICAL_PI = "classical_pi"
    QUANTUM_SIGMA = "quantum_sigma"
    GENERAL_B = "general_B"


def _psd_sqrt(A: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(A)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def sigma_balance_map(sigma: np.ndarray) -> np.ndarray:
    """Natural representation of ``X -> sqrt(sigma) X sqrt(sigma)``."""
    r = _psd_sqrt(np.asarray(sigma, dtype=complex))
    return np.kron(r.conj(), r)


@dataclass(frozen=True)
class DetailedBalanceCert:
    """Certificate ``T B = B T^*`` for a positive-definite ``B``.

    Build with :meth:`classical`, :meth:`quantum` or :meth:`general`, which
    validate the balance data and record the residual against ``T``.
    """

    kind: CertKind
    B: np.ndarray
    residual: float
    tol_db: float
    pi: np.ndarray | None = None
    sigma: np.ndarray | None = None
    gibbs: tuple[float, float] | None = None  # (||H||, beta)

    @property
    def accepted(self) -> bool:
        return self.residual <= self.tol_db

    @property
    def B_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.B)

    @property
    def sigma_eigenvalues(self) -> np.ndarray:
        if self.sigma is None:
            raise ValueError("not a quantum certificate")
        return np.linalg.eigvalsh(self.sigma)

    @staticmethod
    def _residual(T, B) -> tuple[float, float]:
        T = np.asarray(T)
        res = float(np.linalg.norm(T @ B - B @ T.conj().T, 2))
        return res, 1e-8 * max(np.linalg.norm(T, 2), np.finfo(float).tiny)

    @classmethod
    def classical(cls, T, pi, tol_db: float | None = None) -> "DetailedBalanceCert":
        pi = np.asarray(pi, dtype=float)
        if pi.ndim != 1 or np.any(pi <= 0) or abs(pi.sum() - 1) > 1e-12:
            raise InvariantError("pi_positive_normalised", "pi must be a strictly positive distribution")
        B = np.diag(pi)
        res, tol = cls._residual(T, B)
        return cls(CertKind.CLASSICAL_PI, B, res, tol if tol_db is None else tol_db, pi=pi)

    @classmethod
    def quantum(cls, T, sigma, tol_db: float | None = None, gibbs=None) -> "DetailedBalanceCert":
        sigma = np.asarray(sigma, dtype=complex)
        if np.max(np.abs(sigma - sigma.conj().T)) > 1e-12:
            raise InvariantError("sigma_hermitian", "sigma is not Hermitian")
        w = np.linalg.eigvalsh(sigma)
        if w.min() <= 0 or abs(w.sum() - 1) > 1e-12:
            raise InvariantError("sigma_full_rank_state", "sigma must be a full-rank density matrix")
        B = sigma_balance_map(sigma)
        res, tol = cls._residual(T, B)
        g = None if gibbs is None else (float(gibbs[0]), float(gibbs[1]))
        return cls(CertKind.QUANTUM_SIGMA, B, res, tol if tol_db is None else tol_db, sigma=sigma, gibbs=g)

    @classmethod
    def general(cls, T, B, tol_db: float | None = None) -> "DetailedBalanceCert":
        B = np.asarray(B)
        if np.max(np.abs(B - B.conj().T)) > 1e-12 or np.linalg.eigvalsh(B).min() <= 0:
            raise InvariantError("B_positive_definite", "B must be Hermitian positive definite")
        res, tol = cls._residual(T, B)
        return cls(CertKind.GENERAL_B, B, res, tol if tol_db is None else tol_db)


def db_general_bound(cert: DetailedBalanceCert, mu: float, n: int) -> float:
    """``mu^n ||B^(1/2)|| ||B^(-1/2)||`` in the operator norm."""
    _check_mu(mu)
    if not cert.accepted:
        raise BoundNotApplicable(f"certificate residual {cert.residual:.3g} above {cert.tol_db:.3g}")
    w = cert.B_eigenvalues
    if w.min() <= 0:
        raise InvariantError("B_positive_definite", "B has a nonpositive eigenvalue")
    return mu ** n * math.sqrt(w.max() / w.min())


def db_classical_bound(pi: Sequence[float], mu: float, n: int) -> tuple[float, float]:
    """``(mu^n sqrt(d) sqrt(max pi / min pi), mu^n / min pi)`` in the 1-to-1 norm."""
    _check_mu(mu)
    pi = np.asarray(pi, dtype=float)
    if pi.min() <= 0:
        raise ValueError("pi must be strictly positive")
    tight = mu ** n * math.sqrt(pi.size) * math.sqrt(pi.max() / pi.min())
    return tight, mu ** n / pi.min()


def db_quantum_bound(sigma_eigs: Sequence[float], mu: float, n: int, d: int) -> tuple[float, float]:
    """``(mu^n sqrt(d) sqrt(lmax/lmin), mu^n / lmin)`` in the Hermitian 1-to-1 norm."""
    _check_mu(mu)
    w = np.asarray(sigma_eigs, dtype=float)
    if w.min() <= 0:
        raise ValueError("sigma must have positive eigenvalues")
    return mu ** n * math.sqrt(d) * math.sqrt(w.max() / w.min()), mu ** n / w.min()


def db_gibbs_bound(H_norm: float, beta: float, d: int, mu: float, n: int) -> float:
    """``mu^n d e^(2 beta ||H||)`` for a Gibbs fixed point."""
    _check_mu(mu)
    if beta < 0 or H_norm < 0:
        raise ValueError("beta and ||H|| must be nonnegative")
    return mu ** n * d * math.exp(2 * beta * H_norm)


@dataclass(frozen=True)
class L2EigenData:
    """Eigenvalues in (-1, 1) of a balanced map with ``B``-orthonormal adjoint eigenvectors.

    ``Y`` holds the vectorised ``y_i`` as columns.
    """

    lambdas: np.ndarray
    Y: np.ndarray
    gram_residual: float


def l2_eigendata(T, cert: DetailedBalanceCert, tol_unit: float = 1e-8) -> L2EigenData:
    """Diagonalise ``R = B^(-1/2) T B^(1/2)`` and map its eigenvectors to ``y_i = B^(-1/2) x_i``."""
    T = np.asarray(T)
    w, v = np.linalg.eigh(cert.B)
    Bh = (v * np.sqrt(w)) @ v.conj().T
    Bmh = (v / np.sqrt(w)) @ v.conj().T
    R = Bmh @ T @ Bh
    lam, X = np.linalg.eigh(0.5 * (R + R.conj().T))
    keep = np.abs(lam) < 1 - tol_unit
    Y = Bmh @ X[:, keep]
    gram = Y.conj().T @ cert.B @ Y
    resid = float(np.max(np.abs(gram - np.eye(gram.shape[0])), initial=0.0))
    return L2EigenData(lam[keep], Y, resid)


def l2_bound(data: L2EigenData, Z, n: int) -> float:
    """``sqrt(sum_i |<y_i, Z>|^2 lambda_i^(2n))``, bounding ``||(T^n - T_inf^n)(Z)||_1``.

    ``Z`` is a vector (classical) or a ``d x d`` matrix (quantum; vectorised
    column-major).
    """
    if data.gram_residual > TOL_GRAM:
        raise ToleranceError("eigenvectors are not B-orthonormal", data.gram_residual)
    z = np.asarray(Z)
    z = z.reshape(-1, order="F") if z.ndim == 2 else z
    overlaps = data.Y.conj().T @ z
    return float(math.sqrt(np.sum(np.abs(overlaps) ** 2 * data.lambdas ** (2 * n))))


def efficiency_threshold(N: int, alpha: float, k: float, c_mu: float, c_H: float,
                         beta: float, s: int, eps: float) -> float:
    """Steps sufficient for eps-convergence to a Gibbs state of N particles."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if c_mu <= 0 or N <= 0 or s < 1:
        raise ValueError("N, c_mu must be positive and s >= 1")
    return N ** alpha / c_mu * (2 * beta * c_H * N ** k + N * math.log(s) + math.log(1 / eps))


# ---------------------------------------------------------------------------
# dispatch

@dataclass(frozen=True)
class BoundRecord:
    name: str
    n: int
    value: float | None
    applicable: bool
    inputs_digest: str
    empirical: bool = False
    reason: str = ""


# Columns emitted by the harness, in CSV order.
BOUND_NAMES = (
    "schur",
    "jordan_empirical",
    "wiener_main",
    "wiener_factorized",
    "contractive",
    "db_general",
    "db_classical",
    "db_classical_simple",
    "db_quantum",
    "db_quantum_simple",
    "db_gibbs",
)
EMPIRICAL = frozenset({"jordan_empirical"})


@dataclass(frozen=True)
class BoundContext:
    """Everything the bounds need about one instance in one norm."""

    norm: str
    D: int
    mu: float
    d_mu: int
    kappa: float | None
    blaschke: BlaschkeData
    C: float | None
    contractive: bool = False
    cert: DetailedBalanceCert | None = None
    base_dim: int | None = None

    def digest(self) -> str:
        parts = [self.norm, self.D, f"{self.mu:.17g}", self.d_mu, self.kappa, self.C,
                 tuple((f"{complex(r):.17g}", m) for r, m in self.blaschke.roots)]
        if self.cert is not None:
            parts.append((self.cert.kind.value, f"{self.cert.residual:.3g}"))
        return hashlib.sha256(repr(parts).encode()).hexdigest()[:16]


def _sup(ctx: BoundContext, n: int) -> float:
    return blaschke_inv_sup(ctx.blaschke, ctx.mu * (1 + 1 / n))


def _evaluate(ctx: BoundContext, name: str, n: int) -> float:
    op = ctx.norm == "op_inf"
    cert = ctx.cert
    if name == "schur":
        if not op or ctx.C is None:
            raise BoundNotApplicable("Schur bound is stated for the operator norm")
        return schur_bound(ctx.mu, ctx.D, ctx.C, n)
    if name == "jordan_empirical":
        if not op:
            raise BoundNotApplicable("Jordan bound is stated for the operator norm")
        return jordan_empirical_bound(ctx.kappa, ctx.mu, ctx.d_mu, n)
    if name in ("wiener_main", "contractive"):
        if name == "wiener_main" and ctx.C is None:
            raise BoundNotApplicable(f"no power bound declared for {ctx.norm}")
        if name == "contractive" and not (op and ctx.contractive):
            raise BoundNotApplicable("needs a contraction in the operator norm")
        _check_mu(ctx.mu)
        _require_n_large(ctx.mu, n)
        sup = 0.0 if ctx.mu == 0 else _sup(ctx, n)
        if name == "wiener_main":
            return wiener_main_bound(ctx.mu, ctx.blaschke.degree, ctx.C, n, sup)
        return contractive_bound(ctx.mu, ctx.blaschke.degree, n, sup)
    if name == "wiener_factorized":
        if ctx.C is None:
            raise BoundNotApplicable(f"no power bound declared for {ctx.norm}")
        return wiener_factorized_bound(ctx.blaschke, ctx.mu, ctx.C, n)
    if cert is None or not cert.accepted:
        raise BoundNotApplicable("no accepted detailed-balance certificate")
    if name == "db_general":
        if not op:
            raise BoundNotApplicable("stated for the operator norm")
        return db_general_bound(cert, ctx.mu, n)
    if name.startswith("db_classical"):
        if cert.kind is not CertKind.CLASSICAL_PI or ctx.norm != "one_to_one_classical":
            raise BoundNotApplicable("needs a pi certificate and the classical 1-to-1 norm")
        tight, simple = db_classical_bound(cert.pi, ctx.mu, n)
        return simple if name.endswith("simple") else tight
    if cert.kind is not CertKind.QUANTUM_SIGMA or ctx.norm != "one_to_one_hermitian":
        raise BoundNotApplicable("needs a sigma certificate and the Hermitian 1-to-1 norm")
    d = ctx.base_dim
    if name == "db_gibbs":
        if cert.gibbs is None:
            raise BoundNotApplicable("sigma is not declared as a Gibbs state")
        return db_gibbs_bound(cert.gibbs[0], cert.gibbs[1], d, ctx.mu, n)
    tight, simple = db_quantum_bound(cert.sigma_eigenvalues, ctx.mu, n, d)
    return simple if name.endswith("simple") else tight


def bound_records(ctx: BoundContext, n: int, names: Sequence[str] = BOUND_NAMES) -> list[BoundRecord]:
    """Evaluate every named bound at ``n``; inapplicable ones carry ``value=None``."""
    digest = ctx.digest()
    out = []
    for name in names:
        try:
            value = float(_evaluate(ctx, name, n))
            out.append(BoundRecord(name, n, value, True, digest, name in EMPIRICAL))
        except BoundNotApplicable as exc:
            out.append(BoundRecord(name, n, None, False, digest, name in EMPIRICAL, str(exc)))
    return out
