"""Bound-versus-actual curves: computation, validity checks and CSV round-trip."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..analysis import MapAnalysis
from ..bounds import BOUND_NAMES, EMPIRICAL, DetailedBalanceCert, bound_records, l2_bound, l2_eigendata
from ..core import MapKind, NormKind, distance_curve
from ..errors import BoundNotApplicable

REL_SLACK = 1e-9
GRID_CAP = 256
DENSE_UNTIL = 64

# bounds compared against the state-level column instead of the map norm
STATE_BOUNDS = {"l2_overlap": "actual_state"}


def default_grid(mu: float, n_max: int | None = None, n_min: int = 1) -> list[int]:
    """``n = 1 .. min(256, 20 ceil(1/(1-mu)))``, every step up to 64 then geometric."""
    if n_max is None:
        n_max = GRID_CAP if mu >= 1 else min(GRID_CAP, 20 * math.ceil(1 / (1 - mu)))
    dense = list(range(n_min, min(n_max, DENSE_UNTIL) + 1))
    if n_max <= DENSE_UNTIL:
        return dense
    tail = np.unique(np.round(np.geomspace(DENSE_UNTIL, n_max, 16)).astype(int))
    return sorted(set(dense) | {int(t) for t in tail if t > DENSE_UNTIL} | {n_max})


@dataclass(frozen=True)
class BoundCurve:
    """Rows of ``n``, ``actual`` and one value per column (``None`` = inapplicable)."""

    instance_id: str
    norm: str
    columns: tuple[str, ...]
    rows: tuple[tuple[int, float, tuple[float | None, ...]], ...]

    def __post_init__(self):
        ns = [r[0] for r in self.rows]
        if ns != sorted(set(ns)):
            raise ValueError("curve rows must be sorted by unique n")

    def column(self, name: str) -> list[float | None]:
        i = self.columns.index(name)
        return [r[2][i] for r in self.rows]

    @property
    def ns(self) -> list[int]:
        return [r[0] for r in self.rows]

    @property
    def actual(self) -> list[float]:
        return [r[1] for r in self.rows]


@dataclass
class Violation:
    instance_id: str
    norm: str
    bound: str
    n: int
    actual: float
    value: float

    @property
    def ratio(self) -> float:
        return self.actual / self.value if self.value > 0 else math.inf


def _state_distance(analysis: MapAnalysis, Z: np.ndarray, ns: Sequence[int]) -> dict[int, float]:
    """``||(T^n - T_inf^n) Z||_1`` with the trace norm for quantum maps.

    Evaluated as ``(T - T_inf)^n Z`` so that the result decays instead of
    stalling at the roundoff level of ``T^n Z - T_inf^n Z``.
    """
    A = analysis.remainder
    v = Z.reshape(-1, order="F") if Z.ndim == 2 else np.asarray(Z)
    d = analysis.tmap.base_dim
    out = {}
    cur = 0
    for n in ns:
        for _ in range(n - cur):
            v = A @ v
        cur = n
        if analysis.tmap.kind is MapKind.QUANTUM:
            out[n] = float(np.linalg.svd(v.reshape((d, d), order="F"), compute_uv=False).sum())
        else:
            out[n] = float(np.abs(v).sum())
    return out


def sweep(
    analysis: MapAnalysis,
    norm,
    n_values: Iterable[int] | None = None,
    cert: DetailedBalanceCert | None = None,
    state=None,
    C: float | None = None,
    instance_id: str = "instance",
) -> BoundCurve:
    """Actual distance and every bound on a grid of ``n``.

    ``state`` (a vector or density matrix) adds the ``actual_state`` column
    and, with an accepted certificate, the ``l2_overlap`` bound.
    """
    norm = NormKind(norm)
    ns = sorted(set(n_values)) if n_values is not None else default_grid(analysis.mu)
    actual = dict(distance_curve(analysis.tmap, analysis.t_inf, ns, norm, kappa=analysis.spec.kappa or 1.0))
    ctx = analysis.bound_context(norm, cert, C)
    columns = list(BOUND_NAMES)
    extra: dict[str, dict[int, float | None]] = {}
    if state is not None:
        Z = np.asarray(state)
        extra["actual_state"] = _state_distance(analysis, Z, ns)
        columns.append("actual_state")
        if cert is not None and cert.accepted:
            data = l2_eigendata(analysis.tmap.entries, cert)
            extra["l2_overlap"] = {n: l2_bound(data, Z, n) for n in ns}
        else:
            extra["l2_overlap"] = {n: None for n in ns}
        columns.append("l2_overlap")
    rows = []
    for n in ns:
        recs = {r.name: r.value for r in bound_records(ctx, n)}
        values = [recs.get(c) if c in recs else extra[c][n] for c in columns]
        rows.append((n, actual[n], tuple(values)))
    return BoundCurve(instance_id, norm.value, tuple(columns), tuple(rows))


def violations(curve: BoundCurve, rel_slack: float = REL_SLACK) -> list[Violation]:
    """Rows where an applicable, non-empirical bound falls below its actual value."""
    out = []
    for name in curve.columns:
        if name in EMPIRICAL or name == "actual_state":
            continue
        ref = curve.column(STATE_BOUNDS[name]) if name in STATE_BOUNDS else curve.actual
        for n, a, v in zip(curve.ns, ref, curve.column(name)):
            if v is None or a is None:
                continue
            if a > v * (1 + rel_slack):
                out.append(Violation(curve.instance_id, curve.norm, name, n, a, v))
    return out


def worst_ratio(curve: BoundCurve) -> float:
    """Largest ``actual / bound`` over applicable, non-empirical entries (0 if none)."""
    worst = 0.0
    for name in curve.columns:
        if name in EMPIRICAL or name == "actual_state":
            continue
        ref = curve.column(STATE_BOUNDS[name]) if name in STATE_BOUNDS else curve.actual
        for a, v in zip(ref, curve.column(name)):
            if v is None or a is None:
                continue
            if v > 0:
                worst = max(worst, a / v)
            elif a > 0:
                worst = math.inf
    return worst


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".17g")


def curve_to_csv(curve: BoundCurve) -> str:
    buf = io.StringIO()
    buf.write(f"# instance_id={curve.instance_id} norm={curve.norm}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "actual", *curve.columns])
    for n, a, vals in curve.rows:
        w.writerow([n, _fmt(a), *(_fmt(v) for v in vals)])
    return buf.getvalue()


def curve_from_csv(text: str) -> BoundCurve:
    lines = text.splitlines()
    instance_id, norm = "instance", NormKind.OP_INF.value
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            key, _, val = tok.partition("=")
            if key == "instance_id":
                instance_id = val
            elif key == "norm":
                norm = val
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    if header[:2] != ["n", "actual"]:
        raise ValueError("CSV must start with columns n, actual")
    rows = []
    for rec in reader:
        vals = tuple(None if x == "" else float(x) for x in rec[2:])
        rows.append((int(rec[0]), float(rec[1]), vals))
    return BoundCurve(instance_id, norm, tuple(header[2:]), tuple(rows))


def write_csv(path, curve: BoundCurve) -> None:
    Path(path).write_text(curve_to_csv(curve))


def read_csv(path) -> BoundCurve:
    return curve_from_csv(Path(path).read_text())
