"""``specmix`` command-line interface.

Exit codes: 0 success, 1 a checked property failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import io as sio
from ..analysis import analyze_map
from ..core import DIAMOND, TOL_UNIT, MapKind, NormKind, norm_convert
from ..errors import SpecmixError, UnboundedSemigroupError
from ..generators import FAMILIES, generate
from ..spectral import TOL_CLUSTER, TOL_RANK
from .curve import curve_to_csv, default_grid, sweep, violations, write_csv
from .svg import write_svg
from .verify import SUITES, run_suite, verify_map

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SEED_ENV = "SPECMIX_SEED"


class InputError(Exception):
    """Bad command-line input; reported with exit code 2."""


@dataclass
class Tolerances:
    tol_unit: float = TOL_UNIT
    tol_cluster: float = TOL_CLUSTER
    tol_rank: float = TOL_RANK
    tol_db: float | None = None

    def __post_init__(self):
        for name in ("tol_unit", "tol_cluster", "tol_rank", "tol_db"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InputError(f"{name} must be positive")


@dataclass
class RunConfig:
    n_min: int = 1
    n_max: int | None = None
    n_step: int = 1
    norm: str = NormKind.OP_INF.value
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.n_min < 1:
            raise InputError("n_min must be >= 1")
        if self.n_step < 1:
            raise InputError("n_step must be >= 1")
        try:
            NormKind(self.norm)
        except ValueError as exc:
            raise InputError(str(exc)) from exc

    def grid(self, mu: float) -> list[int]:
        if self.n_step == 1 and self.n_max is None:
            return default_grid(mu, n_min=self.n_min)
        top = self.n_max if self.n_max is not None else default_grid(mu)[-1]
        return list(range(self.n_min, top + 1, self.n_step))


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if p.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def resolve_seed(cli_seed: int | None, config: dict) -> int:
    """CLI flag, then config file, then ``SPECMIX_SEED``, then 0."""
    if cli_seed is not None:
        return cli_seed
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"{SEED_ENV}={env!r} is not an integer") from exc
    return 0


def build_run_config(args, config: dict) -> RunConfig:
    tol = Tolerances(**config.get("tolerances", {}))
    rc = RunConfig(
        n_min=args.n_min if args.n_min is not None else int(config.get("n_min", 1)),
        n_max=args.n_max if args.n_max is not None else config.get("n_max"),
        n_step=args.n_step if args.n_step is not None else int(config.get("n_step", 1)),
        norm=args.norm or config.get("norm", NormKind.OP_INF.value),
        tolerances=tol,
        output=dict(config.get("output", {})),
        seed=resolve_seed(getattr(args, "seed", None), config),
    )
    return rc


def _load_map(path: str):
    try:
        return sio.load_map(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _analyze(tmap, tol: Tolerances, jordan_mode=None):
    return analyze_map(tmap, jordan_mode, tol.tol_unit, tol.tol_cluster, tol.tol_rank)


def cmd_analyze(args, config: dict) -> int:
    tmap = _load_map(args.map_file)
    tol = Tolerances(**config.get("tolerances", {}))
    a = _analyze(tmap, tol, args.jordan_mode)
    rep = a.summary()
    if a.stationary:
        rep["note"] = "already stationary: T equals its asymptotic part"
    text = sio.dumps(rep)
    if args.json:
        Path(args.json).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _parse_state(text: str | None):
    if text is None:
        return None
    data = json.loads(Path(text).read_text()) if Path(text).is_file() else json.loads(text)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr


def cmd_sweep(args, config: dict) -> int:
    rc = build_run_config(args, config)
    tmap = _load_map(args.map_file)
    a = _analyze(tmap, rc.tolerances)
    cert = None
    if args.cert:
        cert = sio.cert_from_dict(sio.read_json(args.cert), tmap.entries)
        if rc.tolerances.tol_db is not None:
            from dataclasses import replace

            cert = replace(cert, tol_db=rc.tolerances.tol_db)
    curve = sweep(a, rc.norm, rc.grid(a.mu), cert=cert, state=_parse_state(args.state), C=args.C,
                  instance_id=args.instance_id or Path(args.map_file).stem)
    csv_path = args.csv or rc.output.get("csv")
    svg_path = args.svg or rc.output.get("svg")
    if csv_path:
        write_csv(csv_path, curve)
    else:
        sys.stdout.write(curve_to_csv(curve))
    if svg_path:
        write_svg(svg_path, curve)
    bad = violations(curve)
    for v in bad[:10]:
        print(f"violation: {v.bound} at n={v.n}: actual {v.actual:.6g} > bound {v.value:.6g}", file=sys.stderr)
    return EXIT_FAIL if bad else EXIT_OK


def cmd_generate(args, config: dict) -> int:
    seed = resolve_seed(args.seed, config)
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise InputError(f"--params is not valid JSON: {exc}") from exc
    inst = generate(args.family, params, seed)
    doc = sio.map_to_dict(inst.tmap)
    doc["metadata"] = {**doc["metadata"], "seed": seed}
    if args.out:
        sio.write_json(args.out, doc)
        if inst.cert is not None:
            cert_path = args.cert_out or str(Path(args.out).with_suffix("")) + ".cert.json"
            sio.write_json(cert_path, sio.cert_to_dict(inst.cert))
    else:
        sys.stdout.write(sio.dumps(doc))
        if inst.cert is not None and args.cert_out:
            sio.write_json(args.cert_out, sio.cert_to_dict(inst.cert))
    return EXIT_OK


def cmd_verify(args, config: dict) -> int:
    seed = resolve_seed(args.seed, config)
    t0 = time.perf_counter()
    if args.map:
        path = args.map
        rep = verify_map(lambda: _load_map(path), seed)
    else:
        rep = run_suite(args.suite, seed, jobs=args.jobs)
    text = sio.dumps(rep)
    report_path = args.report or config.get("output", {}).get("report")
    if report_path:
        Path(report_path).write_text(text)
    sys.stdout.write(text)
    status = "pass" if rep["passed"] else "FAIL"
    print(f"{args.suite}: {status} ({time.perf_counter() - t0:.1f} s)", file=sys.stderr)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def _norm_or_diamond(s: str) -> str:
    if s == DIAMOND:
        return s
    return NormKind(s).value


def cmd_convert(args, config: dict) -> int:
    lo, hi = norm_convert(args.value, _norm_or_diamond(args.from_norm), _norm_or_diamond(args.to_norm),
                          MapKind(args.kind), args.dim)
    sys.stdout.write(sio.dumps({"lower": lo, "upper": hi}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    norms = [k.value for k in NormKind]
    p = argparse.ArgumentParser(prog="specmix", description="Spectral convergence bounds for Markov semigroups.")
    p.add_argument("--config", help="TOML or JSON file with run settings")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="spectral report for a map file")
    a.add_argument("map_file")
    a.add_argument("--json", help="also write the report to this path")
    a.add_argument("--jordan-mode", choices=["rank", "diagonalizable"])
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", help="actual distance and bounds over a grid of n")
    s.add_argument("map_file")
    s.add_argument("--n-min", type=int)
    s.add_argument("--n-max", type=int)
    s.add_argument("--n-step", type=int)
    s.add_argument("--norm", choices=norms)
    s.add_argument("--csv", help="write the table here instead of stdout")
    s.add_argument("--svg", help="write a log-scale plot here")
    s.add_argument("--cert", help="detailed-balance certificate JSON")
    s.add_argument("--state", help="initial state (JSON text or file) for the state-level l2 bound")
    s.add_argument("--C", type=float, help="override the power bound for the chosen norm")
    s.add_argument("--instance-id")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("generate", help="write an instance of a generator family")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--params", help="JSON object of family parameters")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="map JSON path (default stdout)")
    g.add_argument("--cert-out", help="certificate JSON path (default <out>.cert.json)")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--seed", type=int)
    v.add_argument("--map", help="check a single map file instead of the generated corpus")
    v.add_argument("--report", help="write the JSON report here")
    v.add_argument("--jobs", type=int, default=1, help="worker processes for the bound-validity corpus")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("convert-norm", help="interval for a norm value in another norm")
    c.add_argument("value", type=float)
    c.add_argument("--from", dest="from_norm", required=True, choices=norms + [DIAMOND])
    c.add_argument("--to", dest="to_norm", required=True, choices=norms + [DIAMOND])
    c.add_argument("--kind", required=True, choices=[k.value for k in MapKind])
    c.add_argument("--dim", type=int, required=True, help="D, the dimension of the map's matrix")
    c.set_defaults(func=cmd_convert)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except UnboundedSemigroupError as exc:
        print(f"error: unbounded semigroup: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, SpecmixError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
