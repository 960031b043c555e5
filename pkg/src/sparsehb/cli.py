"""Command-line front end.

Subcommands: condition, asymptotics, bounds, witness, solve, eval.
Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .assembly import DEFAULT_NNZ_CAP, GalerkinSystem, write_coo
from .basis import BasisFunction, SparseGridSpace, evaluate
from .errors import CapExceeded, ConvergenceError
from .extremal import witness_lower, witness_upper
from .index_sets import (bounds_quantities, gap_example, gap_example_literal, literal_quantities,
                         make_energy_optimized, make_isotropic_full_grid, make_standard_sparse,
                         read_index_file)
from .solver import exact_center_value, model_rhs, pcg
from .spectral import extremal_eigs, sandwich_check
from .transform import evaluate_function

SCHEMA_VERSION = 1
FAMILIES = ("full", "sparse", "energy", "file", "gap")
CONDITION_COLUMNS = ["k", "dim", "lambda_min", "lambda_max", "kappa", "n_lambda", "n_tilde",
                     "n_tilde_prime", "kappa_over_lower", "kappa_over_upper"]

log = logging.getLogger("sparsehb")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    d: int
    ks: tuple
    a: Fraction = Fraction(0)
    file: str | None = None
    method: str = "auto"
    tol: float = 1e-8
    seed: int = 42
    fmt: str = "csv"
    out: str | None = None

    def validate(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.family == "file":
            if not self.file:
                raise ConfigError("--family file needs --file")
            return self
        if self.d < 1:
            raise ConfigError("--d must be >= 1")
        if not self.ks or min(self.ks) < 1:
            raise ConfigError("--k values must be >= 1")
        if self.family == "energy" and self.a >= 1:
            raise ConfigError("--a must be < 1")
        if self.family == "gap" and self.d < 2:
            raise ConfigError("--family gap needs --d >= 2")
        if self.method not in ("dense", "lanczos", "auto"):
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        return self

    def index_set(self, k):
        if self.family == "full":
            return make_isotropic_full_grid(k, self.d)
        if self.family == "sparse":
            return make_standard_sparse(k, self.d)
        if self.family == "energy":
            return make_energy_optimized(k, self.d, self.a)
        if self.family == "gap":
            return gap_example(k, self.d)
        return read_index_file(self.file)

    def as_dict(self):
        return {"family": self.family, "d": self.d, "k": list(self.ks), "a": str(self.a),
                "file": self.file, "method": self.method, "tol": self.tol, "seed": self.seed}


def parse_k(text):
    """``"5"`` -> (5,), ``"2..8"`` -> (2, ..., 8)."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return (int(text),)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k or k-range {text!r}") from None


def parse_rational(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad rational {text!r}") from None


def asymptotic_rate(family, d, a=Fraction(0)):
    """Exponent ``r`` in ``kappa ~ k**(d-1) 2**(r k)``."""
    if family == "sparse":
        return Fraction(d - 1, d)
    if family == "full":
        return Fraction(d - 1)
    if family == "energy":
        return (d - 1) * (1 - a) / (d - a)
    raise ConfigError(f"no asymptotic law for family {family!r}")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, default=_json_default) + "\n"


def dump_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()


def _build(lam, need_mass=False):
    return GalerkinSystem.build(SparseGridSpace(lam), DEFAULT_NNZ_CAP, with_mass=need_mass)


def _ks(cfg):
    # index files carry their own set; k is ignored
    return cfg.ks if cfg.family != "file" else (None,)


def condition_rows(cfg: ExperimentConfig, export=None):
    rows = []
    for k in _ks(cfg):
        lam = cfg.index_set(k)
        k = lam.k_max if k is None else k
        system = _build(lam)
        if export:
            write_coo(system.preconditioned_matrix(), export)
        log.info("k=%s dim=%d method=%s seed=%d", k, system.n, cfg.method, cfg.seed)
        rep = extremal_eigs(system, cfg.method, cfg.tol, cfg.seed)
        b = bounds_quantities(lam)
        sw = sandwich_check(lam, rep)
        rows.append({"k": k, "dim": system.n, "lambda_min": rep.lambda_min,
                     "lambda_max": rep.lambda_max, "kappa": rep.kappa, "n_lambda": b.n_lambda,
                     "n_tilde": b.n_tilde, "n_tilde_prime": b.n_tilde_prime,
                     "kappa_over_lower": sw.ratio_lower, "kappa_over_upper": sw.ratio_upper})
    return rows


def cmd_condition(cfg, args):
    if args.export_matrix and len(cfg.ks) != 1:
        raise ConfigError("--export-matrix needs a single k")
    rows = condition_rows(cfg, args.export_matrix)
    if cfg.fmt == "csv":
        return dump_csv(CONDITION_COLUMNS, rows)
    return dump_json({"schema_version": SCHEMA_VERSION, "command": "condition",
                      "config": cfg.as_dict(), "columns": CONDITION_COLUMNS, "rows": rows})


def asymptotics_report(cfg):
    if len(cfg.ks) < 4:
        raise ConfigError("asymptotics needs a k-range of length >= 4")
    rate = asymptotic_rate(cfg.family, cfg.d, cfg.a)
    rows = condition_rows(cfg)
    for r in rows:
        k = r["k"]
        r["rho"] = r["kappa"] / (k ** (cfg.d - 1) * 2.0 ** (float(rate) * k))
    rhos = [r["rho"] for r in rows]
    return {"rate": rate, "rows": rows, "rho_max_over_min": max(rhos) / min(rhos)}


def cmd_asymptotics(cfg, args):
    rep = asymptotics_report(cfg)
    cols = ["k", "dim", "kappa", "rho"]
    if cfg.fmt == "csv":
        return dump_csv(cols, rep["rows"])
    return dump_json({"schema_version": SCHEMA_VERSION, "command": "asymptotics",
                      "config": cfg.as_dict(), "rate": str(rep["rate"]),
                      "rows": [{c: r[c] for c in cols} for r in rep["rows"]],
                      "rho_max_over_min": rep["rho_max_over_min"]})


def cmd_bounds(cfg, args):
    reports = []
    for k in _ks(cfg):
        lam = cfg.index_set(k)
        entry = {"k": k, "size": len(lam), "bounds": bounds_quantities(lam).as_dict()}
        if cfg.family == "gap":
            literal = gap_example_literal(k, cfg.d)
            entry["literal_set"] = [list(b) for b in literal]
            entry["literal_bounds"] = literal_quantities(literal)
        reports.append(entry)
    return dump_json({"schema_version": SCHEMA_VERSION, "command": "bounds",
                      "config": cfg.as_dict(), "reports": reports})


def cmd_witness(cfg, args):
    reports = []
    rtol = 1e-8
    for k in _ks(cfg):
        lam = cfg.index_set(k)
        system = _build(lam, need_mass=True)
        spec = extremal_eigs(system, cfg.method, cfg.tol, cfg.seed)
        up = witness_upper(lam, system)
        lo = witness_lower(lam, system)
        reports.append({
            "k": k, "dim": system.n, "spectral": spec.as_dict(),
            "upper_witness": up.as_dict(), "lower_witness": lo.as_dict(),
            "upper_contained": up.rayleigh <= spec.lambda_max * (1 + rtol),
            "lower_contained": lo.rayleigh >= spec.lambda_min * (1 - rtol),
        })
    return dump_json({"schema_version": SCHEMA_VERSION, "command": "witness",
                      "config": cfg.as_dict(), "reports": reports})


def random_rhs(space, seed):
    return np.random.default_rng(seed).standard_normal(space.n)


def cmd_solve(cfg, args):
    reports = []
    for k in _ks(cfg):
        lam = cfg.index_set(k)
        system = _build(lam)
        if args.rhs == "random":
            b = random_rhs(system.space, cfg.seed)
        else:
            b = model_rhs(system.space, args.rhs)
        x, stats = pcg(system, b, cfg.tol, args.maxit, seed=cfg.seed)
        entry = {"k": k, "dim": system.n, "rhs": args.rhs, "stats": stats.as_dict()}
        if args.rhs == "product_sine":
            centre = np.full(system.space.d, 0.5)
            entry["center_value"] = evaluate_function(system.space, x, centre)
            entry["exact_center_value"] = exact_center_value("product_sine", system.space.d)
        reports.append(entry)
    return dump_json({"schema_version": SCHEMA_VERSION, "command": "solve",
                      "config": cfg.as_dict(), "reports": reports})


def cmd_eval(args):
    block = tuple(args.block)
    offsets = tuple(args.offsets) if args.offsets else (0,) * len(block)
    if len(args.x) != len(block):
        raise ConfigError("--x needs one coordinate per block level")
    try:
        f = BasisFunction(block, offsets)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    node = f.node()
    return dump_json({"schema_version": SCHEMA_VERSION, "command": "eval",
                      "block": list(block), "offsets": list(offsets), "x": list(args.x),
                      "value": evaluate(f, np.array(args.x, dtype=float)),
                      "node": [[n, lev] for n, lev in node.coords],
                      "support": [[str(a), str(b)] for a, b in f.support()]})


def build_parser():
    p = argparse.ArgumentParser(prog="sparsehb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--family", choices=FAMILIES, default="sparse")
        sp.add_argument("--d", type=int, default=2)
        sp.add_argument("--k", type=parse_k, default=(3,))
        sp.add_argument("--a", type=parse_rational, default=Fraction(0))
        sp.add_argument("--file")
        sp.add_argument("--method", choices=("dense", "lanczos", "auto"), default="auto")
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("condition", help="condition numbers and sandwich ratios"), "csv")
    sub.choices["condition"].add_argument("--export-matrix", metavar="PATH",
                                          help="write D^-1/2 G D^-1/2 as 'row col value' lines")
    common(sub.add_parser("asymptotics", help="fit kappa against the asymptotic law"), "csv")
    common(sub.add_parser("bounds", help="combinatorial bound quantities"))
    common(sub.add_parser("witness", help="Rayleigh-quotient witnesses"))
    s = sub.add_parser("solve", help="PCG solve with the HB diagonal preconditioner")
    common(s)
    s.add_argument("--rhs", choices=("constant_one", "product_sine", "random"), default="constant_one")
    s.add_argument("--maxit", type=int, default=10_000)
    e = sub.add_parser("eval", help="evaluate one basis function")
    e.add_argument("--block", type=int, nargs="+", required=True)
    e.add_argument("--offsets", type=int, nargs="+")
    e.add_argument("--x", type=float, nargs="+", required=True)
    e.add_argument("--out")
    e.add_argument("--threads", type=int, default=None)
    e.add_argument("-v", "--verbose", action="store_true")
    return p


COMMANDS = {"condition": cmd_condition, "asymptotics": cmd_asymptotics, "bounds": cmd_bounds,
            "witness": cmd_witness, "solve": cmd_solve}


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        with _thread_limit(args.threads):
            if args.command == "eval":
                text = cmd_eval(args)
            else:
                cfg = ExperimentConfig(args.family, args.d, args.k, args.a, args.file, args.method,
                                       args.tol, args.seed, args.format, args.out).validate()
                text = COMMANDS[args.command](cfg, args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"sparsehb: error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, CapExceeded, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"sparsehb: numerical failure: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
