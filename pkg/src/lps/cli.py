"""Command-line front end.

Subcommands:

  solve       solve one problem instance from matrix/vector files
  experiment  run a genericity / recovery / perturbation experiment to CSV
  gen         generate a Gaussian instance (optionally sparse-measured)
  rip         brute-force restricted isometry constant of a matrix file

Exit codes: 0 success/converged, 1 usage or validation error,
2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, analysis, ensembles, io_text
from .errors import CapacityError, InvalidInputError, LpsError
from .solvers import CONVERGED, ProblemInstance, SolverConfig, kkt_residual, solve_instance

CLI_FAMILIES = ("bp", "bpdn-eps", "bpdn-eta", "rr", "en", "bp-l1", "rr-irls")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(out_path, command, digest, master_seed, started):
    io_text.RunManifest(
        command=command,
        config_digest=digest,
        master_seed=master_seed,
        tool_version=__version__,
        started=started,
        finished=_now(),
    ).write(str(out_path) + ".manifest.json")


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _build_instance(args, A, y) -> ProblemInstance:
    family = args.family.replace("-", "_")
    if family in ("bp", "bpdn_eps", "bpdn_eta", "rr", "en"):
        if args.p is None:
            raise InvalidInputError(f"--family {args.family} requires --p > 1")
        if args.p <= 1.0:
            raise InvalidInputError(f"family {args.family} requires p > 1, got p={args.p}")
    if family == "rr":
        if args.lam is None or args.lam <= 0:
            raise InvalidInputError("family rr requires --lambda > 0")
        return ProblemInstance(A, y, "rr", p=args.p, lam=args.lam)
    if family == "en":
        if args.lambda1 is None or args.lambda1 <= 0:
            raise InvalidInputError("family en requires --lambda1 > 0")
        if args.lambda2 is None or args.lambda2 <= 0:
            raise InvalidInputError("family en requires --lambda2 > 0")
        if args.r < 1.0:
            raise InvalidInputError("family en requires --r >= 1")
        return ProblemInstance(A, y, "en", p=args.p, r=args.r,
                               lam1=args.lambda1, lam2=args.lambda2)
    if family == "bpdn_eps":
        if args.eps is None or args.eps <= 0:
            raise InvalidInputError("family bpdn-eps requires --eps > 0")
        return ProblemInstance(A, y, "bpdn_eps", p=args.p, eps=args.eps)
    if family == "bpdn_eta":
        if args.eta is None or args.eta <= 0:
            raise InvalidInputError("family bpdn-eta requires --eta > 0")
        return ProblemInstance(A, y, "bpdn_eta", p=args.p, eta=args.eta)
    if family == "bp":
        return ProblemInstance(A, y, "bp", p=args.p)
    if family == "bp_l1":
        return ProblemInstance(A, y, "bp_l1")
    if family == "rr_irls":
        if args.p is None or not (0.0 < args.p < 1.0):
            raise InvalidInputError("family rr-irls requires --p in (0, 1)")
        if args.lam is None or args.lam <= 0:
            raise InvalidInputError("family rr-irls requires --lambda > 0")
        return ProblemInstance(A, y, "rr_irls", p=args.p, lam=args.lam)
    raise InvalidInputError(f"unknown family {args.family!r}")


def cmd_solve(args) -> int:
    started = _now()
    try:
        A = io_text.load_matrix(args.matrix)
        y = io_text.load_vector(args.rhs)
        inst = _build_instance(args, A, y)
        cfg = SolverConfig()
        if args.tol is not None:
            if args.tol <= 0:
                raise InvalidInputError("--tol must be positive")
            cfg.kkt_tol = args.tol
        if args.max_iter is not None:
            if args.max_iter < 1:
                raise InvalidInputError("--max-iter must be >= 1")
            cfg.max_iter = args.max_iter
        res = solve_instance(inst, cfg)
        kkt = kkt_residual(inst, res) if res.status == CONVERGED else res.kkt_residual
    except (LpsError, OSError) as exc:
        return _fail(str(exc))

    rep = analysis.support(res.x, analysis.DEFAULT_SUPPORT_TOL)
    multiplier = res.multiplier
    if isinstance(multiplier, np.ndarray):
        multiplier = multiplier.tolist()
    doc = {
        "family": args.family,
        "p": args.p,
        "m": A.shape[0],
        "N": A.shape[1],
        "status": res.status,
        "objective": res.objective,
        "kkt_residual": kkt,
        "iterations": res.iterations,
        "solution": res.x.tolist(),
        "multiplier": multiplier,
        "reduced_to_bp": res.reduced_to_bp,
        "support": {
            "indices": list(rep.indices),
            "size": rep.size,
            "min_rel_magnitude": rep.min_rel_magnitude,
            "tol_used": rep.tol_used,
        },
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            return _fail(str(exc))
        digest = io_text.config_digest({k: v for k, v in vars(args).items() if k != "func"})
        _write_manifest(args.out, "solve", digest, None, started)
    else:
        sys.stdout.write(text)
    return EXIT_OK if res.status == CONVERGED else EXIT_NO_CONVERGENCE


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "family", "m", "N", "p_grid", "trials", "master_seed", "support_tol",
    "sparsity", "epsilon_fraction", "eta_fraction", "lambda", "lambda1",
    "lambda2", "r", "signal_values", "delta_grid",
}


def _load_experiment_config(path, kind):
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise InvalidInputError("config must be a JSON object")
    problems = [f"unknown field {k!r}" for k in raw if k not in _EXPERIMENT_KEYS]

    def need(key, typ):
        if key not in raw:
            problems.append(f"missing field {key!r}")
            return None
        try:
            return typ(raw[key])
        except (TypeError, ValueError):
            problems.append(f"field {key!r} has invalid value {raw[key]!r}")
            return None

    m = need("m", int)
    n = need("N", int)
    trials = need("trials", int)
    master_seed = need("master_seed", int)
    if kind == "perturbation":
        sparsity = need("sparsity", int)
        delta_grid = raw.get("delta_grid")
        if not isinstance(delta_grid, list) or not delta_grid:
            problems.append("field 'delta_grid' must be a non-empty list")
        if problems:
            raise InvalidInputError("; ".join(problems))
        return {
            "m": m, "N": n, "trials": trials, "master_seed": master_seed,
            "sparsity": sparsity, "delta_grid": [float(d) for d in delta_grid],
        }, raw

    family = raw.get("family")
    if not isinstance(family, str) or family not in CLI_FAMILIES:
        problems.append(f"field 'family' must be one of {CLI_FAMILIES}")
    p_grid = raw.get("p_grid", list(analysis.DEFAULT_P_GRID))
    if not isinstance(p_grid, list) or not p_grid:
        problems.append("field 'p_grid' must be a non-empty list")
    if problems:
        raise InvalidInputError("; ".join(problems))
    try:
        cfg = analysis.ExperimentConfig(
            family=family.replace("-", "_"),
            m=m, N=n, trials=trials, master_seed=master_seed,
            p_grid=tuple(float(p) for p in p_grid),
            support_tol=float(raw.get("support_tol", analysis.DEFAULT_SUPPORT_TOL)),
            sparsity=raw.get("sparsity"),
            epsilon_fraction=raw.get("epsilon_fraction"),
            eta_fraction=raw.get("eta_fraction"),
            lam=float(raw.get("lambda", 0.1)),
            lam1=float(raw.get("lambda1", 0.1)),
            lam2=float(raw.get("lambda2", 0.1)),
            r=float(raw.get("r", 1.0)),
            signal_values=str(raw.get("signal_values", "pm_one")),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(str(exc))
    return cfg, raw


def _summary_lines(stats) -> list:
    lines = ["# summary"]
    for c in stats.cells:
        parts = [
            f"family={c.family.replace('_', '-')}",
            f"p={repr(c.p)}",
            f"trials_run={c.trials_run}",
            f"full_support_count={c.full_support_count}",
            f"full_support_fraction={repr(c.full_support_fraction)}",
            f"min_support_seen={c.min_support_seen}",
            f"mean_min_rel_magnitude={repr(c.mean_min_rel_magnitude)}",
            f"kkt_residual_max={repr(c.kkt_residual_max)}",
            f"failures={c.failures}",
        ]
        if c.recovered_count is not None:
            parts.append(f"recovered_count={c.recovered_count}")
            parts.append(f"recovery_fraction={repr(c.recovery_fraction)}")
            parts.append(f"support_le_m_count={c.support_le_m_count}")
        lines.append("# " + ",".join(parts))
    return lines


def cmd_experiment(args) -> int:
    started = _now()
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("LPS_WORKERS", "1"))
    if workers < 1:
        return _fail("--workers must be >= 1")
    try:
        cfg, raw = _load_experiment_config(args.config, args.kind)
    except (InvalidInputError, OSError, json.JSONDecodeError) as exc:
        return _fail(f"config: {exc}")

    try:
        if args.kind == "genericity":
            stats = analysis.run_genericity_experiment(cfg, workers=workers)
        elif args.kind == "recovery":
            stats = analysis.run_recovery_comparison(cfg, workers=workers)
        else:
            spec = ensembles.EnsembleSpec(m=cfg["m"], N=cfg["N"], seed=cfg["master_seed"])
            A, _ = ensembles.gen_gaussian_instance(spec)
            rows = analysis.perturbation_robustness(
                A, s=cfg["sparsity"], trials=cfg["trials"],
                delta_grid=cfg["delta_grid"], seed=cfg["master_seed"],
            )
    except (LpsError, ValueError) as exc:
        return _fail(str(exc))

    lines = []
    if args.kind == "perturbation":
        lines.append("delta,trials,failures,recovered,recovery_fraction")
        for row in rows:
            lines.append(
                f"{row['delta']!r},{row['trials']},{row['failures']},"
                f"{row['recovered']},{row['recovery_fraction']!r}"
            )
        master_seed = cfg["master_seed"]
    else:
        lines.append(",".join(io_text.CSV_COLUMNS))
        lines.extend(io_text.trial_csv_row(rec) for rec in stats.trials)
        lines.extend(_summary_lines(stats))
        master_seed = cfg.master_seed

    try:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        return _fail(str(exc))
    _write_manifest(args.out, f"experiment --kind {args.kind}",
                    io_text.config_digest(raw), master_seed, started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen / rip
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    try:
        spec = ensembles.EnsembleSpec(
            m=args.m, N=args.n, seed=args.seed, sparsity=args.sparsity
        )
        if spec.sparsity is not None:
            A, y, x0, sup = ensembles.gen_sparse_measured(spec)
        else:
            A, y = ensembles.gen_gaussian_instance(spec)
            x0, sup = None, None
        io_text.save_matrix(args.out_matrix, A)
        io_text.save_vector(args.out_rhs, y)
        if args.out_signal:
            if x0 is None:
                raise InvalidInputError("--out-signal requires --sparsity")
            io_text.save_vector(args.out_signal, x0)
        if args.out_support:
            if sup is None:
                raise InvalidInputError("--out-support requires --sparsity")
            with open(args.out_support, "w") as fh:
                fh.write(" ".join(str(int(i)) for i in sup) + "\n")
    except (LpsError, OSError) as exc:
        return _fail(str(exc))
    return EXIT_OK


def cmd_rip(args) -> int:
    try:
        A = io_text.load_matrix(args.matrix)
        delta = ensembles.rip_constant(A, args.order)
    except CapacityError as exc:
        return _fail(str(exc))
    except (LpsError, OSError) as exc:
        return _fail(str(exc))
    print(f"{delta:.12g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lps", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one instance from files")
    ps.add_argument("--family", required=True, choices=CLI_FAMILIES)
    ps.add_argument("--p", type=float, default=None)
    ps.add_argument("--matrix", required=True)
    ps.add_argument("--rhs", required=True)
    ps.add_argument("--lambda", dest="lam", type=float, default=None)
    ps.add_argument("--lambda1", type=float, default=None)
    ps.add_argument("--lambda2", type=float, default=None)
    ps.add_argument("--r", type=float, default=1.0)
    ps.add_argument("--eps", type=float, default=None)
    ps.add_argument("--eta", type=float, default=None)
    ps.add_argument("--out", default=None)
    ps.add_argument("--tol", type=float, default=None)
    ps.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    ps.set_defaults(func=cmd_solve)

    pe = sub.add_parser("experiment", help="run an experiment to CSV")
    pe.add_argument("--kind", required=True, choices=("genericity", "recovery", "perturbation"))
    pe.add_argument("--config", required=True)
    pe.add_argument("--out", required=True)
    pe.add_argument("--workers", type=int, default=None)
    pe.set_defaults(func=cmd_experiment)

    pg = sub.add_parser("gen", help="generate an instance")
    pg.add_argument("--m", type=int, required=True)
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--sparsity", type=int, default=None)
    pg.add_argument("--out-matrix", required=True)
    pg.add_argument("--out-rhs", required=True)
    pg.add_argument("--out-signal", default=None)
    pg.add_argument("--out-support", default=None)
    pg.set_defaults(func=cmd_gen)

    pr = sub.add_parser("rip", help="restricted isometry constant")
    pr.add_argument("--matrix", required=True)
    pr.add_argument("--order", type=int, required=True)
    pr.set_defaults(func=cmd_rip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
