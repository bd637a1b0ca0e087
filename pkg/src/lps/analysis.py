"""Support measurement and Monte-Carlo genericity/recovery experiments.

The experiments realize the almost-everywhere statements empirically: draw
Gaussian instances, solve, measure supports, and aggregate.  Full-support
statements are reported as fractions over converged trials, never as
certainties.  Per-trial random streams derive from
(master_seed, p_index, trial_index), so results are bit-identical across
runs and worker counts.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import pnorm
from .ensembles import EnsembleSpec, derive_seed, gen_gaussian_instance, gen_sparse_measured, rng_for
from .errors import InvalidInputError
from .solvers import (
    CONVERGED,
    ProblemInstance,
    SolveResult,
    SolverConfig,
    kkt_residual,
    solve_bp,
    solve_bp_l1,
    solve_instance,
)

__all__ = [
    "SupportReport",
    "ExperimentConfig",
    "TrialRecord",
    "CellStats",
    "ExperimentStats",
    "support",
    "check_lower_bound",
    "run_genericity_experiment",
    "run_recovery_comparison",
    "perturbation_robustness",
    "check_dual_jacobian_spd",
    "GENERICITY_FAMILIES",
    "RECOVERY_FAMILIES",
]

GENERICITY_FAMILIES = ("bp", "rr", "en", "bpdn_eps", "bpdn_eta")
RECOVERY_FAMILIES = ("bp_l1", "rr_irls")

DEFAULT_P_GRID = (1.2, 1.5, 2.0, 3.0, 4.5)
DEFAULT_SUPPORT_TOL = 1e-6
DEFAULT_EPSILON_FRACTION = 0.1
DEFAULT_ETA_FRACTION = 0.5
RECOVERY_TOL = 1e-6


@dataclass(frozen=True)
class SupportReport:
    """Thresholded support of a vector: {i : |x_i| > tol * ||x||_inf}."""

    indices: tuple
    size: int
    min_rel_magnitude: float
    tol_used: float


def support(x, tol: float = DEFAULT_SUPPORT_TOL) -> SupportReport:
    """Support of x at a relative threshold against its max magnitude.

    The zero vector has empty support.  min_rel_magnitude is the smallest
    |x_i| / ||x||_inf over the reported support (0 for x = 0).
    """
    if not (0.0 <= tol < 1.0):
        raise InvalidInputError(f"support tol must lie in [0, 1), got {tol}")
    arr = np.asarray(x, dtype=float).ravel()
    amax = np.abs(arr).max(initial=0.0)
    if amax == 0.0:
        return SupportReport((), 0, 0.0, tol)
    rel = np.abs(arr) / amax
    idx = np.flatnonzero(rel > tol)
    return SupportReport(
        indices=tuple(int(i) for i in idx),
        size=int(idx.size),
        min_rel_magnitude=float(rel[idx].min()),
        tol_used=tol,
    )


def check_lower_bound(report: SupportReport, m: int, N: int) -> bool:
    """True iff the support size meets the generic lower bound N - m + 1."""
    return report.size >= N - m + 1


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    m: int
    N: int
    trials: int
    master_seed: int
    p_grid: tuple = DEFAULT_P_GRID
    support_tol: float = DEFAULT_SUPPORT_TOL
    sparsity: Optional[int] = None
    epsilon_fraction: Optional[float] = None
    eta_fraction: Optional[float] = None
    lam: float = 0.1
    lam1: float = 0.1
    lam2: float = 0.1
    r: float = 1.0
    signal_values: str = "pm_one"

    def __post_init__(self):
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        if self.m < 1 or self.N < 1:
            raise InvalidInputError("m and N must be positive")
        if not (0.0 <= self.support_tol < 1.0):
            raise InvalidInputError("support_tol must lie in [0, 1)")
        for name in ("epsilon_fraction", "eta_fraction"):
            v = getattr(self, name)
            if v is not None and not (0.0 < v < 1.0):
                raise InvalidInputError(f"{name} must lie in (0, 1)")
        if self.sparsity is not None and not (1 <= self.sparsity <= self.N):
            raise InvalidInputError("sparsity must satisfy 1 <= s <= N")


@dataclass
class TrialRecord:
    trial: int
    seed: int
    m: int
    N: int
    p: float
    family: str
    support_size: int
    min_rel_magnitude: float
    kkt_residual: float
    iterations: int
    status: str
    wall_time_ms: float
    full_support: bool = False
    lower_bound_ok: bool = False
    min_rel_nonzero: float = 0.0  # smallest |x_i|/||x||_inf over exactly nonzero coords
    constraint_target: Optional[float] = None
    constraint_value: Optional[float] = None
    multiplier_value: Optional[float] = None
    recovered: Optional[bool] = None


@dataclass
class CellStats:
    family: str
    p: float
    trials_run: int = 0
    full_support_count: int = 0
    min_support_seen: int = 0
    mean_min_rel_magnitude: float = 0.0
    kkt_residual_max: float = 0.0
    failures: int = 0
    recovered_count: Optional[int] = None
    support_le_m_count: Optional[int] = None

    @property
    def full_support_fraction(self) -> float:
        ok = self.trials_run - self.failures
        return self.full_support_count / ok if ok else 0.0

    @property
    def recovery_fraction(self) -> float:
        ok = self.trials_run - self.failures
        if not ok or self.recovered_count is None:
            return 0.0
        return self.recovered_count / ok


@dataclass
class ExperimentStats:
    cells: list
    trials: list


def _aggregate(cfg: ExperimentConfig, records, recovery: bool) -> ExperimentStats:
    cells = []
    for p in cfg.p_grid:
        rows = [r for r in records if r.p == p]
        ok = [r for r in rows if r.status == CONVERGED]
        cell = CellStats(
            family=cfg.family,
            p=p,
            trials_run=len(rows),
            full_support_count=sum(r.full_support for r in ok),
            min_support_seen=min((r.support_size for r in ok), default=0),
            mean_min_rel_magnitude=(
                float(np.mean([r.min_rel_magnitude for r in ok])) if ok else 0.0
            ),
            kkt_residual_max=max((r.kkt_residual for r in ok), default=0.0),
            failures=len(rows) - len(ok),
        )
        if recovery:
            cell.recovered_count = sum(bool(r.recovered) for r in ok)
            cell.support_le_m_count = sum(r.support_size <= cfg.m for r in ok)
        cells.append(cell)
    return ExperimentStats(cells=cells, trials=list(records))


def _failure_record(cfg, p, trial, seed, elapsed_ms) -> TrialRecord:
    return TrialRecord(
        trial=trial, seed=seed, m=cfg.m, N=cfg.N, p=p, family=cfg.family,
        support_size=0, min_rel_magnitude=0.0, kkt_residual=float("inf"),
        iterations=0, status="error", wall_time_ms=elapsed_ms,
    )


def _genericity_trial(cfg: ExperimentConfig, p_index: int, trial: int) -> TrialRecord:
    p = cfg.p_grid[p_index]
    seed = derive_seed(cfg.master_seed, p_index, trial)
    spec = EnsembleSpec(
        m=cfg.m, N=cfg.N, seed=seed,
        sparsity=cfg.sparsity, signal_values=cfg.signal_values,
    )
    start = time.perf_counter()
    try:
        if cfg.sparsity is not None:
            A, y, _, _ = gen_sparse_measured(spec)
        else:
            A, y = gen_gaussian_instance(spec)
        solver_cfg = SolverConfig()
        target = None
        if cfg.family == "bp":
            inst = ProblemInstance(A, y, "bp", p=p)
        elif cfg.family == "rr":
            inst = ProblemInstance(A, y, "rr", p=p, lam=cfg.lam)
        elif cfg.family == "en":
            inst = ProblemInstance(A, y, "en", p=p, r=cfg.r, lam1=cfg.lam1, lam2=cfg.lam2)
        elif cfg.family == "bpdn_eps":
            frac = cfg.epsilon_fraction or DEFAULT_EPSILON_FRACTION
            target = frac * float(np.linalg.norm(y))
            inst = ProblemInstance(A, y, "bpdn_eps", p=p, eps=target)
        elif cfg.family == "bpdn_eta":
            frac = cfg.eta_fraction or DEFAULT_ETA_FRACTION
            bp = solve_bp(A, y, p, solver_cfg)
            target = frac * pnorm.pnorm(bp.x, p)
            inst = ProblemInstance(A, y, "bpdn_eta", p=p, eta=target)
        else:
            raise InvalidInputError(
                f"family {cfg.family!r} is not a genericity family {GENERICITY_FAMILIES}"
            )
        res = solve_instance(inst, solver_cfg)
        kkt = kkt_residual(inst, res)
    except InvalidInputError:
        raise
    except Exception:
        return _failure_record(cfg, p, trial, seed, (time.perf_counter() - start) * 1e3)
    elapsed_ms = (time.perf_counter() - start) * 1e3

    rep = support(res.x, cfg.support_tol)
    rep0 = support(res.x, 0.0)
    constraint_value = None
    multiplier_value = None
    if cfg.family == "bpdn_eps":
        constraint_value = float(np.linalg.norm(A @ res.x - y))
        multiplier_value = float(res.multiplier) if res.multiplier is not None else None
    elif cfg.family == "bpdn_eta":
        constraint_value = pnorm.pnorm(res.x, p)
        multiplier_value = float(res.multiplier) if res.multiplier is not None else None
    return TrialRecord(
        trial=trial, seed=seed, m=cfg.m, N=cfg.N, p=p, family=cfg.family,
        support_size=rep.size, min_rel_magnitude=rep.min_rel_magnitude,
        kkt_residual=kkt, iterations=res.iterations, status=res.status,
        wall_time_ms=elapsed_ms,
        full_support=rep.size == cfg.N,
        lower_bound_ok=check_lower_bound(rep, cfg.m, cfg.N),
        min_rel_nonzero=rep0.min_rel_magnitude,
        constraint_target=target, constraint_value=constraint_value,
        multiplier_value=multiplier_value,
    )


def _recovery_trial(cfg: ExperimentConfig, p_index: int, trial: int) -> TrialRecord:
    p = cfg.p_grid[p_index]
    seed = derive_seed(cfg.master_seed, p_index, trial)
    spec = EnsembleSpec(
        m=cfg.m, N=cfg.N, seed=seed,
        sparsity=cfg.sparsity, signal_values=cfg.signal_values,
    )
    start = time.perf_counter()
    try:
        A, y, x0, _ = gen_sparse_measured(spec)
        if cfg.family == "bp_l1":
            inst = ProblemInstance(A, y, "bp_l1")
        elif cfg.family == "rr_irls":
            inst = ProblemInstance(A, y, "rr_irls", p=p, lam=cfg.lam)
        else:
            raise InvalidInputError(
                f"family {cfg.family!r} is not a recovery family {RECOVERY_FAMILIES}"
            )
        res = solve_instance(inst, SolverConfig())
        kkt = kkt_residual(inst, res)
    except InvalidInputError:
        raise
    except Exception:
        return _failure_record(cfg, p, trial, seed, (time.perf_counter() - start) * 1e3)
    elapsed_ms = (time.perf_counter() - start) * 1e3

    rep = support(res.x, cfg.support_tol)
    recovered = bool(np.abs(res.x - x0).max() <= RECOVERY_TOL)
    return TrialRecord(
        trial=trial, seed=seed, m=cfg.m, N=cfg.N, p=p, family=cfg.family,
        support_size=rep.size, min_rel_magnitude=rep.min_rel_magnitude,
        kkt_residual=kkt, iterations=res.iterations, status=res.status,
        wall_time_ms=elapsed_ms,
        full_support=rep.size == cfg.N,
        lower_bound_ok=check_lower_bound(rep, cfg.m, cfg.N),
        recovered=recovered,
    )


def _run_trials(trial_fn, cfg: ExperimentConfig, workers: int):
    tasks = [(p_index, trial)
             for p_index in range(len(cfg.p_grid))
             for trial in range(cfg.trials)]
    if workers <= 1:
        return [trial_fn(cfg, pi, t) for pi, t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(trial_fn, cfg, pi, t) for pi, t in tasks]
        return [f.result() for f in futures]


def run_genericity_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentStats:
    """Solve `trials` Gaussian (or sparse-measured) instances per p and aggregate.

    Requires p > 1 throughout the grid and, for the bp family, N >= 2m - 1;
    the other families need N >= m.  Solver failures are recorded in the
    failures count and never abort the run.
    """
    if cfg.family not in GENERICITY_FAMILIES:
        raise InvalidInputError(f"unknown genericity family {cfg.family!r}")
    if any(p <= 1.0 for p in cfg.p_grid):
        raise InvalidInputError("genericity experiments require p > 1 across the grid")
    if cfg.family == "bp" and cfg.N < 2 * cfg.m - 1:
        raise InvalidInputError("bp genericity requires N >= 2m - 1")
    if cfg.N < cfg.m:
        raise InvalidInputError("experiments require N >= m")
    records = _run_trials(_genericity_trial, cfg, workers)
    return _aggregate(cfg, records, recovery=False)


def run_recovery_comparison(cfg: ExperimentConfig, workers: int = 1) -> ExperimentStats:
    """Sparse-recovery comparison runs for the p <= 1 solvers.

    For bp_l1, counts exact recoveries (max-norm error <= 1e-6) of the
    planted s-sparse signal; for rr_irls, the aggregate also counts trials
    whose support stays within m.
    """
    if cfg.family not in RECOVERY_FAMILIES:
        raise InvalidInputError(f"unknown recovery family {cfg.family!r}")
    if cfg.sparsity is None:
        raise InvalidInputError("recovery experiments need sparsity set")
    if cfg.family == "rr_irls" and any(not (0.0 < p < 1.0) for p in cfg.p_grid):
        raise InvalidInputError("rr_irls recovery requires 0 < p < 1 across the grid")
    records = _run_trials(_recovery_trial, cfg, workers)
    return _aggregate(cfg, records, recovery=True)


def perturbation_robustness(A, s: int, trials: int, delta_grid: Sequence[float],
                            seed: int) -> list:
    """Recovery fraction of the l1 solver when the model matrix is perturbed.

    Trial signals are measured with the baseline A (y = A x0) while
    reconstruction runs against A + delta * E, with E Gaussian scaled to
    unit spectral norm (one E per delta).  Trial signals are independent of
    delta, so delta = 0 reproduces the baseline fractions exactly; tiny
    deltas probe the openness of the recovery set, huge ones destroy it.
    Returns one dict per delta.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if not (1 <= s <= n):
        raise InvalidInputError("sparsity must satisfy 1 <= s <= N")
    rows = []
    for d_index, delta in enumerate(delta_grid):
        if delta:
            E = rng_for(seed, 0, d_index).standard_normal((m, n))
            E /= np.linalg.norm(E, 2)
            A_pert = A + float(delta) * E
        else:
            A_pert = A
        recovered = 0
        failures = 0
        for trial in range(trials):
            rng = rng_for(seed, 1, trial)  # independent of delta: same signals
            sup = rng.choice(n, size=s, replace=False)
            x0 = np.zeros(n)
            x0[sup] = rng.integers(0, 2, size=s) * 2.0 - 1.0
            y = A @ x0
            try:
                res = solve_bp_l1(A_pert, y)
            except Exception:
                failures += 1
                continue
            if np.abs(res.x - x0).max() <= RECOVERY_TOL:
                recovered += 1
        rows.append({
            "delta": float(delta),
            "trials": trials,
            "failures": failures,
            "recovered": recovered,
            "recovery_fraction": recovered / trials if trials else 0.0,
        })
    return rows


def check_dual_jacobian_spd(A, y, p, result: SolveResult) -> float:
    """Smallest eigenvalue of Q = A diag(h'(a_i^T nu)) A^T at a bp solution.

    Requires 1 < p <= 2 and the bp multiplier nu; on generic instances the
    value is strictly positive.
    """
    p = float(p)
    if not (1.0 < p <= 2.0):
        raise InvalidInputError(f"dual Jacobian check requires 1 < p <= 2, got p={p}")
    if result.multiplier is None:
        raise InvalidInputError("dual Jacobian check requires the bp multiplier nu")
    A = np.asarray(A, dtype=float)
    nu = np.asarray(result.multiplier, dtype=float).ravel()
    if nu.shape[0] != A.shape[0]:
        raise InvalidInputError("multiplier dimension does not match A")
    gamma = pnorm.h_prime(A.T @ nu, p)
    Q = (A * gamma) @ A.T
    return float(np.linalg.eigvalsh(Q).min())
