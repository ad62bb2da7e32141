"""Nuclear-norm recovery programs.

All three programs are driven by one engine: accelerated proximal descent
(momentum with restart on objective increase, step 1/L with L estimated by
power iteration and doubled on backtracking failure) applied to

    minimize_X  tau * ||X||_*  +  1/2 ||A(X) - y||_2^2 .

* solve_penalized  - the penalized problem itself at a fixed tau.
* solve_dantzig    - residual-correlation constraint ||A*(y - A(X))||_op <= lambda;
                     solved as the penalized problem at tau = lambda, whose
                     stationary points satisfy the constraint.
* solve_noiseless  - equality constraint A(X) = y via continuation: shrink tau
                     geometrically, warm-starting, until the residual passes
                     the feasibility tolerance.
* solve_lasso      - residual-ball constraint ||A(X) - y||_2 <= delta via
                     bisection on tau (the residual is monotone in tau).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .matcore import nuclear_norm, operator_norm
from .measure import (MeasurementEnsemble, ObservationSet, adjoint_ensemble,
                      apply_ensemble, entry_sampling_ensemble)
from .rand import spawn_rng

__all__ = [
    "SolverConfig",
    "SolverReport",
    "estimate_lipschitz",
    "choose_lambda",
    "solve_penalized",
    "solve_noiseless",
    "solve_dantzig",
    "solve_lasso",
]

STATIONARITY_SLACK = 1e-6   # converged iff dual_residual <= tau * (1 + slack)


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000            # proximal iterations per penalized solve
    fista_tol: float = 1e-8          # relative iterate-change stopping threshold
    eq_tol: float = 1e-6             # relative feasibility target, noiseless program
    continuation_factor: float = 0.25  # geometric tau shrink per stage
    bisection_iters: int = 40        # max bisection steps, lasso program

    def __post_init__(self):
        if self.max_iters < 1 or self.bisection_iters < 1:
            raise ValueError("iteration counts must be positive")
        if not (0 < self.fista_tol < 1) or not (0 < self.eq_tol < 1):
            raise ValueError("tolerances must be in (0, 1)")
        if not (0 < self.continuation_factor < 1):
            raise ValueError("continuation factor must be in (0, 1)")


@dataclass(frozen=True)
class SolverReport:
    estimate: np.ndarray
    objective: float           # nuclear norm of the estimate
    equality_residual: float   # ||A(estimate) - y||_2
    dual_residual: float       # ||A*(y - A(estimate))||_op
    iterations: int
    converged: bool
    tau_path: tuple = ()       # penalty values visited, in visit order
    residual_path: tuple = ()  # equality residual at each visited tau
    flags: tuple = ()

    def to_json_dict(self):
        return {
            "estimate": self.estimate.tolist(),
            "objective": self.objective,
            "equality_residual": self.equality_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "tau_path": list(self.tau_path),
            "residual_path": list(self.residual_path),
            "flags": list(self.flags),
        }


def _check_y(ens, y):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != ens.m:
        raise ValueError(f"y has length {y.shape[0]}, ensemble m={ens.m}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    return y


def estimate_lipschitz(ens, iters=120, seed=0):
    """Largest eigenvalue of A*A (the gradient Lipschitz constant), by power
    iteration, with a 5% safety margin.  Exact 1.0 for the vectorization and
    entry-sampling kinds, whose A*A is an orthogonal projector."""
    if ens.kind in ("vectorization", "entry"):
        return 1.0
    rng = spawn_rng(seed, 977)
    x = rng.standard_normal((ens.n1, ens.n2))
    x /= np.linalg.norm(x)
    lam = 1.0
    for _ in range(iters):
        w = adjoint_ensemble(ens, apply_ensemble(ens, x))
        lam = float(np.vdot(x, w))
        norm = np.linalg.norm(w)
        if norm == 0:
            return 1.0
        x = w / norm
    return 1.05 * lam


def _prox_nuc(g, thresh):
    u, s, vt = np.linalg.svd(g, full_matrices=False)
    s = np.maximum(s - thresh, 0.0)
    return (u * s) @ vt, float(s.sum())


def _objective(tau, nuc, ax, y):
    r = ax - y
    return tau * nuc + 0.5 * float(r @ r)


def _penalized_core(ens, y, tau, x0, lip, max_iters, tol,
                    require_stationarity=True):
    """Monotone accelerated proximal descent on the penalized objective.

    Accepts an iterate only if the objective does not increase; on a momentum
    overshoot the momentum is reset, and if a plain step from the incumbent
    still increases the objective the step bound L is doubled.  Returns
    (x, A(x), iterations, converged, flags).
    """
    x = x0.copy()
    ax = apply_ensemble(ens, x)
    nuc = nuclear_norm(x) if np.any(x) else 0.0
    fx = _objective(tau, nuc, ax, y)
    z, az = x, ax
    t = 1.0
    tol_eff = tol
    flags = []
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        grad = adjoint_ensemble(ens, az - y)
        x_new, nuc_new = _prox_nuc(z - grad / lip, tau / lip)
        ax_new = apply_ensemble(ens, x_new)
        f_new = _objective(tau, nuc_new, ax_new, y)
        slack = 1e-12 * max(1.0, abs(fx))
        if f_new > fx + slack:
            # overshoot: restart momentum at the incumbent
            z, az, t = x, ax, 1.0
            backtracks = 0
            while True:
                grad = adjoint_ensemble(ens, ax - y)
                x_new, nuc_new = _prox_nuc(x - grad / lip, tau / lip)
                ax_new = apply_ensemble(ens, x_new)
                f_new = _objective(tau, nuc_new, ax_new, y)
                if f_new <= fx + slack or backtracks >= 60:
                    break
                lip *= 2.0  # step bound was too small
                backtracks += 1
            if f_new > fx + slack:
                # numerical floor: no descent direction left
                flags.append("objective-floor")
                converged = _stationary(ens, y, ax, tau) if require_stationarity else True
                break
        dx = np.linalg.norm(x_new - x)
        rel = dx / max(1.0, np.linalg.norm(x_new))
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_new
        z = x_new + beta * (x_new - x)
        az = ax_new + beta * (ax_new - ax)  # A is linear; no extra measurement
        x, ax, fx, t = x_new, ax_new, f_new, t_new
        if rel < tol_eff:
            if not require_stationarity:
                converged = True
                break
            if _stationary(ens, y, ax, tau):
                converged = True
                break
            tol_eff = max(tol_eff * 0.25, 1e-15)  # demand more progress
    else:
        if require_stationarity:
            converged = _stationary(ens, y, ax, tau)
            if not converged:
                flags.append("iteration-cap")
    return x, ax, it, converged, tuple(flags)


def _stationary(ens, y, ax, tau):
    dres = operator_norm(adjoint_ensemble(ens, y - ax))
    return dres <= tau * (1.0 + STATIONARITY_SLACK)


def _report(ens, y, x, ax, iterations, converged, tau_path, residual_path, flags=()):
    res = ax - y
    return SolverReport(
        estimate=x,
        objective=nuclear_norm(x) if np.any(x) else 0.0,
        equality_residual=float(np.linalg.norm(res)),
        dual_residual=float(operator_norm(adjoint_ensemble(ens, -res))) if ens.m else 0.0,
        iterations=int(iterations),
        converged=bool(converged),
        tau_path=tuple(float(t) for t in tau_path),
        residual_path=tuple(float(r) for r in residual_path),
        flags=tuple(flags),
    )


def _zero_report(ens, y, flags=()):
    x = np.zeros((ens.n1, ens.n2))
    return _report(ens, y, x, np.zeros(ens.m), 0, True, (), (), flags)


def solve_penalized(ens, y, tau, config=None, x0=None, lipschitz=None):
    """Minimize tau * ||X||_* + 1/2 ||A(X) - y||^2.

    converged means first-order stationarity was certified:
    ||A*(y - A(X))||_op <= tau * (1 + 1e-6).
    """
    cfg = config or SolverConfig()
    y = _check_y(ens, y)
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not np.any(y):
        return _zero_report(ens, y)
    x0 = np.zeros((ens.n1, ens.n2)) if x0 is None else np.array(x0, dtype=float)
    lip = estimate_lipschitz(ens) if lipschitz is None else lipschitz
    x, ax, it, conv, flags = _penalized_core(
        ens, y, tau, x0, lip, cfg.max_iters, cfg.fista_tol)
    rep = _report(ens, y, x, ax, it, conv, (tau,),
                  (float(np.linalg.norm(ax - y)),), flags)
    return rep


def choose_lambda(n, sigma, c_mult=1.5):
    """Residual-correlation threshold c_mult * sqrt(2 n) * sigma.

    The back-projected noise A*(z) behaves like an n x n matrix with iid
    N(0, sigma^2) entries, whose operator norm concentrates near 2 sqrt(n)
    sigma; the default multiplier keeps the threshold above that level in
    the vast majority of draws.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    return float(c_mult * math.sqrt(2.0 * n) * sigma)


def solve_dantzig(ens, y, lam, config=None):
    """Minimize ||X||_* subject to ||A*(y - A(X))||_op <= lambda.

    Solved as the penalized problem at tau = lambda: its stationary points
    satisfy the constraint, and stationarity is certified before reporting
    converged.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    y = _check_y(ens, y)
    if not np.any(y):
        return _zero_report(ens, y)
    return solve_penalized(ens, y, lam, config=config)


def solve_noiseless(ens, y, config=None):
    """Minimize ||X||_* subject to A(X) = y, by penalty continuation.

    tau shrinks geometrically from just below ||A*(y)||_op (where the zero
    matrix is optimal), warm-starting each stage, until the equality residual
    drops below eq_tol * ||y||_2.  Hitting the tau floor first reports
    converged = False.
    """
    cfg = config or SolverConfig()
    y = _check_y(ens, y)
    if not np.any(y):
        return _zero_report(ens, y)
    ynorm = float(np.linalg.norm(y))
    lip = estimate_lipschitz(ens)
    tau0 = operator_norm(adjoint_ensemble(ens, y))
    tau = tau0 * cfg.continuation_factor
    x = np.zeros((ens.n1, ens.n2))
    ax = np.zeros(ens.m)
    taus, residuals = [], []
    total_it = 0
    converged = False
    flags = ()
    while True:
        x, ax, it, _, _ = _penalized_core(
            ens, y, tau, x, lip, cfg.max_iters, cfg.fista_tol,
            require_stationarity=False)
        total_it += it
        res = float(np.linalg.norm(ax - y))
        taus.append(tau)
        residuals.append(res)
        if res <= cfg.eq_tol * ynorm:
            converged = True
            break
        tau *= cfg.continuation_factor
        if tau < tau0 * 1e-14:
            flags = ("tau-floor",)
            break
    return _report(ens, y, x, ax, total_it, converged, taus, residuals, flags)


def solve_lasso(ens, y, delta, config=None):
    """Minimize ||X||_* subject to ||A(X) - y||_2 <= delta.

    Accepts either a MeasurementEnsemble or an ObservationSet (interpreted as
    entry sampling with y in the stored Omega order).  The equality residual
    of the penalized solution is monotone in tau, so the constrained solution
    is found by bisection on tau; among all feasible iterates the one with
    the smallest nuclear norm (ties: smallest residual) is returned.
    """
    if isinstance(ens, ObservationSet):
        ens = entry_sampling_ensemble(ens)
    if not isinstance(ens, MeasurementEnsemble):
        raise TypeError("expected a MeasurementEnsemble or ObservationSet")
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    cfg = config or SolverConfig()
    y = _check_y(ens, y)
    if not np.any(y):
        return _zero_report(ens, y)
    ynorm = float(np.linalg.norm(y))
    if delta >= ynorm:
        # the zero matrix is already feasible, and has minimal nuclear norm
        return _zero_report(ens, y)
    if delta == 0:
        return solve_noiseless(ens, y, config=cfg)

    lip = estimate_lipschitz(ens)
    tau0 = operator_norm(adjoint_ensemble(ens, y))
    feas_tol = delta * (1.0 + STATIONARITY_SLACK)
    taus, residuals, records = [], [], []
    total_it = 0
    x = np.zeros((ens.n1, ens.n2))

    def eval_tau(tau):
        nonlocal x, total_it
        x, ax, it, _, _ = _penalized_core(
            ens, y, tau, x, lip, cfg.max_iters, cfg.fista_tol,
            require_stationarity=False)
        total_it += it
        res = float(np.linalg.norm(ax - y))
        taus.append(tau)
        residuals.append(res)
        records.append((tau, x.copy(), ax.copy(), res))
        return res

    # continuation down from tau0 until feasible
    tau = tau0 * cfg.continuation_factor
    while eval_tau(tau) > feas_tol:
        tau *= cfg.continuation_factor
        if tau < tau0 * 1e-14:
            best = min(records, key=lambda rec: (rec[3], rec[0]))
            return _report(ens, y, best[1], best[2], total_it, False,
                           taus, residuals, ("delta-unreachable",))
    tau_feas, tau_infeas = tau, tau / cfg.continuation_factor

    # bisect (geometrically) toward the largest feasible tau
    for _ in range(cfg.bisection_iters):
        if tau_infeas / tau_feas <= 1.0 + 1e-4:
            break
        mid = math.sqrt(tau_feas * tau_infeas)
        if eval_tau(mid) <= feas_tol:
            tau_feas = mid
        else:
            tau_infeas = mid

    feasible = [rec for rec in records if rec[3] <= feas_tol]
    best = min(feasible,
               key=lambda rec: (nuclear_norm(rec[1]) if np.any(rec[1]) else 0.0,
                                rec[3]))
    return _report(ens, y, best[1], best[2], total_it, True, taus, residuals)
