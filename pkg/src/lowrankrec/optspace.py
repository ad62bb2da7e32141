"""Spectral completion pipeline: trim over-observed rows/columns, initialize
from the rescaled SVD of the trimmed data, then minimize the observed-entry
residual over the factor manifold.

The objective is F(U, V) = min_S 1/2 ||P_Omega(U S V^T - Y)||_F^2 with U, V
column-orthonormal; the inner minimization over the small r x r matrix S is
an exact least-squares solve performed at every objective evaluation, and the
outer descent moves U, V along the projected (tangent-space) gradient with a
QR retraction and an Armijo backtracking line search.
"""

import math
from dataclasses import dataclass

import numpy as np

from .matcore import check_matrix, nuclear_norm, operator_norm, RANK_RTOL
from .measure import ObservationSet, project_omega
from .solve import SolverReport

__all__ = [
    "OptspaceConfig",
    "OptspaceState",
    "trim",
    "spectral_init",
    "optspace_descent",
    "estimate_rank",
    "optspace",
]

INNER_RIDGE = 1e-12  # added to the normal equations when rank-deficient


@dataclass(frozen=True)
class OptspaceConfig:
    max_iters: int = 500
    grad_tol: float = 1e-8       # stop when the projected gradient norm falls below
    trim_multiplier: float = 2.0  # degree cap = multiplier * m / n
    ls_shrink: float = 0.5       # line-search step shrink factor
    ls_suffdec: float = 1e-4     # Armijo sufficient-decrease constant

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.grad_tol <= 0 or self.trim_multiplier <= 0:
            raise ValueError("grad_tol and trim_multiplier must be positive")
        if not (0 < self.ls_shrink < 1) or not (0 < self.ls_suffdec < 1):
            raise ValueError("line-search constants must be in (0, 1)")


@dataclass(frozen=True)
class OptspaceState:
    u: np.ndarray          # (n1, r), orthonormal columns
    s: np.ndarray          # (r, r)
    v: np.ndarray          # (n2, r), orthonormal columns
    objective: float       # F(U, V) at this state
    iteration: int
    history: tuple = ()    # accepted objective values, F_0 included
    used_ridge: bool = False

    def estimate(self):
        return self.u @ self.s @ self.v.T


def trim(y_obs, omega, multiplier=2.0):
    """Zero out over-observed rows and columns.

    A row is over-observed when it holds more than multiplier * m / n1
    observed entries (columns likewise, with n2).  Removal shrinks m, so the
    rule is iterated to a fixed point; the result therefore satisfies its own
    degree caps, and trimming an already-trimmed pair changes nothing.
    """
    y_obs = check_matrix(y_obs)
    if y_obs.shape != (omega.n1, omega.n2):
        raise ValueError(f"shape {y_obs.shape} does not match Omega")
    if multiplier <= 0:
        raise ValueError("multiplier must be positive")
    pairs = omega.pairs
    while pairs.shape[0]:
        m = pairs.shape[0]
        row_deg = np.bincount(pairs[:, 0], minlength=omega.n1)
        col_deg = np.bincount(pairs[:, 1], minlength=omega.n2)
        bad_rows = row_deg > multiplier * m / omega.n1
        bad_cols = col_deg > multiplier * m / omega.n2
        if not bad_rows.any() and not bad_cols.any():
            break
        keep = ~(bad_rows[pairs[:, 0]] | bad_cols[pairs[:, 1]])
        pairs = pairs[keep]
    trimmed_omega = ObservationSet(n1=omega.n1, n2=omega.n2, pairs=pairs)
    return project_omega(trimmed_omega, y_obs), trimmed_omega


def spectral_init(trimmed, omega, r):
    """Rank-r state from the SVD of (1/p) * trimmed, p the observed fraction."""
    trimmed = check_matrix(trimmed)
    if omega.m == 0:
        raise ValueError("cannot initialize from an empty observation set")
    if not (1 <= r <= min(omega.n1, omega.n2)):
        raise ValueError(f"rank must be in [1, {min(omega.n1, omega.n2)}], got {r}")
    scaled = trimmed / omega.p
    u, s, vt = np.linalg.svd(scaled, full_matrices=False)
    achievable = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if achievable < r:
        raise ValueError(
            f"requested rank {r} exceeds achievable rank {achievable} of the data")
    u, sv, v = u[:, :r], s[:r], vt[:r].T
    # S starts as the scaled singular values; the objective is still the
    # inner-minimized F(U, V), which is what the descent drives down.
    obj, _, ridge = _inner_s(u, v, trimmed, omega)
    return OptspaceState(u=u, s=np.diag(sv), v=v, objective=obj, iteration=0,
                         history=(obj,), used_ridge=ridge)


def _inner_s(u, v, y_obs, omega):
    """Exact inner least squares over S; returns (objective, S, used_ridge).

    The observed entry (i, j) of U S V^T is <U_i kron V_j, vec(S)>, so S
    solves an m x r^2 linear least-squares problem via its normal equations.
    """
    pairs = omega.pairs
    r = u.shape[1]
    ui = u[pairs[:, 0]]                      # (m, r)
    vj = v[pairs[:, 1]]                      # (m, r)
    design = (ui[:, :, None] * vj[:, None, :]).reshape(-1, r * r)
    target = y_obs[pairs[:, 0], pairs[:, 1]]
    gram = design.T @ design
    rhs = design.T @ target
    used_ridge = False
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 1e-12 * max(eigs[-1], 1.0):
        gram = gram + INNER_RIDGE * np.eye(r * r)
        used_ridge = True
    svec = np.linalg.solve(gram, rhs)
    resid = design @ svec - target
    return 0.5 * float(resid @ resid), svec.reshape(r, r), used_ridge


def _masked_residual(u, s, v, y_obs, omega):
    pairs = omega.pairs
    vals = ((u[pairs[:, 0]] @ s) * v[pairs[:, 1]]).sum(axis=1) \
        - y_obs[pairs[:, 0], pairs[:, 1]]
    out = np.zeros((u.shape[0], v.shape[0]))
    out[pairs[:, 0], pairs[:, 1]] = vals
    return out


def _tangent(w, g):
    # project the Euclidean gradient onto the tangent space of the
    # orthonormal-frame manifold at w
    wg = w.T @ g
    return g - w @ ((wg + wg.T) * 0.5)


def _retract(w):
    q, rr = np.linalg.qr(w)
    sign = np.sign(np.where(np.diag(rr) == 0, 1.0, np.diag(rr)))
    return q * sign


def optspace_descent(state, y_obs, omega, config=None):
    """Projected gradient descent on F(U, V) from ``state``.

    Every step recomputes the inner S exactly, moves (U, V) along the
    negative tangent gradient, retracts by QR, and is accepted under an
    Armijo sufficient-decrease test, so the recorded objective history is
    nonincreasing.  Stops on gradient norm, line-search stall, or max_iters.
    """
    cfg = config or OptspaceConfig()
    y_obs = check_matrix(y_obs)
    if y_obs.shape != (omega.n1, omega.n2):
        raise ValueError(f"shape {y_obs.shape} does not match Omega")
    if omega.m == 0:
        raise ValueError("cannot descend on an empty observation set")
    u, v = state.u, state.v
    obj, s, ridge = _inner_s(u, v, y_obs, omega)
    history = [obj]
    step = 1.0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        resid = _masked_residual(u, s, v, y_obs, omega)
        grad_u = _tangent(u, resid @ (v @ s.T))
        grad_v = _tangent(v, resid.T @ (u @ s))
        gnorm2 = float((grad_u * grad_u).sum() + (grad_v * grad_v).sum())
        if math.sqrt(gnorm2) <= cfg.grad_tol:
            it -= 1
            break
        t = step
        accepted = False
        for _ in range(60):
            u_try = _retract(u - t * grad_u)
            v_try = _retract(v - t * grad_v)
            obj_try, s_try, ridge_try = _inner_s(u_try, v_try, y_obs, omega)
            if obj_try <= obj - cfg.ls_suffdec * t * gnorm2:
                accepted = True
                break
            t *= cfg.ls_shrink
        if not accepted:
            it -= 1
            break  # objective stall: no decrease at any step length
        u, v, s, obj = u_try, v_try, s_try, obj_try
        ridge = ridge or ridge_try
        history.append(obj)
        step = min(t / cfg.ls_shrink, 1e6)
    return OptspaceState(u=u, s=s, v=v, objective=obj,
                         iteration=state.iteration + it,
                         history=tuple(history),
                         used_ridge=state.used_ridge or ridge)


def estimate_rank(trimmed, p):
    """Rank guess: position of the largest consecutive singular-value gap
    ratio of (1/p) * trimmed, among values above the rank tolerance."""
    trimmed = check_matrix(trimmed)
    if not (0 < p <= 1):
        raise ValueError(f"p must be in (0, 1], got {p}")
    s = np.linalg.svd(trimmed / p, compute_uv=False)
    if s[0] <= 0:
        raise ValueError("cannot estimate rank of a zero matrix")
    k = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    hi = min(k, s.shape[0] - 1)
    if hi < 1:
        return 1
    floor = RANK_RTOL * s[0]
    ratios = s[:hi] / np.maximum(s[1:hi + 1], floor)
    return int(np.argmax(ratios)) + 1


def optspace(y_obs, omega, r=None, config=None):
    """Full pipeline: trim -> (estimate_rank) -> spectral_init -> descent.

    The descent runs on the untrimmed data; trimming only stabilizes the
    spectral initialization.  Returns a SolverReport whose estimate is
    U S V^T at the final state.
    """
    cfg = config or OptspaceConfig()
    y_obs = check_matrix(y_obs)
    trimmed, trimmed_omega = trim(y_obs, omega, cfg.trim_multiplier)
    if not np.count_nonzero(trimmed):
        # Nothing survives trimming to seed the spectral stage, so the zero
        # matrix is the only guess the pipeline can produce.  It fits the
        # observations exactly iff they were all zero to begin with.
        est = np.zeros((omega.n1, omega.n2))
        resid_vec = -y_obs[omega.pairs[:, 0], omega.pairs[:, 1]]
        resid_mat = np.zeros_like(est)
        resid_mat[omega.pairs[:, 0], omega.pairs[:, 1]] = resid_vec
        rnorm = float(np.linalg.norm(resid_vec))
        return SolverReport(
            estimate=est,
            objective=0.0,
            equality_residual=rnorm,
            dual_residual=float(operator_norm(resid_mat)),
            iterations=0,
            converged=rnorm == 0.0,
            tau_path=(),
            residual_path=(),
            flags=("zero-data",),
        )
    if r is None:
        r = estimate_rank(trimmed, omega.p)
    state = spectral_init(trimmed, trimmed_omega, r)
    state = optspace_descent(state, y_obs, omega, cfg)
    est = state.estimate()
    resid_vec = est[omega.pairs[:, 0], omega.pairs[:, 1]] \
        - y_obs[omega.pairs[:, 0], omega.pairs[:, 1]]
    resid_mat = np.zeros_like(est)
    resid_mat[omega.pairs[:, 0], omega.pairs[:, 1]] = resid_vec
    converged = state.objective <= 1e-18 or _grad_converged(state, y_obs, omega, cfg)
    flags = ("inner-ridge",) if state.used_ridge else ()
    return SolverReport(
        estimate=est,
        objective=nuclear_norm(est),
        equality_residual=float(np.linalg.norm(resid_vec)),
        dual_residual=float(operator_norm(resid_mat)),
        iterations=state.iteration,
        converged=converged,
        tau_path=(),
        residual_path=(),
        flags=flags,
    )


def _grad_converged(state, y_obs, omega, cfg):
    resid = _masked_residual(state.u, state.s, state.v, y_obs, omega)
    gu = _tangent(state.u, resid @ (state.v @ state.s.T))
    gv = _tangent(state.v, resid.T @ (state.u @ state.s))
    gnorm = math.sqrt(float((gu * gu).sum() + (gv * gv).sum()))
    return gnorm <= cfg.grad_tol
