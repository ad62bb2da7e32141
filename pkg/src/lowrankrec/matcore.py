"""Dense matrix core: SVD with a fixed sign convention, nuclear norm,
singular-value soft thresholding, best rank-r approximation, low-rank test
matrix generation, and the ``lrm`` text format for matrices.

Matrices are plain float64 2-d numpy arrays throughout.
"""

from dataclasses import dataclass

import numpy as np

from .rand import spawn_rng

__all__ = [
    "RANK_RTOL",
    "SvdFactors",
    "LowRankSpec",
    "check_matrix",
    "svd",
    "nuclear_norm",
    "operator_norm",
    "soft_threshold_svals",
    "project_rank",
    "equal_spectrum",
    "geometric_spectrum",
    "gen_low_rank",
    "write_lrm",
    "read_lrm",
]

# A singular value counts toward the numerical rank iff it exceeds
# RANK_RTOL * sigma_1.
RANK_RTOL = 1e-9


def check_matrix(a):
    """Validate and return ``a`` as a finite float64 2-d array."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be positive, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``u @ diag(sigma) @ v.T`` with orthonormal columns in u, v."""

    u: np.ndarray       # (n1, k)
    sigma: np.ndarray   # (k,), nonnegative, nonincreasing
    v: np.ndarray       # (n2, k)

    def __post_init__(self):
        u, s, v = self.u, self.sigma, self.v
        if u.ndim != 2 or v.ndim != 2 or s.ndim != 1:
            raise ValueError("SvdFactors: u, v must be 2-d and sigma 1-d")
        k = s.shape[0]
        if u.shape[1] != k or v.shape[1] != k:
            raise ValueError(
                f"SvdFactors: inconsistent shapes u{u.shape} sigma{s.shape} v{v.shape}")
        if k and (np.any(s < 0) or np.any(np.diff(s) > 0)):
            raise ValueError("SvdFactors: sigma must be nonnegative and nonincreasing")
        for name, w in (("u", u), ("v", v)):
            gram_err = np.abs(w.T @ w - np.eye(k)).max() if k else 0.0
            if gram_err > 1e-10:
                raise ValueError(
                    f"SvdFactors: {name} columns not orthonormal "
                    f"(max Gram deviation {gram_err:.3g})")

    @property
    def shape(self):
        return (self.u.shape[0], self.v.shape[0])

    def rank(self, rtol=RANK_RTOL):
        """Numerical rank: number of singular values above rtol * sigma_1."""
        if self.sigma.size == 0 or self.sigma[0] <= 0:
            return 0
        return int(np.count_nonzero(self.sigma > rtol * self.sigma[0]))

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def svd(m):
    """Thin SVD of ``m`` with a deterministic sign convention.

    The first nonzero entry of each left singular vector is made nonnegative,
    with the sign change propagated to the matching right singular vector, so
    the factorization of a given matrix is reproducible.
    """
    m = check_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError(
            f"SVD failed to converge for {m.shape[0]}x{m.shape[1]} matrix") from e
    v = vt.T
    for i in range(s.shape[0]):
        col = u[:, i]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0:
            u[:, i] = -col
            v[:, i] = -v[:, i]
    return SvdFactors(u=u, sigma=s, v=v)


def _svdvals(m):
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError(
            f"SVD failed to converge for {m.shape[0]}x{m.shape[1]} matrix") from e


def nuclear_norm(m):
    """Sum of singular values."""
    return float(_svdvals(check_matrix(m)).sum())


def operator_norm(m):
    """Largest singular value."""
    return float(_svdvals(check_matrix(m))[0])


def soft_threshold_svals(m, lam):
    """Shrink every singular value by ``lam`` (clipping at zero).

    This is the proximal map of ``lam * nuclear_norm`` and is nonexpansive in
    the Frobenius norm.
    """
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    f = svd(m)
    s = np.maximum(f.sigma - lam, 0.0)
    return (f.u * s) @ f.v.T


def project_rank(m, r):
    """Best rank-r approximation in the Frobenius norm (truncated SVD)."""
    m = check_matrix(m)
    if not (1 <= r <= min(m.shape)):
        raise ValueError(f"rank must be in [1, {min(m.shape)}], got {r}")
    f = svd(m)
    return (f.u[:, :r] * f.sigma[:r]) @ f.v[:, :r].T


def equal_spectrum(r, value=1.0):
    """r copies of the same singular value."""
    if r < 1:
        raise ValueError(f"r must be positive, got {r}")
    return (float(value),) * int(r)


def geometric_spectrum(r, top, ratio):
    """Singular values top, top*ratio, ..., top*ratio**(r-1)."""
    if r < 1:
        raise ValueError(f"r must be positive, got {r}")
    if not (0 < ratio <= 1):
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    return tuple(float(top) * float(ratio) ** i for i in range(int(r)))


@dataclass(frozen=True)
class LowRankSpec:
    """Recipe for a synthetic rank-r test matrix.

    model "random-orthogonal" draws the singular-vector blocks Haar-uniformly
    (QR of a standard Gaussian block); model "spiky" puts u_i = v_i = e_i,
    the maximally coherent choice.
    """

    n1: int
    n2: int
    r: int
    spectrum: tuple
    model: str = "random-orthogonal"
    seed: int = 0

    def __post_init__(self):
        if self.r < 1 or self.r > min(self.n1, self.n2):
            raise ValueError(f"rank {self.r} out of range for {self.n1}x{self.n2}")
        spec = tuple(float(s) for s in self.spectrum)
        if len(spec) != self.r:
            raise ValueError(f"spectrum has {len(spec)} values, expected r={self.r}")
        if any(s <= 0 for s in spec):
            raise ValueError("spectrum values must be strictly positive")
        if any(a < b for a, b in zip(spec, spec[1:])):
            raise ValueError("spectrum must be nonincreasing")
        if self.model not in ("random-orthogonal", "spiky"):
            raise ValueError(f"unknown model {self.model!r}")
        object.__setattr__(self, "spectrum", spec)


def _haar_block(rng, n, r):
    # Orthonormalize a standard Gaussian block; fixing the sign of R's
    # diagonal makes Q Haar-distributed and the draw reproducible.
    g = rng.standard_normal((n, r))
    q, rr = np.linalg.qr(g)
    return q * np.sign(np.where(np.diag(rr) == 0, 1.0, np.diag(rr)))


def gen_low_rank(spec):
    """Generate (matrix, factors) for a LowRankSpec; deterministic per seed."""
    s = np.asarray(spec.spectrum, dtype=float)
    if spec.model == "spiky":
        u = np.zeros((spec.n1, spec.r))
        v = np.zeros((spec.n2, spec.r))
        for i in range(spec.r):
            u[i, i] = 1.0
            v[i, i] = 1.0
    else:
        rng = spawn_rng(spec.seed)
        u = _haar_block(rng, spec.n1, spec.r)
        v = _haar_block(rng, spec.n2, spec.r)
    m = (u * s) @ v.T
    return m, SvdFactors(u=u, sigma=s, v=v)


# --- lrm text format -------------------------------------------------------
#
# Line 1:            lrm <n1> <n2>
# Lines 2 .. n1+1:   n2 whitespace-separated entries, 17 significant digits.


def write_lrm(path, m):
    m = check_matrix(m)
    with open(path, "w") as fh:
        fh.write(f"lrm {m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(format(x, ".17g") for x in row) + "\n")


def read_lrm(path):
    with open(path) as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "lrm":
        raise ValueError(f"{path}: expected header 'lrm <n1> <n2>', got {lines[0]!r}")
    try:
        n1, n2 = int(head[1]), int(head[2])
    except ValueError:
        raise ValueError(f"{path}: bad dimensions in header {lines[0]!r}") from None
    if n1 < 1 or n2 < 1:
        raise ValueError(f"{path}: dimensions must be positive, got {n1}x{n2}")
    if len(lines) - 1 != n1:
        raise ValueError(f"{path}: expected {n1} rows, found {len(lines) - 1}")
    rows = []
    for i, ln in enumerate(lines[1:]):
        vals = ln.split()
        if len(vals) != n2:
            raise ValueError(f"{path}: row {i} has {len(vals)} entries, expected {n2}")
        try:
            rows.append([float(x) for x in vals])
        except ValueError:
            raise ValueError(f"{path}: non-numeric entry in row {i}") from None
    m = np.array(rows, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{path}: entries must be finite")
    return m
