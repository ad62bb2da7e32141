import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowrankrec.matcore import (LowRankSpec, SvdFactors, check_matrix,
                                equal_spectrum, gen_low_rank,
                                geometric_spectrum, nuclear_norm,
                                operator_norm, project_rank, read_lrm,
                                soft_threshold_svals, svd, write_lrm)

from oracles import jacobi_singular_values


def rand_matrix(seed, n1=6, n2=5, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal((n1, n2))


# ---------------------------------------------------------------- check_matrix

def test_check_matrix_rejects_nan_inf_and_wrong_ndim():
    with pytest.raises(ValueError):
        check_matrix(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        check_matrix(np.array([[np.inf, 0.0]]))
    with pytest.raises(ValueError):
        check_matrix(np.array([1.0, 2.0]))


def test_check_matrix_casts_to_float():
    m = check_matrix(np.array([[1, 2], [3, 4]]))
    assert m.dtype == np.float64


# ------------------------------------------------------------------------- svd

def test_svd_identity():
    f = svd(np.eye(2))
    assert np.allclose(f.sigma, [1.0, 1.0])
    assert np.allclose(f.reconstruct(), np.eye(2))


def test_svd_diagonal():
    f = svd(np.diag([3.0, 1.0]))
    assert np.allclose(f.sigma, [3.0, 1.0])
    # U and V equal the identity up to column signs, and the signs must agree
    assert np.allclose(np.abs(f.u), np.eye(2), atol=1e-12)
    assert np.allclose(f.u, f.v)


def test_svd_reconstruction_random():
    m = rand_matrix(41, 5, 5)
    f = svd(m)
    assert np.linalg.norm(f.reconstruct() - m) <= 1e-10 * np.linalg.norm(m)


def test_svd_sign_convention_is_deterministic():
    m = rand_matrix(7, 6, 4)
    f1, f2 = svd(m), svd(m.copy())
    assert np.array_equal(f1.u, f2.u) and np.array_equal(f1.v, f2.v)
    # first nonzero entry of every left vector is nonnegative
    for col in f1.u.T:
        nz = col[np.abs(col) > 0]
        assert nz.size == 0 or nz[0] >= 0


def test_svd_factors_validation():
    f = svd(rand_matrix(3, 4, 4))
    with pytest.raises(ValueError):
        SvdFactors(u=f.u * 2.0, sigma=f.sigma, v=f.v)  # not orthonormal
    with pytest.raises(ValueError):
        SvdFactors(u=f.u, sigma=f.sigma[::-1].copy(), v=f.v)  # increasing


def test_svd_factors_rank_tolerance():
    m = np.diag([1.0, 1e-6, 1e-12])
    f = svd(m)
    assert f.rank() == 2
    assert f.rank(rtol=1e-15) == 3


# --------------------------------------------------------------- nuclear norm

def test_nuclear_norm_rank_one():
    rng = np.random.default_rng(0)
    u = rng.standard_normal(7)
    v = rng.standard_normal(5)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    assert abs(nuclear_norm(np.outer(u, v)) - 1.0) < 1e-12


def test_nuclear_norm_identity():
    assert abs(nuclear_norm(np.eye(6)) - 6.0) < 1e-12


def test_nuclear_norm_matches_jacobi_oracle():
    m = rand_matrix(11, 6, 4)
    expected = jacobi_singular_values(m).sum()
    assert abs(nuclear_norm(m) - expected) < 1e-9


def test_operator_norm_matches_jacobi_oracle():
    m = rand_matrix(12, 5, 6)
    expected = jacobi_singular_values(m)[0]
    assert abs(operator_norm(m) - expected) < 1e-9


# ------------------------------------------------------------ soft threshold

def test_soft_threshold_zero_lambda_is_identity():
    m = rand_matrix(1)
    assert np.linalg.norm(soft_threshold_svals(m, 0.0) - m) < 1e-10


def test_soft_threshold_full_shrinkage():
    m = rand_matrix(2)
    lam = operator_norm(m)
    assert np.allclose(soft_threshold_svals(m, lam + 1e-12), 0.0)


def test_soft_threshold_diagonal_case():
    out = soft_threshold_svals(np.diag([3.0, 1.0]), 2.0)
    assert np.allclose(out, np.diag([1.0, 0.0]), atol=1e-12)


def test_soft_threshold_negative_lambda():
    with pytest.raises(ValueError):
        soft_threshold_svals(np.eye(2), -0.5)


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 1.0, 10.0]))
def test_soft_threshold_nonexpansive(seed, lam):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((5, 4))
    b = rng.standard_normal((5, 4))
    lhs = np.linalg.norm(soft_threshold_svals(a, lam) - soft_threshold_svals(b, lam))
    assert lhs <= np.linalg.norm(a - b) + 1e-10


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 10_000))
def test_nuclear_norm_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((6, 5))
    y = rng.standard_normal((6, 5))
    assert nuclear_norm(x + y) <= nuclear_norm(x) + nuclear_norm(y) + 1e-9


def test_nuclear_norm_duality():
    # <X, Y> <= ||X||_* for every Y with operator norm <= 1, with equality
    # at Y = U V^T
    m = rand_matrix(23, 7, 6)
    rng = np.random.default_rng(5)
    for _ in range(100):
        y = rng.standard_normal(m.shape)
        y /= operator_norm(y)
        assert float(np.sum(m * y)) <= nuclear_norm(m) + 1e-9
    f = svd(m)
    witness = f.u @ f.v.T
    assert abs(float(np.sum(m * witness)) - nuclear_norm(m)) < 1e-8


# ------------------------------------------------------------- project_rank

def test_project_rank_full_rank_is_identity():
    m = rand_matrix(31, 5, 7)
    assert np.linalg.norm(project_rank(m, 5) - m) < 1e-10 * np.linalg.norm(m)


def test_project_rank_diagonal():
    assert np.allclose(project_rank(np.diag([3.0, 1.0]), 1),
                       np.diag([3.0, 0.0]), atol=1e-12)


def test_project_rank_out_of_range():
    with pytest.raises(ValueError):
        project_rank(np.eye(3), 0)
    with pytest.raises(ValueError):
        project_rank(np.eye(3), 4)


def test_project_rank_beats_random_candidates():
    # best rank-2 approximation: no random rank-2 candidate does better
    m = rand_matrix(77, 8, 8)
    best = np.linalg.norm(project_rank(m, 2) - m)
    rng = np.random.default_rng(99)
    for _ in range(200):
        cand = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 8))
        # scale the candidate optimally toward m to make the probe stronger
        denom = float(np.sum(cand * cand))
        if denom > 0:
            cand = cand * (float(np.sum(cand * m)) / denom)
        assert best <= np.linalg.norm(cand - m) + 1e-12


def test_project_rank_idempotent():
    m = rand_matrix(13, 6, 6)
    once = project_rank(m, 2)
    assert np.linalg.norm(project_rank(once, 2) - once) < 1e-10


# -------------------------------------------------------------- gen_low_rank

def test_gen_low_rank_full_rank_orthonormal():
    spec = LowRankSpec(6, 6, 6, equal_spectrum(6, 2.0), "random-orthogonal", 1)
    _, f = gen_low_rank(spec)
    assert np.linalg.norm(f.u.T @ f.u - np.eye(6)) < 1e-10
    assert np.linalg.norm(f.v.T @ f.v - np.eye(6)) < 1e-10


def test_gen_low_rank_spectrum_roundtrip():
    spec = LowRankSpec(40, 40, 3, geometric_spectrum(3, 1.0, 0.5),
                       "random-orthogonal", 8)
    m, _ = gen_low_rank(spec)
    assert np.allclose(svd(m).sigma[:3], [1.0, 0.5, 0.25], atol=1e-9)
    assert np.all(svd(m).sigma[3:] < 1e-12)


def test_gen_low_rank_deterministic():
    spec = LowRankSpec(9, 7, 2, equal_spectrum(2, 1.0), "random-orthogonal", 123)
    m1, _ = gen_low_rank(spec)
    m2, _ = gen_low_rank(spec)
    assert np.array_equal(m1, m2)


def test_gen_low_rank_spiky_is_diagonal():
    spec = LowRankSpec(5, 4, 2, (3.0, 1.0), "spiky", 0)
    m, f = gen_low_rank(spec)
    expected = np.zeros((5, 4))
    expected[0, 0], expected[1, 1] = 3.0, 1.0
    assert np.allclose(m, expected)
    assert np.allclose(f.u[:, 0], np.eye(5)[:, 0])


def test_gen_low_rank_median_row_coherence_small():
    # random orthonormal factors are spread out: mu0 stays O(1)
    n, r = 200, 8
    vals = []
    for seed in range(100):
        spec = LowRankSpec(n, n, r, equal_spectrum(r, 1.0),
                           "random-orthogonal", seed)
        _, f = gen_low_rank(spec)
        mu0 = (n / r) * max(np.sum(f.u ** 2, axis=1).max(),
                            np.sum(f.v ** 2, axis=1).max())
        vals.append(mu0)
    assert np.median(vals) <= 5.0


def test_low_rank_spec_validation():
    with pytest.raises(ValueError):
        LowRankSpec(4, 4, 5, equal_spectrum(5, 1.0), "random-orthogonal", 0)
    with pytest.raises(ValueError):
        LowRankSpec(4, 4, 2, (1.0, 2.0), "random-orthogonal", 0)  # increasing
    with pytest.raises(ValueError):
        LowRankSpec(4, 4, 2, (1.0, 0.0), "random-orthogonal", 0)  # not positive
    with pytest.raises(ValueError):
        LowRankSpec(4, 4, 2, (1.0, 0.5), "mystery", 0)


def test_spectrum_helpers():
    assert equal_spectrum(3, 2.0) == (2.0, 2.0, 2.0)
    assert geometric_spectrum(3, 4.0, 0.5) == (4.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        equal_spectrum(0, 1.0)
    with pytest.raises(ValueError):
        geometric_spectrum(2, 1.0, 1.5)  # would increase


# ------------------------------------------------------------------ lrm files

def test_lrm_roundtrip_exact(tmp_path):
    m = rand_matrix(3, 4, 3, scale=1e3)
    path = tmp_path / "m.lrm"
    write_lrm(path, m)
    assert np.array_equal(read_lrm(path), m)
    assert (path.read_text().splitlines()[0]) == "lrm 4 3"


def test_lrm_reader_rejects_garbage(tmp_path):
    path = tmp_path / "bad.lrm"
    path.write_text("lrm 2 2\n1 2\n3\n")
    with pytest.raises(ValueError):
        read_lrm(path)
    path.write_text("wat 2 2\n1 2\n3 4\n")
    with pytest.raises(ValueError):
        read_lrm(path)
    path.write_text("lrm 2 2\n1 2\n3 4\n5 6\n")
    with pytest.raises(ValueError):
        read_lrm(path)
