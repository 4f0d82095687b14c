import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtrd.ring import TRFactors, random_factors, reconstruct_full
from rtrd.sketch import (
    ProjectionSpec,
    back_project,
    gaussian_matrix,
    lift,
    make_rng,
    orthonormal_basis,
    rtrals,
    rtrsvd,
    sketch,
)
from rtrd.solvers import SolverConfig, rse, trals, trsvd
from rtrd.tensor import frobenius_norm, mode_n_product


def random_orthonormal(rows, cols, rng):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def tucker_tensor(shape, ranks, seed):
    rng = np.random.default_rng(seed)
    out = rng.standard_normal(ranks)
    for n, (i, r) in enumerate(zip(shape, ranks)):
        out = mode_n_product(out, n, random_orthonormal(i, r, rng))
    return out


# -- gaussian_matrix ------------------------------------------------------------


def test_gaussian_is_deterministic():
    a = gaussian_matrix(7, 3, make_rng(42))
    b = gaussian_matrix(7, 3, make_rng(42))
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, gaussian_matrix(7, 3, make_rng(43)))


def test_gaussian_moments():
    g = gaussian_matrix(10000, 1, make_rng(0))
    assert -0.05 < g.mean() < 0.05
    assert 0.9 < g.var() < 1.1


def test_gaussian_single_draw():
    g = gaussian_matrix(1, 1, make_rng(5))
    assert g.shape == (1, 1)
    assert np.isfinite(g[0, 0])


def test_gaussian_rejects_empty():
    with pytest.raises(ValueError):
        gaussian_matrix(0, 3, make_rng(0))


# -- ProjectionSpec ---------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        ProjectionSpec((0, 2))
    spec = ProjectionSpec((3, 5))
    with pytest.raises(ValueError):
        spec.validate((4, 4))
    with pytest.raises(ValueError):
        spec.validate((4, 5, 6))
    spec.validate((3, 5))


# -- sketch -------------------------------------------------------------------------


def test_full_sketch_is_identity():
    x = np.random.default_rng(1).standard_normal((4, 5, 6))
    res = sketch(x, ProjectionSpec.full(x.shape, seed=3))
    np.testing.assert_array_equal(res.projected, x)
    assert res.skipped == (True, True, True)
    for q, i in zip(res.bases, x.shape):
        np.testing.assert_array_equal(q, np.eye(i))
    assert rse(x, lift(res.projected, res.bases)) == 0.0


def test_exact_capture_of_multilinear_rank():
    x = tucker_tensor((8, 8, 8), (2, 2, 2), seed=2)
    res = sketch(x, ProjectionSpec((2, 2, 2), seed=7))
    assert res.projected.shape == (2, 2, 2)
    assert rse(x, lift(res.projected, res.bases)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_capture_property(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(int(v) for v in rng.integers(3, 8, size=3))
    ranks = tuple(int(rng.integers(1, i + 1)) for i in shape)
    x = tucker_tensor(shape, ranks, seed)
    res = sketch(x, ProjectionSpec(ranks, seed=seed))
    assert rse(x, lift(res.projected, res.bases)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bases_orthonormal_and_projection_consistent(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(int(v) for v in rng.integers(2, 7, size=int(rng.integers(2, 5))))
    dims = tuple(int(rng.integers(1, i + 1)) for i in shape)
    x = rng.standard_normal(shape)
    res = sketch(x, ProjectionSpec(dims, seed=seed))
    direct = x
    for n, q in enumerate(res.bases):
        assert q.shape == (shape[n], dims[n])
        assert np.abs(q.T @ q - np.eye(dims[n])).max() < 1e-10
        direct = mode_n_product(direct, n, q.T)
    assert frobenius_norm(direct - res.projected) <= 1e-10 * frobenius_norm(direct)
    assert frobenius_norm(res.projected) <= frobenius_norm(x) * (1 + 1e-12)


def test_norm_strictly_contracts_below_unfolding_rank():
    x = np.random.default_rng(3).standard_normal((6, 6, 6))
    res = sketch(x, ProjectionSpec((3, 6, 6), seed=0))
    assert frobenius_norm(res.projected) < frobenius_norm(x)


def test_qr_sign_convention():
    y = np.random.default_rng(4).standard_normal((9, 4))
    q = orthonormal_basis(y)
    assert np.all(np.diag(q.T @ y) >= 0)


def test_sketch_is_deterministic():
    x = np.random.default_rng(5).standard_normal((7, 6, 5))
    spec = ProjectionSpec((3, 4, 5), seed=11)
    a, b = sketch(x, spec), sketch(x, spec)
    assert a.projected.tobytes() == b.projected.tobytes()
    assert all(p.tobytes() == q.tobytes() for p, q in zip(a.bases, b.bases))
    c = sketch(x, ProjectionSpec((3, 4, 5), seed=12))
    assert not np.array_equal(a.projected, c.projected)


def test_image_lift_error_shrinks_with_size(rgb_image):
    errs = []
    for k in (25, 200):
        res = sketch(rgb_image, ProjectionSpec((k, k, 3), seed=0))
        errs.append(rse(rgb_image, lift(res.projected, res.bases)))
    assert errs[1] <= errs[0]


# -- back_project ---------------------------------------------------------------------


def test_back_project_identity_is_bit_exact():
    z = random_factors((3, 4, 5), (2, 3, 2), seed=1)
    out = back_project(z, [np.eye(i) for i in z.shape])
    assert all(a.tobytes() == b.tobytes() for a, b in zip(out, z))


def test_back_project_rank_one_outer_product():
    rng = np.random.default_rng(6)
    small = (2, 3, 2)
    vecs = [rng.standard_normal(k) for k in small]
    z = TRFactors([v[None, :, None] for v in vecs])
    bases = [random_orthonormal(i, k, rng) for i, k in zip((5, 6, 4), small)]
    lifted = [q @ v for q, v in zip(bases, vecs)]
    expected = np.einsum("i,j,k->ijk", *lifted)
    np.testing.assert_allclose(reconstruct_full(back_project(z, bases)), expected, rtol=1e-12, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_back_project_commutes_with_lift(seed):
    rng = np.random.default_rng(seed)
    order = int(rng.integers(2, 5))
    small = tuple(int(v) for v in rng.integers(1, 4, size=order))
    big = tuple(k + int(rng.integers(0, 4)) for k in small)
    ranks = tuple(int(v) for v in rng.integers(1, 4, size=order))
    z = random_factors(small, ranks, seed=seed)
    bases = [random_orthonormal(i, k, rng) for i, k in zip(big, small)]
    got = reconstruct_full(back_project(z, bases))
    want = lift(reconstruct_full(z), bases)
    assert got.shape == big
    assert frobenius_norm(got - want) <= 1e-10 * max(frobenius_norm(want), 1e-300)


def test_back_project_rejects_mismatch():
    z = random_factors((3, 4), (2, 2))
    with pytest.raises(ValueError):
        back_project(z, [np.eye(3)])
    with pytest.raises(ValueError):
        back_project(z, [np.eye(3), np.ones((6, 5))])


# -- rTRD ------------------------------------------------------------------------------


def test_rtrals_full_sketch_matches_trals_bit_exactly():
    x = np.random.default_rng(7).standard_normal((5, 6, 7))
    cfg = SolverConfig(ranks=(2, 3, 2), max_sweeps=6, seed=3)
    a = rtrals(x, cfg, ProjectionSpec.full(x.shape, seed=9))
    b = trals(x, cfg)
    assert all(p.tobytes() == q.tobytes() for p, q in zip(a.factors, b.factors))
    assert a.rse == b.rse


def test_rtrsvd_full_sketch_matches_trsvd():
    x = np.random.default_rng(8).standard_normal((5, 6, 7))
    cfg = SolverConfig(tolerance=0.2)
    a = rtrsvd(x, cfg, ProjectionSpec.full(x.shape))
    b = trsvd(x, cfg)
    assert a.factors.ranks == b.factors.ranks
    assert abs(a.rse - b.rse) < 1e-12


def test_rtrals_recovers_exact_tensor_from_half_sketch():
    x = reconstruct_full(random_factors((30, 30, 30), (3, 4, 3), seed=1))
    cfg = SolverConfig(ranks=(3, 4, 3), tolerance=0, max_sweeps=50, seed=2, restarts=5)
    rep = rtrals(x, cfg, ProjectionSpec((15, 15, 15), seed=3))
    assert rep.factors.shape == (30, 30, 30)
    assert rep.rse < 1e-4


def test_rtrd_report_is_full_scale():
    x = np.random.default_rng(9).standard_normal((8, 9, 4))
    rep = rtrals(x, SolverConfig(ranks=(2, 2, 2), max_sweeps=5), ProjectionSpec((4, 5, 4)))
    assert rep.factors.shape == x.shape
    assert rep.rse_history == [rse(x, reconstruct_full(rep.factors))]
    assert rep.inner.factors.shape == (4, 5, 4)


def test_rtrd_warns_when_rank_exceeds_sketch():
    x = np.random.default_rng(10).standard_normal((6, 6, 6))
    with pytest.warns(UserWarning):
        rtrals(x, SolverConfig(ranks=(3, 3, 3), max_sweeps=2), ProjectionSpec((2, 6, 6)))


def test_rtrals_is_deterministic():
    x = np.random.default_rng(11).standard_normal((9, 8, 7))
    cfg = SolverConfig(ranks=(2, 2, 2), max_sweeps=5, seed=1)
    spec = ProjectionSpec((4, 4, 7), seed=5)
    a, b = rtrals(x, cfg, spec), rtrals(x, cfg, spec)
    assert a.rse_history == b.rse_history
    assert all(p.tobytes() == q.tobytes() for p, q in zip(a.factors, b.factors))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rtrd_error_obeys_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((6, 7, 5))
    spec = ProjectionSpec((3, 4, 5), seed=seed)
    cfg = SolverConfig(ranks=(2, 2, 2), max_sweeps=5, seed=seed)
    rep = rtrals(x, cfg, spec)
    sk = sketch(x, spec)
    xn = frobenius_norm(x)
    lift_err = frobenius_norm(x - lift(sk.projected, sk.bases)) / xn
    solver_err = frobenius_norm(sk.projected - reconstruct_full(rep.inner.factors)) / xn
    assert rep.rse <= lift_err + solver_err + 1e-8
