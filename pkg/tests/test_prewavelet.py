import numpy as np
import pytest
import scipy.linalg

from oracles import hb_to_nodal, nodal_fe_matrices, tensor_pw_gram
from sparsehb.assembly import GalerkinSystem
from sparsehb.basis import SparseGridSpace, block_size
from sparsehb.errors import CapExceeded
from sparsehb.index_sets import (gap_example, make_energy_optimized, make_full_grid,
                                 make_isotropic_full_grid, make_standard_sparse)
from sparsehb.prewavelet import (PrewaveletBasis, estimate_pw_constants, pw_constants_for,
                                 pw_decompose, pw_norm_sq)

SETS = [
    make_standard_sparse(4, 2),
    make_isotropic_full_grid(3, 2),
    make_energy_optimized(5, 2, -1),
    gap_example(2, 2),
    make_standard_sparse(3, 3),
]


@pytest.fixture(scope="module")
def bases():
    out = {}
    for lam in SETS:
        sys = GalerkinSystem.build(SparseGridSpace(lam))
        out[lam] = (sys, PrewaveletBasis(sys))
    return out


def test_lowest_block_component():
    sys = GalerkinSystem.build(SparseGridSpace(make_full_grid((1, 1))))
    dec = pw_decompose(sys, [2.0])
    assert list(dec) == [(1, 1)]
    np.testing.assert_allclose(dec[(1, 1)], [2.0])
    assert pw_norm_sq(dec, sys.mass) == pytest.approx(4 * 4 / 9)
    assert pw_norm_sq(pw_decompose(sys, [0.0]), sys.mass) == 0.0


def test_single_block_constants():
    # h1 / pw = (8/3) / (4 * 1/9)
    c = pw_constants_for(make_full_grid((1, 1)))
    assert c.c_pw_est == pytest.approx(6.0, rel=1e-12)
    assert c.C_pw_est == pytest.approx(6.0, rel=1e-12)


@pytest.mark.parametrize("idx", range(len(SETS)))
def test_decomposition_invariants(idx, bases):
    sys, basis = bases[SETS[idx]]
    M = sys.mass.toarray()
    for beta in sys.space.blocks:
        assert basis.dimension(beta) == block_size(beta)
    rng = np.random.default_rng(idx)
    for _ in range(3):
        v = rng.standard_normal(sys.n)
        dec = basis.decompose(v)
        np.testing.assert_allclose(sum(dec.values()), v, atol=1e-10)
        l2 = v @ M @ v
        assert sum(w @ M @ w for w in dec.values()) == pytest.approx(l2, rel=1e-10)
        blocks = list(dec)
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                wa, wb = dec[blocks[a]], dec[blocks[b]]
                na, nb = np.sqrt(wa @ M @ wa), np.sqrt(wb @ M @ wb)
                assert abs(wa @ M @ wb) <= 1e-10 * max(na * nb, 1e-300)


@pytest.mark.parametrize("idx", range(len(SETS)))
def test_component_in_single_subspace(idx, bases):
    sys, basis = bases[SETS[idx]]
    beta = sys.space.blocks[-1]
    w = basis.bases[beta] @ np.arange(1.0, basis.dimension(beta) + 1)
    dec = basis.decompose(w)
    for b, comp in dec.items():
        if b == beta:
            np.testing.assert_allclose(comp, w, atol=1e-10)
        else:
            assert np.max(np.abs(comp)) <= 1e-10


@pytest.mark.parametrize("idx", range(len(SETS)))
def test_constants_bracket_random_vectors(idx, bases):
    sys, basis = bases[SETS[idx]]
    consts = estimate_pw_constants(sys)
    assert 0 < consts.c_pw_est <= consts.C_pw_est
    rng = np.random.default_rng(10 + idx)
    for _ in range(5):
        v = rng.standard_normal(sys.n)
        pw = pw_norm_sq(basis.decompose(v), sys.mass)
        h1 = v @ (sys.stiffness @ v)
        assert consts.c_pw_est * pw * (1 - 1e-10) <= h1 <= consts.C_pw_est * pw * (1 + 1e-10)


@pytest.mark.parametrize("lam", [make_standard_sparse(4, 2), make_isotropic_full_grid(3, 2),
                                 make_energy_optimized(5, 2, -1), make_standard_sparse(3, 3)],
                         ids=["S4", "V3", "E5", "S3d3"])
def test_pw_gram_matches_tensor_projection_oracle(lam):
    # independent construction: L2 projections onto full grids inside the finest nodal space
    sys = GalerkinSystem.build(SparseGridSpace(lam))
    space = sys.space
    fine = [max(b[j] for b in lam) for j in range(lam.d)]
    assert space.n <= 500 and np.prod([2 ** L - 1 for L in fine]) <= 1000
    T = hb_to_nodal(space.levels, space.offsets, fine)
    P_oracle = T.T @ tensor_pw_gram(list(lam), fine) @ T
    P = PrewaveletBasis(sys).pw_gram()
    np.testing.assert_allclose(P, P_oracle, atol=1e-10 * np.abs(P).max())
    # pencil in nodal coordinates of the fine grid restricted to the space
    _, K = nodal_fe_matrices(fine)
    ev = scipy.linalg.eigh(T.T @ K @ T, P_oracle, eigvals_only=True)
    consts = estimate_pw_constants(sys)
    assert ev[0] == pytest.approx(consts.c_pw_est, rel=1e-8)
    assert ev[-1] == pytest.approx(consts.C_pw_est, rel=1e-8)


def test_cap_and_missing_mass():
    sys = GalerkinSystem.build(SparseGridSpace(make_standard_sparse(4, 2)), with_mass=False)
    with pytest.raises(ValueError):
        PrewaveletBasis(sys)
    sys = GalerkinSystem.build(SparseGridSpace(make_standard_sparse(4, 2)))
    with pytest.raises(CapExceeded):
        PrewaveletBasis(sys, cap=10)


def test_constants_bounded_on_full_grids():
    cs = [pw_constants_for(make_isotropic_full_grid(k, 2)) for k in range(2, 5)]
    lo = [c.c_pw_est for c in cs]
    hi = [c.C_pw_est for c in cs]
    assert max(lo) / min(lo) <= 2 and max(hi) / min(hi) <= 2
