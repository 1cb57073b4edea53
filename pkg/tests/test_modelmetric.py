from fractions import Fraction

import numpy as np
import pytest

from cyclichiggs import modelmetric as mm
from cyclichiggs.bundle import (
    NEGATIVE_FLAG,
    POSITIVE_FLAG,
    TRIVIAL_FLAG,
    CoeffSpec,
    CyclicHiggsData,
    PunctureData,
)


def cusp_data(zeta=Fraction(3, 10), flag=POSITIVE_FLAG, b=CoeffSpec(1.0, 1), c=CoeffSpec(0.5, 0)):
    return CyclicHiggsData(
        genus=1,
        deg_L1=0,
        punctures=(PunctureData(1, zeta, flag),),
        beta_coeff=b,
        gamma_coeff=c,
    )


def test_residue_matrix_entries():
    data = cusp_data(b=CoeffSpec(2.0, 0), c=CoeffSpec(0.5, 0))
    m = mm.residue_matrix_cyclic(data, 1)
    assert m[1, 0] == 1.0 and m[4, 3] == 1.0
    assert m[2, 1] == 2.0 and m[3, 2] == 2.0
    assert abs(m[1, 4]) == 0.5 and abs(m[0, 3]) == 0.5
    # entries with positive vanishing order at the puncture drop out
    data = cusp_data(b=CoeffSpec(2.0, 1), c=CoeffSpec(0.5, 1))
    m = mm.residue_matrix_cyclic(data, 1)
    assert m[2, 1] == 0.0 and m[1, 4] == 0.0


def test_graded_residue_blocks():
    data = cusp_data(Fraction(3, 10), POSITIVE_FLAG)
    gr = mm.graded_residue_cyclic(data, 1)
    assert gr.weights == (-0.3, 0.0, 0.3)
    assert gr.block_sizes() == (2, 1, 2)
    shift = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert np.array_equal(gr.blocks[0.3], shift)
    assert np.array_equal(gr.blocks[-0.3], shift)
    assert gr.block_labels[0.3] == ("L+1", "L+2")
    assert gr.block_labels[-0.3] == ("L-2", "L-1")
    # grading kills everything that moves between weight spaces: the graded
    # blocks never see beta or gamma
    data = cusp_data(Fraction(3, 10), POSITIVE_FLAG, b=CoeffSpec(5.0, 0))
    gr2 = mm.graded_residue_cyclic(data, 1)
    assert np.array_equal(gr2.blocks[0.3], shift)


def test_graded_residue_rejects_zero_weight():
    data = CyclicHiggsData(
        genus=1, deg_L1=0, punctures=(PunctureData(1, 0, TRIVIAL_FLAG),)
    )
    with pytest.raises(mm.UnsupportedWeightError):
        mm.graded_residue_cyclic(data, 1)


def test_weight_filtration_zero_matrix():
    wf = mm.weight_filtration(np.zeros((3, 3)))
    assert set(wf.levels) == {0}
    assert wf.levels[0].shape == (3, 3)
    assert np.abs(wf.H).max() == 0.0


def test_weight_filtration_jordan_2x2():
    y = np.array([[0.0, 0.0], [1.0, 0.0]])
    wf = mm.weight_filtration(y)
    assert wf.r_min == -1 and wf.r_max == 1
    # W_-1 = W_0 = span(e2), W_1 = everything
    for r in (-1, 0):
        w = wf.subspace(r)
        assert w.shape[1] == 1
        assert abs(abs(w[1, 0]) - 1.0) < 1e-12
    assert wf.subspace(1).shape[1] == 2
    # H acts as +1 on Gr_1 and -1 on Gr_-1
    assert np.allclose(sorted(np.linalg.eigvals(wf.H).real), [-1.0, 1.0])
    assert np.abs(wf.H @ y - y @ wf.H + 2.0 * y).max() < 1e-12


def check_filtration_properties(y, wf):
    n = y.shape[0]
    for r in range(wf.r_min, wf.r_max + 1):
        w_r = wf.subspace(r)
        w_prev = wf.subspace(r - 2)
        img = y @ w_r
        # Y W_r inside W_{r-2}: residual of projection must vanish
        if w_prev.shape[1] == 0:
            assert np.abs(img).max() < 1e-9
        else:
            resid = img - w_prev @ (w_prev.conj().T @ img)
            assert np.abs(resid).max() < 1e-9
    # Y^r induces an isomorphism Gr_r -> Gr_-r (dimension count via ranks)
    for r in range(1, wf.r_max + 1):
        dim_gr = wf.subspace(r).shape[1] - wf.subspace(r - 1).shape[1]
        dim_gr_neg = wf.subspace(-r).shape[1] - wf.subspace(-r - 1).shape[1]
        assert dim_gr == dim_gr_neg


def test_weight_filtration_random_nilpotents():
    rng = np.random.default_rng(9)
    shift5 = np.zeros((5, 5))
    for i in range(4):
        shift5[i + 1, i] = 1.0
    samples = [
        shift5,
        np.diag([1.0, 1.0, 0.0, 0.0], -1) * 0,  # zero matrix, size 5 handled above
    ]
    samples[1] = np.zeros((4, 4))
    samples[1][1, 0] = 1.0  # one 2-chain plus two fixed vectors
    for y in samples:
        wf = mm.weight_filtration(y)
        check_filtration_properties(y, wf)
    for _ in range(25):
        # orthogonal conjugates of nilpotent upper-triangular seeds (orthogonal
        # change of basis keeps the chain computation well conditioned)
        n = int(rng.integers(2, 6))
        seed = np.triu(rng.normal(size=(n, n)), 1)
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        y = q.T @ seed @ q
        wf = mm.weight_filtration(y)
        check_filtration_properties(y, wf)
        assert np.abs(wf.H @ y - y @ wf.H + 2.0 * y).max() < 1e-8


def test_weight_filtration_rejects_non_nilpotent():
    with pytest.raises(Exception):
        mm.weight_filtration(np.eye(3))


def test_weight_filtration_cyclic_block_matches_paper_chain():
    data = cusp_data()
    gr = mm.graded_residue_cyclic(data, 1)
    wf = mm.weight_filtration(gr.blocks[0.3])
    w0 = wf.subspace(0)
    # W_-1 Gr_delta = W_0 Gr_delta = the L_2 line (second basis vector)
    assert w0.shape[1] == 1 and abs(abs(w0[1, 0]) - 1.0) < 1e-12
    assert np.allclose(wf.subspace(-1), w0)


def test_sl2_standard_triple():
    h = np.diag([1.0, -1.0])
    y = np.array([[0.0, 0.0], [1.0, 0.0]])
    triple = mm.sl2_complete(h, y)
    assert np.allclose(triple.X, [[0.0, 1.0], [0.0, 0.0]], atol=1e-12)
    assert max(triple.bracket_defects()) < 1e-12


def test_sl2_zero_case():
    triple = mm.sl2_complete(np.zeros((3, 3)), np.zeros((3, 3)))
    assert np.abs(triple.X).max() < 1e-12


def test_sl2_from_filtration_chains():
    rng = np.random.default_rng(3)
    for _ in range(10):
        # scale-bounded superdiagonal seeds keep the chain basis well
        # conditioned; chain structure still varies with the zero pattern
        n = int(rng.integers(2, 6))
        seed = np.zeros((n, n))
        for i in range(n - 1):
            if rng.uniform() < 0.8:
                seed[i, i + 1] = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        y = q.T @ seed @ q
        wf = mm.weight_filtration(y)
        triple = mm.sl2_complete(wf.H, y)
        assert max(triple.bracket_defects()) < 1e-10


def test_sl2_rejects_inconsistent():
    with pytest.raises(Exception):
        mm.sl2_complete(np.eye(2), np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_model_metric_diagonal():
    for flag, sign in ((POSITIVE_FLAG, 1.0), (NEGATIVE_FLAG, -1.0)):
        data = cusp_data(Fraction(3, 10), flag)
        local = mm.model_metric_local(data, 1)
        d = sign * 0.3
        assert local.exponents == {
            -2: (-d, 1),
            -1: (-d, -1),
            0: (0.0, 0),
            1: (d, 1),
            2: (d, -1),
        }
        r = np.exp(-2.0)
        diag = local.diagonal(r)
        expected = np.array(
            [
                r ** (2 * d) * 2.0,
                r ** (2 * d) / 2.0,
                1.0,
                r ** (-2 * d) * 2.0,
                r ** (-2 * d) / 2.0,
            ]
        )
        assert np.abs(diag - expected).max() < 1e-12
        assert np.all(diag > 0)
        # reciprocal coefficients on pairing-dual summands
        assert abs(diag[0] * diag[4] - 1.0) < 1e-12
        assert abs(diag[1] * diag[3] - 1.0) < 1e-12
        # ||w|| / ||v|| = 1 / |ln r| for the L2 / L1 pair
        ratio = np.sqrt(diag[4] / diag[3])
        assert abs(ratio - 0.5) < 1e-12


def test_model_metric_rejects_zero_weight():
    data = CyclicHiggsData(
        genus=1, deg_L1=0, punctures=(PunctureData(1, 0, TRIVIAL_FLAG),)
    )
    with pytest.raises(mm.UnsupportedWeightError):
        mm.model_metric_local(data, 1)
