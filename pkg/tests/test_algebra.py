import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zerotwo import algebra as alg
from zerotwo.algebra import AlgebraShape, HermitianElement, extreme_point, spectral, sup_norm, trace, trace_norm
from zerotwo.errors import InvalidInput


def diag(values, w=1.0):
    return HermitianElement(AlgebraShape([len(values)], [w]), [np.diag(values)])


shapes = st.lists(
    st.tuples(st.integers(1, 4), st.floats(0.1, 5.0)), min_size=1, max_size=3
).map(lambda bs: AlgebraShape([b[0] for b in bs], [b[1] for b in bs]))
seeds = st.integers(0, 2**32 - 1)


def rand(shape, seed, positive=False):
    rng = np.random.default_rng(seed)
    return (HermitianElement.random_positive if positive else HermitianElement.random)(shape, rng)


# --- shapes -----------------------------------------------------------------


def test_shape_validation():
    with pytest.raises(InvalidInput):
        AlgebraShape([2, 0])
    with pytest.raises(InvalidInput):
        AlgebraShape([2], [0.0])
    with pytest.raises(InvalidInput):
        AlgebraShape([2, 2], [1.0])
    with pytest.raises(InvalidInput):
        AlgebraShape([])
    s = AlgebraShape([2, 3], [1.0, 0.5])
    assert s.dim == 13 and s.unit_mass == 3.5 and s.offsets() == [0, 4]
    assert AlgebraShape.diagonal(3).is_diagonal


def test_mismatched_shapes_do_not_combine():
    a = HermitianElement.unit(AlgebraShape([2]))
    b = HermitianElement.unit(AlgebraShape([2], [2.0]))
    with pytest.raises(InvalidInput):
        a + b


def test_construction_symmetrizes_and_freezes():
    x = HermitianElement(AlgebraShape([2]), [np.array([[1, 2], [0, 1]])])
    assert np.array_equal(x.blocks[0], x.blocks[0].conj().T)
    with pytest.raises(AttributeError):
        x.shape = None
    with pytest.raises(ValueError):
        x.blocks[0][0, 0] = 5


def test_basis_is_tau_orthonormal():
    shape = AlgebraShape([1, 3], [2.0, 0.7])
    basis = [HermitianElement(shape, [m if k == j else np.zeros((n, n)) for j, n in enumerate(shape.dims)])
             for k, m in alg.hermitian_basis(shape)]
    gram = np.array([[alg.pairing(a, b) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(shape.dim), atol=1e-12)


# --- operation examples -----------------------------------------------------


def test_trace_examples():
    assert trace(diag([2, -1])) == 1
    assert trace(HermitianElement.unit(AlgebraShape([3], [2.0]))) == 6


def test_spectral_examples():
    dec = spectral(HermitianElement.unit(AlgebraShape([3])))
    assert np.allclose(dec.eigenvalues[0], 1)
    dec = spectral(diag([1, -1]))
    assert sorted(dec.eigenvalues[0]) == [-1, 1]
    projs = dec.projections(0)
    for p in projs:
        assert np.allclose(np.abs(p), np.diag(np.diag(np.abs(p))), atol=1e-12)
    assert np.allclose(sum(projs), np.eye(2), atol=1e-12)


def test_abs_examples():
    assert alg.abs(diag([3, -4])).allclose(diag([3, 4]))
    z = HermitianElement.zero(AlgebraShape([2, 1]))
    assert alg.abs(z).allclose(z)


def test_norm_examples():
    assert trace_norm(diag([1, -1])) == 2
    assert sup_norm(HermitianElement.unit(AlgebraShape([2, 3]))) == 1
    assert sup_norm(diag([0.3, -0.9])) == pytest.approx(0.9)
    shape = AlgebraShape([2, 3], [1.0, 2.5])
    psi = np.array([1, 1j, 0]) / np.sqrt(2)
    rank_one = HermitianElement(shape, [np.zeros((2, 2)), np.outer(psi, psi.conj())])
    assert trace_norm(rank_one) == pytest.approx(2.5, abs=1e-12)


def test_extreme_point_examples():
    assert extreme_point(AlgebraShape([2]), 0, [1, 0]).allclose(diag([1, 0]))
    assert extreme_point(AlgebraShape([2], [2.0]), 0, [1, 0]).allclose(diag([0.5, 0], 2.0))
    rng = np.random.default_rng(0)
    shape = AlgebraShape([3, 2], [0.3, 4.0])
    for k, n in enumerate(shape.dims):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert trace_norm(extreme_point(shape, k, v / np.linalg.norm(v))) == pytest.approx(1, abs=1e-12)
    with pytest.raises(InvalidInput):
        extreme_point(AlgebraShape([2]), 0, [1, 1])
    with pytest.raises(InvalidInput):
        extreme_point(AlgebraShape([2]), 1, [1, 0])


# --- derived checks against an independent eigensolver -----------------------


@settings(max_examples=60, deadline=None)
@given(shapes, seeds)
def test_spectral_quantities_match_scipy(shape, seed):
    from scipy.linalg import eigvalsh

    x = rand(shape, seed)
    ev = [eigvalsh(b) for b in x.blocks]
    assert trace(x) == pytest.approx(sum(w * e.sum() for w, e in zip(shape.weights, ev)), abs=1e-9)
    assert sup_norm(x) == pytest.approx(max(np.abs(e).max() for e in ev), abs=1e-10)
    got = alg.abs(x).eigenvalues()
    for g, e in zip(got, ev):
        assert np.allclose(np.sort(g), np.sort(np.abs(e)), atol=1e-10)
    assert trace_norm(x) == pytest.approx(trace(alg.abs(x)), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(shapes, seeds)
def test_spectral_reconstruction(shape, seed):
    x = rand(shape, seed)
    dec = spectral(x)
    assert dec.reconstruct().max_abs_diff(x) <= 1e-10
    for k, n in enumerate(shape.dims):
        projs = dec.projections(k)
        assert np.allclose(sum(projs), np.eye(n), atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(shapes, seeds)
def test_coordinates_round_trip(shape, seed):
    x = rand(shape, seed)
    assert HermitianElement.from_coords(shape, x.coords()).max_abs_diff(x) <= 1e-12
    y = rand(shape, seed + 1)
    assert np.dot(x.coords(), y.coords()) == pytest.approx(alg.pairing(x, y), abs=1e-9)
    many = np.stack([x.coords(), y.coords()])
    assert np.allclose(alg.batch_trace_norm(shape, many), [trace_norm(x), trace_norm(y)], atol=1e-10)


# --- invariants -------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(shapes, seeds, st.floats(-5, 5))
def test_norm_axioms(shape, seed, alpha):
    x, y = rand(shape, seed), rand(shape, seed + 1)
    assert trace_norm(alpha * x) == pytest.approx(abs(alpha) * trace_norm(x), abs=1e-9, rel=1e-9)
    assert trace_norm(x + y) <= trace_norm(x) + trace_norm(y) + 1e-9
    assert trace_norm(HermitianElement.zero(shape)) == 0
    assert trace_norm(x) > 0


@settings(max_examples=80, deadline=None)
@given(shapes, seeds)
def test_order_compatibility_and_abs_idempotence(shape, seed):
    x = rand(shape, seed, positive=True)
    assert x.is_positive()
    assert trace_norm(x) == pytest.approx(trace(x), rel=1e-12)
    assert alg.abs(x).max_abs_diff(x) <= 1e-10 * max(1.0, sup_norm(x))
    a = alg.abs(rand(shape, seed))
    assert a.is_positive()
