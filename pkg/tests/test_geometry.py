import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regschrod.geometry import (
    ManifoldKind,
    ManifoldSpec,
    SpinStructure,
    all_spin_structures,
    character,
    enumerate_shifted,
    identify,
    lattice_from_basis,
    reduce,
    sgn_moebius,
)


def random_basis(rng, k, n):
    while True:
        b = rng.normal(size=(k, n))
        if np.linalg.cond(b) < 10 and np.min(np.linalg.norm(b, axis=1)) > 0.3:
            return b


def test_lattice_basics():
    lat = lattice_from_basis(np.eye(2))
    assert np.array_equal(lat.gram, np.eye(2)) and np.array_equal(lat.dual, np.eye(2))
    lat = lattice_from_basis(np.diag([1.0, 2.0]))
    assert np.allclose(lat.dual, np.diag([1.0, 0.5]))
    with pytest.raises(ValueError):
        lattice_from_basis([[1.0, 2.0], [1.0, 2.0]])
    with pytest.raises(ValueError):
        lattice_from_basis([[1.0, 0.0], [0.0, 1e-14]])
    assert lattice_from_basis(np.eye(2)) == lattice_from_basis(np.eye(2))
    assert len({lattice_from_basis(np.eye(2)), lattice_from_basis(np.eye(2))}) == 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(1, 3), extra=st.integers(0, 1))
def test_dual_and_gram(seed, k, extra):
    rng = np.random.default_rng(seed)
    lat = lattice_from_basis(random_basis(rng, k, k + extra))
    assert np.allclose(lat.dual @ lat.basis.T, np.eye(k), atol=1e-12)
    assert np.allclose(lat.gram, lat.gram.T)
    assert np.all(np.linalg.eigvalsh(lat.gram) > 0)


def test_enumerate_examples():
    lat = lattice_from_basis([[1.0]])
    m, v = enumerate_shifted(lat, [0.3], 1.5)
    assert sorted(v[:, 0].tolist()) == [-1.0, 0.0, 1.0]
    assert v[0, 0] == 0.0  # nearest first
    m, v = enumerate_shifted(lat, [0.0], 0.0)
    assert m.tolist() == [[0]]


def brute(lat, center, R):
    # generous box from |m_i| <= (R + |c|) |w_i|
    box = int(np.ceil((R + np.linalg.norm(center)) * np.max(np.linalg.norm(lat.dual, axis=1)))) + 2
    out = set()
    for m in itertools.product(range(-box, box + 1), repeat=lat.rank):
        if np.linalg.norm(center + np.array(m) @ lat.basis) <= R:
            out.add(m)
    return out


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(1, 3), extra=st.integers(0, 1), R=st.floats(0, 3))
def test_enumerate_matches_brute_force(seed, k, extra, R):
    rng = np.random.default_rng(seed)
    lat = lattice_from_basis(random_basis(rng, k, k + extra))
    c = rng.uniform(-2, 2, size=k + extra)
    m, v = enumerate_shifted(lat, c, R)
    assert set(map(tuple, m.tolist())) == brute(lat, c, R)
    assert np.allclose(v, m @ lat.basis)
    d = np.linalg.norm(c + v, axis=1)
    assert np.all(np.diff(d) >= 0)
    m2, _ = enumerate_shifted(lat, c, R + 0.5)
    assert set(map(tuple, m.tolist())) <= set(map(tuple, m2.tolist()))


def test_enumerate_ties_are_lexicographic():
    m, _ = enumerate_shifted(lattice_from_basis(np.eye(2)), [0.0, 0.0], 1.0)
    assert m.tolist() == [[0, 0], [-1, 0], [0, -1], [0, 1], [1, 0]]


def test_reduce():
    lat = lattice_from_basis([[1.0]])
    rep, m = reduce([2.7], lat)
    assert rep[0] == pytest.approx(0.7) and m.tolist() == [2]
    rep, m = reduce([0.25], lat)
    assert rep[0] == 0.25 and m.tolist() == [0]
    with pytest.raises(ValueError):
        reduce([0.0, 0.0], lattice_from_basis([[1.0, 0.0]]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 3))
def test_reduce_reconstructs(seed, n):
    rng = np.random.default_rng(seed)
    lat = lattice_from_basis(random_basis(rng, n, n))
    x = rng.uniform(-20, 20, size=n)
    rep, m = reduce(x, lat)
    c = lat.coordinates(rep)
    assert np.all((c >= 0) & (c < 1))
    assert np.allclose(x, rep + m @ lat.basis, atol=1e-9)
    coeff = lat.coordinates(x - rep)
    assert np.allclose(coeff, np.round(coeff), atol=1e-9)
    rep2, m2 = reduce(rep, lat)
    assert np.allclose(rep2, rep, atol=1e-12) and not np.any(m2)


def test_character_examples():
    assert character(SpinStructure({1}), (3, 2)) == -1
    assert character(SpinStructure(), (5, 7)) == 1
    assert character(SpinStructure({1, 2}), (1, 1)) == 1
    with pytest.raises(ValueError):
        character(SpinStructure({3}), (1, 1))
    with pytest.raises(ValueError):
        SpinStructure({0})


@settings(max_examples=50, deadline=None)
@given(k=st.integers(1, 4), data=st.data())
def test_character_is_homomorphism(k, data):
    ints = st.lists(st.integers(-50, 50), min_size=k, max_size=k)
    m1, m2 = np.array(data.draw(ints)), np.array(data.draw(ints))
    for spin in all_spin_structures(k):
        assert character(spin, m1 + m2) == character(spin, m1) * character(spin, m2)


def test_there_are_two_to_the_k_characters():
    for k in range(1, 5):
        probes = np.eye(k, dtype=int)
        signatures = {tuple(character(s, probes)) for s in all_spin_structures(k)}
        assert len(signatures) == 2 ** k


def test_sgn_moebius_examples():
    assert sgn_moebius((0, 0)) == 1
    assert sgn_moebius((1, 0)) == -1
    assert sgn_moebius((2, 4)) == 1


@given(a=st.integers(-40, 40), b=st.integers(-40, 40))
def test_sgn_moebius_rank_one_homomorphism(a, b):
    assert sgn_moebius((a + b,)) == sgn_moebius((a,)) * sgn_moebius((b,))


def test_sgn_moebius_not_multiplicative_beyond_rank_one():
    # the index-2^k sublattice 2 Omega_k does not give a character when k >= 2
    assert sgn_moebius((1, 1)) != sgn_moebius((1, 0)) * sgn_moebius((0, 1))


def test_manifold_validation():
    with pytest.raises(ValueError):
        ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        ManifoldSpec(ManifoldKind.CYLINDER, lattice_from_basis(np.eye(2)))
    with pytest.raises(ValueError):
        ManifoldSpec(ManifoldKind.MOEBIUS, lattice_from_basis([[1.0, 0.5]]))
    with pytest.raises(ValueError, match="rotation"):
        ManifoldSpec(ManifoldKind.KLEIN, lattice_from_basis([[1.0, 0.0], [0.0, 2.0]]))
    with pytest.raises(ValueError):
        ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis(np.eye(2)), SpinStructure({3}))
    spec = ManifoldSpec("klein", lattice_from_basis([[1.3, 0.0], [0.0, 1.0]]))
    assert spec.kind is ManifoldKind.KLEIN


def test_identify_moebius():
    spec = ManifoldSpec(ManifoldKind.MOEBIUS, lattice_from_basis([[1.0, 0.0]]))
    assert np.allclose(identify(spec, [1.25, 0.4], [1]), [0.25, -0.4])
    assert np.allclose(identify(spec, [2.25, 0.4], [2]), [0.25, 0.4])


def test_identify_klein():
    spec = ManifoldSpec(ManifoldKind.KLEIN, lattice_from_basis([[1.5, 0.0], [0.0, 1.0]]))
    assert np.allclose(identify(spec, [1.6, 2.3], [1, 2]), [0.1, 0.3])
    assert np.allclose(identify(spec, [1.6, 1.3], [1, 1]), [0.1, -0.3])
    with pytest.raises(ValueError):
        identify(ManifoldSpec(ManifoldKind.TORUS, lattice_from_basis(np.eye(2))), [0, 0], [0, 0])
