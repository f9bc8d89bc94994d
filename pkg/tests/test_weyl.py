import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from balpha.errors import ChamberViolation, NonUnitaryInput
from balpha.gates import CNOT, CZ, I4, ISWAP, SWAP, haar_random, process_fidelity, random_local
from balpha.weyl import (
    POSITIVE_VERTICES,
    STANDARD_VERTICES,
    CartanTriple,
    canonical_gate,
    canonicalize_coords,
    cartan_coordinates,
    entangling_power,
    entangling_power_mc,
    in_positive_chamber,
    in_standard_chamber,
    invariant_distance,
    invariants_from_coords,
    invariants_from_matrix,
    linear_entropy,
    locally_equivalent,
    require_chamber,
    sample_chamber,
    to_positive_chamber,
    to_standard_chamber,
    weyl_coordinates,
)

PI = math.pi
seeds = st.integers(min_value=0, max_value=2**31 - 1)
angles = st.floats(min_value=-7.0, max_value=7.0, allow_nan=False)


@given(st.tuples(angles, angles, angles))
def test_canonical_gate_matches_dense_exponential(c):
    assert np.allclose(canonical_gate(c), oracles.ud_expm(c), atol=1e-12)


@pytest.mark.parametrize(
    "gate, coords",
    [
        (I4, (0, 0, 0)),
        (CNOT, (PI / 2, 0, 0)),
        (CZ, (PI / 2, 0, 0)),
        (ISWAP, (PI / 2, PI / 2, 0)),
        (SWAP, (PI / 2, PI / 2, PI / 2)),
    ],
)
def test_named_coordinates(gate, coords):
    assert np.allclose(weyl_coordinates(gate).as_array(), coords, atol=1e-10)


@given(seeds)
def test_kak_reconstructs_haar_gates(seed):
    u = haar_random("u4", seed)
    kak = cartan_coordinates(u)
    assert np.allclose(kak.reconstruct(), u, atol=1e-10)
    assert in_standard_chamber(kak.coords)
    # coordinates agree with the spectral oracle
    assert oracles.spectral_distance(u, canonical_gate(kak.coords)) < 1e-8


@given(seeds)
def test_coordinates_are_local_invariant(seed):
    rng = np.random.default_rng(seed)
    u = haar_random("su4", rng)
    v = random_local(rng) @ u @ random_local(rng)
    assert np.allclose(weyl_coordinates(u).as_array(), weyl_coordinates(v).as_array(), atol=1e-8)


@given(st.integers(0, 10**6))
def test_chamber_interior_round_trip(seed):
    rng = np.random.default_rng(seed)
    c = sample_chamber(1, rng)[0]
    u = random_local(rng) @ canonical_gate(c) @ random_local(rng)
    got = weyl_coordinates(u).as_array()
    if abs(c[0] - PI / 2) < 1e-6:  # c3 sign is ambiguous on the c1 = pi/2 face
        c = np.array([c[0], c[1], abs(c[2])])
    assert np.allclose(got, c, atol=1e-7)


def test_degenerate_inputs_reconstruct():
    for g in (I4, SWAP, CNOT, canonical_gate((PI / 4, PI / 4, PI / 4)), canonical_gate((0.3, 0.3, 0.3))):
        kak = cartan_coordinates(g)
        assert kak.degenerate
        assert process_fidelity(kak.reconstruct(), g) > 1 - 1e-12
    assert not cartan_coordinates(canonical_gate((1.2, 0.7, 0.3))).degenerate


def test_non_unitary_rejected():
    with pytest.raises(NonUnitaryInput):
        cartan_coordinates(np.ones((4, 4)))
    with pytest.raises(NonUnitaryInput):
        cartan_coordinates(np.eye(2))


@given(st.tuples(angles, angles, angles))
def test_canonicalize_stays_in_class(c):
    r = canonicalize_coords(c)
    assert in_standard_chamber(r)
    assert oracles.spectral_distance(canonical_gate(c), canonical_gate(r)) < 1e-8


def test_canonicalize_weyl_orbit():
    c = (1.1, 0.6, -0.25)
    for img in oracles.weyl_images(c):
        assert np.allclose(canonicalize_coords(img).as_array(), c, atol=1e-12)


def test_to_positive_chamber_example():
    got = to_positive_chamber((PI / 2, PI / 4, -PI / 8))
    assert got.chamber == "positive"
    assert np.allclose(got.as_array(), (PI / 2, PI / 4, PI / 8))


def test_positive_conversion_negative_c3():
    got = to_positive_chamber((1.0, 0.5, -0.2))
    assert np.allclose(got.as_array(), (PI - 1.0, 0.5, 0.2))
    assert np.allclose(to_standard_chamber(got).as_array(), (1.0, 0.5, -0.2))


def test_positive_round_trip_random(rng):
    for c in sample_chamber(500, rng):
        p = to_positive_chamber(c)
        assert in_positive_chamber(p)
        assert np.allclose(to_standard_chamber(p).as_array(), canonicalize_coords(c).as_array(), atol=1e-12)


def test_chamber_vertices():
    for v in STANDARD_VERTICES:
        assert in_standard_chamber(v)
    for v in POSITIVE_VERTICES:
        assert in_positive_chamber(v)
    assert not in_standard_chamber((PI / 2 + 1e-6, 0, 0))
    assert not in_positive_chamber((1.0, 0.5, -0.1))
    assert not in_positive_chamber((2.0, 1.5, 0.0))


def test_require_chamber():
    assert require_chamber((1, 0.5, 0.2), "positive").chamber == "positive"
    with pytest.raises(ChamberViolation):
        require_chamber((2.0, 1.5, 0), "standard")


def test_sample_chamber_shape_and_membership(rng):
    pts = sample_chamber(1000, rng, "positive")
    assert pts.shape == (1000, 3)
    assert all(in_positive_chamber(p) for p in pts)


def test_invariants_known_values():
    cnot = invariants_from_matrix(CNOT)
    assert cnot.g1 == pytest.approx(0, abs=1e-12) and cnot.g2 == pytest.approx(1)
    swap = invariants_from_matrix(SWAP)
    assert swap.g1 == pytest.approx(-1) and swap.g2 == pytest.approx(-3)
    ident = invariants_from_matrix(I4)
    assert ident.g1 == pytest.approx(1) and ident.g2 == pytest.approx(3)


@given(seeds)
def test_invariant_routes_agree(seed):
    u = haar_random("u4", seed)
    a = invariants_from_matrix(u)
    b = invariants_from_coords(weyl_coordinates(u))
    assert a.distance(b) < 1e-9


def test_local_equivalence():
    rng = np.random.default_rng(3)
    assert locally_equivalent(CNOT, CZ)
    assert locally_equivalent(CNOT, random_local(rng) @ CNOT @ random_local(rng))
    assert not locally_equivalent(CNOT, ISWAP)
    assert invariant_distance(CNOT, CNOT) == 0


def test_mirror_classes_distinguished():
    # (c1, c2, c3) and (c1, c2, -c3) are different classes off the c1 = pi/2 face
    a, b = canonical_gate((1.0, 0.5, 0.2)), canonical_gate((1.0, 0.5, -0.2))
    assert not locally_equivalent(a, b)
    assert oracles.spectral_distance(a, b) > 1e-3


@pytest.mark.parametrize(
    "c, value",
    [
        ((0, 0, 0), 0.0),
        ((PI / 2, 0, 0), 2 / 9),
        ((PI / 2, PI / 2, 0), 2 / 9),
        ((PI / 2, PI / 2, PI / 2), 0.0),
        ((PI / 3, PI / 6, 0), 3.25 / 18),
    ],
)
def test_entangling_power_values(c, value):
    assert entangling_power(c) == pytest.approx(value, abs=1e-15)


@given(seeds)
def test_entangling_power_matches_operator_oracle(seed):
    u = haar_random("u4", seed)
    assert entangling_power(weyl_coordinates(u)) == pytest.approx(
        oracles.zanardi_entangling_power(u), abs=1e-12
    )


def test_entangling_power_bounds(rng):
    vals = [entangling_power(c) for c in sample_chamber(2000, rng)]
    assert min(vals) >= -1e-15 and max(vals) <= 2 / 9 + 1e-15


def test_linear_entropy():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert linear_entropy(bell)[0] == pytest.approx(0.5)
    assert linear_entropy(np.array([1, 0, 0, 0]))[0] == pytest.approx(0)


def test_mc_estimator_cnot():
    est = entangling_power_mc(CNOT, 20_000, seed=1)
    assert abs(est.mean - 2 / 9) < 4 * est.stderr
    assert entangling_power_mc(CNOT, 1000, seed=1) == entangling_power_mc(CNOT, 1000, seed=1)
    with pytest.raises(ValueError):
        entangling_power_mc(CNOT, 0)


def test_cartan_triple_dict():
    t = CartanTriple(0.1, 0.2, 0.3)
    assert t.as_array().tolist() == [0.1, 0.2, 0.3]
