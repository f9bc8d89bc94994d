import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from balpha.errors import GateParseError, NonUnitaryInput
from balpha.gates import (
    CNOT,
    I4,
    MAGIC,
    NAMED_GATES,
    SWAP,
    X,
    canonical_phase,
    check_unitary,
    gate_from_dict,
    gate_from_json,
    gate_to_json,
    haar_random,
    is_unitary,
    kron_factor,
    magic_transform,
    process_fidelity,
    random_local,
    tensor,
    to_special_unitary,
    unitarity_error,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_named_gates_are_unitary():
    for name, g in NAMED_GATES.items():
        assert unitarity_error(g) < 1e-14, name


def test_constants_are_read_only():
    with pytest.raises(ValueError):
        CNOT[0, 0] = 2


def test_tensor_matches_kron(rng):
    a, b = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    assert np.allclose(tensor(a, b), np.kron(a, b))


def test_magic_basis_is_unitary_and_maps_locals_to_real_orthogonal(rng):
    assert unitarity_error(MAGIC) < 1e-15
    for _ in range(20):
        m = magic_transform(random_local(rng))
        assert np.allclose(m.imag, 0, atol=1e-12)
        assert np.isclose(np.linalg.det(m.real), 1)


def test_check_unitary_rejects():
    with pytest.raises(NonUnitaryInput):
        check_unitary(np.eye(4) * 1.001)
    with pytest.raises(NonUnitaryInput):
        check_unitary(np.eye(2), 4)
    with pytest.raises(NonUnitaryInput):
        check_unitary(np.full((4, 4), np.nan))
    assert is_unitary(SWAP)


def test_canonical_phase_range():
    for phi in (-7.0, -math.pi, 0.0, math.pi, 12.5):
        p = canonical_phase(phi)
        assert -math.pi < p <= math.pi
        assert np.isclose(np.exp(1j * p), np.exp(1j * phi))


@given(seeds)
def test_haar_su4_properties(seed):
    u = haar_random("su4", seed)
    assert unitarity_error(u) < 1e-12
    assert abs(np.linalg.det(u) - 1) < 1e-12


def test_haar_su2_first_moment():
    # E|u00|^2 = 1/2 for Haar SU(2)
    rng = np.random.default_rng(7)
    vals = [abs(haar_random("su2", rng)[0, 0]) ** 2 for _ in range(10_000)]
    assert abs(np.mean(vals) - 0.5) < 0.02


def test_haar_product_state_is_normalised_product(rng):
    psi = haar_random("product_state", rng)
    assert np.isclose(np.linalg.norm(psi), 1)
    assert np.linalg.matrix_rank(psi.reshape(2, 2), tol=1e-10) == 1


def test_haar_reproducible():
    assert np.array_equal(haar_random("u4", 3), haar_random("u4", 3))
    with pytest.raises(ValueError):
        haar_random("so3", 0)


def test_to_special_unitary(rng):
    u = haar_random("u4", rng)
    assert abs(np.linalg.det(to_special_unitary(u)) - 1) < 1e-12


@given(seeds)
def test_kron_factor_recovers_factors(seed):
    rng = np.random.default_rng(seed)
    a, b = haar_random("su2", rng), haar_random("su2", rng)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    g, fa, fb = kron_factor(phase * np.kron(a, b))
    assert np.allclose(g * np.kron(fa, fb), phase * np.kron(a, b), atol=1e-12)


def test_process_fidelity_values():
    assert process_fidelity(I4, I4) == pytest.approx(1)
    assert process_fidelity(np.exp(0.3j) * CNOT, CNOT) == pytest.approx(1)
    assert process_fidelity(np.eye(2), X) == pytest.approx(0, abs=1e-15)
    assert process_fidelity(np.eye(4), np.kron(X, np.eye(2))) == pytest.approx(0, abs=1e-15)


def test_gate_json_round_trip(rng):
    u = haar_random("u4", rng)
    assert np.array_equal(gate_from_json(gate_to_json(u)), u)


@pytest.mark.parametrize(
    "payload",
    [
        "[1, 2]",
        '{"dim": 3, "entries": []}',
        '{"dim": 2, "entries": [[1, 0], [0, 0], [0, 0]]}',
        '{"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], ["a", 1]]}',
        '{"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], [1]]}',
        '{"dim": true, "entries": []}',
    ],
)
def test_gate_json_rejects(payload):
    with pytest.raises(GateParseError):
        gate_from_json(payload)


def test_gate_json_reports_position():
    with pytest.raises(GateParseError, match="line 2, column"):
        gate_from_json('{"dim": 2,\n "entries": [}')


def test_gate_from_dict_row_major():
    d = {"dim": 2, "entries": [[0, 0], [1, 0], [2, 0], [0, 3]]}
    assert np.array_equal(gate_from_dict(d), np.array([[0, 1], [2, 3j]]))
    json.dumps(d)
