"""Small dense complex matrix helpers, gate constants, sampling and fidelity.

Conventions used everywhere in the package:

* qubit 1 (ion m) is the left tensor factor, so ``tensor(a, b)`` acts with
  ``a`` on qubit 1 and ``b`` on qubit 2;
* a matrix counts as unitary when ``max|M^dag M - I| <= UNITARY_TOL``.
"""

from __future__ import annotations

import json
import math
from typing import Any, Literal

import numpy as np
from scipy.stats import unitary_group

from .errors import GateParseError, NonUnitaryInput

UNITARY_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


I2 = _frozen(np.eye(2))
X = _frozen([[0, 1], [1, 0]])
Y = _frozen([[0, -1j], [1j, 0]])
Z = _frozen([[1, 0], [0, -1]])
S = _frozen([[1, 0], [0, 1j]])
H = _frozen(np.array([[1, 1], [1, -1]]) / math.sqrt(2))
I4 = _frozen(np.eye(4))

XX = _frozen(np.kron(X, X))
YY = _frozen(np.kron(Y, Y))
ZZ = _frozen(np.kron(Z, Z))

CNOT = _frozen([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
CZ = _frozen(np.diag([1, 1, 1, -1]))
SWAP = _frozen([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
ISWAP = _frozen([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]])

# Magic (Bell) basis, columns |Phi+>, i|Psi+>, |Psi->, i|Phi->.  Conjugation
# by MAGIC maps SU(2) x SU(2) onto SO(4) and U_d(c) onto a diagonal matrix.
MAGIC = _frozen(
    np.array(
        [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]]
    )
    / math.sqrt(2)
)
MAGIC_DAG = _frozen(MAGIC.conj().T)

NAMED_GATES = {
    "I": I4,
    "CNOT": CNOT,
    "CZ": CZ,
    "SWAP": SWAP,
    "ISWAP": ISWAP,
}


def unitarity_error(u: np.ndarray) -> float:
    """Return ``max|u^dag u - I|``."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and unitarity_error(u) <= tol


def check_unitary(u: np.ndarray, dim: int | None = None, tol: float = UNITARY_TOL) -> np.ndarray:
    """Validate ``u`` and return it as a complex array.

    Raises:
        NonUnitaryInput: wrong shape or unitarity error above ``tol``.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NonUnitaryInput(f"expected a square matrix, got shape {u.shape}")
    if dim is not None and u.shape[0] != dim:
        raise NonUnitaryInput(f"expected a {dim}x{dim} matrix, got {u.shape}")
    err = unitarity_error(u)
    if not err <= tol:  # also catches NaN entries
        raise NonUnitaryInput(f"matrix is not unitary (max|U^dag U - I| = {err:.3e})")
    return u


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` acting on qubit 1."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError("tensor expects two 2x2 matrices")
    return np.kron(a, b)


def magic_transform(u: np.ndarray) -> np.ndarray:
    """Return ``Q^dag u Q`` for the fixed magic-basis matrix ``Q``."""
    u = check_unitary(u, 4)
    return MAGIC_DAG @ u @ MAGIC


def canonical_phase(phi: float) -> float:
    """Map an angle into (-pi, pi]."""
    phi = math.remainder(float(phi), 2 * math.pi)
    if phi <= -math.pi:
        phi += 2 * math.pi
    return phi


def to_special_unitary(u: np.ndarray) -> np.ndarray:
    """Divide out a principal root of the determinant."""
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    return u / np.linalg.det(u) ** (1.0 / n)


def kron_factor(m: np.ndarray) -> tuple[complex, np.ndarray, np.ndarray]:
    """Split a 4x4 local gate into ``phase * (a kron b)`` with a, b in SU(2).

    The rank-one rearrangement of ``m`` is extracted by SVD, so inputs that are
    only approximately a tensor product get projected onto the nearest one.
    """
    m = np.asarray(m, dtype=complex)
    r = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    uu, s, vh = np.linalg.svd(r)
    a = (uu[:, 0] * math.sqrt(s[0])).reshape(2, 2)
    b = (vh[0, :] * math.sqrt(s[0])).reshape(2, 2)
    a = a / np.sqrt(np.linalg.det(a))
    b = b / np.sqrt(np.linalg.det(b))
    phase = np.trace(np.kron(a, b).conj().T @ m) / 4
    return complex(phase), a, b


def haar_random(
    kind: Literal["su2", "su4", "u4", "product_state"], seed: int | np.random.Generator
) -> np.ndarray:
    """Draw a Haar-distributed sample.

    ``su2``/``su4`` return special-unitary matrices, ``u4`` a unitary with
    random global phase, and ``product_state`` a normalised 4-vector
    ``|psi1> kron |psi2>`` with each factor Haar on the Bloch sphere.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if kind == "su2":
        return to_special_unitary(unitary_group.rvs(2, random_state=rng))
    if kind == "su4":
        return to_special_unitary(unitary_group.rvs(4, random_state=rng))
    if kind == "u4":
        return unitary_group.rvs(4, random_state=rng)
    if kind == "product_state":
        a = unitary_group.rvs(2, random_state=rng)[:, 0]
        b = unitary_group.rvs(2, random_state=rng)[:, 0]
        return np.kron(a, b)
    raise ValueError(f"unknown sample kind {kind!r}")


def random_local(seed: int | np.random.Generator) -> np.ndarray:
    """Haar-random element of SU(2) x SU(2) as a 4x4 matrix."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.kron(haar_random("su2", rng), haar_random("su2", rng))


def process_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """``|tr(u^dag v)|^2 / d^2``, insensitive to global phase."""
    u = check_unitary(u)
    v = check_unitary(v, u.shape[0])
    d = u.shape[0]
    return float(abs(np.trace(u.conj().T @ v)) ** 2 / d**2)


# --- gate JSON -------------------------------------------------------------


def gate_to_dict(u: np.ndarray) -> dict[str, Any]:
    u = np.asarray(u, dtype=complex)
    return {
        "dim": int(u.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in u.ravel()],
    }


def gate_from_dict(obj: Any) -> np.ndarray:
    """Parse ``{"dim": 2|4, "entries": [[re, im], ...]}`` (row-major)."""
    if not isinstance(obj, dict):
        raise GateParseError("gate JSON must be an object")
    dim = obj.get("dim")
    if isinstance(dim, bool) or dim not in (2, 4):
        raise GateParseError(f"'dim' must be 2 or 4, got {dim!r}")
    entries = obj.get("entries")
    if not isinstance(entries, list) or len(entries) != dim * dim:
        raise GateParseError(f"'entries' must be a list of {dim * dim} [re, im] pairs")
    vals = []
    for k, pair in enumerate(entries):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise GateParseError(f"entry {k} is not a numeric [re, im] pair: {pair!r}")
        vals.append(complex(pair[0], pair[1]))
    return np.array(vals, dtype=complex).reshape(dim, dim)


def gate_from_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GateParseError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return gate_from_dict(obj)


def gate_to_json(u: np.ndarray) -> str:
    return json.dumps(gate_to_dict(u))
