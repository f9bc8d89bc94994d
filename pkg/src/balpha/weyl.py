"""Cartan (KAK) coordinates, local invariants and entangling power.

Canonical gates are ``U_d(c) = exp[i (c1 XX + c2 YY + c3 ZZ) / 2]``.  With this
normalisation CNOT sits at (pi/2, 0, 0), iSWAP at (pi/2, pi/2, 0) and SWAP at
(pi/2, pi/2, pi/2).  Two chamber conventions are supported:

``standard``
    pi/2 >= c1 >= c2 >= |c3| >= 0
``positive``
    c1 >= c2 >= c3 >= 0 and c2 <= pi - c1, with c1 in [0, pi]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence, Union

import numpy as np

from .errors import ChamberViolation
from .gates import (
    I2,
    I4,
    MAGIC,
    MAGIC_DAG,
    X,
    XX,
    Y,
    YY,
    Z,
    ZZ,
    canonical_phase,
    check_unitary,
    kron_factor,
)

Chamber = Literal["standard", "positive"]
HALF_PI = math.pi / 2
CHAMBER_TOL = 1e-9
# Diagonal of MAGIC^dag (XX, YY, ZZ) MAGIC, one column per Pauli pair.
_MAGIC_SIGNS = np.real(
    np.stack([np.diag(MAGIC_DAG @ p @ MAGIC) for p in (XX, YY, ZZ)], axis=1)
)
_PAULIS = (X, Y, Z)
_PAULI_PAIRS = (XX, YY, ZZ)


@dataclass(frozen=True)
class CartanTriple:
    """Cartan coordinates in radians with a chamber tag."""

    c1: float
    c2: float
    c3: float
    chamber: Chamber = "standard"

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3], dtype=float)

    def __iter__(self):
        return iter((self.c1, self.c2, self.c3))

    def in_chamber(self, tol: float = CHAMBER_TOL) -> bool:
        if self.chamber == "standard":
            return in_standard_chamber(self, tol)
        return in_positive_chamber(self, tol)

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "chamber": self.chamber}


CoordsLike = Union[CartanTriple, Sequence[float], np.ndarray]


def _coords(c: CoordsLike) -> np.ndarray:
    if isinstance(c, CartanTriple):
        return c.as_array()
    arr = np.asarray(c, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"expected three Cartan coordinates, got shape {arr.shape}")
    return arr


def in_standard_chamber(c: CoordsLike, tol: float = CHAMBER_TOL) -> bool:
    c1, c2, c3 = _coords(c)
    return HALF_PI + tol >= c1 and c1 + tol >= c2 and c2 + tol >= abs(c3)


def in_positive_chamber(c: CoordsLike, tol: float = CHAMBER_TOL) -> bool:
    c1, c2, c3 = _coords(c)
    return (
        c1 - c2 >= -tol
        and c2 - c3 >= -tol
        and c3 >= -tol
        and (math.pi - c1) - c2 >= -tol
        and -tol <= c1 <= math.pi + tol
    )


@dataclass(frozen=True)
class LocalInvariants:
    """Makhlin-type invariants ``(G1, G2)``; equal pairs mean equal classes."""

    g1: complex
    g2: float

    def distance(self, other: "LocalInvariants") -> float:
        """``|dG1| + |dG2|``, zero exactly on the same local class."""
        return abs(self.g1 - other.g1) + abs(self.g2 - other.g2)

    def to_dict(self) -> dict:
        return {"g1": [self.g1.real, self.g1.imag], "g2": self.g2}


@dataclass(frozen=True)
class KakDecomposition:
    """``u = e^{i phase} (k1 x k2) U_d(coords) (k3 x k4)``."""

    phase: float
    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    k4: np.ndarray
    coords: CartanTriple
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        return (
            np.exp(1j * self.phase)
            * np.kron(self.k1, self.k2)
            @ canonical_gate(self.coords)
            @ np.kron(self.k3, self.k4)
        )

    def to_dict(self) -> dict:
        def block(k: np.ndarray) -> list:
            return [[[float(z.real), float(z.imag)] for z in row] for row in k]

        return {
            "phase": self.phase,
            "k1": block(self.k1),
            "k2": block(self.k2),
            "k3": block(self.k3),
            "k4": block(self.k4),
            "coords": [self.coords.c1, self.coords.c2, self.coords.c3],
            "chamber": self.coords.chamber,
            "degenerate": self.degenerate,
        }


def canonical_gate(c: CoordsLike) -> np.ndarray:
    """``exp[i (c1 XX + c2 YY + c3 ZZ) / 2]`` as a product of three commuting factors."""
    out = I4.copy()
    for angle, pp in zip(_coords(c), _PAULI_PAIRS):
        out = out @ (math.cos(angle / 2) * I4 + 1j * math.sin(angle / 2) * pp)
    return out


# --- Weyl-group canonicalisation ------------------------------------------


@dataclass
class _Frame:
    """Running factorisation ``u = phase * left @ U_d(c) @ right``."""

    c: np.ndarray
    phase: complex = 1.0
    left: np.ndarray = field(default_factory=lambda: I4.copy())
    right: np.ndarray = field(default_factory=lambda: I4.copy())
    track: bool = True

    def shift(self, i: int, k: int) -> None:
        # U_d(c) = U_d(c - k pi e_i) (i sigma_i sigma_i)^k
        self.c[i] -= k * math.pi
        if self.track:
            self.phase *= 1j**k
            if k % 2:
                self.right = _PAULI_PAIRS[i] @ self.right

    def swap(self, i: int, j: int) -> None:
        # R x R with R = exp(-i pi sigma_k / 4) exchanges axes i and j.
        self.c[[i, j]] = self.c[[j, i]]
        if self.track:
            k = 3 - i - j
            r = (I2 - 1j * _PAULIS[k]) / math.sqrt(2)
            v = np.kron(r, r)
            self.left = self.left @ v.conj().T
            self.right = v @ self.right

    def flip(self, i: int, j: int) -> None:
        # sigma_k x I anticommutes with sigma_i sigma_i and sigma_j sigma_j.
        self.c[[i, j]] *= -1
        if self.track:
            k = 3 - i - j
            v = np.kron(_PAULIS[k], I2)
            self.left = self.left @ v
            self.right = v @ self.right


def _canonicalize(frame: _Frame, tol: float = 1e-10) -> None:
    c = frame.c
    for i in range(3):
        k = int(round(c[i] / math.pi))
        if k:
            frame.shift(i, k)
    for _ in range(2):
        for i in range(2):
            if abs(c[i]) < abs(c[i + 1]):
                frame.swap(i, i + 1)
    if c[0] < 0 and c[1] < 0:
        frame.flip(0, 1)
    elif c[0] < 0:
        frame.flip(0, 2)
    elif c[1] < 0:
        frame.flip(1, 2)
    # (pi/2, c2, c3) ~ (pi/2, c2, -c3); keep the non-negative c3 representative.
    if abs(c[0] - HALF_PI) <= tol and c[2] < 0:
        frame.shift(0, 1)
        frame.flip(0, 2)
    if abs(c[0] - HALF_PI) <= tol:
        c[0] = HALF_PI
    for i in range(3):
        if c[i] == 0.0:
            c[i] = 0.0  # normalise -0.0


def canonicalize_coords(c: CoordsLike) -> CartanTriple:
    """Map any triple to its standard-chamber representative."""
    frame = _Frame(_coords(c).copy(), track=False)
    _canonicalize(frame)
    return CartanTriple(*map(float, frame.c), chamber="standard")


def to_positive_chamber(c: CoordsLike) -> CartanTriple:
    """Standard-chamber triple to the positive system via (c1, c2, c3) -> (pi - c1, c2, -c3)."""
    arr = _coords(c)
    if not in_standard_chamber(arr):
        arr = canonicalize_coords(arr).as_array()
    c1, c2, c3 = map(float, arr)
    if c3 < 0:
        c1, c3 = math.pi - c1, -c3
    return CartanTriple(c1, c2, c3, chamber="positive")


def to_standard_chamber(c: CoordsLike) -> CartanTriple:
    return canonicalize_coords(c)


# --- decomposition --------------------------------------------------------


def _real_diagonalizer(m2: np.ndarray, attempts: int = 16) -> np.ndarray:
    """Real orthogonal P with P^T m2 P diagonal, for complex symmetric unitary m2.

    Real and imaginary parts of m2 commute, so a generic real combination of
    them shares m2's eigenvectors.
    """
    rng = np.random.default_rng(1234)
    scale = max(1.0, float(np.max(np.abs(m2))))
    for _ in range(attempts):
        a, b = rng.normal(size=2)
        _, p = np.linalg.eigh(a * m2.real + b * m2.imag)
        d = p.T @ m2 @ p
        if np.max(np.abs(d - np.diag(np.diag(d)))) <= 1e-11 * scale:
            return p
    raise ArithmeticError("failed to diagonalise the magic-basis Gram matrix")


def _sign_fix(k: np.ndarray) -> tuple[np.ndarray, int]:
    for z in k.ravel():
        if abs(z) > 1e-12:
            key = z.real if abs(z.real) > 1e-12 else z.imag
            return (-k, 1) if key < 0 else (k, 0)
    return k, 0


def cartan_coordinates(u: np.ndarray) -> KakDecomposition:
    """Full KAK decomposition of a two-qubit unitary, coordinates in the standard chamber.

    Raises:
        NonUnitaryInput: if ``u`` is not a 4x4 unitary.
    """
    u = check_unitary(u, 4)
    v = u / np.linalg.det(u) ** 0.25
    vp = MAGIC_DAG @ v @ MAGIC
    m2 = vp.T @ vp
    p = _real_diagonalizer(m2)
    if np.linalg.det(p) < 0:
        p[:, 0] *= -1
    d2 = np.diag(p.T @ m2 @ p)
    gaps = [abs(d2[i] - d2[j]) for i in range(4) for j in range(i + 1, 4)]
    degenerate = bool(min(gaps) < 1e-7)

    theta = np.angle(d2) / 2
    # det(K1) = exp(-i sum(theta)); move one branch by pi if that is -1.
    if abs(math.remainder(theta.sum(), 2 * math.pi)) > HALF_PI:
        theta[0] += math.pi
    theta[3] -= 2 * math.pi * round(theta.sum() / (2 * math.pi))

    k1 = vp @ p @ np.diag(np.exp(-1j * theta))
    frame = _Frame(
        c=_MAGIC_SIGNS.T @ theta / 2,
        phase=complex(np.linalg.det(u) ** 0.25),
        left=MAGIC @ k1 @ MAGIC_DAG,
        right=MAGIC @ p.T @ MAGIC_DAG,
    )
    _canonicalize(frame)

    _, ka, kb = kron_factor(frame.left)
    _, kc, kd = kron_factor(frame.right)
    ka, _ = _sign_fix(ka)
    kb, _ = _sign_fix(kb)
    kc, _ = _sign_fix(kc)
    kd, _ = _sign_fix(kd)
    coords = CartanTriple(*map(float, frame.c), chamber="standard")
    core = np.kron(ka, kb) @ canonical_gate(coords) @ np.kron(kc, kd)
    phase = canonical_phase(np.angle(np.trace(core.conj().T @ u)))
    return KakDecomposition(phase, ka, kb, kc, kd, coords, degenerate)


def weyl_coordinates(u: np.ndarray) -> CartanTriple:
    """Standard-chamber coordinates only."""
    return cartan_coordinates(u).coords


# --- invariants -----------------------------------------------------------


def invariants_from_coords(c: CoordsLike) -> LocalInvariants:
    """G1, G2 from Cartan coordinates (sum/product of cos 2c and product of sin 2c)."""
    cc = np.cos(2 * _coords(c))
    ss = np.sin(2 * _coords(c))
    g1 = (cc.sum() + cc.prod() + 1j * ss.prod()) / 4
    return LocalInvariants(complex(g1), float(cc.sum()))


def invariants_from_matrix(u: np.ndarray) -> LocalInvariants:
    """G1, G2 from the magic-basis Gram matrix, without any decomposition."""
    u = check_unitary(u, 4)
    up = MAGIC_DAG @ u @ MAGIC
    m = up.T @ up
    det = np.linalg.det(u)
    tr = np.trace(m)
    g1 = tr * tr / (16 * det)
    g2 = (tr * tr - np.trace(m @ m)) / (4 * det)
    return LocalInvariants(complex(g1), float(g2.real))


def invariant_distance(u: np.ndarray, v: np.ndarray) -> float:
    return invariants_from_matrix(u).distance(invariants_from_matrix(v))


def locally_equivalent(u: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> bool:
    a = invariants_from_matrix(u)
    b = invariants_from_matrix(v)
    return abs(a.g1 - b.g1) <= tol and abs(a.g2 - b.g2) <= tol


# --- entangling power -----------------------------------------------------


def entangling_power(c: CoordsLike) -> float:
    """(1/18) [3 - 1/2 sum_{i != j} cos(2 c_i) cos(2 c_j)], ordered pairs."""
    cc = np.cos(2 * _coords(c))
    pair_sum = sum(cc[i] * cc[j] for i in range(3) for j in range(3) if i != j)
    return float((3 - 0.5 * pair_sum) / 18)


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    samples: int


def random_product_states(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random product states as an (n, 4) array."""
    g = rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))
    g /= np.linalg.norm(g, axis=2, keepdims=True)
    return np.einsum("ni,nj->nij", g[:, 0], g[:, 1]).reshape(n, 4)


def linear_entropy(states: np.ndarray) -> np.ndarray:
    """``1 - tr(rho_1^2)`` of the one-qubit reduced state, for rows of ``states``.

    Evaluated as ``2 |det M|^2 / |psi|^4`` with ``M`` the 2x2 coefficient
    matrix.  This equals the purity form for pure states, but on product
    inputs it is zero to second order in roundoff rather than ``O(eps)``.
    """
    m = np.asarray(states).reshape(-1, 2, 2)
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    norm2 = np.sum(np.abs(m) ** 2, axis=(1, 2))
    return 2.0 * np.abs(det) ** 2 / norm2**2


def entangling_power_mc(u: np.ndarray, samples: int = 100_000, seed: int = 0) -> MonteCarloEstimate:
    """Average linear entropy generated from Haar product inputs.

    Normalised so CNOT gives 2/9, the same scale as :func:`entangling_power`.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    u = check_unitary(u, 4)
    rng = np.random.default_rng(seed)
    out = random_product_states(samples, rng) @ u.T
    e = linear_entropy(out)
    stderr = float(e.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return MonteCarloEstimate(float(e.mean()), stderr, samples)


# --- sampling -------------------------------------------------------------

STANDARD_VERTICES = np.array(
    [[0, 0, 0], [HALF_PI, 0, 0], [HALF_PI, HALF_PI, HALF_PI], [HALF_PI, HALF_PI, -HALF_PI]]
)
POSITIVE_VERTICES = np.array(
    [[0, 0, 0], [math.pi, 0, 0], [HALF_PI, HALF_PI, 0], [HALF_PI, HALF_PI, HALF_PI]]
)


def sample_chamber(n: int, rng: np.random.Generator, chamber: Chamber = "standard") -> np.ndarray:
    """Uniform samples from the chamber tetrahedron, shape (n, 3)."""
    verts = STANDARD_VERTICES if chamber == "standard" else POSITIVE_VERTICES
    return rng.dirichlet(np.ones(4), size=n) @ verts


def require_chamber(c: CoordsLike, chamber: Chamber, tol: float = CHAMBER_TOL) -> CartanTriple:
    """Return ``c`` tagged with ``chamber`` or raise :class:`ChamberViolation`."""
    arr = _coords(c)
    ok = in_standard_chamber(arr, tol) if chamber == "standard" else in_positive_chamber(arr, tol)
    if not ok:
        raise ChamberViolation(f"{tuple(arr)} is outside the {chamber} chamber")
    return CartanTriple(*map(float, arr), chamber=chamber)


