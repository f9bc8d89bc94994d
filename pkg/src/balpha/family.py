"""The B^alpha gate family and its two-application coverage region.

B^alpha has Cartan coordinates (alpha pi/2, alpha pi/4, 0) for alpha in [0, 1]:
alpha = 1 is the B gate, alpha = 1/2 is sqrt(B) and alpha = 2/3 is the cube
root of B^2 at the centroid of the c3 = 0 face of the chamber.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ChamberViolation, InvalidAlpha
from .weyl import (
    POSITIVE_VERTICES,
    CartanTriple,
    CoordsLike,
    LocalInvariants,
    _coords,
    canonical_gate,
    in_positive_chamber,
    sample_chamber,
)

# slack >= -COVERAGE_TOL counts as satisfied, so exact boundary points are covered
COVERAGE_TOL = 1e-12
SET1_LABELS = ("c1-c2", "c2-c3", "c3", "alpha*pi-c1", "3*alpha*pi/2-(c1+c2+c3)")
SET2_LABELS = (
    "(pi-c1)-c2",
    "c2-c3",
    "c3",
    "alpha*pi-(pi-c1)",
    "3*alpha*pi/2-((pi-c1)+c2+c3)",
)


@dataclass(frozen=True)
class BalphaSpec:
    alpha: float

    def __post_init__(self):
        a = self.alpha
        if not isinstance(a, (int, float)) or isinstance(a, bool) or not (0.0 <= a <= 1.0):
            raise InvalidAlpha(f"alpha must lie in [0, 1], got {a!r}")
        object.__setattr__(self, "alpha", float(a))


SpecLike = Union[BalphaSpec, float]


def as_spec(spec: SpecLike) -> BalphaSpec:
    return spec if isinstance(spec, BalphaSpec) else BalphaSpec(spec)


def balpha_coords(spec: SpecLike) -> CartanTriple:
    a = as_spec(spec).alpha
    return CartanTriple(a * math.pi / 2, a * math.pi / 4, 0.0)


def balpha_gate(spec: SpecLike) -> np.ndarray:
    return canonical_gate(balpha_coords(spec))


def balpha_invariants(spec: SpecLike) -> LocalInvariants:
    """Closed forms G1 = (1 + cos a pi)(1 + cos a pi/2)/4, G2 = 1 + cos a pi + cos a pi/2."""
    a = as_spec(spec).alpha
    ca, ch = math.cos(a * math.pi), math.cos(a * math.pi / 2)
    return LocalInvariants(complex((1 + ca) * (1 + ch) / 4), 1 + ca + ch)


def balpha_entangling_power(spec: SpecLike) -> float:
    a = as_spec(spec).alpha
    ca, ch = math.cos(a * math.pi), math.cos(a * math.pi / 2)
    return (3 - ch * (ca + 1) - ca) / 18


# --- coverage -------------------------------------------------------------


@dataclass(frozen=True)
class CoverageVerdict:
    """Both inequality sets evaluated at one positive-chamber point.

    ``margins1``/``margins2`` hold LHS - RHS for the five inequalities of
    each set, in the order of ``SET1_LABELS``/``SET2_LABELS``.
    """

    alpha: float
    coords: CartanTriple
    margins1: tuple[float, ...]
    margins2: tuple[float, ...]

    @property
    def set1_holds(self) -> bool:
        return all(m >= -COVERAGE_TOL for m in self.margins1)

    @property
    def set2_holds(self) -> bool:
        return all(m >= -COVERAGE_TOL for m in self.margins2)

    @property
    def covered(self) -> bool:
        return self.set1_holds or self.set2_holds

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "coords": [self.coords.c1, self.coords.c2, self.coords.c3],
            "set1_holds": self.set1_holds,
            "set2_holds": self.set2_holds,
            "covered": self.covered,
            "margins1": dict(zip(SET1_LABELS, self.margins1)),
            "margins2": dict(zip(SET2_LABELS, self.margins2)),
        }


def coverage_margins(alpha: float, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slacks of both inequality sets for an (n, 3) array of points; shapes (n, 5)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    c1, c2, c3 = p[:, 0], p[:, 1], p[:, 2]
    api = alpha * math.pi
    m1 = np.stack([c1 - c2, c2 - c3, c3, api - c1, 1.5 * api - (c1 + c2 + c3)], axis=1)
    r1 = math.pi - c1
    m2 = np.stack([r1 - c2, c2 - c3, c3, api - r1, 1.5 * api - (r1 + c2 + c3)], axis=1)
    return m1, m2


def coverage_sets(alpha: float, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m1, m2 = coverage_margins(alpha, points)
    return np.all(m1 >= -COVERAGE_TOL, axis=1), np.all(m2 >= -COVERAGE_TOL, axis=1)


def two_application_coverage(spec: SpecLike, c: CoordsLike) -> CoverageVerdict:
    """Decide whether two applications of B^alpha can reach the class at ``c``.

    ``c`` must be in the positive chamber.

    Raises:
        ChamberViolation: ``c`` is outside the positive chamber.
    """
    a = as_spec(spec).alpha
    arr = _coords(c)
    if not in_positive_chamber(arr):
        raise ChamberViolation(f"{tuple(arr)} is outside the positive chamber")
    m1, m2 = coverage_margins(a, arr)
    return CoverageVerdict(
        a,
        CartanTriple(*map(float, arr), chamber="positive"),
        tuple(map(float, m1[0])),
        tuple(map(float, m2[0])),
    )


def positive_grid(resolution: int) -> np.ndarray:
    """Barycentric lattice over the positive-chamber tetrahedron, boundary included."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    n = resolution
    weights = [
        (i, j, k, n - i - j - k)
        for i in range(n + 1)
        for j in range(n + 1 - i)
        for k in range(n + 1 - i - j)
    ]
    return np.asarray(weights, dtype=float) @ POSITIVE_VERTICES / n


@dataclass(frozen=True)
class ChamberScan:
    alpha: float
    points: np.ndarray
    set1: np.ndarray
    set2: np.ndarray
    covered_fraction: float
    mc_samples: int

    @property
    def covered(self) -> np.ndarray:
        return self.set1 | self.set2

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["c1", "c2", "c3", "set1", "set2"])
        for p, s1, s2 in zip(self.points, self.set1, self.set2):
            w.writerow([f"{p[0]:.12g}", f"{p[1]:.12g}", f"{p[2]:.12g}", int(s1), int(s2)])
        return buf.getvalue()


def covered_fraction_mc(alpha: float, samples: int = 1_000_000, seed: int = 0) -> float:
    """Volume fraction of the positive chamber satisfying either set."""
    rng = np.random.default_rng(seed)
    covered = 0
    chunk = 200_000
    for start in range(0, samples, chunk):
        pts = sample_chamber(min(chunk, samples - start), rng, "positive")
        s1, s2 = coverage_sets(alpha, pts)
        covered += int(np.count_nonzero(s1 | s2))
    return covered / samples


def chamber_scan(
    spec: SpecLike, resolution: int, mc_samples: int = 1_000_000, seed: int = 0
) -> ChamberScan:
    a = as_spec(spec).alpha
    pts = positive_grid(resolution)
    s1, s2 = coverage_sets(a, pts)
    frac = covered_fraction_mc(a, mc_samples, seed)
    return ChamberScan(a, pts, s1, s2, frac, mc_samples)
