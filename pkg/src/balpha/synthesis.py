"""Numerical synthesis oracle for circuits built from B^alpha and local gates.

Every search works in the magic basis, where a local gate ``k1 x k2`` becomes
a real SO(4) matrix.  SO(4) is parametrised by a pair of unit quaternions
(left and right multiplication), eight numbers per local pair.  The objective
is the residual vector ``(Re dG1, Im dG1, dG2)`` between the circuit and the
target class; the reported distance is ``|dG1| + |dG2|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .family import SpecLike, as_spec, balpha_gate
from .gates import MAGIC, MAGIC_DAG, check_unitary, kron_factor
from .weyl import LocalInvariants, invariants_from_matrix

_IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
# iterations per progress check, and the relative gain per check below which a start stops
_CHUNK = 100
_STALL = 1e-3
_LAMBDA_MAX = 1e16


@dataclass(frozen=True)
class OptimizerOptions:
    starts: int = 32
    max_iterations: int = 2000
    threshold: float = 1e-6
    seed: int = 0


@dataclass(frozen=True)
class SynthesisResult:
    success: bool
    locals: list[tuple[np.ndarray, np.ndarray]]
    distance: float
    iterations: int
    starts_used: int
    threshold: float = 1e-6
    circuit: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        def block(k):
            return [[[float(z.real), float(z.imag)] for z in row] for row in k]

        return {
            "success": self.success,
            "distance": self.distance,
            "threshold": self.threshold,
            "iterations": self.iterations,
            "starts_used": self.starts_used,
            "locals": [[block(a), block(b)] for a, b in self.locals],
        }


def _left(p: np.ndarray) -> np.ndarray:
    a, b, c, d = p
    return np.array([[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]])


def _right(q: np.ndarray) -> np.ndarray:
    a, b, c, d = q
    return np.array([[a, -b, -c, -d], [b, a, d, -c], [c, -d, a, b], [d, c, -b, a]])


# both maps are linear in the quaternion, so keep one basis matrix per component
_LB = np.array([_left(e) for e in np.eye(4)])
_RB = np.array([_right(e) for e in np.eye(4)])


def so4(params: np.ndarray) -> np.ndarray:
    """SO(4) element from eight numbers (two quaternions, normalised here)."""
    p = params[:4] / np.linalg.norm(params[:4])
    q = params[4:8] / np.linalg.norm(params[4:8])
    return np.tensordot(p, _LB, 1) @ np.tensordot(q, _RB, 1)


def so4_to_local(o: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Magic-basis SO(4) matrix to the SU(2) pair of the matching local gate."""
    _, a, b = kron_factor(MAGIC @ o @ MAGIC_DAG)
    return a, b


def _gram_invariants(p: np.ndarray) -> tuple[complex, complex]:
    """(G1, G2) of the gate whose magic-basis form is ``p``."""
    m = p.T @ p
    det = np.linalg.det(p)
    tr = np.trace(m)
    return tr * tr / (16 * det), (tr * tr - np.trace(m @ m)) / (4 * det)


# A builder maps the orthogonal factors to the magic-basis circuit P and, for
# each factor k, matrices (A_k, B_k) with P = A_k O_k B_k.
Builder = Callable[[list[np.ndarray]], tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]]


class _Objective:
    """Invariant residual and its exact Jacobian over SO(4)^n (quaternion pairs).

    det P is fixed (every factor is in SO(4) and the fixed matrices are
    unimodular), so G1 and G2 are polynomials in P divided by a constant.
    """

    def __init__(self, build: Builder, n_locals: int, target: LocalInvariants):
        self.build = build
        self.n = n_locals
        self.target = target
        self.size = 3
        self._x = None

    def _eval(self, x: np.ndarray):
        if self._x is not None and np.array_equal(x, self._x):
            return
        quats = []
        os_ = []
        for i in range(self.n):
            p, q = x[8 * i : 8 * i + 4], x[8 * i + 4 : 8 * i + 8]
            pn, qn = np.linalg.norm(p), np.linalg.norm(q)
            ph, qh = p / pn, q / qn
            lm, rm = np.tensordot(ph, _LB, 1), np.tensordot(qh, _RB, 1)
            quats.append((ph, qh, pn, qn, lm, rm))
            os_.append(lm @ rm)
        pm, factors = self.build(os_)
        m = pm.T @ pm
        kappa = np.linalg.det(pm)
        tr = np.trace(m)
        g1 = tr * tr / (16 * kappa)
        g2 = (tr * tr - np.sum(m * m)) / (4 * kappa)
        res = np.zeros(self.size)
        res[:3] = g1.real - self.target.g1.real, g1.imag - self.target.g1.imag, g2.real - self.target.g2
        # dG = sum_ij Gamma_ij dP_ij
        gam1 = tr * pm / (4 * kappa)
        gam2 = (tr * pm - pm @ m) / kappa
        jac = np.zeros((self.size, x.size))
        for i, ((ph, qh, pn, qn, lm, rm), (a, b)) in enumerate(zip(quats, factors)):
            for row, gam, parts in ((0, gam1, (np.real, np.imag)), (2, gam2, (np.real,))):
                w = a.T @ gam @ b.T  # dG / dO
                gp = np.einsum("aij,jk,ik->a", _LB, rm, w)
                gq = np.einsum("ij,ajk,ik->a", lm, _RB, w)
                gp = (gp - ph * (ph @ gp)) / pn
                gq = (gq - qh * (qh @ gq)) / qn
                for off, part in enumerate(parts):
                    jac[row + off, 8 * i : 8 * i + 4] = part(gp)
                    jac[row + off, 8 * i + 4 : 8 * i + 8] = part(gq)
        self._x = x.copy()
        self._res, self._jac = res, jac

    def residual(self, x: np.ndarray) -> np.ndarray:
        self._eval(x)
        return self._res

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        self._eval(x)
        return self._jac

    def distance(self, x: np.ndarray) -> float:
        r = self.residual(x)
        return float(abs(complex(r[0], r[1])) + abs(r[2]))


def _levenberg_marquardt(obj: _Objective, x: np.ndarray, iterations: int) -> tuple[np.ndarray, bool, int]:
    """Run up to ``iterations`` damped Gauss-Newton steps from ``x``.

    The residual has three rows, so each step solves the 3x3 dual system
    ``(J J^T + lam I) y = r`` and moves by ``-J^T y``.  Unlike library LM
    drivers this is bitwise reproducible regardless of buffer alignment.
    Returns the final point, whether no further progress is possible, and
    the number of steps taken.
    """
    r, jac = obj.residual(x), obj.jacobian(x)
    cost = float(r @ r)
    lam = 1e-3 * max(float(np.max(np.sum(jac * jac, axis=1))), 1e-12)
    nu = 2.0
    for k in range(iterations):
        if cost == 0.0:
            return x, True, k
        step = -jac.T @ np.linalg.solve(jac @ jac.T + lam * np.eye(3), r)
        if np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(x)):
            return x, True, k
        trial = x + step
        # every quaternion enters normalised, so rescaling changes nothing but conditioning
        for i in range(0, trial.size, 4):
            trial[i : i + 4] /= np.linalg.norm(trial[i : i + 4])
        rt = obj.residual(trial)
        new_cost = float(rt @ rt)
        lin = r + jac @ step
        predicted = cost - float(lin @ lin)
        if new_cost < cost and predicted > 0:
            rho = (cost - new_cost) / predicted
            x, r, jac, cost = trial, rt, obj.jacobian(trial), new_cost
            lam *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
            nu = 2.0
        else:
            lam *= nu
            nu *= 2
            if lam > _LAMBDA_MAX:
                return x, True, k + 1
    return x, False, iterations


def _multistart(
    build: Builder,
    n_locals: int,
    target: LocalInvariants,
    options: OptimizerOptions,
) -> tuple[bool, list[np.ndarray], float, int, int]:
    """Minimise the invariant residual of ``build(orthogonals)`` over SO(4)^n_locals."""
    obj = _Objective(build, n_locals, target)
    best_x, best_d, total, used = None, np.inf, 0, 0
    for s in range(options.starts):
        if s == 0:
            x0 = np.tile(np.concatenate([_IDENTITY_QUAT, _IDENTITY_QUAT]), n_locals)
        else:
            x0 = np.random.default_rng(options.seed + s).normal(size=8 * n_locals)
        used += 1
        x, nit = x0, 0
        d = obj.distance(x0)
        while nit < options.max_iterations and d > options.threshold * 1e-6:
            x, done, n = _levenberg_marquardt(obj, x, min(_CHUNK, options.max_iterations - nit))
            nit, prev = nit + n, d
            d = obj.distance(x)
            # converged, or stuck at a non-zero minimum where progress is linear
            if done or d > (1 - _STALL) * prev:
                break
        total += nit
        if d < best_d:
            best_x, best_d = x, d
        if best_d <= options.threshold:
            break
    orth = [so4(best_x[8 * i : 8 * i + 8]) for i in range(n_locals)]
    return best_d <= options.threshold, orth, best_d, total, used


def _finish(ok, orth, circuit_fn, target, options, total, used) -> SynthesisResult:
    pairs = [so4_to_local(o) for o in orth]
    circuit = circuit_fn(pairs)
    # report the distance of the circuit rebuilt in the computational basis
    d = invariants_from_matrix(circuit).distance(target)
    return SynthesisResult(
        success=bool(ok and d <= options.threshold),
        locals=pairs,
        distance=float(d),
        iterations=int(total),
        starts_used=int(used),
        threshold=options.threshold,
        circuit=circuit,
    )


def synthesize_two_applications(
    spec: SpecLike, target: np.ndarray, options: OptimizerOptions | None = None
) -> SynthesisResult:
    """Search k1, k2 with B^a (k1 x k2) B^a in the local class of ``target``."""
    options = options or OptimizerOptions()
    target = check_unitary(target, 4)
    goal = invariants_from_matrix(target)
    b = balpha_gate(as_spec(spec))
    d = np.diag(MAGIC_DAG @ b @ MAGIC)
    dm = np.diag(d)

    def build(os_):
        return (d[:, None] * os_[0]) * d[None, :], [(dm, dm)]

    ok, orth, _, total, used = _multistart(build, 1, goal, options)

    def circuit(pairs):
        (ka, kb), = pairs
        return b @ np.kron(ka, kb) @ b

    return _finish(ok, orth, circuit, goal, options, total, used)


def synthesize_three_applications(
    spec: SpecLike, target: np.ndarray, options: OptimizerOptions | None = None
) -> SynthesisResult:
    """Search B^a (k1 x k2) B^a (k3 x k4) B^a in the local class of ``target``."""
    options = options or OptimizerOptions()
    target = check_unitary(target, 4)
    goal = invariants_from_matrix(target)
    b = balpha_gate(as_spec(spec))
    d = np.diag(MAGIC_DAG @ b @ MAGIC)

    dm = np.diag(d)

    def build(os_):
        left = (d[:, None] * os_[0]) * d[None, :]
        return left @ os_[1] * d[None, :], [(dm, (d[:, None] * os_[1]) * d[None, :]), (left, dm)]

    ok, orth, _, total, used = _multistart(build, 2, goal, options)

    def circuit(pairs):
        (ka, kb), (kc, kd) = pairs
        return b @ np.kron(ka, kb) @ b @ np.kron(kc, kd) @ b

    return _finish(ok, orth, circuit, goal, options, total, used)


def conjugation_witness(u: np.ndarray, options: OptimizerOptions | None = None) -> SynthesisResult:
    """Find B' = (l1 x l2) B (l3 x l4) with u^dag B' u in the local class of B.

    ``locals`` of the result holds ``[(l1, l2), (l3, l4)]``.
    """
    options = options or OptimizerOptions()
    u = check_unitary(u, 4)
    b = balpha_gate(1.0)
    goal = invariants_from_matrix(b)
    um = MAGIC_DAG @ u @ MAGIC
    umd = um.conj().T
    d = np.diag(MAGIC_DAG @ b @ MAGIC)

    dm = np.diag(d)

    def build(os_):
        mid = os_[0] * d[None, :]
        return umd @ mid @ os_[1] @ um, [(umd, dm @ os_[1] @ um), (umd @ mid, um)]

    ok, orth, _, total, used = _multistart(build, 2, goal, options)

    def circuit(pairs):
        (l1, l2), (l3, l4) = pairs
        bp = np.kron(l1, l2) @ b @ np.kron(l3, l4)
        return u.conj().T @ bp @ u

    return _finish(ok, orth, circuit, goal, options, total, used)
