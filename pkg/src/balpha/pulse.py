"""Two-pair bichromatic drive: Magnus coefficients, closure and Rabi design.

Two ions (m, n) = (0, 1) share one motional mode.  In the interaction picture

    H(t) = sum_j F_j [a^dag f_j(t) + a f_j(t)^*],   j in {x, y}
    F_x  = 1/2 sum_m eta_m Omega^x_m sigma_x^m,   f_x(t) = exp(-i (delta_x t + psi_x))

and likewise for y.  The Magnus series truncated after the commutator term is

    U(t) = exp[ sum_m zeta^x_m sigma_x^m + sum_n zeta^y_n sigma_y^n
                - i sum_{m,n} chi^x_{mn} sigma_x^m sigma_x^n - i sum_{m,n} chi^y_{mn} ...
                - i sum_{m != n} (Lambda_{mn} sigma_y^m sigma_x^n + Lambda'_{mn} sigma_x^m sigma_y^n)
                + i sum_m xi_m sigma_z^m ]

with ``zeta = disp a^dag - disp^* a`` and ``xi_m = beta1 a^dag^2 + beta2 a^dag a + h.c.``.
The spin-phonon term already carries the -i of the first Magnus term inside
``disp``.  ``chi`` arrays hold one entry per ordered ion pair, so the physical
sigma_x sigma_x coupling angle between the two ions is ``chi[0, 1] + chi[1, 0]``
(:attr:`MagnusCoefficients.coupling_x`).  Symmetrising ``a a^dag`` also leaves
a c-number ``Re(beta2)`` multiplying ``sigma_z^m`` (:attr:`MagnusCoefficients.z_shift`).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Callable, Literal

import numpy as np
from scipy import integrate

from .errors import ConfigError, QuadratureFailure, ResidualTooLarge, SingularDenominator
from .family import SpecLike, as_spec, balpha_gate
from .weyl import canonical_gate, invariant_distance

CLOSURE_TOL = 1e-10
_DETUNING_MARGIN = 1e-9


@dataclass(frozen=True)
class TrapConfig:
    """Drive parameters for one ion pair.

    Frequencies are angular (rad/s), times in seconds, phases in radians.
    ``eta``, ``rabi_x`` and ``rabi_y`` are (ion m, ion n) pairs.
    """

    eta: tuple[float, float]
    rabi_x: tuple[float, float]
    rabi_y: tuple[float, float]
    delta_x: float
    delta_y: float
    tau: float
    psi_x: float = 0.0
    psi_y: float = 0.0
    n_loops: int = 1

    def __post_init__(self):
        for name in ("eta", "rabi_x", "rabi_y"):
            val = tuple(float(v) for v in getattr(self, name))
            if len(val) != 2:
                raise ConfigError(f"{name} needs exactly two entries (ion m, ion n)")
            object.__setattr__(self, name, val)
        for name in ("delta_x", "delta_y", "tau", "psi_x", "psi_y"):
            object.__setattr__(self, name, float(getattr(self, name)))
        values = [*self.eta, *self.rabi_x, *self.rabi_y, self.delta_x, self.delta_y, self.tau]
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("non-finite trap parameter")
        if min(self.eta) <= 0:
            raise ConfigError("Lamb-Dicke parameters must be positive")
        if self.tau <= 0:
            raise ConfigError("gate time must be positive")
        if int(self.n_loops) != self.n_loops or self.n_loops < 1:
            raise ConfigError("n_loops must be an integer >= 1")
        object.__setattr__(self, "n_loops", int(self.n_loops))
        dx, dy = self.delta_x, self.delta_y
        scale = max(abs(dx), abs(dy))
        if dx == 0 or dy == 0:
            raise SingularDenominator("detunings must be non-zero")
        if abs(dx - dy) <= _DETUNING_MARGIN * scale or abs(dx + dy) <= _DETUNING_MARGIN * scale:
            raise SingularDenominator("delta_x = +/- delta_y is a singular point")
        for d in (dx, dy):
            if not 1.0 <= abs(d * self.tau) <= 1e9:
                warnings.warn(
                    f"|delta * tau| = {abs(d * self.tau):.3g} is outside [1, 1e9]; check units",
                    stacklevel=2,
                )

    def replace(self, **changes) -> "TrapConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eta"], d["rabi_x"], d["rabi_y"] = list(self.eta), list(self.rabi_x), list(self.rabi_y)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrapConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown trap config keys: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class MagnusCoefficients:
    """Closed-form (or quadrature) coefficients at time ``t``.

    Per-ion arrays have shape (2,), per-ordered-pair arrays shape (2, 2).
    """

    t: float
    disp_x: np.ndarray
    disp_y: np.ndarray
    chi_x: np.ndarray
    chi_y: np.ndarray
    lam: np.ndarray
    lam_prime: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray

    @property
    def coupling_x(self) -> float:
        return float(self.chi_x[0, 1] + self.chi_x[1, 0])

    @property
    def coupling_y(self) -> float:
        return float(self.chi_y[0, 1] + self.chi_y[1, 0])

    @property
    def z_shift(self) -> np.ndarray:
        return self.beta2.real

    def residuals(self) -> dict[str, float]:
        """Largest magnitude of every coefficient that must vanish at closure."""
        return {
            "disp_x": float(np.max(np.abs(self.disp_x))),
            "disp_y": float(np.max(np.abs(self.disp_y))),
            "lambda": float(np.max(np.abs(self.lam))),
            "lambda_prime": float(np.max(np.abs(self.lam_prime))),
            "beta1": float(np.max(np.abs(self.beta1))),
            "beta2": float(np.max(np.abs(self.beta2))),
        }

    def max_residual(self) -> float:
        return max(self.residuals().values())

    def is_closed(self, tol: float = CLOSURE_TOL) -> bool:
        return self.max_residual() <= tol

    def fields(self) -> dict[str, np.ndarray]:
        return {
            "disp_x": self.disp_x,
            "disp_y": self.disp_y,
            "chi_x": self.chi_x,
            "chi_y": self.chi_y,
            "lambda": self.lam,
            "lambda_prime": self.lam_prime,
            "beta1": self.beta1,
            "beta2": self.beta2,
        }

    def to_dict(self) -> dict:
        def enc(a):
            a = np.asarray(a)
            if np.iscomplexobj(a):
                return {"re": a.real.tolist(), "im": a.imag.tolist()}
            return a.tolist()

        out = {"t": self.t}
        out.update({k: enc(v) for k, v in self.fields().items()})
        out["coupling_x"] = self.coupling_x
        out["coupling_y"] = self.coupling_y
        return out


def _arrays(cfg: TrapConfig):
    eta = np.array(cfg.eta)
    return eta * np.array(cfg.rabi_x), eta * np.array(cfg.rabi_y), eta


def magnus_coefficients(cfg: TrapConfig, t: float) -> MagnusCoefficients:
    """Evaluate the closed forms of every coefficient at time ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    gx, gy, eta = _arrays(cfg)
    dx, dy = cfg.delta_x, cfg.delta_y
    px, py = cfg.psi_x, cfg.psi_y
    e = cmath.exp

    disp_x = gx * e(-1j * px) / (2 * dx) * (e(-1j * dx * t) - 1)
    disp_y = gy * e(-1j * py) / (2 * dy) * (e(-1j * dy * t) - 1)

    chi_x = np.outer(gx, gx) / (4 * dx**2) * (dx * t - math.sin(dx * t))
    chi_y = np.outer(gy, gy) / (4 * dy**2) * (dy * t - math.sin(dy * t))

    dpy = py - px
    lam_bracket = (math.sin((dy - dx) * t + dpy) - math.sin(dpy)) / ((dy - dx) * dx) - (
        math.sin(dy * t + dpy) - math.sin(dpy)
    ) / (dx * dy)
    lam = np.outer(gy, gx) / 4 * lam_bracket
    dpx = px - py
    lamp_bracket = (math.sin((dx - dy) * t + dpx) - math.sin(dpx)) / ((dx - dy) * dy) - (
        math.sin(dx * t + dpx) - math.sin(dpx)
    ) / (dx * dy)
    lam_prime = np.outer(gx, gy) / 4 * lamp_bracket

    pref = gx * gy / 4  # eta_m^2 Omega^x_m Omega^y_m / 4
    s = dx + dy
    b1 = (
        (1 - e(-1j * s * t)) / s * (1 / dx - 1 / dy)
        - (e(-1j * dx * t) - e(-1j * dy * t)) / (dx * dy)
    ) * e(-1j * (px + py))
    b2 = e(-1j * (py - px)) * (
        (e(-1j * (dy - dx) * t) - 1) / (dx * (dy - dx)) - (e(-1j * dy * t) - 1) / (dx * dy)
    ) - e(-1j * (px - py)) * (
        (e(-1j * (dx - dy) * t) - 1) / (dy * (dx - dy)) - (e(-1j * dx * t) - 1) / (dx * dy)
    )
    return MagnusCoefficients(
        float(t), disp_x, disp_y, chi_x, chi_y, lam, lam_prime, pref * b1, pref * b2
    )


# --- quadrature oracle ----------------------------------------------------


def _quad(f: Callable[[float], complex], a: float, b: float) -> tuple[complex, float]:
    val, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400, complex_func=True)
    return val, err


def _single(f: Callable[[float], complex], t: float, tol: float) -> complex:
    """int_0^t f(t1) dt1, integrated on the unit interval."""
    val, err = _quad(lambda u: f(t * u), 0.0, 1.0)
    if abs(err) > tol:
        raise QuadratureFailure(f"single integral error estimate {abs(err):.2e} > {tol:.0e}")
    return val * t


def _double(f: Callable[[float, float], complex], t: float, tol: float) -> complex:
    """int_0^t dt1 int_0^t1 dt2 f(t1, t2), integrated on the unit triangle."""
    worst = [0.0]

    def inner(u1: float) -> complex:
        val, err = _quad(lambda u2: f(t * u1, t * u2), 0.0, u1)
        worst[0] = max(worst[0], abs(err))
        return val

    val, err = _quad(inner, 0.0, 1.0)
    if max(abs(err), worst[0]) > tol:
        raise QuadratureFailure(f"double integral error estimate {max(abs(err), worst[0]):.2e} > {tol:.0e}")
    return val * t * t


def quadrature_oracle(cfg: TrapConfig, t: float, tol: float = 1e-10) -> MagnusCoefficients:
    """Same coefficient set as :func:`magnus_coefficients`, by numerical integration.

    Each coefficient is read off the operator algebra of the first two Magnus
    terms as a scalar (double) integral of the drive phases and integrated
    adaptively; nothing here uses the closed forms.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    gx, gy, _ = _arrays(cfg)
    dx, dy = cfg.delta_x, cfg.delta_y
    px, py = cfg.psi_x, cfg.psi_y

    def fx(s):
        return cmath.exp(-1j * (dx * s + px))

    def fy(s):
        return cmath.exp(-1j * (dy * s + py))

    if t == 0:
        z2, z22 = np.zeros(2, complex), np.zeros((2, 2))
        return MagnusCoefficients(0.0, z2, z2.copy(), z22, z22.copy(), z22.copy(), z22.copy(), z2.copy(), z2.copy())

    # -i int H dt: coefficient of a^dag sigma_j^m is -i (g_m / 2) int f_j
    ix = _single(fx, t, tol)
    iy = _single(fy, t, tol)
    disp_x = -0.5j * gx * ix
    disp_y = -0.5j * gy * iy

    # -1/2 int int [H(t1), H(t2)]; [g_j(t1), g_k(t2)] = f_j(t1)^* f_k(t2) - f_j(t1) f_k(t2)^*
    def comm(fa, fb):
        return lambda t1, t2: (fa(t1).conjugate() * fb(t2) - fa(t1) * fb(t2).conjugate()) / 2j

    kxx = _double(comm(fx, fx), t, tol).real
    kyy = _double(comm(fy, fy), t, tol).real
    kxy = _double(comm(fx, fy), t, tol).real
    kyx = _double(comm(fy, fx), t, tol).real
    chi_x = np.outer(gx, gx) / 4 * kxx
    chi_y = np.outer(gy, gy) / 4 * kyy
    lam_prime = np.outer(gx, gy) / 4 * kxy
    lam = np.outer(gy, gx) / 4 * kyx

    # sigma_z parts from [F_x, F_y] times the anticommutators of the mode operators
    sq = _double(lambda t1, t2: fx(t1) * fy(t2) - fy(t1) * fx(t2), t, tol)
    num = _double(lambda t1, t2: fy(t1) * fx(t2).conjugate() - fx(t1) * fy(t2).conjugate(), t, tol)
    pref = gx * gy / 4
    return MagnusCoefficients(
        float(t), disp_x, disp_y, chi_x, chi_y, lam, lam_prime, -pref * sq, pref * num
    )


# --- design ---------------------------------------------------------------


def solve_closure(tau: float, n_loops: int) -> tuple[float, float]:
    """Detunings with delta_x tau = 4 N pi and delta_y tau = 2 N pi."""
    if tau <= 0:
        raise ConfigError("tau must be positive")
    if int(n_loops) != n_loops or n_loops < 1:
        raise ConfigError("n_loops must be an integer >= 1")
    return 4 * n_loops * math.pi / tau, 2 * n_loops * math.pi / tau


def solve_rabi(
    spec: SpecLike,
    n_loops: int,
    eta_m: float,
    eta_n: float,
    delta_x: float,
    split: Literal["symmetric"] | float = "symmetric",
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Rabi frequencies with eta_m eta_n Ox_m Ox_n / delta_x^2 = alpha / (8N) and Ox Ox = 4 Oy Oy.

    ``split`` is ``"symmetric"`` (equal frequencies on both ions) or a ratio
    ``r = Omega_m / Omega_n`` applied to both pairs.
    """
    a = as_spec(spec).alpha
    if eta_m <= 0 or eta_n <= 0 or n_loops < 1:
        raise ConfigError("eta and n_loops must be positive")
    prod_x = a * delta_x**2 / (8 * n_loops * eta_m * eta_n)
    prod_y = prod_x / 4
    r = 1.0 if split == "symmetric" else float(split)
    if r <= 0:
        raise ConfigError("split ratio must be positive")

    def pair(prod):
        on = math.sqrt(prod / r)
        return (r * on, on)

    return pair(prod_x), pair(prod_y)


def effective_gate(coeffs: MagnusCoefficients, tol: float = CLOSURE_TOL) -> np.ndarray:
    """exp(-i (chi_x XX + chi_y YY)) with the pair couplings of a closed pulse.

    Raises:
        ResidualTooLarge: spin-motion or cross terms survive, so the evolution
            is not a pure two-qubit gate.
    """
    worst = coeffs.max_residual()
    if worst > tol:
        raise ResidualTooLarge(f"largest residual coefficient {worst:.3e} exceeds {tol:.0e}")
    return canonical_gate((-2 * coeffs.coupling_x, -2 * coeffs.coupling_y, 0.0))


@dataclass(frozen=True)
class PulsePlan:
    alpha: float
    config: TrapConfig
    coeffs: MagnusCoefficients
    gate: np.ndarray
    invariant_distance: float
    tol: float = CLOSURE_TOL

    @property
    def chi_x(self) -> float:
        return self.coeffs.coupling_x

    @property
    def chi_y(self) -> float:
        return self.coeffs.coupling_y

    @property
    def residuals(self) -> dict[str, float]:
        return self.coeffs.residuals()

    @property
    def closed(self) -> bool:
        return self.coeffs.is_closed(self.tol)

    def rabi_scaling(self) -> dict[str, float]:
        """Exponents of Omega_x in alpha, N, tau, eta at fixed everything else.

        Omega_x = (4 N pi / tau) sqrt(alpha / (8 N eta_m eta_n)), hence
        Omega_x ~ alpha^1/2 N^1/2 tau^-1 eta^-1 on a symmetric trap.
        """
        return {"alpha": 0.5, "n_loops": 0.5, "tau": -1.0, "eta": -1.0}

    def to_dict(self) -> dict:
        c = self.config
        return {
            "alpha": self.alpha,
            "config": c.to_dict(),
            "chi_x": self.chi_x,
            "chi_y": self.chi_y,
            "target_chi_x": self.alpha * math.pi / 4,
            "target_chi_y": self.alpha * math.pi / 8,
            "rabi_x_product": c.rabi_x[0] * c.rabi_x[1],
            "rabi_y_product": c.rabi_y[0] * c.rabi_y[1],
            "rabi_scaling_exponents": self.rabi_scaling(),
            "residuals": self.residuals,
            "closed": self.closed,
            "invariant_distance": self.invariant_distance,
            "tol": self.tol,
        }


def plan_pulse(
    spec: SpecLike,
    tau: float,
    n_loops: int = 1,
    eta_m: float = 0.1,
    eta_n: float | None = None,
    split: Literal["symmetric"] | float = "symmetric",
    psi_x: float = 0.0,
    psi_y: float = 0.0,
    tol: float = CLOSURE_TOL,
) -> PulsePlan:
    """Closure detunings, Rabi frequencies, coefficients and the resulting gate."""
    spec = as_spec(spec)
    eta_n = eta_m if eta_n is None else eta_n
    dx, dy = solve_closure(tau, n_loops)
    rx, ry = solve_rabi(spec, n_loops, eta_m, eta_n, dx, split)
    cfg = TrapConfig(
        eta=(eta_m, eta_n),
        rabi_x=rx,
        rabi_y=ry,
        delta_x=dx,
        delta_y=dy,
        tau=tau,
        psi_x=psi_x,
        psi_y=psi_y,
        n_loops=n_loops,
    )
    coeffs = magnus_coefficients(cfg, tau)
    gate = effective_gate(coeffs, tol)
    dist = invariant_distance(gate, balpha_gate(spec))
    return PulsePlan(spec.alpha, cfg, coeffs, gate, dist, tol)


def plan_from_dict(d: dict) -> PulsePlan:
    """Rebuild a plan from :meth:`PulsePlan.to_dict` output (recomputes everything)."""
    try:
        cfg = TrapConfig.from_dict(d["config"])
        alpha = float(d["alpha"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid pulse plan: {exc}") from exc
    spec = as_spec(alpha)
    tol = float(d.get("tol", CLOSURE_TOL))
    coeffs = magnus_coefficients(cfg, cfg.tau)
    gate = effective_gate(coeffs, tol)
    return PulsePlan(spec.alpha, cfg, coeffs, gate, invariant_distance(gate, balpha_gate(spec)), tol)
