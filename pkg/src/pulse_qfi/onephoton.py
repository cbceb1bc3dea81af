"""Exact single-photon dynamics of a two-level atom driven by a pulse.

The atom couples with rate ``Gamma`` to the pulse continuum and with
``Gamma_perp`` to all other modes.  Writing ``kappa = (Gamma + Gamma_perp) / 2``
and

    A(t) = int^t exp(-kappa (t - s)) xi(s) ds,        B = dA/dGamma,

the excited amplitude is ``psi_e = -sqrt(Gamma) A`` and the pulse wavepacket is
``xi(tau) - Gamma Theta(t - tau) A(tau)``.  ``A`` and ``B`` obey

    A' = -kappa A + xi,        B' = -kappa B - A / 2,

which we integrate together with the running integrals of ``A**2``, ``A B``,
``B**2``, ``xi A`` and ``xi B`` over the pulse support.  After the support the
forcing vanishes and every quantity continues in closed form, so ``t -> inf``
is exact.

Times are handled internally in units of the pulse parameter ``T``; every
Fisher information returned here is the dimensionless ``Gamma**2 Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from . import pulses
from .errors import DomainError, ResolutionError
from .pulses import CouplingConfig, PulseShape

__all__ = [
    "SinglePhotonSolution",
    "QFIDecomposition",
    "solve",
    "qfi_decomposition",
    "asymptotic_sweep",
    "closed_form",
    "convergence_check",
]

RTOL = 1e-12
ATOL = 1e-15

# state vector layout
_A, _B, _AA, _AB, _BB, _XA, _XB = range(7)


def _rhs_factory(xi_fn, kappa):
    def rhs(t, y):
        x = float(xi_fn(t))
        a, b = y[_A], y[_B]
        return [
            -kappa * a + x,
            -kappa * b - 0.5 * a,
            a * a,
            a * b,
            b * b,
            x * a,
            x * b,
        ]

    return rhs


def _tail(y1: np.ndarray, s, kappa: float) -> np.ndarray:
    """Closed-form continuation a time ``s >= 0`` after the forcing has stopped."""
    s = np.asarray(s, dtype=float)
    a1, b1 = y1[_A], y1[_B]
    x = 2.0 * kappa * s
    with np.errstate(over="ignore", invalid="ignore"):
        decay = np.exp(-kappa * s)
        ex = np.exp(-x)
        m = -np.expm1(-x)
        e0 = m / (2 * kappa)
        e1 = np.where(np.isinf(s), 1.0, m - x * ex) / (2 * kappa) ** 2
        e2 = np.where(np.isinf(s), 2.0, 2 * m - ex * x * (x + 2)) / (2 * kappa) ** 3
        out = np.empty((7,) + s.shape)
        out[_A] = a1 * decay
        finite_s = np.where(np.isinf(s), 0.0, s)
        out[_B] = np.where(np.isinf(s), 0.0, decay * (b1 - 0.5 * a1 * finite_s))
    out[_AA] = y1[_AA] + a1 * a1 * e0
    out[_AB] = y1[_AB] + a1 * b1 * e0 - 0.5 * a1 * a1 * e1
    out[_BB] = y1[_BB] + b1 * b1 * e0 - a1 * b1 * e1 + 0.25 * a1 * a1 * e2
    out[_XA] = y1[_XA]
    out[_XB] = y1[_XB]
    return out


@dataclass(frozen=True)
class QFIDecomposition:
    """Dimensionless Fisher information ``Gamma**2 Q`` and its pieces at one time."""

    total: float
    classical: float
    quantum: float
    c_orig: float
    p_gamma: float
    p_e: float


class SinglePhotonSolution:
    """Solution of the single-photon problem for one ``(shape, Gamma, Gamma_perp)``.

    Construct through :func:`solve`.  All public methods take physical times
    (same units as ``shape.duration``).
    """

    def __init__(self, shape: PulseShape, gamma_T: float, gamma_perp_T: float, rtol: float = RTOL):
        self.shape = shape
        self.gamma_T = float(gamma_T)
        self.gamma_perp_T = float(gamma_perp_T)
        self._unit = shape.unit()
        self._kappa = 0.5 * (self.gamma_T + self.gamma_perp_T)
        lo, hi = pulses.support(self._unit)
        self._lo, self._hi = lo, hi
        self._segments = []
        self._y_end = np.zeros(7)
        if self.gamma_T > 0:
            self._integrate(rtol)

    # -- integration ---------------------------------------------------
    def _integrate(self, rtol):
        unit = self._unit
        if unit.kind is pulses.ShapeKind.SAMPLED:
            ts, amp = unit.samples
            xi_fn = lambda t: np.interp(t, ts, amp)  # noqa: E731
            max_step = ts[1] - ts[0]
        else:
            xi_fn = lambda t: pulses.amplitude(unit, t)  # noqa: E731
            max_step = np.inf
        rhs = _rhs_factory(xi_fn, self._kappa)
        cuts = [self._lo] + [b for b in pulses.breakpoints(unit) if self._lo < b < self._hi] + [self._hi]
        y = np.zeros(7)
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            sol = solve_ivp(
                rhs, (t0, t1), y, method="DOP853", rtol=rtol, atol=ATOL,
                dense_output=True, max_step=max_step,
            )
            if sol.status != 0:
                raise ResolutionError(f"single-photon integration failed: {sol.message}")
            self._segments.append((t0, t1, sol.sol))
            y = sol.y[:, -1]
        self._y_end = y

    def _state_unit(self, tau) -> np.ndarray:
        """State vector at unit times ``tau`` (array), shape ``(7,) + tau.shape``."""
        tau = np.asarray(tau, dtype=float)
        flat = tau.reshape(-1)
        out = np.zeros((7, flat.size))
        if self.gamma_T > 0:
            late = flat >= self._hi
            if np.any(late):
                out[:, late] = _tail(self._y_end, flat[late] - self._hi, self._kappa)
            for t0, t1, dense in self._segments:
                sel = (flat >= t0) & (flat < t1)
                if np.any(sel):
                    out[:, sel] = dense(flat[sel])
        return out.reshape((7,) + tau.shape)

    def _tau(self, t):
        return (np.asarray(t, dtype=float) - self.shape.arrival) / self.shape.duration

    # -- physical quantities (dimensionless, T = 1 inside) ----------------
    def components(self, t) -> dict:
        """Raw unit-time integrals at time ``t``; mostly for diagnostics and tests."""
        y = self._state_unit(self._tau(t))
        return dict(zip(("A", "B", "AA", "AB", "BB", "XA", "XB"), y))

    def psi_e(self, t):
        """Excited amplitude ``psi_e(t)`` (dimensionless)."""
        y = self._state_unit(self._tau(t))
        return -math.sqrt(self.gamma_T) * y[_A]

    def p_e(self, t):
        return self.psi_e(t) ** 2

    def dpsi_e(self, t):
        """``T dpsi_e/d(Gamma T)``, i.e. ``d psi_e / d(Gamma T)`` at fixed ``Gamma_perp``."""
        y = self._state_unit(self._tau(t))
        g = self.gamma_T
        if g == 0:
            return np.full_like(y[_A], np.inf)
        return -(0.5 * y[_A] / math.sqrt(g) + math.sqrt(g) * y[_B])

    def environment_norm(self, t):
        y = self._state_unit(self._tau(t))
        return self.gamma_T * self.gamma_perp_T * y[_AA]

    def pulse_norm(self, t):
        """``||psi~_g^P||**2``, the norm of the one-photon pulse component."""
        y = self._state_unit(self._tau(t))
        g = self.gamma_T
        return 1.0 - 2 * g * y[_XA] + g * g * y[_AA]

    def total_norm(self, t):
        return self.p_e(t) + self.pulse_norm(t) + self.environment_norm(t)

    def p_gamma(self, t):
        """Probability that no photon remains in the pulse continuum."""
        y = self._state_unit(self._tau(t))
        return self.gamma_T * (y[_A] ** 2 + self.gamma_perp_T * y[_AA])

    def original_overlap(self, t):
        """``<xi | psi~_g^P>``: amplitude left in the incoming mode."""
        y = self._state_unit(self._tau(t))
        return 1.0 - self.gamma_T * y[_XA]

    def wavepacket(self, t: float, tau) -> np.ndarray:
        """One-photon pulse amplitude ``xi(tau) + sqrt(Gamma) Theta(t - tau) psi_e(tau)``."""
        tau = np.asarray(tau, dtype=float)
        y = self._state_unit(self._tau(tau))
        xi = pulses.amplitude(self.shape, tau)
        emitted = self.gamma_T * y[_A] / math.sqrt(self.shape.duration)
        return xi - np.where(tau <= t, emitted, 0.0)

    def max_p_e(self) -> tuple[float, float]:
        """``(t*, max_t p_e)``; the maximum lies inside the pulse support."""
        if self.gamma_T == 0:
            return self.shape.arrival, 0.0
        grid = np.linspace(self._lo, self._hi, 4001)
        pe = self.gamma_T * self._state_unit(grid)[_A] ** 2
        k = int(np.argmax(pe))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, grid.size - 1)]
        if b > a:
            res = minimize_scalar(
                lambda u: -self.gamma_T * self._state_unit(np.array([u]))[_A][0] ** 2,
                bounds=(a, b), method="bounded", options={"xatol": 1e-11},
            )
            if -res.fun > pe[k]:
                return self.shape.arrival + res.x * self.shape.duration, float(-res.fun)
        return self.shape.arrival + grid[k] * self.shape.duration, float(pe[k])

    def t_end(self) -> float:
        """A finite time after which the dynamics has relaxed (used for trajectories)."""
        width = pulses.temporal_width(self._unit)
        span = max(8 * width, 12.0 / max(2 * self._kappa, 1e-300))
        return self.shape.arrival + (self._hi + span) * self.shape.duration


def solve(shape: PulseShape, cfg: CouplingConfig) -> SinglePhotonSolution:
    """Solve the single-photon dynamics for ``Gamma T = cfg.gamma_T``."""
    return SinglePhotonSolution(shape, cfg.gamma_T, cfg.gamma_T * cfg.gamma_perp_ratio)


def solve_rates(shape: PulseShape, gamma_T: float, gamma_perp_T: float, rtol: float = RTOL):
    """Like :func:`solve` but with an absolute ``Gamma_perp T`` (held fixed in derivatives)."""
    if gamma_T < 0 or gamma_perp_T < 0:
        raise DomainError("rates must be non-negative")
    return SinglePhotonSolution(shape, gamma_T, gamma_perp_T, rtol)


def _decomposition_from_state(y, g, gp) -> QFIDecomposition:
    a, b = y[_A], y[_B]
    P = a * a + gp * y[_AA]
    dP = 2 * a * b + 2 * gp * y[_AB]
    p = g * P
    dp = P + g * dP  # d p_gamma / dGamma
    D = y[_AA] + 2 * g * y[_AB] + g * g * y[_BB]  # ||d psi~_g^P||^2
    one_minus_p = 1.0 - p
    if P > 0:
        classical = g * dp * dp / (P * one_minus_p)
        total = g * dp * dp / P + 4 * g * g * D
    else:
        classical = 0.0
        total = 4 * g * g * D
    quantum = g * g * (4 * D - dp * dp / one_minus_p)
    S = y[_XA]
    dO = -(S + g * y[_XB])
    denom = S * (2 - g * S)
    c_orig = 4 * g * dO * dO / denom if S != 0 else 0.0
    return QFIDecomposition(
        total=float(total), classical=float(classical), quantum=float(quantum),
        c_orig=float(c_orig), p_gamma=float(p), p_e=float(g * a * a),
    )


def qfi_decomposition(sol: SinglePhotonSolution, t: float = math.inf) -> QFIDecomposition:
    """Dimensionless QFI split into the photon-loss and wavepacket parts at time ``t``.

    ``total = classical + quantum`` where ``classical`` is the Fisher information
    of the binary photon-loss outcome and ``quantum`` the weighted QFI of the
    conditional pulse state.  ``c_orig`` is the Fisher information of projecting
    onto the incoming mode.
    """
    g = sol.gamma_T
    if g == 0:
        return QFIDecomposition(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    tau = float(sol._tau(t)) if math.isfinite(t) else math.inf
    y = sol._state_unit(np.array([tau]))[:, 0]
    return _decomposition_from_state(y, g, sol.gamma_perp_T)


def asymptotic_sweep(shape: PulseShape, gamma_T_values, gamma_perp_ratio: float = 0.0) -> dict:
    """``t -> inf`` Fisher informations and peak excitation over a list of ``Gamma T``."""
    cols = {k: [] for k in ("gamma_T", "total", "classical", "quantum", "c_orig", "max_p_e")}
    for g in np.atleast_1d(gamma_T_values):
        sol = solve(shape, CouplingConfig(float(g), gamma_perp_ratio))
        d = qfi_decomposition(sol)
        cols["gamma_T"].append(float(g))
        cols["total"].append(d.total)
        cols["classical"].append(d.classical)
        cols["quantum"].append(d.quantum)
        cols["c_orig"].append(d.c_orig)
        cols["max_p_e"].append(sol.max_p_e()[1])
    return {k: np.array(v) for k, v in cols.items()}


def convergence_check(shape: PulseShape, cfg: CouplingConfig, t: float = math.inf) -> float:
    """Largest relative change of the QFI pieces when the tolerance is tightened 100x."""
    gp = cfg.gamma_T * cfg.gamma_perp_ratio
    d1 = qfi_decomposition(solve_rates(shape, cfg.gamma_T, gp, RTOL * 100), t)
    d2 = qfi_decomposition(solve_rates(shape, cfg.gamma_T, gp, RTOL), t)
    rel = 0.0
    for k in ("total", "classical", "quantum", "c_orig"):
        a, b = getattr(d1, k), getattr(d2, k)
        rel = max(rel, abs(a - b) / max(abs(b), 1e-300))
    return rel


# ---------------------------------------------------------------------------
# Closed forms for t0 = 0 and Gamma_perp = 0 (x = Gamma T, s = Gamma t)


def closed_form(kind, x: float, s: float | None = None) -> dict:
    """Closed-form excitation, QFI and original-mode CFI for the analytic shapes.

    Returns ``{"qfi": Gamma**2 Q_inf, "c_orig": Gamma**2 C_orig}`` and, if ``s``
    (``= Gamma t``) is given, ``"p_e"``.  Missing entries mean no closed form.
    """
    kind = pulses.ShapeKind(kind)
    out: dict = {}
    K = pulses.ShapeKind
    if kind is K.RECTANGULAR:
        h = math.exp(x / 2)
        out["qfi"] = 8 * (2 - math.exp(-x / 2) * (x + 2)) / x
        out["c_orig"] = 2 * (x - 2 * h + 2) ** 2 / ((h - 1) * (h * (x - 2) + 2))
        if s is not None:
            u = min(max(s, 0.0), x)
            out["p_e"] = 4 * math.exp(-s) * (math.exp(u / 2) - 1) ** 2 / x
    elif kind in (K.RISING_EXP, K.DECAYING_EXP):
        out["qfi"] = 8 * x / (x + 1) ** 2
        out["c_orig"] = 4 * x / (x + 1) ** 2
        if s is not None:
            if kind is K.RISING_EXP:
                out["p_e"] = 4 * x * (math.exp(s / x) if s <= 0 else math.exp(-s)) / (x + 1) ** 2
            elif s <= 0:
                out["p_e"] = 0.0
            elif abs(x - 1) < 1e-12:
                out["p_e"] = s * s * math.exp(-s)
            else:
                out["p_e"] = 4 * x * math.exp(-s) / (x - 1) ** 2 * math.expm1(s * (x - 1) / (2 * x)) ** 2
    elif kind is K.SYMMETRIC_EXP:
        out["qfi"] = 64 * x / (x + 2) ** 3
        out["c_orig"] = 64 * x / ((x + 2) ** 2 * (x + 4))
        if s is not None:
            if s <= 0:
                out["p_e"] = 4 * x * math.exp(2 * s / x) / (x + 2) ** 2
            else:
                out["p_e"] = (
                    4 * x * math.exp(-s) / (x * x - 4) ** 2
                    * ((x + 2) * math.exp(s * (1 - 2 / x) / 2) - 4) ** 2
                )
    elif kind is K.GAUSSIAN:
        if s is not None:
            from scipy.special import erf

            out["p_e"] = (
                math.sqrt(math.pi / 2) * x * math.exp((x * x - 2 * s) / 2)
                * (erf(s / (2 * x) - x / 2) + 1) ** 2
            )
    else:
        raise DomainError(f"no closed form for {kind.value}")
    return out
