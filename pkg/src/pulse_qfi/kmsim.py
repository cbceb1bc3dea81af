"""Cascaded-cavity master equation for an arbitrary quantum pulse state.

The pulse is carried by a virtual input cavity feeding the atom and a virtual
output cavity catching the transmitted field.  In the rotating frame of the
cavity-cavity exchange these become the fixed pulse mode ``a`` and an
auxiliary mode ``b`` that only fills while the pulse interacts with the atom:

    H = i sqrt(G) xi (a^+ s - s^+ a) + (i/2) sqrt(G) f1 (b^+ s - s^+ b)
    L = sqrt(G) s - f2 b,         plus  Gp D[s]

with ``f1 = (1 - 2I) xi / sqrt(I (1 - I))``, ``f2 = xi / sqrt(I (1 - I))`` and
``I = int^t xi**2``.  ``f1`` and ``f2`` are switched off where ``I`` or
``1 - I`` drops below ``COEFF_CLAMP`` (the pulse has not arrived or is over).

Time is measured in units of the pulse parameter ``T`` and ``G = Gamma T``.
The full density matrix lives on atom (2) x pulse (N_xi) x auxiliary (N_v).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from . import pulses
from .errors import DomainError, IntegrationError, PositivityError, TruncationError
from .jcshort import FockCoefficients, jc_evolve
from .pulses import PulseShape

__all__ = [
    "KMConfig",
    "KMResult",
    "km_coefficients",
    "km_evolve",
    "reduced_pulse_state",
    "trace_distance",
    "auxiliary_occupation",
    "jc_reduced_state",
]

logger = logging.getLogger(__name__)

COEFF_CLAMP = 1e-12
TRACE_TOL = 1e-5
TAIL_TOL = 1e-6
POSITIVITY_TOL = 1e-5
DENSE_LIMIT = 320


@dataclass(frozen=True)
class KMConfig:
    """Integrator and truncation settings.

    ``dt`` is in units of ``T``; ``n_xi = None`` means photon support + 3.
    """

    dt: float = 1.0 / 100
    n_xi: int | None = None
    n_v: int = 5
    verify: bool = False
    n_checks: int = 8


@dataclass
class KMResult:
    times: np.ndarray
    p_e: np.ndarray
    n_xi: np.ndarray
    n_v: np.ndarray
    trace: np.ndarray
    min_eigenvalue: np.ndarray
    pulse_states: list
    rho_final: np.ndarray
    dims: tuple[int, int, int]
    info: dict = field(default_factory=dict)

    def columns(self) -> dict:
        return {
            "t": self.times, "p_e": self.p_e, "n_xi": self.n_xi, "n_v": self.n_v,
            "trace": self.trace, "min_eigenvalue": self.min_eigenvalue,
        }


def km_coefficients(shape: PulseShape, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(xi, f1, f2)`` at unit times ``t`` for a unit shape."""
    xi = pulses.amplitude(shape, t)
    I, Ic = pulses.intensity_fractions(shape, t)
    ok = np.minimum(I, Ic) >= COEFF_CLAMP
    root = np.sqrt(np.where(ok, I * Ic, 1.0))
    f2 = np.where(ok, xi / root, 0.0)
    f1 = np.where(ok, (Ic - I) * xi / root, 0.0)
    return xi, f1, f2


def _operators(n_xi: int, n_v: int):
    eye2, eyex, eyev = (sps.identity(n, format="csr") for n in (2, n_xi, n_v))
    sm = sps.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |g><e|, basis (g, e)
    ann = lambda n: sps.diags(np.sqrt(np.arange(1, n)), 1, format="csr")  # noqa: E731
    kron3 = lambda a, b, c: sps.kron(sps.kron(a, b), c, format="csr")  # noqa: E731
    s = kron3(sm, eyex, eyev)
    a = kron3(eye2, ann(n_xi), eyev)
    b = kron3(eye2, eyex, ann(n_v))
    sd, ad, bd = s.T.tocsr(), a.T.tocsr(), b.T.tocsr()
    return {
        "s": s,
        "b": b,
        "K1": (ad @ s - sd @ a).tocsr(),
        "K2": (bd @ s - sd @ b).tocsr(),
        "Ns": (sd @ s).tocsr(),
        "Nb": (bd @ b).tocsr(),
        "Na": (ad @ a).tocsr(),
        "Xsb": (sd @ b + bd @ s).tocsr(),
    }


def _dag(x: np.ndarray) -> np.ndarray:
    """Contiguous conjugate transpose (much faster than a strided ``x.conj().T``)."""
    out = np.empty_like(x)
    np.conjugate(x.T, out=out)
    return out


def _initial_rho(state: FockCoefficients, n_xi: int, n_v: int) -> np.ndarray:
    psi = np.zeros(n_xi, dtype=complex)
    m = min(n_xi, state.amplitudes.size)
    psi[:m] = state.amplitudes[:m]
    full = np.kron(np.kron([1.0, 0.0], psi), np.eye(n_v)[0])
    return np.outer(full, full.conj())


def reduced_pulse_state(rho: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """Partial trace over atom and auxiliary mode."""
    na, nx, nv = dims
    r = rho.reshape(na, nx, nv, na, nx, nv)
    return np.einsum("aibajb->ij", r)


def auxiliary_occupation(rho: np.ndarray, dims: tuple[int, int, int]) -> float:
    na, nx, nv = dims
    r = rho.reshape(na, nx, nv, na, nx, nv)
    pv = np.einsum("aibaib->b", r).real
    return float(np.sum(np.arange(nv) * pv))


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """``(1/2) sum |eig(rho1 - rho2)|``; the smaller matrix is zero-padded."""
    n = max(rho1.shape[0], rho2.shape[0])
    a = np.zeros((n, n), dtype=complex)
    b = np.zeros((n, n), dtype=complex)
    a[: rho1.shape[0], : rho1.shape[0]] = rho1
    b[: rho2.shape[0], : rho2.shape[0]] = rho2
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def jc_reduced_state(state: FockCoefficients, gamma_T: float, F_t: float) -> np.ndarray:
    """Reduced pulse state of the short-pulse JC model in units ``T = 1``."""
    e, g, _, _ = jc_evolve(state, gamma_T, F_t)
    return np.outer(e, e.conj()) + np.outer(g, g.conj())


def _default_window(unit: PulseShape) -> tuple[float, float]:
    if unit.kind in (pulses.ShapeKind.GAUSSIAN, pulses.ShapeKind.HERMITE_GAUSS):
        w = 8.0 * pulses.temporal_width(unit)
        return -w, w
    return pulses.support(unit)


def _photon_support(state: FockCoefficients) -> int:
    nz = np.nonzero(np.abs(state.amplitudes) > 0)[0]
    return int(nz[-1]) if nz.size else 0


def _run(state, unit, gamma_T, gamma_perp_T, t_start, t_out, cfg, n_xi, n_v):
    ops = _operators(n_xi, n_v)
    dims = (2, n_xi, n_v)
    rg = math.sqrt(gamma_T)
    s_op, b_op = ops["s"], ops["b"]
    Ns, Nb, Xsb, K1, K2 = ops["Ns"], ops["Nb"], ops["Xsb"], ops["K1"], ops["K2"]
    gtot = gamma_T + gamma_perp_T
    J = math.sqrt(gamma_perp_T) * s_op if gamma_perp_T > 0 else None

    t_end = float(t_out[-1])
    nsteps = max(1, int(math.ceil((t_end - t_start) / cfg.dt - 1e-9)))
    h = (t_end - t_start) / nsteps
    grid = t_start + h * np.arange(nsteps + 1)
    half = grid[:-1] + 0.5 * h
    xi_g, f1_g, f2_g = km_coefficients(unit, grid)
    xi_h, f1_h, f2_h = km_coefficients(unit, half)

    dense = 2 * n_xi * n_v <= DENSE_LIMIT
    conv = (lambda m: m.toarray()) if dense else (lambda m: m)  # noqa: E731
    h0 = conv(-0.5j * gtot * Ns)
    cK1, cK2 = conv(1j * rg * K1), conv(0.5j * rg * K2)
    cNb, cXsb = conv(-0.5j * Nb), conv(0.5j * rg * Xsb)
    cs, cb = conv(rg * s_op), conv(b_op)
    Jm = conv(J) if J is not None else None

    def rhs(rho, xi, f1, f2):
        # d rho = y + y^H with y = -i Heff rho + (1/2) sum_k L_k rho L_k^H
        heff = h0 + xi * cK1 + f1 * cK2 + (f2 * f2) * cNb + f2 * cXsb
        L = cs - f2 * cb
        y = -1j * (heff @ rho) + 0.5 * (L @ _dag(L @ rho))
        if Jm is not None:
            y += 0.5 * (Jm @ _dag(Jm @ rho))
        out = _dag(y)
        out += y
        return out

    out_idx = np.searchsorted(grid, np.asarray(t_out) - 1e-12 * max(1.0, abs(t_end)))
    check_every = max(1, len(t_out) // max(cfg.n_checks, 1))
    rho = _initial_rho(state, n_xi, n_v)
    rec = {k: [] for k in ("p_e", "n_xi", "n_v", "trace", "min_eig")}
    pulse_states = []
    tops = [0.0, 0.0]
    k_out = 0

    def record(rho, k_out):
        diag = np.diag(rho).real
        rec["p_e"].append(float(Ns.diagonal() @ diag))
        rec["n_xi"].append(float(ops["Na"].diagonal() @ diag))
        rec["n_v"].append(float(Nb.diagonal() @ diag))
        rec["trace"].append(float(diag.sum()))
        if k_out % check_every == 0 or k_out == len(t_out) - 1:
            rec["min_eig"].append(float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
        else:
            rec["min_eig"].append(math.nan)
        p = diag.reshape(dims)
        tops[0] = max(tops[0], float(p[:, -1, :].sum()))
        tops[1] = max(tops[1], float(p[:, :, -1].sum()))
        pulse_states.append(reduced_pulse_state(rho, dims))

    while k_out < len(t_out) and out_idx[k_out] == 0:
        record(rho, k_out)
        k_out += 1
    for i in range(nsteps):
        k1 = rhs(rho, xi_g[i], f1_g[i], f2_g[i])
        k2 = rhs(rho + 0.5 * h * k1, xi_h[i], f1_h[i], f2_h[i])
        k3 = rhs(rho + 0.5 * h * k2, xi_h[i], f1_h[i], f2_h[i])
        k4 = rhs(rho + h * k3, xi_g[i + 1], f1_g[i + 1], f2_g[i + 1])
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        while k_out < len(t_out) and out_idx[k_out] == i + 1:
            record(rho, k_out)
            k_out += 1
    rho = 0.5 * (rho + rho.conj().T)
    return rho, rec, pulse_states, dims, tops


def km_evolve(
    state: FockCoefficients,
    shape: PulseShape,
    gamma_T: float,
    gamma_perp_ratio: float = 0.0,
    t_out=None,
    t_start: float | None = None,
    cfg: KMConfig = KMConfig(),
) -> KMResult:
    """Integrate the master equation and sample the trajectory at ``t_out``.

    Times are physical (units of ``shape.duration``); internally ``T = 1``.
    The default window runs from the pulse onset to ten pulse durations after
    the arrival time.
    """
    if gamma_T <= 0:
        raise DomainError("gamma_T must be positive")
    if cfg.dt <= 0:
        raise DomainError("dt must be positive")
    unit = shape.unit()
    T, t0 = shape.duration, shape.arrival
    lo, _ = _default_window(unit)
    start = lo if t_start is None else (t_start - t0) / T
    if t_out is None:
        tau_out = np.linspace(start, 10.0, 201)
    else:
        tau_out = (np.atleast_1d(np.asarray(t_out, dtype=float)) - t0) / T
    if np.any(np.diff(tau_out) <= 0) or tau_out[0] < start - 1e-12:
        raise DomainError("output times must be increasing and not precede the start time")
    gp = gamma_T * gamma_perp_ratio

    n_xi = cfg.n_xi or _photon_support(state) + 3
    n_v = cfg.n_v
    for attempt in range(2):
        rho, rec, states, dims, tops = _run(state, unit, gamma_T, gp, start, tau_out, cfg, n_xi, n_v)
        if tops[0] <= TAIL_TOL and tops[1] <= TAIL_TOL:
            break
        if attempt == 1:
            raise TruncationError(f"top-level population {tops} with cutoffs ({n_xi}, {n_v})")
        logger.info("growing cutoffs after tail populations %s", tops)
        if tops[0] > TAIL_TOL:
            n_xi += 4
        if tops[1] > TAIL_TOL:
            n_v *= 2

    trace = np.array(rec["trace"])
    drift = float(np.max(np.abs(trace - 1.0)))
    if drift > TRACE_TOL:
        raise IntegrationError(f"trace drifted by {drift:.3g}")
    min_eig = np.array(rec["min_eig"])
    if np.nanmin(min_eig) < -POSITIVITY_TOL:
        raise PositivityError(f"density matrix eigenvalue {np.nanmin(min_eig):.3g}")

    info = {"steps": int(math.ceil((tau_out[-1] - start) / cfg.dt - 1e-9)), "trace_drift": drift, "tail": tops}
    if cfg.verify:
        fine = KMConfig(cfg.dt / 2, n_xi, n_v, False, cfg.n_checks)
        rho2, _, states2, _, _ = _run(state, unit, gamma_T, gp, start, tau_out, fine, n_xi, n_v)
        info["halving_change"] = trace_distance(states[-1], states2[-1])
        if info["halving_change"] > 1e-6:
            raise IntegrationError(f"step halving changed the pulse state by {info['halving_change']:.3g}")

    return KMResult(
        times=t0 + T * tau_out,
        p_e=np.array(rec["p_e"]),
        n_xi=np.array(rec["n_xi"]),
        n_v=np.array(rec["n_v"]),
        trace=trace,
        min_eigenvalue=min_eig,
        pulse_states=states,
        rho_final=rho,
        dims=dims,
        info=info,
    )
