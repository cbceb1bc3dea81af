"""Down-converted photon pairs with a Gaussian joint spectral amplitude.

The pump envelope ``exp(-(w_S + w_I)**2 / 2 sigma_p**2)`` times the Gaussian
phase-matching function ``exp(-gamma (T_S w_S + T_I w_I)**2)`` gives

    f(w_S, w_I) ~ exp(-a w_S**2 - 2 b w_S w_I - c w_I**2)

with ``a = 1/(2 sigma_p**2) + gamma T_S**2``, ``b = 1/(2 sigma_p**2) + gamma T_S T_I``
and ``c = 1/(2 sigma_p**2) + gamma T_I**2``.  Mehler's formula diagonalizes it
into Hermite-Gauss Schmidt modes ``h_n(k_S w_S) h_n(k_I w_I)`` with weights
``r_n = -i w**n sqrt(1 - w**2)``.  Only the signal photon meets the atom; the
idler is traced out, so in time the signal sees the Schmidt modes
``h_n(t / k_S) / sqrt(k_S)`` with probabilities ``|r_n|**2``.

Frequencies are angular (rad/ps when times are in ps).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import onephoton, pulses
from .errors import DomainError, InvalidJSAError, RegimeError
from .pulses import CouplingConfig, PulseShape, ShapeKind

__all__ = [
    "PHASE_MATCHING_GAMMA",
    "JointSpectrum",
    "SchmidtSpectrum",
    "pdc_coefficients",
    "build_jsa",
    "schmidt_decompose",
    "entanglement_entropy",
    "schmidt_temporal_mode",
    "jsa_grid",
    "mehler_reconstruction",
    "biphoton_qfi_short",
    "biphoton_qfi_exact_nocoupling_loss",
    "biphoton_qfi_rank2",
    "export_jsa_csv",
]

PHASE_MATCHING_GAMMA = 0.04822
TAIL = 1e-12
N_MAX_DEFAULT = 64
SHORT_REGIME = 0.1


@dataclass(frozen=True)
class JointSpectrum:
    a: float
    b: float
    c: float
    sigma_p: float | None = None
    T_qent: float | None = None


@dataclass(frozen=True)
class SchmidtSpectrum:
    w: float
    k_s: float
    k_i: float
    weights: np.ndarray  # complex r_n
    jsa: JointSpectrum

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.weights) ** 2

    @property
    def n_modes(self) -> int:
        return self.weights.size


def pdc_coefficients(sigma_p: float, T_S: float, T_I: float, gamma: float = PHASE_MATCHING_GAMMA):
    """Gaussian JSA coefficients ``(a, b, c)``; no validity check."""
    s = 1.0 / (2.0 * sigma_p * sigma_p)
    return s + gamma * T_S * T_S, s + gamma * T_S * T_I, s + gamma * T_I * T_I


def build_jsa(sigma_p: float, T_qent: float, gamma: float = PHASE_MATCHING_GAMMA) -> JointSpectrum:
    """JSA for ``T_S = 0.12 T_qent`` and ``T_I = 1.12 T_qent``."""
    if not sigma_p > 0:
        raise DomainError("pump bandwidth must be positive")
    if T_qent < 0:
        raise DomainError("entanglement time must be non-negative")
    a, b, c = pdc_coefficients(sigma_p, 0.12 * T_qent, 1.12 * T_qent, gamma)
    if a * c - b * b <= 0:
        raise InvalidJSAError("a c <= b^2: the joint spectrum is not normalizable")
    return JointSpectrum(a, b, c, sigma_p, T_qent)


def schmidt_decompose(jsa: JointSpectrum, n_max: int | None = None, tail: float = TAIL) -> SchmidtSpectrum:
    """Closed-form Schmidt decomposition.

    Modes are kept until the discarded weight ``w**(2 n)`` falls below ``tail``,
    optionally capped at ``n_max`` modes.
    """
    a, b, c = jsa.a, jsa.b, jsa.c
    det = a * c - b * b
    if det <= 0:
        raise InvalidJSAError("a c <= b^2")
    w = 0.0 if b == 0 else (-math.sqrt(a * c) + math.sqrt(det)) / b
    w2 = w * w
    k_s = math.sqrt(2 * a * (1 - w2) / (1 + w2))
    k_i = math.sqrt(2 * c * (1 - w2) / (1 + w2))
    if w2 == 0:
        n = 1
    else:
        n = max(1, int(math.ceil(math.log(tail) / math.log(w2))))
    if n_max is not None:
        n = min(n, n_max)
    k = np.arange(n)
    weights = -1j * w ** k * math.sqrt(1 - w2)
    return SchmidtSpectrum(w, k_s, k_i, weights, jsa)


def entanglement_entropy(spec: SchmidtSpectrum, base: float = math.e) -> float:
    """Entropy of the Schmidt probabilities (natural log by default)."""
    p = np.asarray(spec.probabilities if isinstance(spec, SchmidtSpectrum) else spec, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)) / math.log(base))


def jsa_grid(jsa: JointSpectrum, ws, wi) -> np.ndarray:
    """Normalized JSA on the outer grid ``ws x wi``."""
    W_s, W_i = np.meshgrid(ws, wi, indexing="ij")
    norm = math.sqrt(2.0 * math.sqrt(jsa.a * jsa.c - jsa.b ** 2) / math.pi)
    return norm * np.exp(-jsa.a * W_s ** 2 - 2 * jsa.b * W_s * W_i - jsa.c * W_i ** 2)


def mehler_reconstruction(spec: SchmidtSpectrum, ws, wi) -> np.ndarray:
    """``sum_n |r_n| sign * h_n(k_S w_S) h_n(k_I w_I)`` scaled to the JSA normalization."""
    n = spec.n_modes - 1
    hs = pulses.hermite_gauss(n, spec.k_s * np.asarray(ws, dtype=float))
    hi = pulses.hermite_gauss(n, spec.k_i * np.asarray(wi, dtype=float))
    coeff = (1j * spec.weights).real  # w**n sqrt(1 - w**2)
    return math.sqrt(spec.k_s * spec.k_i) * np.einsum("n,ni,nj->ij", coeff, hs, hi)


def schmidt_temporal_mode(spec: SchmidtSpectrum, k: int, arrival: float = 0.0) -> PulseShape:
    """Temporal signal Schmidt mode ``h_k((t - t0) / k_S) / sqrt(k_S)``."""
    return PulseShape(ShapeKind.HERMITE_GAUSS, duration=spec.k_s, arrival=arrival, order=k)


def biphoton_qfi_short(spec: SchmidtSpectrum, gamma: float, t: float, arrival: float = 0.0) -> float:
    """Short-pulse QFI ``(1/Gamma) sum_k |r_k|**2 G_{t,k}**2`` of the signal-idler state.

    ``G_{t,k}`` is the time integral of the ``k``-th temporal Schmidt mode up to
    ``t``.  Raises :class:`RegimeError` unless ``Gamma (t - t0 + 8 k_S)`` is small.
    """
    if gamma <= 0:
        raise DomainError("Gamma must be positive")
    if gamma * (t - arrival + 8 * spec.k_s) >= SHORT_REGIME:
        raise RegimeError("interaction time is not short compared with 1/Gamma")
    n = spec.n_modes - 1
    G = math.sqrt(spec.k_s) * pulses.hermite_gauss_cumulative(n, (t - arrival) / spec.k_s)
    return float(np.sum(spec.probabilities * G * G) / gamma)


def biphoton_qfi_exact_nocoupling_loss(
    spec: SchmidtSpectrum, gamma: float, t: float = math.inf, arrival: float = 0.0
) -> tuple[float, np.ndarray]:
    """Exact QFI for ``Gamma_perp = 0`` as the Schmidt-weighted single-photon QFIs.

    Returns ``(Q, per_mode_Q)``; both in units of ``1/Gamma**2``.
    """
    per_mode = np.empty(spec.n_modes)
    for k in range(spec.n_modes):
        shape = schmidt_temporal_mode(spec, k, arrival)
        sol = onephoton.solve(shape, CouplingConfig(gamma * spec.k_s))
        per_mode[k] = onephoton.qfi_decomposition(sol, t).total / gamma ** 2
    return float(np.sum(spec.probabilities * per_mode)), per_mode


def biphoton_qfi_rank2(spec: SchmidtSpectrum, gamma: float, t: float, arrival: float = 0.0) -> float:
    """Exact ``Gamma_perp = 0`` QFI from the two orthogonal branches of the signal-idler state.

    The vacuum branch ``sum_k r_k psi_e,k |k>_I`` and the one-photon branch
    ``sum_k r_k |psi~_g,k>|k>_I`` give ``4 sum_k |r_k|**2 (|dpsi_e,k|**2 + ||dpsi~_g,k||**2)``.
    """
    total = 0.0
    for k, p in enumerate(spec.probabilities):
        shape = schmidt_temporal_mode(spec, k, arrival)
        sol = onephoton.solve(shape, CouplingConfig(gamma * spec.k_s))
        comp = sol.components(t)
        g = sol.gamma_T
        dpsi = -(0.5 * comp["A"] / math.sqrt(g) + math.sqrt(g) * comp["B"])
        dnorm = comp["AA"] + 2 * g * comp["AB"] + g * g * comp["BB"]
        total += p * 4 * (dpsi ** 2 + dnorm) * spec.k_s ** 2
    return float(total)


def export_jsa_csv(jsa: JointSpectrum, path: str | Path, span: float = 5.0, n: int = 41) -> Path:
    """Write ``w_S, w_I, |f|`` on an ``n x n`` grid spanning ``span`` standard deviations."""
    ss = span / math.sqrt(2 * jsa.a)
    si = span / math.sqrt(2 * jsa.c)
    ws = np.linspace(-ss, ss, n)
    wi = np.linspace(-si, si, n)
    f = jsa_grid(jsa, ws, wi)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["omega_s", "omega_i", "jsa"])
        for i, x in enumerate(ws):
            for j, y in enumerate(wi):
                out.writerow([f"{x:.12g}", f"{y:.12g}", f"{f[i, j]:.12g}"])
    return path
