"""Short-pulse time-dependent Jaynes-Cummings model.

For pulses much shorter than the atomic lifetime the atom sees a single
temporal mode with coupling ``sqrt(Gamma) xi(t)``; the evolution operator only
depends on ``G_t = int xi``.  Starting from ``|g> sum_n psi_n |n>``:

    e~_n = -i sin(sqrt(Gamma) G_t sqrt(n+1)) psi_{n+1}
    g~_n =    cos(sqrt(Gamma) G_t sqrt(n))   psi_n

The reduced pulse state ``|e~><e~| + |g~><g~|`` is rank two and its QFI with
respect to ``Gamma`` follows from the branches and their analytic derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import fisher
from .errors import DomainError, RegimeError

__all__ = [
    "FockCoefficients",
    "fock",
    "coherent",
    "squeezed_vacuum",
    "custom",
    "parse_state",
    "jc_evolve",
    "jc_qfi",
    "atom_pure_qfi_bound",
    "linear_absorption_probe",
]

SQUEEZED_TAIL = 1e-10
LINEAR_REGIME = 0.1


@dataclass(frozen=True)
class FockCoefficients:
    """Fock-basis amplitudes ``psi_n`` of a single-mode pulse state."""

    kind: str
    label: str
    amplitudes: np.ndarray

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size

    @property
    def mean_photon_number(self) -> float:
        n = np.arange(self.cutoff)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2))

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def fock(n: int) -> FockCoefficients:
    if n < 0:
        raise DomainError("Fock number must be non-negative")
    amp = np.zeros(n + 1, dtype=complex)
    amp[n] = 1.0
    return FockCoefficients("fock", f"fock:{n}", amp)


def coherent(alpha: complex, cutoff: int | None = None) -> FockCoefficients:
    """Coherent state; default cutoff ``ceil(|a|^2 + 10 sqrt(|a|^2 + 1))``."""
    nbar = abs(alpha) ** 2
    if cutoff is None:
        cutoff = math.ceil(nbar + 10 * math.sqrt(nbar + 1))
    amp = np.zeros(cutoff + 1, dtype=complex)
    if alpha == 0:
        amp[0] = 1.0
    else:
        n = np.arange(cutoff + 1)
        logmag = -0.5 * nbar + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
        amp[:] = np.exp(logmag + 1j * np.angle(alpha) * n)
    return FockCoefficients("coherent", f"coherent:{alpha}", amp)


def squeezed_vacuum(r: float, tail: float = SQUEEZED_TAIL) -> FockCoefficients:
    """Squeezed vacuum with ``c_2n = (cosh r)^-1/2 (tanh r / 2)^n sqrt((2n)!) / n!``; ``nbar = sinh^2 r``."""
    if r < 0:
        raise DomainError("squeezing parameter must be non-negative")
    if r == 0:
        return FockCoefficients("squeezed", "squeezed:0", np.ones(1, dtype=complex))
    ch, th = math.cosh(r), math.tanh(r)
    amps = []
    total = 0.0
    m = 0
    while True:
        logc = -0.5 * math.log(ch) + m * math.log(th / 2) + 0.5 * gammaln(2 * m + 1) - gammaln(m + 1)
        c = math.exp(logc)
        amps.append(c)
        total += c * c
        if 1.0 - total < tail:
            break
        m += 1
        if m > 100000:
            raise DomainError("squeezing too large to truncate")
    amp = np.zeros(2 * len(amps) - 1, dtype=complex)
    amp[::2] = amps
    return FockCoefficients("squeezed", f"squeezed:{r}", amp)


def custom(amplitudes) -> FockCoefficients:
    amp = np.asarray(amplitudes, dtype=complex)
    if amp.ndim != 1 or amp.size == 0:
        raise DomainError("custom state needs a 1-D amplitude vector")
    nrm = np.sum(np.abs(amp) ** 2)
    if abs(nrm - 1) > 1e-8:
        raise DomainError(f"custom state is not normalized (norm {nrm})")
    return FockCoefficients("custom", "custom", amp)


def parse_state(spec: str) -> FockCoefficients:
    """Parse ``fock:N``, ``coherent:ALPHA``, ``coherent_nbar:NBAR``, ``squeezed:R`` or ``squeezed_nbar:NBAR``."""
    try:
        kind, _, val = spec.partition(":")
        kind = kind.strip().lower()
        if kind == "fock":
            return fock(int(val))
        if kind == "coherent":
            return coherent(complex(val))
        if kind == "coherent_nbar":
            return coherent(math.sqrt(float(val)))
        if kind == "squeezed":
            return squeezed_vacuum(float(val))
        if kind == "squeezed_nbar":
            return squeezed_vacuum(math.asinh(math.sqrt(float(val))))
    except ValueError as exc:
        raise DomainError(f"bad state specification {spec!r}: {exc}") from None
    raise DomainError(f"unknown state kind in {spec!r}")


def jc_evolve(state: FockCoefficients, gamma: float, G_t: float):
    """Branch vectors ``(e~, g~, de~, dg~)`` over Fock indices; derivatives are ``d/dGamma``."""
    if gamma <= 0:
        raise DomainError("Gamma must be positive")
    psi = state.amplitudes
    N = psi.size
    n = np.arange(N)
    rg = math.sqrt(gamma)
    up = np.sqrt(n + 1.0)
    th_e = rg * G_t * up
    th_g = rg * G_t * np.sqrt(n)
    shifted = np.zeros(N, dtype=complex)
    shifted[:-1] = psi[1:]
    e = -1j * np.sin(th_e) * shifted
    g = np.cos(th_g) * psi
    de = -1j * np.cos(th_e) * G_t * up / (2 * rg) * shifted
    dg = -np.sin(th_g) * G_t * np.sqrt(n) / (2 * rg) * psi
    return e, g, de, dg


def jc_qfi(state: FockCoefficients, gamma: float, G_t: float) -> float:
    """QFI of the reduced pulse state with respect to ``Gamma`` (dimensionful, units 1/Gamma**2)."""
    # The Gram closed form cancels badly once one branch is nearly empty while
    # its derivative is not (weak coupling); the orthogonalized form does not.
    e, g, de, dg = jc_evolve(state, gamma, G_t)
    return fisher.qfi_rank2_vectors(e, g, de, dg)


def atom_pure_qfi_bound(state: FockCoefficients, gamma: float, G_t: float) -> float:
    """Upper bound ``nbar G_t**2 / Gamma`` on the pulse QFI."""
    return state.mean_photon_number * G_t * G_t / gamma


@dataclass(frozen=True)
class LinearProbe:
    p_e: float
    dimensionless_qfi: float


def linear_absorption_probe(state: FockCoefficients, gamma_T: float, F_t: float) -> LinearProbe:
    """Weak-absorption figures: ``p_e ~ nbar Gamma T F_t**2`` and the exact ``Gamma**2 Q``.

    Works in units ``T = 1`` so ``G_t = F_t``.  Raises :class:`RegimeError` when
    ``sqrt(Gamma T) F_t sqrt(nbar)`` is not small.
    """
    nbar = state.mean_photon_number
    if math.sqrt(gamma_T) * abs(F_t) * math.sqrt(nbar) >= LINEAR_REGIME:
        raise RegimeError("pulse is too strong for the linear-absorption approximation")
    p_e = nbar * gamma_T * F_t * F_t
    return LinearProbe(p_e, gamma_T ** 2 * jc_qfi(state, gamma_T, F_t))
