"""Sodium D2 case study in SI units.

The pulse coupling is ``Gamma = mu**2 A**2`` with the field constant
``A**2 = omega / (4 pi hbar eps0 c S)`` and quantization area
``S = lambda0**2 / (2 pi)``.  All tables here carry SI units; the dimensionless
core is called with ``Gamma T`` and the results rescaled by ``T**2``.

Times inside the biphoton routines are in picoseconds (frequencies in rad/ps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import biphoton, jcshort, pulses
from .errors import DomainError
from .pulses import PulseShape, ShapeKind
from .tables import write_table

__all__ = [
    "HBAR",
    "EPS0",
    "C_LIGHT",
    "AtomParams",
    "sodium_defaults",
    "sodium_report",
    "reparam_qfi_mu",
    "figure7",
    "figure8",
    "figure7_ordering",
    "write_figure",
]

HBAR = 1.054571817e-34  # J s
EPS0 = 8.8541878128e-12  # F / m
C_LIGHT = 299792458.0  # m / s

PUMP_DURATION = 0.15e-12  # s
T_QENT_FIG7 = 2.09e-12  # s
PS = 1e-12
ENTROPY_BASE = 2.0


@dataclass(frozen=True)
class AtomParams:
    mu: float  # C m
    omega0: float  # rad / s
    gamma_tot: float  # 1 / s
    quantization_area: float  # m^2

    @property
    def wavelength(self) -> float:
        return 2 * math.pi * C_LIGHT / self.omega0

    @property
    def field_constant(self) -> float:
        """``A(omega) = sqrt(omega / (4 pi hbar eps0 c S))``."""
        return math.sqrt(self.omega0 / (4 * math.pi * HBAR * EPS0 * C_LIGHT * self.quantization_area))

    @property
    def gamma(self) -> float:
        return self.mu ** 2 * self.field_constant ** 2

    @property
    def gamma_perp(self) -> float:
        return self.gamma_tot - self.gamma


def sodium_defaults() -> AtomParams:
    """Sodium D2 line with the scattering cross-section as quantization area."""
    omega0 = 2 * math.pi * 508.333e12
    lam = 2 * math.pi * C_LIGHT / omega0
    atom = AtomParams(mu=2.988e-29, omega0=omega0, gamma_tot=61.542e6, quantization_area=lam ** 2 / (2 * math.pi))
    if atom.gamma_perp < 0:
        raise DomainError("pulse coupling exceeds the total decay rate")
    return atom


def sodium_report(atom: AtomParams | None = None, duration: float = PUMP_DURATION) -> dict:
    """Derived rates and dimensionless products for a pulse of the given duration (SI)."""
    atom = atom or sodium_defaults()
    return {
        "mu": atom.mu,
        "omega0": atom.omega0,
        "wavelength": atom.wavelength,
        "quantization_area": atom.quantization_area,
        "field_constant": atom.field_constant,
        "gamma": atom.gamma,
        "gamma_perp": atom.gamma_perp,
        "gamma_tot": atom.gamma_tot,
        "gamma_perp_ratio": atom.gamma_perp / atom.gamma,
        "lifetime": 1.0 / atom.gamma_tot,
        "duration": duration,
        "gamma_T": atom.gamma * duration,
        "gamma_tot_T": atom.gamma_tot * duration,
    }


SODIUM_UNITS = {
    "mu": "C m", "omega0": "rad/s", "wavelength": "m", "quantization_area": "m^2",
    "field_constant": "s^-1/2 C^-1 m^-1", "gamma": "1/s", "gamma_perp": "1/s", "gamma_tot": "1/s",
    "gamma_perp_ratio": "1", "lifetime": "s", "duration": "s", "gamma_T": "1", "gamma_tot_T": "1",
}


def reparam_qfi_mu(q_gamma: float, mu: float, A_const: float) -> float:
    """QFI for the dipole moment: ``(dGamma/dmu)**2 Q_Gamma = 4 mu**2 A**4 Q_Gamma``."""
    if not mu > 0:
        raise DomainError("dipole moment must be positive")
    return 4.0 * mu * mu * A_const ** 4 * q_gamma


def _jc_column(state, gamma_T: float, F) -> np.ndarray:
    return np.array([jcshort.jc_qfi(state, gamma_T, float(f)) for f in F])


def _schmidt0_qfi(spec: biphoton.SchmidtSpectrum, gamma_ps: float, t_ps) -> np.ndarray:
    """Fock-1 QFI in the 0-th signal Schmidt mode (ps**2)."""
    mode = biphoton.schmidt_temporal_mode(spec, 0)
    F = pulses.scale_invariant_F(mode, np.asarray(t_ps, dtype=float) / spec.k_s)
    one = jcshort.fock(1)
    return spec.k_s ** 2 * _jc_column(one, gamma_ps * spec.k_s, F)


def figure7(t_grid=None, atom: AtomParams | None = None, duration: float = PUMP_DURATION,
            t_qent: float = T_QENT_FIG7) -> dict:
    """Pulse QFI ``Q_Gamma`` (s**2) versus time for the states compared at fixed pump width.

    ``t_grid`` is in seconds with the pulse peak at ``t = 0``; the default runs
    from ``-4T`` to ``10T``.
    """
    atom = atom or sodium_defaults()
    T = duration
    t = np.linspace(-4 * T, 10 * T, 141) if t_grid is None else np.asarray(t_grid, dtype=float)
    gT = atom.gamma * T
    shape = PulseShape(ShapeKind.GAUSSIAN, 1.0)
    F = pulses.scale_invariant_F(shape, t / T)
    cols = {"t": t}
    cols["fock1"] = T * T * _jc_column(jcshort.fock(1), gT, F)
    cols["coherent"] = T * T * _jc_column(jcshort.coherent(1.0), gT, F)
    cols["squeezed"] = T * T * _jc_column(jcshort.squeezed_vacuum(math.asinh(1.0)), gT, F)
    spec = biphoton.schmidt_decompose(biphoton.build_jsa(PS / T, t_qent / PS))
    g_ps = atom.gamma * PS
    t_ps = t / PS
    cols["biphoton"] = PS * PS * np.array([biphoton.biphoton_qfi_short(spec, g_ps, x) for x in t_ps])
    cols["schmidt0"] = PS * PS * _schmidt0_qfi(spec, g_ps, t_ps)
    for k in ("fock1", "coherent", "squeezed", "biphoton", "schmidt0"):
        cols[k + "_mu"] = np.array([reparam_qfi_mu(q, atom.mu, atom.field_constant) for q in cols[k]])
    return cols


FIGURE7_UNITS = {"t": "s", **{k: "s^2" for k in ("fock1", "coherent", "squeezed", "biphoton", "schmidt0")},
                 **{k + "_mu": "1/(C m)^2" for k in ("fock1", "coherent", "squeezed", "biphoton", "schmidt0")}}


def figure7_ordering(table: dict) -> list[str]:
    """Violations of the expected ranking (empty when all hold).

    The state comparisons use the final time.  The 0-th Schmidt mode is
    compared with the biphoton only after the pulse peak: on the leading edge
    the higher Hermite-Gauss modes, whose tails reach further out, give the
    biphoton a head start.
    """
    bad = []
    f, c, s = table["fock1"][-1], table["coherent"][-1], table["squeezed"][-1]
    if not c <= 0.1 * f:
        bad.append("coherent exceeds 0.1 x Fock")
    if not abs(s - f) <= 0.05 * f:
        bad.append("squeezed differs from Fock by more than 5%")
    after = np.asarray(table["t"]) > 0
    if np.any(table["schmidt0"][after] < table["biphoton"][after] * (1 - 1e-12)):
        bad.append("0-th Schmidt mode below biphoton")
    return bad


def figure8(t_qent_grid=None, atom: AtomParams | None = None, duration: float = PUMP_DURATION,
            entropy_base: float = ENTROPY_BASE) -> dict:
    """QFI (s**2) at ``t = 10 T`` versus entanglement time ``T_qent`` (s) at fixed pump width."""
    atom = atom or sodium_defaults()
    T = duration
    grid = np.geomspace(50e-15, 3e-12, 60) if t_qent_grid is None else np.asarray(t_qent_grid, dtype=float)
    g_ps = atom.gamma * PS
    t_ps = 10 * T / PS
    shape = PulseShape(ShapeKind.GAUSSIAN, 1.0)
    q_pump = T * T * jcshort.jc_qfi(jcshort.fock(1), atom.gamma * T, float(pulses.scale_invariant_F(shape, 10.0)))
    cols = {k: [] for k in ("t_qent", "biphoton", "pump_single_photon", "schmidt0", "entropy", "w", "k_s", "n_modes")}
    for tq in grid:
        spec = biphoton.schmidt_decompose(biphoton.build_jsa(PS / T, tq / PS))
        cols["t_qent"].append(float(tq))
        cols["biphoton"].append(PS * PS * biphoton.biphoton_qfi_short(spec, g_ps, t_ps))
        cols["pump_single_photon"].append(q_pump)
        cols["schmidt0"].append(PS * PS * float(_schmidt0_qfi(spec, g_ps, [t_ps])[0]))
        cols["entropy"].append(biphoton.entanglement_entropy(spec, entropy_base))
        cols["w"].append(spec.w)
        cols["k_s"].append(spec.k_s * PS)
        cols["n_modes"].append(spec.n_modes)
    return {k: np.array(v) for k, v in cols.items()}


FIGURE8_UNITS = {"t_qent": "s", "biphoton": "s^2", "pump_single_photon": "s^2", "schmidt0": "s^2",
                 "entropy": "bit", "w": "1", "k_s": "s", "n_modes": "1"}


def write_figure(name: str, table: dict, out_dir, meta: dict | None = None) -> Path:
    units = {"fig7": FIGURE7_UNITS, "fig8": FIGURE8_UNITS}.get(name)
    return write_table(Path(out_dir) / f"{name}.csv", table, meta, units)
