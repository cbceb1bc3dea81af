"""Normalized single-mode pulse envelopes and their time integrals.

Every shape is a real amplitude ``xi(t)`` with ``int xi(t)**2 dt = 1``.  The
duration parameter ``T`` and the arrival time ``t0`` follow the conventions of
the closed-form shape table::

    rectangular     xi = Theta(s) Theta(T - s) / sqrt(T)
    rising_exp      xi = exp(s / 2T) Theta(-s) / sqrt(T)
    decaying_exp    xi = exp(-s / 2T) Theta(s) / sqrt(T)
    symmetric_exp   xi = exp(-|s| / T) / sqrt(T)
    gaussian        xi = exp(-s**2 / 4T**2) / (sqrt(T) (2 pi)**(1/4))
    hermite_gauss   xi = h_n(s / T) / sqrt(T)

with ``s = t - t0``.  ``sampled`` shapes carry a tabulated envelope that is
linearly interpolated and renormalized on construction.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erf, ndtr

from .errors import DomainError, OutOfSupportError

__all__ = [
    "ShapeKind",
    "PulseShape",
    "CouplingConfig",
    "amplitude",
    "cumulative",
    "scale_invariant_F",
    "temporal_width",
    "support",
    "breakpoints",
    "hermite_gauss",
    "hermite_gauss_cumulative",
    "load_sampled_csv",
    "parse_shape",
]

# Truncation windows (in units of T).  They are set by the tail of xi itself,
# not of xi**2, because the amplitude integrals G_t see the former: the
# neglected int xi stays below ~1e-15 of the total.
_TAIL = {
    "rising_exp": 72.0,
    "decaying_exp": 72.0,
    "symmetric_exp": 36.0,
    "gaussian": 12.0,
}
_HG_MARGIN = 9.0


class ShapeKind(str, enum.Enum):
    RECTANGULAR = "rectangular"
    RISING_EXP = "rising_exp"
    DECAYING_EXP = "decaying_exp"
    SYMMETRIC_EXP = "symmetric_exp"
    GAUSSIAN = "gaussian"
    HERMITE_GAUSS = "hermite_gauss"
    SAMPLED = "sampled"


_ALIASES = {
    "rect": ShapeKind.RECTANGULAR,
    "rectangular": ShapeKind.RECTANGULAR,
    "risingexp": ShapeKind.RISING_EXP,
    "rising_exp": ShapeKind.RISING_EXP,
    "rising": ShapeKind.RISING_EXP,
    "decayingexp": ShapeKind.DECAYING_EXP,
    "decaying_exp": ShapeKind.DECAYING_EXP,
    "decaying": ShapeKind.DECAYING_EXP,
    "symmetricexp": ShapeKind.SYMMETRIC_EXP,
    "symmetric_exp": ShapeKind.SYMMETRIC_EXP,
    "symmetric": ShapeKind.SYMMETRIC_EXP,
    "gaussian": ShapeKind.GAUSSIAN,
    "gauss": ShapeKind.GAUSSIAN,
    "hermite_gauss": ShapeKind.HERMITE_GAUSS,
    "hg": ShapeKind.HERMITE_GAUSS,
    "sampled": ShapeKind.SAMPLED,
}


@dataclass(frozen=True)
class PulseShape:
    """A normalized real temporal mode.

    ``duration`` is the shape parameter ``T`` (not the rms width, see
    :func:`temporal_width`).  For ``sampled`` shapes ``samples`` holds the
    uniform time grid and the amplitudes; they are renormalized so that the
    piecewise-linear interpolant has unit norm.
    """

    kind: ShapeKind
    duration: float = 1.0
    arrival: float = 0.0
    order: int = 0
    samples: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise DomainError(f"pulse duration must be positive, got {self.duration}")
        if self.kind is ShapeKind.HERMITE_GAUSS and self.order < 0:
            raise DomainError("Hermite-Gauss order must be non-negative")
        if self.kind is ShapeKind.SAMPLED:
            if self.samples is None:
                raise DomainError("sampled shape needs (times, amplitudes)")
            t, a = _validate_samples(*self.samples)
            a = a / math.sqrt(_linear_norm2(t, a))
            t.setflags(write=False)
            a.setflags(write=False)
            object.__setattr__(self, "samples", (t, a))

    @classmethod
    def from_samples(cls, times, values, duration: float | None = None) -> "PulseShape":
        t, a = _validate_samples(times, values)
        a = a / math.sqrt(_linear_norm2(t, a))
        if duration is None:
            duration = _sampled_width(t, a)
        return cls(ShapeKind.SAMPLED, duration=duration, arrival=0.0, samples=(t, a))

    def unit(self) -> "PulseShape":
        """The same envelope expressed with ``T = 1`` and ``t0 = 0``."""
        if self.kind is ShapeKind.SAMPLED:
            t, a = self.samples
            t = (t - self.arrival) / self.duration
            return PulseShape(ShapeKind.SAMPLED, 1.0, 0.0, samples=(t, a * math.sqrt(self.duration)))
        return PulseShape(self.kind, 1.0, 0.0, self.order)


@dataclass(frozen=True)
class CouplingConfig:
    """Dimensionless coupling: ``gamma_T = Gamma T`` and ``Gamma_perp / Gamma``."""

    gamma_T: float
    gamma_perp_ratio: float = 0.0
    t_grid: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.gamma_T >= 0 and math.isfinite(self.gamma_T)):
            raise DomainError(f"gamma_T must be finite and non-negative, got {self.gamma_T}")
        if not (self.gamma_perp_ratio >= 0 and math.isfinite(self.gamma_perp_ratio)):
            raise DomainError("gamma_perp_ratio must be finite and non-negative")


def parse_shape(name: str, duration: float = 1.0, arrival: float = 0.0, order: int = 0) -> PulseShape:
    """Build a shape from a user-facing name such as ``"gaussian"`` or ``"rect"``."""
    key = name.strip().lower().replace("-", "_")
    if key not in _ALIASES or _ALIASES[key] is ShapeKind.SAMPLED:
        raise DomainError(f"unknown pulse shape {name!r}")
    return PulseShape(_ALIASES[key], duration, arrival, order)


# ---------------------------------------------------------------------------
# Hermite-Gauss functions


def hermite_gauss(n: int, x) -> np.ndarray:
    """Normalized Hermite-Gauss functions ``h_0 .. h_n`` at ``x``; shape ``(n+1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_gauss_cumulative(n: int, x) -> np.ndarray:
    """``int_{-inf}^{x} h_k(u) du`` for ``k = 0 .. n``, via the derivative recurrence."""
    x = np.asarray(x, dtype=float)
    h = hermite_gauss(n, x)
    out = np.empty_like(h)
    out[0] = np.pi ** 0.25 * math.sqrt(2.0) * ndtr(x)
    if n >= 1:
        out[1] = -math.sqrt(2.0) * h[0]
    for k in range(1, n):
        out[k + 1] = math.sqrt(k / (k + 1)) * out[k - 1] - math.sqrt(2.0 / (k + 1)) * h[k]
    return out


# ---------------------------------------------------------------------------
# Sampled shapes


def _validate_samples(times, values) -> tuple[np.ndarray, np.ndarray]:
    t = np.array(times, dtype=float)
    a = np.array(values, dtype=float)
    if t.ndim != 1 or t.shape != a.shape or t.size < 3:
        raise DomainError("sampled shape needs matching 1-D time and amplitude arrays (>= 3 points)")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(a)):
        raise DomainError("sampled shape contains non-finite values")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise DomainError("sample times must be strictly increasing")
    if np.max(np.abs(dt - dt.mean())) > 1e-9 * dt.mean():
        raise DomainError("sample times must be uniform")
    if not np.any(a):
        raise DomainError("sampled amplitude is identically zero")
    return t, a


def _linear_norm2(t, a) -> float:
    # exact integral of the squared piecewise-linear interpolant
    h = np.diff(t)
    return float(np.sum(h * (a[:-1] ** 2 + a[:-1] * a[1:] + a[1:] ** 2) / 3.0))


def _sampled_width(t, a) -> float:
    grid = np.linspace(t[0], t[-1], 20 * t.size)
    w = np.interp(grid, t, a) ** 2
    w /= _trap(w, grid)
    mean = _trap(grid * w, grid)
    return math.sqrt(max(_trap((grid - mean) ** 2 * w, grid), 0.0))


def _trap(y, x) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def load_sampled_csv(path: str | Path, duration: float | None = None) -> PulseShape:
    """Read a two-column ``time, amplitude`` CSV (optional header) into a sampled shape."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0 and not rows:
                    continue  # header
                raise DomainError(f"{path}: malformed row {i + 1}: {row}") from None
    if not rows:
        raise DomainError(f"{path}: no samples")
    t, a = np.array(rows).T
    return PulseShape.from_samples(t, a, duration)


def _sampled_eval(shape: PulseShape, t) -> np.ndarray:
    ts, a = shape.samples
    t = np.asarray(t, dtype=float)
    tol = 1e-12 * (ts[-1] - ts[0])
    if np.any(t < ts[0] - tol) or np.any(t > ts[-1] + tol):
        raise OutOfSupportError(f"sampled shape queried outside [{ts[0]}, {ts[-1]}]")
    return np.interp(t, ts, a)


def _sampled_cumulative(shape: PulseShape, t) -> np.ndarray:
    ts, a = shape.samples
    t = np.asarray(t, dtype=float)
    h = ts[1] - ts[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (a[1:] + a[:-1]))])
    tc = np.clip(t, ts[0], ts[-1])
    idx = np.clip(((tc - ts[0]) / h).astype(int), 0, ts.size - 2)
    s = tc - ts[idx]
    slope = (a[idx + 1] - a[idx]) / h
    return cum[idx] + a[idx] * s + 0.5 * slope * s * s


# ---------------------------------------------------------------------------
# Public operations


def amplitude(shape: PulseShape, t) -> np.ndarray:
    """Pulse amplitude ``xi(t)``; vectorized over ``t``."""
    if shape.kind is ShapeKind.SAMPLED:
        return _sampled_eval(shape, t)
    T = shape.duration
    s = np.asarray(t, dtype=float) - shape.arrival
    k = shape.kind
    with np.errstate(over="ignore"):
        if k is ShapeKind.RECTANGULAR:
            out = np.where((s >= 0) & (s <= T), 1.0, 0.0)
        elif k is ShapeKind.RISING_EXP:
            out = np.where(s <= 0, np.exp(np.minimum(s, 0) / (2 * T)), 0.0)
        elif k is ShapeKind.DECAYING_EXP:
            out = np.where(s >= 0, np.exp(-np.maximum(s, 0) / (2 * T)), 0.0)
        elif k is ShapeKind.SYMMETRIC_EXP:
            out = np.exp(-np.abs(s) / T)
        elif k is ShapeKind.GAUSSIAN:
            out = np.exp(-s * s / (4 * T * T)) * (2 * np.pi) ** -0.25
        else:
            out = hermite_gauss(shape.order, s / T)[-1]
    return out / math.sqrt(T)


def cumulative(shape: PulseShape, t) -> np.ndarray:
    """``G_t = int_{-inf}^{t} xi(t') dt'`` in closed form (exact for sampled shapes too)."""
    if shape.kind is ShapeKind.SAMPLED:
        return _sampled_cumulative(shape, t)
    T = shape.duration
    s = np.asarray(t, dtype=float) - shape.arrival
    rt = math.sqrt(T)
    k = shape.kind
    if k is ShapeKind.RECTANGULAR:
        return np.clip(s, 0.0, T) / rt
    if k is ShapeKind.RISING_EXP:
        return 2 * rt * np.exp(np.minimum(s, 0.0) / (2 * T))
    if k is ShapeKind.DECAYING_EXP:
        return 2 * rt * -np.expm1(-np.maximum(s, 0.0) / (2 * T))
    if k is ShapeKind.SYMMETRIC_EXP:
        return rt * np.where(s <= 0, np.exp(np.minimum(s, 0.0) / T), 1.0 - np.expm1(-np.maximum(s, 0.0) / T))
    if k is ShapeKind.GAUSSIAN:
        return rt * math.sqrt(np.pi) * (1.0 + erf(s / (2 * T))) * (2 * np.pi) ** -0.25
    return rt * hermite_gauss_cumulative(shape.order, s / T)[-1]


def scale_invariant_F(shape: PulseShape, x) -> np.ndarray:
    """``F_x = G_{t0 + x T} / sqrt(T)``, independent of ``T`` for a fixed family."""
    x = np.asarray(x, dtype=float)
    return cumulative(shape, shape.arrival + x * shape.duration) / math.sqrt(shape.duration)


def temporal_width(shape: PulseShape) -> float:
    """Root-mean-square width ``T_sigma`` of ``|xi(t)|**2``."""
    T = shape.duration
    k = shape.kind
    if k is ShapeKind.RECTANGULAR:
        return T / math.sqrt(12.0)
    if k in (ShapeKind.RISING_EXP, ShapeKind.DECAYING_EXP, ShapeKind.GAUSSIAN):
        return T
    if k is ShapeKind.SYMMETRIC_EXP:
        return T / math.sqrt(2.0)
    if k is ShapeKind.HERMITE_GAUSS:
        return T * math.sqrt(shape.order + 0.5)
    t, a = shape.samples
    return _sampled_width(t, a)


def support(shape: PulseShape) -> tuple[float, float]:
    """Interval outside which the envelope is zero or truncated (tail norm < ~1e-15)."""
    T, a = shape.duration, shape.arrival
    k = shape.kind
    if k is ShapeKind.RECTANGULAR:
        return a, a + T
    if k is ShapeKind.RISING_EXP:
        return a - _TAIL["rising_exp"] * T, a
    if k is ShapeKind.DECAYING_EXP:
        return a, a + _TAIL["decaying_exp"] * T
    if k is ShapeKind.SYMMETRIC_EXP:
        return a - _TAIL["symmetric_exp"] * T, a + _TAIL["symmetric_exp"] * T
    if k is ShapeKind.GAUSSIAN:
        return a - _TAIL["gaussian"] * T, a + _TAIL["gaussian"] * T
    if k is ShapeKind.HERMITE_GAUSS:
        half = (math.sqrt(2 * shape.order + 1) + _HG_MARGIN) * T
        return a - half, a + half
    t, _ = shape.samples
    return float(t[0]), float(t[-1])


def breakpoints(shape: PulseShape) -> list[float]:
    """Interior points where the envelope or its derivative is discontinuous."""
    if shape.kind is ShapeKind.SYMMETRIC_EXP:
        return [shape.arrival]
    return []


def intensity_fractions(shape: PulseShape, t) -> tuple[np.ndarray, np.ndarray]:
    """``(I, 1 - I)`` with ``I(t) = int^t xi**2``; both evaluated without cancellation."""
    T = shape.duration
    t = np.asarray(t, dtype=float)
    s = t - shape.arrival
    k = shape.kind
    if k is ShapeKind.GAUSSIAN:
        return ndtr(s / T), ndtr(-s / T)
    if k is ShapeKind.RECTANGULAR:
        u = np.clip(s / T, 0.0, 1.0)
        return u, 1.0 - u
    if k is ShapeKind.RISING_EXP:
        u = np.minimum(s, 0.0) / T
        return np.exp(u), -np.expm1(u)
    if k is ShapeKind.DECAYING_EXP:
        u = -np.maximum(s, 0.0) / T
        return -np.expm1(u), np.exp(u)
    if k is ShapeKind.SYMMETRIC_EXP:
        lo = 0.5 * np.exp(-2 * np.abs(s) / T)
        return np.where(s <= 0, lo, 1.0 - lo), np.where(s <= 0, 1.0 - lo, lo)
    # numerical fallback: exact for the piecewise-linear sampled envelope
    if k is ShapeKind.SAMPLED:
        ts, a = shape.samples
    else:
        lo_t, hi_t = support(shape)
        ts = np.linspace(lo_t, hi_t, 20001)
        a = amplitude(shape, ts)
    h = np.diff(ts)
    seg = h * (a[:-1] ** 2 + a[:-1] * a[1:] + a[1:] ** 2) / 3.0
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    ccum = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    tot = cum[-1]
    return np.interp(t, ts, cum / tot), np.interp(t, ts, ccum / tot)
