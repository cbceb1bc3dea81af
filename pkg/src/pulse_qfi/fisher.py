"""Classical and quantum Fisher information primitives.

Rank-2 states ``rho = |e~><e~| + |g~><g~|`` (unnormalized branch vectors) are
handled through the 4x4 Gram matrix of ``(e~, g~, de~, dg~)``, where ``d``
is the derivative with respect to the estimated parameter.  The SLD equation
splits into a 2x2 Lyapunov problem on the support and a projector term for the
part of the derivative leaving the support; both are closed-form in the Gram
entries, so no vectors beyond their overlaps are needed.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import DomainError, IllConditionedError

__all__ = [
    "SingularFisherWarning",
    "cfi_binary",
    "qfi_pure",
    "qfi_rank2_gram",
    "qfi_orthogonal_rank2",
    "qfi_rank2_vectors",
    "qfi_eigen",
    "extended_convexity_rhs",
    "gram_matrix",
    "rank2_operators",
]

HERMITIAN_TOL = 1e-10
EIGEN_CUTOFF = 1e-12
GRAM_COND = 1e-8


class SingularFisherWarning(RuntimeWarning):
    """Fisher information is infinite because a probability vanished with nonzero slope."""


def cfi_binary(p: float, dp: float) -> float:
    """Fisher information ``dp**2 / (p (1 - p))`` of a two-outcome measurement."""
    if not (0.0 <= p <= 1.0) or not math.isfinite(dp):
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        if dp == 0.0:
            return 0.0
        warnings.warn("binary outcome with p in {0, 1} and dp != 0", SingularFisherWarning, stacklevel=2)
        return math.inf
    return dp * dp / (p * (1.0 - p))


def qfi_pure(inner_dd: float, inner_ds: complex) -> float:
    """QFI ``4 (<dpsi|dpsi> - |<psi|dpsi>|**2)`` of a normalized pure state."""
    dd = float(np.real(inner_dd))
    ds2 = abs(complex(inner_ds)) ** 2
    q = 4.0 * (dd - ds2)
    if q < -4e-9 * max(1.0, dd):
        raise DomainError("overlaps violate the Cauchy-Schwarz inequality")
    return max(q, 0.0)


def gram_matrix(vectors) -> np.ndarray:
    """``G_ij = <b_i|b_j>`` for the rows of ``vectors``."""
    b = np.asarray(vectors, dtype=complex)
    return b.conj() @ b.T


def _check_hermitian(m: np.ndarray, what: str):
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
        raise DomainError(f"{what} is not Hermitian")


def qfi_rank2_gram(G) -> float:
    """QFI of a rank-2 state from the Gram matrix of ``(e~, g~, de~, dg~)``.

    With ``M`` the support block ``G[:2, :2]`` (``t = tr M``, ``d = det M``) and
    ``C = G[:2, 2:]``, set ``Z = C M + M C^H``.  Then

        Q = (t/d + 1/t) tr(M^-1 Z M^-1 Z) - (2/d) tr(M^-1 Z^2) + tr(Z^2)/(d t)
            + 4 [G_33 + G_44 - tr(C^H M^-1 C)].

    The first line is the support (Lyapunov) part, solved in closed form via the
    2x2 Cayley-Hamilton identity; the second is the weight that leaves the
    support.  Linearly dependent derivative vectors are fine, but the relative
    error grows like ``eps t**2 / d``, so inputs with ``d / t**2`` below
    ``GRAM_COND`` are refused.
    """
    G = np.asarray(G, dtype=complex)
    if G.shape != (4, 4):
        raise DomainError("rank-2 Gram matrix must be 4x4")
    _check_hermitian(G, "Gram matrix")
    M = G[:2, :2]
    C = G[:2, 2:]
    t = float(M[0, 0].real + M[1, 1].real)
    d = float((M[0, 0] * M[1, 1]).real - abs(M[0, 1]) ** 2)
    if not t > 0 or d <= GRAM_COND * t * t:
        raise IllConditionedError("support Gram block is near-singular; use qfi_rank2_vectors")
    Minv = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / d
    Z = C @ M + M @ C.conj().T
    MZ = Minv @ Z
    support = (t / d + 1 / t) * np.trace(MZ @ MZ).real - (2 / d) * np.trace(MZ @ Z).real + np.trace(Z @ Z).real / (d * t)
    leak = G[2, 2].real + G[3, 3].real - np.trace(C.conj().T @ Minv @ C).real
    return float(support + 4 * leak)


def qfi_rank2_vectors(e, g, de, dg) -> float:
    """QFI of ``|e~><e~| + |g~><g~|`` from the branch vectors themselves.

    The branches are first rotated (by a constant unitary, which leaves the
    state unchanged) into orthogonal ones ``w_i = s_i u_i`` with orthonormal
    ``u_i``.  With ``C_ij = <u_i|dw_j>`` the SLD sum becomes

        sum_ij 2 |C_ij s_j + s_i conj(C_ji)|**2 / (s_i**2 + s_j**2)
            + 4 sum_i ||(1 - P) dw_i||**2,

    which never divides a small number by a small number.  Use it where the
    Gram closed form is ill-conditioned (one branch nearly empty).
    """
    W = np.column_stack([np.asarray(e, dtype=complex), np.asarray(g, dtype=complex)])
    dW = np.column_stack([np.asarray(de, dtype=complex), np.asarray(dg, dtype=complex)])
    if W.shape[0] < 2:  # QR needs at least as many rows as branches
        W = np.vstack([W, np.zeros((2 - W.shape[0], 2))])
        dW = np.vstack([dW, np.zeros((2 - dW.shape[0], 2))])
    Q, R = np.linalg.qr(W)
    U, s, Vh = np.linalg.svd(R)
    V = Vh.conj().T
    u = Q @ U
    dw = dW @ V
    C = u.conj().T @ dw
    total = 0.0
    for i in range(2):
        for j in range(2):
            den = s[i] ** 2 + s[j] ** 2
            if den > 0:
                total += 2 * abs(C[i, j] * s[j] + s[i] * np.conj(C[j, i])) ** 2 / den
    resid = dw - u @ C
    total += 4 * float(np.sum(np.abs(resid) ** 2))
    return float(total)


def qfi_orthogonal_rank2(norms, dd, ds) -> float:
    """QFI of ``sum_x |x~><x~|`` with mutually orthogonal branches (and derivatives).

    Each branch contributes ``4 <dx~|dx~> - 4 Im(<x~|dx~>)**2 / <x~|x~>``.  An
    empty branch (zero norm) may only appear together with zero overlaps.
    """
    total = 0.0
    for n, a, b in zip(np.atleast_1d(norms), np.atleast_1d(dd), np.atleast_1d(ds)):
        n = float(np.real(n))
        b = complex(b)
        if n < 0:
            raise DomainError("branch norm must be non-negative")
        if n == 0:
            if b != 0:
                raise DomainError("empty branch with nonzero overlap")
            total += 4 * float(np.real(a))
            continue
        total += 4 * float(np.real(a)) - 4 * b.imag ** 2 / n
    return total


def qfi_eigen(rho, drho, cutoff: float = EIGEN_CUTOFF) -> float:
    """QFI by eigendecomposition: ``sum 2 |<i|drho|j>|**2 / (l_i + l_j)`` over ``l_i + l_j > cutoff``."""
    rho = np.asarray(rho, dtype=complex)
    drho = np.asarray(drho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or drho.shape != rho.shape:
        raise DomainError("rho and drho must be square matrices of equal shape")
    _check_hermitian(rho, "rho")
    _check_hermitian(drho, "drho")
    lam, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    D = V.conj().T @ drho @ V
    s = lam[:, None] + lam[None, :]
    mask = s > cutoff
    return float(np.sum(2.0 * np.abs(D[mask]) ** 2 / s[mask]))


def rank2_operators(e, g, de, dg) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``rho`` and ``drho`` for the rank-2 state built from branch vectors."""
    e, g, de, dg = (np.asarray(v, dtype=complex) for v in (e, g, de, dg))
    rho = np.outer(e, e.conj()) + np.outer(g, g.conj())
    drho = np.outer(de, e.conj()) + np.outer(dg, g.conj())
    return rho, drho + drho.conj().T


def extended_convexity_rhs(probs, dprobs, qfis) -> float:
    """``sum dp_i**2 / p_i + sum p_i Q_i``: upper bound on the QFI of a mixture."""
    p = np.asarray(probs, dtype=float)
    dp = np.asarray(dprobs, dtype=float)
    q = np.asarray(qfis, dtype=float)
    if not (p.shape == dp.shape == q.shape):
        raise DomainError("probs, dprobs and qfis must have equal length")
    if np.any(p < 0):
        raise DomainError("probabilities must be non-negative")
    pos = p > 0
    if np.any(~pos & (dp != 0)):
        return math.inf
    return float(np.sum(dp[pos] ** 2 / p[pos]) + np.sum(p * q))
