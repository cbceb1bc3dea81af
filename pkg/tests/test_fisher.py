import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulse_qfi import fisher, jcshort
from pulse_qfi.errors import DomainError, IllConditionedError


def _random_branches(rng, n, complex_=True):
    def vec():
        v = rng.normal(size=n)
        return v + 1j * rng.normal(size=n) if complex_ else v.astype(complex)

    e, g, de, dg = vec(), vec(), vec(), vec()
    scale = math.sqrt(np.vdot(e, e).real + np.vdot(g, g).real)
    return e / scale, g / scale, de, dg


def _eigen(e, g, de, dg):
    rho, drho = fisher.rank2_operators(e, g, de, dg)
    return fisher.qfi_eigen(rho, drho, cutoff=0.0)


def _long_form_rank2(G):
    """Literal long-form Gram expression (uses Im of the diagonal entries G33, G44)."""
    g = lambda i, j: G[i - 1, j - 1]  # noqa: E731
    R, I = np.real, np.imag
    G11, G22 = g(1, 1).real, g(2, 2).real
    D = G11 * G22 - abs(g(1, 2)) ** 2
    a = I(g(1, 4)) + I(g(2, 3))
    b = R(g(1, 4)) - R(g(2, 3))
    brace = (
        D * ((I(g(1, 3)) - I(g(2, 4))) ** 2 + a ** 2)
        + 4 * D * G11 * (I(g(3, 3)) + I(g(4, 4))) + 4 * D * G22 * (I(g(3, 3)) + I(g(4, 4)))
        - 4 * I(g(1, 3)) ** 2 * G22 ** 2 + 8 * I(g(1, 3)) * R(g(1, 2)) * G22 * a
        + 8 * I(g(1, 3)) * I(g(1, 2)) * G22 * (-b)
        - 4 * G11 * G22 * (2 * I(g(1, 3)) * I(g(2, 4)) + b ** 2) + 8 * I(g(1, 2)) * R(g(1, 2)) * a * b
        + 8 * I(g(2, 4)) * R(g(1, 2)) * G11 * a
        - 4 * R(g(1, 2)) ** 2 * (a + b) * (a - b)
        + 8 * I(g(1, 2)) * I(g(2, 4)) * G11 * (-b) - 4 * I(g(2, 4)) ** 2 * G11 ** 2
    )
    return float(-4 / (D * (G11 + G22)) * brace)


# --- cfi_binary ---------------------------------------------------------------


@pytest.mark.parametrize("p,dp,expected", [(0.5, 1.0, 4.0), (0.25, 0.5, 4 / 3), (0.3, 0.0, 0.0)])
def test_cfi_binary_values(p, dp, expected):
    assert fisher.cfi_binary(p, dp) == pytest.approx(expected)


def test_cfi_binary_domain_and_edges():
    with pytest.raises(DomainError):
        fisher.cfi_binary(1.2, 0.1)
    with pytest.raises(DomainError):
        fisher.cfi_binary(-0.1, 0.1)
    assert fisher.cfi_binary(0.0, 0.0) == 0.0
    with pytest.warns(fisher.SingularFisherWarning):
        assert math.isinf(fisher.cfi_binary(1.0, 0.3))


# --- qfi_pure -------------------------------------------------------------------


def test_qfi_pure_examples():
    assert fisher.qfi_pure(1.0, 0.0) == pytest.approx(4.0)
    phi = 0.7
    assert fisher.qfi_pure(phi ** 2, 1j * phi) == pytest.approx(0.0, abs=1e-15)
    # psi = (cos G, sin G): |dpsi|^2 = 1, <dpsi|psi> = 0
    G = 0.4
    psi, dpsi = np.array([math.cos(G), math.sin(G)]), np.array([-math.sin(G), math.cos(G)])
    assert fisher.qfi_pure(np.vdot(dpsi, dpsi), np.vdot(dpsi, psi)) == pytest.approx(4.0)


def test_qfi_pure_rejects_cauchy_schwarz_violation():
    with pytest.raises(DomainError):
        fisher.qfi_pure(0.5, 1.0)


# --- rank-2 QFI -----------------------------------------------------------------


def test_gram_matches_eigen_oracle_random():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        n = int(rng.integers(4, 33))
        vecs = _random_branches(rng, n)
        q_gram = fisher.qfi_rank2_gram(fisher.gram_matrix(vecs))
        q_eig = _eigen(*vecs)
        assert abs(q_gram - q_eig) <= 1e-8 * (1 + q_eig)


@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 12), complex_=st.booleans())
@settings(max_examples=80, deadline=None)
def test_gram_vectors_eigen_triangle(seed, n, complex_):
    rng = np.random.default_rng(seed)
    vecs = _random_branches(rng, n, complex_)
    q_eig = _eigen(*vecs)
    q_vec = fisher.qfi_rank2_vectors(*vecs)
    assert q_vec == pytest.approx(q_eig, rel=1e-8, abs=1e-8)
    # the Gram route squares the condition number; compare it only when the
    # smaller population is not tiny
    rho, _ = fisher.rank2_operators(*vecs)
    if np.linalg.eigvalsh(rho)[-2] < 1e-3:
        return
    q_gram = fisher.qfi_rank2_gram(fisher.gram_matrix(vecs))
    assert q_gram == pytest.approx(q_eig, rel=1e-8, abs=1e-8)


def test_gram_reduces_to_orthogonal_formula():
    rng = np.random.default_rng(3)
    n = 6
    e = np.zeros(n, complex); g = np.zeros(n, complex); de = np.zeros(n, complex); dg = np.zeros(n, complex)
    e[:2] = rng.normal(size=2) + 1j * rng.normal(size=2)
    de[:2] = rng.normal(size=2) + 1j * rng.normal(size=2)
    de[4] = rng.normal()
    g[2:4] = rng.normal(size=2) + 1j * rng.normal(size=2)
    dg[2:4] = rng.normal(size=2) + 1j * rng.normal(size=2)
    dg[5] = rng.normal()
    G = fisher.gram_matrix([e, g, de, dg])
    ortho = fisher.qfi_orthogonal_rank2(
        [G[0, 0], G[1, 1]], [G[2, 2], G[3, 3]], [G[0, 2], G[1, 3]])
    assert fisher.qfi_rank2_gram(G) == pytest.approx(ortho, rel=1e-12)
    assert ortho == pytest.approx(_eigen(e, g, de, dg), rel=1e-10)


def test_long_form_expression_disagrees_with_oracle():
    # The long-form expansion drops information leaving the support; on a
    # generic instance it differs from the spectral QFI by O(1).
    rng = np.random.default_rng(11)
    vecs = _random_branches(rng, 6)
    G = fisher.gram_matrix(vecs)
    q_eig = _eigen(*vecs)
    assert abs(_long_form_rank2(G) - q_eig) > 1e-2 * q_eig
    assert fisher.qfi_rank2_gram(G) == pytest.approx(q_eig, rel=1e-10)


def test_gram_fock_one_photon():
    gamma, G_t = 0.3, 0.8
    vecs = jcshort.jc_evolve(jcshort.fock(1), gamma, G_t)
    assert fisher.qfi_rank2_gram(fisher.gram_matrix(vecs)) == pytest.approx(G_t ** 2 / gamma, rel=1e-12)


def test_gram_ill_conditioned_raises():
    e = np.array([1.0, 0.0, 0.0], complex)
    with pytest.raises(IllConditionedError):
        fisher.qfi_rank2_gram(fisher.gram_matrix([e, 2 * e, e, e]))


def test_gram_rejects_non_hermitian():
    G = np.eye(4, dtype=complex)
    G[0, 1] = 0.5
    with pytest.raises(DomainError):
        fisher.qfi_rank2_gram(G)


def test_vectors_handle_nearly_empty_branch():
    # Fock-1 JC branches at tiny G_t: the excited branch has norm ~ Gamma G_t^2
    gamma = 2.2e-6
    for G_t in (1e-12, 1e-7, 1e-3):
        vecs = jcshort.jc_evolve(jcshort.fock(1), gamma, G_t)
        assert fisher.qfi_rank2_vectors(*vecs) == pytest.approx(G_t ** 2 / gamma, rel=1e-10)


# --- orthogonal rank 2 ----------------------------------------------------------


def test_orthogonal_real_amplitudes():
    assert fisher.qfi_orthogonal_rank2([0.3, 0.7], [1.5, 2.0], [0.2, -0.4]) == pytest.approx(4 * 3.5)


def test_orthogonal_empty_branch():
    q = fisher.qfi_orthogonal_rank2([0.0, 1.0], [0.0, 2.0], [0.0, 0.5j])
    assert q == pytest.approx(4 * 2.0 - 4 * 0.25)
    with pytest.raises(DomainError):
        fisher.qfi_orthogonal_rank2([0.0, 1.0], [0.1, 2.0], [0.3j, 0.0])


def test_orthogonal_fock_two_photon_analytic():
    # Fock-2 JC branches: e = -i sin(r G sqrt 2)|1>, g = cos(r G sqrt 2)|2>, r = sqrt(Gamma)
    gamma, G_t = 0.2, 1.1
    th = math.sqrt(gamma) * G_t * math.sqrt(2)
    dth = G_t * math.sqrt(2) / (2 * math.sqrt(gamma))
    norms = [math.sin(th) ** 2, math.cos(th) ** 2]
    dd = [(math.cos(th) * dth) ** 2, (math.sin(th) * dth) ** 2]
    ds = [math.sin(th) * math.cos(th) * dth, -math.cos(th) * math.sin(th) * dth]
    assert fisher.qfi_orthogonal_rank2(norms, dd, ds) == pytest.approx(2 * G_t ** 2 / gamma, rel=1e-12)


# --- qfi_eigen and extended convexity -------------------------------------------


@given(p=st.floats(0.01, 0.99), dp=st.floats(-5, 5))
@settings(max_examples=50, deadline=None)
def test_eigen_commuting_family_is_binary_cfi(p, dp):
    q = fisher.qfi_eigen(np.diag([p, 1 - p]), np.diag([dp, -dp]))
    assert q == pytest.approx(fisher.cfi_binary(p, dp), rel=1e-12)


def test_eigen_pure_state_matches_qfi_pure():
    rng = np.random.default_rng(5)
    psi = rng.normal(size=5) + 1j * rng.normal(size=5)
    psi /= np.linalg.norm(psi)
    dpsi = rng.normal(size=5) + 1j * rng.normal(size=5)
    dpsi -= np.vdot(psi, dpsi).real * psi  # keep the norm fixed to first order
    rho = np.outer(psi, psi.conj())
    drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
    assert fisher.qfi_eigen(rho, drho) == pytest.approx(fisher.qfi_pure(np.vdot(dpsi, dpsi), np.vdot(dpsi, psi)))


def test_eigen_rejects_non_hermitian():
    with pytest.raises(DomainError):
        fisher.qfi_eigen(np.array([[1, 1], [0, 0]]), np.zeros((2, 2)))


def _random_bipartite_rank2(rng, da, db):
    vecs = _random_branches(rng, da * db)
    rho, drho = fisher.rank2_operators(*vecs)
    return rho, drho


def _ptrace_b(m, da, db):
    return np.einsum("ajbj->ab", m.reshape(da, db, da, db))


@given(seed=st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_partial_trace_never_increases_qfi(seed):
    rng = np.random.default_rng(seed)
    da, db = 3, 2
    rho, drho = _random_bipartite_rank2(rng, da, db)
    q_joint = fisher.qfi_eigen(rho, drho, cutoff=0.0)
    q_red = fisher.qfi_eigen(_ptrace_b(rho, da, db), _ptrace_b(drho, da, db), cutoff=0.0)
    assert q_red <= q_joint * (1 + 1e-9) + 1e-12


def test_extended_convexity_orthogonal_mixture_is_tight():
    rng = np.random.default_rng(7)
    p = np.array([0.2, 0.5, 0.3])
    dp = np.array([0.4, -0.1, -0.3])
    blocks, qs = [], []
    rho = np.zeros((6, 6), complex)
    drho = np.zeros((6, 6), complex)
    for k in range(3):
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        d = rng.normal(size=2) + 1j * rng.normal(size=2)
        d -= np.vdot(psi, d).real * psi
        sl = slice(2 * k, 2 * k + 2)
        r = np.outer(psi, psi.conj())
        dr = np.outer(d, psi.conj()) + np.outer(psi, d.conj())
        rho[sl, sl] = p[k] * r
        drho[sl, sl] = dp[k] * r + p[k] * dr
        qs.append(fisher.qfi_pure(np.vdot(d, d), np.vdot(d, psi)))
        blocks.append(r)
    assert fisher.qfi_eigen(rho, drho) == pytest.approx(fisher.extended_convexity_rhs(p, dp, qs), rel=1e-8)


def test_extended_convexity_bounds_overlapping_mixture():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = rng.dirichlet([1, 1])
        dp = np.array([0.3, -0.3]) * rng.normal()
        rho = np.zeros((3, 3), complex)
        drho = np.zeros((3, 3), complex)
        qs = []
        for k in range(2):
            psi = rng.normal(size=3) + 1j * rng.normal(size=3)
            psi /= np.linalg.norm(psi)
            d = rng.normal(size=3) + 1j * rng.normal(size=3)
            d -= np.vdot(psi, d).real * psi
            r = np.outer(psi, psi.conj())
            rho += p[k] * r
            drho += dp[k] * r + p[k] * (np.outer(d, psi.conj()) + np.outer(psi, d.conj()))
            qs.append(fisher.qfi_pure(np.vdot(d, d), np.vdot(d, psi)))
        assert fisher.qfi_eigen(rho, drho) <= fisher.extended_convexity_rhs(p, dp, qs) * (1 + 1e-9)


def test_extended_convexity_degenerate_cases():
    assert fisher.extended_convexity_rhs([1.0], [0.0], [3.2]) == pytest.approx(3.2)
    assert fisher.extended_convexity_rhs([0.2, 0.3, 0.5], [0, 0, 0], [1.0, 2.0, 4.0]) == pytest.approx(2.8)
    with pytest.raises(DomainError):
        fisher.extended_convexity_rhs([0.5, 0.5], [0.1], [1.0, 1.0])


def test_no_warnings_on_regular_input():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fisher.cfi_binary(0.4, 0.2)
