import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from pulse_qfi import onephoton, pulses
from pulse_qfi.pulses import CouplingConfig, PulseShape, ShapeKind

CLOSED = [ShapeKind.RECTANGULAR, ShapeKind.RISING_EXP, ShapeKind.DECAYING_EXP, ShapeKind.SYMMETRIC_EXP]
ALL = CLOSED + [ShapeKind.GAUSSIAN]


def _decomp(kind, x, ratio=0.0, t=math.inf):
    return onephoton.qfi_decomposition(onephoton.solve(PulseShape(kind, 1.0), CouplingConfig(x, ratio)), t)


def _wavepacket_oracle(x, h=1e-3):
    """Gaussian Gamma**2 Q_inf from a gridded outgoing wavepacket and finite differences."""
    tau = np.arange(-9.0, 9.0 + 60.0 / x, h)
    xi = pulses.amplitude(PulseShape(ShapeKind.GAUSSIAN, 1.0), tau)

    def out(g):
        k = g / 2
        decay = math.exp(-k * h)
        A = np.zeros_like(tau)
        for i in range(1, tau.size):
            A[i] = decay * A[i - 1] + 0.5 * h * (decay * xi[i - 1] + xi[i])
        return xi - g * A

    d = 1e-4 * x
    psi = out(x)
    dpsi = (out(x + d) - out(x - d)) / (2 * d)
    dd = simpson(dpsi * dpsi, x=tau)
    ov = simpson(psi * dpsi, x=tau)
    return 4 * x * x * (dd - ov * ov)


# --- closed forms ---------------------------------------------------------------


@pytest.mark.parametrize("kind", CLOSED)
@pytest.mark.parametrize("x", [0.05, 0.3, 1.0, 2.0, 10.0])
def test_closed_form_asymptotics(kind, x):
    d = _decomp(kind, x)
    ref = onephoton.closed_form(kind, x)
    assert d.total == pytest.approx(ref["qfi"], rel=1e-8)
    assert d.c_orig == pytest.approx(ref["c_orig"], rel=1e-8)


@pytest.mark.parametrize("kind", CLOSED + [ShapeKind.GAUSSIAN])
@pytest.mark.parametrize("x", [0.1, 1.0, 4.0])
def test_closed_form_excitation(kind, x):
    sol = onephoton.solve(PulseShape(kind, 1.0), CouplingConfig(x))
    for s in (-2.0, -0.3, 0.2, 0.9, 1.5, 6.0):
        ref = onephoton.closed_form(kind, x, s)["p_e"]
        assert float(sol.p_e(s / x)) == pytest.approx(ref, rel=1e-7, abs=1e-13)


def test_rectangular_at_two():
    assert onephoton.closed_form("rectangular", 2.0)["qfi"] == pytest.approx(8 - 16 / math.e, rel=1e-14)


def test_exponential_ratio_is_half():
    for kind in (ShapeKind.RISING_EXP, ShapeKind.DECAYING_EXP):
        for x in np.geomspace(0.02, 20, 6):
            d = _decomp(kind, x)
            assert d.c_orig / d.total == pytest.approx(0.5, abs=1e-9)


def test_rising_exp_optimum():
    vals = {x: _decomp(ShapeKind.RISING_EXP, x).total for x in (0.5, 1.0, 2.0)}
    assert vals[1.0] == pytest.approx(2.0, abs=1e-9)
    assert vals[0.5] < vals[1.0] and vals[2.0] < vals[1.0]


# --- frozen Gaussian values (independently reproduced by the wavepacket oracle) ---------


GAUSS_FROZEN = {
    0.1: (0.856684018892002, 0.4475598273717625, 0.3597306022658499),
    1.0: (2.4908726787010824, 1.717626037962812, 0.7702492251318452),
    5.0: (0.5204289039284243, 0.4883083886828713, 0.2974929295124946),
}


@pytest.mark.parametrize("x", sorted(GAUSS_FROZEN))
def test_gaussian_frozen(x):
    total, c_orig, max_pe = GAUSS_FROZEN[x]
    sol = onephoton.solve(PulseShape(ShapeKind.GAUSSIAN, 1.0), CouplingConfig(x))
    d = onephoton.qfi_decomposition(sol)
    assert d.total == pytest.approx(total, rel=1e-9)
    assert d.c_orig == pytest.approx(c_orig, rel=1e-9)
    assert sol.max_p_e()[1] == pytest.approx(max_pe, rel=1e-9)


@pytest.mark.parametrize("x", [0.5, 1.0, 5.0])
def test_gaussian_matches_wavepacket_oracle(x):
    assert _decomp(ShapeKind.GAUSSIAN, x).total == pytest.approx(_wavepacket_oracle(x), rel=1e-5)


# --- decomposition structure -----------------------------------------------------


@given(kind=st.sampled_from(ALL), x=st.floats(0.01, 20), ratio=st.floats(0, 15),
       t=st.one_of(st.just(math.inf), st.floats(-3, 12)))
@settings(max_examples=40, deadline=None)
def test_total_is_classical_plus_quantum(kind, x, ratio, t):
    d = _decomp(kind, x, ratio, t)
    assert d.total == pytest.approx(d.classical + d.quantum, rel=1e-9, abs=1e-14)
    assert d.quantum >= -1e-12
    assert d.c_orig <= d.total * (1 + 1e-9) + 1e-14
    assert 0 <= d.p_gamma <= 1


@given(kind=st.sampled_from(ALL), x=st.floats(0.05, 10), ratio=st.floats(0, 10), t=st.floats(-2, 10))
@settings(max_examples=30, deadline=None)
def test_norm_is_conserved(kind, x, ratio, t):
    sol = onephoton.solve(PulseShape(kind, 1.0), CouplingConfig(x, ratio))
    assert float(sol.total_norm(t)) == pytest.approx(1.0, abs=1e-10)


def test_rect_loss_frozen():
    d = _decomp(ShapeKind.RECTANGULAR, 2.0, 0.5)
    assert d.total == pytest.approx(1.3149347570781686, rel=1e-9)
    assert d.classical == pytest.approx(0.004141236682972229, rel=1e-8)
    assert d.c_orig == pytest.approx(1.0401352150734675, rel=1e-9)
    assert d.p_gamma == pytest.approx(0.42852157638425675, rel=1e-9)
    d = _decomp(ShapeKind.RECTANGULAR, 2.0, 0.0, t=1.0)
    assert d.p_e == pytest.approx(d.p_gamma, rel=1e-12)
    assert d.p_e == pytest.approx(0.7991528017874555, rel=1e-9)
    assert d.total == pytest.approx(1.3147761394695092, rel=1e-9)
    assert d.classical == pytest.approx(0.10695595653262, rel=1e-8)
    assert d.quantum == pytest.approx(1.207820182936889, rel=1e-9)


def test_dpsi_matches_finite_difference():
    shape = PulseShape(ShapeKind.GAUSSIAN, 1.0)
    x, h, t = 0.7, 1e-5, 0.4
    gp = 0.3
    sol = onephoton.solve_rates(shape, x, gp)
    fd = (float(onephoton.solve_rates(shape, x + h, gp).psi_e(t))
          - float(onephoton.solve_rates(shape, x - h, gp).psi_e(t))) / (2 * h)
    assert float(sol.dpsi_e(t)) == pytest.approx(fd, rel=1e-7)


def test_wavepacket_norm_without_loss():
    sol = onephoton.solve(PulseShape(ShapeKind.DECAYING_EXP, 1.0), CouplingConfig(1.3))
    tau = np.linspace(0, 80, 160001)
    w = sol.wavepacket(math.inf, tau)
    assert simpson(w * w, x=tau) == pytest.approx(1.0, abs=1e-8)


def test_short_pulse_ratio_near_half():
    for kind in ALL + ["hg0"]:
        shape = PulseShape(ShapeKind.HERMITE_GAUSS, 1.0, order=0) if kind == "hg0" else PulseShape(kind, 1.0)
        d = onephoton.qfi_decomposition(onephoton.solve(shape, CouplingConfig(0.01)))
        assert 0.48 <= d.c_orig / d.total <= 0.52


def test_limits_vanish():
    # short coupling first: Gamma**2 Q -> 0 as Gamma T -> 0 and as Gamma T -> inf
    for kind in ALL:
        assert _decomp(kind, 1e-4).total < 1e-2
        assert _decomp(kind, 1e3).total < 1e-1


def test_linear_regime_matches_cumulative():
    # Gamma**2 Q ~ Gamma T F_t**2 when the excitation is weak
    shape = PulseShape(ShapeKind.GAUSSIAN, 1.0)
    x = 1e-3
    d = _decomp(ShapeKind.GAUSSIAN, x, t=10.0)
    F = float(pulses.scale_invariant_F(shape, 10.0))
    assert d.total == pytest.approx(x * F * F, rel=0.02)


def test_zero_coupling():
    d = _decomp(ShapeKind.GAUSSIAN, 0.0)
    assert d.total == 0.0 and d.p_e == 0.0


def test_convergence_check_small():
    cfg = CouplingConfig(0.8, 0.0)
    assert onephoton.convergence_check(PulseShape(ShapeKind.SYMMETRIC_EXP, 1.0), cfg) < 1e-8


def test_physical_units_scale():
    # the same Gamma T with T = 3 and a shifted arrival gives identical numbers
    a = onephoton.qfi_decomposition(onephoton.solve(PulseShape(ShapeKind.GAUSSIAN, 3.0, 1.5), CouplingConfig(0.4)),
                                    1.5 + 3 * 2.0)
    b = _decomp(ShapeKind.GAUSSIAN, 0.4, t=2.0)
    assert a.total == pytest.approx(b.total, rel=1e-10)
