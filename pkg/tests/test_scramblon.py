import math
import warnings

import numpy as np
import pytest

from echolab import (ScramblonParams, coherent_argument, crossover_time,
                     echo_coherent_two_round, echo_coherent_via_vertex_integral,
                     echo_full_two_round, echo_incoherent, echo_perturbative,
                     echo_series_incoherent, effective_round_exponent, f_ansatz,
                     renormalized_vertex, vertex_coefficient)
from echolab.errors import (DomainError, PerturbationWarning,
                            SeriesConvergenceError)

from . import highprec


# ---------------------------------------------------------------- f_ansatz

def test_f_ansatz_normalization():
    assert f_ansatz(0.0, 1.37, 1.0) == 1.0


def test_f_ansatz_half():
    assert f_ansatz(1.0, 0.5, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_f_ansatz_highprec_value():
    # frozen from tests/highprec.py at 40 digits
    assert f_ansatz(0.5969, 1.37, 1.0) == pytest.approx(
        0.27734417234188348, rel=1e-14)


def test_f_ansatz_domain_errors():
    with pytest.raises(DomainError):
        f_ansatz(-0.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        f_ansatz(0.1, -1.0, 1.0)
    with pytest.raises(DomainError):
        f_ansatz(0.1, 1.0, 0.0)


# ------------------------------------------------------- vertex coefficients

def test_vertex_trivial():
    assert vertex_coefficient(0, 0.77) == 1.0
    assert vertex_coefficient(1, 0.5) == 1.0          # 2*delta
    assert vertex_coefficient(3, 0.5) == 6.0          # 1*2*3


def test_vertex_matches_symbolic_derivatives():
    sympy = pytest.importorskip("sympy")
    x, d = sympy.symbols("x d", positive=True)
    f = (1 + x) ** (-2 * d)
    for delta in (0.5, 1.37):
        for m in range(5):
            # f_V(x) = sum_m (-x)^m/m! * Y_m  =>  Y_m = (-1)^m f^(m)(0)
            deriv = sympy.diff(f, x, m).subs({x: 0, d: delta})
            expected = (-1) ** m * float(deriv)
            assert vertex_coefficient(m, delta) == pytest.approx(expected, rel=1e-12)


# ----------------------------------------------------------------- series

def test_series_trivial_zero_error():
    p = ScramblonParams(kappa=1.0, gamma_I=0.0, delta_O=0.5)
    assert echo_series_incoherent(1, 0.0, p) == 1.0


def test_series_matches_simple_poles():
    # gamma_I e^{kt} = 0.1 at t=0, delta=0.5 -> (1.1)^-1
    p = ScramblonParams(kappa=1.0, gamma_I=0.1, delta_O=0.5)
    assert echo_series_incoherent(1, 0.0, p, m_max=60) == pytest.approx(
        1.0 / 1.1, abs=1e-12)
    p2 = ScramblonParams(kappa=1.0, gamma_I=0.1, delta_O=1.0)
    assert echo_series_incoherent(2, 0.0, p2, m_max=80) == pytest.approx(
        1.4 ** -2, abs=1e-12)


@pytest.mark.parametrize("delta", [0.5, 1.0, 1.37])
def test_series_closed_form_equivalence(delta):
    # spec invariant: <= 1e-10 for every x in (0, 0.9] at m_max = 80
    for x in np.linspace(0.01, 0.9, 30):
        p = ScramblonParams(kappa=1.0, gamma_I=float(x), delta_O=delta)
        series = echo_series_incoherent(1, 0.0, p, m_max=80)
        closed = echo_incoherent(1, 0.0, p)
        assert abs(series - closed) <= 1e-10, (x, delta)


def test_series_aborts_past_radius():
    p = ScramblonParams(kappa=1.0, gamma_I=1.2, delta_O=1.0)
    with pytest.raises(SeriesConvergenceError):
        echo_series_incoherent(1, 0.0, p)


# ------------------------------------------------------------ incoherent

def test_incoherent_zero_error():
    p = ScramblonParams(kappa=1.0, gamma_I=0.0)
    assert echo_incoherent(1, 0.0, p) == 1.0


def test_incoherent_fig3_value(fig3_params):
    # frozen high-precision evaluation at n=2, t=8
    assert echo_incoherent(2, 8.0, fig3_params) == pytest.approx(
        0.11615846396084319, rel=1e-13)


def test_incoherent_shift_collapse(fig3_params):
    p = fig3_params
    for n in (2, 4, 7):
        for t in (0.5, 3.0, 8.0):
            lhs = echo_incoherent(n, t, p)
            rhs = echo_incoherent(1, t + math.log(n) / p.kappa, p)
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_monotonicity_in_all_arguments():
    t = np.linspace(0.0, 9.0, 40)
    p = ScramblonParams(kappa=0.9, gamma_I=1e-3, gamma_c=1e-3,
                        delta_O=1.2, delta_d=2.4)
    for fn in (lambda q: echo_incoherent(2, t, q),
               lambda q: echo_coherent_two_round(t, q),
               lambda q: echo_full_two_round(t, q)):
        F = fn(p)
        assert np.all(np.diff(F) <= 1e-15)          # nonincreasing in t
    # nonincreasing in n
    assert np.all(echo_incoherent(3, t, p) <= echo_incoherent(2, t, p) + 1e-15)
    # nonincreasing in gamma
    p_hi = ScramblonParams(kappa=0.9, gamma_I=2e-3, gamma_c=2e-3,
                           delta_O=1.2, delta_d=2.4)
    assert np.all(echo_incoherent(2, t, p_hi) <= echo_incoherent(2, t, p) + 1e-15)
    assert np.all(echo_coherent_two_round(t, p_hi)
                  <= echo_coherent_two_round(t, p) + 1e-15)


# ------------------------------------------------------ renormalized vertex

def test_renormalized_vertex_limits(fig3_params):
    assert renormalized_vertex(0.0, fig3_params) == pytest.approx(1.0, abs=2e-3)
    assert renormalized_vertex(40.0, fig3_params) < 1e-12


def test_renormalized_vertex_value():
    # gamma_c e^{kappa s} = 1, b = 1, delta_d = 2.74 -> 2^{-6.48}
    p = ScramblonParams(kappa=1.0, gamma_c=1.0, delta_O=1.37, delta_d=2.74)
    assert renormalized_vertex(0.0, p) == pytest.approx(
        0.011202775375123651, rel=1e-13)


def test_renormalized_vertex_requires_coherent():
    p = ScramblonParams(kappa=1.0, gamma_I=1e-3)
    with pytest.raises(DomainError):
        renormalized_vertex(1.0, p)


# ----------------------------------------------------------- coherent n=2

def test_coherent_fig3_value(fig3_params):
    # frozen high-precision evaluation of the stated formula at t=8
    assert coherent_argument(8.0, fig3_params) == pytest.approx(
        1.5308244497290862, rel=1e-13)
    assert echo_coherent_two_round(8.0, fig3_params) == pytest.approx(
        0.078534785388935809, rel=1e-13)


def test_coherent_short_time_doubling(fig3_params):
    # |F2c - f_O(4x)| <= K x^2 with the analytic K = 2 delta_O (2 delta_d + 1) b
    p = fig3_params
    K = 2.0 * p.delta_O * (2.0 * p.delta_d + 1.0) * p.b
    for x in (1e-5, 1e-4, 1e-3):
        t = math.log(x / p.gamma_c) / p.kappa
        lhs = abs(echo_coherent_two_round(t, p) - f_ansatz(4 * x, p.delta_O, 1.0))
        assert lhs <= K * x * x


def test_coherent_late_time_linear_scaling(fig3_params):
    p = fig3_params
    for x in (1e3, 1e4, 3e4):
        t = math.log(x / p.gamma_c) / p.kappa
        ratio = echo_coherent_two_round(t, p) / f_ansatz(
            2 * x + 1.0 / (p.b * p.delta_d), p.delta_O, 1.0)
        assert abs(ratio - 1.0) <= 1e-6


def test_vertex_integral_route_matches_closed_form(fig3_params):
    p = fig3_params
    t_star = crossover_time(p)
    for t in np.linspace(0.0, 1.5 * t_star, 16):
        direct = echo_coherent_two_round(float(t), p)
        via = echo_coherent_via_vertex_integral(float(t), p)
        assert abs(via - direct) <= 1e-8


# ---------------------------------------------------------------- combined

def test_full_two_round_limits(fig3_params):
    t = np.linspace(0.0, 10.0, 25)
    p_inc = ScramblonParams(kappa=0.866, gamma_I=5.85e-4, gamma_c=0.0,
                            delta_O=1.37, delta_d=2.74)
    assert np.allclose(echo_full_two_round(t, p_inc),
                       echo_incoherent(2, t, p_inc), rtol=1e-14)
    p_coh = ScramblonParams(kappa=0.866, gamma_I=0.0, gamma_c=5.85e-4,
                            delta_O=1.37, delta_d=2.74)
    assert np.allclose(echo_full_two_round(t, p_coh),
                       echo_coherent_two_round(t, p_coh), rtol=1e-14)


def test_full_two_round_frozen_value():
    p = ScramblonParams(kappa=0.866, gamma_I=3e-4, gamma_c=3e-4,
                        delta_O=1.37, delta_d=2.74)
    assert echo_full_two_round(8.0, p) == pytest.approx(
        0.091484348124850234, rel=1e-13)


def test_full_two_round_gamma_zero():
    p = ScramblonParams(kappa=1.0)
    assert echo_full_two_round(5.0, p) == 1.0


# ------------------------------------------------------------- perturbative

def test_perturbative_arithmetic():
    assert echo_perturbative(3, 0.001, 0.002) == pytest.approx(0.976)
    assert echo_perturbative(1, 0.0, 0.0) == 1.0


def test_perturbative_ratio_is_n_squared():
    B = 1e-4
    for n in (2, 3, 5):
        ratio = (1 - echo_perturbative(n, 0.0, B)) / (1 - echo_perturbative(1, 0.0, B))
        assert ratio == pytest.approx(n * n, rel=1e-12)


def test_perturbative_warns_outside_trust_region():
    with pytest.warns(PerturbationWarning):
        echo_perturbative(4, 0.01, 0.01)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        echo_perturbative(1, 0.001, 0.001)   # inside region: no warning


# ----------------------------------------------------------------- crossover

def test_crossover_time_values(fig3_params):
    assert crossover_time(fig3_params) == pytest.approx(8.5957259939173414,
                                                        rel=1e-13)
    assert crossover_time(ScramblonParams(kappa=2.0, gamma_c=1.0)) == 0.0
    kappa = 1.3
    p = ScramblonParams(kappa=kappa, gamma_c=math.exp(-kappa))
    assert crossover_time(p) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        crossover_time(ScramblonParams(kappa=1.0, gamma_c=0.0))


# --------------------------------------------------- effective round exponent

def test_exponent_incoherent_is_one(fig3_params):
    p = fig3_params
    for n in (2, 4):
        for t in (1.0, 5.0, 9.0):
            F_n = echo_incoherent(n, t, p)
            F_1 = echo_incoherent(1, t, p)
            assert effective_round_exponent(F_n, F_1, n, p.delta_O) == \
                pytest.approx(1.0, abs=1e-10)


def test_exponent_coherent_crossover(fig3_params):
    p = fig3_params
    # short time -> 2
    t_small = math.log(1e-4 / p.gamma_c) / p.kappa
    F2 = echo_coherent_two_round(t_small, p)
    F1 = f_ansatz(1e-4, p.delta_O, 1.0)
    assert effective_round_exponent(F2, F1, 2, p.delta_O) == pytest.approx(
        2.0, abs=2e-3)
    # frozen value at x = 1e3 (late-time tail toward 1)
    t_late = math.log(1e3 / p.gamma_c) / p.kappa
    F2 = echo_coherent_two_round(t_late, p)
    F1 = f_ansatz(1e3, p.delta_O, 1.0)
    assert effective_round_exponent(F2, F1, 2, p.delta_O) == pytest.approx(
        1.0002632415007557, abs=1e-9)


def test_exponent_domain():
    with pytest.raises(DomainError):
        effective_round_exponent(1.0, 0.5, 2, 1.0)
    with pytest.raises(DomainError):
        effective_round_exponent(0.5, 0.0, 2, 1.0)
