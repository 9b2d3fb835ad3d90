"""Independent high-precision reference evaluations (mpmath, 40 digits).

Kept free of any echolab import on purpose: these are the oracles the
closed-form implementations are checked against.
"""

import mpmath as mp

mp.mp.dps = 40


def f_ansatz(x, delta, b=1.0):
    return mp.power(1 + mp.mpf(b) * mp.mpf(x), -2 * mp.mpf(delta))


def echo_incoherent(n, t, gamma_I, kappa, delta_O):
    x = n * mp.mpf(gamma_I) * mp.e ** (mp.mpf(kappa) * mp.mpf(t))
    return mp.power(1 + x, -2 * mp.mpf(delta_O))


def coherent_argument(t, gamma_c, kappa, delta_d, b):
    x = mp.mpf(gamma_c) * mp.e ** (mp.mpf(kappa) * mp.mpf(t))
    return 2 * x + (1 - mp.power(1 + b * x, -2 * mp.mpf(delta_d))) / (mp.mpf(b) * mp.mpf(delta_d))


def echo_coherent_two_round(t, gamma_c, kappa, delta_O, delta_d, b):
    A = coherent_argument(t, gamma_c, kappa, delta_d, b)
    return mp.power(1 + A, -2 * mp.mpf(delta_O))


def echo_full_two_round(t, gamma_I, gamma_c, kappa, delta_O, delta_d, b):
    g = mp.mpf(gamma_I) + mp.mpf(gamma_c)
    if g == 0:
        return mp.mpf(1)
    x = g * mp.e ** (mp.mpf(kappa) * mp.mpf(t))
    arg = 2 * x + (mp.mpf(gamma_c) / (mp.mpf(b) * mp.mpf(delta_d) * g)) \
        * (1 - mp.power(1 + b * x, -2 * mp.mpf(delta_d)))
    return mp.power(1 + arg, -2 * mp.mpf(delta_O))


def partial_series_incoherent(x, delta_O, m_terms=2000):
    """Plain high-precision partial sum of the vertex series."""
    x = mp.mpf(x)
    total = mp.mpf(0)
    term = mp.mpf(1)
    for m in range(m_terms):
        total += term
        term *= -x * (2 * mp.mpf(delta_O) + m) / (m + 1)
    return total
