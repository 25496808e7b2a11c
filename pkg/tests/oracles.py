"""Reference values computed independently of the package.

Each constant is frozen here; ``test_oracles.py`` recomputes it from its
derivation (adaptive 1-d quadrature, Gamma functions or brute-force grids)
so a drift in either place is caught.
"""
import math

# P(chi^2_3 <= 1): standard Gaussian measure of the unit ball in R^3
GAUSS_B3 = 0.19874804309879915
# Gaussian (R^3 density) integrated over a central unit disk: (2 pi)^(-1/2) (1 - e^(-1/2))
GAUSS_DISK_R3 = 0.1569715558822893
# Gaussian (R^3 density) integrated over a central unit segment
GAUSS_SEGMENT_R3 = 0.10865340727051283
# right-hand side of the arbitrary-measure hyperplane bound for B^3 and the Gaussian
ARBMEAS_RHS_B3 = 0.31394311176457856
# c_{3,1} = |B^3|^(2/3) / |B^2|
C31 = 0.8271339878658666
C21 = math.sqrt(math.pi) / 2
# |B^4| = pi^2 / 2
BALL4 = 4.934802200544679
# d_G(B_4^3, B_2^3) = 3^(1/4)
DG_L4_B3 = 3 ** 0.25
# longest chord of the square [-1, 1]^2
SQUARE_MAX_CHORD = 2 * math.sqrt(2)


def gauss_b3():
    from scipy import integrate

    f = lambda r: 4 * math.pi * r * r * (2 * math.pi) ** -1.5 * math.exp(-r * r / 2)
    return integrate.quad(f, 0, 1, epsabs=1e-14)[0]


def gauss_disk_r3():
    from scipy import integrate

    g = lambda r: 2 * math.pi * r * (2 * math.pi) ** -1.5 * math.exp(-r * r / 2)
    return integrate.quad(g, 0, 1, epsabs=1e-14)[0]


def gauss_segment_r3():
    from scipy import integrate

    h = lambda t: (2 * math.pi) ** -1.5 * math.exp(-t * t / 2)
    return integrate.quad(h, -1, 1, epsabs=1e-14)[0]


def ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def c_nm(n, m):
    return ball_volume(n) ** ((n - m) / n) / ball_volume(n - m)


def arbmeas_rhs_b3():
    return 1.5 * c_nm(3, 1) * gauss_disk_r3() * ball_volume(3) ** (1 / 3)


def square_max_chord(points=200_001):
    import numpy as np

    th = np.linspace(0, np.pi, points)
    rho = 1 / np.maximum(np.abs(np.cos(th)), np.abs(np.sin(th)))
    return 2 * rho.max()


def dg_l4_b3_grid(samples=2_000_000, seed=1):
    import numpy as np

    u = np.random.default_rng(seed).normal(size=(samples, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    r = 1 / np.sum(u ** 4, 1) ** 0.25
    return r.max() / r.min()
