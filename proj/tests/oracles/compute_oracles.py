"""Independent oracles for frozen test values.

Run with `python3 compute_oracles.py`; the printed constants are pasted into
tests/frozen_oracles.hpp. Nothing here imports the C++ library.
"""
import mpmath as mp
import numpy as np

mp.mp.dps = 20


def c_h(H):
    return mp.gamma(2 * H + 1) * mp.sin(mp.pi * H) / (2 * mp.pi)


def heat_variance_bruteforce(t, H):
    # nested: theta outer, xi inner, no closed-form inner integral. The outer
    # variable is theta = v^{1/H}, which removes the theta^{H-1} endpoint
    # singularity.
    def inner(th):
        r = 1 / mp.sqrt(th)
        return 2 * mp.quad(lambda x: mp.e ** (-2 * th * x * x) * x ** (1 - 2 * H), [0, r, 4 * r, mp.inf])
    outer = lambda v: inner(v ** (1 / H)) * v ** (1 / H - 1) / H
    return c_h(H) * mp.quad(outer, [0, t ** H])


def mellin_cos_gap(x, H):
    # int_0^inf (1 - cos(x u)) u^{-1-2H} du
    return abs(x) ** (2 * H) * mp.gamma(1 - 2 * H) * mp.cos(mp.pi * H) / (2 * H)


def mellin_sin(b, s):
    # int_0^inf sin(b u) u^{s-1} du, continued to s in (-2, 0) for
    # combinations whose linear terms cancel
    return mp.gamma(s) * mp.sin(mp.pi * s / 2) * mp.sign(b) * abs(b) ** (-s)


def wave_variance_scaling(t, H):
    # fixed-time energy is theta^{2H} C with C = 2 int sin(y)^2 y^{-1-2H} dy
    C = mellin_cos_gap(2, H)
    return c_h(H) * C * t ** (1 + 2 * H) / (1 + 2 * H)


def wave_gap_mellin(t, H, x):
    s = -1 - 2 * H
    second = mellin_sin(2 * t, s) - (mellin_sin(2 * t + x, s) + mellin_sin(2 * t - x, s)) / 2
    return 2 * c_h(H) * ((t / 2) * mellin_cos_gap(x, H) - second / 4)


def heat_gap_split(t, H, x, L=60):
    ch = c_h(H)
    K = lambda xi: -mp.expm1(-2 * t * xi * xi) / (2 * xi * xi)
    f = lambda xi: 2 * ch * (1 - mp.cos(xi * x)) * xi ** (1 - 2 * H) * K(xi)
    head = mp.quad(f, [mp.mpf(k) for k in range(0, L + 1)])
    # beyond L the Gaussian factor is below e^{-7000}
    p = -1 - 2 * H
    tail = mp.mpf(L) ** (-2 * H) / (4 * H) - mp.quadosc(lambda s: mp.cos(x * s) * s ** p, [L, mp.inf], omega=x) / 2
    return head + 2 * ch * tail


def wave_gap_montecarlo(t, H, x, n=4_000_000, seed=20240607):
    # importance sampling of the spectral integral: xi ~ Pareto-like density
    # p(xi) = a/(1+xi)^(1+a) on (0, inf) with a = 2H; weight = f/p.
    rng = np.random.default_rng(seed)
    a = 2 * H
    u = rng.random(n)
    xi = (1 - u) ** (-1 / a) - 1
    ch = float(c_h(H))
    K = np.where(xi * t < 1e-4, t ** 3 / 3, (t / 2 - np.sin(2 * t * xi) / (4 * xi)) / np.maximum(xi, 1e-300) ** 2)
    f = 2 * ch * (1 - np.cos(xi * x)) * xi ** (1 - 2 * H) * K
    p = a / (1 + xi) ** (1 + a)
    w = f / p
    return w.mean(), w.std(ddof=1) / np.sqrt(n)


def isometry_oracles(H):
    ch = c_h(H)
    w = lambda x: abs(x) ** (1 - 2 * H)
    phi1 = ch * mp.quad(lambda x: mp.pi * mp.e ** (-x * x / 2) * w(x), [-mp.inf, 0, mp.inf]) * 1
    phi2 = ch * mp.quad(lambda x: 2 * mp.pi * x * x * mp.e ** (-x * x) * w(x), [-mp.inf, 0, mp.inf]) * mp.mpf('2.5')
    g3 = lambda x: (mp.pi / 2) * (mp.e ** (-(x - 2) ** 2) + mp.e ** (-(x + 2) ** 2)
                                  + 2 * mp.e ** (-x * x - 4))
    phi3 = ch * mp.quad(lambda x: g3(x) * w(x), [-mp.inf, -2, 0, 2, mp.inf]) * mp.mpf('0.5')
    return phi1, phi2, phi3


def heat_gap_hypergeometric(t, H, x):
    # int (1 - cos(b u)) u^{-1-2H} e^{-a u^2} du via analytic continuation of
    # int u^{s-1} cos(b u) e^{-a u^2} du = Gamma(s/2) / (2 a^{s/2}) 1F1(s/2; 1/2; -b^2/(4a))
    ch = c_h(H)
    a = 2 * t
    A = x ** (2 * H) * mp.gamma(1 - 2 * H) * mp.cos(mp.pi * H) / (2 * H)
    B = mp.gamma(-H) * a ** H / 2 * (1 - mp.hyp1f1(-H, mp.mpf(1) / 2, -x ** 2 / (4 * a)))
    return ch * (A - B)


if __name__ == "__main__":
    for H in ['0.1', '0.25', '0.4']:
        print(f"c_H({H}) = {mp.nstr(c_h(mp.mpf(H)), 20)}")
    H = mp.mpf('0.25')
    print("heat variance t=1 H=0.25 brute =", mp.nstr(heat_variance_bruteforce(1, H), 16))
    print("heat variance closed form      =",
          mp.nstr(c_h(H) * 2 ** H * mp.gamma(1 - H) / (2 * H), 16))
    print("wave variance t=1 H=0.25 scal  =", mp.nstr(wave_variance_scaling(mp.mpf(1), H), 16))
    print("wave gap t=1 H=0.25 x=0.5 mellin =", mp.nstr(wave_gap_mellin(mp.mpf(1), H, mp.mpf('0.5')), 16))
    print("heat gap t=1 H=0.25 x=0.5 1F1   =", mp.nstr(heat_gap_hypergeometric(mp.mpf(1), H, mp.mpf('0.5')), 16))
    m, se = wave_gap_montecarlo(1.0, 0.25, 0.5)
    print(f"wave gap t=1 H=0.25 x=0.5 MC   = {m:.10f} +- {se:.10f}")
    print("heat gap t=1 H=0.25 x=0.5 split =", mp.nstr(heat_gap_split(mp.mpf(1), H, mp.mpf('0.5')), 16))
    for Hs in ['0.1', '0.25', '0.4']:
        print(f"isometry H={Hs}:", [mp.nstr(v, 16) for v in isometry_oracles(mp.mpf(Hs))])
