"""Independent oracles used by the test suite.

These deliberately avoid the library's rearranged/stabilized code paths:
closed forms are transcribed directly in mpmath, and spectral quantities
are computed by adaptive quadrature or plain sums.
"""

import math
import warnings

import mpmath as mp
import numpy as np
from scipy.integrate import quad

mp.mp.dps = 50


def quiet_params_from_db(f3db, l100_db, linf_db=None, f_ref=1e5):
    """Construct params suppressing the corner-vs-reference validity warning.

    Needed for catalogued parameter sets whose corner exceeds f_ref/10
    (e.g. the 2 MHz high-frequency process of the cellular model fit).
    """
    from phasenoise import OscillatorParams
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return OscillatorParams.from_db(f3db, l100_db, linf_db, f_ref=f_ref)


# ---------------------------------------------------------------------------
# direct mpmath transcriptions of the closed forms (naive, unrearranged)

def eta_direct(r):
    r = mp.mpf(r)
    return 1 + (2 / mp.pi) * ((r / 2) * mp.log(1 + 1 / r ** 2) - mp.atan(1 / r))


def eta_d_direct(r):
    r = mp.mpf(r)
    return 1 + (2 / mp.pi) * (r - (1 + r ** 2) * mp.atan(1 / r))


def eta_isi_direct(r):
    r = mp.mpf(r)
    return (2 / mp.pi) * (r ** 2 * mp.atan(1 / r) + (r / 2) * mp.log(1 + 1 / r ** 2) - r)


def gamma0_direct(r):
    r = mp.mpf(r)
    return (2 / mp.pi) * (mp.atan(1 / r) * (1 - r ** 2) - r * mp.log(1 + 1 / r ** 2) + r)


def sum_gamma_direct(r):
    r = mp.mpf(r)
    return (2 / mp.pi) * (mp.atan(1 / r) - (r / 2) * mp.log(1 + 1 / r ** 2))


def corr_g_direct(r):
    # E{exp(-j theta_k) g_{0,k}} for the sinc pulse, free-running phase
    r = mp.mpf(r)
    return (2 / mp.pi) * (mp.atan(1 / r) - (r / 2) * mp.log(1 + 1 / r ** 2))


# ---------------------------------------------------------------------------
# quadrature oracles

def gamma0_quadrature(rho: float) -> float:
    """Triangular-weighted integral of the free-running phasor Lorentzian."""
    def f(x):
        return (1.0 - x) ** 2 * (rho / math.pi) / (rho * rho + x * x)

    if rho < 0.1:
        v1, _ = quad(f, 0.0, 10.0 * rho, epsabs=1e-14, epsrel=1e-12, limit=500)
        v2, _ = quad(f, 10.0 * rho, 1.0, epsabs=1e-14, epsrel=1e-12, limit=500)
        return 2.0 * (v1 + v2)
    v, _ = quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=500)
    return 2.0 * v


def aliasing_quadrature(amp: float, f3db: float, ts: float) -> float:
    """2 * integral of the floorless PSD outside [-1/(2ts), 1/(2ts)]."""
    def s(f):
        return amp / (f3db * f3db + f * f)

    hi = 1.0 / (2.0 * ts)
    v1, _ = quad(s, hi, 100.0 * hi, epsabs=1e-16, epsrel=1e-12, limit=500)
    # map the tail f in [100*hi, inf) to u = 1/f
    v2, _ = quad(lambda u: s(1.0 / u) / (u * u), 0.0, 1.0 / (100.0 * hi),
                 epsabs=1e-16, epsrel=1e-12, limit=500)
    return 2.0 * (v1 + v2)


def psd_from_autocorr_quadrature(amp: float, f3db: float, f: float) -> float:
    """Cosine transform of the exponential autocorrelation."""
    r0 = math.pi * amp / f3db
    rate = 2.0 * math.pi * f3db
    tau_max = 40.0 / rate

    def r(t):
        return r0 * math.exp(-rate * t)

    v, _ = quad(r, 0.0, tau_max, weight="cos", wvar=2.0 * math.pi * f,
                epsabs=1e-13, epsrel=1e-11, limit=500)
    return 2.0 * v


def autocorr_from_psd_quadrature(amp: float, f3db: float, tau: float) -> float:
    """Inverse transform (cosine) of the floorless Lorentzian PSD."""
    def s(f):
        return amp / (f3db * f3db + f * f)

    if tau == 0.0:
        v1, _ = quad(s, 0.0, 1000.0 * f3db, epsabs=1e-15, epsrel=1e-12, limit=500)
        v2, _ = quad(lambda u: s(1.0 / u) / (u * u), 0.0, 1e-3 / f3db,
                     epsabs=1e-15, epsrel=1e-12, limit=500)
        return 2.0 * (v1 + v2)
    v, _ = quad(s, 0.0, np.inf, weight="cos", wvar=2.0 * math.pi * tau, limit=500)
    return 2.0 * v


def phasor_total_power(params, psd_fn, epsabs: float = 1e-12) -> float:
    """delta weight plus the full integral of the continuous phasor density.

    ``psd_fn(f)`` must return a PhasorPsdValue; the tail beyond 1000x the
    spectrum width is integrated through the u = 1/f substitution.
    """
    probe = psd_fn(0.0)
    width = max(params.f3db, params.phasor_halfwidth)
    big = 1000.0 * width

    def cont(f):
        return psd_fn(f).continuous

    with np.errstate(all="ignore"):
        v1, _ = quad(cont, 0.0, 10.0 * width, epsabs=epsabs, epsrel=1e-10, limit=800)
        v2, _ = quad(cont, 10.0 * width, big, epsabs=max(epsabs, 1e-10),
                     epsrel=1e-9, limit=800)
        v3, _ = quad(lambda u: cont(1.0 / u) / (u * u), 0.0, 1.0 / big,
                     epsabs=max(epsabs, 1e-10), epsrel=1e-9, limit=800)
    return probe.delta_weight + 2.0 * (v1 + v2 + v3)


def folded_lorentzian(amp: float, f3db: float, f: np.ndarray, fs: float,
                      nfold: int = 40) -> np.ndarray:
    """Aliased sampled-process PSD: the Lorentzian folded at multiples of fs."""
    out = np.zeros_like(np.asarray(f, dtype=float))
    for k in range(-nfold, nfold + 1):
        out = out + amp / (f3db ** 2 + (f + k * fs) ** 2)
    return out


# ---------------------------------------------------------------------------
# pulse-domain oracle for the link simulator

def pulse_gammas(pulse: np.ndarray, ov: int, rho: float, nlag: int) -> np.ndarray:
    """gamma_l for an arbitrary sampled pulse under free-running phase noise.

    gamma_l = integral |F{p(z) p(z - l Ts)}(f)|^2 S_h(f) df with the
    free-running phasor Lorentzian S_h; pulse sampled at ov points per
    symbol with unit energy.  The Lorentzian is integrated exactly per
    frequency bin (atan masses), so narrow peaks are captured on a
    coarse grid; |Q| only needs to be smooth across a bin.
    """
    dt = 1.0 / ov
    p0 = pulse / math.sqrt(np.sum(pulse * pulse) * dt)
    # zero-pad so shifted copies never wrap
    n = int(2 ** math.ceil(math.log2(p0.size + nlag * ov + 1)))
    p = np.zeros(n)
    p[: p0.size] = p0
    freqs = np.fft.rfftfreq(n, d=dt)
    df = freqs[1] - freqs[0]
    # two-sided mass of S_h inside each one-sided bin
    edges = np.concatenate([[0.0], freqs + df / 2.0])
    cdf = np.arctan(edges / rho) / math.pi
    mass = 2.0 * np.diff(cdf)
    g = np.zeros(nlag + 1)
    for lag in range(nlag + 1):
        q = p * np.roll(p, lag * ov)
        qf = np.fft.rfft(q) * dt
        g[lag] = float(np.sum(np.abs(qf) ** 2 * mass))
    return g
