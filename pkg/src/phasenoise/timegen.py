"""Seedable discrete-time phase-noise sample generators.

The close-to-carrier process sampled at period Ts is the stationary
AR(1) recursion

    theta_k = a * theta_{k-1} + u_k,
    a = exp(-2*pi*f3db*Ts),
    var(u_k) = (pi*amp/f3db) * (1 - exp(-4*pi*f3db*Ts)),

which reduces to the Wiener random walk with increment variance
4*pi^2*amp*Ts as f3db -> 0.  The white floor contributes i.i.d. samples
of variance linf_sq/Ts.  Streams are generated with numpy's PCG64
generator (seeded 64-bit, documented algorithm, ziggurat normals);
identical (model, ts, n, seed) inputs regenerate bit-identical output.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .params import CompositeModel, OscillatorParams, as_composite

# f3db*Ts validity limits of the AR parametrization
F3DB_TS_WARN = 0.01
F3DB_TS_MAX = 0.1

_BIN_MAGIC = b"PNSTREAM1\n"


@dataclass(frozen=True)
class ArCoefficients:
    """Discrete-time generator parameters (pole, innovation variance, rate)."""

    a: float
    sigma_u_sq: float
    ts: float
    stationary: bool = True

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0):
            raise ValueError(f"pole a must be in [0, 1], got {self.a}")
        if self.sigma_u_sq < 0:
            raise ValueError(f"sigma_u_sq must be >= 0, got {self.sigma_u_sq}")
        if self.a == 1.0 and self.stationary:
            raise ValueError("a=1 is the nonstationary random-walk mode")

    @property
    def stationary_variance(self) -> float:
        """sigma_u_sq / (1 - a^2); the process variance when stationary."""
        if self.a == 1.0:
            raise ValueError("random-walk mode has no stationary variance")
        if self.sigma_u_sq == 0.0:
            return 0.0
        return self.sigma_u_sq / (1.0 - self.a * self.a)


@dataclass(frozen=True)
class PnStream:
    """Generated phase samples with full regeneration metadata."""

    samples: np.ndarray
    ts: float
    seed: int
    model: dict

    def __len__(self) -> int:
        return len(self.samples)


def splitmix64(x: int) -> int:
    """SplitMix64 mixing function; the documented seed-derivation hash."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def member_seed(master_seed: int, index: int) -> int:
    """Derive the seed of component ``index`` from the master seed.

    member_seed = splitmix64(master_seed XOR splitmix64(index + 1));
    stable across versions, documented so that composite streams can be
    reproduced member by member.
    """
    return splitmix64((int(master_seed) & 0xFFFFFFFFFFFFFFFF) ^ splitmix64(index + 1))


def ar_coefficients(params: OscillatorParams, ts: float) -> ArCoefficients:
    """AR(1) pole and innovation variance for sampling period ts.

    Valid for f3db*ts << 1: warns above 0.01 and refuses above 0.1.
    The implied stationary variance equals pi*amp/f3db exactly.
    """
    if params.f3db == 0.0:
        raise ValueError("free-running oscillator: use wiener_sigma / gen_wiener")
    if ts < 0:
        raise ValueError("ts must be >= 0")
    prod = params.f3db * ts
    if prod > F3DB_TS_MAX:
        raise ValueError(f"f3db*ts = {prod:g} outside the model validity range "
                         f"(needs <= {F3DB_TS_MAX})")
    if prod > F3DB_TS_WARN:
        warnings.warn(f"f3db*ts = {prod:g} stretches the model validity "
                      f"(recommended <= {F3DB_TS_WARN})", stacklevel=2)
    a = math.exp(-2.0 * math.pi * prod)
    sigma_u_sq = (math.pi * params.amp / params.f3db) * (-math.expm1(-4.0 * math.pi * prod))
    return ArCoefficients(a=a, sigma_u_sq=sigma_u_sq, ts=ts, stationary=a < 1.0)


def wiener_sigma(params: OscillatorParams, ts: float) -> float:
    """Random-walk increment variance 4*pi^2*amp*ts, rad^2."""
    if not ts > 0:
        raise ValueError("ts must be > 0")
    return 4.0 * math.pi ** 2 * params.amp * ts


def gen_ar(coeffs: ArCoefficients, n: int, seed: int) -> PnStream:
    """Stationary AR(1) stream of n samples.

    theta_0 is drawn from the stationary distribution
    N(0, sigma_u_sq/(1-a^2)) so the stream is stationary from its first
    sample; the draw order is theta_0 first, then the n-1 innovations.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if coeffs.a >= 1.0:
        raise ValueError("a=1 is the random-walk mode: use gen_wiener")
    rng = np.random.default_rng(seed)
    theta0 = rng.normal(0.0, math.sqrt(coeffs.stationary_variance))
    drive = np.empty(n)
    drive[0] = theta0
    if n > 1:
        drive[1:] = rng.normal(0.0, math.sqrt(coeffs.sigma_u_sq), n - 1)
    samples = lfilter([1.0], [1.0, -coeffs.a], drive)
    model = {"kind": "ar", "a": coeffs.a, "sigma_u_sq": coeffs.sigma_u_sq}
    return PnStream(samples=samples, ts=coeffs.ts, seed=int(seed), model=model)


def gen_wiener(sigma_u_sq: float, n: int, seed: int, ts: float = 0.0) -> PnStream:
    """Random-walk stream: theta_0 = 0, increments i.i.d. N(0, sigma_u_sq)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma_u_sq < 0:
        raise ValueError("sigma_u_sq must be >= 0")
    rng = np.random.default_rng(seed)
    samples = np.zeros(n)
    if n > 1:
        inc = rng.normal(0.0, math.sqrt(sigma_u_sq), n - 1)
        np.cumsum(inc, out=samples[1:])
    model = {"kind": "wiener", "sigma_u_sq": sigma_u_sq}
    return PnStream(samples=samples, ts=ts, seed=int(seed), model=model)


def gen_white_floor(linf_sq: float, ts: float, n: int, seed: int) -> PnStream:
    """White floor stream: i.i.d. N(0, linf_sq/ts)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if linf_sq < 0:
        raise ValueError("linf_sq must be >= 0")
    if not ts > 0:
        raise ValueError("ts must be > 0")
    rng = np.random.default_rng(seed)
    var = linf_sq / ts
    samples = rng.normal(0.0, math.sqrt(var), n) if var > 0 else np.zeros(n)
    model = {"kind": "white", "variance": var}
    return PnStream(samples=samples, ts=ts, seed=int(seed), model=model)


def gen_composite(model, ts: float, n: int, seed: int) -> PnStream:
    """Sum of independently seeded member streams.

    Each member contributes its close-to-carrier stream (AR for
    f3db > 0, random walk for f3db = 0) seeded with member_seed(seed, 2i)
    and, when linf_sq > 0, a white-floor stream seeded with
    member_seed(seed, 2i + 1).
    """
    comp = as_composite(model)
    total = np.zeros(n)
    members = []
    for i, p in enumerate(comp.processes):
        s_core = member_seed(seed, 2 * i)
        if p.f3db == 0.0:
            core = gen_wiener(wiener_sigma(p, ts), n, s_core, ts=ts)
        else:
            core = gen_ar(ar_coefficients(p, ts), n, s_core)
        total += core.samples
        members.append(core.model)
        if p.linf_sq > 0.0:
            s_floor = member_seed(seed, 2 * i + 1)
            floor = gen_white_floor(p.linf_sq, ts, n, s_floor)
            total += floor.samples
            members.append(floor.model)
    return PnStream(samples=total, ts=ts, seed=int(seed),
                    model={"kind": "composite", "members": members})


def save_stream_csv(stream: PnStream, path) -> None:
    """Dump as two-column CSV ``k,theta_rad``."""
    with open(path, "w") as fh:
        fh.write("k,theta_rad\n")
        for k, th in enumerate(stream.samples):
            fh.write(f"{k},{float(th)!r}\n")


def load_stream_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 1]


def save_stream_bin(stream: PnStream, path) -> None:
    """Binary dump: magic line, JSON header line, little-endian float64 payload."""
    header = {"ts": stream.ts, "seed": stream.seed, "model": stream.model,
              "n": len(stream.samples), "dtype": "<f8"}
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(stream.samples.astype("<f8").tobytes())


def load_stream_bin(path) -> PnStream:
    with open(path, "rb") as fh:
        magic = fh.read(len(_BIN_MAGIC))
        if magic != _BIN_MAGIC:
            raise ValueError(f"not a phase-noise stream file: {path}")
        header = json.loads(fh.readline().decode())
        payload = fh.read(8 * header["n"])
    samples = np.frombuffer(payload, dtype="<f8").copy()
    if samples.size != header["n"]:
        raise ValueError("truncated stream payload")
    return PnStream(samples=samples, ts=header["ts"], seed=header["seed"],
                    model=header["model"])
