"""PSD estimation from sample streams and model-vs-estimate comparison."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.signal

DEFAULT_SEGMENT_LEN = 2 ** 14


def db(linear) -> float | np.ndarray:
    """10*log10 of a positive linear quantity."""
    arr = np.asarray(linear, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("dB of a non-positive value")
    out = 10.0 * np.log10(arr)
    return out if arr.ndim else float(out)


def undb(level_db) -> float | np.ndarray:
    """Inverse of :func:`db`."""
    arr = np.asarray(level_db, dtype=float)
    out = 10.0 ** (arr / 10.0)
    return out if arr.ndim else float(out)


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided averaged-periodogram estimate over [0, fs/2].

    ``psd`` is a linear density normalized so that its integral over
    [0, fs/2] equals the sample variance; a white input of variance
    sigma^2 sits at the flat level 2*sigma^2/fs.
    """

    freqs: np.ndarray
    psd: np.ndarray
    n_segments: int
    window: str
    resolution: float
    nonstationary: bool = False


@dataclass(frozen=True)
class PsdComparison:
    """Per-bin dB deviation of an estimate from a model inside a band."""

    freqs: np.ndarray
    est_db: np.ndarray
    model_db: np.ndarray
    dev_db: np.ndarray
    max_dev_db: float
    rms_dev_db: float


def _nonstationary_check(samples: np.ndarray, segment_len: int) -> bool:
    # difference variance still growing at the segment scale means the
    # spectrum keeps rising below the resolution (random walks and
    # processes with corners far below fs/segment_len)
    m2 = min(segment_len, samples.size // 4)
    m1 = max(1, m2 // 64)
    v1 = np.var(samples[m1:] - samples[:-m1])
    v2 = np.var(samples[m2:] - samples[:-m2])
    if v1 == 0.0:
        return bool(v2 > 0.0)
    return bool(v2 / v1 > 10.0)


def welch_psd(samples, fs: float, segment_len: int = DEFAULT_SEGMENT_LEN,
              overlap: float = 0.5, window: str = "hann") -> PsdEstimate:
    """Averaged modified periodogram (one-sided, density scaling).

    Parameters
    ----------
    samples : array_like
        Real-valued sample stream; needs at least 4 segments.
    fs : float
        Sampling rate in Hz.
    segment_len : int
        Power-of-two segment length.
    overlap : float
        Fractional segment overlap in [0, 1).
    window : str
        Window name accepted by scipy.

    No detrending is applied, so the estimate conserves total power;
    nonstationary inputs (drifting mean) are flagged with a warning and
    the ``nonstationary`` field.
    """
    x = np.asarray(samples, dtype=float)
    if segment_len & (segment_len - 1) or segment_len <= 0:
        raise ValueError(f"segment_len must be a power of two, got {segment_len}")
    if x.size < 4 * segment_len:
        raise ValueError(f"need at least {4 * segment_len} samples, got {x.size}")
    if not (0.0 <= overlap < 1.0):
        raise ValueError("overlap must be in [0, 1)")
    noverlap = int(segment_len * overlap)
    freqs, pxx = scipy.signal.welch(
        x, fs=fs, window=window, nperseg=segment_len, noverlap=noverlap,
        detrend=False, return_onesided=True, scaling="density")
    step = segment_len - noverlap
    n_segments = 1 + (x.size - segment_len) // step
    flagged = _nonstationary_check(x, segment_len)
    if flagged:
        warnings.warn("mean still drifts at the segment scale (random walk or "
                      "unresolved corner); the PSD estimate is unreliable at "
                      "low frequencies", stacklevel=2)
    return PsdEstimate(freqs=freqs, psd=pxx, n_segments=n_segments, window=window,
                       resolution=fs / segment_len, nonstationary=flagged)


def compare_psd(est: PsdEstimate, model_fn, band: tuple[float, float]) -> PsdComparison:
    """Per-bin deviation of the estimate from a double-sided model density.

    ``model_fn(f)`` must return the double-sided linear density; the
    one-sided estimate is compared against 2x the model (this is the
    single conversion point between the two conventions).
    """
    f_lo, f_hi = band
    mask = (est.freqs >= f_lo) & (est.freqs <= f_hi)
    if not np.any(mask):
        raise ValueError(f"band [{f_lo:g}, {f_hi:g}] Hz contains no estimate bins")
    freqs = est.freqs[mask]
    est_db = db(est.psd[mask])
    model_db = db(2.0 * np.asarray(model_fn(freqs), dtype=float))
    dev = est_db - model_db
    return PsdComparison(freqs=freqs, est_db=est_db, model_db=model_db, dev_db=dev,
                         max_dev_db=float(np.max(np.abs(dev))),
                         rms_dev_db=float(np.sqrt(np.mean(dev ** 2))))
