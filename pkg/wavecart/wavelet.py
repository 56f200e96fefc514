"""
1-D discrete wavelet transform: decomposition cascade, reconstruction,
approximation-only reconstruction and universal-threshold denoising.

The filter banks and the convolve-and-downsample cascade come from PyWavelets.
Extension modes map onto PyWavelets signal extension modes:

    symmetric -> "symmetric"      (half-point symmetric, len_k = floor((len_{k-1} + L - 1) / 2))
    periodic  -> "periodization"  (len_k = ceil(len_{k-1} / 2))
    zero-pad  -> "zero"
"""
import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import pywt

from .core_types import Signal
from .utils import WavecartError

PYWT_MODES = {"symmetric": "symmetric", "periodic": "periodization", "zero-pad": "zero"}
MAD_SCALE = 0.6745

class WaveletError(WavecartError):
    pass

class LevelTooDeepError(WaveletError):
    pass

class SignalTooShortError(WaveletError):
    pass

class InconsistentCoefficientsError(WaveletError):
    pass

class EmptyArrayError(WaveletError):
    pass


@functools.lru_cache(maxsize=None)
def _pywt_wavelet(name):
    return pywt.Wavelet(name)


@dataclass(frozen=True, eq=False)
class WaveletFilter:
    name: str
    lowpass_dec: np.ndarray
    highpass_dec: np.ndarray
    lowpass_rec: np.ndarray
    highpass_rec: np.ndarray

    @classmethod
    def from_name(cls, name):
        try:
            w = _pywt_wavelet(name)
        except ValueError as e:
            raise WaveletError(f"Unknown wavelet {name!r}") from e
        bank = [np.asarray(f, dtype=float) for f in w.filter_bank]
        for f in bank:
            f.setflags(write=False)
        return cls(name, *bank)

    @property
    def length(self):
        return len(self.lowpass_dec)

    def as_pywt(self):
        return _pywt_wavelet(self.name)

    def violations(self, tol=1e-10):
        """Quadrature-mirror and normalisation checks"""
        v = []
        if abs(self.lowpass_dec.sum() - math.sqrt(2)) > tol:
            v.append("lowpass coefficients do not sum to sqrt(2)")
        if abs(self.highpass_dec.sum()) > tol:
            v.append("highpass coefficients do not sum to 0")
        L = self.length
        signs = (-1.0) ** np.arange(L)
        if not np.allclose(self.highpass_rec, signs * self.lowpass_dec, atol=tol):
            v.append("highpass reconstruction filter is not the mirror of the lowpass")
        if not np.allclose(self.lowpass_rec, self.lowpass_dec[::-1], atol=tol):
            v.append("lowpass reconstruction filter is not the time reverse of the decomposition")
        if not np.allclose(self.highpass_dec, self.highpass_rec[::-1], atol=tol):
            v.append("highpass decomposition filter is not the time reverse of the reconstruction")
        return v


@dataclass(frozen=True, eq=False)
class WaveletDecomposition:
    level: int
    approx: np.ndarray
    details: tuple          # details[0] is level 1 (finest) ... details[level-1] is level p
    original_len: int
    extension_mode: str
    grid: object = None

    def with_details(self, details):
        return WaveletDecomposition(self.level, self.approx, tuple(details), self.original_len,
                                    self.extension_mode, self.grid)


def cascade_lengths(n, level, filter_len, mode):
    """Coefficient lengths at levels 1..level"""
    lengths = []
    for _ in range(level):
        n = pywt.dwt_coeff_len(n, filter_len, PYWT_MODES[mode])
        lengths.append(n)
    return lengths


def _check_decomposable(n, level, wfilter):
    if level < 1:
        raise LevelTooDeepError(f"Decomposition level must be at least 1, got {level}")
    if n < wfilter.length:
        raise SignalTooShortError(f"Signal of length {n} is shorter than the {wfilter.name} filter ({wfilter.length})")
    if 2 ** level > n:
        raise LevelTooDeepError(f"Level {level} is too deep for a signal of length {n}")


def decompose_values(values, level, wfilter, mode="symmetric"):
    values = np.asarray(values, dtype=float)
    _check_decomposable(len(values), level, wfilter)
    with warnings.catch_warnings():
        # Boundary-effect warnings at deep levels are expected
        warnings.simplefilter("ignore", UserWarning)
        coeffs = pywt.wavedec(values, wfilter.as_pywt(), mode=PYWT_MODES[mode], level=level)
    return WaveletDecomposition(level=level, approx=coeffs[0], details=tuple(reversed(coeffs[1:])),
                                original_len=len(values), extension_mode=mode)


def dwt_decompose(s, level, wfilter, mode="symmetric"):
    d = decompose_values(s.values, level, wfilter, mode)
    return WaveletDecomposition(d.level, d.approx, d.details, d.original_len, mode, s.grid)


def reconstruct_values(d, wfilter):
    expected = cascade_lengths(d.original_len, d.level, wfilter.length, d.extension_mode)
    actual = [len(c) for c in d.details]
    if len(actual) != d.level or actual != expected or len(d.approx) != expected[-1]:
        raise InconsistentCoefficientsError(
            f"Coefficient lengths {actual} (approx {len(d.approx)}) do not match the cascade {expected}")
    coeffs = [np.asarray(d.approx, dtype=float)] + [np.asarray(c, dtype=float) for c in reversed(d.details)]
    rec = pywt.waverec(coeffs, wfilter.as_pywt(), mode=PYWT_MODES[d.extension_mode])
    return rec[:d.original_len]


def dwt_reconstruct(d, wfilter):
    values = reconstruct_values(d, wfilter)
    if d.grid is None:
        raise InconsistentCoefficientsError("Decomposition carries no grid; use reconstruct_values")
    return Signal(d.grid, values)


def approx_values(d, wfilter):
    """Reconstruction from the level-p approximation coefficients alone"""
    return reconstruct_values(d.with_details(np.zeros_like(c) for c in d.details), wfilter)


def approx_reconstruct(d, wfilter):
    return Signal(d.grid, approx_values(d, wfilter))


def estimate_noise_sigma(detail1):
    """MAD estimate from the finest detail coefficients"""
    detail1 = np.asarray(detail1, dtype=float)
    if detail1.size == 0:
        raise EmptyArrayError("Cannot estimate noise from an empty coefficient array")
    return float(np.median(np.abs(detail1)) / MAD_SCALE)


def universal_threshold(sigma, n_coeffs):
    if sigma < 0:
        raise WaveletError(f"Noise level must be nonnegative, got {sigma}")
    if n_coeffs < 2:
        raise WaveletError(f"Universal threshold needs at least 2 coefficients, got {n_coeffs}")
    return float(sigma * math.sqrt(2.0 * math.log(n_coeffs)))


@dataclass(frozen=True)
class DenoiseInfo:
    level: int
    sigma: float
    threshold: float


def denoise_level(n, wfilter, mode, level_range):
    """Deepest level in range whose coarsest approximation keeps >= 2 * filter length coefficients"""
    lo, hi = level_range
    for level in range(hi, lo - 1, -1):
        if 2 ** level > n:
            continue
        if cascade_lengths(n, level, wfilter.length, mode)[-1] >= 2 * wfilter.length:
            return level
    raise SignalTooShortError(f"Signal of length {n} is too short to denoise at levels {lo}..{hi} with {wfilter.name}")


def denoise_values(values, wfilter, mode="symmetric", level_range=(3, 5), threshold_mode="soft",
                   level_dependent=False):
    values = np.asarray(values, dtype=float)
    if len(values) < wfilter.length:
        raise SignalTooShortError(f"Signal of length {len(values)} is shorter than the {wfilter.name} filter")
    level = denoise_level(len(values), wfilter, mode, level_range)
    if np.ptp(values) == 0:
        # constants pass through bit-exact
        return values.copy(), DenoiseInfo(level, 0.0, 0.0)
    d = decompose_values(values, level, wfilter, mode)
    sigma = estimate_noise_sigma(d.details[0])
    lam = universal_threshold(sigma, d.original_len)
    details = []
    for c in d.details:
        t = universal_threshold(estimate_noise_sigma(c), d.original_len) if level_dependent else lam
        details.append(pywt.threshold(c, t, mode=threshold_mode) if t > 0 else np.array(c))
    return reconstruct_values(d.with_details(details), wfilter), DenoiseInfo(level, sigma, lam)


def denoise_with_info(s, cfg):
    wfilter = WaveletFilter.from_name(cfg.wavelet)
    values, info = denoise_values(s.values, wfilter, cfg.extension_mode, cfg.denoise_level_range,
                                  cfg.threshold_mode, cfg.level_dependent_threshold)
    return s.with_values(values), info


def denoise(s, cfg):
    return denoise_with_info(s, cfg)[0]
