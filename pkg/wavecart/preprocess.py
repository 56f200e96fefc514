"""
Preprocessing of raw trials: truncation to the active window read from the
marker variables, denoising, linear resampling onto the unit grid and
amplitude normalisation, always in that order.
"""
from dataclasses import dataclass, field

import numpy as np

from .core_types import Grid, Signal
from .logging import logger
from .utils import DataError, WavecartError, parallel_map
from .wavelet import denoise_with_info

STAGE_ORDER = ("truncate", "denoise", "resample", "normalize")

class PreprocessError(WavecartError):
    pass

class NoCrossingError(PreprocessError):
    pass

class WindowInvertedError(PreprocessError):
    pass

class WindowRangeError(PreprocessError):
    pass

class DegenerateGridError(PreprocessError):
    pass


@dataclass(frozen=True)
class ActiveWindow:
    i_start: int
    i_end: int          # inclusive

    @property
    def length(self):
        return self.i_end - self.i_start + 1


def _min_max(values):
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return None
    return (values - lo) / (hi - lo)


def _crossings(values, frac):
    """Indices i where the normalised signal changes side of frac between i-1 and i"""
    above = values >= frac
    return np.flatnonzero(above[1:] != above[:-1]) + 1, above


def detect_active_window(start_marker, end_marker, frac=0.5):
    if len(start_marker) != len(end_marker) or start_marker.grid != end_marker.grid:
        raise PreprocessError("Marker signals are not on the same grid")
    start = _min_max(start_marker.values)
    end = _min_max(end_marker.values)
    if start is None:
        raise NoCrossingError("Start marker is constant, no crossing found")
    if end is None:
        raise NoCrossingError("End marker is constant, no crossing found")

    idx, above = _crossings(start, frac)
    upward = idx[above[idx]]
    if upward.size == 0:
        raise NoCrossingError(f"Start marker never crosses {frac} upward")
    idx, _ = _crossings(end, frac)
    if idx.size == 0:
        raise NoCrossingError(f"End marker never crosses {frac}")

    window = ActiveWindow(int(upward[0]), int(idx[-1]))
    if window.i_start >= window.i_end:
        raise WindowInvertedError(f"Active window is inverted: start {window.i_start} >= end {window.i_end}")
    return window


def truncate(trial, window):
    signals = []
    for j, s in enumerate(trial.signals, start=1):
        if window.i_start < 0 or window.i_end >= len(s):
            raise WindowRangeError(f"Window [{window.i_start}, {window.i_end}] exceeds variable {j} "
                                   f"of trial {trial.id} (length {len(s)})")
        grid = s.grid.slice(window.i_start, window.i_end + 1)
        signals.append(Signal(grid, s.values[window.i_start:window.i_end + 1]))
    return trial.with_signals(signals)


def resample_to_unit_grid(s, m):
    if len(s) < 2:
        raise DegenerateGridError(f"Cannot resample a signal of length {len(s)}")
    t = s.grid.times()
    if s.grid.is_unit:
        # Unit-grid times are already normalised
        u = t
    else:
        u = (t - t[0]) / (t[-1] - t[0])
    target = np.arange(1, m + 1) / m
    return Signal(Grid.unit(m), np.interp(target, u, s.values))


def normalize_amplitude(s):
    values = s.values
    if np.ptp(values) == 0:
        return s.with_values(np.zeros_like(values))
    return s.with_values((values - values.mean()) / values.std())


@dataclass(frozen=True)
class TrialAudit:
    trial_id: str
    window: ActiveWindow
    denoise_levels: tuple
    noise_sigmas: tuple
    stages: tuple = STAGE_ORDER
    full_range: bool = False    # constant marker, no window to detect

    def to_dict(self):
        return {"trial": self.trial_id, "i_start": self.window.i_start, "i_end": self.window.i_end,
                "truncated_length": self.window.length, "stages": list(self.stages),
                "denoise_levels": list(self.denoise_levels), "noise_sigmas": list(self.noise_sigmas),
                "full_range": self.full_range}


@dataclass
class PreprocessAudit:
    stage_order: tuple = STAGE_ORDER
    trials: list = field(default_factory=list)

    def to_dict(self):
        return {"stage_order": list(self.stage_order), "trials": [t.to_dict() for t in self.trials]}


def _preprocess_trial(job):
    trial, marker_start, marker_end, cfg = job
    start, end = trial.signal(marker_start), trial.signal(marker_end)
    full_range = np.ptp(start.values) == 0 or np.ptp(end.values) == 0
    if full_range:
        window = ActiveWindow(0, len(start) - 1)
    else:
        window = detect_active_window(start, end, cfg.marker_fraction)
    truncated = truncate(trial, window)
    applied = ["truncate"]
    denoised, levels, sigmas = [], [], []
    for s in truncated.signals:
        d, info = denoise_with_info(s, cfg)
        denoised.append(d)
        levels.append(info.level)
        sigmas.append(info.sigma)
    applied.append("denoise")
    resampled = [resample_to_unit_grid(s, cfg.m) for s in denoised]
    applied.append("resample")
    normalized = [normalize_amplitude(s) for s in resampled]
    applied.append("normalize")
    audit = TrialAudit(trial.id, window, tuple(levels), tuple(sigmas), tuple(applied), full_range)
    return truncated.with_signals(normalized), audit


def preprocess_dataset(dataset, cfg):
    """Truncate, denoise, resample and normalise every trial"""
    logger.stage_message("preprocess", f"{dataset.n} trials, {dataset.variable_count} variables, m={cfg.m}")
    jobs = [(t, dataset.marker_start_index, dataset.marker_end_index, cfg) for t in dataset.trials]
    results = parallel_map(_preprocess_trial, jobs, cfg.threads)
    audit = PreprocessAudit(trials=[a for _, a in results])
    for a in audit.trials:
        # Denoising has to precede interpolation
        if a.stages != STAGE_ORDER:
            raise PreprocessError(f"Trial {a.trial_id} went through stages {a.stages}, expected {STAGE_ORDER}")
        logger.debug_message(f"trial {a.trial_id}: window [{a.window.i_start}, {a.window.i_end}]")
    full = [a.trial_id for a in audit.trials if a.full_range]
    if full:
        logger.warning_message(f"{len(full)} trial(s) have a constant marker and keep their full range: "
                               f"{', '.join(full[:5])}{' ...' if len(full) > 5 else ''}")
    return dataset.with_trials([t for t, _ in results]), audit


def _denoise_trial(job):
    trial, cfg = job
    out = []
    for s in trial.signals:
        out.append(denoise_with_info(s, cfg)[0])
    return trial.with_signals(out)


def denoise_dataset(dataset, cfg):
    """Denoising stage alone, grids unchanged"""
    logger.stage_message("denoise", f"{dataset.n} trials, wavelet {cfg.wavelet}, {cfg.threshold_mode} threshold")
    trials = parallel_map(_denoise_trial, [(t, cfg) for t in dataset.trials], cfg.threads)
    return dataset.with_trials(trials)


def require_unit_grid(dataset, m):
    for trial in dataset.trials:
        for s in trial.signals:
            if not s.grid.is_unit or len(s) != m:
                raise DataError(f"Trial {trial.id} is not preprocessed onto the unit grid of {m} points")
