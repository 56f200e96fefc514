"""
Seeded synthetic benchmark with planted discriminant variables.

Each trial is a raw 250 Hz recording of J variables. Two marker variables
step up at the start of the active window and down after its end; the other
variables are smooth curves (sums of logistic ramps and Gaussian bumps) plus
white noise. Planted variables add a class-dependent effect on the active
window, with c = (label - 3) / 2 for five classes.
"""
from dataclasses import dataclass, field

import numpy as np

from .core_types import (DEFAULT_MARKER_END, DEFAULT_MARKER_START, SAMPLING_RATE_HZ, Dataset, Grid, Signal,
                         Trial)
from .logging import logger
from .utils import STAGE_SYNTH, WavecartError, parallel_map, task_rng

EFFECT_KINDS = ("bump-location-shift", "amplitude-shift", "slope-shift")
DEFAULT_FREQUENCIES = (0.33, 0.17, 0.17, 0.18, 0.15)
MARKER_NOISE = 0.02
MIN_MARGIN = 20
HIGH_FREQUENCY_HZ = 30.0


class SynthError(WavecartError):
    pass


class InfeasibleSpecError(SynthError):
    pass


@dataclass(frozen=True)
class PlantSpec:
    n: int = 114
    variable_count: int = 21
    discriminant: tuple = (3, 11, 17)
    effect_kinds: tuple = EFFECT_KINDS
    effect_size: float = 1.0
    noise_sigma: float = 0.3
    class_frequencies: tuple = DEFAULT_FREQUENCIES
    raw_length: tuple = (600, 5000)
    truncated_length: tuple = (300, 700)
    dt: float = 1.0 / SAMPLING_RATE_HZ
    marker_start: int = DEFAULT_MARKER_START
    marker_end: int = DEFAULT_MARKER_END
    high_frequency_variable: int = 5

    @property
    def class_count(self):
        return len(self.class_frequencies)

    def violations(self):
        v = []
        J = self.variable_count
        if self.n < 1:
            v.append("n must be positive")
        if abs(sum(self.class_frequencies) - 1.0) > 1e-6:
            v.append(f"class frequencies sum to {sum(self.class_frequencies):g}, not 1")
        if any(f < 0 for f in self.class_frequencies):
            v.append("class frequencies must be nonnegative")
        if len(self.effect_kinds) != len(self.discriminant):
            v.append("one effect kind is needed per discriminant variable")
        if unknown := set(self.effect_kinds) - set(EFFECT_KINDS):
            v.append(f"unknown effect kinds {sorted(unknown)}")
        special = {self.marker_start, self.marker_end}
        if len(special) != 2:
            v.append("marker variables must be distinct")
        for j in (*self.discriminant, *special):
            if not 1 <= j <= J:
                v.append(f"variable index {j} outside 1..{J}")
        if special & set(self.discriminant):
            v.append("discriminant variables must not be marker variables")
        if self.high_frequency_variable in special | set(self.discriminant):
            v.append("the high-frequency variable must be a plain noise variable")
        if self.effect_size < 0 or self.noise_sigma < 0:
            v.append("effect size and noise sigma must be nonnegative")
        lo, hi = self.truncated_length
        raw_lo, raw_hi = self.raw_length
        if not 2 <= lo <= hi:
            v.append(f"truncated length range {self.truncated_length} is empty")
        if not 1 <= raw_lo <= raw_hi:
            v.append(f"raw length range {self.raw_length} is empty")
        if lo + 2 * MIN_MARGIN > raw_hi:
            v.append(f"no raw length up to {raw_hi} fits an active window of {lo} samples")
        if not self.dt > 0:
            v.append("dt must be positive")
        return v


@dataclass
class GroundTruth:
    discriminant: tuple
    effect_kinds: tuple
    effect_size: float
    noise_sigma: float
    class_counts: tuple
    windows: dict = field(default_factory=dict)     # trial id -> (i_start, i_end)

    def to_dict(self):
        return {"discriminant": list(self.discriminant), "effect_kinds": list(self.effect_kinds),
                "effect_size": self.effect_size, "noise_sigma": self.noise_sigma,
                "class_counts": list(self.class_counts),
                "windows": {k: list(w) for k, w in self.windows.items()}}


def class_counts(n, frequencies):
    """Largest-remainder rounding of n * frequencies"""
    quotas = n * np.asarray(frequencies, dtype=float)
    counts = np.floor(quotas).astype(int)
    order = np.argsort(-(quotas - counts), kind="stable")
    counts[order[:n - counts.sum()]] += 1
    return tuple(int(c) for c in counts)


def _logistic(u, center, width):
    return 1.0 / (1.0 + np.exp(-(u - center) / width))


def _bump(u, center, width):
    return np.exp(-0.5 * ((u - center) / width) ** 2)


@dataclass(frozen=True)
class _Shape:
    kinds: tuple
    amplitudes: tuple
    centers: tuple
    widths: tuple


def _base_shape(rng):
    count = int(rng.integers(3, 7))
    return _Shape(kinds=tuple(rng.choice(["ramp", "bump"], size=count).tolist()),
                  amplitudes=tuple(rng.uniform(-1.5, 1.5, count)),
                  centers=tuple(rng.uniform(0.05, 0.95, count)),
                  widths=tuple(rng.uniform(0.03, 0.15, count)))


def _base_curve(shape, u, rng):
    """The variable's shape with per-trial jitter of amplitudes and centres"""
    out = np.zeros_like(u)
    for kind, a, c, w in zip(shape.kinds, shape.amplitudes, shape.centers, shape.widths):
        a = a * (1.0 + rng.normal(0.0, 0.1))
        c = c + rng.normal(0.0, 0.02)
        out += a * (_logistic(u, c, w) if kind == "ramp" else _bump(u, c, w))
    return out


def _effect(kind, u, c, size):
    if kind == "bump-location-shift":
        return 1.5 * _bump(u, 0.5 + 0.15 * size * c, 0.06)
    if kind == "amplitude-shift":
        return (1.0 + 0.6 * size * c) * _bump(u, 0.35, 0.08)
    if kind == "slope-shift":
        return 1.2 * size * c * u
    raise SynthError(f"Unknown effect kind {kind!r}")


def _trial(job):
    i, label, spec, seed, shapes = job
    rng = task_rng(seed, STAGE_SYNTH, i + 1)
    lo, hi = spec.truncated_length
    A = int(rng.integers(lo, hi + 1))
    raw_lo, raw_hi = spec.raw_length
    L = int(rng.integers(max(raw_lo, A + 2 * MIN_MARGIN), raw_hi + 1))
    s = int(rng.integers(MIN_MARGIN, L - A - MIN_MARGIN + 1))
    end = s + A - 1

    idx = np.arange(L)
    u = (idx - s) / (A - 1)
    t = idx * spec.dt
    c = (label - 3) / 2.0
    effects = dict(zip(spec.discriminant, spec.effect_kinds))

    signals = []
    for j in range(1, spec.variable_count + 1):
        if j == spec.marker_start:
            values = (idx >= s).astype(float) + rng.normal(0.0, MARKER_NOISE, L)
        elif j == spec.marker_end:
            # Drops at the last active sample so that sample is the final crossing
            values = (idx < end).astype(float) + rng.normal(0.0, MARKER_NOISE, L)
        else:
            values = _base_curve(shapes[j], u, rng)
            if j in effects:
                values = values + _effect(effects[j], u, c, spec.effect_size)
            if j == spec.high_frequency_variable:
                values = values + 0.5 * np.sin(2 * np.pi * HIGH_FREQUENCY_HZ * t + rng.uniform(0, 2 * np.pi))
            values = values + rng.normal(0.0, spec.noise_sigma, L)
        signals.append(Signal(Grid.raw(0.0, spec.dt, L), values))
    trial_id = f"t{i + 1:03d}"
    return Trial(trial_id, label, tuple(signals)), (trial_id, (s, end))


def generate(spec=None, seed=0, threads=1):
    """Dataset and ground truth, fully determined by (spec, seed)"""
    spec = spec or PlantSpec()
    if violations := spec.violations():
        raise InfeasibleSpecError("; ".join(violations))
    counts = class_counts(spec.n, spec.class_frequencies)
    labels = np.repeat(np.arange(1, spec.class_count + 1), counts)
    task_rng(seed, STAGE_SYNTH, 0).shuffle(labels)
    shapes = {j: _base_shape(task_rng(seed, STAGE_SYNTH, 10_000 + j)) for j in range(1, spec.variable_count + 1)}

    logger.stage_message("synth", f"{spec.n} trials, {spec.variable_count} variables, "
                                  f"planted {list(spec.discriminant)} (effect size {spec.effect_size:g})")
    jobs = [(i, int(label), spec, seed, shapes) for i, label in enumerate(labels)]
    results = parallel_map(_trial, jobs, threads)

    dataset = Dataset(tuple(t for t, _ in results), spec.class_count,
                      tuple(f"x{j:02d}" for j in range(1, spec.variable_count + 1)),
                      marker_start_index=spec.marker_start, marker_end_index=spec.marker_end,
                      metadata={"generator": "wavecart.synth", "seed": int(seed)})
    truth = GroundTruth(tuple(spec.discriminant), tuple(spec.effect_kinds), spec.effect_size, spec.noise_sigma,
                        counts, dict(w for _, w in results))
    return dataset, truth
