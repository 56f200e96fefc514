"""
Wavelet compression of preprocessed signals.

For each variable j the energy curve EQ_j(p) = sum_i ||X_i - A_{i,p}||^2 is
computed for p = 1..log2(m), a decomposition level is read off the curve where
its slope changes sharply (one level is then given back), and the level-p
approximation coefficients of every trial form the packet C^j.
"""
from dataclasses import dataclass, field

import numpy as np

from .logging import logger
from .utils import WavecartError, parallel_map
from .wavelet import WaveletFilter, approx_values, cascade_lengths, decompose_values

class CompressionError(WavecartError):
    pass

class MixedGridError(CompressionError):
    pass


@dataclass(frozen=True, eq=False)
class EqCurve:
    variable: int
    values: np.ndarray      # values[p-1] = EQ(p)

    @property
    def max_level(self):
        return len(self.values)

    def to_dict(self):
        return {"variable": self.variable, "eq": [float(v) for v in self.values]}


@dataclass(frozen=True)
class LevelChoice:
    level: int
    slope_change_level: int     # p dagger, 0 when no slope change was found
    fallback: bool
    ratios: tuple               # ratios[p-2] for p = 2..max_level-1


@dataclass(frozen=True, eq=False)
class CoefficientPacket:
    variable: int
    level: int
    coeffs: np.ndarray      # n x K_j
    coeff_ids: tuple

    @property
    def size(self):
        return len(self.coeff_ids)

    def columns(self, ids):
        index = {cid: k for k, cid in enumerate(self.coeff_ids)}
        return self.coeffs[:, [index[c] for c in ids]]


def coefficient_ids(j, count):
    return tuple(f"{j}:{k}" for k in range(1, count + 1))


def _unit_values(signals):
    lengths = {len(s) for s in signals}
    if len(lengths) != 1 or not all(s.grid.is_unit for s in signals):
        raise MixedGridError(f"Signals are not on one common unit grid (lengths {sorted(lengths)})")
    return np.vstack([s.values for s in signals])


def eq_curve(signals, wfilter, mode="symmetric", variable=0, max_level=None):
    X = _unit_values(signals)
    m = X.shape[1]
    if max_level is None:
        max_level = int(np.floor(np.log2(m)))
    eq = np.zeros(max_level)
    for p in range(1, max_level + 1):
        total = 0.0
        for x in X:
            a = approx_values(decompose_values(x, p, wfilter, mode), wfilter)
            total += float(np.sum((x - a) ** 2))
        eq[p - 1] = total
    return EqCurve(variable, eq)


def select_level(curve, theta=3.0, fallback=5, eps=1e-12, relative_floor=0.0):
    """
    Smallest p >= 2 where the increment s(p) = EQ(p+1) - EQ(p) jumps by a factor theta
    over s(p-1), minus one level; the fallback level when the curve never bends.
    """
    eq = np.asarray(curve.values, dtype=float)
    if len(eq) < 3:
        raise CompressionError(f"Energy curve needs at least 3 levels, got {len(eq)}")
    s = np.diff(eq)             # s[p-1] = s(p)
    floor = eps + relative_floor * max(float(eq[-1]), 0.0)
    ratios = []
    for p in range(2, len(eq)):
        ratios.append(float(s[p - 1] / (s[p - 2] + floor)))
        if ratios[-1] >= theta:
            return LevelChoice(max(p - 1, 1), p, False, tuple(ratios))
    return LevelChoice(min(fallback, len(eq)), 0, True, tuple(ratios))


def build_packet(signals, level, wfilter, mode="symmetric", variable=0):
    X = _unit_values(signals)
    rows = [decompose_values(x, level, wfilter, mode).approx for x in X]
    coeffs = np.vstack(rows)
    expected = cascade_lengths(X.shape[1], level, wfilter.length, mode)[-1]
    if coeffs.shape[1] != expected:
        raise CompressionError(f"Packet width {coeffs.shape[1]} does not match cascade length {expected}")
    coeffs.setflags(write=False)
    return CoefficientPacket(variable, level, coeffs, coefficient_ids(variable, coeffs.shape[1]))


@dataclass
class CompressionReport:
    curves: list = field(default_factory=list)
    choices: list = field(default_factory=list)
    packet_sizes: list = field(default_factory=list)
    zero_variance: list = field(default_factory=list)

    @property
    def total_coefficients(self):
        return int(sum(self.packet_sizes))

    def to_dict(self):
        return {
            "total_coefficients": self.total_coefficients,
            "variables": [
                {"variable": c.variable, "level": ch.level, "slope_change_level": ch.slope_change_level,
                 "fallback": ch.fallback, "ratios": list(ch.ratios), "packet_size": k,
                 "eq": [float(v) for v in c.values]}
                for c, ch, k in zip(self.curves, self.choices, self.packet_sizes)],
            "zero_variance_coefficients": list(self.zero_variance),
        }


def _compress_variable(job):
    j, signals, cfg = job
    wfilter = WaveletFilter.from_name(cfg.wavelet)
    curve = eq_curve(signals, wfilter, cfg.extension_mode, variable=j)
    choice = select_level(curve, cfg.elbow_threshold, cfg.fallback_level,
                          cfg.elbow_epsilon, cfg.elbow_relative_floor)
    return curve, choice, build_packet(signals, choice.level, wfilter, cfg.extension_mode, variable=j)


def compress_dataset(dataset, cfg):
    """Level selection and packet construction for every variable"""
    logger.stage_message("compress", f"{dataset.variable_count} variables, wavelet {cfg.wavelet}, "
                                     f"{cfg.extension_mode} extension")
    jobs = [(j, dataset.variable(j), cfg) for j in range(1, dataset.variable_count + 1)]
    results = parallel_map(_compress_variable, jobs, cfg.threads)

    report = CompressionReport()
    packets = []
    for curve, choice, packet in results:
        report.curves.append(curve)
        report.choices.append(choice)
        report.packet_sizes.append(packet.size)
        if choice.fallback:
            logger.warning_message(f"variable {curve.variable}: no slope change in EQ curve, "
                                   f"falling back to level {choice.level}")
        zero = np.ptp(packet.coeffs, axis=0) == 0
        report.zero_variance.extend(cid for cid, z in zip(packet.coeff_ids, zero) if z)
        packets.append(packet)
    logger.stage_message("compress", f"{report.total_coefficients} coefficients kept "
                                     f"(levels {[c.level for c in report.choices]})")
    return packets, report
