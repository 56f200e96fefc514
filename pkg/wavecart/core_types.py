"""
Data model shared by every stage: grids, signals, trials and datasets.

Variable indices are 1-based (j = 1..J) as are class labels (1..Kc).
Every object is immutable after construction; value arrays are flagged read-only.
"""
from dataclasses import dataclass, field

import numpy as np

SAMPLING_RATE_HZ = 250.0
DEFAULT_MARKER_START = 8
DEFAULT_MARKER_END = 21


def _frozen_array(values):
    a = np.array(values, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Either a raw acquisition grid (t0, dt, length) or the unit grid {1/m, ..., 1}"""
    kind: str
    length: int
    t0: float = 0.0
    dt: float = 1.0 / SAMPLING_RATE_HZ

    @classmethod
    def raw(cls, t0, dt, length):
        return cls(kind="raw", length=int(length), t0=float(t0), dt=float(dt))

    @classmethod
    def unit(cls, m):
        return cls(kind="unit", length=int(m), t0=1.0 / m, dt=1.0 / m)

    @property
    def is_unit(self):
        return self.kind == "unit"

    def times(self):
        if self.is_unit:
            return np.arange(1, self.length + 1) / self.length
        return self.t0 + self.dt * np.arange(self.length)

    def slice(self, start, stop):
        """Sub-grid of samples [start, stop)"""
        return Grid.raw(self.t0 + start * self.dt, self.dt, stop - start)

    def violations(self):
        v = []
        if self.kind not in ("raw", "unit"):
            v.append(f"unknown grid kind {self.kind!r}")
        if self.length < 2:
            v.append(f"grid length {self.length} < 2")
        if not self.dt > 0:
            v.append(f"grid step {self.dt} is not positive")
        return v

    def __len__(self):
        return self.length


@dataclass(frozen=True, eq=False)
class Signal:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self):
        return len(self.values)

    def with_values(self, values, grid=None):
        return Signal(self.grid if grid is None else grid, values)

    def violations(self):
        v = list(self.grid.violations())
        if self.values.ndim != 1:
            v.append("values are not one-dimensional")
        elif len(self.values) != len(self.grid):
            v.append(f"length {len(self.values)} does not match grid length {len(self.grid)}")
        if not np.all(np.isfinite(self.values)):
            v.append("values contain NaN or Inf")
        return v


@dataclass(frozen=True, eq=False)
class Trial:
    id: str
    label: int
    signals: tuple

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "label", int(self.label))

    def signal(self, j):
        """Signal of variable j (1-based)"""
        return self.signals[j - 1]

    def with_signals(self, signals):
        return Trial(self.id, self.label, tuple(signals))


@dataclass(frozen=True, eq=False)
class Dataset:
    trials: tuple
    class_count: int
    variable_names: tuple
    marker_start_index: int = DEFAULT_MARKER_START
    marker_end_index: int = DEFAULT_MARKER_END
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        object.__setattr__(self, "variable_names", tuple(self.variable_names))

    @property
    def n(self):
        return len(self.trials)

    @property
    def variable_count(self):
        return len(self.variable_names)

    @property
    def labels(self):
        return np.array([t.label for t in self.trials], dtype=int)

    def variable(self, j):
        """All n signals of variable j"""
        return [t.signal(j) for t in self.trials]

    def with_trials(self, trials, **changes):
        fields_ = dict(class_count=self.class_count, variable_names=self.variable_names,
                       marker_start_index=self.marker_start_index,
                       marker_end_index=self.marker_end_index, metadata=dict(self.metadata))
        fields_.update(changes)
        return Dataset(tuple(trials), **fields_)


def validate_dataset(d):
    """Human-readable invariant violations, empty when the dataset is well formed"""
    violations = []
    J = len(d.variable_names)
    if J < 1:
        violations.append("dataset has no variables")
    if d.class_count < 1:
        violations.append(f"class count {d.class_count} is not positive")
    for name, idx in (("marker_start_index", d.marker_start_index), ("marker_end_index", d.marker_end_index)):
        if not 1 <= idx <= J:
            violations.append(f"{name} {idx} outside variables 1..{J}")
    if d.marker_start_index == d.marker_end_index:
        violations.append("marker indices are not distinct")

    seen = set()
    for trial in d.trials:
        if trial.id in seen:
            violations.append(f"trial {trial.id}: duplicate id")
        seen.add(trial.id)
        if len(trial.signals) != J:
            violations.append(f"trial {trial.id}: has {len(trial.signals)} signals, expected {J}")
        if not 1 <= trial.label <= d.class_count:
            violations.append(f"trial {trial.id}: label out of range ({trial.label} not in 1..{d.class_count})")
        grids = set()
        for j, s in enumerate(trial.signals, start=1):
            for v in s.violations():
                violations.append(f"trial {trial.id}, variable {j}: {v}")
            grids.add(s.grid)
        if len(grids) > 1:
            violations.append(f"trial {trial.id}: signals are not on a common grid")
    return violations
