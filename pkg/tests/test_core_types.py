import numpy as np
import pytest

from wavecart.core_types import Dataset, Grid, Signal, Trial, validate_dataset
from wavecart.manifest import load_dataset, save_dataset
from wavecart.synth import generate
from wavecart.utils import DataError


def test_unit_grid_times():
    grid = Grid.unit(4)
    np.testing.assert_allclose(grid.times(), [0.25, 0.5, 0.75, 1.0])
    assert grid.is_unit and len(grid) == 4


def test_raw_grid_slice():
    grid = Grid.raw(0.0, 0.004, 1000).slice(100, 401)
    assert len(grid) == 301
    assert grid.t0 == pytest.approx(0.4)


def test_signal_values_are_read_only():
    s = Signal(Grid.unit(3), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_generated_dataset_is_valid(small_dataset):
    assert validate_dataset(small_dataset) == []


def test_missing_signal_is_reported(small_dataset):
    trial = small_dataset.trials[0]
    broken = small_dataset.with_trials([trial.with_signals(trial.signals[:-1])] + list(small_dataset.trials[1:]))
    violations = validate_dataset(broken)
    assert len(violations) == 1
    assert trial.id in violations[0]


def test_label_out_of_range():
    grid = Grid.unit(4)
    trial = Trial("a", 0, (Signal(grid, np.zeros(4)), Signal(grid, np.ones(4))))
    d = Dataset((trial,), 5, ("x1", "x2"), marker_start_index=1, marker_end_index=2)
    violations = validate_dataset(d)
    assert any("label out of range" in v for v in violations)


def test_marker_indices_must_be_distinct():
    grid = Grid.unit(4)
    trial = Trial("a", 1, (Signal(grid, np.zeros(4)), Signal(grid, np.ones(4))))
    d = Dataset((trial,), 2, ("x1", "x2"), marker_start_index=1, marker_end_index=1)
    assert any("not distinct" in v for v in validate_dataset(d))


def test_manifest_round_trip_is_bit_exact(tmp_path, small_spec):
    dataset, _ = generate(small_spec, seed=11)
    manifest = save_dataset(dataset, tmp_path)
    loaded = load_dataset(manifest)
    assert loaded.n == dataset.n
    assert loaded.variable_names == dataset.variable_names
    np.testing.assert_array_equal(loaded.labels, dataset.labels)
    for a, b in zip(loaded.trials, dataset.trials):
        assert a.id == b.id
        for sa, sb in zip(a.signals, b.signals):
            assert sa.grid == sb.grid
            np.testing.assert_array_equal(sa.values, sb.values)


def test_missing_manifest_names_path(tmp_path):
    path = tmp_path / "nope.json"
    with pytest.raises(DataError, match="nope.json"):
        load_dataset(path)


def test_nan_in_signal_file_is_rejected(tmp_path, small_spec):
    dataset, _ = generate(small_spec, seed=1)
    manifest = save_dataset(dataset, tmp_path)
    first = tmp_path / "signals" / f"{dataset.trials[0].id}_01.csv"
    first.write_text("1.0\nnan\n3.0\n")
    with pytest.raises(DataError, match="NaN"):
        load_dataset(manifest)
