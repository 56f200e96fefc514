import numpy as np
import pytest

from wavecart.core_types import validate_dataset
from wavecart.synth import MIN_MARGIN, InfeasibleSpecError, PlantSpec, class_counts, generate


def test_default_class_counts():
    assert class_counts(114, (0.33, 0.17, 0.17, 0.18, 0.15)) == (38, 19, 19, 21, 17)


@pytest.mark.parametrize("n", [1, 7, 40, 114, 1000])
def test_class_counts_sum_to_n(n):
    assert sum(class_counts(n, (0.33, 0.17, 0.17, 0.18, 0.15))) == n


def test_default_dataset_shape():
    dataset, truth = generate(seed=0)
    assert dataset.n == 114
    assert dataset.variable_count == 21
    assert dataset.class_count == 5
    assert tuple(np.bincount(dataset.labels, minlength=6)[1:]) == (38, 19, 19, 21, 17)
    assert truth.discriminant == (3, 11, 17)
    assert validate_dataset(dataset) == []


def test_generate_is_deterministic(small_spec):
    a, ta = generate(small_spec, seed=11)
    b, tb = generate(small_spec, seed=11, threads=2)
    assert [t.label for t in a.trials] == [t.label for t in b.trials]
    for ta_, tb_ in zip(a.trials, b.trials):
        for sa, sb in zip(ta_.signals, tb_.signals):
            np.testing.assert_array_equal(sa.values, sb.values)
    assert ta.to_dict() == tb.to_dict()


def test_seeds_differ(small_spec):
    a, _ = generate(small_spec, seed=1)
    b, _ = generate(small_spec, seed=2)
    assert not np.array_equal(a.trials[0].signals[0].values, b.trials[0].signals[0].values)


def test_windows_fit_inside_recordings(small_spec):
    dataset, truth = generate(small_spec, seed=4)
    lo, hi = small_spec.truncated_length
    for trial in dataset.trials:
        start, end = truth.windows[trial.id]
        length = len(trial.signals[0])
        assert lo <= end - start + 1 <= hi
        assert start >= MIN_MARGIN and end <= length - 1 - MIN_MARGIN
        assert all(len(s) == length for s in trial.signals)


def test_markers_step_at_window_edges(small_spec):
    dataset, truth = generate(small_spec, seed=4)
    trial = dataset.trials[0]
    start, end = truth.windows[trial.id]
    up = trial.signal(small_spec.marker_start).values
    down = trial.signal(small_spec.marker_end).values
    assert up[start - 1] < 0.5 < up[start]
    assert down[end - 1] > 0.5 > down[end]


@pytest.mark.parametrize("changes", [
    {"class_frequencies": (0.5, 0.6)},
    {"discriminant": (4,), "effect_kinds": ("slope-shift",)},
    {"effect_kinds": ("wiggle",)},
    {"raw_length": (100, 200)},
    {"high_frequency_variable": 2},
])
def test_infeasible_spec(small_spec, changes):
    from dataclasses import replace

    with pytest.raises(InfeasibleSpecError):
        generate(replace(small_spec, **changes), seed=0)
