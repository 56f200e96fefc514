import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavecart.core_types import Dataset, Grid, Signal, Trial
from wavecart.preprocess import (STAGE_ORDER, ActiveWindow, NoCrossingError, WindowInvertedError, WindowRangeError,
                                 detect_active_window, normalize_amplitude, preprocess_dataset, resample_to_unit_grid,
                                 truncate)
from wavecart.synth import generate


def _raw(values):
    return Signal(Grid.raw(0.0, 0.004, len(values)), values)


def _step_up(n, at):
    return _raw((np.arange(n) >= at).astype(float))


def _step_down(n, at):
    return _raw((np.arange(n) < at).astype(float))


def test_step_markers():
    window = detect_active_window(_step_up(1000, 100), _step_down(1000, 900))
    assert window == ActiveWindow(100, 900)
    assert window.length == 801


def test_ramp_start_marker():
    values = np.concatenate([np.arange(200) / 199, np.ones(300)])
    window = detect_active_window(_raw(values), _step_down(500, 400), 0.5)
    assert window.i_start == 100


def test_constant_marker_has_no_crossing():
    with pytest.raises(NoCrossingError):
        detect_active_window(_raw(np.ones(100)), _step_down(100, 50))


def test_inverted_window():
    with pytest.raises(WindowInvertedError):
        detect_active_window(_step_up(100, 80), _step_down(100, 20))


def test_truncate_lengths():
    trial = Trial("a", 1, (_raw(np.arange(1000.0)), _raw(np.ones(1000))))
    out = truncate(trial, ActiveWindow(100, 400))
    assert [len(s) for s in out.signals] == [301, 301]
    assert out.signals[0].values[0] == 100.0
    assert out.signals[0].grid.t0 == pytest.approx(0.4)


def test_truncate_full_range_is_identity():
    trial = Trial("a", 1, (_raw(np.arange(50.0)),))
    out = truncate(trial, ActiveWindow(0, 49))
    np.testing.assert_array_equal(out.signals[0].values, trial.signals[0].values)


def test_truncate_outside_signal():
    trial = Trial("a", 1, (_raw(np.arange(50.0)),))
    with pytest.raises(WindowRangeError):
        truncate(trial, ActiveWindow(10, 60))


def test_resample_hand_example():
    s = Signal(Grid.raw(0.0, 1.0, 2), [0.0, 2.0])
    out = resample_to_unit_grid(s, 4)
    np.testing.assert_allclose(out.values, [0.5, 1.0, 1.5, 2.0], atol=1e-12)
    assert out.grid == Grid.unit(4)


def test_resample_unit_grid_is_identity():
    values = np.random.default_rng(0).normal(size=64)
    out = resample_to_unit_grid(Signal(Grid.unit(64), values), 64)
    np.testing.assert_allclose(out.values, values, atol=1e-12)


def test_resample_reproduces_affine_functions():
    t = Grid.raw(3.0, 0.004, 437).times()
    out = resample_to_unit_grid(Signal(Grid.raw(3.0, 0.004, 437), 2.0 * t - 1.0), 512)
    u = np.arange(1, 513) / 512
    expected = 2.0 * (t[0] + u * (t[-1] - t[0])) - 1.0
    np.testing.assert_allclose(out.values, expected, atol=1e-12)


def test_normalize_hand_example():
    out = normalize_amplitude(Signal(Grid.unit(3), [1.0, 2.0, 3.0]))
    np.testing.assert_allclose(out.values, [-1.22474, 0.0, 1.22474], atol=1e-5)


def test_normalize_constant():
    out = normalize_amplitude(Signal(Grid.unit(3), [7.0, 7.0, 7.0]))
    np.testing.assert_array_equal(out.values, [0.0, 0.0, 0.0])


def test_preprocess_dataset(small_spec, fast_cfg):
    dataset, truth = generate(small_spec, seed=5)
    out, audit = preprocess_dataset(dataset, fast_cfg)
    assert out.n == dataset.n
    for trial in out.trials:
        for s in trial.signals:
            assert s.grid == Grid.unit(fast_cfg.m)
    for a in audit.trials:
        assert a.stages == STAGE_ORDER
        assert (a.window.i_start, a.window.i_end) == truth.windows[a.trial_id]
    assert audit.to_dict()["stage_order"] == list(STAGE_ORDER)


def test_synthetic_windows_in_range():
    dataset, truth = generate(seed=0)
    lengths = [end - start + 1 for start, end in truth.windows.values()]
    assert min(lengths) >= 300 and max(lengths) <= 700


values_strategy = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=200)


@given(values_strategy, st.integers(2, 300))
@settings(max_examples=60, deadline=None)
def test_resample_stays_within_signal_range(values, m):
    out = resample_to_unit_grid(_raw(values), m).values
    tol = 1e-9 * (1.0 + max(abs(v) for v in values))
    assert out.min() >= min(values) - tol
    assert out.max() <= max(values) + tol


@given(values_strategy, st.floats(0.1, 10.0), st.floats(-10.0, 10.0), st.integers(2, 300))
@settings(max_examples=60, deadline=None)
def test_resample_ignores_affine_time_change(values, a, b, m):
    base = resample_to_unit_grid(Signal(Grid.raw(0.0, 0.004, len(values)), values), m).values
    moved = resample_to_unit_grid(Signal(Grid.raw(b, a * 0.004, len(values)), values), m).values
    np.testing.assert_allclose(moved, base, atol=1e-6 * (1.0 + max(abs(v) for v in values)))


def test_constant_markers_keep_full_range(fast_cfg):
    n = 300
    ramp = _raw(np.sin(np.linspace(0, 6, n)))
    flat = _raw(np.ones(n))
    trials = (Trial("a", 1, (flat, flat, ramp)), Trial("b", 2, (flat, flat, ramp)))
    dataset = Dataset(trials, 2, ("start", "end", "x"), marker_start_index=1, marker_end_index=2)
    out, audit = preprocess_dataset(dataset, fast_cfg)
    assert all(a.full_range for a in audit.trials)
    assert audit.trials[0].window == ActiveWindow(0, n - 1)
    assert audit.to_dict()["trials"][0]["full_range"] is True
    np.testing.assert_array_equal(out.trials[0].signal(1).values, np.zeros(fast_cfg.m))
