import numpy as np
import pytest

from wavecart.config import PipelineConfig
from wavecart.core_types import Dataset, Grid, Signal, Trial
from wavecart.logging import logger
from wavecart.synth import PlantSpec, generate


@pytest.fixture(autouse=True)
def quiet_logger():
    logger.set(quiet=True, debug=False)
    yield
    logger.set(quiet=False, debug=False)


@pytest.fixture
def small_spec():
    """Six variables, two classes, variable 2 planted"""
    return PlantSpec(n=40, variable_count=6, discriminant=(2,), effect_kinds=("slope-shift",),
                     effect_size=2.0, noise_sigma=0.2, class_frequencies=(0.5, 0.5),
                     raw_length=(300, 600), truncated_length=(150, 250),
                     marker_start=4, marker_end=6, high_frequency_variable=3)


@pytest.fixture
def fast_cfg():
    return PipelineConfig(m=128, min_node_size=3, cv_folds=5, cv_repeats=2, bootstrap_count=5,
                          refinement_max_size=5, final_top_k=3, seed=7, threads=1)


@pytest.fixture
def small_dataset(small_spec):
    dataset, _ = generate(small_spec, seed=3)
    return dataset


def unit_dataset(values, labels, class_count=2):
    """Dataset of one variable per slice of values[:, j, :], already on the unit grid"""
    values = np.asarray(values, dtype=float)
    n, J, m = values.shape
    trials = [Trial(f"t{i:03d}", int(labels[i]), tuple(Signal(Grid.unit(m), values[i, j]) for j in range(J)))
              for i in range(n)]
    return Dataset(tuple(trials), class_count, tuple(f"x{j + 1:02d}" for j in range(J)),
                   marker_start_index=1, marker_end_index=min(2, J) if J > 1 else 1)


@pytest.fixture
def make_unit_dataset():
    return unit_dataset
