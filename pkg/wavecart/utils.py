import os
import tempfile
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed


class WavecartError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message

class DataError(WavecartError):
    """Malformed or unusable input data"""

class ConfigError(WavecartError):
    """Unknown key or invalid value in the pipeline configuration"""

class UsageError(WavecartError):
    """Bad command line usage"""


class PipelineError(WavecartError):
    """Failure of one pipeline stage, carrying the stage name"""
    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def is_data_error(self):
        # Domain errors come from the data; anything else is a bug
        return isinstance(self.cause, WavecartError)


# Stage codes mixed into task seeds
STAGE_SYNTH = 1
STAGE_PHASE1 = 11
STAGE_PHASE2 = 12
STAGE_PHASE3 = 13
STAGE_PHASE5_IMPORTANCE = 15
STAGE_PHASE5_CV = 16

def task_seed(seed, stage, key=0):
    """Seed sequence for one (stage, key) task, independent of scheduling"""
    return np.random.SeedSequence([int(seed), int(stage), int(key)])

def task_rng(seed, stage, key=0):
    return np.random.default_rng(task_seed(seed, stage, key))


def resolve_jobs(threads):
    if threads is None or threads <= 0:
        return -1
    return int(threads)

def parallel_map(fn, items, threads=1):
    """Order-preserving map, run through joblib when more than one worker is allowed"""
    items = list(items)
    n_jobs = resolve_jobs(threads)
    if n_jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return Parallel(n_jobs=n_jobs)(delayed(fn)(item) for item in items)


def atomic_write_text(path, text):
    """Write through a temporary file in the target directory, then rename"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def load_common_options(parser):
    parser.add_argument("--config", default=None, help="YAML config file with PipelineConfig keys (built-in defaults are listed in configs/wavecart/default.yaml)")
    parser.add_argument("--seed", default=None, type=int, help="Random seed (overrides config)")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--threads", default=None, type=int, help="Worker cap, 0 uses all available cores (overrides config)")
    parser.add_argument("--format", default="csv", choices=["csv", "json"], help="Format of tabular outputs")

    # Logging options
    parser.add_argument("-d", "--debug", default=False, action="store_true", help="Print debug messages")
    parser.add_argument("-q", "--quiet", default=False, action="store_true", help="Do not print progress messages")
