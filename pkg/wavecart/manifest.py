"""
Dataset manifests on disk.

A manifest is one JSON file listing the trials; each trial names one
single-column CSV file per variable (paths relative to the manifest) plus
the start time and sampling step of its grid.

    {
      "class_count": 5,
      "variable_names": ["x1", ...],
      "marker_start_index": 8,
      "marker_end_index": 21,
      "trials": [
        {"id": "t001", "label": 3, "t0": 0.0, "dt": 0.004, "grid": "raw",
         "signals": ["signals/t001_01.csv", ...]}
      ]
    }
"""
import io
import json
from pathlib import Path

import numpy as np
import pandas as pd

from .compression import CoefficientPacket, coefficient_ids
from .core_types import Dataset, Grid, Signal, Trial, validate_dataset
from .utils import DataError, atomic_write_text


def read_signal_csv(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Signal file not found: {path}")
    try:
        frame = pd.read_csv(path, header=None, dtype=float, float_precision="round_trip",
                            skip_blank_lines=True)
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot parse signal file {path}: {e}") from e
    if frame.shape[1] != 1:
        raise DataError(f"Signal file {path} must have exactly one column, found {frame.shape[1]}")
    values = frame.iloc[:, 0].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError(f"Signal file {path} contains NaN or Inf values")
    return values


def signal_csv_text(values):
    buf = io.StringIO()
    # repr-based float formatting keeps values bit-exact on reload
    pd.DataFrame({"v": np.asarray(values, dtype=float)}).to_csv(buf, header=False, index=False, lineterminator="\n")
    return buf.getvalue()


def load_dataset(manifest_path):
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DataError(f"Manifest not found: {manifest_path}")
    try:
        meta = json.loads(manifest_path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot parse manifest {manifest_path}: {e}") from e

    base = manifest_path.parent
    try:
        variable_names = list(meta["variable_names"])
        J = len(variable_names)
        trials = []
        for entry in meta["trials"]:
            files = entry["signals"]
            if len(files) != J:
                raise DataError(f"Trial {entry['id']} lists {len(files)} signals, expected {J}")
            signals = []
            for f in files:
                values = read_signal_csv(base / f)
                if entry.get("grid", "raw") == "unit":
                    grid = Grid.unit(len(values))
                else:
                    grid = Grid.raw(entry["t0"], entry["dt"], len(values))
                signals.append(Signal(grid, values))
            trials.append(Trial(str(entry["id"]), int(entry["label"]), tuple(signals)))
        dataset = Dataset(tuple(trials), int(meta["class_count"]), tuple(variable_names),
                          marker_start_index=int(meta.get("marker_start_index", 8)),
                          marker_end_index=int(meta.get("marker_end_index", 21)),
                          metadata=dict(meta.get("metadata", {})))
    except KeyError as e:
        raise DataError(f"Manifest {manifest_path} is missing key {e}") from e
    except (TypeError, ValueError) as e:
        raise DataError(f"Manifest {manifest_path} is malformed: {e}") from e

    if violations := validate_dataset(dataset):
        raise DataError(f"Invalid dataset {manifest_path}: {'; '.join(violations[:5])}" +
                        (f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""))
    return dataset


def save_dataset(dataset, out_dir, signal_dir="signals"):
    """Write signal CSVs and manifest.json under out_dir; returns the manifest path"""
    out_dir = Path(out_dir)
    entries = []
    for trial in dataset.trials:
        files = []
        for j, s in enumerate(trial.signals, start=1):
            rel = f"{signal_dir}/{trial.id}_{j:02d}.csv"
            atomic_write_text(out_dir / rel, signal_csv_text(s.values))
            files.append(rel)
        grid = trial.signals[0].grid
        entries.append({"id": trial.id, "label": trial.label, "t0": grid.t0, "dt": grid.dt,
                        "grid": grid.kind, "signals": files})
    meta = {
        "class_count": dataset.class_count,
        "variable_names": list(dataset.variable_names),
        "marker_start_index": dataset.marker_start_index,
        "marker_end_index": dataset.marker_end_index,
        "metadata": dataset.metadata,
        "trials": entries,
    }
    return atomic_write_text(out_dir / "manifest.json", json.dumps(meta, indent=2) + "\n")


def save_packets(packets, labels, class_count, variable_names, out_dir):
    """One CSV per packet (header = coefficient ids, one row per trial) plus manifest.json"""
    out_dir = Path(out_dir)
    entries = []
    for p in packets:
        rel = f"packet_{p.variable:02d}.csv"
        buf = io.StringIO()
        pd.DataFrame(p.coeffs, columns=list(p.coeff_ids)).to_csv(buf, index=False, lineterminator="\n")
        atomic_write_text(out_dir / rel, buf.getvalue())
        entries.append({"variable": p.variable, "name": variable_names[p.variable - 1],
                        "level": p.level, "file": rel})
    meta = {"class_count": int(class_count), "labels": [int(v) for v in labels],
            "variable_names": list(variable_names), "packets": entries}
    return atomic_write_text(out_dir / "manifest.json", json.dumps(meta, indent=2) + "\n")


def load_packets(manifest_path):
    """(packets, labels, class_count, variable_names) from a packet manifest"""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"Packet manifest not found: {manifest_path}")
    try:
        meta = json.loads(manifest_path.read_text())
        labels = np.array(meta["labels"], dtype=int)
        packets = []
        for entry in meta["packets"]:
            path = manifest_path.parent / entry["file"]
            if not path.is_file():
                raise DataError(f"Packet file not found: {path}")
            frame = pd.read_csv(path, dtype=float, float_precision="round_trip")
            j = int(entry["variable"])
            ids = coefficient_ids(j, frame.shape[1])
            if tuple(frame.columns) != ids:
                raise DataError(f"Packet file {path} has columns {list(frame.columns)[:3]}..., expected ids {j}:1..")
            if len(frame) != len(labels):
                raise DataError(f"Packet file {path} has {len(frame)} rows for {len(labels)} labels")
            coeffs = frame.to_numpy(dtype=float)
            if not np.all(np.isfinite(coeffs)):
                raise DataError(f"Packet file {path} contains NaN or Inf values")
            coeffs.setflags(write=False)
            packets.append(CoefficientPacket(j, int(entry["level"]), coeffs, ids))
        class_count = int(meta["class_count"])
        names = tuple(meta["variable_names"])
    except KeyError as e:
        raise DataError(f"Packet manifest {manifest_path} is missing key {e}") from e
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        raise DataError(f"Packet manifest {manifest_path} is malformed: {e}") from e
    if labels.size and (labels.min() < 1 or labels.max() > class_count):
        raise DataError(f"Packet labels outside 1..{class_count}")
    return packets, labels, class_count, names
