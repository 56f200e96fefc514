"""
Report files: report.json plus the side tables used for plotting.

    eq_curves         EQ_j(p) for every variable and level, with the selected level
    packet_ranking    phase-2 CV cost of each packet, best first
    forward_steps     phase-3 steps with the candidate's CV cost and the decision
    refinement_table  apparent and CV errors of the nested importance prefixes
    importance        phase-5 importance of the chosen model's coefficients
"""
import io
import json
from pathlib import Path

import pandas as pd
from tabulate import tabulate

from .utils import DataError, atomic_write_text

REPORT_FILE = "report.json"
TABLES = ("eq_curves", "packet_ranking", "forward_steps", "refinement_table", "importance")


def report_json(report):
    d = report if isinstance(report, dict) else report.to_dict()
    return json.dumps(d, indent=2) + "\n"


def load_report(path):
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    if not path.is_file():
        raise DataError(f"Report not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"Cannot parse report {path}: {e}") from e


def eq_curve_table(compression):
    rows = []
    for v in (compression or {}).get("variables", []):
        for p, eq in enumerate(v["eq"], start=1):
            rows.append({"variable": v["variable"], "level": p, "eq": eq,
                         "selected": p == v["level"]})
    return pd.DataFrame(rows, columns=["variable", "level", "eq", "selected"])


def report_tables(d):
    ranking = pd.DataFrame(d.get("phase2_ranking", []),
                           columns=["variable", "size", "cv_cost", "cv_error_rate"])
    ranking.insert(0, "rank", range(1, len(ranking) + 1))

    steps = pd.DataFrame([{**s, "included": " ".join(str(v) for v in s["included"])}
                          for s in d.get("phase3_steps", [])],
                         columns=["step", "candidate", "decision", "cv_cost", "cv_error_rate",
                                  "included", "coefficients"])

    refinement = pd.DataFrame([{**r, "coefficients": " ".join(r["coefficients"])}
                               for r in d.get("phase5_refinement", [])],
                              columns=["size", "apparent_errors", "apparent_cost", "cv_cost",
                                       "cv_error_rate", "cv_errors", "leaves", "coefficients"])

    importance = pd.DataFrame(d.get("phase5_importance", []), columns=["coefficient", "importance"])
    importance.insert(0, "rank", range(1, len(importance) + 1))

    return {"eq_curves": eq_curve_table(d.get("compression")), "packet_ranking": ranking,
            "forward_steps": steps, "refinement_table": refinement, "importance": importance}


def table_text(frame, fmt="csv"):
    if fmt == "json":
        return frame.to_json(orient="records", indent=2) + "\n"
    buf = io.StringIO()
    frame.to_csv(buf, index=False, lineterminator="\n")
    return buf.getvalue()


def write_tables(tables, out_dir, fmt="csv"):
    out_dir = Path(out_dir)
    return [atomic_write_text(out_dir / f"{name}.{fmt}", table_text(frame, fmt)) for name, frame in tables.items()]


def write_report(report, out_dir, fmt="csv"):
    """report.json and the side tables; returns the written paths"""
    d = report if isinstance(report, dict) else report.to_dict()
    out_dir = Path(out_dir)
    paths = [atomic_write_text(out_dir / REPORT_FILE, report_json(d))]
    return paths + write_tables(report_tables(d), out_dir, fmt)


def render_report(d, tablefmt="simple"):
    """Plain-text summary of a report for the terminal"""
    s = d.get("summary", {})
    lines = [f"n = {s.get('n')}, classes = {s.get('class_count')}, strategy = {s.get('final_strategy')}",
             f"forward test: {s.get('forward_test')}",
             f"low-signal test: {s.get('low_signal_test')}"]
    if s.get("degenerate"):
        lines.append("DEGENERATE: every packet was screened out, no criteria selected")
        return "\n".join(lines) + "\n"
    lines.append(f"chosen step {s.get('chosen_step')}: variables {s.get('chosen_variables')} "
                 f"(CV cost {s.get('chosen_cv_cost'):.4f})")
    lines.append(f"final criteria: {' '.join(s.get('final_criteria', []))}")

    tables = report_tables(d)
    for name in ("packet_ranking", "forward_steps", "refinement_table"):
        lines += ["", name, tabulate(tables[name], headers="keys", tablefmt=tablefmt, showindex=False,
                                     floatfmt=".4f")]
    lines += ["", "importance (top 15)",
              tabulate(tables["importance"].head(15), headers="keys", tablefmt=tablefmt, showindex=False,
                       floatfmt=".1f")]
    return "\n".join(lines) + "\n"
