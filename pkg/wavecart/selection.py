"""
Stepwise selection of coefficient packets and of the final criteria.

  phase 1  screen each packet C^j by bagged surrogate importance
  phase 2  rank the screened packets by the CV cost of their own tree
  phase 3  add packets in ranked order, keeping a packet only if the CV cost drops
  phase 4  choose the kept model with the lowest CV cost
  phase 5  rank the coefficients of that model by importance and pick the final criteria

Every tree fitted in one phase draws its folds and bootstrap samples from the
same seed, so identical inputs get identical scores.
"""
from dataclasses import dataclass, field

import numpy as np

from .cart import CostMatrix, GrowthParams, bagged_importance, cv_cost, fit_model, tree_importance
from .compression import compress_dataset
from .logging import logger
from .preprocess import preprocess_dataset
from .utils import (STAGE_PHASE1, STAGE_PHASE2, STAGE_PHASE3, STAGE_PHASE5_CV, STAGE_PHASE5_IMPORTANCE,
                    PipelineError, parallel_map, task_seed)

FLAG_EMPTY = "empty"
FLAG_LOW_SIGNAL = "low_signal"

KEPT = "kept"
DROPPED = "dropped"


@dataclass(frozen=True, eq=False)
class ScreenedPacket:
    variable: int
    packet_ids: tuple
    kept_ids: tuple
    columns: np.ndarray             # n x len(kept_ids)
    importance: dict                # coefficient id -> bagged importance, max 100
    signal: float                   # largest importance in the pruned tree, % of root impurity
    flags: tuple = ()
    full_columns: np.ndarray = None

    @property
    def flagged(self):
        return bool(self.flags)

    def to_dict(self):
        return {"variable": self.variable, "packet_size": len(self.packet_ids),
                "kept": list(self.kept_ids), "signal": self.signal, "flags": list(self.flags),
                "importance": self.importance}


@dataclass(frozen=True)
class RankedPacket:
    variable: int
    size: int
    cv_cost: float
    cv_error_rate: float
    repeat_costs: tuple

    def to_dict(self):
        return {"variable": self.variable, "size": self.size, "cv_cost": self.cv_cost,
                "cv_error_rate": self.cv_error_rate, "repeat_costs": list(self.repeat_costs)}


@dataclass(frozen=True)
class ModelStep:
    index: int                      # 1-based
    candidate: int                  # variable offered at this step
    included: tuple                 # variables in the model after the decision
    cv_cost: float                  # CV cost of the model with the candidate
    decision: str
    cv_error_rate: float = float("nan")
    coefficient_count: int = 0

    def to_dict(self):
        return {"step": self.index, "candidate": self.candidate, "included": list(self.included),
                "cv_cost": self.cv_cost, "cv_error_rate": self.cv_error_rate,
                "decision": self.decision, "coefficients": self.coefficient_count}


@dataclass(frozen=True)
class RefinementRow:
    size: int
    coefficient_ids: tuple
    apparent_errors: int
    apparent_cost: float
    cv_cost: float
    cv_error_rate: float
    cv_errors: float                # expected errors out of n
    leaves: int

    def to_dict(self):
        return {"size": self.size, "coefficients": list(self.coefficient_ids),
                "apparent_errors": self.apparent_errors, "apparent_cost": self.apparent_cost,
                "cv_cost": self.cv_cost, "cv_error_rate": self.cv_error_rate,
                "cv_errors": self.cv_errors, "leaves": self.leaves}


@dataclass
class FinalSelection:
    strategy: str
    criteria: tuple
    importance: list                # (coefficient id, importance) by decreasing importance
    refinement: list
    tree: dict = None
    apparent_errors: int = 0
    cv_cost: float = float("nan")


@dataclass
class SelectionReport:
    config: dict
    n: int
    class_count: int
    screened: list = field(default_factory=list)
    ranking: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    chosen_step: int = 0
    final: FinalSelection = None
    degenerate: bool = False
    preprocess: dict = None
    compression: dict = None

    @property
    def final_criteria(self):
        return () if self.final is None else self.final.criteria

    def chosen_model(self):
        for s in self.steps:
            if s.index == self.chosen_step:
                return s
        return None

    def to_dict(self):
        chosen = self.chosen_model()
        final = self.final
        return {
            "summary": {
                "n": self.n,
                "class_count": self.class_count,
                "degenerate": self.degenerate,
                "forward_test": f"keep a packet iff CV cost < best - {self.config['forward_margin']}",
                "low_signal_test": f"best importance in the CV-pruned tree < {self.config['importance_floor']}% "
                                   "of root impurity",
                "importance_includes_primary": self.config["importance_with_primary"],
                "ranking_on": "screened" if self.config["rank_on_screened"] else "full",
                "chosen_step": self.chosen_step,
                "chosen_variables": list(chosen.included) if chosen else [],
                "chosen_cv_cost": chosen.cv_cost if chosen else None,
                "final_strategy": self.config["final_strategy"],
                "final_criteria": list(self.final_criteria),
            },
            "config": self.config,
            "preprocess": self.preprocess,
            "compression": self.compression,
            "phase1_screening": [s.to_dict() for s in self.screened],
            "phase2_ranking": [r.to_dict() for r in self.ranking],
            "phase3_steps": [s.to_dict() for s in self.steps],
            "phase5_importance": [{"coefficient": c, "importance": v} for c, v in final.importance] if final else [],
            "phase5_refinement": [r.to_dict() for r in final.refinement] if final else [],
            "final_tree": final.tree if final else None,
        }


def _screen_one(job):
    packet, y, cost, cfg = job
    params = GrowthParams.from_config(cfg)
    seed = task_seed(cfg.seed, STAGE_PHASE1)
    imp = bagged_importance(packet.coeffs, y, cost, params, cfg.bootstrap_count,
                            np.random.default_rng(seed), cfg.importance_with_primary, packet.coeff_ids)
    normalized = imp.normalized
    importance = {cid: float(v) for cid, v in zip(packet.coeff_ids, normalized)}

    flags = []
    if imp.raw.max(initial=0.0) <= 0:
        kept = ()
        flags.append(FLAG_EMPTY)
    else:
        threshold = cfg.importance_keep_fraction * normalized.max()
        kept = tuple(cid for cid, v in zip(packet.coeff_ids, normalized) if v >= threshold)

    model = fit_model(packet.coeffs, y, cost, cfg, task_seed(cfg.seed, STAGE_PHASE1), packet.coeff_ids)
    pruned = model.tree.prune_steps[model.step].pruned
    pruned_raw = tree_importance(model.tree, cfg.importance_with_primary, pruned)
    root = model.tree.root.impurity
    signal = float(100.0 * pruned_raw.max() / root) if root > 0 else 0.0
    if kept and signal < cfg.importance_floor:
        flags.append(FLAG_LOW_SIGNAL)

    columns = packet.columns(kept) if kept else np.zeros((len(y), 0))
    return ScreenedPacket(packet.variable, packet.coeff_ids, kept, columns, importance, signal,
                          tuple(flags), packet.coeffs)


def phase1_screen(packets, y, cost, cfg):
    logger.stage_message("phase 1", f"screening {len(packets)} packets by bagged importance "
                                    f"({cfg.bootstrap_count} bootstrap trees, keep >= {cfg.importance_keep_fraction:g} x max)")
    y = np.asarray(y, dtype=int)
    screened = parallel_map(_screen_one, [(p, y, cost, cfg) for p in packets], cfg.threads)
    for s in screened:
        if s.flagged:
            logger.warning_message(f"variable {s.variable}: packet flagged {', '.join(s.flags)} "
                                   f"(signal {s.signal:.2f}%), excluded from ranking")
        else:
            logger.debug_message(f"variable {s.variable}: kept {len(s.kept_ids)}/{len(s.packet_ids)} coefficients")
    return screened


def _rank_one(job):
    packet, y, cost, cfg = job
    X = packet.columns if cfg.rank_on_screened else packet.full_columns
    ids = packet.kept_ids if cfg.rank_on_screened else packet.packet_ids
    cv = cv_cost(X, y, cost, cfg.cv_folds, cfg.cv_repeats, task_seed(cfg.seed, STAGE_PHASE2),
                 GrowthParams.from_config(cfg), cfg.one_se_rule, ids)
    return RankedPacket(packet.variable, len(ids), cv.mean_cost, cv.mean_error, cv.repeat_costs)


def phase2_rank(screened, y, cost, cfg):
    """Unflagged packets ordered by CV cost, then packet size, then variable"""
    candidates = [s for s in screened if not s.flagged]
    logger.stage_message("phase 2", f"ranking {len(candidates)} packets by CV cost "
                                    f"({cfg.cv_repeats} x {cfg.cv_folds}-fold)")
    y = np.asarray(y, dtype=int)
    ranked = parallel_map(_rank_one, [(s, y, cost, cfg) for s in candidates], cfg.threads)
    ranked.sort(key=lambda r: (r.cv_cost, r.size, r.variable))
    if ranked:
        logger.stage_message("phase 2", "order " + " ".join(str(r.variable) for r in ranked))
    return ranked


def _union(packets):
    ids = tuple(cid for p in packets for cid in p.kept_ids)
    X = np.hstack([p.columns for p in packets]) if packets else None
    return X, ids


def phase3_forward(ordered, y, cost, cfg):
    """
    ordered: screened packets in ranking order. A candidate is kept when the
    CV cost of the model with it falls below the best cost so far minus the margin.
    """
    logger.stage_message("phase 3", f"forward selection over {len(ordered)} packets "
                                    f"(margin {cfg.forward_margin:g})")
    y = np.asarray(y, dtype=int)
    params = GrowthParams.from_config(cfg)
    included, steps = [], []
    best = float("inf")
    logger.start_progress()
    try:
        for i, packet in enumerate(ordered, start=1):
            logger.progress_message(f"step {i}/{len(ordered)}: variable {packet.variable}")
            X, ids = _union(included + [packet])
            cv = cv_cost(X, y, cost, cfg.cv_folds, cfg.cv_repeats, task_seed(cfg.seed, STAGE_PHASE3),
                         params, cfg.one_se_rule, ids)
            if cv.mean_cost < best - cfg.forward_margin:
                included.append(packet)
                best = cv.mean_cost
                decision = KEPT
            else:
                decision = DROPPED
            steps.append(ModelStep(i, packet.variable, tuple(p.variable for p in included), cv.mean_cost,
                                   decision, cv.mean_error, sum(len(p.kept_ids) for p in included)))
            logger.debug_message(f"step {i}: variable {packet.variable} cv {cv.mean_cost:.4f} {decision}")
    finally:
        logger.stop_progress()
    return steps


def phase4_select(steps):
    """Kept step with the lowest CV cost; ties go to fewer packets, then the earlier step"""
    if not steps:
        raise ValueError("No model steps to choose from")
    pool = [s for s in steps if s.decision == KEPT] or list(steps)
    return min(pool, key=lambda s: (s.cv_cost, len(s.included), s.index))


def _refine(X, ids, y, cost, cfg, sizes):
    rows, models = [], []
    seed = task_seed(cfg.seed, STAGE_PHASE5_CV)
    for size in sizes:
        model = fit_model(X[:, :size], y, cost, cfg, seed, ids[:size])
        step = model.tree.prune_steps[model.step]
        rows.append(RefinementRow(size, tuple(ids[:size]), model.apparent_errors, model.apparent_cost,
                                  model.cv.mean_cost, model.cv.mean_error, model.cv.mean_error * len(y),
                                  step.n_leaves))
        models.append(model)
    return rows, models


def phase5_finalize(chosen_packets, y, cost, cfg, strategy=None):
    strategy = strategy or cfg.final_strategy
    y = np.asarray(y, dtype=int)
    X, ids = _union(chosen_packets)
    logger.stage_message("phase 5", f"ranking {len(ids)} coefficients of the chosen model, strategy {strategy}")
    imp = bagged_importance(X, y, cost, GrowthParams.from_config(cfg), cfg.bootstrap_count,
                            np.random.default_rng(task_seed(cfg.seed, STAGE_PHASE5_IMPORTANCE)),
                            cfg.importance_with_primary, ids)
    order = imp.ranking()
    normalized = imp.normalized
    ranked_ids = tuple(ids[i] for i in order)
    Xr = X[:, order]

    table_sizes = list(range(1, min(cfg.refinement_max_size, len(ids)) + 1))
    rows, models = _refine(Xr, ranked_ids, y, cost, cfg, table_sizes)

    if strategy == "nested":
        best = min(rows, key=lambda r: (r.cv_cost, r.size))
        model = models[best.size - 1]
        size = best.size
    else:
        size = min(cfg.final_top_k, len(ids))
        if size <= len(models):
            model = models[size - 1]
        else:
            model = _refine(Xr, ranked_ids, y, cost, cfg, [size])[1][0]

    criteria = ranked_ids[:size]
    logger.stage_message("phase 5", f"{len(criteria)} final criteria: {' '.join(criteria)}")
    return FinalSelection(strategy, criteria, [(ids[i], float(normalized[i])) for i in order], rows,
                          model.tree.to_dict(model.step), model.apparent_errors, model.cv.mean_cost)


def select(packets, y, class_count, cfg):
    """Phases 1 to 5 on compressed packets"""
    y = np.asarray(y, dtype=int)
    cost = CostMatrix.ordinal(class_count)
    report = SelectionReport(config=cfg.to_dict(), n=len(y), class_count=class_count)

    report.screened = _stage("phase1", phase1_screen, packets, y, cost, cfg)
    by_variable = {s.variable: s for s in report.screened}
    if not any(not s.flagged for s in report.screened):
        logger.warning_message("every packet was screened out, no model can be built")
        report.degenerate = True
        return report

    report.ranking = _stage("phase2", phase2_rank, report.screened, y, cost, cfg)
    ordered = [by_variable[r.variable] for r in report.ranking]
    report.steps = _stage("phase3", phase3_forward, ordered, y, cost, cfg)
    chosen = _stage("phase4", phase4_select, report.steps)
    report.chosen_step = chosen.index
    logger.stage_message("phase 4", f"step {chosen.index}: variables {list(chosen.included)}, "
                                    f"CV cost {chosen.cv_cost:.4f}")
    report.final = _stage("phase5", phase5_finalize, [by_variable[v] for v in chosen.included], y, cost, cfg)
    return report


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except PipelineError:
        raise
    except Exception as e:
        raise PipelineError(name, e) from e


def run_pipeline(d, cfg):
    """Preprocess, compress and select on a raw dataset"""
    preprocessed, audit = _stage("preprocess", preprocess_dataset, d, cfg)
    packets, compression = _stage("compress", compress_dataset, preprocessed, cfg)
    report = select(packets, preprocessed.labels, d.class_count, cfg)
    report.preprocess = audit.to_dict()
    report.compression = compression.to_dict()
    return report
