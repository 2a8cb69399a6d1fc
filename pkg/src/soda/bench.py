"""Monte Carlo benchmark over simulated replicates.

One replicate draws a training set (and, for classification, an
independent test set) from its own substream, runs the selector, and
reports selection errors, test error and wall time.  Replicates are
independent, so they can run in a process pool without changing any
number except the timings.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from .core import SelectionConfig
from .selector import cv_select_gamma, soda_select
from .simgen import (
    CLASSIFICATION_EXAMPLES,
    REGRESSION_EXAMPLES,
    TEST,
    BadExampleId,
    gen_classification,
    gen_regression,
    predictor_metrics,
    selection_metrics,
    test_error,
)
from .ssoda import fit_sliced_gaussian, s_soda_select

METRIC_COLUMNS = ["vfp", "vfn", "mfp", "mfn", "ifp", "ifn", "te"]
GRID_LIMIT = 2.0


@dataclass(frozen=True)
class BenchmarkSpec:
    """One benchmark cell.

    For classification examples ``n`` is the per-class training size.
    ``gamma`` is a number or ``"cv"``.  ``separation=None`` rejects
    separated candidates for classification examples and scores them at
    the coefficient cap for sliced regression examples.
    """

    example: str
    n: int
    p: Optional[int] = None
    scenario: str = "a"
    seed: int = 0
    gamma: Union[float, str] = 0.5
    slices: int = 5
    fit_slices: int = 25
    grid: int = 20
    test_size: int = 10_000
    cv_folds: int = 10
    separation: Optional[str] = None

    def __post_init__(self):
        if self.example not in CLASSIFICATION_EXAMPLES + REGRESSION_EXAMPLES:
            raise BadExampleId(f"unknown example {self.example!r}")

    @property
    def classification(self) -> bool:
        return self.example in CLASSIFICATION_EXAMPLES

    @property
    def surface(self) -> bool:
        return self.example.startswith("3")


def surface_grid(size: int, limit: float = GRID_LIMIT) -> np.ndarray:
    """``size * size`` points of a square grid on ``[-limit, limit]^2``,
    x1 varying slowest."""
    axis = np.linspace(-limit, limit, size)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def _config(spec: BenchmarkSpec, gamma: float) -> SelectionConfig:
    sep = spec.separation or ("raise" if spec.classification else "boundary")
    return SelectionConfig(gamma=gamma, separation=sep)


def _classification_replicate(spec: BenchmarkSpec, rep: int) -> dict:
    train, truth, _ = gen_classification(spec.example, spec.n, spec.p, spec.seed, rep)
    test, _, _ = gen_classification(spec.example, max(1, spec.test_size // 2), spec.p,
                                    spec.seed, rep, stream=TEST)
    gamma = spec.gamma
    if gamma == "cv":
        gamma = cv_select_gamma(train, folds=spec.cv_folds, cfg=_config(spec, 0.5), seed=rep)
    res = soda_select(train, _config(spec, float(gamma)))
    m = selection_metrics(res.selected, truth, test_error(res.fit, test))
    row = dataclasses.asdict(m)
    row["gamma"] = float(gamma)
    row["selected"] = " ".join(map(repr, res.selected))
    return row


def _regression_replicate(spec: BenchmarkSpec, rep: int):
    data, truth, oracle = gen_regression(spec.example, spec.scenario, spec.n, spec.p,
                                         spec.seed, rep)
    gamma = 0.5 if spec.gamma == "cv" else float(spec.gamma)
    res = s_soda_select(data, spec.slices, _config(spec, gamma))
    row = dataclasses.asdict(predictor_metrics(res.predictors, truth))
    row["gamma"] = gamma
    row["selected"] = " ".join(str(j + 1) for j in sorted(res.predictors))
    grid = None
    if spec.surface:
        pts = surface_grid(spec.grid)
        full = np.zeros((len(pts), data.p))
        full[:, :2] = pts
        truth_surface = oracle.mean(full)
        if res.predictors:
            model = fit_sliced_gaussian(data, res.predictors, spec.fit_slices)
            pred = model.predict(full[:, list(model.predictors)])
        else:
            pred = np.full(len(pts), data.y.mean())
        corr = float(np.corrcoef(truth_surface, pred)[0, 1]) if np.std(pred) > 0 else 0.0
        row["corr"] = corr
        grid = pd.DataFrame({"x1": pts[:, 0], "x2": pts[:, 1], "true": truth_surface,
                             "predicted": pred, "corr": corr})
    return row, grid


def run_replicate(spec: BenchmarkSpec, rep: int):
    """Return ``(row, grid)`` for replicate ``rep``; ``grid`` is ``None``
    except for surface examples."""
    start = time.perf_counter()
    if spec.classification:
        row, grid = _classification_replicate(spec, rep), None
    else:
        row, grid = _regression_replicate(spec, rep)
    out = {"example": spec.example, "scenario": spec.scenario if not spec.classification else "",
           "n": spec.n, "replicate": rep}
    out.update(row)
    out["seconds"] = time.perf_counter() - start
    return out, grid


def _run_star(args):
    return run_replicate(*args)


def run_benchmark(specs: Sequence[BenchmarkSpec], reps: int, workers: int = 1):
    """Run every spec for ``reps`` replicates.

    Returns ``(results, grids)`` where ``results`` has one row per
    replicate and ``grids`` maps ``(n, replicate)`` to surface grids.
    """
    jobs = [(s, r) for s in specs for r in range(reps)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            outs = list(pool.map(_run_star, jobs))
    else:
        outs = [run_replicate(s, r) for s, r in jobs]
    columns = ["example", "scenario", "n", "replicate"] + METRIC_COLUMNS
    results = pd.DataFrame([o[0] for o in outs])
    extra = [c for c in results.columns if c not in columns and c != "seconds"]
    results = results.reindex(columns=columns + extra + ["seconds"])
    grids = {(s.n, r): o[1] for (s, r), o in zip(jobs, outs) if o[1] is not None}
    return results, grids


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation of each numeric metric per (example, scenario, n)."""
    keys = ["example", "scenario", "n"]
    cols = [c for c in results.columns
            if c not in keys + ["replicate", "selected"] and results[c].notna().any()]
    grouped = results.groupby(keys, sort=False, dropna=False)[cols]
    mean = grouped.mean().add_suffix("_mean")
    sd = grouped.std(ddof=1).add_suffix("_sd")
    out = pd.concat([mean, sd], axis=1)
    order = [f"{c}_{s}" for c in cols for s in ("mean", "sd")]
    out = out[order].reset_index()
    out.insert(3, "reps", grouped.size().to_numpy())
    return out
