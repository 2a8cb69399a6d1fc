"""Three-stage EBIC-guided stepwise selection of main and interaction terms.

Stage 1 adds main effects one at a time.  Stage 2 adds whole predictors:
a candidate ``j`` brings its main effect together with its square and its
products with every predictor already chosen.  Stage 3 removes single
terms, main or interaction, with no hierarchy constraint.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from .core import (
    DataError,
    Dataset,
    SelectionConfig,
    SodaError,
    Term,
    TermSet,
    induced_term_set,
    predictors_of,
)
from .glm import ModelFit, fit_mle


@dataclass(frozen=True)
class TraceStep:
    """One step of the search.

    ``status`` is ``"accepted"`` when the step produced a new lowest EBIC,
    ``"continued"`` for a forced forward step taken after EBIC stopped
    improving, and ``"rejected"`` for the final step that ended a stage.
    """

    stage: int
    action: str
    candidate: Hashable
    ebic_before: float
    ebic_after: float
    status: str


@dataclass(frozen=True, eq=False)
class SelectionResult:
    selected: TermSet
    predictors: frozenset
    trace: tuple
    gamma_used: float
    fits_evaluated: int
    preliminary: TermSet = TermSet()
    forward: frozenset = frozenset()
    fit: Optional[ModelFit] = None
    stage_fits: tuple = (0, 0, 0)

    def summary(self, names: Optional[Sequence[str]] = None) -> str:
        lines = [f"gamma = {self.gamma_used}",
                 f"selected terms ({len(self.selected)}): "
                 + ", ".join(self.selected.labels(names))]
        if self.fit is not None:
            lines.append(f"EBIC = {self.fit.ebic:.4f}, loglik = {self.fit.loglik:.4f}")
        return "\n".join(lines)


class _Scorer:
    """Fits term sets, caching results and counting real fits."""

    def __init__(self, data: Dataset, cfg: SelectionConfig, pool=None):
        self.data = data
        self.cfg = cfg
        self.pool = pool
        self.cache: dict[TermSet, Optional[ModelFit]] = {}
        self.fits = 0

    def _fit(self, s: TermSet) -> Optional[ModelFit]:
        try:
            return fit_mle(self.data, s, self.cfg)
        except SodaError:
            return None

    def many(self, sets: Sequence[TermSet]) -> list[Optional[ModelFit]]:
        todo = [s for s in dict.fromkeys(sets) if s not in self.cache]
        self.fits += len(todo)
        if self.pool is not None and len(todo) > 1:
            results = list(self.pool.map(self._fit, todo))
        else:
            results = [self._fit(s) for s in todo]
        self.cache.update(zip(todo, results))
        return [self.cache[s] for s in sets]

    def one(self, s: TermSet) -> Optional[ModelFit]:
        return self.many([s])[0]


def _argmin(fits: Sequence[Optional[ModelFit]]) -> Optional[int]:
    best, best_e = None, np.inf
    for k, f in enumerate(fits):
        # strict '<' keeps the earliest (smallest-index) candidate on ties
        if f is not None and f.ebic < best_e:
            best, best_e = k, f.ebic
    return best


def _forward(scorer: _Scorer, stage: int, make_set: Callable[[frozenset], TermSet],
             p: int, start_fit: ModelFit, continue_steps: int, cap: Optional[int],
             trace: list):
    chosen: frozenset = frozenset()
    best_chosen, best_fit = chosen, start_fit
    current = start_fit
    forced = 0
    while cap is None or len(chosen) < cap:
        cands = [j for j in range(p) if j not in chosen]
        if not cands:
            break
        fits = scorer.many([make_set(chosen | {j}) for j in cands])
        k = _argmin(fits)
        if k is None:
            break
        j, fit = cands[k], fits[k]
        if fit.ebic < best_fit.ebic:
            status = "accepted"
            forced = 0
        elif forced < continue_steps:
            status = "continued"
            forced += 1
        else:
            trace.append(TraceStep(stage, "add", j, current.ebic, fit.ebic, "rejected"))
            break
        trace.append(TraceStep(stage, "add", j, current.ebic, fit.ebic, status))
        chosen = chosen | {j}
        current = fit
        if status == "accepted":
            best_chosen, best_fit = chosen, fit
    return best_chosen, best_fit


def _start(data: Dataset, cfg: Optional[SelectionConfig]) -> SelectionConfig:
    if not data.categorical:
        raise DataError("selection needs a categorical response")
    return cfg or SelectionConfig()


def _stage1(scorer, cfg, trace):
    data = scorer.data
    empty = scorer.one(TermSet())
    if empty is None:
        raise SodaError("the intercept-only model could not be fitted")
    steps = cfg.p_f if cfg.continue_stage1 else 0
    chosen, fit = _forward(scorer, 1, TermSet.of_mains, data.p, empty, steps, None, trace)
    return TermSet.of_mains(chosen), fit


def _stage2(scorer, m_f, m_f_fit, cfg, trace):
    data = scorer.data
    steps = cfg.p_f if cfg.continue_stage2 else 0
    chosen, fit = _forward(scorer, 2, lambda c: induced_term_set(m_f, c), data.p, m_f_fit,
                           steps, cfg.resolved_max_forward(data.n), trace)
    return chosen, fit


def _stage3(scorer, start_fit, trace):
    current = start_fit
    while len(current.terms):
        terms = current.terms.terms
        fits = scorer.many([current.terms.remove(t) for t in terms])
        k = _argmin(fits)
        if k is None:
            break
        if fits[k].ebic < current.ebic:
            trace.append(TraceStep(3, "remove", terms[k], current.ebic, fits[k].ebic, "accepted"))
            current = fits[k]
        else:
            trace.append(TraceStep(3, "remove", terms[k], current.ebic, fits[k].ebic, "rejected"))
            break
    return current


def _pool(cfg):
    return ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None


def stage1_preliminary(data: Dataset, cfg: Optional[SelectionConfig] = None) -> TermSet:
    """Greedy forward selection over main effects only."""
    cfg = _start(data, cfg)
    return _stage1(_Scorer(data, cfg), cfg, [])[0]


def stage2_forward(data: Dataset, m_f: Iterable[Term],
                   cfg: Optional[SelectionConfig] = None) -> frozenset:
    """Forward addition of predictors, each with all its induced terms.

    Returns the chosen predictor set.
    """
    cfg = _start(data, cfg)
    m_f = TermSet(m_f)
    scorer = _Scorer(data, cfg)
    start = scorer.one(m_f)
    if start is None:
        raise SodaError("the preliminary main-effect model could not be fitted")
    return _stage2(scorer, m_f, start, cfg, [])[0]


def stage3_backward(data: Dataset, s_start: Iterable[Term],
                    cfg: Optional[SelectionConfig] = None) -> TermSet:
    """Backward elimination of single terms while EBIC decreases."""
    cfg = _start(data, cfg)
    scorer = _Scorer(data, cfg)
    start = scorer.one(TermSet(s_start))
    if start is None:
        raise SodaError("the starting term set could not be fitted")
    return _stage3(scorer, start, []).terms


def soda_select(data: Dataset, cfg: Optional[SelectionConfig] = None) -> SelectionResult:
    """Run the three stages and return the selected terms with a full trace."""
    cfg = _start(data, cfg)
    pool = _pool(cfg)
    try:
        scorer = _Scorer(data, cfg, pool)
        trace: list[TraceStep] = []
        m_f, m_f_fit = _stage1(scorer, cfg, trace)
        n1 = scorer.fits
        c_f, _ = _stage2(scorer, m_f, m_f_fit, cfg, trace)
        n2 = scorer.fits - n1
        start = scorer.one(induced_term_set(m_f, c_f))
        final = _stage3(scorer, start, trace)
        n3 = scorer.fits - n1 - n2
    finally:
        if pool is not None:
            pool.shutdown()
    return SelectionResult(
        selected=final.terms,
        predictors=predictors_of(final.terms),
        trace=tuple(trace),
        gamma_used=cfg.gamma,
        fits_evaluated=scorer.fits,
        preliminary=m_f,
        forward=frozenset(c_f),
        fit=final,
        stage_fits=(n1, n2, n3),
    )


# ---------------------------------------------------------------------------
# tuning gamma
# ---------------------------------------------------------------------------

def stratified_folds(codes: np.ndarray, folds: int, seed: int = 0) -> np.ndarray:
    """Fold index per sample; each class is spread round-robin over folds."""
    rng = np.random.default_rng(seed)
    out = np.empty(len(codes), dtype=int)
    offset = 0
    for c in np.unique(codes):
        idx = np.flatnonzero(codes == c)
        idx = idx[rng.permutation(len(idx))]
        out[idx] = (np.arange(len(idx)) + offset) % folds
        offset += len(idx)
    return out


def cv_gamma_errors(data: Dataset, grid: Sequence[float] = (0.0, 0.5, 1.0), folds: int = 10,
                    cfg: Optional[SelectionConfig] = None, seed: int = 0) -> dict:
    """Mean held-out misclassification rate of the selected model per gamma."""
    cfg = _start(data, cfg)
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if not len(grid):
        raise ValueError("gamma grid is empty")
    fold = stratified_folds(data.y, folds, seed)
    errors = {}
    for g in grid:
        cfg_g = dataclasses.replace(cfg, gamma=float(g))
        per_fold = []
        for f in range(folds):
            train = data.subset(np.flatnonzero(fold != f))
            test = np.flatnonzero(fold == f)
            res = soda_select(train, cfg_g)
            pred = res.fit.predict(data.x[test])
            per_fold.append(np.mean(pred != data.y[test]))
        errors[float(g)] = float(np.mean(per_fold))
    return errors


def cv_select_gamma(data: Dataset, grid: Sequence[float] = (0.0, 0.5, 1.0), folds: int = 10,
                    cfg: Optional[SelectionConfig] = None, seed: int = 0) -> float:
    """Gamma with the lowest cross-validated error; ties go to the larger gamma."""
    if len(grid) == 1:
        return float(grid[0])
    errors = cv_gamma_errors(data, grid, folds, cfg, seed)
    best = None
    for g in sorted(errors, reverse=True):
        if best is None or errors[g] < errors[best]:
            best = g
    return best
