"""Sliced selection for continuous responses and Gaussian-mixture prediction.

The response is cut into ``H`` rank-based slices, the slice index is used
as a class label for :func:`~soda.selector.soda_select`, and ``E[Y | X]``
is predicted by inverting per-slice Gaussian models of the selected
predictors with Bayes' rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.special import logsumexp

from .core import DataError, Dataset, SelectionConfig, SodaError
from .selector import SelectionResult, soda_select


class HTooLarge(SodaError, ValueError):
    pass


class SliceTooSmall(SodaError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SliceAssignment:
    """Slice code per sample (``0..H-1``, original sample order)."""

    h: np.ndarray
    H: int
    boundaries: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.h, minlength=self.H)


def slice_response(y, H: int) -> SliceAssignment:
    """Split samples into ``H`` slices of near-equal size by rank of ``y``.

    Ties in ``y`` are broken by original index.  When ``n`` is not a
    multiple of ``H`` the ``n mod H`` larger slices come first.
    ``boundaries[k]`` is the largest response in slice ``k``.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if H < 1:
        raise ValueError("H must be positive")
    if H > n:
        raise HTooLarge(f"H={H} slices for n={n} samples")
    order = np.argsort(y, kind="stable")
    sizes = np.full(H, n // H)
    sizes[: n % H] += 1
    codes = np.empty(n, dtype=np.int64)
    codes[order] = np.repeat(np.arange(H), sizes)
    ends = np.cumsum(sizes)[:-1] - 1
    return SliceAssignment(codes, H, y[order][ends])


def s_soda_select(data: Dataset, H: int = 5,
                  cfg: Optional[SelectionConfig] = None) -> SelectionResult:
    """Select terms for a continuous response through its slice labels.

    With ``cfg=None`` candidates that separate the slices are scored at
    the coefficient cap instead of being rejected: with several narrow
    slices the strongest predictors routinely separate the extreme
    slices, and rejecting those fits would drop exactly the predictors
    that matter.
    """
    if data.categorical:
        raise DataError("s_soda_select needs a continuous response")
    if H < 2:
        raise ValueError("H must be at least 2")
    cfg = cfg or SelectionConfig(separation="boundary")
    sl = slice_response(data.y, H)
    labelled = data.with_labels(sl.h, tuple(range(1, H + 1)))
    return soda_select(labelled, cfg)


@dataclass(frozen=True, eq=False)
class SlicedModel:
    """Per-slice Gaussian models of the selected predictors.

    ``means`` is ``(H, d)``, ``covariances`` is ``(H, d, d)``,
    ``response_means`` and ``counts`` are length ``H``.
    """

    predictors: tuple
    means: np.ndarray
    covariances: np.ndarray
    response_means: np.ndarray
    counts: np.ndarray
    column_names: tuple = ()
    warnings: tuple = ()

    @property
    def H(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return len(self.predictors)

    def slice_log_densities(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError(f"expected {self.d} predictor values, got {x.shape[1]}")
        out = np.empty((x.shape[0], self.H))
        for h in range(self.H):
            chol = np.linalg.cholesky(self.covariances[h])
            r = np.linalg.solve(chol, (x - self.means[h]).T)
            logdet = 2.0 * np.sum(np.log(np.diag(chol)))
            out[:, h] = -0.5 * (np.sum(r * r, axis=0) + logdet + self.d * np.log(2 * np.pi))
        return out

    def slice_probabilities(self, x) -> np.ndarray:
        logd = self.slice_log_densities(x)
        return np.exp(logd - logsumexp(logd, axis=1, keepdims=True))

    def predict(self, x) -> np.ndarray:
        """Posterior-weighted mean of the slice response means."""
        w = self.slice_probabilities(x)
        return w @ self.response_means


def fit_sliced_gaussian(data: Dataset, predictors: Iterable[int], H: int = 25,
                        slices: Optional[SliceAssignment] = None) -> SlicedModel:
    """Per-slice sample mean and (ridge-regularised MLE) covariance of the
    chosen predictors, plus each slice's mean response."""
    if data.categorical:
        raise DataError("fit_sliced_gaussian needs a continuous response")
    preds = tuple(sorted(int(j) for j in predictors))
    if preds and preds[-1] >= data.p:
        raise ValueError(f"predictor {preds[-1]} out of range for p={data.p}")
    sl = slices if slices is not None else slice_response(data.y, H)
    d = len(preds)
    counts = sl.sizes
    if np.any(counts < 2):
        raise SliceTooSmall(f"every slice needs >= 2 samples, smallest has {counts.min()}")
    notes = []
    if np.any(counts < d + 2):
        msg = f"slice sizes down to {counts.min()} for d={d}; covariances rely on the ridge"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    xp = data.x[:, list(preds)]
    means = np.zeros((sl.H, d))
    covs = np.zeros((sl.H, d, d))
    ymeans = np.zeros(sl.H)
    for h in range(sl.H):
        rows = sl.h == h
        xh = xp[rows]
        means[h] = xh.mean(axis=0)
        dev = xh - means[h]
        cov = dev.T @ dev / rows.sum()
        lam = 1e-6 * max(1.0, np.trace(cov) / d) if d else 0.0
        covs[h] = cov + lam * np.eye(d)
        ymeans[h] = data.y[rows].mean()
    names = tuple(data.column_names[j] for j in preds)
    return SlicedModel(preds, means, covs, ymeans, counts, names, tuple(notes))


def predict(model: SlicedModel, x_new) -> np.ndarray | float:
    """Plug-in estimate of ``E[Y | X]`` for one row or a matrix of rows
    over the model's predictors."""
    x = np.asarray(x_new, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x_new must be finite")
    out = model.predict(x)
    return float(out[0]) if x.ndim <= 1 else out
