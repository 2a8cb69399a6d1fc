"""Multinomial logistic regression over main-effect and second-order designs.

Class ``K-1`` (the last code) is the baseline with a zero discriminant.
Coefficients are held as a ``(K-1, 1 + |S|)`` array: one row per
non-baseline class, the intercept first and then one column per term in
:class:`~soda.core.TermSet` order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .core import (
    DataError,
    Dataset,
    DimensionMismatch,
    IndexOutOfRange,
    NewtonOptions,
    SelectionConfig,
    SodaError,
    Term,
    TermSet,
)


class SeparationError(SodaError):
    """Coefficients diverge: the classes are (quasi-)separated by the design."""


class RankDeficientError(SodaError):
    """The augmented design has constant, duplicated or collinear columns."""


class NotPositiveDefinite(SodaError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AugmentedDesign:
    z: np.ndarray
    terms: TermSet

    @property
    def term_index(self) -> dict[Term, int]:
        return {t: k + 1 for k, t in enumerate(self.terms)}

    @property
    def width(self) -> int:
        return self.z.shape[1]


def term_columns(x: np.ndarray, terms: Sequence[Term]) -> np.ndarray:
    """Columns of ``x`` and products of pairs of columns, one per term."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    out = np.empty((x.shape[0], len(terms)))
    for k, t in enumerate(terms):
        if t.j >= x.shape[1]:
            raise IndexOutOfRange(f"{t!r} references column {t.j}, but p={x.shape[1]}")
        if t.is_main:
            out[:, k] = x[:, t.j]
        else:
            np.multiply(x[:, t.i], x[:, t.j], out=out[:, k])
    return out


def augment(data, s: TermSet) -> AugmentedDesign:
    """Intercept column followed by one column per term of ``s``.

    ``data`` may be a :class:`Dataset` or a bare predictor matrix.
    """
    x = data.x if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    s = s if isinstance(s, TermSet) else TermSet(s)
    z = np.empty((x.shape[0], 1 + len(s)))
    z[:, 0] = 1.0
    z[:, 1:] = term_columns(x, s.terms)
    return AugmentedDesign(z, s)


# ---------------------------------------------------------------------------
# likelihood and derivatives
# ---------------------------------------------------------------------------

def _as_theta(theta, d: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.size % d:
        raise DimensionMismatch(f"theta of size {theta.size} does not fit design width {d}")
    return theta.reshape(-1, d)


def _onehot(labels: np.ndarray, m: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() > m):
        raise DimensionMismatch(f"labels must lie in 0..{m}")
    y = np.zeros((labels.shape[0], m))
    rows = np.flatnonzero(labels < m)
    y[rows, labels[rows]] = 1.0
    return y


def _probabilities(z: np.ndarray, theta: np.ndarray):
    """Return (eta, log-normaliser, non-baseline class probabilities)."""
    eta = z @ theta.T
    if eta.shape[1] == 1:
        e = eta[:, 0]
        lse = np.logaddexp(0.0, e)
        prob = np.exp(e - lse)[:, None]
        return eta, lse, prob
    top = np.maximum(eta.max(axis=1), 0.0)
    shifted = np.exp(eta - top[:, None])
    lse = top + np.log(np.exp(-top) + shifted.sum(axis=1))
    prob = np.exp(eta - lse[:, None])
    return eta, lse, prob


def _loglik(z, y1h, theta) -> float:
    eta, lse, _ = _probabilities(z, theta)
    return float(np.sum(y1h * eta) - np.sum(lse))


def _derivatives(z, y1h, theta):
    eta, lse, prob = _probabilities(z, theta)
    ll = float(np.sum(y1h * eta) - np.sum(lse))
    m, d = theta.shape
    grad = ((y1h - prob).T @ z).ravel()
    if m == 1:
        w = prob[:, 0] * (1.0 - prob[:, 0])
        hess = -(z.T @ (z * w[:, None]))
        return ll, grad, hess
    zp = (prob[:, :, None] * z[:, None, :]).reshape(z.shape[0], m * d)
    hess = zp.T @ zp
    diag = zp.T @ z
    for k in range(m):
        blk = slice(k * d, (k + 1) * d)
        hess[blk, blk] -= diag[blk]
    return ll, grad, hess


def log_likelihood(theta, design: AugmentedDesign, labels) -> float:
    """Multinomial log-likelihood with the baseline discriminant fixed at 0."""
    z = design.z if isinstance(design, AugmentedDesign) else np.asarray(design, float)
    theta = _as_theta(theta, z.shape[1])
    labels = np.asarray(labels)
    if labels.shape[0] != z.shape[0]:
        raise DimensionMismatch("labels and design have different lengths")
    return _loglik(z, _onehot(labels, theta.shape[0]), theta)


def score_and_hessian(theta, design: AugmentedDesign, labels):
    """Gradient and Hessian of :func:`log_likelihood` in ``theta``.

    Both are laid out class-major: entry ``k * d + c`` is coefficient ``c``
    of class ``k``.
    """
    z = design.z if isinstance(design, AugmentedDesign) else np.asarray(design, float)
    theta = _as_theta(theta, z.shape[1])
    labels = np.asarray(labels)
    if labels.shape[0] != z.shape[0]:
        raise DimensionMismatch("labels and design have different lengths")
    _, grad, hess = _derivatives(z, _onehot(labels, theta.shape[0]), theta)
    return grad, hess


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def ebic(loglik: float, s_size: int, n: int, p: int, gamma: float) -> float:
    """Extended BIC: ``-2 loglik + |S| log n + 2 gamma |S| log p``."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    return -2.0 * loglik + s_size * np.log(n) + 2.0 * gamma * s_size * np.log(p)


@dataclass(frozen=True, eq=False)
class ModelFit:
    """Maximum-likelihood fit of the logistic model on a term set.

    ``theta`` is on the original predictor scale.  ``center`` and ``scale``
    are the standardisation constants used while solving.
    """

    terms: TermSet
    theta: np.ndarray
    loglik: float
    ebic: float
    n: int
    p: int
    gamma: float
    converged: bool
    iterations: int
    center: np.ndarray = field(repr=False, default=None)
    scale: np.ndarray = field(repr=False, default=None)
    class_labels: tuple = ()

    @property
    def n_classes(self) -> int:
        return self.theta.shape[0] + 1

    penalty_size: int = 0
    separated: bool = False

    def recomputed_ebic(self) -> float:
        return ebic(self.loglik, self.penalty_size, self.n, self.p, self.gamma)

    def decision_function(self, x) -> np.ndarray:
        """Discriminants of the non-baseline classes, shape ``(n, K-1)``."""
        return augment(x, self.terms).z @ self.theta.T

    def predict_proba(self, x) -> np.ndarray:
        _, _, prob = _probabilities(augment(x, self.terms).z, self.theta)
        return np.column_stack([prob, np.clip(1.0 - prob.sum(axis=1), 0.0, 1.0)])

    def predict(self, x) -> np.ndarray:
        """Most probable class code for each row."""
        eta = self.decision_function(x)
        full = np.column_stack([eta, np.zeros(eta.shape[0])])
        return np.argmax(full, axis=1)

    def coefficients(self, names: Optional[Sequence[str]] = None) -> dict[str, list[float]]:
        labels = ["(intercept)"] + self.terms.labels(names)
        return {lab: self.theta[:, c].tolist() for c, lab in enumerate(labels)}


def _standardize(cols: np.ndarray):
    center = cols.mean(axis=0)
    scale = cols.std(axis=0)
    if np.any(scale < 1e-12):
        bad = int(np.argmax(scale < 1e-12))
        raise RankDeficientError(f"augmented column {bad} is constant")
    return center, scale


def _newton(z: np.ndarray, y1h: np.ndarray, opts: NewtonOptions, boundary: bool = False):
    m, d = y1h.shape[1], z.shape[1]
    theta = np.zeros((m, d))
    ll = _loglik(z, y1h, theta)
    converged = False
    separated = False
    it = 0
    eye = np.eye(m * d)
    for it in range(1, opts.max_iter + 1):
        _, grad, hess = _derivatives(z, y1h, theta)
        info = -hess
        info += eye * (opts.ridge * (1.0 + np.max(np.abs(np.diag(info)))))
        try:
            step = linalg.cho_solve(linalg.cho_factor(info, check_finite=False), grad,
                                    check_finite=False)
        except linalg.LinAlgError:
            step = linalg.lstsq(info, grad, check_finite=False)[0]
        step = step.reshape(m, d)
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            cand = theta + t * step
            ll_cand = _loglik(z, y1h, cand)
            if ll_cand >= ll:
                break
            t *= 0.5
        else:
            # no ascent direction left at working precision
            converged = True
            break
        if np.max(np.abs(cand)) > opts.coef_cap:
            if not boundary:
                raise SeparationError(
                    f"coefficient magnitude {np.max(np.abs(cand)):.3g} exceeds {opts.coef_cap}")
            # stop on the cap box; concavity keeps this point an ascent
            # over theta since it lies on the segment to an ascent point
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if np.max(np.abs(theta + mid * (cand - theta))) <= opts.coef_cap:
                    lo = mid
                else:
                    hi = mid
            cand = theta + lo * (cand - theta)
            ll_cand = _loglik(z, y1h, cand)
            if ll_cand > ll:
                theta, ll = cand, ll_cand
            separated = True
            break
        gain = ll_cand - ll
        theta, ll = cand, ll_cand
        if gain < opts.tol:
            converged = True
            break
    return theta, ll, converged, it, separated


def _penalty_size(s_size: int, m: int, cfg: SelectionConfig) -> int:
    return s_size * m if cfg.per_class_penalty else s_size


def fit_mle(data: Dataset, s: TermSet, cfg: Optional[SelectionConfig] = None) -> ModelFit:
    """Fit the logistic model restricted to ``s`` by damped Newton-Raphson.

    Raises
    ------
    RankDeficientError
        If ``1 + |S| >= n`` or the augmented columns are (nearly) collinear.
    SeparationError
        If a standardised coefficient exceeds ``cfg.newton.coef_cap`` and
        ``cfg.separation`` is ``"raise"``.  With ``"boundary"`` the solver
        instead stops where the iterate meets the cap and the fit is
        returned with ``separated=True``.

    Non-convergence within ``max_iter`` is reported through
    ``ModelFit.converged`` rather than raised.
    """
    if not data.categorical:
        raise DataError("fit_mle needs a categorical response")
    cfg = cfg or SelectionConfig()
    s = s if isinstance(s, TermSet) else TermSet(s)
    n, p = data.n, data.p
    d = 1 + len(s)
    if d >= n:
        raise RankDeficientError(f"{d} columns for {n} observations")
    cols = term_columns(data.x, s.terms)
    center, scale = _standardize(cols)
    zs = np.empty((n, d))
    zs[:, 0] = 1.0
    zs[:, 1:] = (cols - center) / scale
    if d > 2:
        gram = zs[:, 1:].T @ zs[:, 1:] / n
        if np.linalg.eigvalsh(gram)[0] < 1e-9:
            raise RankDeficientError("augmented columns are collinear")
    m = data.n_classes - 1
    theta_s, ll, converged, iters, separated = _newton(
        zs, _onehot(data.y, m), cfg.newton, boundary=cfg.separation == "boundary")

    theta = np.empty_like(theta_s)
    theta[:, 1:] = theta_s[:, 1:] / scale
    theta[:, 0] = theta_s[:, 0] - theta_s[:, 1:] @ (center / scale)
    return ModelFit(
        terms=s,
        theta=theta,
        loglik=ll,
        ebic=ebic(ll, _penalty_size(len(s), m, cfg), n, p, cfg.gamma),
        n=n,
        p=p,
        gamma=cfg.gamma,
        converged=converged,
        iterations=iters,
        center=center,
        scale=scale,
        class_labels=data.class_labels,
        penalty_size=_penalty_size(len(s), m, cfg),
        separated=separated,
    )


# ---------------------------------------------------------------------------
# Gaussian class-conditional models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticDiscriminant:
    """Log-odds ``alpha_k + beta_k' x + x' A_k x`` against the last class."""

    alpha: np.ndarray
    beta: np.ndarray
    A: np.ndarray

    def delta(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        quad = np.einsum("ni,kij,nj->nk", x, self.A, x)
        return self.alpha[None, :] + x @ self.beta.T + quad

    def term_coefficients(self, k: int = 0, tol: float = 0.0) -> dict[Term, float]:
        """Coefficient of every main and second-order term for class ``k``.

        Off-diagonal entries of the symmetric ``A_k`` appear twice in
        ``x' A_k x``, so the cross-product coefficient is ``2 * A_k[i, j]``.
        """
        p = self.beta.shape[1]
        out = {}
        for j in range(p):
            if abs(self.beta[k, j]) > tol:
                out[Term.main(j)] = float(self.beta[k, j])
        for i in range(p):
            for j in range(i, p):
                c = self.A[k, i, j] * (1.0 if i == j else 2.0)
                if abs(c) > tol:
                    out[Term.pair(i, j)] = float(c)
        return out

    def theta(self, terms: TermSet) -> np.ndarray:
        """Coefficient blocks for ``terms`` (terms outside the model get 0)."""
        m = self.alpha.shape[0]
        out = np.zeros((m, 1 + len(terms)))
        out[:, 0] = self.alpha
        for k in range(m):
            coef = self.term_coefficients(k)
            for c, t in enumerate(terms, start=1):
                out[k, c] = coef.get(t, 0.0)
        return out


def _chol(cov: np.ndarray, k: int):
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise NotPositiveDefinite(f"covariance {k} is not symmetric")
    try:
        return linalg.cho_factor(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance {k} is not positive definite") from exc


def qda_to_logistic(priors, means, covariances) -> QuadraticDiscriminant:
    """Map Gaussian class models ``N(mu_k, Sigma_k)`` with priors ``pi_k`` to
    the coefficients of the quadratic logistic model (baseline = last class)."""
    priors = np.asarray(priors, dtype=float)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covs = np.asarray(covariances, dtype=float)
    kk, p = means.shape
    if priors.shape != (kk,) or covs.shape != (kk, p, p):
        raise DimensionMismatch("priors, means and covariances disagree on K or p")
    if np.any(priors <= 0) or not np.isclose(priors.sum(), 1.0):
        raise ValueError("priors must be positive and sum to one")

    prec = np.empty_like(covs)
    logdet = np.empty(kk)
    lin = np.empty((kk, p))
    eye = np.eye(p)
    for k in range(kk):
        c = _chol(covs[k], k)
        prec[k] = linalg.cho_solve(c, eye)
        prec[k] = 0.5 * (prec[k] + prec[k].T)
        logdet[k] = 2.0 * np.sum(np.log(np.diag(c[0])))
        lin[k] = prec[k] @ means[k]
    quad = np.einsum("ki,ki->k", means, lin)

    base = kk - 1
    alpha = (np.log(priors[:base] / priors[base])
             - 0.5 * (logdet[:base] - logdet[base] + quad[:base] - quad[base]))
    beta = lin[:base] - lin[base]
    A = -0.5 * (prec[:base] - prec[base])
    return QuadraticDiscriminant(alpha, beta, A)
