"""Seeded simulation designs, oracle rules and selection metrics.

Every draw comes from a Philox substream keyed by ``(seed, replicate,
stream)``.  Per-dataset design constants (mixing coefficients, anchor
predictors, the 60/40 split of the high-dimensional example) always use
stream 0, so a training set (``stream=1``) and an independent test set
(``stream=2``) generated with the same ``(seed, replicate)`` share the
same underlying model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import signal

from .core import Dataset, DimensionMismatch, SodaError, Term, TermSet, predictors_of


class BadExampleId(SodaError, ValueError):
    pass


class BadScenario(SodaError, ValueError):
    pass


class KindMismatch(SodaError, TypeError):
    pass


CLASSIFICATION_EXAMPLES = ("1.1", "1.2", "1.3", "1.4", "1.5", "1.6")
REGRESSION_EXAMPLES = ("2.1", "2.2", "2.3", "2.4", "2.5", "3.1", "3.2", "3.3")
SCENARIOS = ("a", "b", "c")

TRAIN, TEST = 1, 2
SIGMA = 0.2


def substream(seed: int, replicate: int = 0, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def figure1_parameters():
    """Means and precision matrices of the three-predictor two-class model.

    ``Omega`` has -0.6 in positions (1,1) and (3,3) and -0.35 on the
    (1,2) and (2,3) off-diagonals; both class precisions keep a unit (2,2)
    entry.  Returns ``(mu1, mu2, prec1, prec2)``.
    """
    omega = np.zeros((3, 3))
    omega[0, 0] = omega[2, 2] = -0.6
    omega[0, 1] = omega[1, 0] = omega[1, 2] = omega[2, 1] = -0.35
    mu = np.array([0.5, 0.0, 0.0])
    return mu, -mu, np.eye(3) - omega, np.eye(3) + omega


_SHARED_TERMS = {
    Term.pair(0, 0): -0.6,
    Term.pair(2, 2): -0.6,
    Term.pair(0, 1): -0.7,
    Term.pair(1, 2): -0.7,
}


@dataclass(frozen=True, eq=False)
class OracleModel:
    """The data-generating rule of a simulation example.

    For classification, ``constant`` and ``coefficients`` define the
    discriminant ``Q(x)``; class 1 is predicted iff ``Q(x) > 0``.  For
    regression, ``link`` evaluates ``E[Y | X]``.
    """

    kind: str
    example: str
    coefficients: dict = field(default_factory=dict)
    constant: float = 0.0
    sigma: float = 0.0
    link: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def discriminant(self, x) -> np.ndarray:
        if self.kind != "classification":
            raise KindMismatch("discriminant() needs a classification oracle")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        q = np.full(x.shape[0], self.constant)
        for t, c in self.coefficients.items():
            q += c * (x[:, t.j] if t.is_main else x[:, t.i] * x[:, t.j])
        return q

    def mean(self, x) -> np.ndarray:
        if self.kind != "regression":
            raise KindMismatch("mean() needs a regression oracle")
        return self.link(np.atleast_2d(np.asarray(x, dtype=float)))


def oracle_classify(oracle: OracleModel, x) -> np.ndarray:
    """1 where ``Q(x) > 0`` (first class), else 0."""
    if oracle.kind != "classification":
        raise KindMismatch("oracle_classify needs a classification oracle")
    return (oracle.discriminant(x) > 0).astype(int)


# ---------------------------------------------------------------------------
# classification designs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Derived:
    scheme: str  # "linear", "quadratic", "hetero" or "gauss"
    k: int = 0
    l: int = 0
    b: tuple = ()
    mean: float = 0.0
    base: bool = False  # first drawn from N(mean, 1), possibly re-simulated later


def _classification_truth(example: str):
    if example in ("1.1", "1.2", "1.3", "1.4"):
        coef = {Term.main(0): 1.0, **_SHARED_TERMS}
        return coef, 1.627
    if example == "1.5":
        return dict(_SHARED_TERMS), 1.777
    coef = {Term.main(3): 1.0, Term.main(4): -1.0, **_SHARED_TERMS}
    return coef, 1.777


def _pick_pair(rng, pool):
    k, l = rng.choice(pool, size=2, replace=False)
    return int(k), int(l)


def _nonlinear(rng, scheme, pool) -> _Derived:
    k, l = _pick_pair(rng, pool)
    nb = {"linear": 3, "quadratic": 5, "hetero": 2}[scheme]
    return _Derived(scheme, k, l, tuple(rng.uniform(-1, 1, nb)))


def _classification_design(example: str, p: int, rng) -> list:
    n_rel = 5 if example == "1.6" else 3
    anchors = np.arange(3)
    design: list = [None] * p
    if example in ("1.1", "1.2", "1.3", "1.5", "1.6"):
        scheme = {"1.1": "linear", "1.3": "hetero"}.get(example, "quadratic")
        for j in range(n_rel, p):
            design[j] = _nonlinear(rng, scheme, anchors)
        return design

    # high-dimensional example: predictors 4..100 then 101..p
    head = list(range(3, min(p, 100)))
    n_nl = int(round(0.4 * len(head)))
    nonlinear = set(rng.choice(head, size=n_nl, replace=False).tolist()) if head else set()
    for j in head:
        if j in nonlinear:
            design[j] = _nonlinear(rng, rng.choice(["quadratic", "hetero"]), anchors)
        else:
            design[j] = _Derived("gauss", mean=float(rng.uniform(0, 1)), base=True)
    tail = list(range(100, p))
    means = rng.uniform(0, 1, len(tail))
    n_nl = int(round(0.4 * len(tail)))
    nonlinear = set(rng.choice(tail, size=n_nl, replace=False).tolist()) if tail else set()
    for j, m in zip(tail, means):
        if j in nonlinear:
            pool = np.array([i for i in tail if i != j])
            d = _nonlinear(rng, rng.choice(["quadratic", "hetero"]), pool)
            design[j] = _Derived(d.scheme, d.k, d.l, d.b, float(m), base=True)
        else:
            design[j] = _Derived("gauss", mean=float(m), base=True)
    return design


def _fill_irrelevant(x, design, rng, noise: str):
    n = x.shape[0]
    scale = (lambda v: np.sqrt(v)) if noise == "variance" else (lambda v: float(v))
    for j, d in enumerate(design):
        if d is not None and d.base:
            x[:, j] = d.mean + rng.standard_normal(n)
    # anchors always refer to the relevant or first-pass Gaussian values
    ref = x.copy()
    for j, d in enumerate(design):
        if d is None or d.scheme == "gauss":
            continue
        xk, xl = ref[:, d.k], ref[:, d.l]
        if d.scheme == "linear":
            b0, b1, b2 = d.b
            x[:, j] = b0 + b1 * xl + b2 * xk + scale(2.0) * rng.standard_normal(n)
        elif d.scheme == "quadratic":
            b0, b1, b2, b3, b4 = d.b
            x[:, j] = (b0 + b1 * xk + b2 * xl + b3 * xk ** 2 + b4 * xl ** 2
                       + scale(5.0) * rng.standard_normal(n))
        else:
            b1, b2 = d.b
            x[:, j] = b1 * xk + b2 * xl + np.abs(xk) * rng.standard_normal(n)


def gen_classification(example: str, n_per_class: int, p: Optional[int] = None,
                       seed: int = 0, replicate: int = 0, stream: int = TRAIN,
                       noise: str = "variance"):
    """Simulate one two-class dataset from examples 1.1 to 1.6.

    Rows ``0..n_per_class-1`` are class 1 (code 0), the rest class 2
    (code 1, the logistic baseline).  ``noise`` selects whether the
    ``N(0, 2)`` / ``N(0, 5)`` noise terms are read as variances (default)
    or as standard deviations.

    Returns
    -------
    (Dataset, TermSet, OracleModel)
        The data, the true term set and the oracle Bayes rule.
    """
    example = str(example)
    if example not in CLASSIFICATION_EXAMPLES:
        raise BadExampleId(f"unknown classification example {example!r}")
    if noise not in ("variance", "sd"):
        raise ValueError("noise must be 'variance' or 'sd'")
    if p is None:
        p = 1000 if example == "1.4" else 50
    n_rel = 5 if example == "1.6" else 3
    if p < n_rel:
        raise ValueError(f"example {example} needs p >= {n_rel}")

    design = _classification_design(example, p, substream(seed, replicate, 0))
    rng = substream(seed, replicate, stream)
    mu1, mu2, prec1, prec2 = figure1_parameters()
    if example in ("1.5", "1.6"):
        mu1 = mu2 = np.zeros(3)
    n = 2 * n_per_class
    x = np.zeros((n, p))
    x[:n_per_class, :3] = rng.multivariate_normal(mu1, np.linalg.inv(prec1), n_per_class,
                                                  method="cholesky")
    x[n_per_class:, :3] = rng.multivariate_normal(mu2, np.linalg.inv(prec2), n_per_class,
                                                  method="cholesky")
    if example == "1.6":
        x[:, 3:5] = rng.standard_normal((n, 2))
        x[:n_per_class, 3:5] += [0.5, -0.5]
        x[n_per_class:, 3:5] += [-0.5, 0.5]
    _fill_irrelevant(x, design, rng, noise)
    y = np.repeat([0, 1], n_per_class)

    coef, const = _classification_truth(example)
    oracle = OracleModel("classification", example, coef, const)
    data = Dataset(x, y, class_labels=(1, 2))
    return data, TermSet(coef), oracle


# ---------------------------------------------------------------------------
# regression designs
# ---------------------------------------------------------------------------

def _ar1(rng, n, p, rho=0.5):
    e = rng.standard_normal((n, p))
    e[:, 1:] *= np.sqrt(1.0 - rho ** 2)
    return signal.lfilter([1.0], [1.0, -rho], e, axis=1)


_TRANSFORMS = (
    np.square,
    lambda v: np.sqrt(np.abs(v)),
    np.sin,
    lambda v: np.log(np.abs(v)),
    np.exp,
    lambda v: np.exp(np.abs(v)),
)


def _regression_x(scenario, rng, n, p):
    if scenario == "a":
        return _ar1(rng, n, p)
    if scenario == "b":
        return rng.standard_normal((n, p)) ** 2
    if p % 8:
        raise BadScenario("scenario (c) needs p divisible by 8 (p = 1000 in the design)")
    block = p // 8
    x = np.empty((n, p))
    x[:, :block] = _ar1(rng, n, block)
    base = x[:, :block]
    for m, f in enumerate(_TRANSFORMS, start=1):
        x[:, m * block:(m + 1) * block] = f(base) + rng.standard_normal((n, block))
    x[:, 7 * block:] = base ** 2 * rng.standard_normal((n, block))
    return x


_LINKS = {
    "2.1": (lambda x: 3 * x[:, 0] + 1.5 * x[:, 1] + 2 * x[:, 2] + 2 * x[:, 3] + 2 * x[:, 4],
            (0, 1, 2, 3, 4)),
    "2.2": (lambda x: x[:, 0] + x[:, 0] * x[:, 1] + x[:, 0] * x[:, 2], (0, 1, 2)),
    "2.3": (lambda x: x[:, 0] ** 2 * x[:, 1] / x[:, 2] ** 2, (0, 1, 2)),
    "2.4": (lambda x: x[:, 0] / np.exp(x[:, 1] + x[:, 2]), (0, 1, 2)),
    "2.5": (lambda x: x[:, 0] + x[:, 1], (0, 1, 2)),
    "3.1": (lambda x: x[:, 0] + x[:, 1], (0, 1)),
    "3.2": (lambda x: x[:, 0] / np.exp(x[:, 1]), (0, 1)),
    "3.3": (lambda x: 1.0 / (1.0 + x[:, 0] ** 2 + x[:, 1] ** 2), (0, 1)),
}


def gen_regression(example: str, scenario: str = "a", n: int = 200,
                   p: Optional[int] = None, seed: int = 0, replicate: int = 0,
                   stream: int = TRAIN):
    """Simulate a continuous-response dataset from examples 2.1-2.5 / 3.1-3.3.

    Returns ``(Dataset, truth predictor set, OracleModel)``; the oracle's
    ``mean`` is the noiseless regression function.
    """
    example, scenario = str(example), str(scenario)
    if example not in REGRESSION_EXAMPLES:
        raise BadExampleId(f"unknown regression example {example!r}")
    if scenario not in SCENARIOS:
        raise BadScenario(f"unknown scenario {scenario!r}")
    if example.startswith("3") and scenario != "a":
        raise BadScenario("examples 3.x use scenario (a)")
    p = 1000 if p is None else int(p)
    link, truth = _LINKS[example]
    if p < len(truth):
        raise ValueError(f"example {example} needs p >= {len(truth)}")

    rng = substream(seed, replicate, stream)
    x = _regression_x(scenario, rng, n, p)
    eps = rng.standard_normal(n)
    if example == "2.5":
        y = link(x) + (1.0 + x[:, 2]) ** 2 * eps
    else:
        y = link(x) + SIGMA * eps
    sigma = 1.0 if example == "2.5" else SIGMA
    oracle = OracleModel("regression", example, sigma=sigma, link=link)
    return Dataset(x, y, categorical=False), frozenset(truth), oracle


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionMetrics:
    vfp: int
    vfn: int
    mfp: Optional[int] = None
    mfn: Optional[int] = None
    ifp: Optional[int] = None
    ifn: Optional[int] = None
    te: Optional[float] = None


def selection_metrics(selected: Iterable[Term], truth: Iterable[Term],
                      te: Optional[float] = None) -> SelectionMetrics:
    """False positive / negative counts at predictor, main-term and
    interaction-term level."""
    sel, tru = TermSet(selected), TermSet(truth)
    sm, tm = set(sel.mains), set(tru.mains)
    si, ti = set(sel.interactions), set(tru.interactions)
    sp, tp = predictors_of(sel), predictors_of(tru)
    return SelectionMetrics(
        vfp=len(sp - tp), vfn=len(tp - sp),
        mfp=len(sm - tm), mfn=len(tm - sm),
        ifp=len(si - ti), ifn=len(ti - si),
        te=te,
    )


def predictor_metrics(selected: Iterable[int], truth: Iterable[int]) -> SelectionMetrics:
    sp, tp = set(selected), set(truth)
    return SelectionMetrics(vfp=len(sp - tp), vfn=len(tp - sp))


def test_error(model, test: Dataset) -> float:
    """Misclassification rate of a fitted model or an oracle on ``test``."""
    if not test.categorical:
        raise ValueError("test_error needs categorical test labels")
    if isinstance(model, OracleModel):
        pred = 1 - oracle_classify(model, test.x)
    else:
        if model.p != test.p:
            raise DimensionMismatch(f"model has p={model.p}, test data p={test.p}")
        pred = model.predict(test.x)
    return float(np.mean(pred != test.y))


test_error.__test__ = False
