"""CSV datasets and JSON model documents."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from .core import DataError, Dataset, SodaError, Term, TermSet
from .glm import ModelFit
from .ssoda import SlicedModel

FORMAT_VERSION = 1


class ParseError(SodaError):
    """Input file cannot be read as the expected CSV layout."""


class SchemaMismatch(SodaError):
    """New data lacks columns that a model needs."""


def read_frame(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _numeric_block(df: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    out = np.empty((len(df), len(columns)))
    for k, col in enumerate(columns):
        values = pd.to_numeric(df[col], errors="coerce")
        bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataError(f"column {col!r}, row {row + 1}: {df[col].iloc[row]!r} is not a finite number")
        out[:, k] = values.to_numpy(dtype=float)
    return out


def encode_labels(values) -> tuple[np.ndarray, tuple]:
    """Integer codes for a categorical column.

    Integer labels that are exactly ``1..K`` keep their order; anything
    else is coded by order of first appearance.
    """
    values = list(values)
    uniq = list(dict.fromkeys(values))
    try:
        ints = sorted(int(v) for v in uniq)
        if all(float(v) == int(v) for v in uniq) and ints == list(range(1, len(uniq) + 1)):
            return np.array([int(v) - 1 for v in values]), tuple(ints)
    except (TypeError, ValueError):
        pass
    index = {v: k for k, v in enumerate(uniq)}
    return np.array([index[v] for v in values]), tuple(str(v) for v in uniq)


def dataset_from_frame(df: pd.DataFrame, response: str, categorical: bool) -> Dataset:
    if response not in df.columns:
        raise ParseError(f"response column {response!r} not found; columns are {list(df.columns)}")
    predictors = [c for c in df.columns if c != response]
    if not predictors:
        raise ParseError("no predictor columns")
    x = _numeric_block(df, predictors)
    if categorical:
        codes, labels = encode_labels(df[response])
        return Dataset(x, codes, tuple(map(str, predictors)), True, labels)
    y = _numeric_block(df, [response])[:, 0]
    return Dataset(x, y, tuple(map(str, predictors)), False)


def read_dataset(path, response: str, categorical: bool) -> Dataset:
    return dataset_from_frame(read_frame(path), response, categorical)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset(path, data: Dataset, response: str = "y") -> None:
    """Write a header row then one comma-separated row per sample."""
    if data.categorical:
        ycol = [str(data.class_labels[c]) for c in data.y]
    else:
        ycol = [_fmt(v) for v in data.y]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(list(data.column_names) + [response]) + "\n")
        for row, yv in zip(data.x, ycol):
            fh.write(",".join(_fmt(v) for v in row) + "," + yv + "\n")


# ---------------------------------------------------------------------------
# model documents
# ---------------------------------------------------------------------------

def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_document(model: Union[ModelFit, SlicedModel], column_names: Sequence[str],
                   gamma: float, terms: Optional[TermSet] = None) -> dict:
    if isinstance(model, ModelFit):
        return {
            "format_version": FORMAT_VERSION,
            "model_kind": "logistic",
            "column_names": list(column_names),
            "terms": [t.to_list() for t in model.terms],
            "class_labels": list(model.class_labels),
            "coefficients": _floats(model.theta),
            "center": _floats(model.center),
            "scale": _floats(model.scale),
            "gamma": float(gamma),
            "loglik": float(model.loglik),
            "ebic": float(model.ebic),
            "penalty_size": int(model.penalty_size),
            "n": int(model.n),
            "converged": bool(model.converged),
            "iterations": int(model.iterations),
        }
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": "sliced",
        "column_names": list(column_names),
        "terms": [t.to_list() for t in (terms or TermSet())],
        "predictors": list(model.predictors),
        "H": int(model.H),
        "means": _floats(model.means),
        "covariances": _floats(model.covariances),
        "response_means": _floats(model.response_means),
        "counts": [int(c) for c in model.counts],
        "gamma": float(gamma),
    }


def dumps_model(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_model(path, model, column_names, gamma, terms=None) -> dict:
    doc = model_document(model, column_names, gamma, terms)
    Path(path).write_text(dumps_model(doc), encoding="utf-8")
    return doc


def load_document(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read model file {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported model format_version {version!r}")
    if doc.get("model_kind") not in ("logistic", "sliced"):
        raise ParseError(f"unknown model_kind {doc.get('model_kind')!r}")
    return doc


def model_from_document(doc: dict) -> Union[ModelFit, SlicedModel]:
    names = tuple(doc["column_names"])
    if doc["model_kind"] == "logistic":
        theta = np.asarray(doc["coefficients"], dtype=float)
        return ModelFit(
            terms=TermSet(Term.from_list(t) for t in doc["terms"]),
            theta=theta.reshape(len(doc["class_labels"]) - 1, -1),
            loglik=doc["loglik"],
            ebic=doc["ebic"],
            n=doc["n"],
            p=len(names),
            gamma=doc["gamma"],
            converged=doc["converged"],
            iterations=doc["iterations"],
            center=np.asarray(doc["center"], dtype=float),
            scale=np.asarray(doc["scale"], dtype=float),
            class_labels=tuple(doc["class_labels"]),
            penalty_size=doc["penalty_size"],
        )
    H, d = doc["H"], len(doc["predictors"])
    return SlicedModel(
        predictors=tuple(doc["predictors"]),
        means=np.asarray(doc["means"], dtype=float).reshape(H, d),
        covariances=np.asarray(doc["covariances"], dtype=float).reshape(H, d, d),
        response_means=np.asarray(doc["response_means"], dtype=float),
        counts=np.asarray(doc["counts"], dtype=int),
        column_names=tuple(names[j] for j in doc["predictors"]),
    )


def load_model(path):
    """Return ``(model, document)`` from a model file."""
    doc = load_document(path)
    return model_from_document(doc), doc


def predict_frame(doc: dict, model, df: pd.DataFrame) -> pd.DataFrame:
    """Append prediction columns for the rows of ``df``."""
    names = list(doc["column_names"])
    if doc["model_kind"] == "sliced":
        needed = [names[j] for j in doc["predictors"]]
    else:
        needed = sorted({names[j] for t in model.terms for j in t.predictors}, key=names.index)
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise SchemaMismatch(f"input lacks model columns: {', '.join(missing)}")
    block = _numeric_block(df, needed)
    out = df.copy()
    if doc["model_kind"] == "sliced":
        out["prediction"] = model.predict(block) if len(df) else []
        return out
    x = np.zeros((len(df), len(names)))
    for k, c in enumerate(needed):
        x[:, names.index(c)] = block[:, k]
    prob = model.predict_proba(x)
    labels = doc["class_labels"]
    for k, lab in enumerate(labels):
        out[f"prob_{lab}"] = prob[:, k]
    out["predicted_class"] = [labels[c] for c in model.predict(x)]
    return out
