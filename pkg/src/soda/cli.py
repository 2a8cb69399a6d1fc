"""Command-line entry point: ``soda {select,ssoda,predict,simulate,benchmark}``.

Exit status is 0 on success, 2 for usage and I/O problems, 3 for data
or model problems.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import persist
from .bench import BenchmarkSpec, run_benchmark, summarize
from .core import SelectionConfig, SodaError
from .selector import SelectionResult, cv_gamma_errors, soda_select
from .simgen import (
    CLASSIFICATION_EXAMPLES,
    TEST,
    TRAIN,
    BadExampleId,
    BadScenario,
    gen_classification,
    gen_regression,
)
from .ssoda import fit_sliced_gaussian, s_soda_select

log = logging.getLogger("soda")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


class UsageError(Exception):
    pass


def _gamma_arg(text: str):
    if text == "cv":
        return text
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gamma must be a number or 'cv', got {text!r}")
    if not np.isfinite(g) or g < 0:
        raise argparse.ArgumentTypeError(f"gamma must be >= 0, got {text!r}")
    return g


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _slices(text: str) -> int:
    v = _positive(text)
    if v < 2:
        raise argparse.ArgumentTypeError("--slices needs at least 2 slices")
    return v


def _add_selection_flags(sp):
    sp.add_argument("--input", required=True, help="CSV file with a header row")
    sp.add_argument("--response", required=True, help="name of the response column")
    sp.add_argument("--gamma", type=_gamma_arg, default=0.5,
                    help="EBIC gamma, or 'cv' to pick from 0, 0.5, 1 by cross-validation")
    sp.add_argument("--pf", type=int, default=3, help="forced forward steps after EBIC stalls")
    sp.add_argument("--max-forward", type=_positive, default=None,
                    help="cap on predictors added in the second stage")
    sp.add_argument("--seed", type=int, default=0, help="seed for the CV fold split")
    sp.add_argument("--folds", type=int, default=10, help="CV folds for --gamma cv")
    sp.add_argument("--threads", type=_positive, default=1, help="concurrent candidate fits")
    sp.add_argument("--report", help="write the report here instead of stdout")
    sp.add_argument("--model", help="write the fitted model document here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soda",
        description="Stepwise selection of main and quadratic interaction terms.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("select", help="term selection for a categorical response")
    _add_selection_flags(sp)

    sp = sub.add_parser("ssoda", help="sliced selection and prediction model for a numeric response")
    _add_selection_flags(sp)
    sp.add_argument("--slices", type=_slices, default=5, help="slices used for selection")
    sp.add_argument("--fit-slices", type=_slices, default=None,
                    help="slices of the prediction model (default: --slices)")
    sp.add_argument("--separation", choices=("raise", "boundary"), default="boundary",
                    help="treatment of candidates whose coefficients hit the cap")

    sp = sub.add_parser("predict", help="apply a saved model to new rows")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", help="output CSV (default: stdout)")

    sp = sub.add_parser("simulate", help="write a simulated dataset")
    sp.add_argument("--example", required=True)
    sp.add_argument("--scenario", default="a")
    sp.add_argument("--n", type=_positive, default=None,
                    help="samples (per class for classification examples)")
    sp.add_argument("--p", type=_positive, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicate", type=int, default=0)
    sp.add_argument("--test", action="store_true", help="draw from the test substream")
    sp.add_argument("--noise", choices=("variance", "sd"), default="variance",
                    help="reading of the noise scale in classification examples")
    sp.add_argument("--output", required=True)

    sp = sub.add_parser("benchmark", help="Monte Carlo replicates with selection metrics")
    sp.add_argument("--example", required=True)
    sp.add_argument("--scenario", default="a")
    sp.add_argument("--n", type=_positive, nargs="+", required=True,
                    help="one or more sample sizes (per class for classification)")
    sp.add_argument("--p", type=_positive, default=None)
    sp.add_argument("--reps", type=_positive, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--gamma", type=_gamma_arg, default=0.5)
    sp.add_argument("--slices", type=_slices, default=5)
    sp.add_argument("--fit-slices", type=_slices, default=25)
    sp.add_argument("--grid", type=_positive, default=20, help="surface grid points per axis")
    sp.add_argument("--test-size", type=_positive, default=10_000)
    sp.add_argument("--threads", type=_positive, default=1, help="replicates run in parallel")
    sp.add_argument("--out-dir", default="benchmark_out")
    return parser


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _trace_lines(res: SelectionResult, names) -> list:
    out = ["stage  action  candidate  ebic_before  ebic_after  status"]
    for st in res.trace:
        cand = names[st.candidate] if isinstance(st.candidate, (int, np.integer)) else st.candidate.label(names)
        out.append(f"{st.stage}  {st.action}  {cand}  {st.ebic_before:.4f}  {st.ebic_after:.4f}  {st.status}")
    return out


def selection_report(res: SelectionResult, names, cv_errors: Optional[dict] = None,
                     title: str = "SODA selection") -> str:
    lines = [title, f"gamma: {res.gamma_used:g}"]
    if cv_errors:
        lines.append("cv error by gamma: " + ", ".join(f"{g:g}={e:.4f}" for g, e in cv_errors.items()))
    lines.append(f"selected terms ({len(res.selected)}): " + ", ".join(res.selected.labels(names)))
    lines.append("selected predictors: " + ", ".join(names[j] for j in sorted(res.predictors)))
    if res.fit is not None:
        lines.append(f"loglik: {res.fit.loglik:.6f}  ebic: {res.fit.ebic:.6f}  "
                     f"converged: {res.fit.converged}")
        lines.append("")
        lines.append("coefficients (rows: class vs baseline " + str(res.fit.class_labels[-1]) + ")")
        header = ["term"] + [str(c) for c in res.fit.class_labels[:-1]]
        lines.append("  ".join(header))
        labels = ["(intercept)"] + res.fit.terms.labels(names)
        for k, lab in enumerate(labels):
            lines.append("  ".join([lab] + [f"{v:.6g}" for v in res.fit.theta[:, k]]))
    lines.append("")
    lines.append(f"fits evaluated: {res.fits_evaluated} (per stage {res.stage_fits})")
    lines.extend(_trace_lines(res, names))
    return "\n".join(lines) + "\n"


def _emit(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _selection_config(args, separation: str = "raise") -> SelectionConfig:
    try:
        return SelectionConfig(gamma=0.5 if args.gamma == "cv" else args.gamma, p_f=args.pf,
                               max_forward=args.max_forward, n_jobs=args.threads,
                               separation=separation)
    except ValueError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_select(args) -> int:
    cfg = _selection_config(args)
    data = persist.read_dataset(args.input, args.response, categorical=True)
    cv_errors = None
    if args.gamma == "cv":
        grid = (0.0, 0.5, 1.0)
        cv_errors = cv_gamma_errors(data, grid, args.folds, cfg, args.seed)
        best = min(sorted(cv_errors, reverse=True), key=lambda g: cv_errors[g])
        cfg = dataclasses.replace(cfg, gamma=best)
    log.info("selecting on n=%d, p=%d, K=%d", data.n, data.p, data.n_classes)
    res = soda_select(data, cfg)
    _emit(selection_report(res, data.column_names, cv_errors), args.report)
    if args.model:
        persist.save_model(args.model, res.fit, data.column_names, res.gamma_used)
    return EXIT_OK


def cmd_ssoda(args) -> int:
    if args.gamma == "cv":
        raise UsageError("--gamma cv needs class labels; give a number for ssoda")
    cfg = _selection_config(args, args.separation)
    data = persist.read_dataset(args.input, args.response, categorical=False)
    res = s_soda_select(data, args.slices, cfg)
    fit_h = args.fit_slices or args.slices
    model = fit_sliced_gaussian(data, res.predictors, fit_h)
    text = selection_report(res, data.column_names, title="S-SODA selection")
    text += f"\nprediction model: {model.H} slices over {len(model.predictors)} predictors\n"
    text += "".join(f"note: {w}\n" for w in model.warnings)
    _emit(text, args.report)
    if args.model:
        persist.save_model(args.model, model, data.column_names, res.gamma_used, res.selected)
    return EXIT_OK


def cmd_predict(args) -> int:
    model, doc = persist.load_model(args.model)
    frame = persist.read_frame(args.input)
    out = persist.predict_frame(doc, model, frame)
    text = out.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    _emit(text, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    stream = TEST if args.test else TRAIN
    if args.example in CLASSIFICATION_EXAMPLES:
        data, _, _ = gen_classification(args.example, args.n or 500, args.p, args.seed,
                                        args.replicate, stream, noise=args.noise)
    else:
        data, _, _ = gen_regression(args.example, args.scenario, args.n or 200, args.p,
                                    args.seed, args.replicate, stream)
    persist.write_dataset(args.output, data)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    specs = [BenchmarkSpec(args.example, n, args.p, args.scenario, args.seed, args.gamma,
                           args.slices, args.fit_slices, args.grid, args.test_size)
             for n in args.n]
    if not specs[0].classification:
        gen_regression(args.example, args.scenario, 10, args.p or 8)  # validate early
    results, grids = run_benchmark(specs, args.reps, args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results.to_csv(out / "results.csv", index=False, float_format="%.10g", lineterminator="\n")
    summary = summarize(results)
    summary.to_csv(out / "summary.csv", index=False, float_format="%.6g", lineterminator="\n")
    for (n, rep), grid in sorted(grids.items()):
        grid.to_csv(out / f"grid_n{n}_rep{rep}.csv", index=False, float_format="%.10g",
                    lineterminator="\n")
    sys.stdout.write(summary.to_string(index=False) + "\n")
    return EXIT_OK


COMMANDS = {
    "select": cmd_select,
    "ssoda": cmd_ssoda,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, persist.ParseError, BadExampleId, BadScenario, OSError) as exc:
        print(f"soda {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SodaError, ValueError) as exc:
        # HTooLarge, DataError, SchemaMismatch, fitting failures
        print(f"soda {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
