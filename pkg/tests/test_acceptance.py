"""Acceptance benchmarks.

Each test runs the ``soda benchmark`` command (or the oracle rule) at the
stated size and checks replicate means against a fixed threshold.  The
full module takes roughly twenty-five minutes on one core.
"""

import numpy as np
import pandas as pd
import pytest

from soda.cli import main
from soda.simgen import TEST, gen_classification, test_error

_cache = {}


def benchmark(tmp_path_factory, *argv):
    """Run ``soda benchmark`` once per argument list; return (results, out_dir)."""
    argv = tuple(str(a) for a in argv)
    if argv not in _cache:
        out_dir = tmp_path_factory.mktemp("bench")
        code = main(["benchmark", *argv, "--threads", "1", "--out-dir", str(out_dir)])
        assert code == 0
        _cache[argv] = (pd.read_csv(out_dir / "results.csv"), out_dir)
    return _cache[argv]


def ex11_n1000(tmp_path_factory):
    return benchmark(tmp_path_factory, "--example", "1.1", "--n", 1000, "--p", 50, "--reps", 20)[0]


def check_means(results, limits, measured):
    means = {k: results[k].mean() for k in limits}
    measured(", ".join(f"{k.upper()}={v:.3f}" for k, v in means.items()))
    for k, limit in limits.items():
        assert means[k] <= limit, f"mean {k} = {means[k]:.3f} > {limit}"


@pytest.mark.criterion(1)
def test_term_recovery_n1000(tmp_path_factory, measured):
    results = ex11_n1000(tmp_path_factory)
    assert len(results) == 20
    check_means(results, {"mfn": 0.1, "mfp": 0.1, "ifn": 0.1, "ifp": 0.1}, measured)


@pytest.mark.criterion(2)
def test_term_recovery_n215(tmp_path_factory, measured):
    results, _ = benchmark(tmp_path_factory, "--example", "1.1", "--n", 215, "--p", 50, "--reps", 50)
    assert len(results) == 50
    check_means(results, {"mfn": 0.1, "mfp": 0.15, "ifn": 0.3, "ifp": 0.2}, measured)


@pytest.mark.criterion(3)
def test_selected_model_test_error(tmp_path_factory, measured):
    results = ex11_n1000(tmp_path_factory)
    te = results["te"].mean()
    measured(f"TE={te:.4f}")
    assert te <= 0.177


@pytest.mark.criterion(4)
def test_oracle_rule_error(measured):
    errors = []
    for rep in range(10):
        test, _, oracle = gen_classification("1.1", 5000, p=50, seed=0, replicate=rep, stream=TEST)
        assert test.n == 10_000
        errors.append(test_error(oracle, test))
    te = float(np.mean(errors))
    measured(f"oracle TE={te:.4f}")
    assert abs(te - 0.1565) <= 0.017


@pytest.mark.criterion(5)
def test_high_dimensional_example_14(tmp_path_factory, measured):
    results, _ = benchmark(tmp_path_factory, "--example", "1.4", "--n", 500, "--reps", 3)
    errors = (results["vfn"] + results["vfp"]).mean()
    measured(f"VFN+VFP={errors:.2f}, max seconds/rep={results['seconds'].max():.0f}")
    assert (results["seconds"] <= 15 * 60).all()
    assert errors <= 1


@pytest.mark.criterion(6)
@pytest.mark.parametrize("scenario, fn_limit, fp_limit", [("a", 0.5, 1.5), ("b", 0.5, 1.5), ("c", 1.0, None)])
def test_ssoda_example_21(tmp_path_factory, measured, scenario, fn_limit, fp_limit):
    results, _ = benchmark(tmp_path_factory, "--example", "2.1", "--scenario", scenario, "--n", 200,
                           "--p", 1000, "--slices", 5, "--reps", 10)
    fn, fp = results["vfn"].mean(), results["vfp"].mean()
    measured(f"({scenario}) FN={fn:.2f} FP={fp:.2f}")
    assert fn <= fn_limit
    if fp_limit is not None:
        assert fp <= fp_limit


@pytest.mark.criterion(7)
@pytest.mark.parametrize("example, limit", [("3.1", 0.97), ("3.2", 0.90), ("3.3", 0.90)])
def test_surface_recovery(tmp_path_factory, measured, example, limit):
    results, out_dir = benchmark(tmp_path_factory, "--example", example, "--n", 500, "--p", 1000,
                                 "--fit-slices", 25, "--grid", 20, "--reps", 5)
    grid = pd.read_csv(out_dir / "grid_n500_rep0.csv")
    assert len(grid) == 400
    corr = results["corr"].mean()
    measured(f"{example} corr={corr:.3f}")
    assert corr >= limit
