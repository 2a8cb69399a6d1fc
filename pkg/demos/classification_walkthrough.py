"""
Selecting quadratic terms for a two-class problem
=================================================

Two Gaussian classes that differ in their means along X1 and in their
covariance among X1, X2, X3.  Every other column is noise.  The selector
should keep X1 and four second-order terms, and nothing else.
"""

import numpy as np

from soda import soda_select
from soda.glm import qda_to_logistic
from soda.simgen import TEST, figure1_parameters, gen_classification, test_error

# 1000 observations per class, 50 predictors
train, truth, oracle = gen_classification("1.1", 1000, p=50, seed=2024)
print("training data:", train.n, "rows,", train.p, "columns")

# The true log-odds follow from the two Gaussians.  Mapping them to
# logistic coefficients shows which terms a perfect selector would keep.
mu1, mu2, prec1, prec2 = figure1_parameters()
mapped = qda_to_logistic([0.5, 0.5], [mu1, mu2], [np.linalg.inv(prec1), np.linalg.inv(prec2)])
print("true intercept: %.3f" % mapped.alpha[0])
for term, value in sorted(mapped.term_coefficients(0, tol=1e-10).items()):
    print("  %-8s %+.2f" % (term.label(train.column_names), value))

# Run the three stages.  The forward stage may add spare predictors that the
# backward stage then drops.
result = soda_select(train)
print()
print(result.summary(train.column_names))
print("recovered the true terms:", result.selected == truth)

# Score the fitted model and the oracle rule on fresh data.
test, _, _ = gen_classification("1.1", 5000, p=50, seed=2024, stream=TEST)
print()
print("test error, selected model: %.4f" % test_error(result.fit, test))
print("test error, oracle rule:    %.4f" % test_error(oracle, test))
