"""
Predicting a continuous surface from sliced classes
===================================================

The response is cut into rank-based slices, the selector runs on the slice
labels, and a Gaussian per slice turns the chosen predictors back into a
prediction of E[Y | X].
"""

import numpy as np

from soda import s_soda_select
from soda.bench import surface_grid
from soda.simgen import gen_regression
from soda.ssoda import fit_sliced_gaussian

# Y = X1 + X2 + noise, with 200 correlated predictors.  Swap in "3.3" for a
# bowl-shaped surface; its symmetry makes X1 and X2 harder to find.
data, truth, oracle = gen_regression("3.1", "a", n=500, p=200, seed=7)

# five slices are enough to find the predictors
result = s_soda_select(data, H=5)
print("selected predictors:", sorted(j + 1 for j in result.predictors))
print("true predictors:    ", sorted(j + 1 for j in truth))

# finer slices give a smoother prediction
model = fit_sliced_gaussian(data, result.predictors, H=25)

pts = surface_grid(20)
full = np.zeros((len(pts), data.p))
full[:, :2] = pts
true_surface = oracle.mean(full)
predicted = model.predict(full[:, list(model.predictors)])
print("grid correlation: %.3f" % np.corrcoef(true_surface, predicted)[0, 1])

# a few points along the diagonal
for k in range(0, 400, 63):
    x1, x2 = pts[k]
    print("  x=(%+.2f, %+.2f)  true %.3f  predicted %.3f" % (x1, x2, true_surface[k], predicted[k]))
