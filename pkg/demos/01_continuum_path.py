# # Walking along the continuum
#
# One dataset, many values of the continuum parameter. At ``alpha = 0`` the
# first weight is the least-squares direction, at ``alpha = 1/2`` it is the
# PLS direction (the cross-covariance function), and as ``alpha -> 1`` it
# turns into the leading eigenfunction of the covariance operator.

import numpy as np

from fcr import fit, fpcr_fit, fpls_fit, init_state, kl_sample, make_response, surrogate_model
from fcr.continuum import TO_INFINITY, TO_ZERO, fit_component, weight_from_delta

gm = surrogate_model(m=120)
ds = make_response(kl_sample(gm, 60, seed=1), gm, seed=2, sigma=0.3)
q = ds.grid.weights


def cos(f, g):
    return abs(np.sum(q * f * g)) / np.sqrt(np.sum(q * f * f) * np.sum(q * g * g))


# The three reference directions, all from the first (undeflated) state.

state = init_state(ds)
ols = weight_from_delta(state, TO_INFINITY)
pls = weight_from_delta(state, TO_ZERO)
pc1 = state.eig.eigenfunctions[0]

# ## First component across alpha
#
# ``delta`` is the ridge value picked by the search; the string tags mark the
# boundary limits.

print(f"{'alpha':>6} {'delta':>14} {'|cos| OLS':>10} {'|cos| PLS':>10} {'|cos| PC1':>10}")
for alpha in (0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 0.9, 0.99, 0.999):
    comp = fit_component(state, alpha)
    delta = comp.delta if isinstance(comp.delta, str) else f"{comp.delta:.6g}"
    print(f"{alpha:6.3f} {delta:>14} {cos(comp.weight, ols):10.6f} {cos(comp.weight, pls):10.6f} {cos(comp.weight, pc1):10.6f}")

# ## Whole models
#
# With two components, ``alpha = 1/2`` reproduces NIPALS PLS and
# ``alpha = 0.999`` is close to principal component regression.


def rel(a, b):
    return np.sqrt(np.sum(q * (a - b) ** 2) / np.sum(q * b * b))


print()
print("beta rel. difference, FCR(0.5) vs FPLS :", f"{rel(fit(ds, 0.5, 2).beta_hat, fpls_fit(ds, 2).beta_hat):.2e}")
print("beta rel. difference, FCR(0.999) vs FPCR:", f"{rel(fit(ds, 0.999, 2).beta_hat, fpcr_fit(ds, 2).beta_hat):.2e}")

# At ``alpha = 0`` the first component already is the least-squares fit
# within the span of the curves, so the sequence stops there.

m0 = fit(ds, 0.0, 3)
print("alpha = 0, requested 3 components, got", m0.p, "(truncated:", m0.truncated, ")")
