"""Scikit-learn style estimators wrapping the solvers.

Both estimators follow the fit/transform contract: fit consumes a source
sample X and a target sample Y (possibly of different dimension), transform
maps new source points into the target space. Hyperparameters are plain
constructor arguments, so get_params/set_params and clone work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import discrete, solver
from .seeding import derive_seed
from .validation import as_matrix, as_points


class NeuralGWTransport(BaseEstimator, TransformerMixin):
    """Adversarially trained transport map for the inner-product GW problem.

    fit resamples the two point clouds as i.i.d. batches and runs the
    alternating optimization; transform applies the learned network, so
    out-of-sample points map without refitting.
    """

    def __init__(self, outer_iters=2000, k_P=1, k_f=1, k_T=10, batch_size=256,
                 lr_P=1e-3, lr_f=1e-4, lr_T=1e-4, hidden_width=None,
                 hidden_layers=2, p_init="identity", seed=0):
        self.outer_iters = outer_iters
        self.k_P = k_P
        self.k_f = k_f
        self.k_T = k_T
        self.batch_size = batch_size
        self.lr_P = lr_P
        self.lr_f = lr_f
        self.lr_T = lr_T
        self.hidden_width = hidden_width
        self.hidden_layers = hidden_layers
        self.p_init = p_init
        self.seed = seed

    def _config(self) -> solver.TrainConfig:
        return solver.TrainConfig(
            outer_iters=self.outer_iters, k_P=self.k_P, k_f=self.k_f,
            k_T=self.k_T, batch_size=self.batch_size, lr_P=self.lr_P,
            lr_f=self.lr_f, lr_T=self.lr_T, hidden_width=self.hidden_width,
            hidden_layers=self.hidden_layers, p_init=self.p_init,
            seed=self.seed,
        ).validate()

    def fit(self, X, Y):
        cfg = self._config()
        X = as_matrix(X, name="X")
        Y = as_matrix(Y, name="Y")
        mu = solver.ArraySampler(X, seed=derive_seed(cfg.seed, "mu"))
        nu = solver.ArraySampler(Y, seed=derive_seed(cfg.seed, "nu"))
        result = solver.train(cfg, mu, nu)
        self.result_ = result
        self.transport_net_ = result.transport_net
        self.potential_net_ = result.potential_net
        self.cost_matrix_ = result.cost_matrix
        self.history_ = result.history
        self.source_dim_ = X.shape[1]
        self.target_dim_ = Y.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "transport_net_"):
            raise NotFittedError("NeuralGWTransport is not fitted yet")
        X = as_points(X, dim=self.source_dim_, name="X")
        return solver.transport(self.transport_net_, X)

    def potential(self, Y) -> np.ndarray:
        """Learned dual potential evaluated at target-space points."""
        if not hasattr(self, "potential_net_"):
            raise NotFittedError("NeuralGWTransport is not fitted yet")
        Y = as_points(Y, dim=self.target_dim_, name="Y")
        return self.potential_net_.predict(Y).reshape(-1)


class DiscreteGWBaseline(BaseEstimator, TransformerMixin):
    """Discrete GW plan plus a plan-fitted affine map for out-of-sample points.

    fit solves the discrete problem on the given clouds with uniform weights
    and fits the plan-weighted linear regression; transform applies the
    affine map.
    """

    def __init__(self, max_iter=200, tol=1e-10, inner="auto", ridge=1e-8):
        self.max_iter = max_iter
        self.tol = tol
        self.inner = inner
        self.ridge = ridge

    def fit(self, X, Y):
        X = as_matrix(X, name="X")
        Y = as_matrix(Y, name="Y")
        profile = discrete.CostProfile.inner_product(X, Y)
        a = np.full(X.shape[0], 1.0 / X.shape[0])
        b = np.full(Y.shape[0], 1.0 / Y.shape[0])
        cfg = discrete.GWSolveConfig(max_iter=self.max_iter, tol=self.tol,
                                     inner=self.inner)
        plan = discrete.gw_discrete(profile, a, b, cfg)
        A, offset = discrete.barycentric_lr(plan, X, Y, ridge=self.ridge)
        self.plan_ = plan
        self.gw_cost_ = discrete.gw_cost(plan, profile)
        self.coef_ = A
        self.intercept_ = offset
        self.source_dim_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("DiscreteGWBaseline is not fitted yet")
        X = as_points(X, dim=self.source_dim_, name="X")
        return X @ self.coef_.T + self.intercept_
