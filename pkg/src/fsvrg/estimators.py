"""Sklearn-style estimators wrapping the stochastic solvers.

These give the solvers a fit/predict surface with get_params/set_params so
they compose with pipelines and model selection. Rows are scaled to unit
Euclidean norm by default, matching the solvers' step-size defaults, which
are expressed in units of the smoothness constant of unit-norm data.

The linear model has no intercept; append a constant column if one is
needed.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin

from .datasets import Dataset, normalize_rows
from .errors import ParameterError
from .objectives import make_objective
from .solvers import SolverConfig, run
from .validation import check_binary_labels, check_feature_matrix, check_target


class _SolverEstimator(BaseEstimator):
    def __init__(self, loss="logistic", lam1=1e-4, lam2=0.0, algorithm="fsvrg",
                 step_size=None, m1=None, growth=None, epochs=10, batch_size=1,
                 theta=None, seed=0, normalize=True):
        self.loss = loss
        self.lam1 = lam1
        self.lam2 = lam2
        self.algorithm = algorithm
        self.step_size = step_size
        self.m1 = m1
        self.growth = growth
        self.epochs = epochs
        self.batch_size = batch_size
        self.theta = theta
        self.seed = seed
        self.normalize = normalize

    def _solver_config(self):
        return SolverConfig(
            algorithm=self.algorithm,
            step_size=self.step_size,
            m1=self.m1,
            growth=self.growth,
            epochs=self.epochs,
            batch_size=self.batch_size,
            theta=self.theta,
            seed=self.seed,
        )

    def _fit_weights(self, X, y):
        dataset = Dataset.from_arrays(X, y)
        if self.normalize:
            dataset = normalize_rows(dataset)
        objective = make_objective(dataset, self.loss, self.lam1, self.lam2)
        result = run(objective, self._solver_config())
        self.coef_ = result.x
        self.n_features_in_ = X.shape[1]
        self.objective_ = objective
        self.trace_ = list(result.trace)
        self.effective_passes_ = result.effective_passes
        return self

    def _decision(self, X):
        if not hasattr(self, "coef_"):
            raise ParameterError("estimator is not fitted yet; call fit first")
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        if self.normalize:
            norms = np.linalg.norm(X, axis=1)
            norms[norms == 0.0] = 1.0
            X = X / norms[:, None]
        return X @ self.coef_


class ERMClassifier(_SolverEstimator, ClassifierMixin):
    """Binary linear classifier trained by a variance-reduced solver.

    loss='logistic' pairs with the smooth solvers (fsvrg, svrg, ...);
    loss='hinge' switches to the subgradient variants.
    """

    def __init__(self, loss="logistic", lam1=1e-4, lam2=0.0, algorithm=None,
                 step_size=None, m1=None, growth=None, epochs=10, batch_size=1,
                 theta=None, seed=0, normalize=True):
        super().__init__(loss, lam1, lam2, algorithm, step_size, m1, growth,
                         epochs, batch_size, theta, seed, normalize)

    def _solver_config(self):
        algorithm = self.algorithm
        if algorithm is None:
            algorithm = "fsvrg_nonsmooth" if self.loss == "hinge" else "fsvrg"
        return SolverConfig(
            algorithm=algorithm,
            step_size=self.step_size,
            m1=self.m1,
            growth=self.growth,
            epochs=self.epochs,
            batch_size=self.batch_size,
            theta=self.theta,
            seed=self.seed,
        )

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y_pm1, self.classes_ = check_binary_labels(y, X.shape[0])
        return self._fit_weights(X, y_pm1)

    def decision_function(self, X):
        return self._decision(X)

    def predict(self, X):
        scores = self._decision(X)
        return self.classes_[(scores > 0).astype(int)]


class ERMRegressor(_SolverEstimator, RegressorMixin):
    """Linear least-squares regressor trained by a variance-reduced solver.

    Rows are used as given by default: scaling them to unit norm would change
    the regression problem, and the solvers' default step sizes already adapt
    to the actual row norms through the smoothness constant.
    """

    def __init__(self, lam1=1e-4, lam2=0.0, algorithm="fsvrg", step_size=None,
                 m1=None, growth=None, epochs=10, batch_size=1, theta=None,
                 seed=0, normalize=False):
        super().__init__("squared", lam1, lam2, algorithm, step_size, m1,
                         growth, epochs, batch_size, theta, seed, normalize)

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_target(y, X.shape[0])
        return self._fit_weights(X, y)

    def predict(self, X):
        return self._decision(X)
