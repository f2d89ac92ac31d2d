"""Composite objectives: an average of per-example losses plus a regularizer.

The objective is phi(x) = (1/n) sum_i loss(<a_i, x>, b_i) + g(x), where g is
either absent, lam1*||x||^2, lam2*||x||_1, or their sum (elastic net). Loss
conventions:

    logistic  l(z, b) = ln(1 + exp(-b z))       smooth, L_i = ||a_i||^2 / 4
    squared   l(z, b) = (z - b)^2               smooth, L_i = 2 ||a_i||^2
    hinge     l(z, b) = max(0, 1 - b z)         non-smooth, Lipschitz

The four problem cases are derived from loss smoothness and strong convexity:
smooth+SC (1), smooth+NSC (2), non-smooth+SC (3), non-smooth+NSC (4). The
certified strong convexity constant of the lam1*||x||^2 term is 2*lam1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .datasets import Dataset
from .errors import ParameterError, WrongCaseError


class LogisticLoss:
    name = "logistic"
    smooth = True
    code = _kernels.LOGISTIC

    @staticmethod
    def value(z, b):
        # log(1 + exp(-b z)) evaluated stably on both tails
        return np.logaddexp(0.0, -b * z)

    @staticmethod
    def deriv(z, b):
        # -b * sigmoid(-b z), via exp(-|t|) so neither tail overflows
        t = np.asarray(b, dtype=np.float64) * z
        e = np.exp(-np.abs(t))
        sig = np.where(t >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
        return -b * sig

    @staticmethod
    def lipschitz(row_sq_norm):
        return row_sq_norm / 4.0


class SquaredLoss:
    name = "squared"
    smooth = True
    code = _kernels.SQUARED

    @staticmethod
    def value(z, b):
        return (z - b) ** 2

    @staticmethod
    def deriv(z, b):
        return 2.0 * (z - b)

    @staticmethod
    def lipschitz(row_sq_norm):
        return 2.0 * row_sq_norm


class HingeLoss:
    name = "hinge"
    smooth = False
    code = _kernels.HINGE

    @staticmethod
    def value(z, b):
        return np.maximum(0.0, 1.0 - b * z)

    @staticmethod
    def subderiv(z, b):
        # At the kink (margin exactly 1) return 0, a valid subgradient.
        return np.where(1.0 - b * z > 0.0, -b, 0.0)

    @staticmethod
    def lipschitz(row_sq_norm):
        raise WrongCaseError("hinge loss has no smoothness constant")


_LOSSES = {"logistic": LogisticLoss, "squared": SquaredLoss, "hinge": HingeLoss}


def loss_by_name(name: str):
    try:
        return _LOSSES[name]()
    except KeyError:
        raise ParameterError(f"unknown loss {name!r}; choose from {sorted(_LOSSES)}") from None


@dataclass(frozen=True)
class Regularizer:
    """g(x) = lam1*||x||^2 + lam2*||x||_1 with lam1, lam2 >= 0."""

    lam1: float = 0.0
    lam2: float = 0.0

    def __post_init__(self):
        if self.lam1 < 0 or self.lam2 < 0:
            raise ParameterError("regularization parameters must be >= 0")

    @staticmethod
    def none() -> "Regularizer":
        return Regularizer()

    @staticmethod
    def l2(lam1: float) -> "Regularizer":
        return Regularizer(lam1=lam1)

    @staticmethod
    def l1(lam2: float) -> "Regularizer":
        return Regularizer(lam2=lam2)

    @staticmethod
    def elastic_net(lam1: float, lam2: float) -> "Regularizer":
        return Regularizer(lam1=lam1, lam2=lam2)

    @property
    def family(self) -> str:
        if self.lam2 == 0.0:
            return "l2" if self.lam1 > 0.0 else "none"
        return "elastic_net" if self.lam1 > 0.0 else "l1"

    @property
    def smooth(self) -> bool:
        return self.lam2 == 0.0

    @property
    def strong_convexity(self) -> float:
        """mu certified by the quadratic term of g."""
        return 2.0 * self.lam1

    def value(self, x) -> float:
        x = np.asarray(x)
        v = 0.0
        if self.lam1:
            v += self.lam1 * float(np.dot(x, x))
        if self.lam2:
            v += self.lam2 * float(np.sum(np.abs(x)))
        return v

    def grad(self, x) -> np.ndarray:
        """Gradient of g; defined only for the smooth families."""
        if not self.smooth:
            raise WrongCaseError(
                "regularizer with an l1 term has no gradient; use prox instead"
            )
        return 2.0 * self.lam1 * np.asarray(x, dtype=np.float64)

    def prox(self, eta: float, v) -> np.ndarray:
        """argmin_x (1/2 eta)||x - v||^2 + g(x), componentwise closed form."""
        if eta <= 0:
            raise ParameterError("prox step size must be > 0")
        v = np.asarray(v, dtype=np.float64)
        if self.lam2:
            thr = eta * self.lam2
            v = np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)
        return v / (1.0 + 2.0 * eta * self.lam1)


@dataclass(frozen=True)
class Objective:
    """A dataset, a loss family, and a regularizer, with derived constants."""

    dataset: Dataset
    loss: object
    reg: Regularizer
    mu_override: float | None = None

    @cached_property
    def L(self) -> float | None:
        """Largest per-example smoothness constant; None for non-smooth losses."""
        if not self.loss.smooth:
            return None
        return float(np.max(self.loss.lipschitz(self.dataset.row_sq_norms)))

    @property
    def mu(self) -> float:
        if self.mu_override is not None:
            return self.mu_override
        return self.reg.strong_convexity

    @property
    def case(self) -> int:
        """1: smooth+SC, 2: smooth+NSC, 3: non-smooth+SC, 4: non-smooth+NSC."""
        if self.loss.smooth:
            return 1 if self.mu > 0 else 2
        return 3 if self.mu > 0 else 4

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def dim(self) -> int:
        return self.dataset.dim

    def _check_x(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ParameterError(f"x must have shape ({self.dim},), got {x.shape}")
        return x

    def margins(self, x) -> np.ndarray:
        """<a_i, x> for every example, accumulated in index order."""
        x = self._check_x(x)
        indptr, indices, data = self.dataset.csr
        out = np.empty(self.n)
        _kernels.margins(indptr, indices, data, x, out)
        return out

    def f_value(self, x) -> float:
        """(1/n) sum_i loss(<a_i, x>, b_i)."""
        z = self.margins(x)
        return float(np.mean(self.loss.value(z, self.dataset.labels)))

    def phi(self, x) -> float:
        """Full objective value f(x) + g(x)."""
        return self.f_value(x) + self.reg.value(self._check_x(x))

    def component_grad(self, i: int, x) -> np.ndarray:
        """Exact gradient of the i-th loss term; support of example i only."""
        if not self.loss.smooth:
            raise WrongCaseError("component_grad requires a smooth loss; use component_subgrad")
        x = self._check_x(x)
        ex = self.dataset.examples[i]
        z = float(np.dot(ex.values, x[ex.indices]))
        c = float(self.loss.deriv(np.float64(z), np.float64(ex.label)))
        out = np.zeros(self.dim)
        out[ex.indices] = c * ex.values
        return out

    def component_subgrad(self, i: int, x) -> np.ndarray:
        """A subgradient of the i-th hinge term (zero branch at the kink)."""
        if self.loss.smooth:
            raise WrongCaseError("component_subgrad is for non-smooth losses; use component_grad")
        x = self._check_x(x)
        ex = self.dataset.examples[i]
        z = float(np.dot(ex.values, x[ex.indices]))
        c = float(self.loss.subderiv(np.float64(z), np.float64(ex.label)))
        out = np.zeros(self.dim)
        out[ex.indices] = c * ex.values
        return out

    def snapshot_pass(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Per-example derivative scalars at x and the mean (sub)gradient.

        One pass over the data in index order; the scalars are the cached
        per-example terms that make the variance-reduced estimator free of
        extra gradient evaluations at the snapshot.
        """
        x = self._check_x(x)
        indptr, indices, data = self.dataset.csr
        sc = np.empty(self.n)
        grad = np.empty(self.dim)
        _kernels.mean_grad(
            indptr, indices, data, self.dataset.labels, self.loss.code, x, sc, grad
        )
        return sc, grad

    def full_grad(self, x) -> np.ndarray:
        """Mean of component gradients, summed in index order."""
        if not self.loss.smooth:
            raise WrongCaseError("full_grad requires a smooth loss; use full_subgrad")
        return self.snapshot_pass(x)[1]

    def full_subgrad(self, x) -> np.ndarray:
        """Mean of component subgradients, summed in index order."""
        if self.loss.smooth:
            raise WrongCaseError("full_subgrad is for non-smooth losses; use full_grad")
        return self.snapshot_pass(x)[1]


def make_objective(dataset: Dataset, loss: str, lam1: float = 0.0,
                   lam2: float = 0.0, mu_override: float | None = None) -> Objective:
    """Convenience constructor from a loss name and regularization parameters."""
    return Objective(dataset, loss_by_name(loss), Regularizer(lam1, lam2), mu_override)
