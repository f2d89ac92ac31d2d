"""Momentum-weight schedules and epoch-size growth.

The momentum weight blends the previous snapshot with the auxiliary iterate
and must stay in (0, 1]. Three schedules are supported: a constant weight,
the strongly-convex optimal weight mu*eta*m_s/2 (clamped to 1), and the
accelerated recursion theta_s = (sqrt(theta^4 + 4 theta^2) - theta^2)/2 for
the non-strongly-convex case, seeded by theta_1 = 1 - rho_b*L*eta/(1 - L*eta)
where rho_b is the mini-batch variance factor (n-b)/((n-1) b).

Epoch sizes grow geometrically, m_s = ceil(growth^(s-1) * m1), computed by
repeated multiplication in epoch order with a snap-to-integer guard so the
ceilings match exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, StepSizeTooLargeError, WrongCaseError


def theta_sc_optimal(mu: float, eta: float, m_s: int) -> float:
    """Optimal constant weight mu*eta*m_s/2 for strongly convex problems,
    clamped to 1 so the momentum blend stays a convex combination."""
    if mu <= 0:
        raise WrongCaseError("the SC-optimal weight needs mu > 0")
    if eta <= 0 or m_s < 1:
        raise ParameterError("need eta > 0 and m_s >= 1")
    return min(mu * eta * m_s / 2.0, 1.0)


def minibatch_variance_factor(n: int, b: int) -> float:
    """(n - b) / ((n - 1) b): 1 at b=1, 0 at b=n, the without-replacement
    scaling of the estimator's variance bound."""
    if not 1 <= b <= n:
        raise ParameterError(f"batch size must be in [1, {n}], got {b}")
    if n == 1:
        return 0.0
    return (n - b) / ((n - 1) * b)


def theta_nsc_init(L: float, eta: float, rho_b: float = 1.0) -> float:
    """First weight of the non-strongly-convex schedule,
    1 - rho_b*L*eta/(1 - L*eta); rho_b=1 is the single-sample case."""
    if L <= 0 or eta <= 0:
        raise ParameterError("need L > 0 and eta > 0")
    if not 0.0 <= rho_b <= 1.0:
        raise ParameterError("rho_b must lie in [0, 1]")
    le = L * eta
    if le >= 1.0:
        raise StepSizeTooLargeError(f"need eta < 1/L = {1.0 / L:g}, got eta = {eta:g}")
    theta1 = 1.0 - rho_b * le / (1.0 - le)
    if theta1 <= 0.0:
        bound = 1.0 / (L * (1.0 + rho_b))
        raise StepSizeTooLargeError(
            f"step size too large for the NSC schedule: need eta < {bound:g}, got {eta:g}"
        )
    return theta1


def theta_nsc_next(theta_prev: float) -> float:
    """One step of the accelerated weight recursion; output lies in (0, theta_prev)."""
    if not 0.0 < theta_prev <= 1.0:
        raise ParameterError(f"theta_prev must be in (0, 1], got {theta_prev}")
    t2 = theta_prev * theta_prev
    return (math.sqrt(t2 * t2 + 4.0 * t2) - t2) / 2.0


def epoch_sizes(m1: int, growth: float, epochs: int) -> list[int]:
    """[ceil(growth^(s-1) * m1) for s = 1..epochs].

    The power is built by repeated multiplication in epoch order, and values
    within 1e-9 (relative) of an integer are snapped to it before the
    ceiling, so binary rounding in growth cannot perturb an exact product.
    """
    if m1 < 1:
        raise ParameterError("m1 must be >= 1")
    if growth < 1.0:
        raise ParameterError("growth must be >= 1")
    if epochs < 1:
        raise ParameterError("epochs must be >= 1")
    out = []
    p = 1.0
    for _ in range(epochs):
        v = p * m1
        nearest = round(v)
        if abs(v - nearest) <= 1e-9 * max(1.0, abs(v)):
            v = nearest
        out.append(int(math.ceil(v)))
        p *= growth
    return out


@dataclass(frozen=True)
class ThetaSchedule:
    """Per-epoch momentum weights.

    mode 'constant' emits `theta` every epoch; 'sc_optimal' emits
    min(mu*eta*m_s/2, 1); 'nsc' starts from `theta` and applies the
    accelerated recursion. An optional `cap` bounds every emitted weight.
    """

    mode: str
    theta: float = 0.0
    mu: float = 0.0
    eta: float = 0.0
    cap: float | None = None

    @staticmethod
    def constant(theta: float, cap: float | None = None) -> "ThetaSchedule":
        if not 0.0 < theta <= 1.0:
            raise ParameterError(f"constant weight must be in (0, 1], got {theta}")
        return ThetaSchedule("constant", theta=theta, cap=cap)

    @staticmethod
    def sc_optimal(mu: float, eta: float, cap: float | None = None) -> "ThetaSchedule":
        if mu <= 0:
            raise WrongCaseError("the SC-optimal schedule needs mu > 0")
        return ThetaSchedule("sc_optimal", mu=mu, eta=eta, cap=cap)

    @staticmethod
    def nsc(theta1: float, cap: float | None = None) -> "ThetaSchedule":
        if not 0.0 < theta1 <= 1.0:
            raise ParameterError(f"theta1 must be in (0, 1], got {theta1}")
        return ThetaSchedule("nsc", theta=theta1, cap=cap)

    @staticmethod
    def nsc_from(L: float, eta: float, rho_b: float = 1.0,
                 cap: float | None = None) -> "ThetaSchedule":
        return ThetaSchedule.nsc(theta_nsc_init(L, eta, rho_b), cap=cap)

    def value(self, epoch: int, m_s: int) -> float:
        """Weight for the given 1-based epoch with inner length m_s."""
        if epoch < 1:
            raise ParameterError("epoch is 1-based")
        if self.mode == "constant":
            th = self.theta
        elif self.mode == "sc_optimal":
            th = theta_sc_optimal(self.mu, self.eta, m_s)
        elif self.mode == "nsc":
            th = self.theta
            for _ in range(epoch - 1):
                th = theta_nsc_next(th)
        else:
            raise ParameterError(f"unknown schedule mode {self.mode!r}")
        if self.cap is not None:
            th = min(th, self.cap)
        return th
