"""Noisy-channel M/M/1/1 model with preemption, and its closed-form averages.

A single source samples a memoryless process at Poisson rate ``lam``; each
sample changes content with probability ``p``.  Service is exponential with
rate ``mu`` and preemptive.  A served update is decoded correctly with
probability ``1 - pe``, otherwise it is lost and the system lands in an
error state with nothing in service.

Four discrete states: ``0c`` content matched, ``1m`` mismatched with a
first-version update in service, ``0e`` mismatched with nothing in service,
``1u`` mismatched with an urgent update in service.  Two hierarchy schemes
grade the age growth over those states: scheme 1 uses constant slopes
``1 <= m1 <= m2``, scheme 2 grows the age exponentially with constants
``0 < k1 <= k2`` in the two severe states.

The closed forms below are transcribed independently of the generic engine
in :mod:`aoii.core` so each path can serve as the other's oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    RESET_CLEAR,
    RESET_FRESH_SERVICE,
    RESET_HOLD_MONITOR,
    GrowthRate,
    ModelError,
    ShsModel,
    StationaryDistribution,
    Transition,
    UnstableParameters,
    build_model,
    prune_unreachable,
)

NOISY_STATES = ("0c", "1m", "0e", "1u")


@dataclass(frozen=True)
class NoisyParams:
    """Arrival rate, service rate, content-change and decode-error probabilities."""

    lam: float
    mu: float
    p: float
    pe: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ModelError(f"arrival rate must be positive, got {self.lam}")
        if not self.mu > 0:
            raise ModelError(f"service rate must be positive, got {self.mu}")
        if not 0.0 <= self.p <= 1.0:
            raise ModelError(f"content-change probability must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.pe < 1.0:
            raise ModelError(f"decode-error probability must lie in [0, 1), got {self.pe}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def pc(self) -> float:
        return 1.0 - self.pe

    @property
    def rho(self) -> float:
        """Utilization factor of the queue."""
        return self.lam / self.mu

    @property
    def a(self) -> float:
        """Normalization constant of the stationary distribution."""
        return self.p + self.p * self.rho + self.pc * self.q


@dataclass(frozen=True)
class Scheme1Slopes:
    """Constant growth slopes for the two severe states, ``m2 >= m1 >= 1``."""

    m1: float
    m2: float

    def __post_init__(self):
        if not (self.m2 >= self.m1 >= 1.0):
            raise ModelError(f"slopes must satisfy m2 >= m1 >= 1, got ({self.m1}, {self.m2})")


@dataclass(frozen=True)
class Scheme2Constants:
    """Exponential growth constants for the severe states, ``k2 >= k1 > 0``."""

    k1: float
    k2: float

    def __post_init__(self):
        if not (self.k2 >= self.k1 > 0.0):
            raise ModelError(f"growth constants must satisfy k2 >= k1 > 0, got ({self.k1}, {self.k2})")


def build_noisy_model(
    params: NoisyParams, scheme: Scheme1Slopes | Scheme2Constants
) -> ShsModel:
    """Build the four-state noisy-channel model for either hierarchy scheme.

    Zero-rate transitions (boundary values of ``p`` or ``pe``) are dropped
    and states left unreachable from ``0c`` are pruned, so the returned
    model is the effective chain and always irreducible.
    """
    lam, mu, p, q = params.lam, params.mu, params.p, params.q
    pc, pe = params.pc, params.pe
    if isinstance(scheme, Scheme1Slopes):
        growth = (
            GrowthRate.zero(),
            GrowthRate.constant(1.0),
            GrowthRate.constant(scheme.m1),
            GrowthRate.constant(scheme.m2),
        )
    else:
        growth = (
            GrowthRate.zero(),
            GrowthRate.constant(1.0),
            GrowthRate.linear(scheme.k1),
            GrowthRate.linear(scheme.k2),
        )
    rows = (
        (0, 0, 0, q * lam, RESET_CLEAR),
        (1, 0, 1, p * lam, RESET_FRESH_SERVICE),
        (2, 1, 0, pc * mu, RESET_CLEAR),
        (3, 1, 1, q * lam, RESET_FRESH_SERVICE),
        (4, 1, 2, pe * mu, RESET_HOLD_MONITOR),
        (5, 1, 3, p * lam, RESET_FRESH_SERVICE),
        (6, 3, 0, pc * mu, RESET_CLEAR),
        (7, 3, 3, lam, RESET_FRESH_SERVICE),
        (8, 3, 2, pe * mu, RESET_HOLD_MONITOR),
        (9, 2, 3, lam, RESET_FRESH_SERVICE),
    )
    transitions = tuple(
        Transition(label, s, t, rate, reset)
        for (label, s, t, rate, reset) in rows
        if rate > 0.0
    )
    labels, growth, transitions = prune_unreachable(NOISY_STATES, growth, transitions)
    return build_model(labels, growth, transitions, dim=2)


def noisy_stationary(params: NoisyParams) -> StationaryDistribution:
    """Closed-form stationary distribution over ``(0c, 1m, 0e, 1u)``.

    Unreachable boundary states carry exactly zero mass.
    """
    p, pe, pc = params.p, params.pe, params.pc
    rho, a = params.rho, params.a
    pi = np.array(
        [
            pc / a,
            p * pc / (a * (p + 1.0 / rho)),
            p * pe / a,
            (p * p * rho + p * pe) / (a * (p + 1.0 / rho)),
        ]
    )
    return StationaryDistribution(pi)


def corollary1_average(params: NoisyParams, slopes: Scheme1Slopes) -> float:
    """Average monitor age under scheme 1 (constant slopes); always finite."""
    p, pe, pc = params.p, params.pe, params.pc
    lam, rho, a = params.lam, params.rho, params.a
    m1, m2 = slopes.m1, slopes.m2
    return m1 * p * pe * (1.0 + rho) / (a * lam * pc) + (pe + rho) * (
        p * pc + m2 * (p * p * rho + p * pe)
    ) / (a * lam * pc * (p + 1.0 / rho))


def corollary1_simplified(params: NoisyParams) -> float:
    """Scheme-1 average with both slopes equal to one."""
    p, pe, pc = params.p, params.pe, params.pc
    rho, a, mu = params.rho, params.a, params.mu
    return p * (pe / rho + 2.0 * pe + rho) / (a * pc * mu)


def aos_noisy(params: NoisyParams, slopes: Scheme1Slopes) -> tuple[float, float]:
    """Average age of synchronization: every sample counts as changed.

    Returns the scheme-1 average and its equal-slope simplification, both
    with the content-change probability forced to one regardless of
    ``params.p``.
    """
    pe, pc = params.pe, params.pc
    lam, mu, rho = params.lam, params.mu, params.rho
    m1, m2 = slopes.m1, slopes.m2
    full = m1 * pe / (lam * pc) + (pc * (pe + rho) + m2 * (pe + rho) ** 2) / (
        lam * pc * (1.0 + rho) * (1.0 + 1.0 / rho)
    )
    simplified = (pe / rho + 2.0 * pe + rho) / (pc * mu * (1.0 + rho))
    return full, simplified


def scheme2_determinant(params: NoisyParams, consts: Scheme2Constants) -> float:
    """Determinant governing the solvability of the scheme-2 age system."""
    lam, mu, pe = params.lam, params.mu, params.pe
    k1, k2 = consts.k1, consts.k2
    return 1.0 - pe * lam * mu / ((k1 - lam) * (k2 - mu))


def scheme2_violations(
    params: NoisyParams, consts: Scheme2Constants
) -> tuple[str, ...]:
    """Steady-state stability clauses violated by scheme-2 parameters.

    An empty tuple means the average exists; the conditions are both
    necessary and sufficient for this model.
    """
    lam, mu = params.lam, params.mu
    k1, k2 = consts.k1, consts.k2
    violated = []
    det_c = scheme2_determinant(params, consts)
    if not det_c > 0.0:
        violated.append(f"det(C) = {det_c:g} is not positive")
    if not 0.0 < k1 < lam:
        violated.append("k1 < lambda violated")
    if not lam < mu:
        violated.append("lambda < mu violated")
    if not k1 < k2:
        violated.append("k1 < k2 violated")
    if not k2 < mu:
        violated.append("k2 < mu violated")
    return tuple(violated)


def corollary2_average(params: NoisyParams, consts: Scheme2Constants) -> float:
    """Average monitor age under scheme 2 (exponential severe states).

    Raises UnstableParameters when the steady-state stability conditions
    fail, quoting the violated clauses.
    """
    violated = scheme2_violations(params, consts)
    if violated:
        raise UnstableParameters("; ".join(violated))
    p, pc = params.p, params.pc
    lam, mu, pe = params.lam, params.mu, params.pe
    rho, a = params.rho, params.a
    k1, k2 = consts.k1, consts.k2
    return (
        p
        * pc
        * (pe * mu + lam - k1)
        * (p * lam + mu - k2)
        / (a * lam * (p + 1.0 / rho) ** 2 * ((lam - k1) * (mu - k2) - lam * mu * pe))
    )
