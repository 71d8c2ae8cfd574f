"""Operator families for DL2 and the seven fuzzy logic configurations.

DL2 maps formulas into [0, inf) where 0 is absolute truth and any positive
value is a penalty; the fuzzy logics map into [0, 1] where 1 is absolute
truth.  Every operator here is written once against the dual helpers in
``graph``: called with floats or numpy arrays it computes values directly,
called with graph nodes it extends the tape, so the lowered losses and the
plain numeric API cannot drift apart.

All functions are pure and safe to call from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

import math

import numpy as np

from .graph import (
    Node,
    absolute,
    eq_indicator,
    leq_step,
    lt_step,
    maximum,
    minimum,
    power,
    sigmoid,
)

__all__ = [
    "DL2",
    "DomainError",
    "FUZZY_KINDS",
    "FuzzyOperatorSet",
    "GODEL",
    "GOGUEN",
    "KLEENE_DIENES",
    "LOGIC_KINDS",
    "LUKASIEWICZ",
    "LogicConfig",
    "REICHENBACH",
    "SIGMOIDAL_REICHENBACH",
    "SemanticsError",
    "YAGER",
    "constraint_loss",
    "dl2_leq",
    "dl2_neq",
    "fuzzy_leq",
    "implication",
    "negation",
    "operator_set",
    "sigmoidal_transform",
    "snorm",
    "tnorm",
]

DL2 = "dl2"
GODEL = "godel"
KLEENE_DIENES = "kleene-dienes"
LUKASIEWICZ = "lukasiewicz"
REICHENBACH = "reichenbach"
SIGMOIDAL_REICHENBACH = "sigmoidal-reichenbach"
GOGUEN = "goguen"
YAGER = "yager"

LOGIC_KINDS = (DL2, GODEL, KLEENE_DIENES, LUKASIEWICZ, REICHENBACH, SIGMOIDAL_REICHENBACH, GOGUEN, YAGER)
FUZZY_KINDS = LOGIC_KINDS[1:]

_PRODUCT_FAMILY = (REICHENBACH, SIGMOIDAL_REICHENBACH, GOGUEN)

UNIT_TOLERANCE = 1e-9


class DomainError(ValueError):
    """An argument fell outside the operator's numeric domain."""


class SemanticsError(ValueError):
    """The requested operation does not exist under the given logic."""


@dataclass(frozen=True)
class LogicConfig:
    """Which semantics to lower under, plus its shape parameters.

    ``xi`` is the penalty assigned by the DL2 inequality indicator, ``s`` the
    sigmoid steepness of the sigmoidal Reichenbach implication, and ``p`` the
    Yager exponent.
    """

    kind: str
    xi: float = 1.0
    s: float = 9.0
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in LOGIC_KINDS:
            raise SemanticsError(f"unknown logic {self.kind!r}; expected one of {', '.join(LOGIC_KINDS)}")
        if not self.xi > 0.0:
            raise DomainError("xi must be positive")
        if not self.s > 0.0:
            raise DomainError("s must be positive")
        if not self.p >= 1.0:
            raise DomainError("p must be at least 1")

    @property
    def is_fuzzy(self) -> bool:
        return self.kind != DL2


@dataclass(frozen=True)
class FuzzyOperatorSet:
    """The four operators of one fuzzy configuration, bound to its parameters."""

    tnorm: Callable
    snorm: Callable
    negation: Callable
    implication: Callable


def operator_set(logic: LogicConfig) -> FuzzyOperatorSet:
    if not logic.is_fuzzy:
        raise SemanticsError("dl2 has no t-norm operator set")
    return FuzzyOperatorSet(
        tnorm=partial(tnorm, logic),
        snorm=partial(snorm, logic),
        negation=negation,
        implication=partial(implication, logic),
    )


def _check_unit(value, name: str):
    """Validate a numeric truth value against [0, 1] and clip roundoff spill."""
    if isinstance(value, Node):
        return value
    arr = np.asarray(value, dtype=float)
    if np.any(arr < -UNIT_TOLERANCE) or np.any(arr > 1.0 + UNIT_TOLERANCE):
        raise DomainError(f"{name} outside [0, 1]")
    clipped = np.clip(arr, 0.0, 1.0)
    return float(clipped) if np.ndim(value) == 0 else clipped


def _require_fuzzy(logic: LogicConfig, what: str):
    if not logic.is_fuzzy:
        raise SemanticsError(f"{what} is undefined for dl2")


def tnorm(logic: LogicConfig, x, y):
    """Fuzzy conjunction of x, y in [0, 1] under the given logic."""
    _require_fuzzy(logic, "t-norm")
    x = _check_unit(x, "x")
    y = _check_unit(y, "y")
    kind = logic.kind
    if kind in (GODEL, KLEENE_DIENES):
        return minimum(x, y)
    if kind == LUKASIEWICZ:
        return maximum(x + y - 1.0, 0.0)
    if kind in _PRODUCT_FAMILY:
        return x * y
    p = logic.p
    tail = power(1.0 - x, p) + power(1.0 - y, p)
    return maximum(1.0 - power(tail, 1.0 / p), 0.0)


def snorm(logic: LogicConfig, x, y):
    """Fuzzy disjunction; the dual of the t-norm via S(x,y) = 1 - T(1-x, 1-y)."""
    _require_fuzzy(logic, "s-norm")
    x = _check_unit(x, "x")
    y = _check_unit(y, "y")
    kind = logic.kind
    if kind in (GODEL, KLEENE_DIENES):
        return maximum(x, y)
    if kind == LUKASIEWICZ:
        return minimum(x + y, 1.0)
    if kind in _PRODUCT_FAMILY:
        return x + y - x * y
    p = logic.p
    return minimum(power(power(x, p) + power(y, p), 1.0 / p), 1.0)


def negation(x):
    """Standard strong negation N(x) = 1 - x."""
    x = _check_unit(x, "x")
    return 1.0 - x


def implication(logic: LogicConfig, x, y):
    """Fuzzy implication of antecedent x and consequent y under the logic.

    Branch conventions: the Goedel implication is 1 strictly below the
    diagonal (x < y) and y elsewhere; Goguen is 1 on x <= y and y/x elsewhere;
    Yager is y**x with the x = y = 0 corner defined as 1 (0**0 = 1).  The
    branch steps carry zero derivative.
    """
    _require_fuzzy(logic, "implication")
    x = _check_unit(x, "x")
    y = _check_unit(y, "y")
    kind = logic.kind
    if kind == GODEL:
        below = lt_step(x, y)
        return below + (1.0 - below) * y
    if kind == KLEENE_DIENES:
        return maximum(1.0 - x, y)
    if kind == LUKASIEWICZ:
        return minimum(1.0 - x + y, 1.0)
    if kind == REICHENBACH:
        return 1.0 - x + x * y
    if kind == SIGMOIDAL_REICHENBACH:
        return sigmoidal_transform(1.0 - x + x * y, logic.s)
    if kind == GOGUEN:
        # max(x, step) keeps the unused quotient lane away from division by
        # zero; on x <= y the step is 1 and the quotient contributes nothing.
        at_most = leq_step(x, y)
        return at_most + (1.0 - at_most) * (y / maximum(x, at_most))
    return power(y, x)


def sigmoidal_transform(inner, s: float):
    """Steepened unit-interval map fixing 0, 1/2, and 1.

    Computes ((1 + e^(s/2)) * sigma(s * inner - s/2) - 1) / (e^(s/2) - 1)
    with sigma the logistic function; strictly increasing in ``inner``.
    """
    if not s > 0.0:
        raise DomainError("s must be positive")
    inner = _check_unit(inner, "inner")
    half = math.exp(s / 2.0)
    return ((1.0 + half) * sigmoid(s * inner - s / 2.0) - 1.0) / (half - 1.0)


def dl2_leq(x, y):
    """DL2 penalty for x <= y: max(x - y, 0); zero exactly when satisfied."""
    return maximum(x - y, 0.0)


def dl2_neq(x, y, xi: float = 1.0):
    """DL2 penalty for x != y: xi on exact equality, else zero.

    The indicator contributes no gradient anywhere.
    """
    if not xi > 0.0:
        raise DomainError("xi must be positive")
    return xi * eq_indicator(x, y)


def fuzzy_leq(x, y):
    """Fuzzy truth of x <= y over the full real line.

    1 - max(x - y, 0) / (|x| + |y|), with the 0/0 corner defined as 1 by
    guarding the denominator on its own zero indicator rather than an
    epsilon, so satisfied comparisons stay exactly 1.  The value is invariant
    under positive scaling of both arguments.
    """
    num = maximum(x - y, 0.0)
    den = absolute(x) + absolute(y)
    safe_den = maximum(den, eq_indicator(den, 0.0))
    return 1.0 - num / safe_den


def constraint_loss(logic: LogicConfig, truth):
    """Map a truth value into a non-negative training loss.

    DL2 values already are penalties; fuzzy truth t becomes 1 - t.
    """
    if logic.is_fuzzy:
        truth = _check_unit(truth, "truth")
        return 1.0 - truth
    if not isinstance(truth, Node):
        arr = np.asarray(truth, dtype=float)
        if np.any(arr < -UNIT_TOLERANCE):
            raise DomainError("dl2 truth value must be non-negative")
        clipped = np.maximum(arr, 0.0)
        return float(clipped) if np.ndim(truth) == 0 else clipped
    return truth
