"""Constraint formula and term trees, negation normalisation, and exact
two-valued evaluation.

Formulas are immutable and freely shareable across threads.  Comparison
atoms and propositional atoms serve different pipelines (training constraints
versus tautology analysis) and are not mixed inside one formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "And",
    "Arith",
    "BigAnd",
    "BigOr",
    "Compare",
    "Const",
    "ForallBall",
    "Formula",
    "FormulaError",
    "GroupProb",
    "Iff",
    "Implies",
    "InfNormDiff",
    "InputRef",
    "Neg",
    "NetOut",
    "Not",
    "Or",
    "PropVar",
    "Term",
    "eval_bool",
    "eval_term",
    "has_comparisons",
    "has_prop_vars",
    "leaf_key",
    "prop_names",
    "push_negation",
    "term_leaves",
]

COMPARE_OPS = ("<=", "<", ">=", ">", "==", "!=")
NETWORK_INPUTS = ("x0", "xadv")

_NEGATED_OP = {"<=": ">", "<": ">=", ">=": "<", ">": "<=", "==": "!=", "!=": "=="}


class FormulaError(ValueError):
    """Structurally invalid formula or unresolvable term."""


# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class InputRef:
    """One component of a raw network input vector."""

    which: str
    index: int

    def __post_init__(self):
        if self.which not in NETWORK_INPUTS:
            raise FormulaError(f"unknown input {self.which!r}; expected one of {NETWORK_INPUTS}")
        if self.index < 0:
            raise FormulaError("input component index must be non-negative")


@dataclass(frozen=True)
class NetOut:
    """Predicted probability of one class for the given network input."""

    which: str
    index: int

    def __post_init__(self):
        if self.which not in NETWORK_INPUTS:
            raise FormulaError(f"unknown input {self.which!r}; expected one of {NETWORK_INPUTS}")
        if self.index < 0:
            raise FormulaError("class index must be non-negative")


@dataclass(frozen=True)
class GroupProb:
    """Combined predicted probability of a declared class group."""

    group: str


@dataclass(frozen=True)
class InfNormDiff:
    """The l-infinity distance between the prediction vectors at x0 and xadv."""


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Term"
    right: "Term"

    def __post_init__(self):
        if self.op not in ("+", "-", "*", "/"):
            raise FormulaError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Neg:
    arg: "Term"


Term = Union[Const, InputRef, NetOut, GroupProb, InfNormDiff, Arith, Neg]


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class Compare:
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in COMPARE_OPS:
            raise FormulaError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class BigAnd:
    """Finite conjunction over an instantiated index set, folded left to right."""

    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise FormulaError("big conjunction needs a non-empty index set")


@dataclass(frozen=True)
class BigOr:
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise FormulaError("big disjunction needs a non-empty index set")


@dataclass(frozen=True)
class PropVar:
    """Propositional atom; used by the tautology analyses only."""

    name: str


@dataclass(frozen=True)
class ForallBall:
    """Bounded universal quantifier over the epsilon-ball around x0.

    Syntax only: lowering strips it, and the recorded radius drives the
    counterexample search outside of the logic.
    """

    epsilon: float
    body: "Formula"

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise FormulaError("ball radius must be positive")


Formula = Union[Compare, And, Or, Not, Implies, Iff, BigAnd, BigOr, PropVar, ForallBall]


# -- structure helpers -------------------------------------------------------


def _children(f: Formula) -> tuple:
    if isinstance(f, (And, Or, Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (BigAnd, BigOr)):
        return f.parts
    if isinstance(f, ForallBall):
        return (f.body,)
    return ()


def has_prop_vars(f: Formula) -> bool:
    if isinstance(f, PropVar):
        return True
    return any(has_prop_vars(c) for c in _children(f))


def has_comparisons(f: Formula) -> bool:
    if isinstance(f, Compare):
        return True
    return any(has_comparisons(c) for c in _children(f))


def prop_names(f: Formula) -> tuple:
    """Sorted names of the propositional atoms in the formula."""
    names: set = set()

    def walk(g):
        if isinstance(g, PropVar):
            names.add(g.name)
        for c in _children(g):
            walk(c)

    walk(f)
    return tuple(sorted(names))


def leaf_key(term: Term):
    """Hashable binding key for a non-constant term leaf."""
    if isinstance(term, InputRef):
        return ("input", term.which, term.index)
    if isinstance(term, NetOut):
        return ("netout", term.which, term.index)
    if isinstance(term, GroupProb):
        return ("group", term.group)
    if isinstance(term, InfNormDiff):
        return ("infnorm",)
    if isinstance(term, PropVar):
        return ("prop", term.name)
    raise FormulaError(f"term {term!r} is not a bindable leaf")


def term_leaves(f: Formula) -> tuple:
    """Ordered, de-duplicated binding keys of every term and prop leaf."""
    seen: dict = {}

    def walk_term(t):
        if isinstance(t, Const):
            return
        if isinstance(t, (Arith,)):
            walk_term(t.left)
            walk_term(t.right)
            return
        if isinstance(t, Neg):
            walk_term(t.arg)
            return
        seen.setdefault(leaf_key(t), None)

    def walk(g):
        if isinstance(g, Compare):
            walk_term(g.left)
            walk_term(g.right)
        elif isinstance(g, PropVar):
            seen.setdefault(("prop", g.name), None)
        for c in _children(g):
            walk(c)

    walk(f)
    return tuple(seen)


# -- negation normal form ----------------------------------------------------


def push_negation(f: Formula) -> Formula:
    """Eliminate negations by pushing them down to flipped comparisons.

    De Morgan over conjunction and disjunction, not-(a -> b) becomes
    a and not-b, and a negated comparison flips its operator.  The result is
    equivalent under classical two-valued semantics.  Propositional atoms
    have no comparison to flip into and are rejected.
    """
    return _push(f, False)


def _push(f: Formula, negate: bool) -> Formula:
    if isinstance(f, PropVar):
        raise FormulaError("negation cannot be pushed into a propositional atom")
    if isinstance(f, Compare):
        if negate:
            return Compare(_NEGATED_OP[f.op], f.left, f.right)
        return f
    if isinstance(f, Not):
        return _push(f.arg, not negate)
    if isinstance(f, And):
        if negate:
            return Or(_push(f.left, True), _push(f.right, True))
        return And(_push(f.left, False), _push(f.right, False))
    if isinstance(f, Or):
        if negate:
            return And(_push(f.left, True), _push(f.right, True))
        return Or(_push(f.left, False), _push(f.right, False))
    if isinstance(f, Implies):
        if negate:
            return And(_push(f.left, False), _push(f.right, True))
        return Implies(_push(f.left, False), _push(f.right, False))
    if isinstance(f, Iff):
        if negate:
            return Or(
                And(_push(f.left, False), _push(f.right, True)),
                And(_push(f.right, False), _push(f.left, True)),
            )
        return Iff(_push(f.left, False), _push(f.right, False))
    if isinstance(f, BigAnd):
        parts = tuple(_push(p, negate) for p in f.parts)
        return BigOr(parts) if negate else BigAnd(parts)
    if isinstance(f, BigOr):
        parts = tuple(_push(p, negate) for p in f.parts)
        return BigAnd(parts) if negate else BigOr(parts)
    if isinstance(f, ForallBall):
        if negate:
            raise FormulaError("cannot negate through the bounded quantifier")
        return ForallBall(f.epsilon, _push(f.body, False))
    raise FormulaError(f"unknown formula node {f!r}")


# -- exact evaluation --------------------------------------------------------


def eval_term(term: Term, env):
    """Numeric value of a term; leaves resolve through ``env`` by leaf key."""
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Arith):
        left = eval_term(term.left, env)
        right = eval_term(term.right, env)
        if term.op == "+":
            return left + right
        if term.op == "-":
            return left - right
        if term.op == "*":
            return left * right
        if np.any(np.asarray(right) == 0.0):
            raise FormulaError("division by zero in term")
        return left / right
    if isinstance(term, Neg):
        return -eval_term(term.arg, env)
    key = leaf_key(term)
    try:
        return env[key]
    except KeyError:
        raise FormulaError(f"unbound term leaf {key!r}") from None


_COMPARE_FN = {
    "<=": np.less_equal,
    "<": np.less,
    ">=": np.greater_equal,
    ">": np.greater,
    "==": np.equal,
    "!=": np.not_equal,
}


def eval_bool(f: Formula, env):
    """Exact two-valued semantics of a formula.

    Comparisons use exact arithmetic on the bound term values (no relaxation);
    propositional atoms read booleans from ``env`` under their leaf keys.
    Values may be scalars or per-sample arrays, in which case the result is a
    boolean array.
    """
    if isinstance(f, Compare):
        return _COMPARE_FN[f.op](eval_term(f.left, env), eval_term(f.right, env))
    if isinstance(f, And):
        return np.logical_and(eval_bool(f.left, env), eval_bool(f.right, env))
    if isinstance(f, Or):
        return np.logical_or(eval_bool(f.left, env), eval_bool(f.right, env))
    if isinstance(f, Not):
        return np.logical_not(eval_bool(f.arg, env))
    if isinstance(f, Implies):
        return np.logical_or(np.logical_not(eval_bool(f.left, env)), eval_bool(f.right, env))
    if isinstance(f, Iff):
        return np.equal(eval_bool(f.left, env), eval_bool(f.right, env))
    if isinstance(f, BigAnd):
        out = eval_bool(f.parts[0], env)
        for part in f.parts[1:]:
            out = np.logical_and(out, eval_bool(part, env))
        return out
    if isinstance(f, BigOr):
        out = eval_bool(f.parts[0], env)
        for part in f.parts[1:]:
            out = np.logical_or(out, eval_bool(part, env))
        return out
    if isinstance(f, PropVar):
        try:
            return env[("prop", f.name)]
        except KeyError:
            raise FormulaError(f"unbound propositional atom {f.name!r}") from None
    if isinstance(f, ForallBall):
        return eval_bool(f.body, env)
    raise FormulaError(f"unknown formula node {f!r}")
