"""Core model syntax: names, expressions, equations, slider directives.

Everything here is immutable after construction and safe to share between
concurrent simulation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class StockflowError(Exception):
    """Base class for all errors raised by this package."""


class InvalidNameError(StockflowError):
    pass


# Variable names are matched case-insensitively with internal whitespace
# collapsed, so "TRAINED  TESTERS" and "trained testers" are the same name.
@dataclass(frozen=True)
class NameKey:
    canonical: str = field(compare=False)
    key: str

    def __str__(self) -> str:
        return self.canonical


def normalize_name(raw: str) -> NameKey:
    """Build a NameKey from raw spelling; raises InvalidNameError if blank."""
    canonical = raw.strip()
    if not canonical:
        raise InvalidNameError("variable name is empty")
    key = " ".join(canonical.lower().split())
    return NameKey(canonical=canonical, key=key)


# The simulation clock; may be read but never defined by an equation.
TIME_KEY = "time"

# Control constants configure the run itself rather than the model state.
CONTROL_KEYS = ("initial time", "final time", "time step", "saveper")


class BuiltinKind(Enum):
    INTEG = "INTEG"
    SMOOTH = "SMOOTH"
    SMOOTHI = "SMOOTHI"
    DELAY_FIXED = "DELAY FIXED"
    STEP = "STEP"
    RANDOM_UNIFORM = "RANDOM UNIFORM"
    IF_THEN_ELSE = "IF THEN ELSE"
    MAX = "MAX"
    MIN = "MIN"

    @property
    def keyword(self) -> str:
        return self.value

    @property
    def arity(self) -> int:
        return _ARITY[self]


_ARITY = {
    BuiltinKind.INTEG: 2,
    BuiltinKind.SMOOTH: 2,
    BuiltinKind.SMOOTHI: 3,
    BuiltinKind.DELAY_FIXED: 3,
    BuiltinKind.STEP: 2,
    BuiltinKind.RANDOM_UNIFORM: 3,
    BuiltinKind.IF_THEN_ELSE: 3,
    BuiltinKind.MAX: 2,
    BuiltinKind.MIN: 2,
}

# Builtins whose value within a step comes from stored state rather than
# from their arguments; reads of these break same-step dependency cycles.
STATEFUL_BUILTINS = frozenset(
    {
        BuiltinKind.INTEG,
        BuiltinKind.SMOOTH,
        BuiltinKind.SMOOTHI,
        BuiltinKind.DELAY_FIXED,
        BuiltinKind.RANDOM_UNIFORM,
    }
)


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class NumberLit(Expr):
    value: float


@dataclass(frozen=True)
class VarRef(Expr):
    name: NameKey


@dataclass(frozen=True)
class Unary(Expr):
    """Numeric negation; the only unary operator in the language."""

    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # one of + - * /
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Compare(Expr):
    """Boolean comparison; legal only as the condition of IF THEN ELSE."""

    op: str  # one of < <= > >= = <>
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Call(Expr):
    builtin: BuiltinKind
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Equation:
    name: NameKey
    rhs: Expr
    source_line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class SliderDirective:
    target: NameKey
    min: float
    max: float
    step: float


@dataclass(frozen=True)
class ModelAst:
    """A parsed model: equations in file order plus slider directives."""

    equations: tuple[Equation, ...]
    directives: tuple[SliderDirective, ...] = ()
    model_id: str = ""

    def equation_for(self, key: str) -> Equation | None:
        for eq in self.equations:
            if eq.name.key == key:
                return eq
        return None


def expr_free_vars(e: Expr) -> set[NameKey]:
    """Every variable name referenced anywhere in e, including call arguments."""
    out: set[NameKey] = set()
    _collect_vars(e, out)
    return out


def _collect_vars(e: Expr, out: set[NameKey]) -> None:
    if isinstance(e, VarRef):
        out.add(e.name)
    elif isinstance(e, Unary):
        _collect_vars(e.operand, out)
    elif isinstance(e, (Binary, Compare)):
        _collect_vars(e.lhs, out)
        _collect_vars(e.rhs, out)
    elif isinstance(e, Call):
        for arg in e.args:
            _collect_vars(arg, out)
