"""Data domains, exact data values, register valuations and quantifier-free tests.

Values are exact nonnegative rationals (`fractions.Fraction`), never floats:
the decision procedures depend on exact order and equality.  A valuation maps
register names to values; tests are boolean combinations of order/equality
atoms over registers, the current input letter and the constant 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Mapping, Union

DataValue = Fraction

Valuation = Mapping[str, Fraction]


class Domain(str, Enum):
    """The supported data domains.

    ``int-order`` has no native engine: it is compiled onto ``nat-order``
    (see :mod:`regstream.interp`).
    """

    EQ_NAT = "eq-nat"
    DENSE_Q = "dense-q"
    NAT_ORDER = "nat-order"
    INT_ORDER = "int-order"

    @property
    def has_order(self) -> bool:
        return self is not Domain.EQ_NAT

    @property
    def integral(self) -> bool:
        """Whether values are restricted to naturals (denominator 1)."""
        return self in (Domain.EQ_NAT, Domain.NAT_ORDER, Domain.INT_ORDER)


class DomainError(ValueError):
    """A value or test is not admissible in the given domain."""


class StructuralError(ValueError):
    """A test mentions a register that is not bound."""


class Ordering(str, Enum):
    LT = "LT"
    EQ = "EQ"
    GT = "GT"


# --------------------------------------------------------------------------
# Test ASTs


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class Input:
    """The current input letter (written ``*`` in the DSL)."""


@dataclass(frozen=True)
class Zero:
    pass


Term = Union[Reg, Input, Zero]


@dataclass(frozen=True)
class Atom:
    op: str  # '<' or '='
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.op not in ("<", "="):
            raise ValueError(f"bad atom operator {self.op!r}")


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: "Test"


@dataclass(frozen=True)
class BoolConst:
    value: bool


Test = Union[Atom, And, Or, Not, BoolConst]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def atoms_of(test: Test) -> Iterator[Atom]:
    if isinstance(test, Atom):
        yield test
    elif isinstance(test, (And, Or)):
        for item in test.items:
            yield from atoms_of(item)
    elif isinstance(test, Not):
        yield from atoms_of(test.item)


def registers_of(test: Test) -> frozenset:
    regs = set()
    for atom in atoms_of(test):
        for term in (atom.left, atom.right):
            if isinstance(term, Reg):
                regs.add(term.name)
    return frozenset(regs)


def mentions_input(test: Test) -> bool:
    return any(
        isinstance(term, Input)
        for atom in atoms_of(test)
        for term in (atom.left, atom.right)
    )


def validate_test(test: Test, registers: frozenset, domain: Domain) -> list:
    """Structural diagnostics for a test; empty list means admissible."""
    problems = []
    for atom in atoms_of(test):
        if atom.op == "<" and domain is Domain.EQ_NAT:
            problems.append("order atom '<' is not available in domain eq-nat")
        for term in (atom.left, atom.right):
            if isinstance(term, Reg) and term.name not in registers:
                problems.append(f"unknown register {term.name!r} in test")
    return problems


def _term_value(term: Term, val: Valuation, input_value: Fraction) -> Fraction:
    if isinstance(term, Reg):
        try:
            return val[term.name]
        except KeyError:
            raise StructuralError(f"register {term.name!r} is not bound") from None
    if isinstance(term, Input):
        return input_value
    return Fraction(0)


def eval_test(
    test: Test,
    val: Valuation,
    input_value: Fraction,
    domain: Domain | None = None,
) -> bool:
    """Evaluate a quantifier-free test with the input symbol bound to ``input_value``."""
    if isinstance(test, BoolConst):
        return test.value
    if isinstance(test, Atom):
        if test.op == "<" and domain is Domain.EQ_NAT:
            raise DomainError("order atom '<' is not available in domain eq-nat")
        a = _term_value(test.left, val, input_value)
        b = _term_value(test.right, val, input_value)
        return a < b if test.op == "<" else a == b
    if isinstance(test, And):
        return all(eval_test(item, val, input_value, domain) for item in test.items)
    if isinstance(test, Or):
        return any(eval_test(item, val, input_value, domain) for item in test.items)
    if isinstance(test, Not):
        return not eval_test(test.item, val, input_value, domain)
    raise TypeError(f"not a test: {test!r}")


# --------------------------------------------------------------------------
# Value literals

_NAT_RE = re.compile(r"^[0-9]+$")
_RAT_RE = re.compile(r"^([0-9]+)/([0-9]+)$")


def parse_value(text: str, domain: Domain) -> Fraction:
    """Parse a value literal: NAT := [0-9]+ ; RAT := NAT "/" NAT (denominator > 0)."""
    text = text.strip()
    if _NAT_RE.match(text):
        return Fraction(int(text))
    m = _RAT_RE.match(text)
    if m:
        if domain.integral:
            raise DomainError(f"fractional literal {text!r} not allowed in {domain.value}")
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num, den)
    raise ValueError(f"malformed value literal {text!r}")


def render_value(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def compare(a: Fraction, b: Fraction) -> Ordering:
    if a < b:
        return Ordering.LT
    if a == b:
        return Ordering.EQ
    return Ordering.GT


def check_value(value: Fraction, domain: Domain) -> Fraction:
    if value < 0:
        raise DomainError(f"negative value {value}")
    if domain.integral and value.denominator != 1:
        raise DomainError(f"non-integer value {value} in {domain.value}")
    return value
