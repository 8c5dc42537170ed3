"""Syntax and concrete operational semantics of register transducers/automata.

A transducer has finite control, a finite register set, and guarded
transitions that may store the input (``set``), keep a register, or store an
arbitrary nondeterministically chosen value (``guess``).  Each transition
emits a finite word of register contents; emitted letters are the
post-update register values.  Acceptance is Buchi: infinitely many visits to
accepting states.

Transducers are immutable after construction and every stepping function is
pure, so they are safe to share across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .domain import (
    And,
    Atom,
    Domain,
    Input,
    Not,
    Reg,
    Test,
    eval_test,
    validate_test,
)


@dataclass(frozen=True)
class Transition:
    source: str
    test: Test
    target: str
    set_regs: frozenset = frozenset()
    guess_regs: frozenset = frozenset()
    output: tuple = ()

    def update_of(self, reg: str) -> str:
        if reg in self.set_regs:
            return "set"
        if reg in self.guess_regs:
            return "guess"
        return "keep"


class ResourceCapError(RuntimeError):
    """A bounded exploration hit its cap; partial results are attached."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Transducer:
    states: tuple
    registers: tuple
    initial: str
    accepting: frozenset
    transitions: tuple
    domain: Domain
    is_automaton: bool = False
    require_infinite_output: bool = True
    init_vals: tuple = ()  # ((reg, Fraction), ...); empty means all-zero
    name: str = ""

    @property
    def max_output_len(self) -> int:
        try:
            return self._L  # type: ignore[attr-defined]
        except AttributeError:
            value = max((len(t.output) for t in self.transitions), default=0)
            object.__setattr__(self, "_L", value)
            return value

    def initial_valuation(self) -> dict:
        val = {r: Fraction(0) for r in self.registers}
        for reg, value in self.init_vals:
            val[reg] = value
        return val

    def out_transitions(self, state) -> tuple:
        try:
            table = self._out_table  # type: ignore[attr-defined]
        except AttributeError:
            table = {}
            for i, t in enumerate(self.transitions):
                table.setdefault(t.source, []).append((i, t))
            table = {q: tuple(v) for q, v in table.items()}
            object.__setattr__(self, "_out_table", table)
        return table.get(state, ())

    def pinned_registers(self) -> dict:
        """Registers never written by any transition, with their initial values.

        These behave like named constants; the symbolic layer pins them.
        """
        written = set()
        for t in self.transitions:
            written |= set(t.set_regs) | set(t.guess_regs)
        init = self.initial_valuation()
        return {r: init[r] for r in self.registers if r not in written and init[r] != 0}


@dataclass(frozen=True)
class Configuration:
    state: str
    val: tuple  # values aligned with the transducer's register tuple

    def as_dict(self, t: Transducer) -> dict:
        return dict(zip(t.registers, self.val))


def make_config(t: Transducer, state: str, val: Mapping[str, Fraction]) -> Configuration:
    return Configuration(state, tuple(val[r] for r in t.registers))


def initial_config(t: Transducer) -> Configuration:
    return make_config(t, t.initial, t.initial_valuation())


@dataclass(frozen=True)
class StepResult:
    transition_index: int
    config: Configuration
    output: tuple
    guessed: tuple  # ((reg, value), ...)


def validate(t: Transducer) -> list:
    """Structural diagnostics; an empty list means the machine is well formed."""
    problems = []
    states = set(t.states)
    regs = frozenset(t.registers)
    if t.initial not in states:
        problems.append(f"initial state {t.initial!r} not declared")
    for q in t.accepting:
        if q not in states:
            problems.append(f"accepting state {q!r} not declared")
    if len(set(t.registers)) != len(t.registers):
        problems.append("duplicate register names")
    for i, tr in enumerate(t.transitions):
        where = f"transition #{i} ({tr.source}->{tr.target})"
        if tr.source not in states:
            problems.append(f"{where}: unknown source state")
        if tr.target not in states:
            problems.append(f"{where}: unknown target state")
        for msg in validate_test(tr.test, regs, t.domain):
            problems.append(f"{where}: {msg}")
        for r in tr.set_regs | tr.guess_regs:
            if r not in regs:
                problems.append(f"{where}: unknown register {r!r} in update")
        if tr.set_regs & tr.guess_regs:
            problems.append(f"{where}: register both set and guessed")
        for r in tr.output:
            if r not in regs:
                problems.append(f"{where}: unknown register {r!r} in output")
        if t.is_automaton and tr.output:
            problems.append(f"{where}: automaton transition has nonempty output")
    for reg, value in t.init_vals:
        if reg not in regs:
            problems.append(f"unknown register {reg!r} in initial values")
        if value < 0:
            problems.append(f"negative initial value for {reg!r}")
    return problems


def apply_transition(
    t: Transducer,
    config: Configuration,
    index: int,
    input_value: Fraction,
    guesses: Mapping[str, Fraction] | None = None,
) -> StepResult | None:
    """Apply one specific transition; None when its test fails.

    This is the replay primitive: witnesses record (index, input, guesses)
    triples and are validated by re-running them through here.
    """
    tr = t.transitions[index]
    if tr.source != config.state:
        return None
    val = config.as_dict(t)
    if not eval_test(tr.test, val, input_value, t.domain):
        return None
    guesses = guesses or {}
    if set(guesses) != set(tr.guess_regs):
        return None
    new_val = dict(val)
    for r in tr.set_regs:
        new_val[r] = input_value
    for r, v in guesses.items():
        new_val[r] = v
    out = tuple(new_val[r] for r in tr.output)
    cfg = make_config(t, tr.target, new_val)
    return StepResult(index, cfg, out, tuple(sorted(guesses.items())))


def concrete_successors(
    t: Transducer,
    config: Configuration,
    input_value: Fraction,
    guess_pool: Iterable[Fraction] = (),
) -> list:
    """All one-step successors, enumerating guesses from a finite pool.

    The true successor set is infinite when a transition guesses; the pool
    parameterizes an executable fragment (symbolic completeness lives in
    :mod:`regstream.symbolic`).  Enumeration order is deterministic:
    transition order, then pool order per guessed register.
    """
    pool = tuple(guess_pool)
    results = []
    for index, tr in t.out_transitions(config.state):
        if not eval_test(tr.test, config.as_dict(t), input_value, t.domain):
            continue
        guess_regs = sorted(tr.guess_regs, key=t.registers.index)
        if guess_regs and not pool:
            raise ValueError("guess pool must be nonempty for guessing transitions")
        combos = itertools.product(pool, repeat=len(guess_regs)) if guess_regs else [()]
        for combo in combos:
            guesses = dict(zip(guess_regs, combo))
            step = apply_transition(t, config, index, input_value, guesses)
            if step is not None:
                results.append(step)
    return results


@dataclass
class RunExploration:
    endpoints: list  # (Configuration, output tuple, accepting-visit count)
    complete: bool


def run_bounded(
    t: Transducer,
    word: Sequence[Fraction],
    guess_pool: Iterable[Fraction] = (),
    max_branches: int = 200_000,
    strict: bool = True,
) -> RunExploration:
    """Exhaustively run a finite word, returning the set of run endpoints.

    Guesses come from the finite pool.  The accepting-visit count includes
    the initial configuration.  On cap overflow, raises
    :class:`ResourceCapError` (strict) or flags the result incomplete.
    """
    start = initial_config(t)
    frontier = {(start, (), 1 if start.state in t.accepting else 0)}
    explored = 0
    complete = True
    for letter in word:
        next_frontier = set()
        for config, out, acc in frontier:
            for step in concrete_successors(t, config, letter, guess_pool):
                nacc = acc + (1 if step.config.state in t.accepting else 0)
                next_frontier.add((step.config, out + step.output, nacc))
                explored += 1
                if explored > max_branches:
                    result = RunExploration(sorted(next_frontier, key=_endpoint_key), False)
                    if strict:
                        raise ResourceCapError("run exploration cap exceeded", result)
                    return result
        frontier = next_frontier
    return RunExploration(sorted(frontier, key=_endpoint_key), complete)


def _endpoint_key(endpoint):
    config, out, acc = endpoint
    return (str(config.state), config.val, out, acc)


# --------------------------------------------------------------------------
# Derived machines


def with_infinite_output(t: Transducer) -> Transducer:
    """One-bit product restricting acceptance to runs with infinite output.

    The bit records whether some output was produced since the last
    accepting visit; accepting states of the product are (q in F, bit set).
    """
    if t.is_automaton or not t.require_infinite_output:
        return t

    def nm(q, b):
        return f"{q}·{b}"

    states = tuple(nm(q, b) for q in t.states for b in (0, 1))
    accepting = frozenset(nm(q, 1) for q in t.accepting)
    transitions = []
    for tr in t.transitions:
        emits = 1 if tr.output else 0
        for b in (0, 1):
            src = nm(tr.source, b)
            src_accepting = tr.source in t.accepting and b == 1
            nb = emits if src_accepting else (b | emits)
            transitions.append(replace(tr, source=src, target=nm(tr.target, nb)))
    return Transducer(
        states=states,
        registers=t.registers,
        initial=nm(t.initial, 0),
        accepting=accepting,
        transitions=tuple(transitions),
        domain=t.domain,
        is_automaton=False,
        require_infinite_output=False,
        init_vals=t.init_vals,
        name=t.name + "+inf" if t.name else "",
    )


MAX_REG = "r_seen_max"


def instrument_max_register(t: Transducer) -> Transducer:
    """Add a register tracking the maximal input value read so far.

    Each transition is split on input <= max versus input > max; the new
    register is never read by original tests or outputs, so the recognized
    relation is unchanged.
    """
    reg = MAX_REG
    while reg in t.registers:
        reg += "_"
    star_le = Not(Atom("<", Reg(reg), Input()))
    star_gt = Atom("<", Reg(reg), Input())
    transitions = []
    for tr in t.transitions:
        transitions.append(replace(tr, test=And((tr.test, star_le))))
        transitions.append(
            replace(tr, test=And((tr.test, star_gt)), set_regs=tr.set_regs | {reg})
        )
    return replace(
        t,
        registers=t.registers + (reg,),
        transitions=tuple(transitions),
        name=t.name + "+max" if t.name else "",
    )
