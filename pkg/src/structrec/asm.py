"""Abstract state machines with guarded simultaneous updates.

A machine is a fixed set of guarded rules over a flat location store.
Every rule whose guard holds fires in the same step; their update sets
are merged and applied simultaneously, and two fired updates that
assign different values to one location are a clash.  A recursive
variant lets an agent spawn a child agent on a sub-input and wait for
its result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .errors import BudgetExhaustedError, MalformedSequenceError, UpdateClashError
from .terms import BIN_POS, ONE, X0, X1, delinearize, normalize_tokens

# a location is a bare name or a (name, index) pair
Location = str | tuple[str, int]


class Undef:
    """Read result for locations that were never written."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "undef"


UNDEF = Undef()


@dataclass(frozen=True)
class AsmState:
    store: dict = field(default_factory=dict)

    def get(self, name: str, index: int | None = None):
        loc = name if index is None else (name, index)
        return self.store.get(loc, UNDEF)

    def with_updates(self, updates) -> "AsmState":
        merged = dict(self.store)
        merged.update(updates)
        return AsmState(merged)


class ReadLog:
    """State view that records which location names guards inspect."""

    def __init__(self, base: AsmState):
        self.base = base
        self.reads: set[str] = set()

    def get(self, name: str, index: int | None = None):
        self.reads.add(name)
        return self.base.get(name, index)


@dataclass(frozen=True)
class GuardedRule:
    id: str
    guard: Callable
    updates: Callable  # state -> iterable of (location, value)


@dataclass(frozen=True)
class AsmMachine:
    """Immutable rule set; each run owns its own state."""

    name: str
    rules: tuple[GuardedRule, ...]
    init: Callable  # input -> AsmState
    halted: Callable  # state -> bool


def asm_step(machine: AsmMachine, state: AsmState) -> AsmState:
    """One simultaneous firing of every rule whose guard holds."""
    fired = [rule for rule in machine.rules if rule.guard(state)]
    if not fired:
        return state
    merged: dict = {}
    owner: dict = {}
    for rule in fired:
        for loc, value in rule.updates(state):
            if loc in merged and merged[loc] != value:
                raise UpdateClashError(
                    f"{machine.name}: rules {owner[loc]} and {rule.id} both write "
                    f"{loc!r} with different values"
                )
            merged[loc] = value
            owner[loc] = rule.id
    return state.with_updates(merged)


def _default_budget(machine_input) -> int:
    try:
        return 4 * len(machine_input) + 16
    except TypeError:
        return 256


def asm_run(machine: AsmMachine, machine_input, budget: int | None = None):
    """Run to a halting state; returns (state, steps taken)."""
    if budget is None:
        budget = _default_budget(machine_input)
    elif budget < 1:
        raise ValueError("budget must be at least 1")
    state = machine.init(machine_input)
    steps = 0
    while not machine.halted(state):
        if steps >= budget:
            raise BudgetExhaustedError(f"{machine.name}: no halt within {budget} steps")
        state = asm_step(machine, state)
        steps += 1
    return state, steps


def asm_log(machine: AsmMachine, machine_input, budget: int | None = None):
    """Like asm_run but returns the per-step state log: a list of
    (step index, fired rule ids, state) records including the initial state."""
    if budget is None:
        budget = _default_budget(machine_input)
    state = machine.init(machine_input)
    log = [(0, (), state)]
    steps = 0
    while not machine.halted(state):
        if steps >= budget:
            raise BudgetExhaustedError(f"{machine.name}: no halt within {budget} steps")
        fired = tuple(rule.id for rule in machine.rules if rule.guard(state))
        state = asm_step(machine, state)
        steps += 1
        log.append((steps, fired, state))
    return log


def machine_output(state: AsmState) -> list[str]:
    """Read the out[0..outn) token array."""
    n = state.get("outn")
    if n is UNDEF:
        return []
    return [state.get("out", j) for j in range(n)]


# ---------------------------------------------------------------------------
# the successor machine over constructor-order tokens


def _load_input(tokens) -> AsmState:
    toks = normalize_tokens(tokens)
    delinearize(toks, BIN_POS)  # reject malformed inputs up front
    store: dict = {("in", i): tok for i, tok in enumerate(toks)}
    store.update({"len": len(toks), "pos": 0, "outn": 0, "done": False})
    return AsmState(store)


def successor_machine() -> AsmMachine:
    """Scan the constructor-order input: each X1 head emits an X0; the
    first X0 head emits an X1 and copies the rest; a 01 head emits X0 01."""

    def head(s: AsmState):
        return s.get("in", s.get("pos"))

    def not_done(s: AsmState) -> bool:
        return s.get("done") is False

    def upd_shift(s: AsmState):
        pos, outn = s.get("pos"), s.get("outn")
        return [(("out", outn), X0), ("pos", pos + 1), ("outn", outn + 1)]

    def upd_flip(s: AsmState):
        pos, outn, n = s.get("pos"), s.get("outn"), s.get("len")
        ups = [(("out", outn), X1)]
        for j in range(pos + 1, n):
            ups.append((("out", outn + 1 + (j - pos - 1)), s.get("in", j)))
        ups.append(("outn", outn + 1 + (n - pos - 1)))
        ups.append(("done", True))
        return ups

    def upd_base(s: AsmState):
        outn = s.get("outn")
        return [(("out", outn), X0), (("out", outn + 1), ONE), ("outn", outn + 2), ("done", True)]

    rules = (
        GuardedRule("shift-ones", lambda s: not_done(s) and head(s) == X1, upd_shift),
        GuardedRule("flip-first-zero", lambda s: not_done(s) and head(s) == X0, upd_flip),
        GuardedRule("base-one", lambda s: not_done(s) and head(s) == ONE, upd_base),
    )
    return AsmMachine(
        name="successor",
        rules=rules,
        init=_load_input,
        halted=lambda s: s.get("done") is True,
    )


# ---------------------------------------------------------------------------
# recursive machines: agents that spawn children and wait


@dataclass(frozen=True)
class RasmSpec:
    """Per-agent machine plus the call rule that spawns a child agent."""

    name: str
    machine: AsmMachine
    call_guard: Callable  # state -> bool: agent needs a child result
    call_args: Callable  # state -> child input
    result_write: Callable  # (state, child output) -> updates
    output: Callable  # halted state -> output tokens


@dataclass(frozen=True)
class RasmResult:
    output: list[str]
    agent_count: int  # child agents spawned, excluding the root
    max_call_depth: int
    steps: int


def rasm_run(spec: RasmSpec, machine_input, budget: int | None = None) -> RasmResult:
    """Run the root agent; children run to completion while the caller
    waits, and their output is written back into the caller's state."""
    if budget is None:
        budget = _default_budget(machine_input)
    stats = {"agents": 0, "max_depth": 0, "steps": 0}

    def run_agent(agent_input, depth: int) -> list[str]:
        stats["max_depth"] = max(stats["max_depth"], depth)
        state = spec.machine.init(agent_input)
        steps = 0
        while not spec.machine.halted(state):
            if steps >= budget:
                raise BudgetExhaustedError(
                    f"{spec.name}: agent at depth {depth} exceeded {budget} steps"
                )
            if spec.call_guard(state):
                stats["agents"] += 1
                child_out = run_agent(spec.call_args(state), depth + 1)
                state = state.with_updates(spec.result_write(state, child_out))
            else:
                nxt = asm_step(spec.machine, state)
                if nxt == state:
                    raise BudgetExhaustedError(f"{spec.name}: agent is stuck")
                state = nxt
            steps += 1
            stats["steps"] += 1
        return spec.output(state)

    out = run_agent(machine_input, 0)
    return RasmResult(out, stats["agents"], stats["max_depth"], stats["steps"])


def successor_rasm() -> RasmSpec:
    """One agent per recursive unfolding: an X1 head spawns a child on
    the remaining tokens and prefixes the child's answer with X0."""

    def init(tokens) -> AsmState:
        toks = normalize_tokens(tokens)
        delinearize(toks, BIN_POS)
        store: dict = {("in", i): tok for i, tok in enumerate(toks)}
        store.update({"len": len(toks), "child_ready": False, "outn": 0, "done": False})
        return AsmState(store)

    def not_done(s: AsmState) -> bool:
        return s.get("done") is False

    def emit(tokens_out):
        ups = [(("out", j), tok) for j, tok in enumerate(tokens_out)]
        return ups + [("outn", len(tokens_out)), ("done", True)]

    def upd_base(s: AsmState):
        return emit([X0, ONE])

    def upd_flip(s: AsmState):
        rest = [s.get("in", i) for i in range(1, s.get("len"))]
        return emit([X1] + rest)

    def upd_wrap(s: AsmState):
        child = [s.get("child", i) for i in range(s.get("childn"))]
        return emit([X0] + child)

    rules = (
        GuardedRule("base-one", lambda s: not_done(s) and s.get("in", 0) == ONE, upd_base),
        GuardedRule("flip-zero", lambda s: not_done(s) and s.get("in", 0) == X0, upd_flip),
        GuardedRule(
            "wrap-child",
            lambda s: not_done(s) and s.get("in", 0) == X1 and s.get("child_ready") is True,
            upd_wrap,
        ),
    )
    machine = AsmMachine(
        name="successor-agent",
        rules=rules,
        init=init,
        halted=lambda s: s.get("done") is True,
    )

    def call_guard(s: AsmState) -> bool:
        return not_done(s) and s.get("in", 0) == X1 and s.get("child_ready") is False

    def call_args(s: AsmState) -> list[str]:
        return [s.get("in", i) for i in range(1, s.get("len"))]

    def result_write(s: AsmState, child_out):
        ups = [(("child", j), tok) for j, tok in enumerate(child_out)]
        return ups + [("childn", len(child_out)), ("child_ready", True)]

    return RasmSpec(
        name="successor-rasm",
        machine=machine,
        call_guard=call_guard,
        call_args=call_args,
        result_write=result_write,
        output=machine_output,
    )
