"""Small-step execution of structurally recursive programs.

A program is an ordered set of pattern-match clauses over one inductive
argument.  One step bundles unfolding the definition, applying it, and
selecting the matching clause.  Two stepping modes are provided: a
single leftmost-outermost rewrite, and a whole-frontier "level" that
rewrites every outermost redex simultaneously.

Two intermediate-state surface forms are supported: the paren form for
linear programs (emitted prefix, then the pending argument in parens)
and the flat traversal form where a pending call on a subtree renders
as UNROLL[ ... ], a pending call on a leaf renders as EMPTY, and
emitted values render bare.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FuelExhaustedError, ReductionError, RenderError
from .terms import (
    BIN_POS,
    CHAR_TREE,
    EMPTY_TOKEN,
    LPAR,
    ONE,
    PEANO,
    RPAR,
    UNROLL_CLOSE,
    UNROLL_OPEN,
    X0,
    X1,
    InductiveDef,
    Term,
    delinearize,
    linearize,
    normalize_tokens,
    tree_parse,
    tree_serialize,
)

# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Value:
    """A fully reduced constructor term."""

    term: Term


@dataclass(frozen=True)
class Ctor:
    """A constructor applied to not-yet-reduced arguments."""

    name: str
    payloads: tuple[str, ...]
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Call:
    """A pending program call; the first argument is the matched one."""

    fn: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class ListLit:
    """A literal list of output tokens (template slots may hold a Var)."""

    items: tuple


@dataclass(frozen=True)
class Concat:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Var:
    """Template placeholder; never present in a runtime expression."""

    name: str


Expr = Value | Ctor | Call | ListLit | Concat | Var


def is_normal(expr: Expr) -> bool:
    """Normal forms contain no pending calls and no unflattened concats."""
    if isinstance(expr, (Value, ListLit)):
        return True
    if isinstance(expr, Ctor):
        return all(is_normal(a) for a in expr.args)
    return False


def expr_token_count(expr: Expr) -> int:
    if isinstance(expr, Value):
        return _term_size(expr.term)
    if isinstance(expr, Ctor):
        return 1 + len(expr.payloads) + sum(expr_token_count(a) for a in expr.args)
    if isinstance(expr, Call):
        return 1 + sum(expr_token_count(a) for a in expr.args)
    if isinstance(expr, ListLit):
        return max(1, len(expr.items))
    if isinstance(expr, Concat):
        return 1 + expr_token_count(expr.left) + expr_token_count(expr.right)
    return 1


def _term_size(term: Term) -> int:
    return 1 + len(term.payloads) + sum(_term_size(c) for c in term.children)


# ---------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class Clause:
    """constructor pattern -> template; binders name the payload slots
    followed by the child slots of the matched constructor."""

    constructor: str
    binders: tuple[str, ...]
    template: Expr


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple[str, ...]
    arg_type: InductiveDef
    clauses: tuple[Clause, ...]

    def __post_init__(self) -> None:
        covered = [c.constructor for c in self.clauses]
        expected = [c.name for c in self.arg_type.constructors]
        if sorted(covered) != sorted(expected):
            raise ValueError(
                f"{self.name} must cover each constructor of {self.arg_type.name} "
                f"exactly once, got {covered}"
            )
        for clause in self.clauses:
            cdef = self.arg_type.constructor(clause.constructor)
            slots = len(cdef.payload_kinds) + cdef.recursive_arity
            if len(clause.binders) != slots:
                raise ValueError(
                    f"{self.name}.{clause.constructor} needs {slots} binders"
                )
            child_binders = set(clause.binders[len(cdef.payload_kinds) :])
            _check_structural(self.name, clause.template, child_binders)

    def clause_for(self, constructor: str) -> Clause:
        for clause in self.clauses:
            if clause.constructor == constructor:
                return clause
        raise ReductionError(f"{self.name} has no clause for {constructor!r}")


def _check_structural(name: str, template: Expr, child_binders: set[str]) -> None:
    """Recursive calls may only be applied to a child of the matched term."""
    if isinstance(template, Call):
        if template.fn == name:
            matched = template.args[0]
            if not (isinstance(matched, Var) and matched.name in child_binders):
                raise ValueError(f"{name}: recursion is not structurally decreasing")
        for arg in template.args:
            _check_structural(name, arg, child_binders)
    elif isinstance(template, Ctor):
        for arg in template.args:
            _check_structural(name, arg, child_binders)
    elif isinstance(template, Concat):
        _check_structural(name, template.left, child_binders)
        _check_structural(name, template.right, child_binders)


def _make_builtins() -> dict[str, Program]:
    s = Program(
        "s",
        ("b",),
        BIN_POS,
        (
            Clause(ONE, (), Value(Term(X0, children=(Term(ONE),)))),
            Clause(X0, ("b",), Ctor(X1, (), (Var("b"),))),
            Clause(X1, ("b",), Ctor(X0, (), (Call("s", (Var("b"),)),))),
        ),
    )
    add = Program(
        "add",
        ("n", "m"),
        PEANO,
        (
            Clause("I", (), Ctor("S", (), (Var("m"),))),
            Clause("S", ("p",), Ctor("S", (), (Call("add", (Var("p"), Var("m"))),))),
        ),
    )
    inorder = Program(
        "inorder",
        ("t",),
        CHAR_TREE,
        (
            Clause("Leaf", (), ListLit(())),
            Clause(
                "Branch",
                ("v", "l", "r"),
                Concat(
                    Concat(Call("inorder", (Var("l"),)), ListLit((Var("v"),))),
                    Call("inorder", (Var("r"),)),
                ),
            ),
        ),
    )
    preorder = Program(
        "preorder",
        ("t",),
        CHAR_TREE,
        (
            Clause("Leaf", (), ListLit(())),
            Clause(
                "Branch",
                ("v", "l", "r"),
                Concat(
                    Concat(ListLit((Var("v"),)), Call("preorder", (Var("l"),))),
                    Call("preorder", (Var("r"),)),
                ),
            ),
        ),
    )
    return {p.name: p for p in (s, add, inorder, preorder)}


_BUILTINS = _make_builtins()


def builtin_programs() -> dict[str, Program]:
    return dict(_BUILTINS)


# ---------------------------------------------------------------------------
# substitution and local normalization


def _subst(template: Expr, env: dict[str, Expr]) -> Expr:
    if isinstance(template, Var):
        return env[template.name]
    if isinstance(template, Value):
        return template
    if isinstance(template, ListLit):
        if not any(isinstance(it, Var) for it in template.items):
            return template
        items = []
        for it in template.items:
            if isinstance(it, Var):
                bound = env[it.name]
                if not isinstance(bound, str):
                    raise ReductionError(f"list slot {it.name!r} is not a payload")
                items.append(bound)
            else:
                items.append(it)
        return ListLit(tuple(items))
    if isinstance(template, Ctor):
        return _collapse_ctor(
            Ctor(template.name, template.payloads, tuple(_subst(a, env) for a in template.args))
        )
    if isinstance(template, Call):
        return Call(template.fn, tuple(_subst(a, env) for a in template.args))
    if isinstance(template, Concat):
        return Concat(_subst(template.left, env), _subst(template.right, env))
    return template


def _collapse_ctor(expr: Ctor) -> Expr:
    # bookkeeping, not a reduction step: fold a constructor over values
    # back into a plain term
    if all(isinstance(a, Value) for a in expr.args):
        return Value(Term(expr.name, expr.payloads, tuple(a.term for a in expr.args)))
    return expr


def _fireable(expr: Call) -> bool:
    return isinstance(expr.args[0], Value)


def _apply_clause(prog: Program, args: tuple[Expr, ...]) -> tuple[Expr, str]:
    matched = args[0]
    assert isinstance(matched, Value)
    term = matched.term
    clause = prog.clause_for(term.constructor)
    cdef = prog.arg_type.constructor(term.constructor)
    env: dict[str, Expr] = {}
    n_pay = len(cdef.payload_kinds)
    for name, payload in zip(clause.binders[:n_pay], term.payloads):
        env[name] = payload  # payloads bind to raw tokens
    for name, child in zip(clause.binders[n_pay:], term.children):
        env[name] = Value(child)
    for pname, arg in zip(prog.params[1:], args[1:]):
        env[pname] = arg
    return _subst(clause.template, env), f"{prog.name}/{term.constructor}"


# ---------------------------------------------------------------------------
# stepping


@dataclass(frozen=True)
class ReductionStep:
    before: Expr
    after: Expr
    paths: tuple[tuple[int, ...], ...]
    rules: tuple[str, ...]


@dataclass(frozen=True)
class Trace:
    initial: Expr
    steps: tuple[ReductionStep, ...]

    @property
    def final(self) -> Expr:
        return self.steps[-1].after if self.steps else self.initial

    def states(self) -> list[Expr]:
        return [self.initial] + [s.after for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


def _rewrite_level(expr: Expr, programs, recs: list, path: tuple[int, ...]) -> Expr:
    if isinstance(expr, (Value, ListLit)):
        return expr
    if isinstance(expr, Var):
        raise ReductionError("unbound template variable in a runtime expression")
    if isinstance(expr, Call):
        if expr.fn not in programs:
            raise ReductionError(f"unknown program: {expr.fn!r}")
        if _fireable(expr):
            result, rule = _apply_clause(programs[expr.fn], expr.args)
            recs.append((path, rule))
            return result  # redexes inside the result wait for the next level
        args = tuple(
            _rewrite_level(a, programs, recs, path + (i,)) for i, a in enumerate(expr.args)
        )
        return Call(expr.fn, args)
    if isinstance(expr, Ctor):
        args = tuple(
            _rewrite_level(a, programs, recs, path + (i,)) for i, a in enumerate(expr.args)
        )
        return _collapse_ctor(Ctor(expr.name, expr.payloads, args))
    if isinstance(expr, Concat):
        left = _rewrite_level(expr.left, programs, recs, path + (0,))
        right = _rewrite_level(expr.right, programs, recs, path + (1,))
        if isinstance(left, ListLit) and isinstance(right, ListLit):
            # literal concatenation flattens eagerly within the level
            recs.append((path, "++"))
            return ListLit(left.items + right.items)
        return Concat(left, right)
    raise ReductionError(f"unexpected expression node: {expr!r}")


def step_level(expr: Expr, programs: dict[str, Program] | None = None):
    """Rewrite every outermost redex at once; None when expr is normal."""
    programs = _BUILTINS if programs is None else programs
    if is_normal(expr):
        return None
    recs: list[tuple[tuple[int, ...], str]] = []
    after = _rewrite_level(expr, programs, recs, ())
    if not recs:
        raise ReductionError("expression is stuck: nothing to rewrite")
    step = ReductionStep(
        before=expr,
        after=after,
        paths=tuple(p for p, _ in recs),
        rules=tuple(r for _, r in recs),
    )
    return after, step


def redex_paths(expr: Expr, programs: dict[str, Program] | None = None) -> list[tuple[int, ...]]:
    """Positions where a single rewrite could fire, in traversal order."""
    programs = _BUILTINS if programs is None else programs
    found: list[tuple[int, ...]] = []

    def walk(e: Expr, path: tuple[int, ...]) -> None:
        if isinstance(e, Call):
            if _fireable(e):
                found.append(path)
                return
            for i, a in enumerate(e.args):
                walk(a, path + (i,))
        elif isinstance(e, Ctor):
            for i, a in enumerate(e.args):
                walk(a, path + (i,))
        elif isinstance(e, Concat):
            if isinstance(e.left, ListLit) and isinstance(e.right, ListLit):
                found.append(path)
                return
            walk(e.left, path + (0,))
            walk(e.right, path + (1,))

    walk(expr, ())
    return found


def _rewrite_at(expr: Expr, path: tuple[int, ...], programs) -> tuple[Expr, str]:
    if not path:
        if isinstance(expr, Call):
            if not _fireable(expr):
                raise ReductionError("call argument is not yet a value at the redex")
            return _apply_clause(programs[expr.fn], expr.args)
        if isinstance(expr, Concat):
            assert isinstance(expr.left, ListLit) and isinstance(expr.right, ListLit)
            return ListLit(expr.left.items + expr.right.items), "++"
        raise ReductionError(f"no redex at path: {expr!r}")
    i = path[0]
    if isinstance(expr, Call):
        args = list(expr.args)
        args[i], rule = _rewrite_at(args[i], path[1:], programs)
        return Call(expr.fn, tuple(args)), rule
    if isinstance(expr, Ctor):
        args = list(expr.args)
        args[i], rule = _rewrite_at(args[i], path[1:], programs)
        return _collapse_ctor(Ctor(expr.name, expr.payloads, tuple(args))), rule
    if isinstance(expr, Concat):
        left, right = expr.left, expr.right
        if i == 0:
            left, rule = _rewrite_at(left, path[1:], programs)
        else:
            right, rule = _rewrite_at(right, path[1:], programs)
        return Concat(left, right), rule
    raise ReductionError(f"bad redex path through {expr!r}")


def step_single(expr: Expr, programs: dict[str, Program] | None = None):
    """Rewrite the leftmost-outermost redex; None when expr is normal."""
    programs = _BUILTINS if programs is None else programs
    if is_normal(expr):
        return None
    paths = redex_paths(expr, programs)
    if not paths:
        raise ReductionError("expression is stuck: nothing to rewrite")
    path = paths[0]
    after, rule = _rewrite_at(expr, path, programs)
    return after, ReductionStep(before=expr, after=after, paths=(path,), rules=(rule,))


def reduce(expr: Expr, programs: dict[str, Program] | None = None, fuel: int | None = None):
    """Run step_level to normal form; returns (normal form, trace)."""
    if fuel is None:
        fuel = max(4, 2 * expr_token_count(expr))
    elif fuel < 1:
        raise ValueError("fuel must be at least 1")
    steps: list[ReductionStep] = []
    cur = expr
    while (result := step_level(cur, programs)) is not None:
        if len(steps) >= fuel:
            raise FuelExhaustedError(f"no normal form within {fuel} levels")
        cur, step = result
        steps.append(step)
    return cur, Trace(initial=expr, steps=tuple(steps))


def reduce_k(expr: Expr, k: int, programs: dict[str, Program] | None = None):
    """Apply at most k levels; returns (expr, levels actually taken)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    cur = expr
    taken = 0
    for _ in range(k):
        result = step_level(cur, programs)
        if result is None:
            break
        cur = result[0]
        taken += 1
    return cur, taken


def recursion_depth(term: Term | tuple[Term, ...], program: str = "s",
                    programs: dict[str, Program] | None = None) -> int:
    """Number of levels to reach the normal form of program applied to term."""
    programs = _BUILTINS if programs is None else programs
    args = (term,) if isinstance(term, Term) else tuple(term)
    cur: Expr = Call(program, tuple(Value(t) for t in args))
    depth = 0
    while (result := step_level(cur, programs)) is not None:
        cur = result[0]
        depth += 1
    return depth


# ---------------------------------------------------------------------------
# surface forms


def render_state_paren(expr: Expr) -> list[str]:
    """Emitted constructor prefix, then the pending argument in parens.
    The parens enclose the part the next step runs on; a normal state
    renders paren-free."""
    prefix: list[str] = []
    cur = expr
    while isinstance(cur, Ctor):
        if len(cur.args) != 1 or cur.payloads:
            raise RenderError("paren form needs a chain of unary constructors")
        prefix.append(cur.name)
        cur = cur.args[0]
    if isinstance(cur, Value):
        return prefix + linearize(cur.term)
    if isinstance(cur, Call):
        inner: list[str] = []
        for arg in cur.args:
            if not isinstance(arg, Value):
                raise RenderError("pending call arguments must be values")
            inner.extend(linearize(arg.term))
        return prefix + [LPAR] + inner + [RPAR]
    raise RenderError(f"paren form cannot render {type(cur).__name__} states")


def parse_state_paren(tokens, program: Program) -> Expr:
    """Inverse of render_state_paren for one program."""
    toks = normalize_tokens(tokens)
    if not toks:
        raise ReductionError("empty state")
    if LPAR not in toks:
        if RPAR in toks:
            raise ReductionError("unbalanced parens")
        return Value(delinearize(toks, program.arg_type))
    open_i = toks.index(LPAR)
    if toks[-1] != RPAR or toks.count(LPAR) != 1 or toks.count(RPAR) != 1:
        raise ReductionError("state must contain exactly one trailing paren group")
    prefix, inner = toks[:open_i], toks[open_i + 1 : -1]
    if not inner:
        raise ReductionError("empty paren group")
    expr: Expr = _parse_call(inner, program)
    for name in reversed(prefix):
        cdef = program.arg_type.constructor(name)
        if cdef.recursive_arity != 1 or cdef.payload_kinds:
            raise ReductionError(f"{name!r} cannot appear in an emitted prefix")
        expr = Ctor(name, (), (expr,))
    return expr


def _parse_call(tokens: list[str], program: Program) -> Call:
    # consume one term per program parameter
    args: list[Expr] = []
    rest = tokens
    for _ in program.params:
        term, used = _delinearize_prefix(rest, program.arg_type)
        args.append(Value(term))
        rest = rest[used:]
    if rest:
        raise ReductionError(f"trailing tokens in paren group: {rest}")
    return Call(program.name, tuple(args))


def _delinearize_prefix(tokens: list[str], idef: InductiveDef) -> tuple[Term, int]:
    pos = 0

    def parse() -> Term:
        nonlocal pos
        if pos >= len(tokens):
            raise ReductionError("dangling constructor in state tokens")
        cdef = idef.constructor(tokens[pos])
        pos += 1
        n_pay = len(cdef.payload_kinds)
        payloads = tuple(tokens[pos : pos + n_pay])
        if len(payloads) != n_pay:
            raise ReductionError(f"{cdef.name} is missing payload tokens")
        pos += n_pay
        children = tuple(parse() for _ in range(cdef.recursive_arity))
        return Term(cdef.name, payloads, children)

    term = parse()
    return term, pos


def render_state_unroll(expr: Expr) -> list[str]:
    """Flat traversal state: pending subtree calls bracketed, pending leaf
    calls as EMPTY, emitted values bare, in left-to-right order."""
    out: list[str] = []

    def emit(e: Expr) -> None:
        if isinstance(e, Concat):
            emit(e.left)
            emit(e.right)
            return
        if isinstance(e, ListLit):
            out.extend(e.items)
            return
        if isinstance(e, Call):
            arg = e.args[0]
            if not isinstance(arg, Value):
                raise RenderError("pending call argument must be a value")
            if arg.term.constructor == "Leaf":
                out.append(EMPTY_TOKEN)
            else:
                out.append(UNROLL_OPEN)
                out.extend(tree_serialize(arg.term))
                out.append(UNROLL_CLOSE)
            return
        raise RenderError(f"traversal form cannot render {type(e).__name__} states")

    emit(expr)
    return out


def parse_state_unroll(tokens, program: Program) -> Expr:
    """Inverse of render_state_unroll for one traversal program."""
    toks = normalize_tokens(tokens)
    if not toks:
        raise ReductionError("empty state")
    items: list[Expr] = []
    run: list[str] = []
    pos = 0

    def flush() -> None:
        if run:
            items.append(ListLit(tuple(run)))
            run.clear()

    while pos < len(toks):
        tok = toks[pos]
        if tok == EMPTY_TOKEN:
            flush()
            items.append(Call(program.name, (Value(Term("Leaf")),)))
            pos += 1
        elif tok == UNROLL_OPEN:
            flush()
            try:
                close = toks.index(UNROLL_CLOSE, pos + 1)
            except ValueError:
                raise ReductionError("unterminated UNROLL group") from None
            tree = tree_parse(toks[pos + 1 : close])
            items.append(Call(program.name, (Value(tree),)))
            pos = close + 1
        elif tok == UNROLL_CLOSE:
            raise ReductionError("unmatched ] in state")
        else:
            run.append(tok)
            pos += 1
    flush()
    if not items:
        raise ReductionError("empty state")
    expr = items[0]
    for item in items[1:]:
        expr = Concat(expr, item)
    return expr


PAREN = "paren"
ARROW = "arrow"


def render_trace(trace: Trace, style: str) -> str:
    """Join trace states with ' = ' (paren style) or ' -> ' (arrow style)."""
    if style == PAREN:
        rendered = [" ".join(render_state_paren(s)) for s in trace.states()]
        return " = ".join(rendered)
    if style == ARROW:
        rendered = [" ".join(render_state_unroll(s)) for s in trace.states()]
        return " -> ".join(rendered)
    raise RenderError(f"unknown trace style: {style!r}")
