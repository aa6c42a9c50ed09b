"""Exact-sequence scoring, error breakdowns, and trace validation.

Gold records are matched to predictions by id.  Accuracy is exact token
equality of the first candidate; Hit@k admits any of the first k
candidates.  Rendered traces are replayed against the engine one
transition at a time, and the first offending state is labeled with an
error category.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EvalError, IdMismatchError, MalformedSequenceError, ReductionError
from .reduction import (
    ARROW,
    PAREN,
    Call,
    Program,
    Value,
    builtin_programs,
    parse_state_paren,
    parse_state_unroll,
    render_state_paren,
    render_state_unroll,
    step_level,
    step_single,
)
from .terms import (
    EMPTY_TOKEN,
    LPAR,
    RPAR,
    UNROLL_CLOSE,
    UNROLL_OPEN,
    delinearize,
    normalize_tokens,
    tokenize,
    tree_parse,
)

ILLEGAL_RULE = "illegal-rule"
TOKEN_MUTATION = "token-mutation"
MISSING_TERMINATION = "missing-termination"
PREMATURE_TERMINATION = "premature-termination"
RULE_ORDER_SWAP = "rule-order-swap"
MALFORMED_STATE = "malformed-state"

TRACE_ERRORS = (
    ILLEGAL_RULE,
    TOKEN_MUTATION,
    MISSING_TERMINATION,
    PREMATURE_TERMINATION,
    RULE_ORDER_SWAP,
    MALFORMED_STATE,
)


# ---------------------------------------------------------------------------
# predictions and pairing


@dataclass
class PredictionRecord:
    id: str
    candidates: list[list[str]]


def read_predictions(path) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvalError(f"{path}:{lineno}: bad JSON ({exc})") from None
            if "id" not in obj or "candidates" not in obj:
                raise EvalError(f"{path}:{lineno}: need id and candidates fields")
            candidates = []
            for cand in obj["candidates"]:
                if isinstance(cand, str):
                    candidates.append(tokenize(cand))
                else:
                    candidates.append(normalize_tokens(cand))
            records.append(PredictionRecord(id=str(obj["id"]), candidates=candidates))
    return records


def _pair(predictions, gold):
    """Match predictions to gold records by id, strictly."""
    by_id: dict[str, PredictionRecord] = {}
    for pred in predictions:
        if pred.id in by_id:
            raise IdMismatchError(f"duplicate prediction id: {pred.id}")
        by_id[pred.id] = pred
    gold_ids = set()
    pairs = []
    for record in gold:
        rid = str(record.id)
        if rid in gold_ids:
            raise IdMismatchError(f"duplicate gold id: {rid}")
        gold_ids.add(rid)
        if rid not in by_id:
            raise IdMismatchError(f"no prediction for gold id: {rid}")
        pairs.append((by_id[rid], record))
    extra = set(by_id) - gold_ids
    if extra:
        raise IdMismatchError(f"predictions for unknown ids: {sorted(extra)[:5]}")
    return pairs


def _target_tokens(record) -> list[str]:
    return normalize_tokens(record.target)


def exact_match(predictions, gold) -> float:
    """Fraction whose first candidate equals the target exactly."""
    pairs = _pair(predictions, gold)
    if not pairs:
        return 0.0
    hits = sum(
        1
        for pred, record in pairs
        if pred.candidates and pred.candidates[0] == _target_tokens(record)
    )
    return hits / len(pairs)


def hit_at_k(predictions, gold, k: int) -> float:
    """Fraction whose target appears among the first k candidates."""
    if k < 1:
        raise ValueError("k must be at least 1")
    pairs = _pair(predictions, gold)
    if not pairs:
        return 0.0
    hits = sum(
        1
        for pred, record in pairs
        if _target_tokens(record) in pred.candidates[:k]
    )
    return hits / len(pairs)


# ---------------------------------------------------------------------------
# breakdowns and failure signatures


@dataclass(frozen=True)
class BreakdownRow:
    bucket: object
    n: int
    correct: int
    accuracy: float


_KEY_ALIASES = {"bit_length": "bits", "tree_depth": "depth"}
_META_KEYS = ("value", "bits", "depth", "edge_group", "pad_len", "weight")


def _meta_value(record, key: str):
    meta = record.meta
    if not hasattr(meta, key):
        raise EvalError(f"unknown breakdown key: {key!r}")
    value = getattr(meta, key)
    if value is None:
        raise EvalError(f"record {record.id} has no {key!r} metadata")
    return value


def breakdown(predictions, gold, key: str) -> list[BreakdownRow]:
    """First-candidate accuracy per metadata bucket; empty buckets are
    simply absent."""
    key = _KEY_ALIASES.get(key, key)
    pairs = _pair(predictions, gold)
    totals: dict = {}
    correct: dict = {}
    for pred, record in pairs:
        bucket = _meta_value(record, key)
        totals[bucket] = totals.get(bucket, 0) + 1
        if pred.candidates and pred.candidates[0] == _target_tokens(record):
            correct[bucket] = correct.get(bucket, 0) + 1
    rows = []
    for bucket in sorted(totals):
        n = totals[bucket]
        c = correct.get(bucket, 0)
        rows.append(BreakdownRow(bucket=bucket, n=n, correct=c, accuracy=c / n))
    return rows


def failure_signature(prediction, gold_target) -> str:
    """Classify a wrong prediction against its target."""
    pred = list(prediction)
    target = list(gold_target)
    if pred == target:
        raise ValueError("failure_signature needs a wrong prediction")
    if len(pred) == len(target):
        return "wrong-token"
    if len(pred) == len(target) - 1 and _is_single_deletion(pred, target):
        return "one-token-short"
    if len(pred) == len(target) + 1 and _is_single_deletion(target, pred):
        return "one-token-long"
    return "other"


def _is_single_deletion(short, long) -> bool:
    # short == long minus exactly one position
    i = 0
    while i < len(short) and short[i] == long[i]:
        i += 1
    return short[i:] == long[i + 1 :]


def _one_edit_apart(a, b) -> bool:
    if a == b:
        return False
    if len(a) == len(b):
        return sum(1 for x, y in zip(a, b) if x != y) == 1
    if abs(len(a) - len(b)) != 1:
        return False
    short, long = (a, b) if len(a) < len(b) else (b, a)
    return _is_single_deletion(short, long)


# ---------------------------------------------------------------------------
# trace validation


@dataclass(frozen=True)
class TraceJudgment:
    valid: bool
    first_bad_step: int | None = None
    error: str | None = None


_PAREN_MARKERS = {LPAR, RPAR}
_ARROW_MARKERS = {UNROLL_OPEN, UNROLL_CLOSE, EMPTY_TOKEN}


def _trace_task(task: str):
    programs = builtin_programs()
    if task == "successor":
        return programs["s"], PAREN
    if task in ("inorder", "preorder"):
        return programs[task], ARROW
    raise EvalError(f"no trace validator for task {task!r}")


def _swap_program(task: str) -> Program:
    # the classic misreading applies the traversal's pieces in the other
    # root-vs-subtree order, which is exactly the sibling traversal
    programs = builtin_programs()
    return programs["preorder"] if task == "inorder" else programs["inorder"]


def _has_pending(tokens, style: str) -> bool:
    markers = _PAREN_MARKERS if style == PAREN else _ARROW_MARKERS
    return any(tok in markers for tok in tokens)


def _stripped(tokens) -> list[str]:
    drop = {LPAR, RPAR, UNROLL_OPEN, UNROLL_CLOSE}
    return [tok for tok in tokens if tok not in drop]


def validate_trace(text: str, task: str, input_tokens=None) -> TraceJudgment:
    """Replay a rendered trace transition by transition.

    Returns the index of the first state that is not a legal successor of
    the previous one, labeled with one of the TRACE_ERRORS categories.
    first_bad_step 0 means the initial state itself is bad.
    """
    program, style = _trace_task(task)
    separator = "=" if style == PAREN else "->"
    states = [part.strip() for part in text.split(separator)]
    if any(not part for part in states):
        bad = next(i for i, part in enumerate(states) if not part)
        return TraceJudgment(False, bad, MALFORMED_STATE)
    state_tokens = [tokenize(part) for part in states]

    if style == PAREN:
        parse = lambda toks: parse_state_paren(toks, program)
        render = render_state_paren
        step = step_single
    else:
        parse = lambda toks: parse_state_unroll(toks, program)
        render = render_state_unroll
        step = step_level

    def try_parse(i):
        try:
            return parse(state_tokens[i])
        except (ReductionError, MalformedSequenceError):
            return None

    cur = try_parse(0)
    if cur is None:
        return TraceJudgment(False, 0, MALFORMED_STATE)
    if input_tokens is not None:
        expected0 = render(_initial_state(program, style, input_tokens))
        if state_tokens[0] != expected0:
            return TraceJudgment(False, 0, TOKEN_MUTATION)

    last = len(states) - 1
    for i in range(last):
        result = step(cur, {program.name: program})
        got = state_tokens[i + 1]
        if result is None:
            # the reduction already finished, yet the trace continues
            return TraceJudgment(False, i + 1, MISSING_TERMINATION)
        expected_expr = result[0]
        expected = render(expected_expr)
        if got == expected:
            cur = expected_expr
            continue
        return TraceJudgment(False, i + 1, _classify(
            task, style, program, state_tokens, i, expected, is_last=(i + 1 == last)
        ))

    if _has_pending(state_tokens[last], style):
        return TraceJudgment(False, last, MISSING_TERMINATION)
    return TraceJudgment(True)


def _initial_state(program: Program, style: str, input_tokens):
    toks = normalize_tokens(input_tokens)
    if style == PAREN:
        term = delinearize(toks, program.arg_type)
    else:
        term = tree_parse(toks)
    return Call(program.name, (Value(term),))


def _classify(task, style, program, state_tokens, i, expected, is_last) -> str:
    got = state_tokens[i + 1]
    try:
        if style == PAREN:
            parse_state_paren(got, program)
        else:
            parse_state_unroll(got, program)
    except (ReductionError, MalformedSequenceError):
        return MALFORMED_STATE
    if style == ARROW:
        swapped = _swap_program(task)
        try:
            alt_cur = parse_state_unroll(state_tokens[i], swapped)
            alt = step_level(alt_cur, {swapped.name: swapped})
            if alt is not None and render_state_unroll(alt[0]) == got:
                return RULE_ORDER_SWAP
        except (ReductionError, MalformedSequenceError):
            pass
    if is_last and not _has_pending(got, style) and _has_pending(expected, style):
        return PREMATURE_TERMINATION
    if _one_edit_apart(_stripped(got), _stripped(expected)):
        return TOKEN_MUTATION
    return ILLEGAL_RULE


@dataclass
class TraceValidationReport:
    n: int = 0
    valid: int = 0
    label_counts: dict = field(default_factory=dict)

    def add(self, judgment: TraceJudgment) -> None:
        self.n += 1
        if judgment.valid:
            self.valid += 1
        else:
            self.label_counts[judgment.error] = self.label_counts.get(judgment.error, 0) + 1

    def render(self, fmt: str = "text") -> str:
        if fmt == "json":
            doc = {"n": self.n, "valid": self.valid, "invalid": self.n - self.valid,
                   "labels": dict(sorted(self.label_counts.items()))}
            return json.dumps(doc, indent=2, sort_keys=True)
        if fmt != "text":
            raise ValueError(f"unknown report format: {fmt!r}")
        lines = [f"traces {self.n}, valid {self.valid}, invalid {self.n - self.valid}"]
        for label in sorted(self.label_counts):
            lines.append(f"  {label}: {self.label_counts[label]}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# reports


@dataclass
class MetricsReport:
    n: int
    exact: float
    hits: dict
    breakdowns: dict
    failures: dict


def compute_metrics(predictions, gold, ks=(1, 3, 5), breakdown_keys=()) -> MetricsReport:
    pairs = _pair(predictions, gold)
    report = MetricsReport(
        n=len(pairs),
        exact=exact_match(predictions, gold),
        hits={k: hit_at_k(predictions, gold, k) for k in sorted(set(ks))},
        breakdowns={key: breakdown(predictions, gold, key) for key in breakdown_keys},
        failures={},
    )
    for pred, record in pairs:
        first = pred.candidates[0] if pred.candidates else []
        target = _target_tokens(record)
        if first != target:
            label = failure_signature(first, target)
            report.failures[label] = report.failures.get(label, 0) + 1
    return report


def render_report(report: MetricsReport, fmt: str = "text") -> str:
    """Deterministic text table or JSON document."""
    if fmt == "json":
        doc = {
            "n": report.n,
            "exact_match": report.exact,
            "hits": {f"hit@{k}": v for k, v in sorted(report.hits.items())},
            "breakdowns": {
                key: [
                    {"bucket": row.bucket, "n": row.n, "correct": row.correct,
                     "accuracy": row.accuracy}
                    for row in rows
                ]
                for key, rows in sorted(report.breakdowns.items())
            },
            "failures": dict(sorted(report.failures.items())),
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    if fmt != "text":
        raise ValueError(f"unknown report format: {fmt!r}")
    lines = [f"n            {report.n}", f"exact match  {report.exact:.4f}"]
    for k in sorted(report.hits):
        lines.append(f"Hit@{k:<9}{report.hits[k]:.4f}")
    for key, rows in sorted(report.breakdowns.items()):
        lines.append(f"breakdown by {key}")
        lines.append(f"  {'bucket':<10}{'n':>6}  acc")
        for row in rows:
            lines.append(f"  {str(row.bucket):<10}{row.n:>6}  {row.accuracy:.4f}")
    if report.failures:
        lines.append("failure signatures")
        for label in sorted(report.failures):
            lines.append(f"  {label}: {report.failures[label]}")
    return "\n".join(lines)
