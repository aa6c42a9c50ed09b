"""Deterministic dataset generation for the successor and traversal tasks.

Every record draws from its own RNG seeded by hashing the global seed
with a stream tag and the record index, so output depends only on the
generation spec and seed, never on schedule or platform.  Files are
JSONL with one record per line and a fixed key order, making equal
specs produce byte-identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace

from .errors import GenerationError
from .reduction import (
    ARROW,
    PAREN,
    Call,
    ListLit,
    Value,
    reduce,
    reduce_k,
    render_state_paren,
    render_state_unroll,
    render_trace,
)
from .shortcuts import edge_group
from .terms import (
    NATURAL,
    REVERSE,
    Term,
    bin_encode,
    bin_x1_run,
    linearize,
    normalize_tokens,
    remap_tokens,
    tree_depth,
    tree_serialize,
)

DEFAULT_SEED = 1729
PAD_TOKEN = "PAD"

# tokens that a vocabulary remap leaves alone unless explicitly mapped
STRUCTURAL_TOKENS = ("(", ")", "LEAF", "UNROLL[", "]", "EMPTY", PAD_TOKEN)

SUCCESSOR = "successor"
SUCCESSOR_RANDOM = "successor_random"
SINGLE_STEP = "single_step"
TRAVERSAL = "traversal"
TRACES = "traces"


def record_rng(seed: int, stream: str, index) -> random.Random:
    """Per-record RNG; the built-in hash() is salted, so derive the seed
    from a stable digest instead."""
    digest = hashlib.sha256(f"{seed}/{stream}/{index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class RecordMeta:
    value: int | None = None
    bits: int | None = None
    depth: int | None = None
    edge_group: int = 0
    pad_len: int = 0
    weight: int = 1

    def to_dict(self) -> dict:
        out = {}
        for key in ("value", "bits", "depth"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        out.update(edge_group=self.edge_group, pad_len=self.pad_len, weight=self.weight)
        return out


@dataclass
class ExampleRecord:
    id: str
    task: str
    order: str | None
    input: list[str]
    target: list[str]
    meta: RecordMeta = field(default_factory=RecordMeta)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "order": self.order,
            "input": list(self.input),
            "target": list(self.target),
            "meta": self.meta.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExampleRecord":
        meta_obj = obj.get("meta", {})
        meta = RecordMeta(
            value=meta_obj.get("value"),
            bits=meta_obj.get("bits"),
            depth=meta_obj.get("depth"),
            edge_group=meta_obj.get("edge_group", 0),
            pad_len=meta_obj.get("pad_len", 0),
            weight=meta_obj.get("weight", 1),
        )
        return cls(
            id=str(obj["id"]),
            task=obj["task"],
            order=obj.get("order"),
            input=list(obj["input"]),
            target=list(obj["target"]),
            meta=meta,
        )


@dataclass
class TraceRecord:
    id: str
    task: str
    input: list[str]
    trace: str

    def to_dict(self) -> dict:
        return {"id": self.id, "task": self.task, "input": list(self.input),
                "trace": self.trace}

    @classmethod
    def from_dict(cls, obj: dict) -> "TraceRecord":
        return cls(id=str(obj["id"]), task=obj["task"], input=list(obj["input"]),
                   trace=obj["trace"])


@dataclass
class DatasetSpec:
    """Every knob the generators read; unused fields are ignored by the
    tasks that do not need them."""

    task: str = SUCCESSOR
    order: str = REVERSE
    lo: int = 1
    hi: int = 131072
    bits_lo: int = 18
    bits_hi: int = 41
    count: int = 1000
    kind: str = "inorder"
    k: int | None = None
    depth_lo: int = 5
    depth_hi: int = 6
    alphabet: str = "abc"
    train_count: int = 20000
    test_count: int = 1000
    max_pad: int = 0
    pad_token: str = PAD_TOKEN
    remap: dict | None = None
    oversample_group1: int = 1
    oversample_group2: int = 1
    weight_group1: int = 1
    weight_group2: int = 1
    seed: int = DEFAULT_SEED

    def validate(self) -> None:
        if self.order not in (REVERSE, NATURAL):
            raise GenerationError(f"unknown order: {self.order!r}")
        if not 1 <= self.lo <= self.hi <= 2**31:
            raise GenerationError(f"value range must sit inside 1..2^31, got {self.lo}..{self.hi}")
        if self.bits_lo < 1 or self.bits_lo > self.bits_hi:
            raise GenerationError(f"bad bit range {self.bits_lo}..{self.bits_hi}")
        if self.kind not in ("inorder", "preorder"):
            raise GenerationError(f"unknown traversal kind: {self.kind!r}")
        if self.k is not None and self.k < 1:
            raise GenerationError("k must be at least 1 when set")
        if self.depth_lo < 1 or self.depth_lo > self.depth_hi:
            raise GenerationError(
                f"tree depth range must start at 1 or more, got {self.depth_lo}..{self.depth_hi}"
            )
        if not self.alphabet:
            raise GenerationError("alphabet must not be empty")
        if self.max_pad < 0:
            raise GenerationError("max_pad must be non-negative")
        if self.oversample_group1 < 1 or self.oversample_group2 < 1:
            raise GenerationError("oversample factors must be at least 1")
        if self.weight_group1 < 1 or self.weight_group2 < 1:
            raise GenerationError("weights must be at least 1")


# ---------------------------------------------------------------------------
# successor records


def _ordered(tokens: list[str], order: str) -> list[str]:
    return tokens if order == REVERSE else list(reversed(tokens))


def _successor_record(rec_id: str, task: str, value: int, order: str,
                      weight_group1: int = 1, weight_group2: int = 1) -> ExampleRecord:
    group = edge_group(value)
    weight = {1: weight_group1, 2: weight_group2}.get(group, 1)
    return ExampleRecord(
        id=rec_id,
        task=task,
        order=order,
        input=_ordered(linearize(bin_encode(value)), order),
        target=_ordered(linearize(bin_encode(value + 1)), order),
        meta=RecordMeta(
            value=value,
            bits=value.bit_length(),
            depth=bin_x1_run(value) + 1,  # closed form; tests pin it to the engine
            edge_group=group,
            weight=weight,
        ),
    )


def gen_successor_range(spec: DatasetSpec) -> list[ExampleRecord]:
    """One record per value in lo..hi, target is the successor in the
    same order."""
    spec.validate()
    return [
        _successor_record(
            f"succ-{spec.order}-{value}", SUCCESSOR, value, spec.order,
            spec.weight_group1, spec.weight_group2,
        )
        for value in range(spec.lo, spec.hi + 1)
    ]


def gen_successor_random(spec: DatasetSpec) -> list[ExampleRecord]:
    """count records: uniform bit length in bits_lo..bits_hi, then a
    uniform value of that length."""
    spec.validate()
    records = []
    for i in range(spec.count):
        rng = record_rng(spec.seed, f"succ-random-{spec.order}", i)
        bits = rng.randint(spec.bits_lo, spec.bits_hi)
        value = rng.randint(2 ** (bits - 1), 2**bits - 1)
        records.append(
            _successor_record(
                f"rand-{spec.order}-{i:05d}", SUCCESSOR_RANDOM, value, spec.order,
                spec.weight_group1, spec.weight_group2,
            )
        )
    return records


def gen_edge_records(spec: DatasetSpec, bit_lengths) -> tuple[list[ExampleRecord], list[ExampleRecord]]:
    """The two edge groups as successor records, one member per bit length."""
    from .shortcuts import group1_value, group2_value

    lengths = sorted(set(bit_lengths))
    if not lengths:
        raise GenerationError("empty bit-length range")
    g1 = [
        _successor_record(f"edge1-{spec.order}-{L}", SUCCESSOR, group1_value(L), spec.order,
                          spec.weight_group1, spec.weight_group2)
        for L in lengths if L >= 2
    ]
    g2 = [
        _successor_record(f"edge2-{spec.order}-{L}", SUCCESSOR, group2_value(L), spec.order,
                          spec.weight_group1, spec.weight_group2)
        for L in lengths if L >= 3
    ]
    return g1, g2


def gen_single_step(spec: DatasetSpec) -> list[ExampleRecord]:
    """Consecutive paren-form state pairs from every successor trace in
    lo..hi; each pair is one step_level application."""
    spec.validate()
    records = []
    for value in range(spec.lo, spec.hi + 1):
        term = bin_encode(value)
        _, trace = reduce(Call("s", (Value(term),)))
        states = [render_state_paren(state) for state in trace.states()]
        for step_i in range(len(states) - 1):
            records.append(
                ExampleRecord(
                    id=f"sstep-{value}-{step_i}",
                    task=SINGLE_STEP,
                    order=REVERSE,
                    input=states[step_i],
                    target=states[step_i + 1],
                    meta=RecordMeta(
                        value=value,
                        bits=value.bit_length(),
                        depth=len(states) - 1,
                        edge_group=edge_group(value),
                    ),
                )
            )
    return records


# ---------------------------------------------------------------------------
# trees


@dataclass
class TreeSample:
    id: str
    tree: Term
    depth: int
    split: str


@dataclass
class SplitSpec:
    """Id lists plus canonical-structure digests witnessing disjointness."""

    train_ids: list[str]
    test_ids: list[str]
    train_keys: set[str]
    test_keys: set[str]

    def overlap(self) -> set[str]:
        return self.train_keys & self.test_keys


def tree_key(tree: Term) -> str:
    return hashlib.sha256(" ".join(tree_serialize(tree)).encode()).hexdigest()


def count_trees(max_depth: int, alphabet_size: int) -> int:
    """Distinct labeled trees of depth <= max_depth."""
    total = 1  # the bare leaf
    for _ in range(max_depth):
        total = 1 + alphabet_size * total * total
    return total


def count_trees_exact(depth: int, alphabet_size: int) -> int:
    return count_trees(depth, alphabet_size) - count_trees(depth - 1, alphabet_size)


_BRANCH_PROB = 0.8
_MAX_TRIES = 1000


def _grow(rng: random.Random, budget: int, alphabet: str) -> Term:
    if budget == 0 or rng.random() > _BRANCH_PROB:
        return Term("Leaf")
    return Term(
        "Branch",
        (rng.choice(alphabet),),
        (_grow(rng, budget - 1, alphabet), _grow(rng, budget - 1, alphabet)),
    )


def sample_tree(rng: random.Random, depth: int, alphabet: str) -> Term:
    """Rejection-sample a tree of exactly the requested depth; the root
    is always a Branch."""
    if depth < 1:
        raise GenerationError("tree samples need depth >= 1 (a bare Leaf is not a sample)")
    for _ in range(_MAX_TRIES):
        tree = Term(
            "Branch",
            (rng.choice(alphabet),),
            (_grow(rng, depth - 1, alphabet), _grow(rng, depth - 1, alphabet)),
        )
        if tree_depth(tree) == depth:
            return tree
    raise GenerationError(f"could not hit depth {depth} in {_MAX_TRIES} tries")


def gen_trees(spec: DatasetSpec) -> tuple[list[TreeSample], SplitSpec]:
    """Structure-disjoint train/test trees; the test split is balanced
    across the depth range."""
    spec.validate()
    depths = list(range(spec.depth_lo, spec.depth_hi + 1))
    available = count_trees(spec.depth_hi, len(spec.alphabet)) - count_trees(
        spec.depth_lo - 1, len(spec.alphabet)
    )
    if spec.train_count + spec.test_count > available:
        raise GenerationError(
            f"requested {spec.train_count + spec.test_count} trees but only "
            f"{available} distinct ones exist in depths {spec.depth_lo}..{spec.depth_hi}"
        )
    per_depth = spec.test_count // len(depths)
    extra = spec.test_count - per_depth * len(depths)
    test_quota = {d: per_depth + (1 if j < extra else 0) for j, d in enumerate(depths)}
    for d, quota in test_quota.items():
        if quota > count_trees_exact(d, len(spec.alphabet)):
            raise GenerationError(f"not enough distinct depth-{d} trees for the test split")

    samples: list[TreeSample] = []
    seen: set[str] = set()

    def draw(stream: str, index, depth: int | None) -> tuple[Term, int]:
        rng = record_rng(spec.seed, stream, index)
        for _ in range(_MAX_TRIES):
            d = depth if depth is not None else rng.choice(depths)
            tree = sample_tree(rng, d, spec.alphabet)
            key = tree_key(tree)
            if key not in seen:
                seen.add(key)
                return tree, d
        raise GenerationError(f"could not find a fresh tree after {_MAX_TRIES} tries")

    # test first: its per-depth quotas are exact, while train may fall back
    # to another depth when a shallow stratum is exhausted
    test_keys: set[str] = set()
    test_samples = []
    j = 0
    for d in depths:
        for _ in range(test_quota[d]):
            tree, _ = draw("tree-test", j, d)
            test_samples.append(TreeSample(id=f"test-{j:04d}", tree=tree, depth=d, split="test"))
            test_keys.add(tree_key(tree))
            j += 1

    train_keys: set[str] = set()
    for i in range(spec.train_count):
        tree, d = draw("tree-train", i, None)
        samples.append(TreeSample(id=f"train-{i:05d}", tree=tree, depth=d, split="train"))
        train_keys.add(tree_key(tree))
    samples.extend(test_samples)

    split = SplitSpec(
        train_ids=[s.id for s in samples if s.split == "train"],
        test_ids=[s.id for s in samples if s.split == "test"],
        train_keys=train_keys,
        test_keys=test_keys,
    )
    return samples, split


def gen_traversal(samples, kind: str, k: int | None = None) -> list[ExampleRecord]:
    """Traversal records over tree samples: the target is either the full
    value list or the state after k levels in the flat traversal form."""
    if kind not in ("inorder", "preorder"):
        raise GenerationError(f"unknown traversal kind: {kind!r}")
    if k is not None and k < 1:
        raise GenerationError("k must be at least 1 when set")
    records = []
    for sample in samples:
        expr = Call(kind, (Value(sample.tree),))
        if k is None:
            final, _ = reduce(expr)
            assert isinstance(final, ListLit)
            target = list(final.items)
        else:
            state, _ = reduce_k(expr, k)
            target = render_state_unroll(state)
        records.append(
            ExampleRecord(
                id=f"{kind}-{'full' if k is None else k}-{sample.id}",
                task=kind,
                order=None,
                input=tree_serialize(sample.tree),
                target=target,
                meta=RecordMeta(depth=sample.depth),
            )
        )
    return records


# ---------------------------------------------------------------------------
# traces


def gen_traces(spec: DatasetSpec) -> list[TraceRecord]:
    """Fully rendered oracle traces for prompting and validator fixtures."""
    spec.validate()
    records = []
    if spec.task in (SUCCESSOR, TRACES):
        for value in range(spec.lo, spec.hi + 1):
            term = bin_encode(value)
            _, trace = reduce(Call("s", (Value(term),)))
            records.append(
                TraceRecord(
                    id=f"trace-succ-{value}",
                    task="successor",
                    input=linearize(term),
                    trace=render_trace(trace, PAREN),
                )
            )
        return records
    if spec.task == TRAVERSAL:
        tree_spec = replace(spec, train_count=spec.count, test_count=0)
        samples, _ = gen_trees(tree_spec)
        for sample in samples:
            _, trace = reduce(Call(spec.kind, (Value(sample.tree),)))
            records.append(
                TraceRecord(
                    id=f"trace-{spec.kind}-{sample.id}",
                    task=spec.kind,
                    input=tree_serialize(sample.tree),
                    trace=render_trace(trace, ARROW),
                )
            )
        return records
    raise GenerationError(f"no trace generator for task {spec.task!r}")


# ---------------------------------------------------------------------------
# post-processing


def apply_padding(records, max_pad: int, seed: int, pad_token: str = PAD_TOKEN):
    """Prefix each record's input and target with the same uniformly drawn
    number of pad tokens (0..max_pad inclusive)."""
    if max_pad < 0:
        raise GenerationError("max_pad must be non-negative")
    out = []
    for i, record in enumerate(records):
        rng = record_rng(seed, "pad", i)
        pad = rng.randint(0, max_pad)
        prefix = [pad_token] * pad
        out.append(
            replace(
                record,
                input=prefix + list(record.input),
                target=prefix + list(record.target),
                meta=replace(record.meta, pad_len=pad),
            )
        )
    return out


def apply_remap(records, mapping: dict):
    """Respell record tokens; structural tokens pass through unchanged
    unless the mapping names them explicitly."""
    full = dict(mapping)
    for tok in STRUCTURAL_TOKENS:
        full.setdefault(tok, tok)
    return [
        replace(
            record,
            input=remap_tokens(record.input, full),
            target=remap_tokens(record.target, full),
        )
        for record in records
    ]


def oversample(records, group1_factor: int, group2_factor: int, seed: int):
    """Duplicate edge-group records by the given factors and reshuffle."""
    if group1_factor < 1 or group2_factor < 1:
        raise GenerationError("oversample factors must be at least 1")
    out = []
    for record in records:
        factor = {1: group1_factor, 2: group2_factor}.get(record.meta.edge_group, 1)
        out.extend([record] * factor)
    record_rng(seed, "oversample", 0).shuffle(out)
    return out


def postprocess(records, spec: DatasetSpec):
    """Remap, pad, and oversample, in that order."""
    if spec.remap:
        records = apply_remap(records, spec.remap)
    if spec.max_pad:
        records = apply_padding(records, spec.max_pad, spec.seed, spec.pad_token)
    if spec.oversample_group1 > 1 or spec.oversample_group2 > 1:
        records = oversample(records, spec.oversample_group1, spec.oversample_group2, spec.seed)
    return records


def build_dataset(spec: DatasetSpec) -> list[ExampleRecord]:
    """Generate, then post-process."""
    spec.validate()
    if spec.task == SUCCESSOR:
        records = gen_successor_range(spec)
    elif spec.task == SUCCESSOR_RANDOM:
        records = gen_successor_random(spec)
    elif spec.task == SINGLE_STEP:
        records = gen_single_step(spec)
    elif spec.task == TRAVERSAL:
        samples, _ = gen_trees(spec)
        records = gen_traversal([s for s in samples if s.split == "train"], spec.kind, spec.k)
    else:
        raise GenerationError(f"unknown task: {spec.task!r}")
    return postprocess(records, spec)


# ---------------------------------------------------------------------------
# files


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(_dump_line(record.to_dict()))
            handle.write("\n")


def _read_lines(path):
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise GenerationError(f"{path}:{lineno}: bad JSON ({exc})") from None


def read_jsonl(path) -> list[ExampleRecord]:
    records = []
    for lineno, obj in enumerate(_read_lines(path), start=1):
        try:
            records.append(ExampleRecord.from_dict(obj))
        except (KeyError, TypeError) as exc:
            raise GenerationError(f"{path}:{lineno}: bad record ({exc})") from None
    return records


def write_tree_samples(samples, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(_dump_line({
                "id": sample.id,
                "depth": sample.depth,
                "split": sample.split,
                "tokens": tree_serialize(sample.tree),
            }))
            handle.write("\n")


def read_traces(path) -> list[TraceRecord]:
    records = []
    for lineno, obj in enumerate(_read_lines(path), start=1):
        try:
            records.append(TraceRecord.from_dict(obj))
        except (KeyError, TypeError) as exc:
            raise GenerationError(f"{path}:{lineno}: bad trace record ({exc})") from None
    return records


def write_traces(records, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(_dump_line(record.to_dict()))
            handle.write("\n")


def file_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, spec: DatasetSpec, data_path, record_count: int) -> None:
    """Sidecar recording the generation spec, seed, and content digest."""
    doc = {
        "spec": {k: v for k, v in vars(spec).items()},
        "seed": spec.seed,
        "records": record_count,
        "sha256": file_digest(data_path),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")
