"""Structural recursion as sequence tasks: terms, reduction, machines,
datasets, and evaluation."""

from .asm import (
    UNDEF,
    AsmMachine,
    AsmState,
    GuardedRule,
    RasmResult,
    RasmSpec,
    asm_log,
    asm_run,
    asm_step,
    machine_output,
    rasm_run,
    successor_machine,
    successor_rasm,
)
from .datasets import (
    DEFAULT_SEED,
    DatasetSpec,
    ExampleRecord,
    RecordMeta,
    TraceRecord,
    TreeSample,
    build_dataset,
    gen_edge_records,
    gen_single_step,
    gen_successor_random,
    gen_successor_range,
    gen_traces,
    gen_traversal,
    gen_trees,
    read_jsonl,
    read_traces,
    write_jsonl,
    write_manifest,
    write_traces,
)
from .errors import (
    BudgetExhaustedError,
    EvalError,
    FuelExhaustedError,
    GenerationError,
    IdMismatchError,
    MalformedSequenceError,
    ReductionError,
    RemapError,
    RenderError,
    StructrecError,
    UpdateClashError,
)
from .evaluation import (
    MetricsReport,
    TraceJudgment,
    TraceValidationReport,
    breakdown,
    compute_metrics,
    exact_match,
    failure_signature,
    hit_at_k,
    read_predictions,
    render_report,
    validate_trace,
)
from .reduction import (
    ARROW,
    PAREN,
    Call,
    Concat,
    Ctor,
    ListLit,
    Program,
    Trace,
    Value,
    builtin_programs,
    is_normal,
    recursion_depth,
    reduce,
    reduce_k,
    render_state_paren,
    render_state_unroll,
    render_trace,
    step_level,
    step_single,
)
from .shortcuts import (
    CORRECTED,
    FAITHFUL,
    DisagreementReport,
    diff_against_oracle,
    edge_group,
    edge_inputs,
    emulate_natural,
    emulate_reverse,
    natural_shortcut_machine,
    reverse_shortcut_machine,
)
from .terms import (
    BIN_POS,
    CHAR_TREE,
    NATURAL,
    PEANO,
    REVERSE,
    InductiveDef,
    Term,
    bin_encode,
    bin_value,
    bin_x1_run,
    builtin_defs,
    delinearize,
    linearize,
    peano_encode,
    peano_value,
    remap_tokens,
    reorder,
    tokenize,
    tree_depth,
    tree_parse,
    tree_serialize,
)

__version__ = "0.1.0"
