"""Token and term layer: encodings, round trips, orders, respelling."""

import random

import pytest

from structrec.errors import MalformedSequenceError, RemapError
from structrec.terms import (
    BIN_POS,
    CHAR_TREE,
    NATURAL,
    PEANO,
    REVERSE,
    Term,
    bin_encode,
    bin_value,
    bin_x1_run,
    branch,
    builtin_defs,
    delinearize,
    invert_remap,
    leaf,
    linearize,
    normalize_tokens,
    peano_encode,
    peano_value,
    remap_tokens,
    reorder,
    tokenize,
    tree_depth,
    tree_parse,
    tree_serialize,
)

KNOWN_ENCODINGS = [
    (1, ["01"]),
    (2, ["X0", "01"]),
    (3, ["X1", "01"]),
    (4, ["X0", "X0", "01"]),
    (5, ["X1", "X0", "01"]),
    (6, ["X0", "X1", "01"]),
    (7, ["X1", "X1", "01"]),
    (11, ["X1", "X1", "X0", "01"]),
    (13, ["X1", "X0", "X1", "01"]),
    (131072, ["X0"] * 17 + ["01"]),
]


@pytest.mark.parametrize("value,tokens", KNOWN_ENCODINGS)
def test_bin_encode_known(value, tokens):
    assert linearize(bin_encode(value)) == tokens
    assert bin_value(bin_encode(value)) == value


def test_bin_round_trip_exhaustive():
    for n in range(1, 4096):
        assert bin_value(bin_encode(n)) == n


def test_bin_round_trip_large():
    rng = random.Random(0)
    for _ in range(200):
        n = rng.randint(1, 2**200)
        assert bin_value(bin_encode(n)) == n


@pytest.mark.parametrize("bad", [0, -1, -7])
def test_bin_encode_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        bin_encode(bad)


def test_peano_round_trip():
    # I denotes one, so the domain starts there
    for n in range(1, 50):
        term = peano_encode(n)
        assert peano_value(term) == n
    assert linearize(peano_encode(1)) == ["I"]
    assert linearize(peano_encode(3)) == ["S", "S", "I"]


def test_peano_rejects_zero():
    with pytest.raises(ValueError):
        peano_encode(0)


def test_bin_x1_run_matches_leading_x1_tokens():
    """The run length is exactly the count of leading X1 constructors."""
    for n in range(1, 8192):
        toks = linearize(bin_encode(n))
        lead = 0
        for tok in toks:
            if tok != "X1":
                break
            lead += 1
        assert bin_x1_run(n) == lead, n


@pytest.mark.parametrize("n,run", [(1, 0), (2, 0), (3, 1), (7, 2), (11, 2), (15, 3), (12, 0)])
def test_bin_x1_run_known(n, run):
    assert bin_x1_run(n) == run


# ---------------------------------------------------------------------------
# linearize / delinearize


def _random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return leaf()
    return branch(rng.choice("abc"), _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))


def test_linearize_round_trip_bin():
    rng = random.Random(1)
    for _ in range(2000):
        term = bin_encode(rng.randint(1, 2**48))
        assert delinearize(linearize(term), BIN_POS) == term


def test_linearize_round_trip_peano():
    for n in range(1, 40):
        term = peano_encode(n)
        assert delinearize(linearize(term), PEANO) == term


def test_linearize_round_trip_tree():
    rng = random.Random(2)
    for _ in range(2000):
        term = _random_tree(rng, 5)
        assert delinearize(linearize(term), CHAR_TREE) == term


def test_delinearize_dangling():
    with pytest.raises(MalformedSequenceError):
        delinearize(["X0", "X1"], BIN_POS)


def test_delinearize_trailing():
    with pytest.raises(MalformedSequenceError):
        delinearize(["01", "01"], BIN_POS)


def test_delinearize_unknown_constructor():
    with pytest.raises(MalformedSequenceError):
        delinearize(["X2", "01"], BIN_POS)


def test_delinearize_missing_payload():
    with pytest.raises(MalformedSequenceError):
        delinearize(["Branch"], CHAR_TREE)


def test_delinearize_empty():
    with pytest.raises(MalformedSequenceError):
        delinearize([], BIN_POS)


# ---------------------------------------------------------------------------
# tokens and aliases


def test_tokenize_splits_on_whitespace():
    assert tokenize("X1  X0\t01") == ["X1", "X0", "01"]


def test_tokenize_letter_o_alias():
    # the digit spelling is canonical, the letter-O one is accepted
    assert tokenize("XO XO X1 01") == ["X0", "X0", "X1", "01"]
    assert normalize_tokens(["XO", "01"]) == ["X0", "01"]


def test_tokenize_unroll_alias():
    assert tokenize("REDUCE[ a LEAF LEAF ]") == ["UNROLL[", "a", "LEAF", "LEAF", "]"]


def test_tokenize_parens_without_spaces():
    assert tokenize("(X1 01)") == ["(", "X1", "01", ")"]


# ---------------------------------------------------------------------------
# orders


def test_reorder_is_reversal():
    assert reorder(["X1", "X0", "01"], NATURAL) == ["01", "X0", "X1"]
    assert reorder(["01", "X0", "X1"], REVERSE) == ["X1", "X0", "01"]


def test_reorder_round_trip():
    rng = random.Random(3)
    for _ in range(500):
        toks = linearize(bin_encode(rng.randint(1, 2**32)))
        assert reorder(reorder(toks, NATURAL), REVERSE) == toks


def test_reorder_keeps_spellings():
    # only the sequence flips, X0/X1 spellings stay put
    assert reorder(["X0", "X1", "01"], NATURAL) == ["01", "X1", "X0"]


def test_reorder_identity_when_already_there():
    assert reorder(["X1", "01"], REVERSE) == ["X1", "01"]
    assert reorder(["01", "X1"], NATURAL) == ["01", "X1"]


def test_reorder_single_token():
    assert reorder(["01"], NATURAL) == ["01"]
    assert reorder(["01"], REVERSE) == ["01"]


def test_reorder_rejects_malformed():
    with pytest.raises(MalformedSequenceError):
        reorder(["X0", "X1"], NATURAL)


# ---------------------------------------------------------------------------
# trees


CAT_TREE = branch("a", branch("c", leaf(), leaf()), branch("t", leaf(), leaf()))


def test_tree_serialize_known():
    assert tree_serialize(CAT_TREE) == [
        "a", "(", "c", "LEAF", "LEAF", ")", "(", "t", "LEAF", "LEAF", ")",
    ]


def test_tree_parse_round_trip():
    rng = random.Random(4)
    for _ in range(2000):
        tree = branch(rng.choice("abc"), _random_tree(rng, 4), _random_tree(rng, 4))
        assert tree_parse(tree_serialize(tree)) == tree


def test_tree_serialize_rejects_bare_leaf():
    with pytest.raises(MalformedSequenceError):
        tree_serialize(leaf())


def test_tree_parse_rejects_unbalanced():
    with pytest.raises(MalformedSequenceError):
        tree_parse(["a", "(", "c", "LEAF", "LEAF"])


def test_tree_depth():
    assert tree_depth(leaf()) == 0
    assert tree_depth(branch("a", leaf(), leaf())) == 1
    assert tree_depth(CAT_TREE) == 2


# ---------------------------------------------------------------------------
# respelling


def test_remap_tokens():
    mapping = {"X0": "a", "X1": "b", "01": "c"}
    assert remap_tokens(["X1", "X0", "01"], mapping) == ["b", "a", "c"]


def test_remap_requires_known_tokens():
    with pytest.raises(RemapError):
        remap_tokens(["X1", "Q"], {"X1": "b"})


def test_remap_requires_injective():
    with pytest.raises(RemapError):
        remap_tokens(["X1", "X0", "01"], {"X0": "a", "X1": "a", "01": "c"})


def test_invert_remap_round_trip():
    mapping = {"X0": "a", "X1": "b", "01": "c"}
    toks = ["X1", "X0", "X0", "01"]
    assert remap_tokens(remap_tokens(toks, mapping), invert_remap(mapping)) == toks


# ---------------------------------------------------------------------------
# definitions


def test_builtin_defs_vocabularies():
    defs = builtin_defs()
    assert set(defs) == {"peano", "bin_pos", "char_tree"}
    assert defs["bin_pos"].vocabulary == {"01", "X0", "X1"}
    assert defs["peano"].vocabulary == {"I", "S"}


def test_term_equality_is_structural():
    assert bin_encode(6) == Term("X0", (), (Term("X1", (), (Term("01"),)),))
