import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parser_corpus import CORPUS, MALFORMED, PRECEDENCE
from pqlab.errors import ValidationError
from pqlab.expr import (
    FUNCTIONS,
    BinOp,
    Call,
    ExprSyntaxError,
    Neg,
    Num,
    UnknownIdentifier,
    Var,
    evaluate,
    parse,
    parse_function,
    pretty,
)

XS = np.linspace(0.1, 3.0, 7)


@pytest.mark.parametrize("src", CORPUS)
def test_round_trip(src):
    tree = parse(src)
    text = pretty(tree)
    assert parse(text) == tree
    assert pretty(parse(text)) == text


def test_corpus_size():
    assert len(CORPUS) >= 50


@pytest.mark.parametrize("src,t,value", PRECEDENCE)
def test_precedence(src, t, value):
    assert float(evaluate(parse(src), t)) == pytest.approx(value)


@pytest.mark.parametrize("src,offset", MALFORMED)
def test_malformed(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src)
    assert info.value.offset == offset
    assert isinstance(info.value, ValidationError)


def test_expected_set():
    with pytest.raises(ExprSyntaxError) as info:
        parse("2*+t")
    assert {"number", "t", "("} <= info.value.expected
    assert "offset 2" in str(info.value)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse("1 + log(t)")
    assert info.value.offset == 4
    with pytest.raises(UnknownIdentifier):
        parse("x")


def test_shapes():
    assert parse("-t^2") == Neg(BinOp("^", Var(), Num(2.0)))
    assert parse("2^3^2") == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
    assert parse("1-2-3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse("exp(-t)") == Call("exp", Neg(Var()))


def test_evaluate_vectorized():
    got = evaluate(parse("exp(-t)*sin(t) + sqrt(abs(t-1))/2"), XS)
    assert got.shape == XS.shape
    np.testing.assert_allclose(got, np.exp(-XS) * np.sin(XS) + np.sqrt(np.abs(XS - 1)) / 2, rtol=1e-15)
    assert float(evaluate(parse("3"), 0.0)) == 3.0


def test_function_spec():
    fs = parse_function("t^3", "3*t^2", "6*t")
    np.testing.assert_allclose(fs(XS), XS**3)
    np.testing.assert_allclose(fs.derivative(1)(XS), 3 * XS**2)
    np.testing.assert_allclose(fs.derivative(2)(XS), 6 * XS)
    with pytest.raises(ValidationError):
        parse_function("t").derivative(2)


_leaf = st.one_of(st.just(Var()), st.floats(0, 1e6, allow_nan=False).map(Num))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda a: BinOp(*a)),
        st.tuples(st.sampled_from(sorted(FUNCTIONS)), children).map(lambda a: Call(*a)),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(_leaf, _extend, max_leaves=12))
def test_random_round_trip(tree):
    assert parse(pretty(tree)) == tree
