import numpy as np
import pydantic
import pytest

import zoomforge
from zoomforge.estimators import parse_threshold, threshold_function, validate_threshold
from zoomforge.shared.errors import InputError
from zoomforge.shared.models.config import EstimatorSpec


@pytest.mark.parametrize(
    "expression, t, expected",
    [
        ("T", 8.0, 8.0),
        ("2^sqrt(T)", 16.0, 16.0),
        ("2 ** 3", 1.0, 8.0),
        ("max(1, T*log2(T))", 4.0, 8.0),
        ("-T + 10", 4.0, 6.0),
        ("(T + 2) / 2", 4.0, 3.0),
    ],
)
def test_threshold_evaluation(expression, t, expected):
    assert float(threshold_function(expression)(t)) == pytest.approx(expected)


def test_threshold_is_vectorised():
    b = threshold_function("T^2")
    assert np.allclose(b(np.array([1.0, 2.0, 3.0])), [1.0, 4.0, 9.0])


def test_parsed_trees_are_cached():
    tree = parse_threshold("sqrt(T)")
    assert zoomforge.THRESHOLD_CACHE["sqrt(T)"] is tree
    assert parse_threshold("  sqrt(T) ") is tree


@pytest.mark.parametrize("expression", ["T +", "x", "foo(T)", "__import__(T)"])
def test_bad_expressions(expression):
    with pytest.raises(InputError):
        parse_threshold(expression)


def test_subexponential_thresholds_pass():
    for expression in ("T", "T^3", "2^sqrt(T)", "max(1, T*log2(T))"):
        validate_threshold(expression, 10_000)


def test_exponential_threshold_is_rejected():
    with pytest.raises(InputError, match="grows exponentially"):
        validate_threshold("exp2(T)", 1000)
    with pytest.raises(InputError):
        validate_threshold("2^(T/2)", 1000)


def test_threshold_must_be_positive():
    with pytest.raises(InputError, match="positive"):
        validate_threshold("T - 10", 1000)


def test_config_rejects_unknown_threshold_functions():
    with pytest.raises(pydantic.ValidationError):
        EstimatorSpec(threshold="unknown(T)")
    assert EstimatorSpec(threshold=" T ").threshold == "T"
