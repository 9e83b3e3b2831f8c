"""Config expression evaluation: arithmetic, three-valued logic, helpers."""

import numpy as np
import pytest

from surveyml.errors import DesignError
from surveyml.expr import evaluate_expression

NAN = np.nan


def cols(**kwargs):
    return {k: np.asarray(v, dtype=np.float64) for k, v in kwargs.items()}


class TestBasics:
    def test_arithmetic(self):
        out = evaluate_expression("(a + b) * 2 - a / 4", cols(a=[4.0, 8], b=[1.0, 2]))
        assert list(out) == [9.0, 18.0]

    def test_comparison_propagates_missing(self):
        out = evaluate_expression("a >= 20", cols(a=[25.0, NAN, 10.0]))
        assert out[0] == 1.0 and out[2] == 0.0
        assert np.isnan(out[1])

    def test_equality_indicator(self):
        out = evaluate_expression("a == 1", cols(a=[1.0, 2.0, NAN]))
        assert out[0] == 1.0 and out[1] == 0.0 and np.isnan(out[2])

    def test_unary_minus(self):
        out = evaluate_expression("-a", cols(a=[1.0, -2.0]))
        assert list(out) == [-1.0, 2.0]


class TestThreeValuedLogic:
    def test_or_with_missing(self):
        a = [1.0, 0.0, NAN, NAN, 0.0]
        b = [NAN, NAN, 1.0, NAN, 0.0]
        out = evaluate_expression("(a == 1) | (b == 1)", cols(a=a, b=b))
        assert out[0] == 1.0          # true | missing = true
        assert np.isnan(out[1])       # false | missing = missing
        assert out[2] == 1.0
        assert np.isnan(out[3])
        assert out[4] == 0.0

    def test_and_with_missing(self):
        a = [1.0, 0.0, NAN]
        b = [NAN, NAN, 0.0]
        out = evaluate_expression("(a == 1) & (b == 1)", cols(a=a, b=b))
        assert np.isnan(out[0])       # true & missing = missing
        assert out[1] == 0.0          # false & anything = false
        assert out[2] == 0.0


class TestFunctions:
    def test_rowwise_mean_skips_missing(self):
        out = evaluate_expression("mean(a, b, c)",
                                  cols(a=[1.0, NAN, NAN], b=[3.0, 4.0, NAN],
                                       c=[5.0, NAN, NAN]))
        assert out[0] == 3.0
        assert out[1] == 4.0
        assert np.isnan(out[2])

    def test_cut_bins(self):
        out = evaluate_expression("cut(a, 40, 60, 80)",
                                  cols(a=[25.0, 40.0, 59.9, 85.0, NAN]))
        assert list(out[:4]) == [1.0, 2.0, 2.0, 4.0]
        assert np.isnan(out[4])

    def test_cut_requires_increasing_edges(self):
        with pytest.raises(DesignError, match="increasing"):
            evaluate_expression("cut(a, 5, 3)", cols(a=[1.0]))


class TestRejections:
    def test_unknown_column(self):
        with pytest.raises(DesignError, match="unknown column"):
            evaluate_expression("zz + 1", cols(a=[1.0]))

    def test_no_function_calls_outside_whitelist(self):
        with pytest.raises(DesignError, match="mean.*cut"):
            evaluate_expression("__import__('os')", cols(a=[1.0]))

    def test_no_attributes(self):
        with pytest.raises(DesignError):
            evaluate_expression("a.mean()", cols(a=[1.0]))

    def test_no_scalar_only_result(self):
        with pytest.raises(DesignError, match="does not produce a column"):
            evaluate_expression("1 + 2", cols(a=[1.0]))

    def test_syntax_error(self):
        with pytest.raises(DesignError, match="bad expression"):
            evaluate_expression("a >=", cols(a=[1.0]))
