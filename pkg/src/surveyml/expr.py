"""Safe column expressions for config-driven derivation and filtering.

Expressions use Python syntax restricted to: column names, numeric
literals, arithmetic (+ - * /), comparisons, & and | for logic, unary
minus, parentheses, and the functions ``mean(a, b, ...)`` (rowwise mean of
the non-missing values) and ``cut(x, e1, e2, ...)`` (1-based bin index
with NaN passed through; values below e1 fall in bin 1 of k+1).

Logic is three-valued so missingness propagates the way survey analysts
expect: a comparison with a missing value is missing; ``a | b`` is 1 when
either side is 1 even if the other is missing; ``a & b`` is 0 when either
side is 0. Results are float64 arrays with NaN as missing.
"""

from __future__ import annotations

import ast

import numpy as np

from .errors import DesignError

__all__ = ["evaluate_expression"]


def _tv_or(a, b):
    out = np.where((a == 1.0) | (b == 1.0), 1.0, 0.0)
    unknown = (np.isnan(a) | np.isnan(b)) & (out != 1.0)
    return np.where(unknown, np.nan, out)


def _tv_and(a, b):
    out = np.where((a == 1.0) & (b == 1.0), 1.0, 0.0)
    zero = (a == 0.0) | (b == 0.0)
    unknown = (np.isnan(a) | np.isnan(b)) & ~zero
    return np.where(unknown, np.nan, out)


def _compare(op, left, right):
    with np.errstate(invalid="ignore"):
        if isinstance(op, ast.Eq):
            raw = left == right
        elif isinstance(op, ast.NotEq):
            raw = left != right
        elif isinstance(op, ast.Lt):
            raw = left < right
        elif isinstance(op, ast.LtE):
            raw = left <= right
        elif isinstance(op, ast.Gt):
            raw = left > right
        elif isinstance(op, ast.GtE):
            raw = left >= right
        else:
            raise DesignError(f"unsupported comparison {ast.dump(op)}")
    out = raw.astype(np.float64) if isinstance(raw, np.ndarray) else float(raw)
    missing = np.isnan(left) | np.isnan(right)
    return np.where(missing, np.nan, out)


def _mean(*columns):
    stacked = np.vstack(columns)
    present = ~np.isnan(stacked)
    count = present.sum(axis=0)
    total = np.where(present, stacked, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def _cut(x, *edges):
    if len(edges) < 1:
        raise DesignError("cut() needs at least one edge")
    edges_arr = np.asarray(edges, dtype=np.float64)
    if (np.diff(edges_arr) <= 0).any():
        raise DesignError("cut() edges must be strictly increasing")
    idx = np.searchsorted(edges_arr, x, side="right").astype(np.float64) + 1.0
    idx[x < edges_arr[0]] = 1.0
    return np.where(np.isnan(x), np.nan, idx)


class _Evaluator(ast.NodeVisitor):
    def __init__(self, columns: dict, n: int):
        self.columns = columns
        self.n = n

    def broadcast(self, value):
        if isinstance(value, np.ndarray):
            return value
        return np.full(self.n, float(value))

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Name(self, node):
        if node.id not in self.columns:
            raise DesignError(f"unknown column {node.id!r} in expression")
        col = self.columns[node.id]
        if col.dtype == object:
            raise DesignError(f"column {node.id!r} is not numeric")
        return col

    def visit_Constant(self, node):
        if not isinstance(node.value, (int, float)):
            raise DesignError(f"unsupported literal {node.value!r}")
        return float(node.value)

    def _pair(self, left, right):
        """Broadcast scalars only when the other side is a column."""
        if isinstance(left, np.ndarray) or isinstance(right, np.ndarray):
            return self.broadcast(left), self.broadcast(right)
        return left, right

    def visit_UnaryOp(self, node):
        value = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return -value
        raise DesignError("only unary minus is supported")

    def visit_BinOp(self, node):
        left, right = self._pair(self.visit(node.left), self.visit(node.right))
        if isinstance(node.op, ast.BitOr):
            return _tv_or(self.broadcast(left), self.broadcast(right))
        if isinstance(node.op, ast.BitAnd):
            return _tv_and(self.broadcast(left), self.broadcast(right))
        with np.errstate(invalid="ignore", divide="ignore"):
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
        raise DesignError(f"unsupported operator {type(node.op).__name__}")

    def visit_Compare(self, node):
        if len(node.ops) != 1:
            raise DesignError("chained comparisons are not supported")
        left, right = self._pair(self.visit(node.left),
                                 self.visit(node.comparators[0]))
        if not isinstance(left, np.ndarray):
            raise DesignError("comparisons must involve at least one column")
        return _compare(node.ops[0], left, right)

    def visit_Call(self, node):
        if not isinstance(node.func, ast.Name) or node.func.id not in ("mean", "cut"):
            raise DesignError("only mean(...) and cut(...) calls are supported")
        if node.keywords:
            raise DesignError("keyword arguments are not supported")
        raw = [self.visit(a) for a in node.args]
        if node.func.id == "mean":
            return _mean(*[self.broadcast(a) for a in raw])
        if not raw:
            raise DesignError("cut() needs a column argument")
        edges = []
        for value in raw[1:]:
            if isinstance(value, np.ndarray):
                raise DesignError("cut() edges must be numeric literals")
            edges.append(float(value))
        return _cut(self.broadcast(raw[0]), *edges)

    def generic_visit(self, node):
        raise DesignError(f"unsupported syntax in expression: {type(node).__name__}")


def evaluate_expression(text: str, columns: dict) -> np.ndarray:
    """Evaluate an expression over named float64 columns."""
    lengths = {len(v) for v in columns.values()}
    if len(lengths) != 1:
        raise DesignError("all columns must share one length")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise DesignError(f"bad expression {text!r}: {exc}") from exc
    result = _Evaluator(columns, lengths.pop()).visit(tree)
    if not isinstance(result, np.ndarray):
        raise DesignError(f"expression {text!r} does not produce a column")
    return result.astype(np.float64)
