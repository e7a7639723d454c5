# lkengine/geometry/metricfield.py
"""Metric-component expressions: parsing, printing and 2-jet evaluation.

Expressions are parsed with a lark LALR grammar into a small immutable AST.
Evaluation runs vectorised second-order Taylor jets over a batch of points,
so a single pass yields values, gradients and Hessians that are exact to
rounding for the composed elementary functions.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from lkengine.errors import (
    ExpressionDomainError,
    ExpressionSyntaxError,
    InputError,
    JetDomainError,
    MetricError,
    UnknownIdentifierError,
    VariableIndexError,
)

logger = logging.getLogger(__name__)

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")

_VARIABLE = re.compile(r"x(\d+)$")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Const:
    name: str = "pi"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


def negate(operand: Expr) -> Expr:
    """Negation with literals folded, so a printed negative number parses back to a Num"""
    if isinstance(operand, Num):
        return Num(-operand.value)
    return Neg(operand)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_grammar = r"""
    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub

    ?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div

    ?unary: power
        | "-" unary         -> neg

    ?power: atom
        | atom "^" unary    -> pow

    ?atom: NUMBER           -> number
         | NAME             -> name
         | NAME "(" sum ")" -> call
         | "(" sum ")"

    NAME: /[A-Za-z_][A-Za-z0-9_]*/
    %import common.NUMBER
    %import common.WS

    %ignore WS
"""

_parser = Lark(_grammar, start="sum", parser="lalr")


@v_args(inline=True)
class _BuildExpr(Transformer):
    """Turns the lark parse tree into AST nodes, checking identifiers"""

    def __init__(self, dim, text):
        super().__init__()
        self.dim = dim
        self.text = text

    def _offset(self, token):
        return len(self.text[:token.start_pos].encode("utf-8"))

    def number(self, token):
        return Num(float(token))

    def name(self, token):
        name = str(token)
        if name == "pi":
            return Const("pi")
        match = _VARIABLE.match(name)
        if match is None:
            raise UnknownIdentifierError(name, self._offset(token))
        index = int(match.group(1))
        if index >= self.dim:
            raise VariableIndexError(index, self.dim)
        return Var(index)

    def call(self, token, arg):
        if str(token) not in FUNCTIONS:
            raise UnknownIdentifierError(str(token), self._offset(token))
        return Call(str(token), arg)

    def neg(self, operand):
        return negate(operand)

    def add(self, left, right):
        return BinOp("+", left, right)

    def sub(self, left, right):
        return BinOp("-", left, right)

    def mul(self, left, right):
        return BinOp("*", left, right)

    def div(self, left, right):
        return BinOp("/", left, right)

    def pow(self, left, right):
        return BinOp("^", left, right)


def _syntax_offset(exc: UnexpectedInput, text: str) -> int:
    if isinstance(exc, UnexpectedEOF):
        return len(text.encode("utf-8"))
    if isinstance(exc, UnexpectedToken) and exc.token.type == "$END":
        return len(text.encode("utf-8"))
    pos = getattr(exc, "pos_in_stream", None)
    if pos is None or pos < 0:
        return len(text.encode("utf-8"))
    return len(text[:pos].encode("utf-8"))


def parse_expr(text: str, dim: int) -> Expr:
    """Parse a metric-component expression over variables x0..x{dim-1}.

    Args:
        text: the DSL string, e.g. ``"sin(x0)^2"``
        dim: chart dimension bounding the variable indices

    Raises:
        ExpressionSyntaxError: with the byte offset of the offending input
        UnknownIdentifierError: for names other than x<k>, pi and the functions
        VariableIndexError: for x<k> with k >= dim
    """
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    try:
        tree = _parser.parse(text)
    except UnexpectedCharacters as exc:
        raise ExpressionSyntaxError(f"unexpected character {exc.char!r}", _syntax_offset(exc, text)) from None
    except UnexpectedInput as exc:
        raise ExpressionSyntaxError("unexpected input", _syntax_offset(exc, text)) from None
    try:
        return _BuildExpr(dim, text).transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, InputError):
            raise exc.orig_exc from None
        raise


def format_expr(expr: Expr) -> str:
    """Print an expression so that parse_expr gives the same AST back"""
    if isinstance(expr, Num):
        if expr.value < 0:
            return f"(-{-expr.value!r})"
        return repr(float(expr.value))
    if isinstance(expr, Var):
        return f"x{expr.index}"
    if isinstance(expr, Const):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{format_expr(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({format_expr(expr.left)} {expr.op} {format_expr(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({format_expr(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


def max_variable(expr: Expr) -> int:
    """Largest variable index referenced, -1 for a constant expression"""
    if isinstance(expr, Var):
        return expr.index
    if isinstance(expr, Neg):
        return max_variable(expr.operand)
    if isinstance(expr, BinOp):
        return max(max_variable(expr.left), max_variable(expr.right))
    if isinstance(expr, Call):
        return max_variable(expr.arg)
    return -1


def substitute(expr: Expr, mapping: Mapping[int, Union[Expr, float]]) -> Expr:
    """Replace variables by expressions or numbers; unmapped variables stay"""
    if isinstance(expr, Var):
        if expr.index not in mapping:
            return expr
        target = mapping[expr.index]
        return Num(float(target)) if isinstance(target, (int, float, np.floating)) else target
    if isinstance(expr, Neg):
        return negate(substitute(expr.operand, mapping))
    if isinstance(expr, BinOp):
        return BinOp(expr.op, substitute(expr.left, mapping), substitute(expr.right, mapping))
    if isinstance(expr, Call):
        return Call(expr.func, substitute(expr.arg, mapping))
    return expr


def constant_value(expr: Expr) -> Optional[float]:
    """Fold an expression without variables to a float, else None"""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Const):
        return math.pi
    if isinstance(expr, Var):
        return None
    if max_variable(expr) >= 0:
        return None
    return float(evaluate(expr, np.zeros((1, 0)))[0])


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def hessian_pairs(n: int):
    """Index arrays (I, J) of the packed upper-triangle Hessian layout"""
    i, j = np.triu_indices(n)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and packed upper-triangle Hessian over a batch of points.

    Arrays carry an arbitrary leading batch shape: ``value`` has shape B,
    ``gradient`` B+(n,), ``packed_hessian`` B+(n(n+1)/2,).
    """
    value: np.ndarray
    gradient: np.ndarray
    packed_hessian: np.ndarray

    @property
    def dim(self) -> int:
        return self.gradient.shape[-1]

    @property
    def hessian(self) -> np.ndarray:
        n = self.dim
        i, j = hessian_pairs(n)
        full = np.empty(self.value.shape + (n, n))
        full[..., i, j] = self.packed_hessian
        full[..., j, i] = self.packed_hessian
        return full

    @classmethod
    def constant(cls, c, shape, n):
        pairs = n * (n + 1) // 2
        return cls(np.full(shape, float(c)), np.zeros(shape + (n,)), np.zeros(shape + (pairs,)))

    @classmethod
    def variable(cls, points, k):
        shape = points.shape[:-1]
        n = points.shape[-1]
        gradient = np.zeros(shape + (n,))
        gradient[..., k] = 1.0
        return cls(points[..., k].astype(float), gradient, np.zeros(shape + (n * (n + 1) // 2,)))

    def _outer(self, other):
        i, j = hessian_pairs(self.dim)
        return self.gradient[..., i] * other.gradient[..., j]

    def compose(self, f0, f1, f2):
        """Chain rule for a scalar function with derivatives f1, f2 at self.value"""
        i, j = hessian_pairs(self.dim)
        return Jet2(
            f0,
            f1[..., None] * self.gradient,
            f1[..., None] * self.packed_hessian + f2[..., None] * self.gradient[..., i] * self.gradient[..., j],
        )

    def __neg__(self):
        return Jet2(-self.value, -self.gradient, -self.packed_hessian)

    def __add__(self, other):
        return Jet2(self.value + other.value, self.gradient + other.gradient, self.packed_hessian + other.packed_hessian)

    def __sub__(self, other):
        return Jet2(self.value - other.value, self.gradient - other.gradient, self.packed_hessian - other.packed_hessian)

    def __mul__(self, other):
        a, b = self.value[..., None], other.value[..., None]
        return Jet2(
            self.value * other.value,
            a * other.gradient + b * self.gradient,
            a * other.packed_hessian + b * self.packed_hessian + self._outer(other) + other._outer(self),
        )

    def __truediv__(self, other):
        return self * other.reciprocal()

    def reciprocal(self):
        u = self.value
        if np.any(u == 0.0):
            raise JetDomainError("division by zero")
        inv = 1.0 / u
        return self.compose(inv, -inv * inv, 2.0 * inv * inv * inv)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(s, c, -s)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(c, -s, -c)

    def tan(self):
        c = np.cos(self.value)
        if np.any(np.abs(c) < 1e-12):
            raise JetDomainError("tan at a pole")
        t = np.tan(self.value)
        sec2 = 1.0 + t * t
        return self.compose(t, sec2, 2.0 * t * sec2)

    def exp(self):
        e = np.exp(self.value)
        return self.compose(e, e, e)

    def log(self):
        u = self.value
        if np.any(u <= 0.0):
            raise JetDomainError("log of a nonpositive value")
        inv = 1.0 / u
        return self.compose(np.log(u), inv, -inv * inv)

    def sqrt(self):
        u = self.value
        if np.any(u <= 0.0):
            raise JetDomainError("sqrt of a nonpositive value")
        r = np.sqrt(u)
        return self.compose(r, 0.5 / r, -0.25 / (r * u))

    def ipow(self, k: int):
        """Integer power; negative exponents need a nonzero base"""
        if k == 0:
            return Jet2.constant(1.0, self.value.shape, self.dim)
        if k == 1:
            return self
        if k < 0:
            return self.reciprocal().ipow(-k)
        u = self.value
        return self.compose(u ** k, k * u ** (k - 1), k * (k - 1) * u ** (k - 2))

    def power(self, other):
        """General power rewritten as exp(b*log(a))"""
        return (other * self.log()).exp()


_UNARY = {
    "sin": Jet2.sin,
    "cos": Jet2.cos,
    "tan": Jet2.tan,
    "exp": Jet2.exp,
    "log": Jet2.log,
    "sqrt": Jet2.sqrt,
}


def _jet(expr: Expr, points: np.ndarray) -> Jet2:
    shape, n = points.shape[:-1], points.shape[-1]
    try:
        if isinstance(expr, Num):
            return Jet2.constant(expr.value, shape, n)
        if isinstance(expr, Const):
            return Jet2.constant(math.pi, shape, n)
        if isinstance(expr, Var):
            return Jet2.variable(points, expr.index)
        if isinstance(expr, Neg):
            return -_jet(expr.operand, points)
        if isinstance(expr, Call):
            return _UNARY[expr.func](_jet(expr.arg, points))
        if isinstance(expr, BinOp):
            left = _jet(expr.left, points)
            if expr.op == "^":
                k = constant_value(expr.right)
                if k is not None and float(k).is_integer():
                    return left.ipow(int(k))
                return left.power(_jet(expr.right, points))
            right = _jet(expr.right, points)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            return left / right
    except JetDomainError as exc:
        raise ExpressionDomainError(str(exc), format_expr(expr)) from None
    raise TypeError(f"not an expression node: {expr!r}")


def eval_jet2(expr: Expr, point) -> Jet2:
    """Evaluate an expression and its first and second derivatives.

    ``point`` may be a single point of shape (n,) or a batch of shape (S, n).
    """
    points = np.asarray(point, dtype=float)
    if points.ndim == 1:
        jet = _jet(expr, points[None, :])
        return Jet2(jet.value[0], jet.gradient[0], jet.packed_hessian[0])
    return _jet(expr, points)


_VALUE_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}


def _value(expr: Expr, points: np.ndarray) -> np.ndarray:
    shape = points.shape[:-1]
    if isinstance(expr, Num):
        return np.full(shape, expr.value)
    if isinstance(expr, Const):
        return np.full(shape, math.pi)
    if isinstance(expr, Var):
        return points[..., expr.index].astype(float)
    if isinstance(expr, Neg):
        return -_value(expr.operand, points)
    if isinstance(expr, Call):
        u = _value(expr.arg, points)
        if expr.func == "log" and np.any(u <= 0.0):
            raise ExpressionDomainError("log of a nonpositive value", format_expr(expr))
        if expr.func == "sqrt" and np.any(u < 0.0):
            raise ExpressionDomainError("sqrt of a negative value", format_expr(expr))
        return _VALUE_FUNCS[expr.func](u)
    left, right = _value(expr.left, points), _value(expr.right, points)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if expr.op == "/":
        if np.any(right == 0.0):
            raise ExpressionDomainError("division by zero", format_expr(expr))
        return left / right
    if np.all(np.equal(np.mod(right, 1.0), 0.0)):
        if np.any((left == 0.0) & (right < 0)):
            raise ExpressionDomainError("division by zero", format_expr(expr))
        return left ** right
    if np.any(left <= 0.0):
        raise ExpressionDomainError("log of a nonpositive value", format_expr(expr))
    return np.exp(right * np.log(left))


def evaluate(expr: Expr, points) -> np.ndarray:
    """Values only, for weights and embeddings where no derivatives are needed"""
    return _value(expr, np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# Charts and metric jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """A coordinate chart with metric components g_pq as expressions.

    ``components[p]`` holds the upper-triangle row g_pp..g_p(n-1).
    """
    dim: int
    domain: tuple
    periodic: tuple
    components: tuple
    weight: Optional[Expr] = None

    def __post_init__(self):
        n = self.dim
        if n < 1:
            raise InputError("chart dimension must be at least 1")
        if len(self.domain) != n or len(self.periodic) != n:
            raise InputError(f"chart of dim {n} needs {n} domain intervals and periodic flags")
        for a, b in self.domain:
            if not (math.isfinite(a) and math.isfinite(b) and b > a):
                raise InputError(f"invalid coordinate interval [{a}, {b}]")
        if len(self.components) != n or any(len(row) != n - p for p, row in enumerate(self.components)):
            raise InputError("metric must be given as its upper triangle")
        exprs = [e for row in self.components for e in row] + ([self.weight] if self.weight is not None else [])
        for expr in exprs:
            if max_variable(expr) >= n:
                raise VariableIndexError(max_variable(expr), n)

    def component(self, p: int, q: int) -> Expr:
        if p > q:
            p, q = q, p
        return self.components[p][q - p]

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.domain])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.domain])


def make_chart(metric: Sequence[Sequence[str]], domain, periodic=None, weight: Optional[str] = None) -> Chart:
    """Build a chart from DSL strings (full matrix or upper-triangle rows)"""
    n = len(metric)
    rows = []
    for p, row in enumerate(metric):
        row = list(row)
        if len(row) == n:
            row = row[p:]
        rows.append(tuple(parse_expr(str(text), n) for text in row))
    periodic = tuple(bool(flag) for flag in (periodic or [False] * n))
    weight_expr = parse_expr(str(weight), n) if weight is not None else None
    return Chart(n, tuple((float(a), float(b)) for a, b in domain), periodic, tuple(rows), weight_expr)


def load_chart(data: Mapping) -> Chart:
    """Chart from the JSON layout {dim, domain, periodic, metric, weight?}"""
    try:
        dim = int(data["dim"])
        metric = data["metric"]
        domain = data["domain"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"chart is missing field {exc}") from None
    if len(metric) != dim:
        raise InputError(f"metric has {len(metric)} rows for a {dim}-dimensional chart")
    return make_chart(metric, domain, data.get("periodic"), data.get("weight"))


def chart_to_dict(chart: Chart) -> dict:
    data = {
        "dim": chart.dim,
        "domain": [list(interval) for interval in chart.domain],
        "periodic": list(chart.periodic),
        "metric": [[format_expr(e) for e in row] for row in chart.components],
    }
    if chart.weight is not None:
        data["weight"] = format_expr(chart.weight)
    return data


def scaled_chart(chart: Chart, c: float) -> Chart:
    """The same chart with metric c*g"""
    rows = tuple(tuple(BinOp("*", Num(float(c)), e) for e in row) for row in chart.components)
    return Chart(chart.dim, chart.domain, chart.periodic, rows, chart.weight)


@dataclass(frozen=True)
class MetricJet:
    """g, dg[p,q,r] = d_p g_qr and ddg[p,q,r,s] = d_p d_q g_rs, with leading batch shape"""
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[-1]


def check_positive_definite(g: np.ndarray, points=None):
    eigenvalues = np.linalg.eigvalsh(g)
    smallest = eigenvalues[..., 0]
    if np.any(~(smallest > 0.0)):
        bad = np.argmin(np.where(np.isnan(smallest), -np.inf, smallest).reshape(-1))
        where = ""
        if points is not None:
            where = f" at {np.asarray(points).reshape(-1, g.shape[-1])[bad].tolist()}"
        raise MetricError(f"metric is not positive definite{where} (smallest eigenvalue {smallest.reshape(-1)[bad]:.3g})")


def metric_jet(chart: Chart, point, check: bool = True) -> MetricJet:
    """Metric with exact first and second derivatives at one point or a batch.

    Each upper-triangle component is evaluated once and written to both
    symmetric slots, so the symmetries of g, dg and ddg hold bit for bit.
    """
    points = np.asarray(point, dtype=float)
    n = chart.dim
    if points.shape[-1] != n:
        raise InputError(f"point has {points.shape[-1]} coordinates for a {n}-dimensional chart")
    if points.ndim == 1:
        mj = metric_jet(chart, points[None, :], check)
        return MetricJet(mj.g[0], mj.dg[0], mj.ddg[0])
    shape = points.shape[:-1]
    g = np.empty(shape + (n, n))
    dg = np.empty(shape + (n, n, n))
    ddg = np.empty(shape + (n, n, n, n))
    i, j = hessian_pairs(n)
    for p in range(n):
        for q in range(p, n):
            jet = eval_jet2(chart.component(p, q), points)
            hess = np.empty(shape + (n, n))
            hess[..., i, j] = jet.packed_hessian
            hess[..., j, i] = jet.packed_hessian
            for a, b in ((p, q), (q, p)):
                g[..., a, b] = jet.value
                dg[..., :, a, b] = jet.gradient
                ddg[..., :, :, a, b] = hess
    if check:
        check_positive_definite(g, points)
    return MetricJet(g, dg, ddg)
