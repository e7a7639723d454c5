"""Expression parsing, printing and 2-jet evaluation."""
import math

import numpy as np
import pytest

from lkengine.errors import (
    ExpressionDomainError,
    ExpressionSyntaxError,
    MetricError,
    UnknownIdentifierError,
    VariableIndexError,
)
from lkengine.geometry.metricfield import (
    BinOp,
    Call,
    Const,
    Jet2,
    Neg,
    Num,
    Var,
    chart_to_dict,
    eval_jet2,
    evaluate,
    format_expr,
    load_chart,
    make_chart,
    metric_jet,
    negate,
    parse_expr,
    scaled_chart,
    substitute,
)


def value(text, *point):
    return float(evaluate(parse_expr(text, max(1, len(point))), np.array([point], dtype=float))[0])


class TestParsing:

    def test_precedence_and_associativity(self):
        assert value("2+3*4", 0.0) == 14.0
        assert value("-2^2", 0.0) == -4.0
        assert value("2^3^2", 0.0) == 512.0
        assert value("2^-1", 0.0) == 0.5
        assert value("(1 - 4) / 2", 0.0) == -1.5

    def test_functions_and_constants(self):
        assert value("sin(x0)^2", math.pi / 4) == pytest.approx(0.5, abs=1e-15)
        assert value("cos(pi)", 0.0) == pytest.approx(-1.0)
        assert value("exp(log(x0)) + sqrt(x1)", 2.5, 9.0) == pytest.approx(5.5)
        assert value("tan(x0)", 0.25) == pytest.approx(math.tan(0.25))

    def test_number_forms(self):
        assert value("1e-05 * 2.5E3", 0.0) == pytest.approx(0.025)
        assert parse_expr("3", 1) == Num(3.0)

    def test_round_trip_through_printer(self):
        for text in ("sin(x0)^2 * (1 + 0.3*sin(x2))^2", "-x0 / (x1 - 2) ^ -3", "exp(-(x0*x0)) + pi", "2^3^2"):
            expr = parse_expr(text, 3)
            assert parse_expr(format_expr(expr), 3) == expr

    def test_syntax_error_offsets(self):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expr("x0 + * x1", 2)
        assert info.value.offset == 5
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expr("x0 + $", 1)
        assert info.value.offset == 5
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expr("x0 +", 1)
        assert info.value.offset == 4
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expr("   ", 1)
        assert info.value.offset == 0

    def test_unknown_identifiers(self):
        with pytest.raises(UnknownIdentifierError) as info:
            parse_expr("y + 1", 1)
        assert info.value.name == "y"
        assert info.value.offset == 0
        with pytest.raises(UnknownIdentifierError):
            parse_expr("cosh(x0)", 1)

    def test_variable_out_of_range(self):
        with pytest.raises(VariableIndexError) as info:
            parse_expr("x0 * x3", 2)
        assert info.value.index == 3
        assert info.value.exit_code == 4


class TestJets:

    TEXT = "exp(x0)*sin(x1) + x0^3/x1 + sqrt(x0 + 2)*log(x1 + 1) + (x0 + 1.5)^x1"

    def test_derivatives_match_finite_differences(self):
        expr = parse_expr(self.TEXT, 2)
        point = np.array([0.3, 0.7])
        jet = eval_jet2(expr, point)
        h = 1e-5
        eye = np.eye(2)
        gradient = np.array([(evaluate(expr, point + h * eye[k]) - evaluate(expr, point - h * eye[k])) / (2 * h)
                             for k in range(2)])
        np.testing.assert_allclose(jet.gradient, gradient, rtol=1e-8, atol=1e-8)
        hessian = np.array([(eval_jet2(expr, point + h * eye[k]).gradient - eval_jet2(expr, point - h * eye[k]).gradient)
                            / (2 * h) for k in range(2)])
        np.testing.assert_allclose(jet.hessian, hessian, rtol=1e-6, atol=1e-6)
        assert jet.value == pytest.approx(float(evaluate(expr, point)))

    def test_batch_matches_single_points(self):
        expr = parse_expr(self.TEXT, 2)
        points = np.array([[0.3, 0.7], [1.1, 0.2], [0.05, 2.0]])
        batch = eval_jet2(expr, points)
        for k, point in enumerate(points):
            single = eval_jet2(expr, point)
            np.testing.assert_allclose(batch.gradient[k], single.gradient, rtol=1e-14)
            np.testing.assert_allclose(batch.packed_hessian[k], single.packed_hessian, rtol=1e-14)

    def test_domain_errors_name_the_subexpression(self):
        with pytest.raises(ExpressionDomainError) as info:
            eval_jet2(parse_expr("1 + log(x0)", 1), np.array([-1.0]))
        assert info.value.subexpression == "log(x0)"
        with pytest.raises(ExpressionDomainError) as info:
            eval_jet2(parse_expr("1/x0", 1), np.array([0.0]))
        assert "x0" in info.value.subexpression
        with pytest.raises(ExpressionDomainError):
            evaluate(parse_expr("sqrt(x0)", 1), np.array([[-0.5]]))

    def test_substitute_freezes_variables(self):
        expr = substitute(parse_expr("x0*x1", 2), {1: 2.0})
        assert expr == BinOp("*", Var(0), Num(2.0))
        assert float(evaluate(expr, np.array([[3.0, 0.0]]))[0]) == 6.0


class TestCharts:

    def sphere(self):
        return make_chart([["1", "0"], ["sin(x0)^2"]], [(0, math.pi), (0, 2 * math.pi)], [False, True])

    def test_sphere_metric_jet(self):
        mj = metric_jet(self.sphere(), np.array([math.pi / 4, 1.0]))
        np.testing.assert_allclose(mj.g, [[1.0, 0.0], [0.0, 0.5]], atol=1e-15)
        assert mj.dg[0, 1, 1] == pytest.approx(1.0)
        assert mj.ddg[0, 0, 1, 1] == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_array_equal(mj.dg, np.swapaxes(mj.dg, -1, -2))
        np.testing.assert_array_equal(mj.ddg, np.swapaxes(mj.ddg, 0, 1))

    def test_indefinite_metric_is_rejected(self):
        chart = make_chart([["1", "2"], ["1"]], [(0, 1), (0, 1)])
        with pytest.raises(MetricError):
            metric_jet(chart, np.array([0.5, 0.5]))

    def test_json_round_trip(self):
        chart = make_chart([["1", "0.1"], ["(2 + cos(x0))^2"]], [(0, 1), (0, 2)], [True, False], weight="0.5")
        assert load_chart(chart_to_dict(chart)) == chart

    def test_chart_validation(self):
        with pytest.raises(VariableIndexError):
            make_chart([["x2"]], [(0, 1)])
        with pytest.raises(Exception):
            make_chart([["1"]], [(1, 0)])

    def test_scaled_chart(self):
        scaled = scaled_chart(self.sphere(), 4.0)
        mj = metric_jet(scaled, np.array([math.pi / 2, 0.0]))
        np.testing.assert_allclose(mj.g, 4.0 * np.eye(2), atol=1e-14)


def random_expr(rng, budget, dim=3):
    """A random AST of depth <= budget, returned with a bound on |value| over [-1, 1]^dim.

    Arguments of log, sqrt, division and real powers are kept >= 0.5 and tan
    arguments within +-0.5, so every tree evaluates cleanly on the box.
    """
    if budget <= 1 or rng.random() < 0.2:
        kind = rng.integers(3)
        if kind == 0:
            return Var(int(rng.integers(dim))), 1.0
        if kind == 1:
            c = round(float(rng.uniform(-2.0, 2.0)), 3)
            return Num(c), abs(c)
        return Const("pi"), math.pi

    def positive(child_budget):
        child, bound = random_expr(rng, child_budget, dim)
        if bound > 3.0:
            child, bound = Var(int(rng.integers(dim))), 1.0
        c0 = round(float(rng.uniform(0.5, 2.0)), 3)
        return BinOp("+", Num(c0), BinOp("*", child, child)), c0, c0 + bound * bound

    ops = ["neg", "sin", "cos", "+", "-", "*", "^"]
    if budget >= 3:
        ops.append("exp")
    if budget >= 4:
        ops += ["log", "sqrt", "/", "pow", "tan"]
    op = ops[rng.integers(len(ops))]
    if op == "neg":
        child, bound = random_expr(rng, budget - 1, dim)
        return negate(child), bound
    if op in ("sin", "cos"):
        child, _ = random_expr(rng, budget - 1, dim)
        return Call(op, child), 1.0
    if op == "exp":
        child, bound = random_expr(rng, budget - 2, dim)
        if bound > 1.0:
            return Call("exp", Call("sin", child)), math.e
        return Call("exp", child), math.exp(bound)
    if op in ("log", "sqrt"):
        arg, low, high = positive(budget - 3)
        if op == "log":
            return Call("log", arg), max(abs(math.log(low)), abs(math.log(high)))
        return Call("sqrt", arg), math.sqrt(high)
    if op == "tan":
        child, _ = random_expr(rng, budget - 3, dim)
        return Call("tan", BinOp("*", Num(0.5), Call("sin", child))), math.tan(0.5)
    if op == "/":
        left, bound = random_expr(rng, budget - 1, dim)
        right, low, _ = positive(budget - 3)
        return BinOp("/", left, right), bound / low
    if op == "pow":
        base, low, high = positive(budget - 3)
        r = round(float(rng.uniform(-1.5, 1.5)), 2)
        return BinOp("^", base, Num(r)), max(low ** r, high ** r)
    left, left_bound = random_expr(rng, budget - 1, dim)
    if op == "^":
        k = int(rng.integers(2, 4))
        if left_bound ** k <= 10.0:
            return BinOp("^", left, Num(float(k))), left_bound ** k
        return Call("sin", left), 1.0
    right, right_bound = random_expr(rng, budget - 1, dim)
    if op == "*" and left_bound * right_bound <= 10.0:
        return BinOp("*", left, right), left_bound * right_bound
    return BinOp("-" if op == "-" else "+", left, right), left_bound + right_bound


def depth(expr):
    if isinstance(expr, Neg):
        return 1 + depth(expr.operand)
    if isinstance(expr, Call):
        return 1 + depth(expr.arg)
    if isinstance(expr, BinOp):
        return 1 + max(depth(expr.left), depth(expr.right))
    return 1


def five_point(values, h):
    """Central difference from samples at x-2h, x-h, x+h, x+2h along the leading axis"""
    return (values[0] - 8.0 * values[1] + 8.0 * values[2] - values[3]) / (12.0 * h)


class TestRandomExpressions:

    COUNT = 1000
    STEPS = np.array([-2.0, -1.0, 1.0, 2.0])

    def test_printer_round_trip(self, rng):
        for _ in range(self.COUNT):
            expr, _ = random_expr(rng, 6)
            assert depth(expr) <= 6
            assert parse_expr(format_expr(expr), 3) == expr

    def test_negative_literals_survive_printing(self):
        assert parse_expr(format_expr(Num(-2.0)), 1) == Num(-2.0)
        assert parse_expr("-2.5", 1) == Num(-2.5)
        assert parse_expr("-x0", 1) == Neg(Var(0))
        frozen = substitute(parse_expr("-x1 * x0", 2), {1: 3.0})
        assert frozen == BinOp("*", Num(-3.0), Var(0))
        assert parse_expr(format_expr(frozen), 2) == frozen

    def test_jets_match_finite_differences(self, rng):
        h = 1e-5
        eye = np.eye(3)
        for _ in range(self.COUNT):
            expr, _ = random_expr(rng, 6)
            point = rng.uniform(-1.0, 1.0, size=3)
            # (axis, step) grid of shifted points, then the centre
            shifted = point + h * self.STEPS[None, :, None] * eye[:, None, :]
            batch = np.concatenate([shifted.reshape(-1, 3), point[None, :]])
            jets = eval_jet2(expr, batch)
            values = evaluate(expr, batch)
            centre = Jet2(jets.value[-1], jets.gradient[-1], jets.packed_hessian[-1])

            assert centre.value == pytest.approx(values[-1], rel=1e-12, abs=1e-12)
            gradient = np.array([five_point(values[:-1].reshape(3, 4)[k], h) for k in range(3)])
            scale = max(1.0, float(np.max(np.abs(gradient))))
            np.testing.assert_allclose(centre.gradient, gradient, rtol=1e-6, atol=1e-6 * scale,
                                       err_msg=format_expr(expr))
            shifted_gradients = jets.gradient[:-1].reshape(3, 4, 3)
            hessian = np.array([five_point(shifted_gradients[k], h) for k in range(3)])
            scale = max(1.0, float(np.max(np.abs(hessian))))
            np.testing.assert_allclose(centre.hessian, hessian, rtol=1e-4, atol=1e-4 * scale,
                                       err_msg=format_expr(expr))
