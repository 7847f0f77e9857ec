"""Expression grammar: parsing, evaluation, differentiation, printing."""

import math

import numpy as np
import pytest

from invheat import ExpressionError, parse_expression

ROUNDTRIP_CASES = [
    "(1 - x) * sin(2*pi*x)",
    "(exp(-t)/pi + 4*pi*exp(3*t)) * cos(2*pi*x) + (2*pi)^2 * (1 - x) * sin(2*pi*x) * exp(3*t)",
    "exp(-t) / (2*pi)",
    "x - (t - 1)",
    "-x^2 + t",
    "2^3^2",
    "x / (2 * t) - -3",
    "1/(2*pi)^2 + exp(4*t)",
    "-(x + t) * cos(x - t)",
    "1.5e-3 * x + 2.25",
]


class TestEvaluation:
    def test_benchmark_phi_boundary_values(self):
        e = parse_expression("(1-x)*sin(2*pi*x)", variables=("x",))
        assert e(x=0.0) == pytest.approx(0.0, abs=1e-15)
        assert e(x=1.0) == pytest.approx(0.0, abs=1e-15)

    def test_benchmark_energy_at_zero(self):
        e = parse_expression("exp(-t)/(2*pi)", variables=("t",))
        assert e(t=0.0) == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-15)

    def test_power_right_associative(self):
        assert parse_expression("2^3^2", variables=()) () == 512.0

    def test_unary_minus_binds_below_power(self):
        assert parse_expression("-2^2", variables=())() == -4.0

    def test_array_broadcasting(self):
        e = parse_expression("x^2 + 1", variables=("x",))
        np.testing.assert_allclose(e(x=np.array([0.0, 1.0, 2.0])), [1.0, 2.0, 5.0])


class TestErrors:
    def test_unterminated_call_position(self):
        with pytest.raises(ExpressionError) as err:
            parse_expression("sin(", variables=("x",))
        assert err.value.position == 4

    def test_offset_shifts_reported_position(self):
        with pytest.raises(ExpressionError) as err:
            parse_expression("sin(", variables=("x",), offset=6)
        assert err.value.position == 10

    def test_unknown_identifier(self):
        with pytest.raises(ExpressionError, match="unknown identifier"):
            parse_expression("sin(y)", variables=("x",))

    def test_unexpected_character(self):
        with pytest.raises(ExpressionError):
            parse_expression("x @ 2", variables=("x",))

    def test_trailing_input(self):
        with pytest.raises(ExpressionError, match="trailing"):
            parse_expression("1 + 2 3", variables=())

    def test_missing_closing_paren(self):
        with pytest.raises(ExpressionError):
            parse_expression("(x + 1", variables=("x",))


class TestRoundtrip:
    @pytest.mark.parametrize("source", ROUNDTRIP_CASES)
    def test_print_then_reparse_agrees(self, source):
        first = parse_expression(source, variables=("x", "t"))
        second = parse_expression(first.to_string(), variables=("x", "t"))
        rng = np.random.default_rng(0)
        xs = rng.uniform(0.01, 1.0, size=1000)
        ts = rng.uniform(0.01, 1.0, size=1000)
        a = first(x=xs, t=ts)
        b = second(x=xs, t=ts)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(a))))


class TestDerivatives:
    def test_polynomial(self):
        e = parse_expression("x^3", variables=("x",)).diff("x")
        assert e(x=2.0) == pytest.approx(12.0, abs=1e-13)

    def test_exp_chain(self):
        e = parse_expression("exp(3*t)", variables=("t",)).diff("t")
        assert e(t=0.5) == pytest.approx(3.0 * math.exp(1.5), rel=1e-13)

    def test_trig_chain(self):
        e = parse_expression("sin(2*pi*x)", variables=("x",)).diff("x")
        assert e(x=0.25) == pytest.approx(2 * math.pi * math.cos(math.pi / 2), abs=1e-12)

    def test_nonconstant_exponent(self):
        # d/dx x^t = t x^(t-1)
        e = parse_expression("x^t", variables=("x", "t")).diff("x")
        assert e(x=2.0, t=3.0) == pytest.approx(12.0, rel=1e-12)

    def test_other_variable_derivative_is_zero(self):
        e = parse_expression("x^2", variables=("x", "t")).diff("t")
        assert e(x=3.0, t=1.0) == 0.0

    @pytest.mark.parametrize("source", ROUNDTRIP_CASES)
    def test_matches_central_differences(self, source):
        # analytic derivative vs central quotient, 1e-5 relative at
        # interior sample points
        e = parse_expression(source, variables=("x", "t"))
        dx = e.diff("x")
        rng = np.random.default_rng(1)
        h = 1e-6
        for _ in range(20):
            x, t = rng.uniform(0.1, 0.9, size=2)
            fd = (e(x=x + h, t=t) - e(x=x - h, t=t)) / (2 * h)
            an = dx(x=x, t=t)
            assert an == pytest.approx(fd, rel=1e-5, abs=1e-6)
