import pytest

from fedstar.errors import HbarFloorError
from fedstar.hbar import HbarSeries, series_truncate
from fedstar.multipoly import MultiPoly
from fedstar.parsing import parse_series

VARS = ("x", "xi")


def S(text, trunc=8):
    return parse_series(text, VARS, trunc)


def test_truncate_drops_high_orders():
    s = S("1 + hbar + hbar^2")
    assert series_truncate(s, 1) == S("1 + hbar")


def test_truncate_keeps_negative_order():
    s = S("hbar^-1*(x*xi)")
    assert series_truncate(s, 0) == s


def test_truncate_idempotent():
    s = S("hbar^-1*(1) + x + hbar^3*(xi^2)")
    assert series_truncate(series_truncate(s, 2), 2) == series_truncate(s, 2)


def test_floor_violation_is_hard_error():
    a = S("hbar^-1*(1)")
    with pytest.raises(HbarFloorError):
        a * a
    with pytest.raises(HbarFloorError):
        HbarSeries(VARS, {-2: MultiPoly.const(VARS, 1)}, 4)


def test_product_truncates_high_orders():
    a = S("1 + hbar", trunc=1)
    assert a * a == S("1 + 2*hbar", trunc=1)


def test_ring_identities():
    a = S("hbar^-1*(xi) + x")
    b = S("1 + hbar*(x)")
    c = S("x*xi + hbar^2*(2)")
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


def test_string_roundtrip():
    s = S("hbar^-1*(x) + (x*xi + 1) + hbar*(2*xi)")
    assert parse_series(str(s), VARS) == s
    assert str(HbarSeries.zero(VARS)) == "0"


def test_mixed_poly_arithmetic():
    p = MultiPoly.variable(VARS, "x")
    s = S("hbar*(xi)")
    assert p + s == S("x + hbar*(xi)")
    assert p * s == S("hbar*(x*xi)")
