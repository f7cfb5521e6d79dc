import random

import pytest

from fedstar.charts import (
    AlgebroidChart,
    EForm,
    catalogue,
    e_derham_d,
    hamiltonian_field,
    poisson_bracket,
    validate_algebroid,
    weyl_model_product,
)
from fedstar.errors import StructureError
from fedstar.hbar import HbarSeries
from fedstar.multipoly import MultiPoly
from fedstar.parsing import parse_series

from helpers import random_multipoly

ALL_CHARTS = [
    catalogue("standard", n=1),
    catalogue("standard", n=2),
    catalogue("zero_anchor"),
    catalogue("foliation"),
    catalogue("b_symplectic"),
    catalogue("mixed", k=1, l=1, m=1),
]


def test_catalogue_charts_validate():
    for chart in ALL_CHARTS:
        report = validate_algebroid(chart)
        assert report.passed, f"{chart.name}: {report.to_text()}"


def test_standard_chart_shape():
    chart = catalogue("standard", n=1)
    assert chart.base_vars == ("x1", "xi1")
    assert chart.rank == 2
    assert chart.omega[0][1] == chart.const_poly(1)


def test_mixed_101_anchor_entries():
    chart = catalogue("mixed", k=1, l=0, m=0)
    z1 = chart.var("z1")
    z2 = chart.var("z2")
    assert chart.anchor[0][0] == z1
    assert chart.anchor[1][1] == z2
    assert all(
        chart.structure[i][j][k].is_zero
        for i in range(2) for j in range(2) for k in range(2)
    )


def test_perturbed_zero_anchor_fails_jacobi_with_witness():
    base = catalogue("zero_anchor")
    structure = [
        [[p for p in col] for col in row] for row in base.structure
    ]
    one = base.const_poly(1)
    structure[0][1][0] = structure[0][1][0] + one
    structure[1][0][0] = structure[1][0][0] - one
    bad = AlgebroidChart(
        base.base_vars, base.rank, base.anchor, structure, base.omega
    )
    report = validate_algebroid(bad)
    assert not report.passed
    jacobi = next(c for c in report.checks if c.axiom == "Jacobi identity")
    assert not jacobi.passed
    assert jacobi.witness == "(e1,e2,e3)"


def test_derham_of_closed_function():
    chart = catalogue("standard", n=1)
    form = EForm(chart, 1, {(0,): chart.var("x1")})
    d = e_derham_d(form)
    assert d.is_zero


def test_derham_of_function_is_gradient():
    chart = catalogue("standard", n=1)
    f = chart.parse("x1*xi1")
    d = e_derham_d(EForm(chart, 0, {(): f}))
    assert d.coeffs[(0,)] == chart.var("xi1")
    assert d.coeffs[(1,)] == chart.var("x1")


def test_derham_squared_zero_random():
    rng = random.Random(5)
    for chart in ALL_CHARTS:
        for degree in range(0, min(3, chart.rank - 1)):
            coeffs = {}
            indices = list(range(chart.rank))
            for _ in range(3):
                idx = tuple(sorted(rng.sample(indices, degree)))
                coeffs[idx] = random_multipoly(rng, chart.base_vars, degree=2)
            form = EForm(chart, degree, coeffs)
            dd = e_derham_d(e_derham_d(form))
            assert dd.is_zero, f"{chart.name} degree {degree}"


def test_derham_degree_overflow():
    chart = catalogue("standard", n=1)
    top = EForm(chart, 2, {(0, 1): chart.const_poly(1)})
    with pytest.raises(StructureError):
        e_derham_d(top)


def test_hamiltonian_standard():
    chart = catalogue("standard", n=1)
    x_f, h_f = hamiltonian_field(chart.var("x1"), chart)
    assert x_f == (chart.zero_poly(), chart.const_poly(1))
    assert h_f == (chart.zero_poly(), chart.const_poly(1))
    _, h_zero = hamiltonian_field(chart.const_poly(5), chart)
    assert all(c.is_zero for c in h_zero)


def test_hamiltonian_log_pair():
    chart = catalogue("b_symplectic")
    _, h = hamiltonian_field(chart.var("z2"), chart)
    # proportional to z1*z2 in the dual direction
    assert h[0] == -(chart.var("z1") * chart.var("z2"))
    assert h[1].is_zero


def test_poisson_examples():
    st1 = catalogue("standard", n=2)
    assert poisson_bracket(st1.var("x1"), st1.var("xi1"), st1) == st1.const_poly(1)
    assert poisson_bracket(st1.var("x1"), st1.var("xi2"), st1).is_zero
    assert poisson_bracket(st1.var("x2"), st1.var("xi2"), st1) == st1.const_poly(1)

    b = catalogue("b_symplectic")
    assert poisson_bracket(b.var("z1"), b.var("z2"), b) == b.var("z1") * b.var("z2")

    mixed = catalogue("mixed", k=1, l=1, m=1)
    assert poisson_bracket(mixed.var("y1"), mixed.var("eta1"), mixed) == mixed.var("y1")

    f = st1.parse("x1^2*xi2 + x2")
    assert poisson_bracket(f, f, st1).is_zero


def test_poisson_antisymmetry_and_jacobi():
    rng = random.Random(9)
    for chart in ALL_CHARTS[:5]:
        for _ in range(4):
            f = random_multipoly(rng, chart.base_vars, degree=2)
            g = random_multipoly(rng, chart.base_vars, degree=2)
            h = random_multipoly(rng, chart.base_vars, degree=2)
            assert poisson_bracket(f, g, chart) == -poisson_bracket(g, f, chart)
            jac = (
                poisson_bracket(f, poisson_bracket(g, h, chart), chart)
                + poisson_bracket(g, poisson_bracket(h, f, chart), chart)
                + poisson_bracket(h, poisson_bracket(f, g, chart), chart)
            )
            assert jac.is_zero, chart.name


def test_hamiltonian_fields_close_under_bracket():
    rng = random.Random(13)
    for chart in ALL_CHARTS[:5]:
        for _ in range(3):
            f = random_multipoly(rng, chart.base_vars, degree=2)
            g = random_multipoly(rng, chart.base_vars, degree=2)
            _, hf = hamiltonian_field(f, chart)
            _, hg = hamiltonian_field(g, chart)
            _, hfg = hamiltonian_field(poisson_bracket(f, g, chart), chart)
            lhs = chart.vf_bracket(hf, hg)
            assert all((a - b).is_zero for a, b in zip(lhs, hfg)), chart.name


def test_foliation_transverse_coordinates_are_casimirs():
    chart = catalogue("foliation")
    t = chart.var("t1")
    f = chart.parse("x1*xi1 + t1^2")
    assert poisson_bracket(t, f, chart).is_zero


def test_weyl_model_log_pair_exponential():
    chart = catalogue("mixed", k=1, l=0, m=0)
    z1, z2 = chart.var("z1"), chart.var("z2")
    got = weyl_model_product(z1, z2, chart, 4)
    expected = parse_series(
        "(z1*z2) + hbar*(i/2*z1*z2) + hbar^2*(-1/8*z1*z2)"
        " + hbar^3*(-i/48*z1*z2) + hbar^4*(1/384*z1*z2)",
        chart.base_vars,
        trunc=4,
    )
    assert got == expected


def test_weyl_model_unit():
    chart = catalogue("mixed", k=1, l=1, m=0)
    f = chart.parse("z1^2*y1 + eta1")
    one = chart.const_poly(1)
    assert weyl_model_product(f, one, chart, 5) == HbarSeries.from_poly(f, 5)
    assert weyl_model_product(one, f, chart, 5) == HbarSeries.from_poly(f, 5)


def test_weyl_model_first_order_is_poisson():
    rng = random.Random(21)
    chart = catalogue("mixed", k=1, l=1, m=1)
    for _ in range(5):
        f = random_multipoly(rng, chart.base_vars, degree=2)
        g = random_multipoly(rng, chart.base_vars, degree=2)
        fg = weyl_model_product(f, g, chart, 3)
        gf = weyl_model_product(g, f, chart, 3)
        diff = fg - gf
        assert diff.coefficient(0).is_zero
        # (1 / i hbar)(f*g - g*f) mod hbar = {f, g}
        from fedstar.scalars import I_UNIT

        first = diff.coefficient(1) * I_UNIT.inverse()
        assert first == poisson_bracket(f, g, chart)


def test_weyl_model_associative():
    rng = random.Random(27)
    chart = catalogue("mixed", k=1, l=0, m=1)
    for _ in range(4):
        f = random_multipoly(rng, chart.base_vars, degree=2, nterms=2)
        g = random_multipoly(rng, chart.base_vars, degree=2, nterms=2)
        h = random_multipoly(rng, chart.base_vars, degree=2, nterms=2)
        n = 4

        def star_series(a, b):
            out = HbarSeries.zero(chart.base_vars, n)
            for k, p in a.coeffs.items():
                piece = weyl_model_product(p, b, chart, n)
                out = out + HbarSeries(
                    chart.base_vars,
                    {k + k2: q for k2, q in piece.coeffs.items() if k + k2 <= n},
                    n,
                )
            return out

        fg = weyl_model_product(f, g, chart, n)
        gh = weyl_model_product(g, h, chart, n)
        lhs = star_series(fg, h)
        rhs_pieces = HbarSeries.zero(chart.base_vars, n)
        for k, p in gh.coeffs.items():
            piece = weyl_model_product(f, p, chart, n)
            rhs_pieces = rhs_pieces + HbarSeries(
                chart.base_vars,
                {k + k2: q for k2, q in piece.coeffs.items() if k + k2 <= n},
                n,
            )
        assert lhs == rhs_pieces


def test_weyl_model_rejects_zero_anchor():
    chart = catalogue("zero_anchor")
    with pytest.raises(StructureError):
        weyl_model_product(chart.const_poly(1), chart.const_poly(1), chart, 2)


def test_chart_json_roundtrip():
    for chart in ALL_CHARTS:
        data = chart.to_json_dict()
        back = AlgebroidChart.from_json_dict(data)
        assert back == chart
