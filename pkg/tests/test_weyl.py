import random
from fractions import Fraction

import pytest

from fedstar.errors import HbarFloorError, StructureError
from fedstar.hbar import HbarSeries
from fedstar.multipoly import MultiPoly
from fedstar.scalars import GaussianRational, I_UNIT
from fedstar.weyl import (
    WeylContext,
    center_test,
    grading_split,
    moyal_product,
    weyl_commutator,
)

from helpers import (
    fiber_poly_element,
    moyal_oracle,
    random_weyl_element,
    standard_block_moyal_oracle,
)


def ctx_n1(trunc=8):
    return WeylContext.standard(1, trunc)


def test_generator_product_matches_paper_normalization():
    ctx = ctx_n1()
    xhat, xihat = ctx.generator(0), ctx.generator(1)
    prod = moyal_product(xhat, xihat)
    expected = ctx.fiber_monomial((1, 1)) + ctx.scalar(
        I_UNIT * Fraction(1, 2), k=1
    )
    assert prod == expected


def test_square_product_two_orders():
    ctx = ctx_n1()
    x2 = ctx.fiber_monomial((2, 0))
    xi2 = ctx.fiber_monomial((0, 2))
    prod = moyal_product(x2, xi2)
    expected = (
        ctx.fiber_monomial((2, 2))
        + ctx.fiber_monomial((1, 1), k=1, coeff=GaussianRational(0, 2))
        + ctx.scalar(Fraction(-1, 2), k=2)
    )
    assert prod == expected


def test_unit_is_neutral():
    ctx = ctx_n1()
    rng = random.Random(3)
    one = ctx.scalar(1)
    for _ in range(10):
        a = random_weyl_element(rng, ctx)
        assert moyal_product(one, a) == a
        assert moyal_product(a, one) == a


def test_context_mismatch():
    a = ctx_n1().generator(0)
    b = WeylContext.standard(2, 8).generator(0)
    with pytest.raises(StructureError):
        moyal_product(a, b)


def test_commutator_examples():
    ctx = ctx_n1()
    xhat, xihat = ctx.generator(0), ctx.generator(1)
    assert weyl_commutator(xhat, xihat) == ctx.scalar(1, k=1).scale(I_UNIT)
    a = ctx.fiber_monomial((2, 1)) + ctx.scalar(5)
    assert weyl_commutator(a, a).is_zero
    assert weyl_commutator(xhat, ctx.fiber_monomial((2, 0))).is_zero


def test_commutator_of_hbar_inverse_elements_stays_representable():
    ctx = ctx_n1()
    a = ctx.fiber_monomial((1, 0), k=-1)
    b = ctx.fiber_monomial((0, 1), k=-1)
    assert weyl_commutator(a, b) == ctx.scalar(I_UNIT, k=-1)
    with pytest.raises(HbarFloorError):
        moyal_product(a, b)


def test_grading_split_examples():
    ctx = ctx_n1()
    a = ctx.generator(0) + ctx.scalar(1, k=1)
    split = grading_split(a)
    assert set(split) == {1, 2}
    assert split[1] == ctx.generator(0)
    assert split[2] == ctx.scalar(1, k=1)

    c = ctx.scalar(Fraction(3, 7), k=-1)
    assert set(grading_split(c)) == {-2}
    assert grading_split(ctx.zero()) == {}


def test_grading_components_sum_back():
    ctx = ctx_n1()
    rng = random.Random(5)
    for _ in range(10):
        a = random_weyl_element(rng, ctx)
        total = ctx.zero()
        for comp in grading_split(a).values():
            total = total + comp
        assert total == a


def test_center_examples():
    ctx = ctx_n1()
    scalars = ctx.scalar(1, k=3) + ctx.scalar(5)
    ok, witness = center_test(scalars)
    assert ok and witness is None

    bad, witness = center_test(ctx.generator(0))
    assert not bad
    assert witness == "yhat2"

    ok, _ = center_test(ctx.zero())
    assert ok


def test_center_detects_top_degree_terms():
    # a term at the truncation cap still fails the center test
    ctx = ctx_n1(trunc=2)
    x2 = ctx.fiber_monomial((2, 0))
    ok, witness = center_test(x2)
    assert not ok and witness == "yhat2"


def test_moyal_against_tuple_oracle_n1():
    ctx = ctx_n1(trunc=6)
    rng = random.Random(17)
    for _ in range(8):
        a = fiber_poly_element(ctx, rng, degree=3)
        b = fiber_poly_element(ctx, rng, degree=3)
        assert moyal_product(a, b) == moyal_oracle(a, b)


def test_moyal_against_block_oracle_n2():
    ctx = WeylContext.standard(2, 8)
    rng = random.Random(23)
    for _ in range(6):
        a = fiber_poly_element(ctx, rng, degree=4)
        b = fiber_poly_element(ctx, rng, degree=4)
        assert moyal_product(a, b) == standard_block_moyal_oracle(ctx, a, b)


def test_associativity_at_truncation():
    for n in (1, 2):
        ctx = WeylContext.standard(n, 6)
        rng = random.Random(29 + n)
        for _ in range(6):
            a = random_weyl_element(rng, ctx, fiber_degree=2, nterms=3)
            b = random_weyl_element(rng, ctx, fiber_degree=2, nterms=3)
            c = random_weyl_element(rng, ctx, fiber_degree=2, nterms=3)
            lhs = moyal_product(moyal_product(a, b), c)
            rhs = moyal_product(a, moyal_product(b, c))
            assert lhs == rhs


def test_degree_filtration_and_top_symbol():
    from fedstar.weyl import WeylElement

    ctx = ctx_n1()
    rng = random.Random(31)
    for _ in range(10):
        a = fiber_poly_element(ctx, rng, degree=3)
        b = fiber_poly_element(ctx, rng, degree=3)
        if a.is_zero or b.is_zero:
            continue
        prod = moyal_product(a, b)
        da, db = a.degree(), b.degree()
        if prod:
            assert prod.degree() <= da + db
        # top piece of the fiber filtration multiplies commutatively
        pa = max(sum(al) for (al, _) in a.terms)
        pb = max(sum(al) for (al, _) in b.terms)
        top = prod.fiber_component(pa + pb)
        commutative = {}
        for (aa, ka), ca in a.fiber_component(pa).terms.items():
            for (ab, kb), cb in b.fiber_component(pb).terms.items():
                key = (tuple(x + y for x, y in zip(aa, ab)), ka + kb)
                commutative[key] = commutative.get(
                    key, MultiPoly.zero(ctx.base_vars)
                ) + ca * cb
        assert top == WeylElement(ctx, commutative)


def test_first_order_commutator_is_poisson():
    ctx = ctx_n1()
    rng = random.Random(37)
    for _ in range(10):
        a = fiber_poly_element(ctx, rng, degree=3)
        b = fiber_poly_element(ctx, rng, degree=3)
        comm = weyl_commutator(a, b)
        # (1/i hbar) [a, b] mod hbar = pi^{ij} d_i a d_j b
        first = comm.hbar_shift(-1).scale(I_UNIT.inverse())
        first = WeylContext.with_trunc(ctx, ctx.trunc_total).zero() + first
        first_mod = {
            key: p for key, p in first.terms.items() if key[1] == 0
        }
        poisson = ctx.zero()
        for i, j, pij in ctx.pi_pairs:
            piece = a.fiber_derive(i)
            if piece.is_zero:
                continue
            other = b.fiber_derive(j)
            if other.is_zero:
                continue
            from helpers import _plain_product

            poisson = poisson + _plain_product(piece, other).scale(pij)
        from fedstar.weyl import WeylElement

        assert WeylElement(ctx, first_mod) == poisson


def test_weyl_symmetry_linear():
    ctx = ctx_n1()
    a = ctx.generator(0) + ctx.generator(1).scale(GaussianRational(2, 1))
    b = ctx.generator(1)
    lhs = moyal_product(a, b) + moyal_product(b, a)
    from helpers import _plain_product

    assert lhs == _plain_product(a, b).scale(2)


def test_rendering_style():
    ctx = ctx_n1()
    e = ctx.fiber_monomial((2, 0), k=1, coeff=GaussianRational(Fraction(3, 2), Fraction(1, 2)))
    assert str(e) == "yhat1^2*hbar*((3/2 + 1/2*i))"
