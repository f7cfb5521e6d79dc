"""Shared test utilities: independent oracles and random data generators.

The Moyal oracle here expands the bidifferential exponential as an
explicit sum over index tuples with factorials.  It shares no code with
the iterated-contraction implementation it checks.
"""

import random
from fractions import Fraction
from itertools import product
from math import factorial

from fedstar.multipoly import MultiPoly
from fedstar.scalars import GaussianRational, I_UNIT
from fedstar.weyl import WeylContext, WeylElement


def random_multipoly(rng, variables, degree=3, nterms=4, allow_imag=True):
    terms = {}
    for _ in range(nterms):
        remaining = degree
        exps = []
        for _ in variables:
            e = rng.randint(0, remaining)
            exps.append(e)
            remaining -= e
        im = rng.randint(-2, 2) if allow_imag else 0
        terms[tuple(exps)] = GaussianRational(rng.randint(-4, 4), im)
    return MultiPoly(variables, terms)


def random_weyl_element(rng, ctx, fiber_degree=3, nterms=5, min_hbar=0):
    terms = {}
    for _ in range(nterms):
        alpha = [0] * (2 * ctx.n)
        for _ in range(rng.randint(0, fiber_degree)):
            alpha[rng.randrange(2 * ctx.n)] += 1
        k = rng.randint(min_hbar, max(min_hbar, 2))
        if sum(alpha) + 2 * k > ctx.trunc_total:
            continue
        poly = random_multipoly(rng, ctx.base_vars, degree=2, nterms=2)
        key = (tuple(alpha), k)
        terms[key] = terms.get(key, MultiPoly.zero(ctx.base_vars)) + poly
    return WeylElement(ctx, {k: v for k, v in terms.items() if not v.is_zero})


def fiber_derive_tuple(elem, indices):
    out = elem
    for i in indices:
        out = out.fiber_derive(i)
    return out


def moyal_oracle(a, b):
    """Direct m-fold sum over all contraction index tuples."""
    ctx = a.context
    size = 2 * ctx.n
    cap = ctx.trunc_total
    result = ctx.zero()
    m = 0
    while True:
        coeff = (I_UNIT * Fraction(1, 2)) ** m * Fraction(1, factorial(m))
        contribution = ctx.zero()
        nonzero = False
        for i_tuple in product(range(size), repeat=m):
            da = fiber_derive_tuple(a, i_tuple)
            if da.is_zero:
                continue
            for j_tuple in product(range(size), repeat=m):
                pi_factor = GaussianRational(1)
                ok = True
                for i, j in zip(i_tuple, j_tuple):
                    p = ctx.pi[i][j]
                    if not p:
                        ok = False
                        break
                    pi_factor = pi_factor * p
                if not ok:
                    continue
                db = fiber_derive_tuple(b, j_tuple)
                if db.is_zero:
                    continue
                piece = _plain_product(da, db).scale(pi_factor)
                if piece:
                    nonzero = True
                    contribution = contribution + piece
        if nonzero:
            result = result + contribution.hbar_shift(m).scale(coeff)
        if m > cap + 2:
            break
        if not nonzero and m > 0:
            # derivatives exhausted once both factors are wiped out
            if all(
                fiber_derive_tuple(a, t).is_zero
                for t in product(range(size), repeat=m)
            ):
                break
        m += 1
    return result


def _plain_product(a, b):
    """Commutative (order-zero) product of Weyl elements."""
    ctx = a.context
    terms = {}
    for (aa, ka), pa in a.terms.items():
        for (ab, kb), pb in b.terms.items():
            if sum(aa) + sum(ab) + 2 * (ka + kb) > ctx.trunc_total:
                continue
            key = (tuple(x + y for x, y in zip(aa, ab)), ka + kb)
            prod = pa * pb
            acc = terms.get(key)
            terms[key] = prod if acc is None else acc + prod
    return WeylElement(ctx, terms)


def standard_block_moyal_oracle(ctx, a, b):
    """Closed-form bidifferential sum for the pairwise standard matrix.

    a * b = sum_{s,t} (i hbar/2)^{|s|+|t|} (-1)^{|t|} / (s! t!)
            (d_x^s d_xi^t a)(d_xi^s d_x^t b)
    with x = odd-position fiber vars and xi = even-position ones.
    """
    n = ctx.n
    result = ctx.zero()

    def multi_derive(elem, positions, exps):
        out = elem
        for pos, e in zip(positions, exps):
            for _ in range(e):
                out = out.fiber_derive(pos)
                if out.is_zero:
                    return out
        return out

    x_pos = [2 * t for t in range(n)]
    xi_pos = [2 * t + 1 for t in range(n)]
    bound = ctx.trunc_total + 1

    def tuples(total_max):
        if n == 1:
            return [(e,) for e in range(total_max + 1)]
        out = []
        for e1 in range(total_max + 1):
            for e2 in range(total_max + 1 - e1):
                out.append((e1, e2))
        return out

    for s in tuples(bound):
        for t in tuples(bound - sum(s)):
            m = sum(s) + sum(t)
            da = multi_derive(multi_derive(a, x_pos, s), xi_pos, t)
            if da.is_zero:
                continue
            db = multi_derive(multi_derive(b, xi_pos, s), x_pos, t)
            if db.is_zero:
                continue
            denom = 1
            for e in s + t:
                denom *= factorial(e)
            coeff = (
                (I_UNIT * Fraction(1, 2)) ** m
                * Fraction((-1) ** sum(t), denom)
            )
            piece = _plain_product(da, db).hbar_shift(m).scale(coeff)
            result = result + piece
    return result


def fiber_poly_element(ctx, rng, degree=4, nterms=3):
    """Random polynomial purely in the fiber variables, constant base part."""
    terms = {}
    for _ in range(nterms):
        alpha = [0] * (2 * ctx.n)
        for _ in range(rng.randint(0, degree)):
            alpha[rng.randrange(2 * ctx.n)] += 1
        coeff = GaussianRational(rng.randint(-4, 4), rng.randint(-2, 2))
        key = (tuple(alpha), 0)
        base = MultiPoly.const(ctx.base_vars, coeff)
        acc = terms.get(key)
        terms[key] = base if acc is None else acc + base
    return WeylElement(ctx, {k: v for k, v in terms.items() if not v.is_zero})
