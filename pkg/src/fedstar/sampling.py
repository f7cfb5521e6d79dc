"""Deterministic sample generators shared by the verifier and the CLI."""

from __future__ import annotations

import random

from .charts import AlgebroidChart, EForm, e_derham_d
from .connections import CurvatureClass, theta_standard
from .hbar import HbarSeries
from .multipoly import MultiPoly
from .scalars import GaussianRational


def seeded_rng(seed: int) -> random.Random:
    return random.Random(seed)


def random_poly(rng, variables, degree=3, nterms=3, allow_imag=True):
    terms = {}
    for _ in range(nterms):
        remaining = degree
        exps = []
        for _ in variables:
            e = rng.randint(0, remaining)
            exps.append(e)
            remaining -= e
        im = rng.randint(-2, 2) if allow_imag else 0
        coeff = GaussianRational(rng.randint(-4, 4), im)
        exps = tuple(exps)
        acc = terms.get(exps, GaussianRational(0))
        terms[exps] = acc + coeff
    return MultiPoly(variables, terms)


def random_closed_two_form(chart: AlgebroidChart, rng, hbar_orders=(1, 2),
                           trunc=8, degree=1) -> EForm:
    """A random closed scalar 2-form with positive hbar orders.

    Differential of a random one-form plus a multiple of omega; both
    parts are exactly closed.
    """
    coeffs: dict = {}
    for k in hbar_orders:
        one_form = EForm(chart, 1, {
            (i,): random_poly(rng, chart.base_vars, degree=degree, nterms=2)
            for i in range(chart.rank)
            if rng.random() < 0.7
        })
        exact = e_derham_d(one_form) if one_form.coeffs else EForm(chart, 2)
        scale = GaussianRational(rng.randint(-3, 3), rng.randint(-1, 1))
        for idx in set(exact.coeffs) | {
            (i, j)
            for i in range(chart.rank)
            for j in range(i + 1, chart.rank)
            if not chart.omega[i][j].is_zero
        }:
            poly = exact.coeffs.get(idx, chart.zero_poly())
            poly = poly + chart.omega[idx[0]][idx[1]] * scale
            if poly.is_zero:
                continue
            series_piece = HbarSeries(chart.base_vars, {k: poly}, trunc)
            acc = coeffs.get(idx)
            coeffs[idx] = series_piece if acc is None else acc + series_piece
    return EForm(chart, 2, coeffs)


def random_theta(chart: AlgebroidChart, rng, order: int,
                 hbar_orders=(1, 2)) -> CurvatureClass:
    """theta = (i hbar)^{-1} omega plus a random closed perturbation."""
    trunc = order + 2
    base = theta_standard(chart, trunc)
    pert = random_closed_two_form(chart, rng, hbar_orders, trunc)
    return CurvatureClass(chart, base.form + pert)
