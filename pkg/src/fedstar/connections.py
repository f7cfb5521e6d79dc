"""Weyl-bundle connections: the canonical contraction one-form, the
Koszul homotopy, curvature, the flatness recursion, gauge equivalence
and the frame evaluation of Lie-algebra cochains.

Sign anchor: with the chart conventions of `charts` and the fiber
conventions of `weyl`, the canonical one-form

    A_{-1}(e_i) = -i hbar^{-1} sum_k omega_{ik} yhat^k

satisfies (1/2)[A_{-1}, A_{-1}] = (i hbar)^{-1} omega exactly, and
-ad A_{-1} is the classical Koszul differential
delta = sum_i e^{i*} wedge d/d yhat^i.  Every other sign below is
derived from these two facts.
"""

from __future__ import annotations

from fractions import Fraction
from .charts import AlgebroidChart, EForm, e_derham_d
from .errors import GaugeObstruction, StructureError
from .hbar import HbarSeries
from .linalg import solve_scalar_system
from .multipoly import MultiPoly
from .scalars import I_UNIT, ZERO
from .weyl import WeylContext, WeylElement, weyl_commutator


# ---------------------------------------------------------------- form sections


class WeylFormSection:
    """Frame form with Weyl-algebra coefficients, stored antisymmetrically."""

    def __init__(self, chart: AlgebroidChart, context: WeylContext,
                 degree: int, coeffs=None):
        if degree < 0 or degree > chart.rank:
            raise StructureError("form degree out of range")
        clean = {}
        if coeffs:
            for idx, elem in coeffs.items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(set(idx)):
                    raise StructureError(f"bad index tuple {idx}")
                if elem.context != context:
                    raise StructureError("coefficient context mismatch")
                if elem.is_zero:
                    continue
                clean[idx] = elem
        self.chart = chart
        self.context = context
        self.degree = degree
        self.coeffs = clean

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def coefficient(self, idx) -> WeylElement:
        return self.coeffs.get(tuple(idx), self.context.zero())

    def _check(self, other: "WeylFormSection"):
        if (self.chart != other.chart or self.context != other.context
                or self.degree != other.degree):
            raise StructureError("form section mismatch")

    def __add__(self, other):
        self._check(other)
        coeffs = dict(self.coeffs)
        for idx, elem in other.coeffs.items():
            acc = coeffs.get(idx)
            total = elem if acc is None else acc + elem
            if total.is_zero:
                coeffs.pop(idx, None)
            else:
                coeffs[idx] = total
        return WeylFormSection(self.chart, self.context, self.degree, coeffs)

    def __neg__(self):
        return WeylFormSection(
            self.chart, self.context, self.degree,
            {i: -e for i, e in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, value):
        return WeylFormSection(
            self.chart, self.context, self.degree,
            {i: e.scale(value) for i, e in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, WeylFormSection):
            return NotImplemented
        return (self.chart == other.chart and self.context == other.context
                and self.degree == other.degree and self.coeffs == other.coeffs)

    def map_coefficients(self, fn) -> "WeylFormSection":
        return WeylFormSection(
            self.chart, self.context, self.degree,
            {i: fn(e) for i, e in self.coeffs.items()})

    def graded_component(self, d: int) -> "WeylFormSection":
        return self.map_coefficients(lambda e: e.graded_component(d))

    def degrees(self):
        out = set()
        for elem in self.coeffs.values():
            for (alpha, k) in elem.terms:
                out.add(sum(alpha) + 2 * k)
        return sorted(out)

    def min_weyl_degree(self):
        ds = self.degrees()
        return ds[0] if ds else None

    def central_scalar_form(self) -> EForm:
        """The fiber-degree-zero part as a scalar-series frame form."""
        coeffs = {}
        for idx, elem in self.coeffs.items():
            central = elem.central_part()
            if not central.is_zero:
                coeffs[idx] = central
        return EForm(self.chart, self.degree, coeffs)

    def noncentral(self) -> "WeylFormSection":
        return self.map_coefficients(lambda e: e.noncentral_part())

    def rehome(self, context: WeylContext) -> "WeylFormSection":
        return WeylFormSection(
            self.chart, context, self.degree,
            {i: e.rehome(context) for i, e in self.coeffs.items()})

    def __repr__(self):
        if not self.coeffs:
            return "<WeylFormSection 0>"
        parts = [
            f"{idx}: {elem}" for idx, elem in sorted(self.coeffs.items())
        ]
        return "<WeylFormSection " + "; ".join(parts) + ">"


def zero_section(chart, context, degree) -> WeylFormSection:
    return WeylFormSection(chart, context, degree, {})


def scalar_embed(chart, context, form: EForm) -> WeylFormSection:
    """Embed a scalar-series frame form as central Weyl coefficients."""
    coeffs = {}
    for idx, series in form.coeffs.items():
        if isinstance(series, MultiPoly):
            series = HbarSeries.from_poly(series, context.trunc_total)
        coeffs[idx] = context.from_series(series)
    return WeylFormSection(chart, context, form.degree, coeffs)


# ---------------------------------------------------------------- Cartan calculus


def form_e_derham(s: WeylFormSection) -> WeylFormSection:
    """Cartan differential on Weyl-valued forms; fibers ride along."""
    chart = s.chart
    p = s.degree
    if p >= chart.rank:
        raise StructureError("differential of a top-degree form")
    out: dict = {}

    def accumulate(idx, elem):
        if elem.is_zero:
            return
        acc = out.get(idx)
        out[idx] = elem if acc is None else acc + elem

    for idx, elem in s.coeffs.items():
        for t in range(chart.rank):
            if t in idx:
                continue
            merged = tuple(sorted(idx + (t,)))
            sign = (-1) ** merged.index(t)
            term = elem.base_derive_apply(lambda q, t=t: chart.rho_apply(t, q))
            if sign < 0:
                term = -term
            accumulate(merged, term)
    for idx, elem in s.coeffs.items():
        for a in range(chart.rank):
            for b in range(a + 1, chart.rank):
                for k in range(chart.rank):
                    c = chart.structure[a][b][k]
                    if c.is_zero or k not in idx:
                        continue
                    rest = tuple(x for x in idx if x != k)
                    if a in rest or b in rest:
                        continue
                    ksign = (-1) ** idx.index(k)
                    merged = tuple(sorted((a, b) + rest))
                    sign = -_merge_sign((a, b) + rest, merged) * ksign
                    term = elem.scale_poly(c)
                    if sign < 0:
                        term = -term
                    accumulate(merged, term)
    return WeylFormSection(chart, s.context, p + 1, out)


def _merge_sign(perm, sorted_tuple) -> int:
    order = [sorted_tuple.index(x) for x in perm]
    sign = 1
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                sign = -sign
    return sign


def form_bracket(s: WeylFormSection, t: WeylFormSection) -> WeylFormSection:
    """Graded commutator: shuffle sum of fiber commutators."""
    if s.chart != t.chart or s.context != t.context:
        raise StructureError("form section mismatch")
    degree = s.degree + t.degree
    if degree > s.chart.rank:
        raise StructureError("bracket degree exceeds rank")
    out: dict = {}
    for idx_s, elem_s in s.coeffs.items():
        for idx_t, elem_t in t.coeffs.items():
            if set(idx_s) & set(idx_t):
                continue
            merged = tuple(sorted(idx_s + idx_t))
            sign = _merge_sign(idx_s + idx_t, merged)
            comm = weyl_commutator(elem_s, elem_t)
            if comm.is_zero:
                continue
            if sign < 0:
                comm = -comm
            acc = out.get(merged)
            out[merged] = comm if acc is None else acc + comm
    return WeylFormSection(s.chart, s.context, degree, out)


# ---------------------------------------------------------------- Koszul homotopy


def koszul_delta(s: WeylFormSection) -> WeylFormSection:
    """delta = sum_i e^{i*} wedge d/d yhat^i."""
    chart = s.chart
    if s.degree >= chart.rank:
        raise StructureError("delta of a top-degree form")
    out: dict = {}
    for idx, elem in s.coeffs.items():
        for t in range(chart.rank):
            if t in idx:
                continue
            d_elem = elem.fiber_derive(t)
            if d_elem.is_zero:
                continue
            merged = tuple(sorted(idx + (t,)))
            if (-1) ** merged.index(t) < 0:
                d_elem = -d_elem
            acc = out.get(merged)
            out[merged] = d_elem if acc is None else acc + d_elem
    return WeylFormSection(chart, s.context, s.degree + 1, out)


def koszul_delta_inv(s: WeylFormSection) -> WeylFormSection:
    """Weighted contraction: weight 1/(p + q) on fiber degree p, form degree q."""
    chart = s.chart
    ctx = s.context
    q = s.degree
    if q == 0:
        return zero_section(chart, ctx, 0)
    out: dict = {}
    for idx, elem in s.coeffs.items():
        for pos, k in enumerate(idx):
            rest = tuple(x for x in idx if x != k)
            sign = (-1) ** pos
            for (alpha, kh), poly in elem.terms.items():
                p = sum(alpha)
                weight = Fraction(1, p + q) * sign
                new_alpha = list(alpha)
                new_alpha[k] += 1
                term = WeylElement(
                    ctx, {(tuple(new_alpha), kh): poly * weight})
                acc = out.get(rest)
                out[rest] = term if acc is None else acc + term
    return WeylFormSection(chart, ctx, q - 1, out)


def harmonic_projection(s: WeylFormSection) -> WeylFormSection:
    """Projection onto fiber-degree 0, form-degree 0."""
    if s.degree != 0:
        return zero_section(s.chart, s.context, s.degree)
    return s.map_coefficients(
        lambda e: WeylElement(
            e.context,
            {key: p for key, p in e.terms.items() if sum(key[0]) == 0}))


def koszul_homotopy_total(s: WeylFormSection) -> WeylFormSection:
    """delta delta_inv + delta_inv delta + harmonic projection.

    The missing summand at the degree boundaries vanishes identically
    (delta_inv is zero on 0-forms, delta on top forms), so the result
    equals s exactly for every section.
    """
    total = harmonic_projection(s)
    if s.degree > 0:
        total = total + koszul_delta(koszul_delta_inv(s))
    if s.degree < s.chart.rank:
        total = total + koszul_delta_inv(koszul_delta(s))
    return total


# ---------------------------------------------------------------- connection data


def build_a_minus_one(chart: AlgebroidChart, context: WeylContext) -> WeylFormSection:
    """The canonical contraction one-form of the chart's symplectic matrix."""
    if not chart.omega_is_constant:
        raise StructureError(
            "omega must be constant in the frame; re-frame to Darboux first")
    coeffs = {}
    minus_i = -I_UNIT
    for i in range(chart.rank):
        terms = {}
        for k in range(chart.rank):
            w = chart.omega_constant[i][k]
            if not w:
                continue
            alpha = tuple(1 if t == k else 0 for t in range(chart.rank))
            terms[(alpha, -1)] = MultiPoly.const(chart.base_vars, w * minus_i)
        if terms:
            coeffs[(i,)] = WeylElement(context, terms)
    return WeylFormSection(chart, context, 1, coeffs)


def sp_condition_holds(chart: AlgebroidChart, gamma_matrix) -> bool:
    """omega Gamma + Gamma^t omega = 0, entrywise exact."""
    rank = chart.rank
    for i in range(rank):
        for j in range(rank):
            acc = chart.zero_poly()
            for k in range(rank):
                acc = acc + chart.omega[i][k] * gamma_matrix[k][j]
                acc = acc + gamma_matrix[k][i] * chart.omega[k][j]
            if not acc.is_zero:
                return False
    return True


def gamma_to_weyl(chart: AlgebroidChart, context: WeylContext, gamma):
    """Quadratic hbar^{-1} generator of a frame-matrix one-form.

    For each slot sigma the returned element q satisfies
    [q, yhat^k] = -sum_l Gamma(sigma)^k_l yhat^l, so ad(q) is the
    induced fiber action of the connection matrix.
    """
    if gamma is None:
        return zero_section(chart, context, 1)
    rank = chart.rank
    half_i = I_UNIT * Fraction(1, 2)
    coeffs = {}
    for s in range(rank):
        mat = gamma[s]
        if not sp_condition_holds(chart, mat):
            raise StructureError(
                f"gamma slot e{s + 1} violates the sp condition")
        terms: dict = {}
        for a in range(rank):
            for b in range(rank):
                c_ab = chart.zero_poly()
                for u in range(rank):
                    c_ab = c_ab + chart.omega[a][u] * mat[u][b]
                c_ab = c_ab * half_i
                if c_ab.is_zero:
                    continue
                alpha = [0] * rank
                alpha[a] += 1
                alpha[b] += 1
                key = (tuple(alpha), -1)
                acc = terms.get(key)
                terms[key] = c_ab if acc is None else acc + c_ab
        if terms:
            elem = WeylElement(context, terms)
            if not elem.is_zero:
                coeffs[(s,)] = elem
    return WeylFormSection(chart, context, 1, coeffs)


class CurvatureClass:
    """Closed scalar-series 2-form; hbar exponents at least -1."""

    def __init__(self, chart: AlgebroidChart, form: EForm):
        if form.degree != 2 or form.chart != chart:
            raise StructureError("curvature class must be a 2-form on the chart")
        coeffs = {}
        for idx, c in form.coeffs.items():
            if isinstance(c, MultiPoly):
                c = HbarSeries.from_poly(c)
            coeffs[idx] = c
        form = EForm(chart, 2, coeffs)
        if chart.rank > 2:
            d = e_derham_d(form)
            if not d.is_zero:
                raise StructureError("curvature class is not closed")
        self.chart = chart
        self.form = form

    def __eq__(self, other):
        if not isinstance(other, CurvatureClass):
            return NotImplemented
        return self.chart == other.chart and self.form == other.form

    def graded_truncate(self, max_degree: int) -> "CurvatureClass":
        """Keep scalar degrees 2k <= max_degree."""
        bound = max_degree // 2 if max_degree >= -2 else -2
        coeffs = {}
        for idx, series in self.form.coeffs.items():
            kept = series.truncate(bound)
            if not kept.is_zero:
                coeffs[idx] = kept.with_trunc(series.trunc)
        return CurvatureClass(self.chart, EForm(self.chart, 2, coeffs))

    def __sub__(self, other):
        return CurvatureClass(self.chart, self.form - other.form)

    def __add__(self, other):
        return CurvatureClass(self.chart, self.form + other.form)

    @property
    def is_zero(self):
        return self.form.is_zero

    def min_scalar_degree(self):
        degrees = [
            2 * k for series in self.form.coeffs.values() for k in series.coeffs
        ]
        return min(degrees) if degrees else None

    def to_json_dict(self):
        return {
            ",".join(str(i + 1) for i in idx): str(series)
            for idx, series in sorted(self.form.coeffs.items())
        }

    def __repr__(self):
        return f"<CurvatureClass {self.form}>"


def theta_standard(chart: AlgebroidChart, trunc: int) -> CurvatureClass:
    """(i hbar)^{-1} omega as a curvature class."""
    coeffs = {}
    for i in range(chart.rank):
        for j in range(i + 1, chart.rank):
            w = chart.omega[i][j]
            if w.is_zero:
                continue
            coeffs[(i, j)] = HbarSeries(
                chart.base_vars, {-1: w * (-I_UNIT)}, trunc)
    return CurvatureClass(chart, EForm(chart, 2, coeffs))


class Connection:
    """Connection data: frame matrix one-form Gamma plus the Weyl one-form A.

    The operator is  nabla = d + ad(gamma_weyl + A); A includes the
    canonical degree -1 part.
    """

    def __init__(self, chart: AlgebroidChart, context: WeylContext,
                 a_form: WeylFormSection, gamma=None):
        if a_form.degree != 1:
            raise StructureError("A must be a one-form")
        if a_form.chart != chart or a_form.context != context:
            raise StructureError("A lives on the wrong chart or context")
        self.chart = chart
        self.context = context
        self.a_form = a_form
        self.gamma = gamma
        self._gamma_weyl = gamma_to_weyl(chart, context, gamma)
        expected = build_a_minus_one(chart, context)
        if a_form.graded_component(-1) != expected:
            raise StructureError(
                "degree -1 part of A must be the canonical contraction form")

    def total_one_form(self) -> WeylFormSection:
        return self._gamma_weyl + self.a_form

    def gamma_weyl(self) -> WeylFormSection:
        return self._gamma_weyl

    def apply(self, s: WeylFormSection) -> WeylFormSection:
        """nabla s = d s + [gamma_w + A, s]."""
        return form_e_derham(s) + form_bracket(self.total_one_form(), s)

    def with_a_form(self, a_form: WeylFormSection) -> "Connection":
        return Connection(self.chart, self.context, a_form, self.gamma)

    def add_central_one_form(self, form: EForm) -> "Connection":
        """Shift by a scalar one-form: the operator is unchanged, the
        curvature of the lift shifts by its differential."""
        if form.degree != 1:
            raise StructureError("central shift must be a one-form")
        return self.with_a_form(
            self.a_form + scalar_embed(self.chart, self.context, form))

    def zero_component(self, degree: int) -> "Connection":
        """Fault injection helper: drop one graded piece of A."""
        kept = self.a_form - self.a_form.graded_component(degree)
        return self.with_a_form(kept)

    def to_json_dict(self):
        a_terms = []
        for idx, elem in sorted(self.a_form.coeffs.items()):
            for (alpha, k), poly in sorted(elem.terms.items()):
                a_terms.append({
                    "slot": idx[0] + 1,
                    "fiber": ",".join(map(str, alpha)),
                    "hbar": k,
                    "coeff": str(poly),
                })
        gamma = None
        if self.gamma is not None:
            gamma = [
                [[str(e) for e in row] for row in mat] for mat in self.gamma
            ]
        return {
            "chart": self.chart.to_json_dict(),
            "trunc_total": self.context.trunc_total,
            "gamma": gamma,
            "a_form": a_terms,
        }

    @classmethod
    def from_json_dict(cls, data):
        chart = AlgebroidChart.from_json_dict(data["chart"])
        context = chart.weyl_context(int(data["trunc_total"]))
        gamma = None
        if data.get("gamma") is not None:
            gamma = [
                [[chart.parse(e) for e in row] for row in mat]
                for mat in data["gamma"]
            ]
        coeffs: dict = {}
        for record in data["a_form"]:
            slot = (int(record["slot"]) - 1,)
            alpha = tuple(int(x) for x in record["fiber"].split(","))
            k = int(record["hbar"])
            poly = chart.parse(record["coeff"])
            elem = WeylElement(context, {(alpha, k): poly})
            acc = coeffs.get(slot)
            coeffs[slot] = elem if acc is None else acc + elem
        a_form = WeylFormSection(chart, context, 1, coeffs)
        return cls(chart, context, a_form, gamma)


# ---------------------------------------------------------------- curvature


def curvature(conn: Connection):
    """Split curvature: (scalar-series 2-form, non-central remainder).

    The connection is flat as an operator iff the remainder vanishes;
    the scalar part is the curvature of the tautological lift.
    """
    b = conn.total_one_form()
    r = form_e_derham(b) + form_bracket(b, b).scale(Fraction(1, 2))
    return r.central_scalar_form(), r.noncentral()


def curvature_class_of(conn: Connection) -> CurvatureClass:
    scalar, _ = curvature(conn)
    return CurvatureClass(conn.chart, scalar)


# ---------------------------------------------------------------- construction


def fedosov_construct(chart: AlgebroidChart, gamma, theta: CurvatureClass,
                      order: int, trunc_total=None) -> Connection:
    """Flatness recursion with prescribed central curvature.

    Returns a connection whose non-central curvature vanishes in all
    grading degrees <= order and whose scalar curvature equals theta
    through that degree.  The correction at each step is the weighted
    contraction of the current residual, which pins the normalization
    delta_inv(A - A_{-1}) = 0.
    """
    if trunc_total is None:
        trunc_total = order + 2
    context = chart.weyl_context(trunc_total)
    if theta.chart != chart:
        raise StructureError("theta lives on a different chart")
    # theta minus the leading (i hbar)^{-1} omega must be regular in hbar
    lead = theta_standard(chart, trunc_total)
    rest = theta.form - lead.form
    for series in rest.coeffs.values():
        if any(k < 0 for k in series.coeffs):
            raise StructureError(
                "theta - (i hbar)^{-1} omega must have hbar exponents >= 0")

    theta_section = scalar_embed(chart, context, theta.form)
    a_form = build_a_minus_one(chart, context)
    gamma_w = gamma_to_weyl(chart, context, gamma)

    for n in range(-2, order + 1):
        b = gamma_w + a_form
        residual = (
            form_e_derham(b)
            + form_bracket(b, b).scale(Fraction(1, 2))
            - theta_section
        )
        r_n = residual.graded_component(n)
        if r_n.is_zero:
            continue
        if n == -2:
            raise StructureError(
                "degree -2 residual nonzero: theta lacks the "
                "(i hbar)^{-1} omega part")
        increment = koszul_delta_inv(r_n)
        # the contraction must actually solve delta(increment) = r_n
        if koszul_delta(increment) != r_n:
            raise StructureError(
                f"residual at degree {n} is not exact for the homotopy; "
                "input data violates the closedness assumptions")
        a_form = a_form + increment

    conn = Connection(chart, context, a_form, gamma)
    scalar, weyl_part = curvature(conn)
    for n in range(-2, order + 1):
        if not weyl_part.graded_component(n).is_zero:
            raise StructureError(f"construction left curvature at degree {n}")
    return conn


def characteristic_class(conn: Connection, order=None) -> CurvatureClass:
    """Central curvature of the tautological lift of a flat connection."""
    if order is None:
        order = conn.context.trunc_total - 2
    scalar, weyl_part = curvature(conn)
    for n in range(-2, order + 1):
        if not weyl_part.graded_component(n).is_zero:
            raise StructureError(
                f"connection is not flat at degree {n}; "
                "characteristic class undefined")
    return CurvatureClass(conn.chart, scalar).graded_truncate(order)


# ---------------------------------------------------------------- gauge action


def _exp_ad(delta: WeylElement, target: WeylElement) -> WeylElement:
    out = target
    term = target
    k = 0
    while True:
        k += 1
        term = weyl_commutator(delta, term).scale(Fraction(1, k))
        if term.is_zero:
            break
        out = out + term
    return out


def _exp_ad_form(delta: WeylElement, s: WeylFormSection) -> WeylFormSection:
    return s.map_coefficients(lambda e: _exp_ad(delta, e))


def _f_ad(delta: WeylElement, s: WeylFormSection) -> WeylFormSection:
    """(e^{ad} - 1)/ad applied slotwise: sum_k ad^k / (k+1)!."""
    def per_coeff(e):
        out = e
        term = e
        k = 0
        while True:
            k += 1
            term = weyl_commutator(delta, term).scale(Fraction(1, k + 1))
            # note: term now carries 1/(k+1)! after cumulative scaling
            if term.is_zero:
                break
            out = out + term
        return out

    # cumulative scaling above multiplies by 1/(k+1) at step k, which
    # turns 1/k! into 1/(k+1)! as required
    return s.map_coefficients(per_coeff)


def _section_zero_form_derham(chart, context, delta: WeylElement) -> WeylFormSection:
    as_form = WeylFormSection(chart, context, 0, {(): delta})
    return form_e_derham(as_form)


def gauge_apply(deltas, conn: Connection) -> Connection:
    """Conjugate by exp(delta_1), then exp(delta_2), ... in list order.

    Each delta must have grading degree >= 1.  The scalar curvature is
    unchanged; only the one-form data moves.
    """
    chart, context = conn.chart, conn.context
    a_form = conn.a_form
    gamma_w = conn.gamma_weyl()
    for delta in deltas:
        if delta.context != context:
            raise StructureError("gauge element context mismatch")
        if not delta.is_zero and delta.min_degree() < 1:
            raise StructureError("gauge elements must have degree >= 1")
        b = gamma_w + a_form
        d_delta = _section_zero_form_derham(chart, context, delta)
        b_new = _exp_ad_form(delta, b) - _f_ad(delta, d_delta)
        a_form = b_new - gamma_w
    return conn.with_a_form(a_form)


def exact_scalar_primitive(chart: AlgebroidChart, diff: EForm,
                           degree_slack: int = 1):
    """Solve d(alpha) = diff for a scalar one-form, one hbar order at a time.

    Returns an EForm of degree 1 with series coefficients, or None when
    some hbar order is not exact (a genuine cohomology obstruction on
    the chart).
    """
    if diff.degree != 2:
        raise StructureError("primitive solver expects a 2-form")
    orders = sorted({
        k for series in diff.coeffs.values() for k in series.coeffs
    })
    solution_polys: dict = {}
    trunc = max(
        (series.trunc for series in diff.coeffs.values()), default=8)
    for k in orders:
        target = {
            idx: series.coefficient(k) for idx, series in diff.coeffs.items()
        }
        target = {idx: p for idx, p in target.items() if not p.is_zero}
        if not target:
            continue
        max_deg = max(p.total_degree() for p in target.values())
        alpha_k = _solve_one_form(chart, target, max_deg + degree_slack)
        if alpha_k is None:
            return None
        for idx, poly in alpha_k.items():
            solution_polys.setdefault(idx, {})[k] = poly
    coeffs = {
        idx: HbarSeries(chart.base_vars, by_order, trunc)
        for idx, by_order in solution_polys.items()
    }
    return EForm(chart, 1, coeffs)


def _monomials_up_to(variables, degree):
    def rec(slots, total):
        if slots == 1:
            for e in range(total + 1):
                yield (e,)
            return
        for e in range(total + 1):
            for rest in rec(slots - 1, total - e):
                yield (e,) + rest

    return [m for m in rec(len(variables), degree)]


def _solve_one_form(chart, target, ansatz_degree):
    """Linear solve for d(alpha) = target over polynomial coefficients."""
    monomials = _monomials_up_to(chart.base_vars, ansatz_degree)
    unknowns = [
        (i, m) for i in range(chart.rank) for m in monomials
    ]
    columns = []
    row_index: dict = {}
    rows_rhs: dict = {}

    def row_of(slot, mono):
        key = (slot, mono)
        if key not in row_index:
            row_index[key] = len(row_index)
        return row_index[key]

    for (i, mono) in unknowns:
        basis = EForm(chart, 1, {
            (i,): MultiPoly.monomial(chart.base_vars, mono)
        })
        image = e_derham_d(basis)
        col = {}
        for idx, poly in image.coeffs.items():
            for exps, coeff in poly.terms.items():
                col[row_of(idx, exps)] = coeff
        columns.append(col)
    for idx, poly in target.items():
        for exps, coeff in poly.terms.items():
            rows_rhs[row_of(idx, exps)] = coeff
    nrows = len(row_index)
    if nrows == 0:
        return {}
    matrix = [[ZERO] * len(unknowns) for _ in range(nrows)]
    for c, col in enumerate(columns):
        for r, value in col.items():
            matrix[r][c] = value
    rhs = [rows_rhs.get(r, ZERO) for r in range(nrows)]
    solution = solve_scalar_system(matrix, rhs)
    if solution is None:
        return None
    out: dict = {}
    for (i, mono), value in zip(unknowns, solution):
        if not value:
            continue
        acc = out.get((i,), chart.zero_poly())
        out[(i,)] = acc + MultiPoly.monomial(chart.base_vars, mono, value)
    return {idx: p for idx, p in out.items() if not p.is_zero}


class GaugeSolution:
    """Result of aligning two connections: optional central shift + deltas."""

    def __init__(self, alpha, deltas):
        self.alpha = alpha
        self.deltas = list(deltas)

    def apply(self, conn: Connection) -> Connection:
        out = conn
        if self.alpha is not None:
            out = out.add_central_one_form(self.alpha)
        return gauge_apply(self.deltas, out)


def gauge_solve(c1: Connection, c2: Connection, order=None) -> GaugeSolution:
    """Find a gauge chain carrying c2 to c1 through the given degree.

    Both connections must be flat; their scalar curvatures must agree
    up to an exact scalar one-form, which is absorbed first.  A
    non-exact difference raises GaugeObstruction with the first
    differing degree.
    """
    if c1.chart != c2.chart or c1.context != c2.context:
        raise StructureError("connections live on different charts")
    if order is None:
        order = c1.context.trunc_total - 2
    theta1 = curvature_class_of(c1).graded_truncate(order)
    theta2 = curvature_class_of(c2).graded_truncate(order)
    alpha = None
    current = c2
    if theta1 != theta2:
        diff = (theta1 - theta2).form
        alpha = exact_scalar_primitive(c1.chart, diff)
        if alpha is None:
            degree = (theta1 - theta2).min_scalar_degree()
            raise GaugeObstruction(
                degree, "curvature classes differ by a non-exact form")
        current = current.add_central_one_form(alpha)
        check = curvature_class_of(current).graded_truncate(order)
        if check != theta1:
            raise GaugeObstruction(
                (theta1 - check).min_scalar_degree(),
                "central shift failed to align the curvatures")

    deltas = []
    while True:
        diff_form = c1.a_form - current.a_form
        degrees = [d for d in diff_form.degrees() if d <= order]
        if not degrees:
            return GaugeSolution(alpha, deltas)
        d = degrees[0]
        if len(deltas) > order + 2:
            raise GaugeObstruction(d, "gauge alignment failed to converge")
        r_d = diff_form.graded_component(d)
        delta = koszul_delta_inv(r_d)
        if koszul_delta(delta) != r_d:
            raise GaugeObstruction(
                d, "one-form difference is not exact for the homotopy")
        deltas.append(delta.coefficient(()))
        current = gauge_apply([delta.coefficient(())], current)


# ---------------------------------------------------------------- cochain evaluation


class LieCochain:
    """Alternating multilinear functional on Weyl elements."""

    def __init__(self, arity: int, evaluator):
        self.arity = arity
        self.evaluator = evaluator

    def __call__(self, args):
        if len(args) != self.arity:
            raise StructureError(
                f"cochain arity {self.arity} got {len(args)} arguments")
        return self.evaluator(*args)


def gelfand_fuks(cochain: LieCochain, conn: Connection,
                 subalgebra_probe=None) -> EForm:
    """Evaluate a cochain on the connection one-form in the frame.

    The arity-k cochain becomes a scalar k-form whose coefficient on
    (e_{i_1}, ..., e_{i_k}) is the cochain at the corresponding
    one-form values.  A small probe asserts vanishing on the chosen
    linear subalgebra.
    """
    chart, context = conn.chart, conn.context
    k = cochain.arity
    b = conn.total_one_form()
    if subalgebra_probe is None:
        subalgebra_probe = _default_sp_probe(context)
    for probe in subalgebra_probe:
        args = [probe] * k
        value = cochain(args)
        if not _value_is_zero(value):
            raise StructureError(
                "cochain does not vanish on the linear subalgebra probe")
    from itertools import combinations

    coeffs = {}
    for idx in combinations(range(chart.rank), k):
        args = [b.coefficient((i,)) for i in idx]
        value = cochain(args)
        if not _value_is_zero(value):
            coeffs[idx] = value
    return EForm(chart, k, coeffs)


def _value_is_zero(value) -> bool:
    return value.is_zero


def _default_sp_probe(context: WeylContext):
    probes = []
    rank = 2 * context.n
    for a in range(min(rank, 2)):
        alpha = [0] * rank
        alpha[a] += 2
        probes.append(context.fiber_monomial(tuple(alpha), k=-1))
    return probes


def lie_cochain_differential(cochain: LieCochain) -> LieCochain:
    """Chevalley-Eilenberg differential with trivial coefficients."""
    k = cochain.arity

    def evaluator(*args):
        total = None
        for s in range(k + 1):
            for t in range(s + 1, k + 1):
                bracket = weyl_commutator(args[s], args[t])
                rest = [args[u] for u in range(k + 1) if u not in (s, t)]
                value = cochain([bracket] + rest)
                if (s + t) % 2 == 0:
                    value = -value
                total = value if total is None else total + value
        return total

    return LieCochain(k + 1, evaluator)


def gelfand_fuks_chain_map_residual(cochain: LieCochain, conn: Connection):
    """gf(d_Lie l) - d(gf l); zero when the cochain is a chain-map input."""
    lhs = gelfand_fuks(lie_cochain_differential(cochain), conn)
    rhs = e_derham_d(gelfand_fuks(cochain, conn))
    return lhs - rhs
