"""Lie algebroid charts with polynomial data.

A chart fixes a global frame e_1..e_{2n} of the bundle over one
polynomial coordinate patch: an anchor matrix (rows indexed by base
coordinates, columns by frame sections), an antisymmetric structure
table c^k_{ij} with [e_i, e_j] = sum_k c^k_{ij} e_k, and an
antisymmetric fiberwise symplectic matrix omega(e_i, e_j).

Conventions used throughout the package:

* conjugate pairs sit at frame positions (2t, 2t+1) with
  omega(e_{2t}, e_{2t+1}) = +1 on the standard charts;
* the Hamiltonian section of f has frame components W^{-1} rho^t df,
  which makes {x, xi} = +1 on the standard chart and
  {z1, z2} = z1 z2 on the log pair;
* the Poisson tensor in the frame (also the jet-bracket tensor) is
  -W^{-1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial

from .errors import StructureError
from .hbar import HbarSeries
from .linalg import (
    determinant,
    invert_poly_matrix,
    poly_mat_constant_part,
    poly_matrix,
)
from .multipoly import MultiPoly
from .parsing import parse_poly
from .scalars import GaussianRational, ZERO
from .weyl import WeylContext


class AlgebroidChart:
    def __init__(self, base_vars, rank, anchor, structure, omega,
                 degree_cap=16, name=None, params=None):
        base_vars = tuple(base_vars)
        m = len(base_vars)
        if rank % 2 != 0 or rank <= 0:
            raise StructureError("rank must be a positive even integer")
        anchor = poly_matrix(anchor, base_vars)
        if len(anchor) != m or any(len(row) != rank for row in anchor):
            raise StructureError("anchor must be (base vars) x (rank)")
        omega = poly_matrix(omega, base_vars)
        if len(omega) != rank or any(len(r) != rank for r in omega):
            raise StructureError("omega must be rank x rank")
        structure = tuple(
            tuple(
                tuple(
                    e if isinstance(e, MultiPoly) else MultiPoly.const(base_vars, e)
                    for e in structure[i][j]
                )
                for j in range(rank)
            )
            for i in range(rank)
        )
        for i in range(rank):
            for j in range(rank):
                if len(structure[i][j]) != rank:
                    raise StructureError("structure table must be rank^3")
                for k in range(rank):
                    if structure[i][j][k] != -structure[j][i][k]:
                        raise StructureError(
                            "structure table must be antisymmetric in (i, j)"
                        )
        for i in range(rank):
            for j in range(rank):
                if omega[i][j] != -omega[j][i]:
                    raise StructureError("omega must be antisymmetric")
        self.base_vars = base_vars
        self.rank = rank
        self.anchor = anchor
        self.structure = structure
        self.omega = omega
        self.degree_cap = degree_cap
        self.name = name
        self.params = dict(params or {})

    # ------------------------------------------------------------ identity

    def _key(self):
        return (self.base_vars, self.rank,
                tuple(tuple(str(e) for e in row) for row in self.anchor),
                tuple(tuple(tuple(str(e) for e in col) for col in row)
                      for row in self.structure),
                tuple(tuple(str(e) for e in row) for row in self.omega))

    def __eq__(self, other):
        return isinstance(other, AlgebroidChart) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def n(self) -> int:
        return self.rank // 2

    # ------------------------------------------------------------ basic calculus

    def zero_poly(self) -> MultiPoly:
        return MultiPoly.zero(self.base_vars)

    def const_poly(self, c) -> MultiPoly:
        return MultiPoly.const(self.base_vars, c)

    def var(self, name) -> MultiPoly:
        return MultiPoly.variable(self.base_vars, name)

    def parse(self, text) -> MultiPoly:
        return parse_poly(text, self.base_vars)

    def rho_apply(self, i: int, f):
        """Apply the anchor image of frame section e_i as a derivation."""
        if isinstance(f, HbarSeries):
            return HbarSeries(
                f.variables,
                {k: self.rho_apply(i, p) for k, p in f.coeffs.items()},
                f.trunc,
            )
        out = self.zero_poly()
        for a, v in enumerate(self.base_vars):
            coeff = self.anchor[a][i]
            if coeff.is_zero:
                continue
            out = out + coeff * f.derive(v)
        return out

    def rho_section(self, section):
        """Anchor image of a frame-component section as vector field parts."""
        return tuple(
            sum(
                (self.anchor[a][i] * section[i] for i in range(self.rank)),
                self.zero_poly(),
            )
            for a in range(len(self.base_vars))
        )

    def vf_apply(self, field, f: MultiPoly) -> MultiPoly:
        out = self.zero_poly()
        for a, v in enumerate(self.base_vars):
            if field[a].is_zero:
                continue
            out = out + field[a] * f.derive(v)
        return out

    def vf_bracket(self, u, v):
        comps = []
        for b in range(len(self.base_vars)):
            acc = self.zero_poly()
            for a, var in enumerate(self.base_vars):
                acc = acc + u[a] * v[b].derive(var) - v[a] * u[b].derive(var)
            comps.append(acc)
        return tuple(comps)

    def frame_section(self, i: int):
        return tuple(
            self.const_poly(1) if j == i else self.zero_poly()
            for j in range(self.rank)
        )

    def section_bracket(self, x, y):
        """[X, Y] for sections given by frame components."""
        rho_x = self.rho_section(x)
        rho_y = self.rho_section(y)
        comps = []
        for k in range(self.rank):
            acc = self.zero_poly()
            for i in range(self.rank):
                if x[i].is_zero:
                    continue
                for j in range(self.rank):
                    c = self.structure[i][j][k]
                    if not c.is_zero and not y[j].is_zero:
                        acc = acc + x[i] * y[j] * c
            acc = acc + self.vf_apply(rho_x, y[k]) - self.vf_apply(rho_y, x[k])
            comps.append(acc)
        return tuple(comps)

    # ------------------------------------------------------------ symplectic data

    @cached_property
    def omega_constant(self):
        return poly_mat_constant_part(self.omega)

    @cached_property
    def omega_is_constant(self) -> bool:
        return all(e.is_constant() for row in self.omega for e in row)

    @cached_property
    def omega_inverse(self):
        """W^{-1} as a polynomial matrix, exact modulo degree > degree_cap."""
        return invert_poly_matrix(self.omega, self.degree_cap)

    @cached_property
    def poisson_frame_tensor(self):
        """The tensor -W^{-1}; drives both the function and jet brackets."""
        return tuple(tuple(-e for e in row) for row in self.omega_inverse)

    def weyl_context(self, trunc_total: int) -> WeylContext:
        """Fiber Weyl context in this frame; needs constant omega."""
        if not self.omega_is_constant:
            raise StructureError(
                "omega is not constant in this frame; re-frame the chart "
                "to a Darboux frame before building Weyl data"
            )
        omega_std = tuple(
            tuple(-self.omega_constant[i][j] for j in range(self.rank))
            for i in range(self.rank)
        )
        fiber = tuple(f"yhat{i + 1}" for i in range(self.rank))
        return WeylContext(self.n, fiber, self.base_vars, omega_std, trunc_total)

    # ------------------------------------------------------------ serialization

    def to_json_dict(self):
        return {
            "base_vars": list(self.base_vars),
            "rank": self.rank,
            "anchor": [[str(e) for e in row] for row in self.anchor],
            "structure": [
                [[str(e) for e in col] for col in row] for row in self.structure
            ],
            "omega": [[str(e) for e in row] for row in self.omega],
            "degree_cap": self.degree_cap,
            "name": self.name,
            "params": self.params,
        }

    @classmethod
    def from_json_dict(cls, data):
        base_vars = tuple(data["base_vars"])

        def p(text):
            return parse_poly(str(text), base_vars)

        return cls(
            base_vars,
            int(data["rank"]),
            [[p(e) for e in row] for row in data["anchor"]],
            [[[p(e) for e in col] for col in row] for row in data["structure"]],
            [[p(e) for e in row] for row in data["omega"]],
            degree_cap=int(data.get("degree_cap", 16)),
            name=data.get("name"),
            params=data.get("params"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


# ---------------------------------------------------------------------- E-forms


class EForm:
    """Antisymmetric frame form; coefficients are MultiPoly or HbarSeries.

    Storage is on strictly increasing index tuples.
    """

    def __init__(self, chart: AlgebroidChart, degree: int, coeffs=None):
        if degree < 0 or degree > chart.rank:
            raise StructureError("form degree out of range")
        clean = {}
        if coeffs:
            for idx, c in coeffs.items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(set(idx)):
                    raise StructureError(f"bad index tuple {idx}")
                if _coeff_is_zero(c):
                    continue
                clean[idx] = c
        self.chart = chart
        self.degree = degree
        self.coeffs = clean

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def coefficient(self, idx):
        """Value on an arbitrary index tuple, with antisymmetry signs."""
        idx = tuple(idx)
        if len(set(idx)) != len(idx):
            return None
        order = tuple(sorted(idx))
        c = self.coeffs.get(order)
        if c is None:
            return None
        return c if _perm_sign(idx) > 0 else _negate(c)

    def _check(self, other: "EForm"):
        if self.chart != other.chart or self.degree != other.degree:
            raise StructureError("E-form mismatch")

    def __add__(self, other):
        self._check(other)
        coeffs = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            acc = coeffs.get(idx)
            total = c if acc is None else acc + c
            if _coeff_is_zero(total):
                coeffs.pop(idx, None)
            else:
                coeffs[idx] = total
        return EForm(self.chart, self.degree, coeffs)

    def __neg__(self):
        return EForm(
            self.chart, self.degree, {i: _negate(c) for i, c in self.coeffs.items()}
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, value):
        return EForm(
            self.chart, self.degree, {i: c * value for i, c in self.coeffs.items()}
        )

    def __eq__(self, other):
        if not isinstance(other, EForm):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.degree == other.degree
            and self.coeffs == other.coeffs
        )

    def map_coefficients(self, fn) -> "EForm":
        return EForm(
            self.chart, self.degree, {i: fn(c) for i, c in self.coeffs.items()}
        )

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for idx in sorted(self.coeffs):
            wedge = "^".join(f"e{i + 1}*" for i in idx) or "1"
            parts.append(f"{wedge}: {self.coeffs[idx]}")
        return "; ".join(parts)

    def __repr__(self):
        return f"<EForm deg {self.degree}: {self}>"


def _coeff_is_zero(c) -> bool:
    return c.is_zero


def _negate(c):
    return -c


def _perm_sign(idx) -> int:
    sign = 1
    idx = list(idx)
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


def _insert_index(k, rest):
    """Position sign for sorting (k, *rest) with rest strictly increasing."""
    if k in rest:
        return None, 0
    merged = tuple(sorted((k,) + rest))
    pos = merged.index(k)
    return merged, (-1) ** pos


def e_derham_d(form: EForm) -> EForm:
    """Cartan differential built from the anchor and the structure table."""
    chart = form.chart
    p = form.degree
    if p >= chart.rank:
        raise StructureError("differential of a top-degree form")
    out: dict = {}
    for idx, coeff in form.coeffs.items():
        # anchor part: insert one new slot and differentiate the coefficient
        for t in range(chart.rank):
            merged, sign = _insert_index(t, idx)
            if merged is None:
                continue
            term = chart.rho_apply(t, coeff)
            if _coeff_is_zero(term):
                continue
            if sign < 0:
                term = _negate(term)
            acc = out.get(merged)
            out[merged] = term if acc is None else acc + term
    # bracket part: contract two slots of the result with the structure table
    for idx, coeff in form.coeffs.items():
        for s in range(chart.rank):
            for t in range(s + 1, chart.rank):
                for k in range(chart.rank):
                    c = chart.structure[s][t][k]
                    if c.is_zero:
                        continue
                    if k not in idx:
                        continue
                    rest = tuple(x for x in idx if x != k)
                    ksign = (-1) ** idx.index(k)
                    if s in rest or t in rest:
                        continue
                    merged = tuple(sorted((s, t) + rest))
                    # sign from moving (s, t) to the front of merged
                    perm = (s, t) + rest
                    sign = _perm_sign_merge(perm, merged)
                    term = coeff * c
                    total_sign = -sign * ksign
                    if total_sign < 0:
                        term = _negate(term)
                    if _coeff_is_zero(term):
                        continue
                    acc = out.get(merged)
                    out[merged] = term if acc is None else acc + term
    return EForm(chart, p + 1, out)


def _perm_sign_merge(perm, sorted_tuple) -> int:
    order = [sorted_tuple.index(x) for x in perm]
    sign = 1
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                sign = -sign
    return sign


# ---------------------------------------------------------------------- validation


@dataclass
class AxiomCheck:
    axiom: str
    passed: bool
    witness: str = ""
    residual: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                {
                    "axiom": c.axiom,
                    "passed": c.passed,
                    "witness": c.witness,
                    "residual": c.residual,
                }
                for c in self.checks
            ],
        }

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            line = f"[{status}] {c.axiom}"
            if not c.passed:
                line += f"  witness={c.witness}  residual={c.residual}"
            lines.append(line)
        lines.append("all axioms pass" if self.passed else "axioms FAILED")
        return "\n".join(lines)


def validate_algebroid(chart: AlgebroidChart) -> ValidationReport:
    """Exact polynomial checks of the algebroid and symplectic axioms."""
    checks = []

    # anchor is a homomorphism on frame brackets
    witness = None
    residual = ""
    for i in range(chart.rank):
        for j in range(i + 1, chart.rank):
            lhs = chart.rho_section(chart.section_bracket(
                chart.frame_section(i), chart.frame_section(j)))
            rhs = chart.vf_bracket(
                chart.rho_section(chart.frame_section(i)),
                chart.rho_section(chart.frame_section(j)),
            )
            diff = tuple(a - b for a, b in zip(lhs, rhs))
            if any(not d.is_zero for d in diff):
                witness = f"(e{i + 1},e{j + 1})"
                residual = "; ".join(str(d) for d in diff if not d.is_zero)
                break
        if witness:
            break
    checks.append(AxiomCheck("anchor homomorphism", witness is None,
                             witness or "", residual))

    # Jacobi identity of the bracket on frame triples
    witness = None
    residual = ""
    for i in range(chart.rank):
        for j in range(i + 1, chart.rank):
            eij = chart.section_bracket(chart.frame_section(i),
                                        chart.frame_section(j))
            for k in range(chart.rank):
                ei, ej, ek = (chart.frame_section(t) for t in (i, j, k))
                jb = chart.section_bracket(eij, ek)
                jb2 = chart.section_bracket(chart.section_bracket(ej, ek), ei)
                jb3 = chart.section_bracket(chart.section_bracket(ek, ei), ej)
                total = tuple(a + b + c for a, b, c in zip(jb, jb2, jb3))
                if any(not t.is_zero for t in total):
                    witness = f"(e{i + 1},e{j + 1},e{k + 1})"
                    residual = "; ".join(str(t) for t in total if not t.is_zero)
                    break
            if witness:
                break
        if witness:
            break
    checks.append(AxiomCheck("Jacobi identity", witness is None,
                             witness or "", residual))

    # closedness of omega (vacuous when 2-forms are already top degree)
    omega_form = EForm(chart, 2, {
        (i, j): chart.omega[i][j]
        for i in range(chart.rank)
        for j in range(i + 1, chart.rank)
        if not chart.omega[i][j].is_zero
    })
    domega = (
        EForm(chart, 2) if chart.rank == 2 else e_derham_d(omega_form)
    )
    if domega.is_zero:
        checks.append(AxiomCheck("omega closed", True))
    else:
        idx = sorted(domega.coeffs)[0]
        checks.append(AxiomCheck(
            "omega closed", False,
            "(" + ",".join(f"e{i + 1}" for i in idx) + ")",
            str(domega.coeffs[idx]),
        ))

    # nondegeneracy at the origin
    det = determinant(chart.omega_constant)
    checks.append(AxiomCheck(
        "omega nondegenerate at origin", bool(det), "" if det else "origin",
        "" if det else "det = 0",
    ))

    return ValidationReport(checks)


# ---------------------------------------------------------------------- Hamiltonian data


def hamiltonian_field(f: MultiPoly, chart: AlgebroidChart):
    """Hamiltonian data of f: (frame section X_f, vector field H_f).

    X_f = W^{-1} rho^t df in frame components, H_f = rho(X_f).
    """
    if determinant(chart.omega_constant) == ZERO:
        raise StructureError("omega is singular at the origin")
    rhot_df = tuple(chart.rho_apply(i, f) for i in range(chart.rank))
    winv = chart.omega_inverse
    x_f = tuple(
        sum((winv[i][j] * rhot_df[j] for j in range(chart.rank)),
            chart.zero_poly())
        for i in range(chart.rank)
    )
    return x_f, chart.rho_section(x_f)


def poisson_bracket(f: MultiPoly, g: MultiPoly, chart: AlgebroidChart) -> MultiPoly:
    """{f, g} = H_f g."""
    _, h_f = hamiltonian_field(f, chart)
    return chart.vf_apply(h_f, g)


# ---------------------------------------------------------------------- catalogue


def _pair_omega(chart_rank):
    rows = [[0] * chart_rank for _ in range(chart_rank)]
    for t in range(chart_rank // 2):
        rows[2 * t][2 * t + 1] = 1
        rows[2 * t + 1][2 * t] = -1
    return rows


def catalogue(name: str, **params) -> AlgebroidChart:
    """Named example charts.

    standard(n)            tangent chart of R^{2n}, omega = sum dx ^ dxi
    b_symplectic(k)        log pairs (z_i, z_{i+k}); alias of mixed(k, 0, 0)
    foliation(m, transverse)  leafwise tangent chart with inert coordinates
    mixed(k, l, m)         log, half-log and flat pairs in one chart
    zero_anchor()          rank-4 nilpotent symplectic Lie algebra over R
    """
    if name == "standard":
        n = int(params.get("n", 1))
        return _mixed_chart(0, 0, n, name="standard", params={"n": n})
    if name == "b_symplectic":
        k = int(params.get("k", 1))
        return _mixed_chart(k, 0, 0, name="b_symplectic", params={"k": k})
    if name == "mixed":
        k = int(params.get("k", 1))
        l = int(params.get("l", 0))
        m = int(params.get("m", 0))
        return _mixed_chart(k, l, m, name="mixed",
                            params={"k": k, "l": l, "m": m})
    if name == "foliation":
        m = int(params.get("m", 1))
        transverse = int(params.get("transverse", 1))
        return _mixed_chart(0, 0, m, transverse=transverse, name="foliation",
                            params={"m": m, "transverse": transverse})
    if name == "zero_anchor":
        return _zero_anchor_chart(str(params.get("algebra", "sp2")))
    raise StructureError(f"unknown catalogue chart {name!r}")


def _mixed_chart(k, l, m, transverse=0, name="mixed", params=None):
    n = k + l + m
    if n == 0:
        raise StructureError("mixed chart needs at least one pair")
    base = []
    base += [f"z{i + 1}" for i in range(2 * k)]
    base += [f"y{i + 1}" for i in range(l)]
    base += [f"eta{i + 1}" for i in range(l)]
    base += [f"x{i + 1}" for i in range(m)]
    base += [f"xi{i + 1}" for i in range(m)]
    base += [f"t{i + 1}" for i in range(transverse)]
    base = tuple(base)
    rank = 2 * n
    zero = MultiPoly.zero(base)
    one = MultiPoly.const(base, 1)
    anchor = [[zero for _ in range(rank)] for _ in base]

    def var_row(vname):
        return base.index(vname)

    col = 0
    for i in range(k):
        anchor[var_row(f"z{i + 1}")][col] = MultiPoly.variable(base, f"z{i + 1}")
        anchor[var_row(f"z{i + 1 + k}")][col + 1] = MultiPoly.variable(
            base, f"z{i + 1 + k}")
        col += 2
    for i in range(l):
        anchor[var_row(f"y{i + 1}")][col] = MultiPoly.variable(base, f"y{i + 1}")
        anchor[var_row(f"eta{i + 1}")][col + 1] = one
        col += 2
    for i in range(m):
        anchor[var_row(f"x{i + 1}")][col] = one
        anchor[var_row(f"xi{i + 1}")][col + 1] = one
        col += 2

    structure = [[[zero for _ in range(rank)] for _ in range(rank)]
                 for _ in range(rank)]
    omega = _pair_omega(rank)
    return AlgebroidChart(base, rank, anchor, structure, omega,
                          name=name, params=params or {})


def _zero_anchor_chart(algebra: str) -> AlgebroidChart:
    """Bundle of symplectic Lie algebras over the line, anchor = 0.

    Default fiber: the rank-4 nilpotent algebra [e1,e2] = e3,
    [e1,e3] = e4 with omega pairing (e1,e4) and (e2,e3).
    """
    if algebra not in ("sp2", "sp(2)", "n4"):
        raise StructureError(f"unknown zero-anchor algebra {algebra!r}")
    base = ("w",)
    rank = 4
    zero = MultiPoly.zero(base)
    one = MultiPoly.const(base, 1)
    anchor = [[zero] * rank]
    structure = [[[zero for _ in range(rank)] for _ in range(rank)]
                 for _ in range(rank)]
    # [e1, e2] = e3
    structure[0][1][2] = one
    structure[1][0][2] = -one
    # [e1, e3] = e4
    structure[0][2][3] = one
    structure[2][0][3] = -one
    omega = [[0] * rank for _ in range(rank)]
    omega[0][3], omega[3][0] = 1, -1
    omega[1][2], omega[2][1] = 1, -1
    return AlgebroidChart(base, rank, anchor, structure, omega,
                          name="zero_anchor", params={"algebra": "sp2"})


CATALOGUE_NAMES = ("standard", "zero_anchor", "foliation", "b_symplectic", "mixed")


# ---------------------------------------------------------------------- closed-form model


def weyl_model_product(f: MultiPoly, g: MultiPoly, chart: AlgebroidChart,
                       order: int) -> HbarSeries:
    """Closed-form deformation of the mixed chart, truncated at hbar^order.

    f * g = sum over pair multi-indices (a, b) of
        (i hbar / 2)^{|a|+|b|} (-1)^{|b|} / (a! b!) (D^a E^b f) (E^a D^b g)
    with D, E the per-pair commuting operators given by the anchor frame.
    """
    if chart.name not in ("mixed", "standard", "b_symplectic", "foliation"):
        raise StructureError("closed-form model only for mixed-type charts")
    n = chart.n
    ops = []
    for t in range(n):
        ops.append((2 * t, 2 * t + 1))

    def apply_op(idx, poly):
        return chart.rho_apply(idx, poly)

    def apply_power(pairs, poly):
        out = poly
        for idx, e in pairs:
            for _ in range(e):
                out = apply_op(idx, out)
                if out.is_zero:
                    return out
        return out

    coeffs: dict = {}
    half_i = GaussianRational(0, Fraction(1, 2))

    def multi_indices(total):
        if n == 1:
            for e in range(total + 1):
                yield (e,)
            return
        def rec(rem, slots):
            if slots == 1:
                yield (rem,)
                return
            for e in range(rem + 1):
                for rest in rec(rem - e, slots - 1):
                    yield (e,) + rest
        for tot in range(total + 1):
            yield from rec(tot, n)

    for a in multi_indices(order):
        da_f = apply_power([(ops[t][0], a[t]) for t in range(n)], f)
        if da_f.is_zero:
            continue
        ea_g = apply_power([(ops[t][0], 0) for t in range(n)], g)
        for b in multi_indices(order - sum(a)):
            mtot = sum(a) + sum(b)
            if mtot > order:
                continue
            left = apply_power([(ops[t][1], b[t]) for t in range(n)], da_f)
            if left.is_zero:
                continue
            right = apply_power(
                [(ops[t][1], a[t]) for t in range(n)]
                + [(ops[t][0], b[t]) for t in range(n)],
                g,
            )
            if right.is_zero:
                continue
            denom = 1
            for e in a:
                denom *= factorial(e)
            for e in b:
                denom *= factorial(e)
            scale = (half_i ** mtot) * Fraction((-1) ** sum(b), denom)
            piece = (left * right) * scale
            acc = coeffs.get(mtot)
            coeffs[mtot] = piece if acc is None else acc + piece
    return HbarSeries(chart.base_vars, coeffs, order)
