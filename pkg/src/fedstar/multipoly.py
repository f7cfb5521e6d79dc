"""Sparse multivariate polynomials over the Gaussian rationals.

Terms are stored as a map from exponent tuples to nonzero coefficients.
The canonical textual form orders terms graded-lexicographically,
highest first.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import StructureError
from .scalars import GaussianRational, ONE, ZERO


def _coerce_scalar(c) -> GaussianRational:
    return GaussianRational.coerce(c)


class MultiPoly:
    __slots__ = ("variables", "terms")

    def __init__(self, variables, terms=None):
        variables = tuple(variables)
        clean = {}
        if terms:
            nvars = len(variables)
            for exps, coeff in terms.items():
                coeff = _coerce_scalar(coeff)
                if not coeff:
                    continue
                exps = tuple(exps)
                if len(exps) != nvars:
                    raise StructureError(
                        f"exponent tuple {exps} does not match {nvars} variables"
                    )
                if any(e < 0 for e in exps):
                    raise StructureError(f"negative exponent in {exps}")
                clean[exps] = coeff
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    # ---------------------------------------------------------------- factories

    @classmethod
    def zero(cls, variables) -> "MultiPoly":
        return cls(variables)

    @classmethod
    def const(cls, variables, value) -> "MultiPoly":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): _coerce_scalar(value)})

    @classmethod
    def variable(cls, variables, name) -> "MultiPoly":
        variables = tuple(variables)
        if name not in variables:
            raise StructureError(f"unknown variable {name!r}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: ONE})

    @classmethod
    def monomial(cls, variables, exps, coeff=1) -> "MultiPoly":
        return cls(tuple(variables), {tuple(exps): _coerce_scalar(coeff)})

    # ---------------------------------------------------------------- helpers

    def _check(self, other: "MultiPoly"):
        if self.variables != other.variables:
            raise StructureError(
                f"variable mismatch: {self.variables} vs {other.variables}"
            )

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def total_degree(self) -> int:
        """Degree of the zero polynomial is -1 by convention."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def constant_term(self) -> GaussianRational:
        return self.terms.get((0,) * len(self.variables), ZERO)

    def is_constant(self) -> bool:
        return self.total_degree() <= 0

    # ---------------------------------------------------------------- arithmetic

    def __add__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = MultiPoly.const(self.variables, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for exps, coeff in other.terms.items():
            acc = terms.get(exps, ZERO) + coeff
            if acc:
                terms[exps] = acc
            else:
                terms.pop(exps, None)
        out = MultiPoly.__new__(MultiPoly)
        object.__setattr__(out, "variables", self.variables)
        object.__setattr__(out, "terms", terms)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = MultiPoly.__new__(MultiPoly)
        object.__setattr__(out, "variables", self.variables)
        object.__setattr__(out, "terms", {e: -c for e, c in self.terms.items()})
        return out

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = MultiPoly.const(self.variables, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            c = _coerce_scalar(other)
            if not c:
                return MultiPoly.zero(self.variables)
            return self._scaled(c)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        self._check(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exps = tuple(a + b for a, b in zip(e1, e2))
                acc = terms.get(exps, ZERO) + c1 * c2
                if acc:
                    terms[exps] = acc
                else:
                    terms.pop(exps, None)
        out = MultiPoly.__new__(MultiPoly)
        object.__setattr__(out, "variables", self.variables)
        object.__setattr__(out, "terms", terms)
        return out

    __rmul__ = __mul__

    def _scaled(self, c: GaussianRational) -> "MultiPoly":
        out = MultiPoly.__new__(MultiPoly)
        object.__setattr__(out, "variables", self.variables)
        object.__setattr__(out, "terms", {e: v * c for e, v in self.terms.items()})
        return out

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        result = MultiPoly.const(self.variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derive(self, name) -> "MultiPoly":
        """Formal partial derivative with respect to one variable."""
        if name not in self.variables:
            raise StructureError(f"unknown variable {name!r}")
        idx = self.variables.index(name)
        terms = {}
        for exps, coeff in self.terms.items():
            e = exps[idx]
            if e == 0:
                continue
            new = list(exps)
            new[idx] = e - 1
            terms[tuple(new)] = coeff * e
        return MultiPoly(self.variables, terms)

    def truncate_degree(self, cap: int) -> "MultiPoly":
        return MultiPoly(
            self.variables, {e: c for e, c in self.terms.items() if sum(e) <= cap}
        )

    def rename(self, variables) -> "MultiPoly":
        """Reinterpret over a new variable tuple of the same length."""
        variables = tuple(variables)
        if len(variables) != len(self.variables):
            raise StructureError("rename requires the same number of variables")
        return MultiPoly(variables, self.terms)

    def extend(self, variables) -> "MultiPoly":
        """Embed into a larger variable tuple containing the current one."""
        variables = tuple(variables)
        positions = []
        for v in self.variables:
            if v not in variables:
                raise StructureError(f"variable {v!r} missing from extension")
            positions.append(variables.index(v))
        terms = {}
        for exps, coeff in self.terms.items():
            new = [0] * len(variables)
            for pos, e in zip(positions, exps):
                new[pos] = e
            terms[tuple(new)] = coeff
        return MultiPoly(variables, terms)

    # ---------------------------------------------------------------- comparisons

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = MultiPoly.const(self.variables, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    # ---------------------------------------------------------------- rendering

    @staticmethod
    def _grlex_key(exps):
        return (-sum(exps), tuple(-e for e in exps))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: self._grlex_key(kv[0]))

    def _monomial_str(self, exps) -> str:
        factors = []
        for v, e in zip(self.variables, exps):
            if e == 0:
                continue
            factors.append(v if e == 1 else f"{v}^{e}")
        return "*".join(factors)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, coeff in self.sorted_terms():
            mono = self._monomial_str(exps)
            cs = str(coeff)
            if not mono:
                parts.append(cs)
            elif cs == "1":
                parts.append(mono)
            elif cs == "-1":
                parts.append(f"-{mono}")
            else:
                parts.append(f"{cs}*{mono}")
        return join_sum(parts)

    def __repr__(self):
        return f"<MultiPoly {self}>"


def join_sum(parts) -> str:
    """Join term strings, folding leading minus signs into ' - ' separators."""
    out = parts[0]
    for p in parts[1:]:
        if p.startswith("-"):
            out += " - " + p[1:]
        else:
            out += " + " + p
    return out
