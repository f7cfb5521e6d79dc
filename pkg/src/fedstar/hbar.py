"""Truncated hbar-series with polynomial coefficients.

Exponents live in {-1, 0, 1, ..., trunc}.  The floor at -1 is global:
operations that would produce a lower exponent raise HbarFloorError
instead of truncating.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import HbarFloorError, StructureError
from .multipoly import MultiPoly, join_sum
from .scalars import GaussianRational

HBAR_FLOOR = -1


class HbarSeries:
    __slots__ = ("variables", "coeffs", "trunc")

    def __init__(self, variables, coeffs=None, trunc=8):
        variables = tuple(variables)
        if trunc < HBAR_FLOOR:
            raise ValueError("truncation order must be >= -1")
        clean = {}
        if coeffs:
            for k, poly in coeffs.items():
                if not isinstance(poly, MultiPoly):
                    poly = MultiPoly.const(variables, poly)
                if poly.variables != variables:
                    raise StructureError("coefficient variables mismatch")
                if poly.is_zero:
                    continue
                if k < HBAR_FLOOR:
                    raise HbarFloorError(f"hbar exponent {k} below floor {HBAR_FLOOR}")
                if k > trunc:
                    continue
                clean[k] = poly
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "trunc", trunc)

    def __setattr__(self, name, value):
        raise AttributeError("HbarSeries is immutable")

    # ---------------------------------------------------------------- factories

    @classmethod
    def zero(cls, variables, trunc=8):
        return cls(variables, {}, trunc)

    @classmethod
    def const(cls, variables, value, trunc=8):
        return cls(variables, {0: MultiPoly.const(variables, value)}, trunc)

    @classmethod
    def from_poly(cls, poly: MultiPoly, trunc=8):
        return cls(poly.variables, {0: poly}, trunc)

    @classmethod
    def hbar(cls, variables, power=1, trunc=8):
        return cls(variables, {power: MultiPoly.const(variables, 1)}, trunc)

    # ---------------------------------------------------------------- basics

    def _check(self, other: "HbarSeries"):
        if self.variables != other.variables:
            raise StructureError("variable mismatch between series")

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def coefficient(self, k: int) -> MultiPoly:
        return self.coeffs.get(k, MultiPoly.zero(self.variables))

    def min_order(self):
        return min(self.coeffs) if self.coeffs else None

    def truncate(self, n: int) -> "HbarSeries":
        """Drop all exponents above n; idempotent."""
        if n < HBAR_FLOOR:
            raise ValueError("truncation order must be >= -1")
        return HbarSeries(
            self.variables,
            {k: p for k, p in self.coeffs.items() if k <= n},
            min(self.trunc, n),
        )

    def with_trunc(self, trunc: int) -> "HbarSeries":
        return HbarSeries(self.variables, self.coeffs, trunc)

    # ---------------------------------------------------------------- arithmetic

    def _coerce(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return HbarSeries.const(self.variables, other, self.trunc)
        if isinstance(other, MultiPoly):
            return HbarSeries.from_poly(other, self.trunc)
        if isinstance(other, HbarSeries):
            return other
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        coeffs = dict(self.coeffs)
        for k, p in other.coeffs.items():
            acc = coeffs.get(k)
            coeffs[k] = p if acc is None else acc + p
        return HbarSeries(self.variables, coeffs, trunc)

    __radd__ = __add__

    def __neg__(self):
        return HbarSeries(
            self.variables, {k: -p for k, p in self.coeffs.items()}, self.trunc
        )

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        coeffs: dict = {}
        for k1, p1 in self.coeffs.items():
            for k2, p2 in other.coeffs.items():
                k = k1 + k2
                if k < HBAR_FLOOR:
                    raise HbarFloorError(
                        f"product exponent {k} below floor {HBAR_FLOOR}"
                    )
                if k > trunc:
                    continue
                prod = p1 * p2
                acc = coeffs.get(k)
                coeffs[k] = prod if acc is None else acc + prod
        return HbarSeries(self.variables, coeffs, trunc)

    __rmul__ = __mul__

    def derive(self, name) -> "HbarSeries":
        return HbarSeries(
            self.variables,
            {k: p.derive(name) for k, p in self.coeffs.items()},
            self.trunc,
        )

    def __eq__(self, other):
        coerced = self._coerce(other)
        if coerced is None:
            return NotImplemented
        return self.variables == coerced.variables and self.coeffs == coerced.coeffs

    # ---------------------------------------------------------------- rendering

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k in sorted(self.coeffs):
            poly = f"({self.coeffs[k]})"
            if k == 0:
                parts.append(poly)
            elif k == 1:
                parts.append(f"hbar*{poly}")
            else:
                parts.append(f"hbar^{k}*{poly}")
        return join_sum(parts)

    def __repr__(self):
        return f"<HbarSeries {self}>"


def series_truncate(series: HbarSeries, n: int) -> HbarSeries:
    return series.truncate(n)
