"""The fiber Weyl algebra: truncated series in fiber variables and hbar.

Elements carry base-polynomial coefficients.  The product is the
constant-coefficient Moyal product of the context's symplectic matrix,
computed through its inverse (the Poisson matrix) contracted in the
fiber variables.  The grading assigns degree 1 to each fiber variable
and degree 2 to hbar, so hbar^-1 scalars sit in degree -2.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .errors import HbarFloorError, StructureError
from .hbar import HBAR_FLOOR, HbarSeries
from .linalg import invert_scalar_matrix, scalar_matrix
from .multipoly import MultiPoly, join_sum
from .scalars import GaussianRational, I_UNIT, ONE, ZERO


def standard_omega(n: int):
    """Block matrix pairing (y^{2t-1}, y^{2t}) with omega(y1, y2) = -1."""
    size = 2 * n
    rows = [[0] * size for _ in range(size)]
    for t in range(n):
        rows[2 * t][2 * t + 1] = -1
        rows[2 * t + 1][2 * t] = 1
    return scalar_matrix(rows)


class WeylContext:
    """Shared data for Weyl elements: fiber names, symplectic matrix, cap."""

    __slots__ = ("n", "fiber_vars", "base_vars", "omega_std", "trunc_total",
                 "pi", "pi_pairs")

    def __init__(self, n, fiber_vars, base_vars, omega_std, trunc_total):
        fiber_vars = tuple(fiber_vars)
        base_vars = tuple(base_vars)
        if len(fiber_vars) != 2 * n:
            raise StructureError("need 2n fiber variables")
        omega_std = scalar_matrix(omega_std)
        if len(omega_std) != 2 * n or any(len(r) != 2 * n for r in omega_std):
            raise StructureError("omega_std must be 2n x 2n")
        for i in range(2 * n):
            for j in range(2 * n):
                if omega_std[i][j] != -omega_std[j][i]:
                    raise StructureError("omega_std must be antisymmetric")
        pi = invert_scalar_matrix(omega_std)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "fiber_vars", fiber_vars)
        object.__setattr__(self, "base_vars", base_vars)
        object.__setattr__(self, "omega_std", omega_std)
        object.__setattr__(self, "trunc_total", trunc_total)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(
            self,
            "pi_pairs",
            tuple(
                (i, j, pi[i][j])
                for i in range(2 * n)
                for j in range(2 * n)
                if pi[i][j]
            ),
        )

    def __setattr__(self, name, value):
        raise AttributeError("WeylContext is immutable")

    @classmethod
    def standard(cls, n, trunc_total, base_vars=()):
        fiber = tuple(f"yhat{i + 1}" for i in range(2 * n))
        return cls(n, fiber, base_vars, standard_omega(n), trunc_total)

    def _key(self):
        return (self.n, self.fiber_vars, self.base_vars, self.omega_std,
                self.trunc_total)

    def __eq__(self, other):
        return isinstance(other, WeylContext) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def with_trunc(self, trunc_total) -> "WeylContext":
        return WeylContext(self.n, self.fiber_vars, self.base_vars,
                           self.omega_std, trunc_total)

    # ------------------------------------------------------------ constructors

    def zero(self) -> "WeylElement":
        return WeylElement(self, {})

    def base_poly(self, poly: MultiPoly, k=0) -> "WeylElement":
        alpha = (0,) * (2 * self.n)
        return WeylElement(self, {(alpha, k): poly})

    def scalar(self, value, k=0) -> "WeylElement":
        return self.base_poly(MultiPoly.const(self.base_vars, value), k)

    def fiber_monomial(self, alpha, k=0, coeff=1) -> "WeylElement":
        poly = MultiPoly.const(self.base_vars, coeff)
        return WeylElement(self, {(tuple(alpha), k): poly})

    def generator(self, index: int) -> "WeylElement":
        alpha = tuple(1 if i == index else 0 for i in range(2 * self.n))
        return self.fiber_monomial(alpha)

    def from_series(self, series: HbarSeries) -> "WeylElement":
        if series.variables != self.base_vars:
            raise StructureError("series variables do not match context base")
        alpha = (0,) * (2 * self.n)
        return WeylElement(self, {(alpha, k): p for k, p in series.coeffs.items()})


class WeylElement:
    """Sparse truncated Weyl-algebra element.

    terms: (fiber multi-index alpha, hbar exponent k) -> base polynomial.
    Every stored term satisfies |alpha| + 2k <= trunc_total and k >= -1.
    """

    __slots__ = ("context", "terms")

    def __init__(self, context: WeylContext, terms):
        clean = {}
        cap = context.trunc_total
        for (alpha, k), poly in terms.items():
            if poly.is_zero:
                continue
            if k < HBAR_FLOOR:
                raise HbarFloorError(f"hbar exponent {k} below floor")
            if sum(alpha) + 2 * k > cap:
                continue
            clean[(tuple(alpha), k)] = poly
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("WeylElement is immutable")

    def _check(self, other: "WeylElement"):
        if self.context != other.context:
            raise StructureError("Weyl context mismatch")

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = self.context.scalar(other)
        if not isinstance(other, WeylElement):
            return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for key, poly in other.terms.items():
            acc = terms.get(key)
            total = poly if acc is None else acc + poly
            if total.is_zero:
                terms.pop(key, None)
            else:
                terms[key] = total
        out = WeylElement.__new__(WeylElement)
        object.__setattr__(out, "context", self.context)
        object.__setattr__(out, "terms", terms)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = WeylElement.__new__(WeylElement)
        object.__setattr__(out, "context", self.context)
        object.__setattr__(out, "terms", {k: -p for k, p in self.terms.items()})
        return out

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = self.context.scalar(other)
        return self + (-other)

    def scale(self, value) -> "WeylElement":
        value = GaussianRational.coerce(value)
        if not value:
            return self.context.zero()
        out = WeylElement.__new__(WeylElement)
        object.__setattr__(out, "context", self.context)
        object.__setattr__(
            out, "terms", {k: p * value for k, p in self.terms.items()}
        )
        return out

    def scale_poly(self, poly: MultiPoly) -> "WeylElement":
        return WeylElement(
            self.context, {k: p * poly for k, p in self.terms.items()}
        )

    def hbar_shift(self, shift: int) -> "WeylElement":
        return WeylElement(
            self.context,
            {(alpha, k + shift): p for (alpha, k), p in self.terms.items()},
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if isinstance(other, MultiPoly):
            return self.scale_poly(other)
        if isinstance(other, WeylElement):
            return moyal_product(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if isinstance(other, MultiPoly):
            return self.scale_poly(other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = self.context.scalar(other)
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self.context == other.context and self.terms == other.terms

    # ------------------------------------------------------------ structure

    def degree(self) -> int:
        """Top grading degree; -inf is represented by None for zero."""
        if not self.terms:
            return None
        return max(sum(a) + 2 * k for (a, k) in self.terms)

    def min_degree(self):
        if not self.terms:
            return None
        return min(sum(a) + 2 * k for (a, k) in self.terms)

    def graded_component(self, d: int) -> "WeylElement":
        return WeylElement(
            self.context,
            {key: p for key, p in self.terms.items() if sum(key[0]) + 2 * key[1] == d},
        )

    def fiber_component(self, fiber_degree: int) -> "WeylElement":
        return WeylElement(
            self.context,
            {key: p for key, p in self.terms.items() if sum(key[0]) == fiber_degree},
        )

    def central_part(self) -> HbarSeries:
        """Terms with no fiber variables, as an hbar series over the base."""
        zero_alpha = (0,) * (2 * self.context.n)
        coeffs = {}
        for (alpha, k), poly in self.terms.items():
            if alpha == zero_alpha:
                coeffs[k] = coeffs.get(k, MultiPoly.zero(self.context.base_vars)) + poly
        return HbarSeries(self.context.base_vars, coeffs, self.context.trunc_total)

    def noncentral_part(self) -> "WeylElement":
        zero_alpha = (0,) * (2 * self.context.n)
        return WeylElement(
            self.context,
            {key: p for key, p in self.terms.items() if key[0] != zero_alpha},
        )

    def symbol(self) -> HbarSeries:
        """Evaluation at fiber = 0."""
        return self.central_part()

    def fiber_derive(self, index: int) -> "WeylElement":
        terms = {}
        for (alpha, k), poly in self.terms.items():
            e = alpha[index]
            if e == 0:
                continue
            new = list(alpha)
            new[index] = e - 1
            key = (tuple(new), k)
            add = poly * e
            acc = terms.get(key)
            terms[key] = add if acc is None else acc + add
        return WeylElement(self.context, terms)

    def base_derive_apply(self, derivation) -> "WeylElement":
        """Apply a base-coefficient derivation (MultiPoly -> MultiPoly)."""
        return WeylElement(
            self.context, {key: derivation(p) for key, p in self.terms.items()}
        )

    def rehome(self, context: WeylContext) -> "WeylElement":
        """Move to a compatible context (same data, new truncation)."""
        if (context.n, context.fiber_vars, context.base_vars, context.omega_std) != (
            self.context.n,
            self.context.fiber_vars,
            self.context.base_vars,
            self.context.omega_std,
        ):
            raise StructureError("rehome requires an identical fiber setup")
        return WeylElement(context, self.terms)

    # ------------------------------------------------------------ rendering

    def __str__(self):
        if not self.terms:
            return "0"
        ctx = self.context

        def mono(alpha):
            factors = []
            for v, e in zip(ctx.fiber_vars, alpha):
                if e:
                    factors.append(v if e == 1 else f"{v}^{e}")
            return "*".join(factors)

        def sort_key(item):
            (alpha, k), _ = item
            return (sum(alpha) + 2 * k, tuple(-e for e in alpha), k)

        parts = []
        for (alpha, k), poly in sorted(self.terms.items(), key=sort_key):
            bits = []
            m = mono(alpha)
            if m:
                bits.append(m)
            if k == 1:
                bits.append("hbar")
            elif k != 0:
                bits.append(f"hbar^{k}")
            bits.append(f"({poly})")
            parts.append("*".join(bits))
        return join_sum(parts)

    def __repr__(self):
        return f"<WeylElement {self}>"


# ---------------------------------------------------------------------- product


def _pair_tensor(a: WeylElement, b: WeylElement, cap: int):
    """Initial contraction tensor with degree-additive pruning.

    Keys (alpha_a, alpha_b, ktot) with merged base coefficient.  Chains
    whose invariant total degree already exceeds the cap contribute
    nothing at any contraction order and are dropped immediately.
    """
    tensor = {}
    for (aa, ka), pa in a.terms.items():
        for (ab, kb), pb in b.terms.items():
            if sum(aa) + sum(ab) + 2 * (ka + kb) > cap:
                continue
            key = (aa, ab, ka + kb)
            prod = pa * pb
            acc = tensor.get(key)
            tensor[key] = prod if acc is None else acc + prod
    return {k: v for k, v in tensor.items() if not v.is_zero}


def _contract_once(tensor, pairs):
    out = {}
    for (aa, ab, ktot), poly in tensor.items():
        for i, j, pij in pairs:
            ei = aa[i]
            ej = ab[j]
            if ei == 0 or ej == 0:
                continue
            na = list(aa)
            na[i] = ei - 1
            nb = list(ab)
            nb[j] = ej - 1
            key = (tuple(na), tuple(nb), ktot)
            add = poly * (pij * (ei * ej))
            acc = out.get(key)
            out[key] = add if acc is None else acc + add
    return {k: v for k, v in out.items() if not v.is_zero}


def _collect(context, tensor, m, coeff, terms, check_floor=True):
    for (aa, ab, ktot), poly in tensor.items():
        k = ktot + m
        if check_floor and k < HBAR_FLOOR:
            raise HbarFloorError(
                f"moyal product produced hbar exponent {k} below floor"
            )
        alpha = tuple(x + y for x, y in zip(aa, ab))
        key = (alpha, k)
        add = poly * coeff
        acc = terms.get(key)
        terms[key] = add if acc is None else acc + add


def moyal_product(a: WeylElement, b: WeylElement) -> WeylElement:
    """Moyal product: sum over contraction orders of (i hbar / 2)^m / m!."""
    a._check(b)
    ctx = a.context
    cap = ctx.trunc_total
    tensor = _pair_tensor(a, b, cap)
    terms: dict = {}
    half_i = I_UNIT * Fraction(1, 2)
    m = 0
    coeff = ONE
    while tensor:
        _collect(ctx, tensor, m, coeff, terms)
        tensor = _contract_once(tensor, ctx.pi_pairs)
        m += 1
        coeff = coeff * half_i / m
    return WeylElement(ctx, terms)


def weyl_commutator(a: WeylElement, b: WeylElement) -> WeylElement:
    """a*b - b*a computed as twice the odd contraction orders.

    Even orders cancel identically, so hbar^-1 inputs never produce the
    spurious hbar^-2 of the plain product.
    """
    a._check(b)
    ctx = a.context
    tensor = _pair_tensor(a, b, ctx.trunc_total)
    terms: dict = {}
    half_i = I_UNIT * Fraction(1, 2)
    m = 0
    coeff = ONE
    while tensor:
        if m % 2 == 1:
            _collect(ctx, tensor, m, coeff * 2, terms)
        tensor = _contract_once(tensor, ctx.pi_pairs)
        m += 1
        coeff = coeff * half_i / m
    return WeylElement(ctx, terms)


def grading_split(a: WeylElement):
    """Split into homogeneous components of the total grading."""
    degrees = sorted({sum(al) + 2 * k for (al, k) in a.terms})
    return {d: a.graded_component(d) for d in degrees}


def center_test(a: WeylElement):
    """(True, None) if a commutes with every generator, else (False, witness).

    The commutators are evaluated in a lifted truncation so top-degree
    terms are not hidden by the cap.
    """
    ctx = a.context
    lifted = ctx.with_trunc(ctx.trunc_total + 2)
    a_lift = a.rehome(lifted)
    for j in range(2 * ctx.n):
        gen = lifted.generator(j)
        if weyl_commutator(a_lift, gen):
            return False, ctx.fiber_vars[j]
    return True, None


def moyal_of_polys(context: WeylContext, a: MultiPoly, b: MultiPoly) -> WeylElement:
    """Convenience: Moyal product of two pure fiber polynomials.

    The inputs are read over the fiber variables with constant base part.
    """
    def embed(p):
        terms = {}
        for exps, coeff in p.terms.items():
            terms[(exps, 0)] = MultiPoly.const(context.base_vars, coeff)
        return WeylElement(context, terms)

    return moyal_product(embed(a), embed(b))
