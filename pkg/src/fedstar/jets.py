"""PBW-normal-ordered differential operators and truncated dual jets.

Operators are spanned over the base functions by divided-power
monomials e_alpha = prod_i e_i^{alpha_i} / alpha_i! in the frame
sections.  Normalization rewrites arbitrary words with the two
defining relations

    e_i f     = f e_i + rho(e_i)(f)
    e_i e_j   = e_j e_i + sum_k c^k_{ij} e_k      (i > j)

until every word is an ordered generator monomial with a left
coefficient.  The rewrite order is configurable; all schedules agree.

Jets are linear functionals on the divided-power basis up to an order
cap.  Operators raise jet order by one, so derived jets carry a loss
marker: the first order whose values are no longer reliable.
"""

from __future__ import annotations

from math import factorial

from .charts import AlgebroidChart
from .errors import OrderOverflowError, StructureError
from .multipoly import MultiPoly


# ---------------------------------------------------------------------- words


def _cleanup(coeff, items):
    """Merge adjacent functions and absorb leading functions into coeff."""
    out = []
    for item in items:
        if isinstance(item, MultiPoly):
            if out and isinstance(out[-1], MultiPoly):
                out[-1] = out[-1] * item
            elif not out:
                coeff = coeff * item
            else:
                out.append(item)
        else:
            out.append(item)
    return coeff, out


def _find_redexes(items):
    """Positions where a defining relation applies."""
    spots = []
    for p in range(len(items) - 1):
        a, b = items[p], items[p + 1]
        if isinstance(a, int) and isinstance(b, MultiPoly):
            spots.append(p)
        elif isinstance(a, int) and isinstance(b, int) and a > b:
            spots.append(p)
    return spots


def pbw_normalize(word, chart: AlgebroidChart, order_cap: int,
                  choose=None) -> "EDiffOp":
    """Normal form of a word of functions and frame-generator indices.

    word entries: MultiPoly (function) or int (frame index).  The
    default schedule picks the rightmost redex; `choose` may select any
    redex position from the offered list, and every schedule yields the
    same operator.
    """
    items = []
    gens = 0
    for entry in word:
        if isinstance(entry, int):
            if not 0 <= entry < chart.rank:
                raise StructureError(f"frame index {entry} out of range")
            items.append(entry)
            gens += 1
        elif isinstance(entry, MultiPoly):
            if entry.variables != chart.base_vars:
                raise StructureError("word function over wrong variables")
            items.append(entry)
        else:
            raise StructureError(f"bad word entry {entry!r}")
    if gens > order_cap:
        raise OrderOverflowError(
            f"word has {gens} generators, order cap is {order_cap}"
        )

    one = chart.const_poly(1)
    coeff, items = _cleanup(one, items)
    worklist = [(coeff, items)]
    terms: dict = {}
    while worklist:
        coeff, items = worklist.pop()
        if coeff.is_zero:
            continue
        spots = _find_redexes(items)
        if not spots:
            alpha = [0] * chart.rank
            for g in items:
                alpha[g] += 1
            scale = 1
            for a in alpha:
                scale *= factorial(a)
            key = tuple(alpha)
            add = coeff * scale
            acc = terms.get(key)
            terms[key] = add if acc is None else acc + add
            continue
        p = spots[-1] if choose is None else spots[choose(len(spots))]
        a, b = items[p], items[p + 1]
        if isinstance(b, MultiPoly):
            # e_i f = f e_i + rho(e_i)(f)
            swapped = items[:p] + [b, a] + items[p + 2:]
            worklist.append(_cleanup(coeff, swapped))
            derived = chart.rho_apply(a, b)
            if not derived.is_zero:
                reduced = items[:p] + [derived] + items[p + 2:]
                worklist.append(_cleanup(coeff, reduced))
        else:
            # e_i e_j = e_j e_i + sum_k c^k_{ij} e_k
            swapped = items[:p] + [b, a] + items[p + 2:]
            worklist.append(_cleanup(coeff, swapped))
            for k in range(chart.rank):
                c = chart.structure[a][b][k]
                if c.is_zero:
                    continue
                reduced = items[:p] + [c, k] + items[p + 2:]
                worklist.append(_cleanup(coeff, reduced))
    return EDiffOp(chart, order_cap, terms)


class EDiffOp:
    """Operator sum f_alpha(x) e_alpha over the divided-power basis."""

    def __init__(self, chart: AlgebroidChart, order_cap: int, terms=None):
        clean = {}
        if terms:
            for alpha, poly in terms.items():
                alpha = tuple(alpha)
                if len(alpha) != chart.rank:
                    raise StructureError("multi-index length mismatch")
                if sum(alpha) > order_cap:
                    raise OrderOverflowError(
                        f"operator order {sum(alpha)} exceeds cap {order_cap}"
                    )
                if poly.is_zero:
                    continue
                clean[alpha] = poly
        self.chart = chart
        self.order_cap = order_cap
        self.terms = clean

    @classmethod
    def identity(cls, chart, order_cap):
        return cls(chart, order_cap, {(0,) * chart.rank: chart.const_poly(1)})

    @classmethod
    def generator(cls, chart, order_cap, index):
        alpha = tuple(1 if i == index else 0 for i in range(chart.rank))
        return cls(chart, order_cap, {alpha: chart.const_poly(1)})

    @property
    def is_zero(self):
        return not self.terms

    def order(self):
        return max((sum(a) for a in self.terms), default=-1)

    def __add__(self, other):
        if self.chart != other.chart or self.order_cap != other.order_cap:
            raise StructureError("operator mismatch")
        terms = dict(self.terms)
        for a, p in other.terms.items():
            acc = terms.get(a)
            total = p if acc is None else acc + p
            if total.is_zero:
                terms.pop(a, None)
            else:
                terms[a] = total
        return EDiffOp(self.chart, self.order_cap, terms)

    def __neg__(self):
        return EDiffOp(self.chart, self.order_cap,
                       {a: -p for a, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, value):
        return EDiffOp(self.chart, self.order_cap,
                       {a: p * value for a, p in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, EDiffOp):
            return NotImplemented
        return (self.chart == other.chart and self.terms == other.terms)

    def symbol(self):
        """Top-order part as a divided-power symbol table."""
        top = self.order()
        return {a: p for a, p in self.terms.items() if sum(a) == top}

    def rho_apply_to(self, f: MultiPoly) -> MultiPoly:
        """Image under the anchor representation, applied to a function."""
        out = self.chart.zero_poly()
        for alpha, coeff in self.terms.items():
            out = out + coeff * _anchor_power(self.chart, alpha, f)
        return out

    def to_json_dict(self):
        return {
            ",".join(map(str, a)): str(p) for a, p in sorted(self.terms.items())
        }

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for alpha, poly in sorted(self.terms.items()):
            mono = "*".join(
                f"e{i + 1}^{a}" if a > 1 else f"e{i + 1}"
                for i, a in enumerate(alpha) if a
            )
            parts.append(f"({poly})*[{mono or '1'}]")
        return " + ".join(parts)

    def __repr__(self):
        return f"<EDiffOp {self}>"


def _anchor_power(chart, alpha, f):
    """rho(e_alpha) f with divided powers, leftmost generator applied last."""
    out = f
    denom = 1
    for i in reversed(range(chart.rank)):
        for _ in range(alpha[i]):
            out = chart.rho_apply(i, out)
            if out.is_zero:
                return out
        denom *= factorial(alpha[i])
    if denom != 1:
        from fractions import Fraction

        out = out * Fraction(1, denom)
    return out


def op_compose(d: EDiffOp, e: EDiffOp, choose=None) -> EDiffOp:
    """Composition in the operator algebra; orders add."""
    if d.chart != e.chart or d.order_cap != e.order_cap:
        raise StructureError("operator mismatch")
    chart = d.chart
    cap = d.order_cap
    from fractions import Fraction

    result = EDiffOp(chart, cap, {})
    for alpha, f in d.terms.items():
        for beta, g in e.terms.items():
            if sum(alpha) + sum(beta) > cap:
                raise OrderOverflowError(
                    f"composition order {sum(alpha) + sum(beta)} exceeds cap {cap}"
                )
            word = [f]
            for i in range(chart.rank):
                word.extend([i] * alpha[i])
            word.append(g)
            for i in range(chart.rank):
                word.extend([i] * beta[i])
            denom = 1
            for a in alpha:
                denom *= factorial(a)
            for b in beta:
                denom *= factorial(b)
            piece = pbw_normalize(word, chart, cap, choose=choose)
            result = result + piece.scale(Fraction(1, denom))
    return result


# ---------------------------------------------------------------------- jets


class EJet:
    """Functional on the divided-power basis up to an order cap.

    lost_from marks the first order whose values are unreliable after
    operator applications; intact layers are strictly below it.
    """

    def __init__(self, chart: AlgebroidChart, order_cap: int, values=None,
                 lost_from=None):
        if lost_from is None:
            lost_from = order_cap + 1
        lost_from = min(lost_from, order_cap + 1)
        clean = {}
        if values:
            for alpha, poly in values.items():
                alpha = tuple(alpha)
                if len(alpha) != chart.rank:
                    raise StructureError("multi-index length mismatch")
                if sum(alpha) >= lost_from:
                    continue
                if poly.is_zero:
                    continue
                clean[alpha] = poly
        self.chart = chart
        self.order_cap = order_cap
        self.values = clean
        self.lost_from = lost_from

    @classmethod
    def unit(cls, chart, order_cap):
        return cls(chart, order_cap,
                   {(0,) * chart.rank: chart.const_poly(1)})

    @classmethod
    def dual_basis(cls, chart, order_cap, alpha):
        return cls(chart, order_cap, {tuple(alpha): chart.const_poly(1)})

    def value(self, alpha) -> MultiPoly:
        return self.values.get(tuple(alpha), self.chart.zero_poly())

    def _check(self, other: "EJet"):
        if self.chart != other.chart or self.order_cap != other.order_cap:
            raise StructureError("jet mismatch")

    def __add__(self, other):
        self._check(other)
        values = dict(self.values)
        for a, p in other.values.items():
            acc = values.get(a)
            total = p if acc is None else acc + p
            if total.is_zero:
                values.pop(a, None)
            else:
                values[a] = total
        return EJet(self.chart, self.order_cap, values,
                    min(self.lost_from, other.lost_from))

    def __neg__(self):
        return EJet(self.chart, self.order_cap,
                    {a: -p for a, p in self.values.items()}, self.lost_from)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, value):
        return EJet(self.chart, self.order_cap,
                    {a: p * value for a, p in self.values.items()},
                    self.lost_from)

    def eval_op(self, op: EDiffOp) -> MultiPoly:
        if op.order() >= self.lost_from:
            raise OrderOverflowError("operator reaches lost jet layers")
        out = self.chart.zero_poly()
        for alpha, coeff in op.terms.items():
            v = self.values.get(alpha)
            if v is not None:
                out = out + coeff * v
        return out

    def agrees_with(self, other: "EJet", through=None) -> bool:
        """Equality on the shared intact layers (or through a given order)."""
        bound = min(self.lost_from, other.lost_from)
        if through is not None:
            bound = min(bound, through + 1)
        for a in set(self.values) | set(other.values):
            if sum(a) < bound and self.value(a) != other.value(a):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, EJet):
            return NotImplemented
        return (self.chart == other.chart
                and self.order_cap == other.order_cap
                and self.values == other.values
                and self.lost_from == other.lost_from)

    def to_json_dict(self):
        return {
            ",".join(map(str, a)): str(p) for a, p in sorted(self.values.items())
        }

    def __repr__(self):
        vals = ", ".join(
            f"{a}: {p}" for a, p in sorted(self.values.items())
        )
        return f"<EJet lost_from={self.lost_from} {{{vals}}}>"


def jet_of_function(f: MultiPoly, chart: AlgebroidChart, order_cap: int) -> EJet:
    """The jet D -> rho(D) f, computed by iterated anchor application."""
    values = {(0,) * chart.rank: f}
    from fractions import Fraction

    for order in range(1, order_cap + 1):
        for alpha in _multi_indices(chart.rank, order):
            i = next(t for t in range(chart.rank) if alpha[t])
            lower = list(alpha)
            lower[i] -= 1
            prev = values.get(tuple(lower))
            if prev is None or prev.is_zero:
                values[alpha] = chart.zero_poly()
                continue
            values[alpha] = chart.rho_apply(i, prev) * Fraction(1, alpha[i])
    return EJet(chart, order_cap, values)


def _multi_indices(slots, total):
    if slots == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _multi_indices(slots - 1, total - head):
            yield (head,) + rest


def all_multi_indices(slots, max_total):
    for total in range(max_total + 1):
        yield from _multi_indices(slots, total)


def jet_product(l1: EJet, l2: EJet) -> EJet:
    """Commutative product dual to the coproduct on divided powers."""
    l1._check(l2)
    chart = l1.chart
    lost = min(l1.lost_from, l2.lost_from)
    values: dict = {}
    for a1, p1 in l1.values.items():
        for a2, p2 in l2.values.items():
            gamma = tuple(x + y for x, y in zip(a1, a2))
            if sum(gamma) >= lost:
                continue
            prod = p1 * p2
            acc = values.get(gamma)
            values[gamma] = prod if acc is None else acc + prod
    return EJet(chart, l1.order_cap, values, lost)


def _right_multiply_basis(chart, order_cap, alpha, i):
    """e_alpha e_i as an operator (order |alpha| + 1)."""
    from fractions import Fraction

    word = []
    for t in range(chart.rank):
        word.extend([t] * alpha[t])
    word.append(i)
    denom = 1
    for a in alpha:
        denom *= factorial(a)
    return pbw_normalize(word, chart, order_cap).scale(Fraction(1, denom))


def _left_multiply_section(chart, order_cap, sigma, alpha):
    """(sum_i sigma_i e_i) e_alpha as an operator (order |alpha| + 1)."""
    from fractions import Fraction

    denom = 1
    for a in alpha:
        denom *= factorial(a)
    out = EDiffOp(chart, order_cap, {})
    for i, coeff in enumerate(sigma):
        if coeff.is_zero:
            continue
        word = [coeff, i]
        for t in range(chart.rank):
            word.extend([t] * alpha[t])
        piece = pbw_normalize(word, chart, order_cap)
        out = out + piece.scale(Fraction(1, denom))
    return out


def grothendieck(sigma, l: EJet) -> EJet:
    """Covariant derivative of a jet along a frame-component section.

    (nabla_sigma l)(D) = rho(sigma) l(D) - l(sigma D).  The top intact
    layer is consumed; the result's loss marker drops by one.
    """
    chart = l.chart
    sigma = tuple(sigma)
    if len(sigma) != chart.rank:
        raise StructureError("section has wrong number of components")
    new_lost = min(l.lost_from - 1, l.order_cap + 1)
    values = {}
    rho_sigma = chart.rho_section(sigma)
    for alpha in all_multi_indices(chart.rank, min(l.order_cap, new_lost - 1)):
        if sum(alpha) >= new_lost:
            continue
        first = chart.vf_apply(rho_sigma, l.value(alpha))
        op = _left_multiply_section(chart, l.order_cap, sigma, alpha)
        second = l.eval_op(op)
        val = first - second
        if not val.is_zero:
            values[alpha] = val
    return EJet(chart, l.order_cap, values, new_lost)


def jet_poisson(l1: EJet, l2: EJet, chart: AlgebroidChart) -> EJet:
    """Poisson bracket of jets driven by the frame Poisson tensor."""
    l1._check(l2)
    if l1.chart != chart:
        raise StructureError("jets live on a different chart")
    phi = chart.poisson_frame_tensor
    lost = min(l1.lost_from, l2.lost_from) - 1
    values: dict = {}
    cap = l1.order_cap
    pairs = [
        (i, j, phi[i][j])
        for i in range(chart.rank)
        for j in range(chart.rank)
        if not phi[i][j].is_zero
    ]
    right_cache: dict = {}

    def right(alpha, i):
        key = (alpha, i)
        op = right_cache.get(key)
        if op is None:
            op = _right_multiply_basis(chart, cap, alpha, i)
            right_cache[key] = op
        return op

    for gamma in all_multi_indices(chart.rank, min(cap, lost - 1)):
        acc = chart.zero_poly()
        for alpha in _splittings(gamma):
            beta = tuple(g - a for g, a in zip(gamma, alpha))
            for i, j, coeff in pairs:
                v1 = l1.eval_op(right(alpha, i))
                if v1.is_zero:
                    continue
                v2 = l2.eval_op(right(beta, j))
                if v2.is_zero:
                    continue
                acc = acc + coeff * v1 * v2
        if not acc.is_zero:
            values[gamma] = acc
    return EJet(chart, cap, values, lost)


def _splittings(gamma):
    """All alpha with 0 <= alpha <= gamma componentwise."""
    ranges = [range(g + 1) for g in gamma]

    def rec(idx):
        if idx == len(ranges):
            yield ()
            return
        for head in ranges[idx]:
            for rest in rec(idx + 1):
                yield (head,) + rest

    return rec(0)
