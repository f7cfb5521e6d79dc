"""Small exact linear algebra helpers over Q(i) and polynomial matrices."""

from __future__ import annotations

from .errors import StructureError
from .multipoly import MultiPoly
from .scalars import GaussianRational, ONE, ZERO


def scalar_matrix(rows):
    return tuple(tuple(GaussianRational.coerce(x) for x in row) for row in rows)


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    return tuple(
        tuple(
            sum((a[i][t] * b[t][j] for t in range(k)), ZERO) for j in range(m)
        )
        for i in range(n)
    )


def mat_vec(a, v):
    return tuple(sum((a[i][t] * v[t] for t in range(len(v))), ZERO) for i in range(len(a)))


def transpose(a):
    return tuple(tuple(a[i][j] for i in range(len(a))) for j in range(len(a[0])))


def identity(n):
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def invert_scalar_matrix(a):
    """Gauss-Jordan inverse over Q(i); raises on singular input."""
    n = len(a)
    aug = [list(row) + list(identity(n)[i]) for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise StructureError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r == col or not aug[r][col]:
                continue
            factor = aug[r][col]
            aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def determinant(a):
    n = len(a)
    mat = [list(row) for row in a]
    det = ONE
    for col in range(n):
        pivot = next((r for r in range(col, n) if mat[r][col]), None)
        if pivot is None:
            return ZERO
        if pivot != col:
            mat[col], mat[pivot] = mat[pivot], mat[col]
            det = -det
        det = det * mat[col][col]
        inv = mat[col][col].inverse()
        for r in range(col + 1, n):
            if not mat[r][col]:
                continue
            factor = mat[r][col] * inv
            mat[r] = [x - factor * y for x, y in zip(mat[r], mat[col])]
    return det


def solve_scalar_system(rows, rhs):
    """Solve A x = b over Q(i).  Returns a solution vector or None.

    rows: list of coefficient lists, rhs: list of scalars.  Consistent
    underdetermined systems return one solution (free unknowns set to 0).
    """
    m = len(rows)
    if m == 0:
        return ()
    n = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    row = 0
    for col in range(n):
        pivot = next((r for r in range(row, m) if aug[r][col]), None)
        if pivot is None:
            continue
        aug[row], aug[pivot] = aug[pivot], aug[row]
        inv = aug[row][col].inverse()
        aug[row] = [x * inv for x in aug[row]]
        for r in range(m):
            if r == row or not aug[r][col]:
                continue
            factor = aug[r][col]
            aug[r] = [x - factor * y for x, y in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    for r in range(row, m):
        if aug[r][n]:
            return None
    solution = [ZERO] * n
    for r, col in enumerate(pivots):
        solution[col] = aug[r][n]
    return tuple(solution)


# ------------------------------------------------------------------ polynomial matrices


def poly_matrix(rows, variables):
    out = []
    for row in rows:
        new_row = []
        for entry in row:
            if not isinstance(entry, MultiPoly):
                entry = MultiPoly.const(variables, entry)
            new_row.append(entry)
        out.append(tuple(new_row))
    return tuple(out)


def poly_mat_constant_part(a):
    return tuple(tuple(entry.constant_term() for entry in row) for row in a)


def poly_mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    variables = a[0][0].variables
    zero = MultiPoly.zero(variables)
    return tuple(
        tuple(
            sum((a[i][t] * b[t][j] for t in range(k)), zero) for j in range(m)
        )
        for i in range(n)
    )


def poly_mat_from_scalar(mat, variables):
    return tuple(
        tuple(MultiPoly.const(variables, entry) for entry in row) for row in mat
    )


def invert_poly_matrix(a, degree_cap: int):
    """Inverse of W0 + N with W0 constant invertible, exact mod degree > cap.

    Uses the finite geometric series in (-W0^{-1} N); N has no constant
    term so the series stops at degree_cap.
    """
    variables = a[0][0].variables
    n = len(a)
    w0 = poly_mat_constant_part(a)
    w0_inv = poly_mat_from_scalar(invert_scalar_matrix(w0), variables)
    nil = tuple(
        tuple(a[i][j] - MultiPoly.const(variables, w0[i][j]) for j in range(n))
        for i in range(n)
    )
    step = poly_mat_mul(w0_inv, nil)
    step = tuple(tuple(-e for e in row) for row in step)
    result = w0_inv
    power = w0_inv
    for _ in range(degree_cap):
        power = poly_mat_mul(step, power)
        power = tuple(
            tuple(e.truncate_degree(degree_cap) for e in row) for row in power
        )
        if all(e.is_zero for row in power for e in row):
            break
        result = tuple(
            tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(result, power)
        )
    return result
