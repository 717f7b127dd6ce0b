"""Exact linear algebra over ℚ: Bareiss determinants, incremental rank, minimal solutions."""
from fractions import Fraction
from math import lcm
from typing import Sequence

Matrix = Sequence[Sequence[Fraction | int]]


def _integral_row(row: Sequence[Fraction | int]) -> tuple[list[int], int]:
    den = 1
    for x in row:
        if isinstance(x, Fraction):
            den = lcm(den, x.denominator)
    return [int(Fraction(x) * den) for x in row], den


def bareiss_det(matrix: Matrix) -> Fraction:
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    if any(len(row) != n for row in matrix):
        raise ValueError("determinant of a non-square matrix")
    rows: list[list[int]] = []
    scale = 1
    for row in matrix:
        ints, den = _integral_row(row)
        rows.append(ints)
        scale *= den
    sign = 1
    prev = 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if rows[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            rows[k], rows[swap] = rows[swap], rows[k]
            sign = -sign
        pivot_row = rows[k]
        pivot = pivot_row[k]
        for i in range(k + 1, n):
            row = rows[i]
            a = row[k]
            if a == 0:
                for j in range(k + 1, n):
                    if row[j]:
                        row[j] = pivot * row[j] // prev
            else:
                for j in range(k + 1, n):
                    row[j] = (pivot * row[j] - a * pivot_row[j]) // prev
            row[k] = 0
        prev = pivot
    return Fraction(sign * rows[n - 1][n - 1], scale)


class RowReducer:
    """Reduced row echelon form grown one vector at a time.

    add() keeps a vector iff it raises the rank; pivots are recorded in order.
    """

    def __init__(self, width: int):
        self.width = width
        self.rows: list[list[Fraction]] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vector: Sequence[Fraction | int]) -> list[Fraction]:
        if len(vector) != self.width:
            raise ValueError(f"vector of length {len(vector)}, expected {self.width}")
        v = [Fraction(x) for x in vector]
        for row, col in zip(self.rows, self.pivots):
            factor = v[col]
            if factor:
                for j in range(self.width):
                    if row[j]:
                        v[j] -= factor * row[j]
        return v

    def add(self, vector: Sequence[Fraction | int]) -> bool:
        v = self.reduce(vector)
        col = next((j for j, x in enumerate(v) if x), None)
        if col is None:
            return False
        inv = 1 / v[col]
        v = [x * inv for x in v]
        for row in self.rows:
            factor = row[col]
            if factor:
                for j in range(self.width):
                    if v[j]:
                        row[j] -= factor * v[j]
        self.rows.append(v)
        self.pivots.append(col)
        return True


def rank(matrix: Matrix) -> int:
    if not matrix:
        return 0
    reducer = RowReducer(len(matrix[0]))
    for row in matrix:
        reducer.add(row)
    return reducer.rank


def solve_minimal(matrix: Matrix, rhs_list: Sequence[Sequence[Fraction | int]]) -> list[list[Fraction] | None]:
    """Solve A·x = b for each b, with free unknowns set to zero.

    Pivots are taken at the earliest possible column, so the returned
    solution is supported on the first columns that can carry it. None for
    an inconsistent right-hand side.
    """
    nrows = len(matrix)
    ncols = len(matrix[0]) if nrows else 0
    nrhs = len(rhs_list)
    aug = [
        [Fraction(x) for x in matrix[i]] + [Fraction(b[i]) for b in rhs_list]
        for i in range(nrows)
    ]
    width = ncols + nrhs
    pivot_cols: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        pivot = next((i for i in range(r, nrows) if aug[i][c]), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        inv = 1 / aug[r][c]
        prow = [x * inv for x in aug[r]]
        aug[r] = prow
        for i in range(nrows):
            if i != r:
                factor = aug[i][c]
                if factor:
                    row = aug[i]
                    for j in range(c, width):
                        if prow[j]:
                            row[j] -= factor * prow[j]
        pivot_cols.append(c)
        r += 1
    solutions: list[list[Fraction] | None] = []
    for k in range(nrhs):
        col = ncols + k
        if any(aug[i][col] for i in range(r, nrows)):
            solutions.append(None)
            continue
        x = [Fraction(0)] * ncols
        for i, c in enumerate(pivot_cols):
            x[c] = aug[i][col]
        solutions.append(x)
    return solutions
