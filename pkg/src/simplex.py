"""
Dense tableau simplex with Bland's rule, in float or exact rational arithmetic.
"""
import logging
from collections import namedtuple
from fractions import Fraction

import numpy as np

from src.graphs import CapExceededError, PreconditionError

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
MAX_PIVOTS = 100000

SimplexResult = namedtuple("SimplexResult", ["status", "objective", "values", "duals", "pivots"])


class DenseSimplex:
    """
    Maximises c.y subject to A y <= b and y >= 0. Requires b >= 0, so the
    all-slack basis is feasible and no phase 1 is needed. `duals` are the
    optimal multipliers of the rows, read off the slack columns.
    """
    def __init__(self, A, b, c, exact=False, tol=PIVOT_TOL, max_pivots=MAX_PIVOTS):
        self.m, self.n = len(b), len(c)
        self.exact = exact
        self.tol = 0 if exact else tol
        self.max_pivots = max_pivots
        if exact:
            A = np.array([[Fraction(v) for v in row] for row in A], dtype=object).reshape(self.m, self.n)
            b = np.array([Fraction(v) for v in b], dtype=object)
            c = np.array([Fraction(v) for v in c], dtype=object)
            zero, one, dtype = Fraction(0), Fraction(1), object
        else:
            A = np.asarray(A, dtype=float).reshape(self.m, self.n)
            b = np.asarray(b, dtype=float)
            c = np.asarray(c, dtype=float)
            zero, one, dtype = 0.0, 1.0, float
        if any(v < 0 for v in b):
            raise PreconditionError("right-hand side must be nonnegative")
        table = np.full((self.m + 1, self.n + self.m + 1), zero, dtype=dtype)
        table[:self.m, :self.n] = A
        for i in range(self.m):
            table[i, self.n + i] = one
        table[:self.m, -1] = b
        table[self.m, :self.n] = -c
        self.table = table
        self.basis = [self.n + i for i in range(self.m)]

    def _pivot(self, row, col):
        table = self.table
        table[row] = table[row] / table[row, col]
        factors = table[:, col].copy()
        factors[row] = 0
        table -= np.outer(factors, table[row])
        self.basis[row] = col

    def solve(self):
        pivots = 0
        width = self.n + self.m
        while True:
            reduced = self.table[self.m]
            enter = next((j for j in range(width) if reduced[j] < -self.tol), None)
            if enter is None:
                break
            best = None
            for i in range(self.m):
                a = self.table[i, enter]
                if a > self.tol:
                    ratio = self.table[i, -1] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and self.basis[i] < self.basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                logger.debug("simplex unbounded after %d pivots", pivots)
                return SimplexResult("unbounded", None, None, None, pivots)
            self._pivot(best[1], enter)
            pivots += 1
            if pivots > self.max_pivots:
                raise CapExceededError(f"simplex exceeded {self.max_pivots} pivots")
        values = [Fraction(0) if self.exact else 0.0] * self.n
        for i, var in enumerate(self.basis):
            if var < self.n:
                values[var] = self.table[i, -1]
        duals = [self.table[self.m, self.n + i] for i in range(self.m)]
        if not self.exact:
            values = [float(v) for v in values]
            duals = [max(float(v), 0.0) for v in duals]
        objective = self.table[self.m, -1] if self.exact else float(self.table[self.m, -1])
        return SimplexResult("optimal", objective, values, duals, pivots)
