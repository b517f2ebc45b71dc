"""Exact feasibility of ``A x = b, x >= 0`` over the rationals.

Phase I of the simplex method on a dense Fraction tableau, with Bland's rule
so that degenerate systems (common for transport problems) cannot cycle.  An
infeasible system comes back with a Farkas certificate ``y`` satisfying
``A^T y >= 0`` and ``b . y < 0``, read off the final reduced costs of the
artificial columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InvariantError
from .prob import ZERO, ONE, to_fraction


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    solution: tuple | None = None
    certificate: tuple | None = None


def _check_solution(A, b, x) -> bool:
    if any(v < 0 for v in x):
        return False
    return all(sum(a * v for a, v in zip(row, x) if a) == rhs for row, rhs in zip(A, b))


def _check_certificate(A, b, y) -> bool:
    n = len(A[0]) if A else 0
    for j in range(n):
        if sum(A[r][j] * y[r] for r in range(len(A)) if A[r][j] and y[r]) < 0:
            return False
    return sum(bi * yi for bi, yi in zip(b, y)) < 0


def solve_feasibility(A: Sequence[Sequence], b: Sequence) -> FeasibilityResult:
    """Decide whether ``A x = b`` has a nonnegative solution, exactly."""
    A = [[to_fraction(v) for v in row] for row in A]
    b = [to_fraction(v) for v in b]
    m = len(A)
    if len(b) != m:
        raise ValueError("A and b have different numbers of rows")
    n = len(A[0]) if m else 0
    if any(len(row) != n for row in A):
        raise ValueError("ragged constraint matrix")
    if m == 0:
        return FeasibilityResult(True, tuple([ZERO] * n))

    signs = [ONE if v >= 0 else -ONE for v in b]
    width = n + m
    tab = []
    for r in range(m):
        s = signs[r]
        line = [s * v for v in A[r]] + [ZERO] * m + [s * b[r]]
        line[n + r] = ONE
        tab.append(line)
    basis = [n + r for r in range(m)]
    # reduced costs of the phase-one objective (sum of artificials) plus its value
    cost = [ZERO] * (width + 1)
    for j in range(n):
        cost[j] = -sum(tab[r][j] for r in range(m))
    cost[width] = -sum(tab[r][width] for r in range(m))

    while True:
        enter = next((j for j in range(n) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for r in range(m):
            a = tab[r][enter]
            if a > 0:
                ratio = tab[r][width] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        if leave is None:
            # cannot happen: the phase-one objective is bounded below by zero
            raise InvariantError("unbounded phase-one problem")
        _pivot(tab, cost, leave, enter)
        basis[leave] = enter

    if cost[width] == 0:
        x = [ZERO] * n
        for r, j in enumerate(basis):
            if j < n:
                x[j] = tab[r][width]
        if not _check_solution(A, b, x):
            raise InvariantError("simplex produced an invalid solution")
        return FeasibilityResult(True, tuple(x))

    # artificial column r has unit cost, so its reduced cost is 1 - u_r
    u = [ONE - cost[n + r] for r in range(m)]
    y = tuple(-signs[r] * u[r] for r in range(m))
    if not _check_certificate(A, b, y):
        raise InvariantError("simplex produced an invalid infeasibility certificate")
    return FeasibilityResult(False, certificate=y)


def _pivot(tab, cost, row: int, col: int):
    line = tab[row]
    p = line[col]
    if p != 1:
        tab[row] = line = [v / p for v in line]
    nz = [(j, v) for j, v in enumerate(line) if v]
    for r, other in enumerate(tab):
        if r != row:
            f = other[col]
            if f:
                for j, v in nz:
                    other[j] -= f * v
    f = cost[col]
    if f:
        for j, v in nz:
            cost[j] -= f * v


__all__ = ["FeasibilityResult", "solve_feasibility"]
