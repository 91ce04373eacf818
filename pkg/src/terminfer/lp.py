"""Exact two-phase simplex over the rationals (Bland's rule).

Only what the size domain needs: all variables are non-negative, rows are
``<=`` or ``=``, and the objective is maximised.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

INFEASIBLE = None
UNBOUNDED = float("inf")


def _pivot(tab: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    row = tab[r]
    p = row[c]
    if p != 1:
        inv = 1 / p
        row[:] = [x * inv for x in row]
    for i, other in enumerate(tab):
        if i != r:
            f = other[c]
            if f:
                other[:] = [a - f * b for a, b in zip(other, row)]
    f = obj[c]
    if f:
        obj[:] = [a - f * b for a, b in zip(obj, row)]


def _run(tab, obj, basis, allowed) -> bool:
    """Optimise in place.  Returns False when unbounded."""
    width = len(obj) - 1
    while True:
        enter = next((j for j in range(width) if allowed[j] and obj[j] < 0), None)
        if enter is None:
            return True
        best = None
        for i, row in enumerate(tab):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False
        _pivot(tab, obj, best[1], enter)
        basis[best[1]] = enter


def maximize(c: Sequence, rows: Sequence[tuple[Sequence, str, object]]):
    """Maximise ``c.x`` subject to ``rows`` and ``x >= 0``.

    Each row is ``(coeffs, kind, rhs)`` with kind ``"<="`` or ``"="``.
    Returns the optimum as a Fraction, ``INFEASIBLE`` (None) or ``UNBOUNDED``.
    """
    n = len(c)
    norm_rows = []
    for coeffs, kind, rhs in rows:
        coeffs = [Fraction(a) for a in coeffs]
        rhs = Fraction(rhs)
        if rhs < 0:
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            kind = {"<=": ">=", "=": "="}[kind]
        norm_rows.append((coeffs, kind, rhs))
    m = len(norm_rows)
    n_slack = sum(1 for _, k, _ in norm_rows if k != "=")
    n_art = sum(1 for _, k, _ in norm_rows if k != "<=")
    width = n + n_slack + n_art
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    s_col, a_col = n, n + n_slack
    art_cols = []
    for coeffs, kind, rhs in norm_rows:
        row = coeffs + [Fraction(0)] * (n_slack + n_art) + [rhs]
        if kind == "<=":
            row[s_col] = Fraction(1)
            basis.append(s_col)
            s_col += 1
        else:
            if kind == ">=":
                row[s_col] = Fraction(-1)
                s_col += 1
            row[a_col] = Fraction(1)
            basis.append(a_col)
            art_cols.append(a_col)
            a_col += 1
        tab.append(row)
    is_art = [False] * width
    for j in art_cols:
        is_art[j] = True

    if art_cols:
        # phase 1: maximise -(sum of artificials)
        obj = [Fraction(0)] * (width + 1)
        for j in art_cols:
            obj[j] = Fraction(1)
        for i in range(m):
            if is_art[basis[i]]:
                obj[:] = [a - b for a, b in zip(obj, tab[i])]
        _run(tab, obj, basis, [True] * width)
        if obj[-1] < 0:
            return INFEASIBLE
        # drive zero-valued artificials out of the basis
        for i in reversed(range(len(tab))):
            if is_art[basis[i]]:
                col = next((j for j in range(width) if not is_art[j] and tab[i][j] != 0), None)
                if col is None:
                    del tab[i]
                    del basis[i]
                else:
                    _pivot(tab, [Fraction(0)] * (width + 1), i, col)
                    basis[i] = col

    obj = [Fraction(0)] * (width + 1)
    for j, cj in enumerate(c):
        obj[j] = -Fraction(cj)
    for i, b in enumerate(basis):
        f = obj[b]
        if f:
            obj[:] = [a - f * x for a, x in zip(obj, tab[i])]
    allowed = [not a for a in is_art]
    if not _run(tab, obj, basis, allowed):
        return UNBOUNDED
    return obj[-1]
