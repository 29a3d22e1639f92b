"""Unpruned cross-check of the enumerator.

The oracle walks the whole grid: every ``z`` in N/q, every ``u`` on a lattice
twice as fine as the one the integrality claim allows, every flip list and
every flop drop.  No claim and no budget inequality is used to skip anything.
The case equations are screened in bulk with exact scaled-integer numpy
arithmetic; the few survivors go through the same final validation as the
enumerator, where the claims are finally checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

from qfano.contractions import CASE_C, CASE_D, CASE_E1, CASE_POINT, CONIC_BASES, ClassCoefficients
from qfano.core import BirationalRun, ClassVector, FlipDatum, Q, triple_coefficients
from qfano.enumerator import (
    SEARCH_FAMILIES,
    Bounds,
    Scenario,
    SolutionRow,
    canonical_sort,
    complete_rows,
    family_base,
    family_case,
    family_data,
    geometric_filters,
    merge_equivalent_tags,
    z_values,
)

K = (Q(1), Q(0))
E = (Q(0), Q(1))
_LIMIT = 2**62


def all_flip_lists(bounds: Bounds) -> list[tuple[FlipDatum, ...]]:
    """Every strictly decreasing list of even ratios with positive axial weights."""
    ratios = list(range(bounds.a_max - bounds.a_max % 2, 1, -2))
    out: list[tuple[FlipDatum, ...]] = [()]

    def compositions(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(1, total - parts + 2):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for length in range(1, bounds.max_flips + 1):
        for chosen in combinations(ratios, length):
            for total in range(length, bounds.n_max + 1):
                for aws in compositions(total, length):
                    out.append(tuple(FlipDatum(Q(a), aw * bounds.d_step, aw) for a, aw in zip(chosen, aws)))
    return out


def u_grid(sc: Scenario) -> list[Fraction]:
    step = 2 * sc.r * sc.q
    return [Q(j, step) for j in range(1, sc.bounds.u_max * step + 1)]


#: a linear form on the profile plus a constant: (t_d3, t_d2e, t_de2, t_e3, const)
Form = tuple[Fraction, Fraction, Fraction, Fraction, Fraction]


def _form(c1: ClassVector, c2: ClassVector, c3: ClassVector, const: Fraction = Q(0)) -> Form:
    return triple_coefficients(c1, c2, c3) + (Q(const),)


def _combine(*parts: tuple[Fraction, Form]) -> Form:
    return tuple(sum((w * f[i] for w, f in parts), Q(0)) for i in range(5))


D3: Form = (Q(1), Q(0), Q(0), Q(0), Q(0))
D2E: Form = (Q(0), Q(1), Q(0), Q(0), Q(0))


@dataclass(frozen=True)
class _Affine:
    """M * f(p) = A*kx3 + b + sum beta_i X_i + gamma*e, all integers.

    ``X_i = s * sum d a^i`` where ``s`` is the denominator of the flip degree step.
    """

    A: int
    b: int
    beta: tuple[int, int, int, int]
    gamma: int
    M: int


def _affine(form: Form, sc: Scenario, s: int) -> _Affine:
    t, c = form[:4], form[4]
    r, al = sc.r, sc.alpha
    const = c + t[0] * (-al / r) + t[1] * al + t[2] * (-r * al) + t[3] * r * r * al
    # d3 = kx3 - al/r - S1, d2e = al - S2, de2 = -r al - S3, e3 = r^2 al - e - S4, with S_i = X_i / s
    coeffs = [t[0], const] + [-ti / s for ti in t] + [-t[3]]
    M = math.lcm(*(x.denominator for x in coeffs))
    ints = [int(x * M) for x in coeffs]
    return _Affine(ints[0], ints[1], tuple(ints[2:6]), ints[6], M)


def _primary(family: str, z: Fraction, u: Fraction) -> Form:
    """The equation solved for (-K_X)^3, written independently of the enumerator."""
    v = (z, -u)
    case = family_case(family)
    if case == CASE_E1:
        plus = (1 + z, -u)
        return _form(plus, plus, v)
    if case == CASE_POINT:
        return _form(K, K, v, -family_data(family).k2_ep)
    if case == CASE_C:
        return _form(v, v, v)
    if case == CASE_D:
        return _form(K, v, v)
    return _combine((z, D3), (-u, D2E))


def _checks(family: str, z: Fraction, u: Fraction) -> list[tuple[str, Form]]:
    """Remaining equations and validity conditions, as (kind, form)."""
    v = (z, -u)
    case = family_case(family)
    if case == CASE_E1:
        plus = (1 + z, -u)
        minus = (1 - z, u)
        return [
            ("pos", _form(plus, plus, K)),
            ("pos", _form(plus, v, K)),
            ("even_le8", _form(minus, minus, v)),
            ("pos", D3),
        ]
    if case == CASE_POINT:
        data = family_data(family)
        ratio = data.discrepancy
        pull = (1 + ratio * z, -ratio * u)
        return [
            ("zero", _form(v, v, v, -data.ep3)),
            ("zero", _form(K, v, v, -data.k_ep2)),
            ("pos", _form(pull, pull, pull)),
            ("pos", D3),
        ]
    if case == CASE_C:
        two_l2, const = CONIC_BASES[family_base(family)]
        return [
            ("zero", _form(K, v, v, -two_l2)),
            ("nonneg_int", _combine((Q(-1), _form(K, K, v)), (Q(1), (Q(0), Q(0), Q(0), Q(0), const)))),
            ("pos", D3),
        ]
    if case == CASE_D:
        return [
            ("zero", _form(E, v, v)),
            ("range19", _form(K, K, v)),
            ("pos", D3),
        ]
    return [("pos", D3)]


class _Grid:
    """Flip sums and flop drops as broadcastable int64 arrays."""

    def __init__(self, sc: Scenario):
        b = sc.bounds
        self.flips = all_flip_lists(b)
        self.s = b.d_step.denominator
        X = np.array(
            [[int(sum((f.d * f.a**i for f in fl), Q(0)) * self.s) for i in range(4)] for fl in self.flips],
            dtype=np.int64,
        ).reshape(len(self.flips), 4)
        self.X = X
        self.e = np.arange(b.e_max + 1, dtype=np.int64)
        self.xmax = int(np.abs(X).max(initial=0))
        self.emax = b.e_max

    def full(self, aff: _Affine) -> np.ndarray:
        """Values on the whole (flip list, e) grid."""
        self._guard(aff)
        per_flip = aff.b + self.X @ np.array(aff.beta, dtype=np.int64)
        return per_flip[:, None] + aff.gamma * self.e[None, :]

    def values(self, aff: _Affine, fi: np.ndarray, ei: np.ndarray) -> np.ndarray:
        self._guard(aff)
        per_flip = aff.b + self.X @ np.array(aff.beta, dtype=np.int64)
        return per_flip[fi] + aff.gamma * self.e[ei]

    def _guard(self, aff: _Affine) -> None:
        bound = abs(aff.b) + sum(abs(x) for x in aff.beta) * self.xmax + abs(aff.gamma) * self.emax
        if bound >= _LIMIT:
            raise OverflowError("oracle grid exceeds int64 range")


def _screen(sc: Scenario, grid: _Grid, family: str, z: Fraction, u: Fraction) -> list[tuple[int, int, Fraction]]:
    prim = _affine(_primary(family, z, u), sc, grid.s)
    if prim.A == 0:
        return []
    A0 = prim.A
    B0 = grid.full(prim)
    # kx3 = -B0 / A0 > 0
    fi, ei = np.nonzero((-B0 * np.sign(A0)) > 0)
    B0 = B0[fi, ei]
    for kind, form in _checks(family, z, u):
        if fi.size == 0:
            break
        aff = _affine(form, sc, grid.s)
        Bj = grid.values(aff, fi, ei)
        if max(abs(aff.A) * int(np.abs(B0).max()), abs(A0) * int(np.abs(Bj).max())) >= _LIMIT // 2:
            raise OverflowError("oracle products exceed int64 range")
        # value = Nj / Dj with Dj > 0
        Nj = -aff.A * B0 + Bj * A0
        Dj = A0 * aff.M
        if Dj < 0:
            Nj, Dj = -Nj, -Dj
        if kind == "zero":
            keep = Nj == 0
        elif kind == "pos":
            keep = Nj > 0
        elif kind == "even_le8":
            keep = (Nj % (2 * Dj) == 0) & (Nj <= 8 * Dj)
        elif kind == "nonneg_int":
            keep = (Nj % Dj == 0) & (Nj >= 0)
        elif kind == "range19":
            keep = (Nj % Dj == 0) & (Nj >= Dj) & (Nj <= 9 * Dj)
        else:
            raise ValueError(kind)
        fi, ei, B0 = fi[keep], ei[keep], B0[keep]
    return [(int(f), int(e), Fraction(-int(b), A0)) for f, e, b in zip(fi, ei, B0)]


def screened_candidates(sc: Scenario) -> list[tuple[str, BirationalRun, Fraction, Fraction]]:
    """Every grid point that satisfies the case equations, before any claim is checked."""
    grid = _Grid(sc)
    out = []
    for family in SEARCH_FAMILIES:
        if not sc.searches(family):
            continue
        for z in z_values(sc):
            for u in u_grid(sc):
                for f, e, kx3 in _screen(sc, grid, family, z, u):
                    run = BirationalRun(kx3, sc.r, sc.alpha, Q(int(grid.e[e])), grid.flips[f])
                    out.append((family, run, z, u))
    return out


def brute_force_oracle(sc: Optional[Scenario] = None) -> list[SolutionRow]:
    sc = sc or Scenario()
    raw: list[SolutionRow] = []
    for family, run, z, u in screened_candidates(sc):
        raw.extend(complete_rows(sc, family, run, ClassCoefficients(z, u)))
    rows = geometric_filters(raw, sc, stages=("theorem",))
    return canonical_sort(merge_equivalent_tags(rows))


__all__ = ["all_flip_lists", "brute_force_oracle", "screened_candidates", "u_grid"]
