"""Exhaustive search for the numerical solutions of the index-2 scenario.

The search runs over the flop drop ``e``, lists of flips, the class
coefficients ``(z, u)`` and the contraction type of ``f'``.  ``(-K_X)^3`` is
never enumerated: every case has one equation that is affine in it, so it is
solved exactly and the remaining equations are checked.

Pruning uses the integrality claims and a non-negative "budget" identity per
case.  :mod:`qfano.oracle` repeats the search without either and must agree.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Sequence

from qfano.contractions import (
    BASE_F20,
    BASE_P2,
    CASE_C,
    CASE_CREPANT,
    CASE_D,
    CASE_E1,
    CASE_POINT,
    CREPANT_U,
    CaseOutcome,
    ClassCoefficients,
    PointContractionData,
    catalog_by_degree,
    catalog_entry,
    claim_violations,
    eval_case_C,
    eval_case_crepant,
    eval_case_D,
    eval_case_E1,
    eval_case_point,
    load_point_contraction_table,
    point_data,
)
from qfano.core import BirationalRun, FlipDatum, NumericalProfile, Q, q_str, run_profile, triple
from qfano.riemann_roch import MAX_AXIAL_WEIGHT, aw_bound_ok, h0_antik

TAG_E1 = "E1"
TAG_E1_ZU1 = "E1-zu1"
TAG_C_P2 = "C-P2"
TAG_C_F20 = "C-F20"
TAG_D = "D"
TAG_CREPANT = "Crepant"

POINT_TAGS = tuple(row.kind for row in load_point_contraction_table())

#: canonical order of case tags; merged point tags sort with their first member
CASE_ORDER = (TAG_E1, TAG_E1_ZU1) + POINT_TAGS + ("E5/E11", TAG_C_P2, TAG_C_F20, TAG_D, TAG_CREPANT)

#: case families searched independently; point types are keyed by their tag
SEARCH_FAMILIES = ("E1",) + tuple(f"point:{t}" for t in POINT_TAGS) + (TAG_C_P2, TAG_C_F20, TAG_D, TAG_CREPANT)

C_RATIOS = (Q(1), Q(2))
D_RATIOS = (Q(1), Q(3, 2), Q(2), Q(3))


@dataclass(frozen=True)
class Bounds:
    z_max: int = 8
    u_max: int = 10
    k_max: int = 8
    e_max: int = 32
    n_max: int = 14
    max_flips: int = 4
    d_step: Fraction = Q(1, 2)
    a_max: int = 8

    def __post_init__(self) -> None:
        object.__setattr__(self, "d_step", Q(self.d_step))
        for name in ("z_max", "u_max", "k_max", "max_flips", "a_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"bound {name} must be positive")
        # zero caps on e and n are allowed: they restrict to runs without flop / flips
        if self.e_max < 0 or self.n_max < 0:
            raise ValueError("e_max and n_max must be non-negative")
        if self.d_step <= 0:
            raise ValueError("d_step must be positive")


@dataclass(frozen=True)
class Scenario:
    """Blow-up data of the index-2 point plus search bounds.

    ``alpha = 1`` is forced by ``(-K_Y)^3 = (-K_X)^3 - 1/2`` together with
    ``-K_Y = f^*(-K_X) - E/2``.
    """

    r: int = 2
    q: int = 1
    alpha: Fraction = Q(1)
    cartier_index_s: int = 1
    h_min: int = 4
    bounds: Bounds = field(default_factory=Bounds)
    families: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", Q(self.alpha))
        if self.r <= 0 or self.q <= 0 or self.cartier_index_s <= 0:
            raise ValueError("r, q and s must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.families is not None:
            unknown = set(self.families) - set(SEARCH_FAMILIES)
            if unknown:
                raise ValueError(f"unknown case families {sorted(unknown)}")

    def searches(self, family: str) -> bool:
        return self.families is None or family in self.families


@dataclass(frozen=True)
class SolutionRow:
    case: str
    h: int
    kx3: Fraction
    N: int
    e: int
    n: int
    z: Fraction
    u: Fraction
    derived: CaseOutcome
    x_prime: str
    flags: tuple[str, ...] = ()
    flips: tuple[FlipDatum, ...] = ()

    def ky3_prime(self, sc: Scenario) -> Fraction:
        """(-K_{Y'})^3: the blow-up lowers (-K)^3 by alpha/r and each flip by its d."""
        return self.kx3 - sc.alpha / sc.r - sum((f.d for f in self.flips), Q(0))

    def sort_key(self) -> tuple:
        return (
            CASE_ORDER.index(self.case) if self.case in CASE_ORDER else len(CASE_ORDER),
            self.case,
            self.h,
            self.kx3,
            self.N,
            self.e,
            self.n,
            self.z,
            self.u,
            self.x_prime,
            tuple((f.a, f.d, f.aw) for f in self.flips),
        )


def canonical_sort(rows: Iterable[SolutionRow]) -> list[SolutionRow]:
    return sorted(rows, key=SolutionRow.sort_key)


# --- shared candidate validation ---------------------------------------------


@dataclass(frozen=True)
class Candidate:
    family: str
    run: BirationalRun
    cc: ClassCoefficients


def family_case(family: str) -> str:
    if family == "E1":
        return CASE_E1
    if family.startswith("point:"):
        return CASE_POINT
    if family in (TAG_C_P2, TAG_C_F20):
        return CASE_C
    if family == TAG_D:
        return CASE_D
    if family == TAG_CREPANT:
        return CASE_CREPANT
    raise ValueError(family)


def family_data(family: str) -> Optional[PointContractionData]:
    return point_data(family.split(":", 1)[1]) if family.startswith("point:") else None


def family_base(family: str) -> Optional[str]:
    return {TAG_C_P2: BASE_P2, TAG_C_F20: BASE_F20}.get(family)


def domain_violations(sc: Scenario, run: BirationalRun) -> list[str]:
    """Scenario facts that hold for every run, independent of f'."""
    bad = []
    if run.flop_e < 0 or (run.flop_e * sc.cartier_index_s).denominator != 1:
        bad.append("flop drop e in (1/s)Z>=0")
    for f in run.flips:
        if f.a.denominator != 1 or f.a < 2 or int(f.a) % 2:
            bad.append("a_i is an even integer (E_i Cartier)")
            break
    if any(not f.is_index2 for f in run.flips):
        bad.append("d_i = aw_i/2")
    return bad


def evaluate(sc: Scenario, family: str, run: BirationalRun, cc: ClassCoefficients) -> tuple[CaseOutcome, NumericalProfile]:
    p = run_profile(run)
    case = family_case(family)
    if case == CASE_E1:
        out = eval_case_E1(p, cc)
    elif case == CASE_POINT:
        out = eval_case_point(p, cc, family_data(family))
    elif case == CASE_C:
        out = eval_case_C(p, cc, family_base(family))
    elif case == CASE_D:
        # the Gorenstein-fiber degree-7 exclusion depends on N and is applied as a rule
        out = eval_case_D(p, cc, fiber_gorenstein=False)
    else:
        out = eval_case_crepant(p, cc)
    if p.d3 <= 0:
        out = out.with_problem("(-K_Y')^3 must be positive")
    return out, p


def candidate_problems(sc: Scenario, family: str, run: BirationalRun, cc: ClassCoefficients) -> tuple[CaseOutcome, list[str]]:
    out, _ = evaluate(sc, family, run, cc)
    problems = list(out.problems) + [name for name, v in out.residuals if v != 0]
    problems += domain_violations(sc, run)
    problems += claim_violations(
        family_case(family), run, cc, q=sc.q, data=family_data(family), base=family_base(family)
    )
    if run.kx3 <= 0:
        problems.append("(-K_X)^3 must be positive")
    return out, problems


def _x_prime_options(family: str, out: CaseOutcome, p: NumericalProfile) -> list[str]:
    case = family_case(family)
    if case in (CASE_E1, CASE_POINT):
        names = [c.name for c in catalog_by_degree(out.kx_prime_3)]
        if names:
            return names
        idx = family_data(family).target_index if case == CASE_POINT else None
        suffix = f", I={idx}" if idx is not None else ""
        return [f"(-K)^3={q_str(out.kx_prime_3)}{suffix}"]
    if case == CASE_C:
        return ["P^2" if family == TAG_C_P2 else "F_{2,0}"]
    if case == CASE_D:
        return ["P^1"]
    return [f"(-K)^3={q_str(p.d3)}, I=1"]


def complete_rows(sc: Scenario, family: str, run: BirationalRun, cc: ClassCoefficients) -> list[SolutionRow]:
    """All unfiltered rows for a candidate: one per admissible (N, X') choice.

    Returns nothing unless every equation, validity check and claim holds.
    """
    out, problems = candidate_problems(sc, family, run, cc)
    if problems:
        return []
    p = run_profile(run)
    case = family_case(family)
    n = run.n
    if case == CASE_E1:
        tag = TAG_E1_ZU1 if cc.z == cc.u == 1 else TAG_E1
        k = int((cc.z + 1) / cc.u)
        cc = replace(cc, k=k)
    elif case == CASE_POINT:
        tag = family.split(":", 1)[1]
    else:
        tag = family
    rows = []
    for N in range(n + 1, MAX_AXIAL_WEIGHT + 1):
        if not aw_bound_ok(N):
            continue
        h = h0_antik(run.kx3, N)
        if h.denominator != 1 or h < sc.h_min:
            continue
        for x_prime in _x_prime_options(family, out, p):
            rows.append(
                SolutionRow(
                    case=tag,
                    h=int(h),
                    kx3=run.kx3,
                    N=N,
                    e=int(run.flop_e),
                    n=n,
                    z=cc.z,
                    u=cc.u,
                    derived=out,
                    x_prime=x_prime,
                    flips=run.flips,
                )
            )
    return rows


def solve_kx3(residual: Callable[[Fraction], Fraction]) -> Optional[Fraction]:
    """Root of a residual that is affine in (-K_X)^3, or None if it is constant."""
    r0 = residual(Q(0))
    slope = residual(Q(1)) - r0
    if slope == 0:
        return None
    return -r0 / slope


def primary_residual(family: str, cc: ClassCoefficients) -> Callable[[NumericalProfile], Fraction]:
    """The one equation per case used to solve for (-K_X)^3."""
    K = (Q(1), Q(0))
    v = cc.vector
    case = family_case(family)
    if case == CASE_E1:
        plus = (1 + v[0], v[1])
        return lambda p: triple(p, plus, plus, v)
    if case == CASE_POINT:
        target = family_data(family).k2_ep
        return lambda p: triple(p, K, K, v) - target
    if case == CASE_C:
        return lambda p: triple(p, v, v, v)
    if case == CASE_D:
        return lambda p: triple(p, K, v, v)
    return lambda p: cc.z * p.d3 - cc.u * p.d2e


def solve_candidate(sc: Scenario, family: str, e: int, flips: tuple[FlipDatum, ...], cc: ClassCoefficients) -> Optional[BirationalRun]:
    f = primary_residual(family, cc)
    kx3 = solve_kx3(lambda x: f(run_profile(BirationalRun(x, sc.r, sc.alpha, Q(e), flips))))
    if kx3 is None or kx3 <= 0:
        return None
    return BirationalRun(kx3, sc.r, sc.alpha, Q(e), flips)


# --- pruned search -----------------------------------------------------------


def z_values(sc: Scenario) -> list[Fraction]:
    """z in N/q up to z_max."""
    return [Q(j, sc.q) for j in range(1, sc.bounds.z_max * sc.q + 1)]


def _flip_lists(
    bounds: Bounds,
    weight: Callable[[int], Fraction],
    budget: Fraction,
    strict: bool,
    a_ok: Callable[[int], bool],
) -> list[tuple[tuple[FlipDatum, ...], Fraction]]:
    """Strictly decreasing even flip ratios whose weighted cost fits the budget.

    Returns ``(flips, cost)`` pairs; every weight is non-negative, so a prefix
    over budget can be abandoned.
    """
    out: list[tuple[tuple[FlipDatum, ...], Fraction]] = []

    def fits(cost: Fraction) -> bool:
        return cost < budget if strict else cost <= budget

    def rec(prefix: list[FlipDatum], a_hi: int, spent: Fraction, n: int) -> None:
        out.append((tuple(prefix), spent))
        if len(prefix) == bounds.max_flips:
            return
        for a in range(2, a_hi + 1, 2):
            if not a_ok(a):
                continue
            w = weight(a)
            for aw in range(1, bounds.n_max - n + 1):
                d = aw * bounds.d_step
                cost = spent + w * d
                if not fits(cost):
                    break
                prefix.append(FlipDatum(Q(a), d, aw))
                rec(prefix, a - 2, cost, n + aw)
                prefix.pop()

    rec([], bounds.a_max, Q(0), 0)
    return out


@dataclass(frozen=True)
class _Branch:
    """One (family, z, u) branch of the pruned search with its budget."""

    family: str
    cc: ClassCoefficients
    budget: Fraction
    strict: bool
    e_weight: Fraction
    flips: tuple[tuple[tuple[FlipDatum, ...], Fraction], ...]


def _claims_ok_for_u(sc: Scenario, z: Fraction, u: Fraction) -> bool:
    return 0 < u <= sc.bounds.u_max and z <= u and (z + sc.r * u).denominator == 1


@lru_cache(maxsize=None)
def _branches(sc: Scenario, family: str) -> tuple[_Branch, ...]:
    b = sc.bounds
    r, al = sc.r, sc.alpha
    out: list[_Branch] = []

    def add(cc, budget, strict, e_weight, weight, a_ok):
        lists = _flip_lists(b, weight, budget, strict, a_ok)
        out.append(_Branch(family, cc, budget, strict, e_weight, tuple(lists)))

    case = family_case(family)
    for z in z_values(sc):
        if case == CASE_E1:
            for k in range(1, b.k_max + 1):
                u = (z + 1) / k
                if not _claims_ok_for_u(sc, z, u):
                    continue
                # e + sum d a (a-k)^2 = (r+k)^2 alpha - z/u^3 (-K_X')^3 < (r+k)^2 alpha
                add(ClassCoefficients(z, u, k=k), (r + k) ** 2 * al, True, Q(1),
                    lambda a, k=k: Q(a * (a - k) ** 2), lambda a, k=k: a > k)
        elif case == CASE_POINT:
            data = family_data(family)
            for k in range(1, b.k_max + 1):
                u = (z * data.disc_num + data.target_index) / k
                if not _claims_ok_for_u(sc, z, u):
                    continue
                budget = al * (z + u * r) ** 2 + Q(k, data.target_index) * data.ep3
                add(ClassCoefficients(z, u, k=k), budget, False, u * u,
                    lambda a, u=u, z=z: a * (a * u - z) ** 2, lambda a, k=k, d=data.disc_num: k < d * a)
        elif case in (CASE_C, CASE_D):
            ratios = C_RATIOS if case == CASE_C else D_RATIOS
            for m in ratios:
                u = m * z
                if not _claims_ok_for_u(sc, z, u):
                    continue
                if case == CASE_C:
                    add(ClassCoefficients(z, u, ratio_m=m), m * al * (m * r + 1) ** 2, True, m**3,
                        lambda a, m=m: m * a * (m * a - 1) ** 2, lambda a, m=m: m * a > 1)
                else:
                    add(ClassCoefficients(z, u, ratio_m=m), (m * r + 1) ** 2 * al, False, m**2,
                        lambda a, m=m: a * (m * a - 1) ** 2, lambda a, m=m: m * a > 1)
        else:
            for u in sorted(CREPANT_U):
                if _claims_ok_for_u(sc, z, u):
                    out.append(_Branch(family, ClassCoefficients(z, u), Q(0), False, Q(0), (((), Q(0)),)))
    return tuple(out)


def run_unit(sc: Scenario, family: str, e: int) -> list[SolutionRow]:
    """Unfiltered rows of one independent work unit (family, e)."""
    rows: list[SolutionRow] = []
    if family == TAG_CREPANT and e != 0:
        return rows
    for br in _branches(sc, family):
        e_cost = br.e_weight * e
        for flips, cost in br.flips:
            total = cost + e_cost
            if (total >= br.budget) if br.strict else (total > br.budget):
                continue
            run = solve_candidate(sc, family, e, flips, br.cc)
            if run is None:
                continue
            rows.extend(complete_rows(sc, family, run, br.cc))
    return rows


def work_units(sc: Scenario) -> list[tuple[str, int]]:
    return [(fam, e) for fam in SEARCH_FAMILIES if sc.searches(fam) for e in range(sc.bounds.e_max + 1)]


def _run_unit_star(args: tuple[Scenario, str, int]) -> list[SolutionRow]:
    return run_unit(*args)


def raw_candidates(sc: Scenario, workers: Optional[int] = None) -> list[SolutionRow]:
    units = [(sc, fam, e) for fam, e in work_units(sc)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_unit_star, units, chunksize=4))
    else:
        chunks = [_run_unit_star(u) for u in units]
    return [row for chunk in chunks for row in chunk]


# --- declared exclusion rules -----------------------------------------------


@dataclass(frozen=True)
class Rule:
    """A named exclusion: rows where ``applies`` holds are kept only if ``keep`` holds."""

    name: str
    stage: str
    applies: Callable[[SolutionRow], bool]
    keep: Callable[[SolutionRow], bool]


@dataclass(frozen=True)
class Removal:
    row: SolutionRow
    rule: str


def _catalog_or_none(name: str):
    try:
        return catalog_entry(name)
    except KeyError:
        return None


def _fano_index(row: SolutionRow) -> Optional[Fraction]:
    c = _catalog_or_none(row.x_prime)
    return c.fano_index if c else None


def _point_kind(row: SolutionRow) -> Optional[PointContractionData]:
    if row.case in POINT_TAGS:
        return point_data(row.case)
    return None


def _is_e1(row: SolutionRow) -> bool:
    return row.case in (TAG_E1, TAG_E1_ZU1)


def _theorem_rules(sc: Scenario) -> list[Rule]:
    return [
        Rule("E1: X' is a catalogued Fano threefold", "theorem", _is_e1, lambda r: _catalog_or_none(r.x_prime) is not None),
        Rule(
            "E1: f'(E~) is Cartier, so F(X')*z/u is an integer",
            "theorem",
            lambda r: _is_e1(r) and _fano_index(r) is not None,
            lambda r: (_fano_index(r) * r.z / r.u).denominator == 1,
        ),
        Rule(
            "E1, u=z+1: N = n + 1 + aw(X')",
            "theorem",
            lambda r: r.case == TAG_E1 and _catalog_or_none(r.x_prime) is not None,
            lambda r: r.N == r.n + 1 + catalog_entry(r.x_prime).aw,
        ),
        Rule(
            "E1, u=z+1, z=1: F(X')=4 would make F(X) an integer",
            "theorem",
            lambda r: r.case == TAG_E1 and r.z == 1,
            lambda r: _fano_index(r) != 4,
        ),
        Rule("E1, z=u=1: h = 4", "theorem", lambda r: r.case == TAG_E1_ZU1, lambda r: r.h == 4),
        Rule(
            "E1, z=u=1: X' is Gorenstein with Fano index 1",
            "theorem",
            lambda r: r.case == TAG_E1_ZU1,
            lambda r: (c := _catalog_or_none(r.x_prime)) is not None and c.gorenstein and c.fano_index == 1,
        ),
        Rule(
            "point: the index of f'(E') divides I(Y)",
            "theorem",
            lambda r: _point_kind(r) is not None,
            lambda r: sc.r % _point_kind(r).target_index == 0,
        ),
        Rule(
            "point, r'=1: X' is a catalogued Gorenstein Fano of index 1",
            "theorem",
            lambda r: (d := _point_kind(r)) is not None and d.target_index == 1,
            lambda r: (c := _catalog_or_none(r.x_prime)) is not None and c.gorenstein and c.fano_index == 1,
        ),
        Rule("conic over P^2: Y' is Gorenstein, so N - n = 1", "theorem",
             lambda r: r.case == TAG_C_P2, lambda r: r.N - r.n == 1),
        Rule("conic over F_{2,0}: aw(Y') <= 2, so N - n <= 3", "theorem",
             lambda r: r.case == TAG_C_F20, lambda r: r.N - r.n <= 3),
        Rule("conic over F_{2,0}: Y' is not Gorenstein, so N - n != 1", "theorem",
             lambda r: r.case == TAG_C_F20, lambda r: r.N - r.n != 1),
        Rule("fibration, Y' Gorenstein: L primitive forces z = 1", "theorem",
             lambda r: r.case == TAG_D and r.N - r.n == 1, lambda r: r.z == 1),
        Rule("fibration, N - n = 5: Riemann-Roch forces z = 2", "theorem",
             lambda r: r.case == TAG_D and r.N - r.n == 5, lambda r: r.z == 2),
        Rule("fibration, Y' Gorenstein: no del Pezzo fiber of degree 7", "theorem",
             lambda r: r.case == TAG_D and r.N - r.n == 1, lambda r: r.derived.deg_F != 7),
        Rule("fibration, Y' Gorenstein: quadric bundle needs 8 | (-K_Y')^3", "theorem",
             lambda r: r.case == TAG_D and r.N - r.n == 1 and r.derived.deg_F == 8,
             lambda r: (r.ky3_prime(sc) / 8).denominator == 1),
        Rule("fibration, Y' Gorenstein: P^2-bundle needs (-K_Y')^3 = 54", "theorem",
             lambda r: r.case == TAG_D and r.N - r.n == 1 and r.derived.deg_F == 9,
             lambda r: r.ky3_prime(sc) == 54),
    ]


MAIN_RULES = [
    Rule("E1, z=u=1: N = 7 and N = 8 do not occur", "main",
         lambda r: r.case == TAG_E1_ZU1, lambda r: r.N not in (7, 8)),
    Rule("conic over P^2: h = 6, N = 8 does not occur", "main",
         lambda r: r.case == TAG_C_P2, lambda r: not (r.h == 6 and r.N == 8)),
]


def declared_rules(sc: Scenario, stages: Sequence[str] = ("theorem", "main")) -> list[Rule]:
    rules = _theorem_rules(sc) + MAIN_RULES
    return [r for r in rules if r.stage in stages]


def geometric_filters(
    rows: Iterable[SolutionRow],
    sc: Optional[Scenario] = None,
    stages: Sequence[str] = ("theorem", "main"),
    audit: Optional[list[Removal]] = None,
) -> list[SolutionRow]:
    """Apply the declared exclusion rules.

    ``stages=("theorem",)`` gives the case tables; adding ``"main"`` drops
    the rows shown not to exist, which is what the by-h regrouping lists.
    Surviving rows record every rule that applied to them in ``flags``.
    """
    sc = sc or Scenario()
    rules = declared_rules(sc, stages)
    kept = []
    for row in rows:
        applied = []
        removed = None
        for rule in rules:
            if rule.applies(row):
                if not rule.keep(row):
                    removed = rule.name
                    break
                applied.append(rule.name)
        if removed is None:
            kept.append(replace(row, flags=tuple(dict.fromkeys(row.flags + tuple(applied)))))
        elif audit is not None:
            audit.append(Removal(row, removed))
    return kept


def merge_equivalent_tags(rows: Iterable[SolutionRow]) -> list[SolutionRow]:
    """Rows identical except for the point-contraction tag become one row ("E5/E11")."""
    groups: dict[tuple, list[SolutionRow]] = {}
    for row in rows:
        key = replace(row, case="", flags=()) if row.case in POINT_TAGS else row
        groups.setdefault(key, []).append(row)
    out = []
    for members in groups.values():
        if len(members) == 1:
            out.append(members[0])
            continue
        tags = sorted({m.case for m in members}, key=CASE_ORDER.index)
        flags = tuple(dict.fromkeys(f for m in members for f in m.flags))
        out.append(replace(members[0], case="/".join(tags), flags=flags))
    return out


def enumerate_with_audit(sc: Optional[Scenario] = None, workers: Optional[int] = None) -> tuple[list[SolutionRow], list[Removal]]:
    sc = sc or Scenario()
    audit: list[Removal] = []
    rows = geometric_filters(raw_candidates(sc, workers), sc, stages=("theorem",), audit=audit)
    return canonical_sort(merge_equivalent_tags(rows)), audit


def enumerate_solutions(sc: Optional[Scenario] = None, workers: Optional[int] = None) -> list[SolutionRow]:
    """Every solution row of the case tables, canonically sorted."""
    return enumerate_with_audit(sc, workers)[0]


def main_theorem_rows(rows: Iterable[SolutionRow], sc: Optional[Scenario] = None, audit: Optional[list[Removal]] = None) -> list[SolutionRow]:
    return geometric_filters(rows, sc, stages=("main",), audit=audit)


# --- regrouping --------------------------------------------------------------


@dataclass(frozen=True)
class MainEntry:
    row: SolutionRow
    existence: str = "unknown"


def regroup_by_h(
    rows: Iterable[SolutionRow],
    existence: Optional[Callable[[SolutionRow], Optional[str]]] = None,
) -> dict[int, list[MainEntry]]:
    """Group filtered rows by h; existence marks come from fixture metadata only."""
    groups: dict[int, list[MainEntry]] = {}
    for row in rows:
        mark = existence(row) if existence else None
        groups.setdefault(row.h, []).append(MainEntry(row, mark or "unknown"))
    for h in groups:
        groups[h].sort(key=lambda m: (m.row.kx3, m.row.N, CASE_ORDER.index(m.row.case), m.row.e, m.row.n))
    return dict(sorted(groups.items()))


# --- audits ------------------------------------------------------------------


def witness_k(row: SolutionRow) -> Optional[int]:
    if row.case in (TAG_E1, TAG_E1_ZU1):
        return int((row.z + 1) / row.u)
    tags = row.case.split("/")
    if tags[0] in POINT_TAGS or row.case in POINT_TAGS:
        d = point_data(tags[0])
        return int((row.z * d.disc_num + d.target_index) / row.u)
    return None


def boundary_audit(rows: Iterable[SolutionRow], bounds: Bounds) -> list[str]:
    """Describe every row that reaches a search bound; an empty list means the bounds are slack."""
    hits = []
    for row in rows:
        why = []
        if row.z >= bounds.z_max:
            why.append("z")
        if row.u >= bounds.u_max:
            why.append("u")
        k = witness_k(row)
        if k is not None and k >= bounds.k_max:
            why.append("k")
        if row.e >= bounds.e_max:
            why.append("e")
        if row.n >= bounds.n_max:
            why.append("n")
        if len(row.flips) >= bounds.max_flips:
            why.append("max_flips")
        if any(f.a >= bounds.a_max for f in row.flips):
            why.append("a")
        if why:
            hits.append(f"{row.case} h={row.h} kx3={q_str(row.kx3)} N={row.N} touches {', '.join(why)}")
    return hits


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def iter_table_rows(rows: Iterable[SolutionRow], table: str) -> Iterator[SolutionRow]:
    """Rows belonging to one case table (``table1`` ... ``table5``, ``crepant``)."""
    for row in rows:
        if table_of(row) == table:
            yield row


def table_of(row: SolutionRow) -> str:
    if row.case == TAG_E1:
        return "table1"
    if row.case == TAG_E1_ZU1:
        return "table2"
    if row.case in (TAG_C_P2, TAG_C_F20):
        return "table4"
    if row.case == TAG_D:
        return "table5"
    if row.case == TAG_CREPANT:
        return "crepant"
    return "table3"
