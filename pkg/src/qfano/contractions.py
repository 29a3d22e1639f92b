"""Numerical data and equations for the second contraction ``f': Y' -> X'``.

Five kinds of contraction are handled:

* ``E1``: a divisor ``E'`` contracted onto a curve ``C``;
* point types ``E2`` to ``E12``: ``E'`` contracted to a point;
* ``C``: a conic bundle over ``P^2`` or the quadric cone ``F_{2,0}``;
* ``D``: a del Pezzo fibration over ``P^1``;
* crepant divisorial contractions.

In the birational cases ``E' = z(-K) - u E~``; for fibrations the pull-back
``L`` of an ample generator is written the same way.  Every ``eval_case_*``
function works from the profile of ``(Y', E~)`` only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Optional

from qfano.core import (
    ANTICANONICAL,
    EXCEPTIONAL,
    BirationalRun,
    ClassVector,
    NumericalProfile,
    Q,
    as_q,
    run_profile,
    triple,
)

K = ANTICANONICAL
E = EXCEPTIONAL

CASE_E1 = "E1"
CASE_POINT = "point-type"
CASE_C = "C"
CASE_D = "D"
CASE_CREPANT = "Crepant"

BASE_P2 = "P2"
BASE_F20 = "F20"

#: (-K).L^2 = 2 l^2 on the base, and 12 resp. 16 = 8 + 4 l^2 in the conic-bundle relation
CONIC_BASES = {BASE_P2: (Q(2), Q(12)), BASE_F20: (Q(4), Q(16))}

CREPANT_U = frozenset({Q(1, 2), Q(1), Q(2)})


@dataclass(frozen=True)
class PointContractionData:
    kind: str
    disc_num: int
    target_index: int
    ep3: Fraction
    k_ep2: Fraction
    k2_ep: Fraction

    @property
    def discrepancy(self) -> Fraction:
        return Q(self.disc_num, self.target_index)

    def tags(self) -> tuple[str, ...]:
        return tuple(self.kind.split("/"))


@dataclass(frozen=True)
class FanoCatalogEntry:
    name: str
    kx3: Fraction
    fano_index: Fraction
    gorenstein_index: int
    aw: int

    @property
    def gorenstein(self) -> bool:
        return self.gorenstein_index == 1


@dataclass(frozen=True)
class ClassCoefficients:
    """``z`` and ``u`` of ``E'`` (or ``L``), with the integrality witness ``k`` or ratio ``m = u/z``."""

    z: Fraction
    u: Fraction
    k: Optional[int] = None
    ratio_m: Optional[Fraction] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", as_q(self.z))
        object.__setattr__(self, "u", as_q(self.u))
        if self.ratio_m is not None:
            object.__setattr__(self, "ratio_m", as_q(self.ratio_m))

    @property
    def vector(self) -> ClassVector:
        return (self.z, -self.u)

    @property
    def m(self) -> Fraction:
        return self.ratio_m if self.ratio_m is not None else self.u / self.z


@dataclass(frozen=True)
class CaseOutcome:
    kind: str
    kx_prime_3: Optional[Fraction] = None
    l_C: Optional[Fraction] = None
    genus_slack: Optional[Fraction] = None
    ke_prime_2: Optional[Fraction] = None
    two_l2: Optional[Fraction] = None
    delta_l: Optional[Fraction] = None
    deg_F: Optional[Fraction] = None
    residuals: tuple[tuple[str, Fraction], ...] = ()
    problems: tuple[str, ...] = field(default=())

    @property
    def valid(self) -> bool:
        return not self.problems and all(v == 0 for _, v in self.residuals)

    def with_problem(self, msg: str) -> "CaseOutcome":
        return replace(self, problems=self.problems + (msg,))


def _is_int(x: Fraction) -> bool:
    return x.denominator == 1


# --- embedded tables -------------------------------------------------------


def _read_json(name: str) -> dict:
    text = resources.files("qfano.data").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _point_table() -> tuple[PointContractionData, ...]:
    rows = []
    for raw in _read_json("point_contractions.json")["rows"]:
        row = PointContractionData(
            kind=raw["kind"],
            disc_num=int(raw["disc_num"]),
            target_index=int(raw["target_index"]),
            ep3=as_q(raw["ep3"]),
            k_ep2=as_q(raw["k_ep2"]),
            k2_ep=as_q(raw["k2_ep"]),
        )
        ratio = row.discrepancy
        if row.k2_ep != ratio**2 * row.ep3 or row.k_ep2 != -ratio * row.ep3:
            raise ValueError(f"inconsistent point-contraction row {row.kind}")
        rows.append(row)
    return tuple(rows)


def load_point_contraction_table() -> list[PointContractionData]:
    """The divisor-to-point types; E3 and E4 share one row tagged ``E3/E4``."""
    return list(_point_table())


def point_data(kind: str) -> PointContractionData:
    """Look up a row by tag; ``E3`` and ``E4`` both resolve to the merged row."""
    for row in _point_table():
        if kind == row.kind or kind in row.tags():
            return row
    raise KeyError(f"unknown point contraction type {kind!r}")


@lru_cache(maxsize=None)
def _catalog() -> tuple[FanoCatalogEntry, ...]:
    return tuple(
        FanoCatalogEntry(
            name=raw["name"],
            kx3=as_q(raw["kx3"]),
            fano_index=as_q(raw["fano_index"]),
            gorenstein_index=int(raw["gorenstein_index"]),
            aw=int(raw["aw"]),
        )
        for raw in _read_json("fano_catalog.json")["rows"]
    )


def load_fano_catalog() -> list[FanoCatalogEntry]:
    return list(_catalog())


def catalog_by_degree(kx3: Fraction) -> list[FanoCatalogEntry]:
    return [c for c in _catalog() if c.kx3 == kx3]


def catalog_entry(name: str) -> FanoCatalogEntry:
    for c in _catalog():
        if c.name == name:
            return c
    raise KeyError(name)


# --- case evaluation -------------------------------------------------------


def eval_case_E1(p: NumericalProfile, cc: ClassCoefficients) -> CaseOutcome:
    ep = cc.vector
    plus = (K[0] + ep[0], K[1] + ep[1])
    minus = (K[0] - ep[0], K[1] - ep[1])
    kx_prime_3 = triple(p, plus, plus, K)
    residual = triple(p, plus, plus, ep)
    l_C = triple(p, plus, ep, K)
    ke_prime_2 = triple(p, minus, minus, ep)
    slack = (8 - ke_prime_2) / 2
    out = CaseOutcome(
        CASE_E1,
        kx_prime_3=kx_prime_3,
        l_C=l_C,
        genus_slack=slack,
        ke_prime_2=ke_prime_2,
        residuals=(("(-K+E')^2.E'", residual),),
    )
    if kx_prime_3 <= 0:
        out = out.with_problem("(-K_X')^3 must be positive")
    if l_C <= 0:
        out = out.with_problem("-K_X'.C must be positive")
    if not _is_int(ke_prime_2) or ke_prime_2 % 2 != 0:
        out = out.with_problem("(-K_E')^2 must be an even integer")
    if slack < 0 or not _is_int(slack):
        out = out.with_problem("4g+m slack must be a non-negative integer")
    return out


def eval_case_point(p: NumericalProfile, cc: ClassCoefficients, data: PointContractionData) -> CaseOutcome:
    ep = cc.vector
    ratio = data.discrepancy
    pullback = (K[0] + ratio * ep[0], K[1] + ratio * ep[1])
    kx_prime_3 = triple(p, pullback, pullback, pullback)
    out = CaseOutcome(
        CASE_POINT,
        kx_prime_3=kx_prime_3,
        residuals=(
            ("E'^3", triple(p, ep, ep, ep) - data.ep3),
            ("-K.E'^2", triple(p, K, ep, ep) - data.k_ep2),
            ("(-K)^2.E'", triple(p, K, K, ep) - data.k2_ep),
        ),
    )
    if kx_prime_3 <= 0:
        out = out.with_problem("(-K_X')^3 must be positive")
    return out


def eval_case_C(p: NumericalProfile, cc: ClassCoefficients, base: str) -> CaseOutcome:
    if base not in CONIC_BASES:
        raise ValueError(f"unknown conic-bundle base {base!r}")
    two_l2_expected, const = CONIC_BASES[base]
    L = cc.vector
    two_l2 = triple(p, K, L, L)
    delta_l = const - triple(p, K, K, L)
    out = CaseOutcome(
        CASE_C,
        two_l2=two_l2,
        delta_l=delta_l,
        residuals=(("L^3", triple(p, L, L, L)), ("-K.L^2 - 2l^2", two_l2 - two_l2_expected)),
    )
    if delta_l < 0 or not _is_int(delta_l):
        out = out.with_problem("Delta.l must be a non-negative integer")
    return out


def eval_case_D(p: NumericalProfile, cc: ClassCoefficients, fiber_gorenstein: bool = True) -> CaseOutcome:
    L = cc.vector
    deg_F = triple(p, K, K, L)
    out = CaseOutcome(
        CASE_D,
        deg_F=deg_F,
        residuals=(("-K.L^2", triple(p, K, L, L)), ("E.L^2", triple(p, E, L, L))),
    )
    if not _is_int(deg_F) or not 1 <= deg_F <= 9:
        out = out.with_problem("fiber degree must be an integer in 1..9")
    elif deg_F == 7 and fiber_gorenstein:
        out = out.with_problem("a Gorenstein del Pezzo fiber cannot have degree 7")
    return out


def eval_case_crepant(p: NumericalProfile, cc: ClassCoefficients) -> CaseOutcome:
    out = CaseOutcome(
        CASE_CREPANT,
        kx_prime_3=p.d3,
        residuals=(("z(-K)^3 - u(-K)^2.E", cc.z * p.d3 - cc.u * p.d2e),),
    )
    if cc.u not in CREPANT_U:
        out = out.with_problem("u*(E.l) = 2 needs u in {1/2, 1, 2}")
    return out


# --- closed-form identities ------------------------------------------------


def check_primed_identities(
    run: BirationalRun,
    cc: ClassCoefficients,
    case: str,
    data: Optional[PointContractionData] = None,
) -> list[tuple[str, Fraction]]:
    """Closed forms in (kx3, alpha, r, e, flips, z, u, k, m) minus the profile values.

    The closed forms never touch the profile; the second term of each
    difference does.  Every entry is zero whenever the inputs are consistent.
    """
    p = run_profile(run)
    r, al, e = Q(run.r), run.alpha, run.flop_e
    ky3 = run.kx3 - al / r
    flips = run.flips
    z, u = cc.z, cc.u
    ep = cc.vector
    out: list[tuple[str, Fraction]] = []

    if case in (CASE_E1, "E1-zu1"):
        k = Q(cc.k) if cc.k is not None else (z + 1) / u
        plus = (1 + z, -u)
        X = triple(p, plus, plus, K)
        R = triple(p, plus, plus, ep)
        lC = triple(p, plus, ep, K)
        deg = u * u * (k * k * ky3 - (2 * k + r) * al - sum((f.d * (f.a - k) ** 2 for f in flips), Q(0)))
        res = (
            (u * k - 1) * k * k * ky3
            - (u * r * r + (3 * u * k - 1) * r + k * (3 * u * k - 2)) * al
            + sum((f.d * (u * (f.a - k) ** 3 + (f.a - k) ** 2) for f in flips), Q(0))
            + e * u
        )
        curve = u * (
            k * (u * k - 1) * ky3
            - (2 * u * k - 1 + u * r) * al
            - sum((f.d * (f.a - k) * (f.a * u - k * u + 1) for f in flips), Q(0))
        )
        balance = e + sum((f.d * f.a * (f.a - k) ** 2 for f in flips), Q(0))
        out += [
            ("E1 degree of X'", deg - X),
            ("E1 residual", u * u * res - R),
            ("E1 curve degree", curve - lC),
            ("E1 flop balance", balance - ((r + k) ** 2 * al - (u * k - 1) / u**3 * X + R / u**3)),
        ]
    elif case == CASE_POINT:
        A = triple(p, ep, ep, ep)
        B = triple(p, K, ep, ep)
        C = triple(p, K, K, ep)
        s1 = sum((f.d * (u * f.a - z) ** 3 for f in flips), Q(0))
        s2 = sum((f.d * (u * f.a - z) ** 2 for f in flips), Q(0))
        s3 = sum((f.d * (u * f.a - z) for f in flips), Q(0))
        out += [
            ("point E'^3", z**3 * ky3 - u * al * (u * u * r * r + 3 * z * u * r + 3 * z * z) + s1 + u**3 * e - A),
            ("point -K.E'^2", z * z * ky3 - u * al * (2 * z + u * r) - s2 - B),
            ("point (-K)^2.E'", z * ky3 - u * al + s3 - C),
        ]
        flop_side = sum((f.d * f.a * (f.a * u - z) ** 2 for f in flips), Q(0)) + u * u * e
        flip_side = al * (z + u * r) + sum((f.d * f.a * (f.a * u - z) for f in flips), Q(0))
        out += [
            ("point flop balance", flop_side - (al * (z + u * r) ** 2 + (A - z * B) / u)),
            ("point flip balance", flip_side - (z * C - B) / u),
        ]
        if data is not None:
            k = Q(cc.k) if cc.k is not None else (z * data.disc_num + data.target_index) / u
            rp, d = Q(data.target_index), Q(data.disc_num)
            out += [
                ("point flop balance (tabulated)", flop_side - (al * (z + u * r) ** 2 + k / rp * data.ep3)),
                ("point flip balance (tabulated)", flip_side - d * k / rp**2 * data.ep3),
            ]
    elif case == CASE_C:
        m = cc.m
        L = ep
        L3 = triple(p, L, L, L)
        KL2 = triple(p, K, L, L)
        K2L = triple(p, K, K, L)
        cubic = (
            ky3
            - m * al * (m * m * r * r + 3 * m * r + 3)
            + sum((f.d * (m * f.a - 1) ** 3 for f in flips), Q(0))
            + m**3 * e
        )
        quad = z * z * (ky3 - m * al * (2 + m * r) - sum((f.d * (m * f.a - 1) ** 2 for f in flips), Q(0)))
        lin = z * (ky3 - m * al + sum((f.d * (m * f.a - 1) for f in flips), Q(0)))
        bal = sum((f.d * m * f.a * (m * f.a - 1) ** 2 for f in flips), Q(0)) + m**3 * e - m * al * (m * r + 1) ** 2
        out += [
            ("conic L^3", cubic - L3 / z**3),
            ("conic -K.L^2", quad - KL2),
            ("conic (-K)^2.L", lin - K2L),
            ("conic flop balance", bal - (L3 / z**3 - KL2 / z**2)),
        ]
    elif case == CASE_D:
        m = cc.m
        L = ep
        KL2 = triple(p, K, L, L)
        EL2 = triple(p, E, L, L)
        K2L = triple(p, K, K, L)
        deg3 = run.kx3 - (al / r + m * al * (2 + m * r) + sum((f.d * (m * f.a - 1) ** 2 for f in flips), Q(0)))
        flop = (m * r + 1) ** 2 * al - sum((f.d * f.a * (m * f.a - 1) ** 2 for f in flips), Q(0)) - m * m * e
        fib = z * (m * al * (1 + m * r) + sum((f.d * m * f.a * (m * f.a - 1) for f in flips), Q(0)))
        out += [
            ("fibration -K.L^2", deg3 - KL2 / z**2),
            ("fibration E.L^2", flop - EL2 / z**2),
            ("fibration fiber degree", (fib - K2L) + KL2 / z),
        ]
    elif case == CASE_CREPANT:
        if flips:
            raise ValueError("a crepant contraction starts from Y itself; flips are not allowed")
        out.append(("crepant (-K)^2.E'", (z * ky3 - u * al) - (z * p.d3 - u * p.d2e)))
    else:
        raise ValueError(f"unknown case {case!r}")
    return out


# --- structural claims -----------------------------------------------------


def claim_violations(
    case: str,
    run: BirationalRun,
    cc: ClassCoefficients,
    q: int = 1,
    data: Optional[PointContractionData] = None,
    base: Optional[str] = None,
) -> list[str]:
    """Names of the integrality and ordering constraints that the candidate breaks."""
    z, u, r = cc.z, cc.u, run.r
    bad: list[str] = []
    if z <= 0 or not _is_int(z * q):
        bad.append("z in N/q")
    if u <= 0 or not _is_int(z + r * u):
        bad.append("u > 0 and z + r*u in N")
    if z > u:
        bad.append("z <= u")
    if case in (CASE_E1, "E1-zu1"):
        k = (z + 1) / u
        if not _is_int(k) or k <= 0:
            bad.append("z+1 = u*k with k in N")
        elif any(not k < f.a for f in run.flips):
            bad.append("k < a_i for every flip")
    elif case == CASE_POINT:
        if data is None:
            raise ValueError("point-type claims need contraction data")
        k = (z * data.disc_num + data.target_index) / u
        if not _is_int(k) or k <= 0:
            bad.append("z*d + r' = u*k with k in N")
        elif any(not k < data.disc_num * f.a for f in run.flips):
            bad.append("k < d*a_i for every flip")
    elif case in (CASE_C, CASE_D):
        m = u / z
        if any(not m * f.a > 1 for f in run.flips):
            bad.append("m*a_i > 1 for every flip")
        allowed = {Q(1), Q(2)} if case == CASE_C else {Q(1), Q(3, 2), Q(2), Q(3)}
        if m not in allowed:
            bad.append("m in {1, 2}" if case == CASE_C else "m in {1, 3/2, 2, 3}")
    elif case == CASE_CREPANT:
        if run.flop_e != 0 or run.flips:
            bad.append("crepant contraction needs Y = Y'")
    return bad


def integrality_witness(case: str, cc: ClassCoefficients, data: Optional[PointContractionData] = None) -> Optional[int]:
    """The ``k`` with z+1 = uk (E1) or zd+r' = uk (point types), if integral."""
    if case in (CASE_E1, "E1-zu1"):
        k = (cc.z + 1) / cc.u
    elif case == CASE_POINT and data is not None:
        k = (cc.z * data.disc_num + data.target_index) / cc.u
    else:
        return None
    return int(k) if _is_int(k) and k > 0 else None


__all__ = [
    "BASE_F20",
    "BASE_P2",
    "CASE_C",
    "CASE_CREPANT",
    "CASE_D",
    "CASE_E1",
    "CASE_POINT",
    "CaseOutcome",
    "ClassCoefficients",
    "FanoCatalogEntry",
    "PointContractionData",
    "catalog_by_degree",
    "catalog_entry",
    "check_primed_identities",
    "claim_violations",
    "eval_case_C",
    "eval_case_D",
    "eval_case_E1",
    "eval_case_crepant",
    "eval_case_point",
    "integrality_witness",
    "load_fano_catalog",
    "load_point_contraction_table",
    "point_data",
]
