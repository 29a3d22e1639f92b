"""Rank-2 intersection numbers and their behaviour under blow-up, flop and flip.

All classes live in the lattice spanned by the anticanonical class ``-K`` and
the exceptional divisor ``E``.  A :class:`NumericalProfile` stores the four
cubic intersection numbers of that lattice and determines every triple
product through :func:`triple`.

Scalars are :class:`fractions.Fraction`; no floating point is used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

Q = Fraction
Number = Union[int, Fraction, str]

#: a class ``x * (-K) + y * E`` written as ``(x, y)``
ClassVector = tuple[Fraction, Fraction]

ANTICANONICAL: ClassVector = (Q(1), Q(0))
EXCEPTIONAL: ClassVector = (Q(0), Q(1))


def as_q(value: Number) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to an exact Fraction.

    Floats are refused: a binary float silently turns 1/3 into a dyadic.
    """
    if isinstance(value, float):
        raise TypeError(f"refusing inexact float {value!r}; pass a Fraction or 'p/q'")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"malformed rational {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def q_str(value: Fraction) -> str:
    """Canonical ``p/q`` text with the denominator elided when it is 1."""
    value = as_q(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class NumericalProfile:
    """The cubic intersection numbers ((-K)^3, (-K)^2 E, (-K) E^2, E^3)."""

    d3: Fraction
    d2e: Fraction
    de2: Fraction
    e3: Fraction

    def __post_init__(self) -> None:
        for name in ("d3", "d2e", "de2", "e3"):
            object.__setattr__(self, name, as_q(getattr(self, name)))

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.d3, self.d2e, self.de2, self.e3)


@dataclass(frozen=True)
class FlipDatum:
    """One flip: ratio ``a = E.l / (-K.l)``, degree drop ``d`` and axial weight ``aw``."""

    a: Fraction
    d: Fraction
    aw: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", as_q(self.a))
        object.__setattr__(self, "d", as_q(self.d))
        if self.aw < 0:
            raise ValueError("axial weight must be non-negative")

    @classmethod
    def index2(cls, a: Number, aw: int) -> "FlipDatum":
        """A flip through index-2 points of total axial weight ``aw``; drops (-K)^3 by aw/2."""
        return cls(as_q(a), Q(aw, 2), aw)

    @property
    def is_index2(self) -> bool:
        return self.d == Q(self.aw, 2)


@dataclass(frozen=True)
class BirationalRun:
    """Blow-up data followed by an optional flop (``flop_e > 0``) and flips."""

    kx3: Fraction
    r: int
    alpha: Fraction
    flop_e: Fraction = Q(0)
    flips: tuple[FlipDatum, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kx3", as_q(self.kx3))
        object.__setattr__(self, "alpha", as_q(self.alpha))
        object.__setattr__(self, "flop_e", as_q(self.flop_e))
        object.__setattr__(self, "flips", tuple(self.flips))

    @property
    def n(self) -> int:
        """Total axial weight carried by the flipping curves."""
        return sum(f.aw for f in self.flips)

    @property
    def total_drop(self) -> Fraction:
        return sum((f.d for f in self.flips), Q(0))


def blowup_profile(kx3: Number, r: int, alpha: Number) -> NumericalProfile:
    """Profile of (Y, E) for ``-K_Y = f*(-K_X) - E/r`` with ``(-K_Y)^2 E = alpha``.

    Pull-backs meet ``E`` trivially, so ``E^3 = r^2 alpha`` and
    ``(-K_Y) E^2 = -r alpha``.
    """
    kx3, alpha = as_q(kx3), as_q(alpha)
    if r <= 0:
        raise ValueError(f"index r must be positive, got {r}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return NumericalProfile(kx3 - alpha / r, alpha, -r * alpha, r * r * alpha)


def apply_flop(p: NumericalProfile, e: Number) -> NumericalProfile:
    """A flop keeps the first three numbers and lowers E^3 by ``e``."""
    e = as_q(e)
    if e <= 0:
        raise ValueError(f"flop drop e must be positive, got {e}")
    return NumericalProfile(p.d3, p.d2e, p.de2, p.e3 - e)


def apply_flip(p: NumericalProfile, f: FlipDatum) -> NumericalProfile:
    a, d = f.a, f.d
    if a <= 0:
        raise ValueError(f"flip ratio a must be positive, got {a}")
    if d <= 0:
        raise ValueError(f"flip degree drop d must be positive, got {d}")
    return NumericalProfile(p.d3 - d, p.d2e - a * d, p.de2 - a * a * d, p.e3 - a**3 * d)


def check_flip_order(flips: Iterable[FlipDatum]) -> None:
    """Raise unless flip ratios strictly decrease along the run."""
    ratios = [f.a for f in flips]
    for prev, nxt in zip(ratios, ratios[1:]):
        if not nxt < prev:
            raise ValueError(f"flip ratios must strictly decrease, got {prev} then {nxt}")


def run_profile(run: BirationalRun) -> NumericalProfile:
    """Profile of (Y', E~) after the whole run."""
    if run.flop_e < 0:
        raise ValueError("flop_e must be non-negative")
    check_flip_order(run.flips)
    p = blowup_profile(run.kx3, run.r, run.alpha)
    if run.flop_e > 0:
        p = apply_flop(p, run.flop_e)
    for f in run.flips:
        p = apply_flip(p, f)
    return p


def triple(p: NumericalProfile, c1: ClassVector, c2: ClassVector, c3: ClassVector) -> Fraction:
    """Triple product of three classes ``(x, y) = x(-K) + yE`` on the profile ``p``."""
    (x1, y1), (x2, y2), (x3, y3) = c1, c2, c3
    return (
        x1 * x2 * x3 * p.d3
        + (x1 * x2 * y3 + x1 * y2 * x3 + y1 * x2 * x3) * p.d2e
        + (x1 * y2 * y3 + y1 * x2 * y3 + y1 * y2 * x3) * p.de2
        + y1 * y2 * y3 * p.e3
    )


def triple_coefficients(c1: ClassVector, c2: ClassVector, c3: ClassVector) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Coefficients of (d3, d2e, de2, e3) in :func:`triple`; the product is linear in the profile."""
    (x1, y1), (x2, y2), (x3, y3) = c1, c2, c3
    return (
        Q(x1 * x2 * x3),
        Q(x1 * x2 * y3 + x1 * y2 * x3 + y1 * x2 * x3),
        Q(x1 * y2 * y3 + y1 * x2 * y3 + y1 * y2 * x3),
        Q(y1 * y2 * y3),
    )


def cube(p: NumericalProfile, c: ClassVector) -> Fraction:
    return triple(p, c, c, c)


def cls(x: Number, y: Number) -> ClassVector:
    """Build the class ``x(-K) + yE`` from exact scalars."""
    return (as_q(x), as_q(y))
