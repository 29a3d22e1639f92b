"""Singular Riemann-Roch for threefolds whose non-Gorenstein points have index 2."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from qfano.core import Number, Q, as_q

#: largest axial weight compatible with -K.c2 > 0
MAX_AXIAL_WEIGHT = 15


@dataclass(frozen=True)
class RRInput:
    """Numerical input for chi(O(D)).

    ``d_term`` is the precomputed cubic D(D-K)(2D-K), ``d_c2`` is D.c2 and
    ``n_q`` the non-negative integer with sum of local corrections = -n_q/8.
    """

    chi_O: Fraction
    d_term: Fraction
    d_c2: Fraction
    n_q: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "chi_O", as_q(self.chi_O))
        object.__setattr__(self, "d_term", as_q(self.d_term))
        object.__setattr__(self, "d_c2", as_q(self.d_c2))
        if self.n_q < 0:
            raise ValueError("n_q must be non-negative")


def chi_of_divisor(data: RRInput) -> Fraction:
    return data.chi_O + data.d_term / 12 + data.d_c2 / 12 - Q(data.n_q, 8)


def h0_antik(kx3: Number, N: int) -> Fraction:
    """h^0(-K) = 3 + (-K)^3/2 - N/4 for a weak Q-Fano of Gorenstein index 2.

    The value is returned as a Fraction; callers that need an actual
    dimension must reject non-integers themselves.
    """
    kx3 = as_q(kx3)
    if kx3 <= 0:
        raise ValueError(f"(-K)^3 must be positive, got {kx3}")
    if N < 0:
        raise ValueError(f"axial weight must be non-negative, got {N}")
    return 3 + kx3 / 2 - Q(N, 4)


def k_c2(N: int) -> Fraction:
    """-K.c2 = 24 - 3N/2."""
    return 24 - Q(3 * N, 2)


def aw_bound_ok(N: int) -> bool:
    return k_c2(N) > 0


def n_from_h(kx3: Number, h: int) -> Fraction:
    """Invert :func:`h0_antik` for the axial weight."""
    return 4 * (3 + as_q(kx3) / 2 - h)
