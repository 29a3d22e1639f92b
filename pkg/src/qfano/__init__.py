"""Exact enumeration of the numerical cases of index-2 Q-Fano threefolds.

The package rebuilds the rank-2 intersection calculus of a weighted blow-up
followed by a flop/flip run, evaluates the possible second contractions, and
solves the resulting Diophantine systems for the h^0(-K) >= 4 scenario.
"""

from qfano.core import (
    BirationalRun,
    FlipDatum,
    NumericalProfile,
    Q,
    apply_flip,
    apply_flop,
    blowup_profile,
    run_profile,
    triple,
)

__all__ = [
    "BirationalRun",
    "FlipDatum",
    "NumericalProfile",
    "Q",
    "apply_flip",
    "apply_flop",
    "blowup_profile",
    "run_profile",
    "triple",
]

__version__ = "0.1.0"
