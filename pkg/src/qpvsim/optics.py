"""Dual-rail single-photon wave packets, beam splitters and interference.

Each channel is one occupation qubit (|1> photon present, |0> vacuum), so a
wave packet split over two channels *is* a two-qubit entangled state and
teleporting a rail preserves coherence without revealing occupation.  The
fixed 50:50 beam-splitter convention is

    |10> -> (|10> + |01>)/sqrt(2)        |01> -> (|10> - |01>)/sqrt(2)

with |00> and |11> untouched, which makes an S0 injection hit detector D0
with certainty and an S1 injection hit D1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qsim import Basis, QubitId, Z2, computational
from .spacetime import Engine

_S2 = 1 / math.sqrt(2)

#: Beam-splitter unitary on (upper, lower) in basis order 00,01,10,11.
BS = np.array(
    [
        [1, 0, 0, 0],
        [0, -_S2, _S2, 0],
        [0, _S2, _S2, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)

#: Measurement basis equivalent to "beam splitter, then both rails in Z".
INTERFERENCE = Basis(
    "interference",
    np.column_stack([
        np.array([1, 0, 0, 0], dtype=complex),            # vacuum
        np.array([0, _S2, _S2, 0], dtype=complex),        # D0
        np.array([0, -_S2, _S2, 0], dtype=complex),       # D1
        np.array([0, 0, 0, 1], dtype=complex),            # unreachable
    ]),
    ["NoClick", "D0", "D1", "Both"],
)

_ZZ_TO_DETECTOR = {"10": "D0", "01": "D1", "00": "NoClick", "11": "Both"}


@dataclass(frozen=True)
class DualRail:
    """Two occupation qubits carrying at most one photon."""

    upper: QubitId
    lower: QubitId

    @property
    def qubits(self) -> tuple[QubitId, QubitId]:
        return (self.upper, self.lower)


def inject_photon(engine: Engine, party: str | None, source: str,
                  tag: str = "rail") -> DualRail:
    """Send one photon into the first beam splitter from S0 or S1."""
    if source not in ("S0", "S1"):
        raise ValueError(f"source must be 'S0' or 'S1', got {source!r}")
    upper = engine.alloc(party, "1" if source == "S0" else "0", tag=f"{tag}.u")
    lower = engine.alloc(party, "0" if source == "S0" else "1", tag=f"{tag}.l")
    engine.apply_unitary(party, [upper, lower], BS)
    return DualRail(upper, lower)


def vacuum_pair(engine: Engine, party: str | None, tag: str = "vac") -> DualRail:
    """The empty-signal case: both channels in vacuum."""
    return DualRail(engine.alloc(party, "0", tag=f"{tag}.u"),
                    engine.alloc(party, "0", tag=f"{tag}.l"))


def interfere_and_detect(engine: Engine, party: str | None, dr: DualRail) -> str:
    """Recombine the rails on a beam splitter and read the detectors.

    Returns "D0", "D1" or "NoClick"; both rails are freed.
    """
    engine.apply_unitary(party, [dr.upper, dr.lower], BS)
    rec = engine.measure(party, [dr.upper, dr.lower], Z2)
    engine.free(party, [dr.upper, dr.lower])
    return _ZZ_TO_DETECTOR[rec.outcome]


def which_way_measure(engine: Engine, party: str | None, dr: DualRail,
                      channel: str) -> int:
    """Z measurement on one rail; destroys interference."""
    target = dr.upper if channel == "upper" else dr.lower
    rec = engine.measure(party, [target], computational(1))
    return int(rec.outcome)
