"""1D geometry, light-speed signal propagation and the deterministic event loop.

Every classical or quantum hand-off in a run rides a :class:`SignalEnvelope`
that arrives exactly ``distance / c`` after emission.  The engine owns all
mutable run state (statevector, entanglement ledger, RNG) and enforces the
causality contract: a party only sees a payload once its envelope arrived,
qubit operations require custody at the acting party, and deferred values
(:class:`Future`) raise if read before they are physically determined.

Event ordering is total and deterministic: events are processed in
nondecreasing time, arrivals before ticks before scheduled computations,
then by acting-party rank, source rank and emission order.  The source-rank
component realizes the public-order rule that a challenge from V0 is
anterior to a simultaneous one from V1.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import qsim
from .qsim import ATOL, Basis, MeasurementRecord, QsimError, QuantumSim, QubitId


class CausalityError(RuntimeError):
    """A decision tried to use information outside its past light cone.

    Signals a bug in a strategy implementation, not a protocol failure;
    the harness maps it to its own exit code.
    """


class PendingFutureError(CausalityError):
    """A deferred value was read before it was physically determined."""


class InvariantViolation(RuntimeError):
    """A validated scenario/run invariant failed at runtime."""


def arrival_time(x_from: float, x_to: float, c: float = 1.0) -> float:
    """Light-speed travel: |x_to - x_from| / c."""
    return abs(x_to - x_from) / c


def tick_schedule(dt: float, start: float, end: float) -> list[float]:
    """Tick times start + i*dt for i = 0..floor((end-start)/dt)."""
    if dt <= 0:
        raise ValueError(f"tick interval must be positive, got {dt}")
    n = int(np.floor((end - start) / dt + 1e-12))
    return [start + i * dt for i in range(n + 1)]


@dataclass(frozen=True)
class SecureRegion:
    """Zone around the prover that adversaries may not enter."""

    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("secure region radius must be positive")

    def contains(self, x: float) -> bool:
        return abs(x - self.center) < self.radius + ATOL


class Future:
    """Placeholder for a value determined later in simulation time."""

    __slots__ = ("_resolved", "_value")

    def __init__(self):
        self._resolved = False
        self._value = None

    @property
    def resolved(self) -> bool:
        return self._resolved

    @property
    def value(self):
        if not self._resolved:
            raise PendingFutureError("future read before it was determined")
        return self._value

    def resolve(self, value) -> None:
        if self._resolved:
            raise RuntimeError("future resolved twice")
        self._resolved = True
        self._value = value


class SignalEnvelope:
    """A classical-or-quantum message propagating at speed c."""

    def __init__(self, source: str, dest: str, kind: str, payload: Any,
                 qubits: Sequence[QubitId], emit_time: float, emit_pos: float,
                 dest_pos: float, c: float, meta: dict | None = None):
        self.source = source
        self.dest = dest
        self.kind = kind
        self.payload = payload
        self.qubits = tuple(qubits)
        self.emit_time = emit_time
        self.emit_pos = emit_pos
        self.dest_pos = dest_pos
        self.c = c
        self.meta = dict(meta or {})
        self.arrival_time = emit_time + arrival_time(emit_pos, dest_pos, c)

    def open(self, now: float) -> Any:
        """Access the payload; aborts if read before light-cone arrival."""
        if now + ATOL < self.arrival_time:
            raise CausalityError(
                f"payload of {self.kind} read at t={now} before arrival "
                f"t={self.arrival_time}")
        return self.payload

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (f"Envelope({self.kind} {self.source}->{self.dest} "
                f"t={self.emit_time}->{self.arrival_time})")


class Party:
    """A located actor driven by the event loop."""

    def __init__(self, name: str, pos: float):
        self.name = name
        self.pos = pos
        self.engine: Engine | None = None
        self.rank = 0

    def on_arrival(self, env: SignalEnvelope) -> None:  # pragma: no cover
        pass

    def on_tick(self, t: float) -> None:  # pragma: no cover
        pass

    def send(self, dest: str, kind: str, payload: Any = None,
             qubits: Sequence[QubitId] = (), meta: dict | None = None) -> SignalEnvelope:
        return self.engine.send(self.name, dest, kind, payload, qubits, meta)


_KIND_RANK = {"arrive": 0, "tick": 1, "compute": 2}


class Engine:
    """Deterministic discrete-event loop owning all mutable run state."""

    def __init__(self, rng: np.random.Generator, c: float = 1.0,
                 qubit_cap: int = qsim.DEFAULT_QUBIT_CAP, trace: bool = True):
        self.rng = rng
        self.c = c
        self.sim = QuantumSim(rng, qubit_cap=qubit_cap)
        self.now = 0.0
        self.parties: dict[str, Party] = {}
        self.taps: list[Party] = []
        self.custody: dict[QubitId, str] = {}
        self.ledger = None  # set by the harness (teleport.EntanglementLedger)
        self.horizon: float | None = None
        self._heap: list[tuple] = []
        self._seq = 0
        self._trace_on = trace
        self.trace_rows: list[tuple[float, str, str, str]] = []
        self.outcome_log: set[tuple[str, str, int]] = set()  # (party, group, k)
        self.real_signals: set[QubitId] = set()  # qubits belonging to real challenges

    # -- parties and wiring -------------------------------------------------

    def add_party(self, party: Party) -> Party:
        party.engine = self
        party.rank = len(self.parties)
        self.parties[party.name] = party
        return party

    def add_tap(self, party: Party) -> None:
        """Route envelopes crossing this party's position through it."""
        self.taps.append(party)

    # -- event queue ----------------------------------------------------------

    def schedule(self, time: float, kind: str, party: str,
                 fn: Callable[[], None], src_rank: int = 0, detail: str = "") -> None:
        if time + ATOL < self.now:
            raise InvariantViolation(f"scheduling into the past: {time} < {self.now}")
        rank = self.parties[party].rank if party in self.parties else 99
        key = (time, _KIND_RANK[kind], rank, src_rank, self._seq)
        self._seq += 1
        heapq.heappush(self._heap, (key, kind, party, fn, detail))

    def send(self, source: str, dest: str, kind: str, payload: Any = None,
             qubits: Sequence[QubitId] = (), meta: dict | None = None,
             emit_pos: float | None = None,
             dest_pos: float | None = None) -> SignalEnvelope:
        sp = self.parties[source]
        dp = self.parties[dest]
        src_pos = emit_pos if emit_pos is not None else sp.pos
        dest_name = dest
        dest_pos = dest_pos if dest_pos is not None else dp.pos
        # interception: the first tap strictly between source and dest takes
        # the challenge channel; other traffic (adversary signalling,
        # responses) passes by untouched
        tap_names = {t.name for t in self.taps}
        lo, hi = min(src_pos, dest_pos), max(src_pos, dest_pos)
        crossing = [t for t in self.taps
                    if kind.startswith("challenge")
                    and lo + ATOL < t.pos < hi - ATOL
                    and source not in tap_names]
        if crossing:
            tap = min(crossing, key=lambda t: abs(t.pos - src_pos))
            dest_name, dest_pos = tap.name, tap.pos
            meta = dict(meta or {})
            meta["intended_dest"] = dest
        env = SignalEnvelope(source, dest_name, kind, payload, qubits,
                             self.now, src_pos, dest_pos, self.c, meta)
        for q in env.qubits:
            self._require_custody(source, [q])
            self.custody[q] = "@flight"
        self.record(source, "emit", self._env_detail(env))

        def deliver(env=env):
            for q in env.qubits:
                self.custody[q] = env.dest
            if env.kind == "port_outcome" and env.payload is not None:
                po = env.payload
                self.outcome_log.add((env.dest, po.group, po.k))
            self.record(env.dest, "arrive", self._env_detail(env))
            self.parties[env.dest].on_arrival(env)

        self.schedule(env.arrival_time, "arrive", dest_name, deliver,
                      src_rank=sp.rank)
        return env

    @staticmethod
    def _env_detail(env: SignalEnvelope) -> str:
        bits = [env.kind, f"{env.source}->{env.dest}"]
        for key in ("round", "slot", "signal"):
            if key in env.meta:
                bits.append(f"{key}={env.meta[key]}")
        if env.kind == "port_outcome" and env.payload is not None:
            bits.append(f"group={env.payload.group} k={env.payload.k}")
        if env.kind == "response":
            bits.append(f"value={env.payload[1]}")
        return " ".join(str(b) for b in bits)

    def start_ticks(self, party: str, t0: float, dt: float,
                    end: float | None = None) -> None:
        """Self-rescheduling tick source for on-tick strategies."""
        if dt <= 0:
            raise ValueError("tick interval must be positive")
        stop = end if end is not None else self.horizon
        if stop is None:
            raise InvariantViolation("tick source needs an end or engine horizon")

        def fire(t=t0):
            self.parties[party].on_tick(t)
            nxt = t + dt
            if nxt <= stop + ATOL:
                self.schedule(nxt, "tick", party, lambda: fire(nxt))

        self.schedule(t0, "tick", party, lambda: fire(t0))

    def run(self) -> None:
        while self._heap:
            key, kind, party, fn, detail = heapq.heappop(self._heap)
            self.now = key[0]
            if detail:
                self.record(party, kind, detail)
            fn()

    def record(self, party: str, kind: str, detail: str) -> None:
        if self._trace_on:
            self.trace_rows.append((self.now, party, kind, detail))

    # -- custody-checked quantum operations -----------------------------------

    def _require_custody(self, party: str | None, targets: Iterable[QubitId]) -> None:
        if party is None:
            return
        for q in targets:
            holder = self.custody.get(q)
            if holder != party:
                raise CausalityError(
                    f"{party} operated on {q} held by {holder} (co-location violation)")

    def alloc(self, party: str | None, initial: str = "0", tag: str = "") -> QubitId:
        q = self.sim.alloc(initial, tag)
        self.custody[q] = party or "@lab"
        return q

    def apply_unitary(self, party: str | None, targets: Sequence[QubitId],
                      u: np.ndarray) -> None:
        self._require_custody(party, targets)
        self.sim.apply_unitary(targets, u)

    def measure(self, party: str | None, targets: Sequence[QubitId],
                basis: Basis) -> MeasurementRecord:
        self._require_custody(party, targets)
        rec = self.sim.measure(targets, basis)
        self.record(party or "@lab", "compute",
                    f"measure {basis.name} -> {rec.outcome}")
        return rec

    def measure_kraus(self, party: str | None, targets: Sequence[QubitId],
                      kraus, labels) -> MeasurementRecord:
        self._require_custody(party, targets)
        return self.sim.measure_kraus(targets, kraus, labels)

    def free(self, party: str | None, targets: Sequence[QubitId]) -> None:
        self._require_custody(party, targets)
        self.sim.free(targets)
        for q in targets:
            self.custody.pop(q, None)

    def transfer(self, targets: Sequence[QubitId], party: str) -> None:
        """Custody change without transport (teleportation binds, lab hand-offs)."""
        for q in targets:
            self.custody[q] = party
