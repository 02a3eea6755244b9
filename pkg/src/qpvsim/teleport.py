"""Teleportation over pre-shared EPR resources, with entanglement accounting.

Two port-based teleportation (PBT) modes:

* ``ideal`` — the unlimited-entanglement limit.  The payload state is
  transferred exactly into the receiver's port register at the moment of
  the sender's measurement; the which-port index k is drawn uniformly and
  must still travel as a classical message.  Pre-shared pairs are
  materialized lazily (untouched pairs are product with everything, so
  this is unobservable) and junk ports are measure-and-forget random bits.

* ``exact`` — the finite-N pretty-good-measurement POVM on the sender's
  N+1 qubits, limited to N <= 4 so the exact simulation stays small.  The
  receiver's only correction is discarding ports, in both modes.

Receiver-side operations may be registered on a group before the sender's
measurement (``PortGroup.when_bound``).  Local measurements on disjoint
systems commute, so their joint statistics do not depend on execution
order; the engine exploits that by evaluating such operations at bind time
and exposing the results through :class:`spacetime.Future`, while the
registration timestamp remains the moment the operating party acted.
Strategies must still gate any *use* of those results on the light-speed
arrival of the which-port message, which is what keeps attack response
times physical.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .qsim import ATOL, BELL, CNOT, H, X, Z, QubitId, computational
from .spacetime import CausalityError, Engine, Future, PendingFutureError


class TeleportError(RuntimeError):
    """Misuse of a teleportation resource (reuse, bad index, wrong party)."""


class EntanglementUnavailable(TeleportError):
    """The pre-shared entanglement supply is disabled or exhausted."""


class EntanglementLedger:
    """Running count of consumed EPR pairs, split into useful and wasted."""

    def __init__(self):
        self.consumed = 0
        self.useful = 0
        self.events: list[tuple[str, int, bool]] = []

    def charge(self, label: str, n_pairs: int, useful: bool) -> None:
        if n_pairs < 0:
            raise ValueError("cannot decrement the ledger")
        self.consumed += n_pairs
        if useful:
            self.useful += n_pairs
        self.events.append((label, n_pairs, useful))

    @property
    def waste_fraction(self) -> float:
        if self.consumed == 0:
            return 0.0
        return 1.0 - self.useful / self.consumed

    def snapshot(self) -> dict:
        return {"consumed": self.consumed, "useful": self.useful,
                "waste_fraction": self.waste_fraction}


@dataclass(frozen=True)
class PortOutcome:
    """Which-port information; classical, travels at light speed."""

    group: str
    k: int
    sender: str


@dataclass
class EprPair:
    """One maximally entangled pair |phi+> = (|00>+|11>)/sqrt(2)."""

    a: QubitId
    b: QubitId
    owner_a: str
    owner_b: str
    consumed: bool = False

    @staticmethod
    def create(engine: Engine, owner_a: str, owner_b: str, tag: str = "epr") -> "EprPair":
        # pre-shared in advance; preparation is out-of-band, hence unchecked custody
        a = engine.alloc(None, "0", tag=f"{tag}.a")
        b = engine.alloc(None, "0", tag=f"{tag}.b")
        engine.apply_unitary(None, [a], H)
        engine.apply_unitary(None, [a, b], CNOT)
        engine.custody[a] = owner_a
        engine.custody[b] = owner_b
        return EprPair(a, b, owner_a, owner_b)


@dataclass
class SlotItem:
    """One element of a PBT payload: a fresh qubit or a whole prior group."""

    meta: Any = None
    qubit: QubitId | None = None
    group: "PortGroup | None" = None


class PortGroup:
    """N pre-shared ports between one sender and one receiver.

    Consumed exactly once by ``pbt_send``; receiver-side operations may be
    registered before or after that moment via :meth:`when_bound`.
    """

    def __init__(self, engine: Engine, ledger: EntanglementLedger, gid: str,
                 sender: str, receiver: str, n_ports: int, mode: str):
        if n_ports < 1:
            raise TeleportError("a port group needs at least one port")
        if mode not in ("ideal", "exact"):
            raise TeleportError(f"unknown PBT mode {mode!r}")
        if mode == "exact" and n_ports > 4:
            raise TeleportError("exact mode is limited to N <= 4 ports")
        self.engine = engine
        self.ledger = ledger
        self.gid = gid
        self.sender = sender
        self.receiver = receiver
        self.n_ports = n_ports
        self.mode = mode
        self.bound = False
        self.k: int | None = None
        self.items: list[SlotItem] = []
        self.attachments: dict = {}
        self.forwarded_to: "PortGroup | None" = None
        self._pending: list[tuple[Callable[[], Any], Future]] = []
        self._junk: dict[int, list[QubitId]] = {}
        self.exact_pairs: list[EprPair] = []
        if mode == "exact":
            self.exact_pairs = [
                EprPair.create(engine, sender, receiver, tag=f"{gid}.p{i}")
                for i in range(n_ports)]

    # -- structure ----------------------------------------------------------

    def holder(self) -> str:
        """Party currently entitled to this group's content (follows forwards)."""
        return self.forwarded_to.holder() if self.forwarded_to else self.receiver

    def materialize(self) -> list[tuple[Any, QubitId]]:
        """Flatten the bound payload to (meta, qubit) pairs, depth first."""
        if not self.bound:
            raise PendingFutureError(f"group {self.gid} not bound yet")
        out: list[tuple[Any, QubitId]] = []
        for item in self.items:
            if item.qubit is not None:
                out.append((item.meta, item.qubit))
            elif item.group is not None:
                out.extend(item.group.materialize())
        return out

    def live_qubits(self) -> list[QubitId]:
        return [q for _, q in self.materialize() if self.engine.sim.live(q)]

    def port_qubits(self, i: int) -> list[QubitId]:
        """Receiver register of port i (the payload at i = k, junk otherwise)."""
        if not self.bound:
            raise PendingFutureError(f"group {self.gid} not bound yet")
        if not 1 <= i <= self.n_ports:
            raise TeleportError(f"port index {i} out of range 1..{self.n_ports}")
        if self.mode == "exact":
            return [self.exact_pairs[i - 1].b]
        if i == self.k:
            return [q for _, q in self.materialize()]
        if i not in self._junk:
            size = len(self.materialize())
            self._junk[i] = [
                self.engine.alloc(self.holder(), str(self.engine.rng.integers(2)),
                                  tag=f"{self.gid}.junk{i}")
                for _ in range(size)]
        return self._junk[i]

    def when_bound(self, fn: Callable[[], Any]) -> Future:
        """Run fn at bind time (or immediately if already bound); returns a Future."""
        fut = Future()
        if self.bound:
            fut.resolve(fn())
        else:
            self._pending.append((fn, fut))
        return fut

    def _bind(self, k: int) -> None:
        self.bound = True
        self.k = k
        for fn, fut in self._pending:
            fut.resolve(fn())
        self._pending.clear()


class EntanglementSupply:
    """The adversaries' pre-shared entanglement pool.

    Group labels are public structure agreed in advance, so both sides
    resolve the same label to the same group.  Disabling the supply makes
    every lease raise, which is the soundness-regression switch.
    """

    def __init__(self, engine: Engine, ledger: EntanglementLedger, enabled: bool = True):
        self.engine = engine
        self.ledger = ledger
        self.enabled = enabled
        self._groups: dict[tuple, PortGroup] = {}

    def group(self, label, sender: str, receiver: str, n_ports: int = 1,
              mode: str = "ideal") -> PortGroup:
        if not self.enabled:
            raise EntanglementUnavailable("entanglement supply disabled")
        key = (label, sender, receiver)
        if key not in self._groups:
            gid = f"{sender}>{receiver}:{label}"
            self._groups[key] = PortGroup(self.engine, self.ledger, gid,
                                          sender, receiver, n_ports, mode)
        return self._groups[key]

    def pair(self, owner_a: str, owner_b: str) -> EprPair:
        if not self.enabled:
            raise EntanglementUnavailable("entanglement supply disabled")
        return EprPair.create(self.engine, owner_a, owner_b)


# -- standard teleportation -------------------------------------------------

_CORRECTIONS = {"phi+": (0, 0), "phi-": (0, 1), "psi+": (1, 0), "psi-": (1, 1)}


def teleport_standard(engine: Engine, party: str | None, src: QubitId,
                      pair: EprPair, useful: bool = True) -> tuple[str, QubitId]:
    """Bell-measure (src, pair.a); returns correction bits 'xz' and pair.b.

    pair.b carries the source state once the receiver applies the indicated
    Pauli (see :func:`apply_teleport_correction`).
    """
    if pair.consumed:
        raise TeleportError("EPR pair already consumed")
    engine._require_custody(party, [src, pair.a])
    rec = engine.measure(party, [src, pair.a], BELL)
    pair.consumed = True
    x, z = _CORRECTIONS[rec.outcome]
    engine.free(party, [src, pair.a])
    if engine.ledger is not None:
        engine.ledger.charge("teleport_standard", 1, useful)
    return f"{x}{z}", pair.b


def apply_teleport_correction(engine: Engine, party: str | None,
                              dst: QubitId, bits: str) -> None:
    x, z = int(bits[0]), int(bits[1])
    if x:
        engine.apply_unitary(party, [dst], X)
    if z:
        engine.apply_unitary(party, [dst], Z)


# -- port-based teleportation ------------------------------------------------

def _as_items(payload: Sequence) -> list[SlotItem]:
    items = []
    for entry in payload:
        if isinstance(entry, SlotItem):
            items.append(entry)
        elif isinstance(entry, QubitId):
            items.append(SlotItem(qubit=entry))
        elif isinstance(entry, PortGroup):
            items.append(SlotItem(group=entry))
        else:
            raise TeleportError(f"bad payload entry {entry!r}")
    return items


def pbt_send(engine: Engine, party: str | None, payload: Sequence,
             group: PortGroup, attachments: dict | None = None,
             useful: bool | None = None) -> PortOutcome:
    """Sender-side PBT measurement; consumes the group and binds its payload.

    ``payload`` entries are fresh qubits, SlotItems, or previously received
    PortGroups whose (live) content is forwarded onward.  ``attachments``
    model classical data encoded in computational-basis qubits that ride
    the same teleportation; they become readable by receiver-side bound
    operations and are charged to the ledger.
    """
    if group.bound:
        raise TeleportError(f"group {group.gid} already consumed")
    if party is not None and party != group.sender:
        raise TeleportError(f"{party} is not the sender of {group.gid}")
    items = _as_items(payload)
    group.attachments = dict(attachments or {})

    if group.mode == "exact":
        fresh = [it.qubit for it in items if it.qubit is not None]
        if len(fresh) != len(items) or len(fresh) != 1:
            raise TeleportError("exact mode teleports exactly one fresh qubit")
        src = fresh[0]
        sender_side = [p.a for p in group.exact_pairs]
        engine._require_custody(party, [src] + sender_side)
        kraus = pretty_good_pbt_kraus(group.n_ports)
        rec = engine.measure_kraus(party, [src] + sender_side, kraus,
                                   [str(i + 1) for i in range(group.n_ports)])
        k = int(rec.outcome)
        engine.free(party, [src] + sender_side)
        for p in group.exact_pairs:
            p.consumed = True
        group.items = items
        n_pairs = group.n_ports
    else:
        n_fresh = 0
        for it in items:
            if it.qubit is not None:
                engine._require_custody(party, [it.qubit])
                n_fresh += 1
            elif it.group is not None:
                g = it.group
                if g.forwarded_to is not None:
                    raise TeleportError(f"group {g.gid} already forwarded")
                g.forwarded_to = group
        group.items = items
        k = 1 if group.n_ports == 1 else int(engine.rng.integers(1, group.n_ports + 1))
        # exact transfer: content belongs to the receiver from this instant
        n_content = 0
        for it in items:
            if it.qubit is not None:
                engine.transfer([it.qubit], group.holder())
                n_content += 1
            elif it.group is not None and it.group.bound:
                live = it.group.live_qubits()
                engine.transfer(live, group.holder())
                n_content += len(live)
        n_pairs = group.n_ports * max(n_content, 1)

    n_pairs += sum(_flat_size(v) for v in group.attachments.values())
    if useful is None:
        carried = {it.qubit for it in items if it.qubit is not None}
        for it in items:
            if it.group is not None and it.group.bound:
                carried.update(it.group.live_qubits())
        useful = bool(carried & engine.real_signals)
    group.ledger.charge(group.gid, n_pairs, useful)
    group._bind(k)
    engine.record(party or group.sender, "compute",
                  f"pbt_send group={group.gid} k={k} pairs={n_pairs}")
    return PortOutcome(group.gid, k, group.sender)


def _flat_size(value) -> int:
    # one qubit-equivalent per attached classical item
    if isinstance(value, (list, tuple, set, frozenset, dict)):
        return len(value)
    return 1


def _require_outcome(engine: Engine, party: str | None, group: PortGroup,
                     k: int | None = None) -> None:
    if party is None or party == group.sender:
        return
    delivered = [entry for entry in engine.outcome_log
                 if entry[0] == party and entry[1] == group.gid]
    if not delivered or (k is not None and (party, group.gid, k) not in delivered):
        raise CausalityError(
            f"{party} used which-port info of {group.gid} before its arrival")


def pbt_receive(engine: Engine, party: str | None, group: PortGroup,
                k: int) -> list[QubitId]:
    """Keep port k, discard every other port.  k must be causally available."""
    if not 1 <= k <= group.n_ports:
        raise TeleportError(f"port index {k} out of range 1..{group.n_ports}")
    if not group.bound:
        raise TeleportError(f"group {group.gid} has not been sent")
    _require_outcome(engine, party, group, k)
    kept = group.port_qubits(k)
    for i in range(1, group.n_ports + 1):
        if i == k:
            continue
        if group.mode == "exact" or i in group._junk or i == group.k:
            for q in group.port_qubits(i):
                if engine.sim.live(q):
                    engine.free(None, [q])
    return kept


def nested_discard(engine: Engine, party: str | None, group: PortGroup,
                   outer_k: int, inner_k: int) -> QubitId:
    """Resolve a port-in-port structure: keep sub-port (outer_k, inner_k).

    ``group`` is the return hop of a round trip whose payload was a whole
    previously received group; everything else is discarded.
    """
    if not group.bound:
        raise TeleportError(f"group {group.gid} has not been sent")
    if not 1 <= outer_k <= group.n_ports:
        raise TeleportError(f"outer index {outer_k} out of range")
    _require_outcome(engine, party, group, outer_k)
    inner_groups = [it.group for it in group.items if it.group is not None]
    for g in inner_groups:
        _require_outcome(engine, party, g)
    inner_sizes = [g.n_ports for g in inner_groups] or [len(group.items)]
    n_inner = inner_sizes[0]
    if not 1 <= inner_k <= n_inner:
        raise TeleportError(f"inner index {inner_k} out of range")
    flat = group.port_qubits(outer_k)
    keep = flat[inner_k - 1] if outer_k != group.k else None
    if outer_k == group.k:
        for meta, q in group.materialize():
            if meta == inner_k:
                keep = q
                break
        else:
            keep = flat[inner_k - 1]
    for i in range(1, group.n_ports + 1):
        if i != group.k and i not in group._junk and i != outer_k:
            continue  # never materialized; nothing to discard
        for q in group.port_qubits(i):
            if q != keep and engine.sim.live(q):
                engine.free(None, [q])
    return keep


# -- exact-mode POVM ----------------------------------------------------------

_PGM_CACHE: dict[int, list[np.ndarray]] = {}


def pretty_good_pbt_kraus(n_ports: int) -> list[np.ndarray]:
    """Square-root (pretty good) measurement for PBT on n_ports qubit ports.

    Operators act on the sender's N+1 qubits ordered [src, a_1 .. a_N]
    (big-endian).  The POVM is completed on the kernel of the signal mean.
    """
    if n_ports in _PGM_CACHE:
        return _PGM_CACHE[n_ports]
    nq = n_ports + 1
    dim = 2**nq

    def shift(pos: int) -> int:
        return nq - 1 - pos

    sigmas = []
    for i in range(1, n_ports + 1):
        rest = [p for p in range(1, n_ports + 1) if p != i]
        sig = np.zeros((dim, dim), dtype=complex)
        for bits in itertools.product((0, 1), repeat=len(rest)):
            vec = np.zeros(dim, dtype=complex)
            base = sum(b << shift(p) for b, p in zip(bits, rest))
            for v in (0, 1):
                vec[base + (v << shift(0)) + (v << shift(i))] = 1 / math.sqrt(2)
            sig += np.outer(vec, vec.conj())
        sigmas.append(sig / 2 ** (n_ports - 1))
    sigma = sum(sigmas)
    w, v = np.linalg.eigh(sigma)
    inv_sqrt = v @ np.diag([1 / math.sqrt(x) if x > 1e-12 else 0.0 for x in w]) @ v.conj().T
    effects = [inv_sqrt @ s @ inv_sqrt for s in sigmas]
    defect = np.eye(dim) - sum(effects)
    effects = [e + defect / n_ports for e in effects]
    total = sum(effects)
    assert np.allclose(total, np.eye(dim), atol=1e-8), "POVM completeness failed"
    kraus = [_sqrtm_psd(e) for e in effects]
    _PGM_CACHE[n_ports] = kraus
    return kraus


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return v @ np.diag(np.sqrt(w)) @ v.conj().T
