"""Adversary strategies, from detect-triggered interception to SINQC.

E0 and E1 sit between each verifier and the secure region, intercept the
challenge channels, and coordinate only through light-speed envelopes plus
pre-shared entanglement.  Every strategy obeys the light-cone discipline:
which-port information and candidate-result lists must physically arrive
before they inform a response, even in the ideal-PBT mode where the port
index is trivially 1.

The chained relay (Attack I machinery, shared by the public-order attack,
the superdense Attack II and the mispairing detect-triggered strategy)
gathers every signal at alternating sides.  At her slot i an adversary
teleports the whole remainder plus the fresh window content onward and
pre-registers the command execution for slot i+1 on the incoming group;
the registration is evaluated at bind time, which is sound because local
measurements on disjoint systems are order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .optics import INTERFERENCE
from .protocols import (
    BASELINE_BASES,
    ChallengeScript,
    Geometry,
    InsufficientKnowledgeError,
    ProtocolConfig,
    Slot,
    grid_ceil,
    normalize_order,
)
from .qsim import BELL, computational
from .spacetime import Engine, Party
from .teleport import (
    EntanglementSupply,
    EntanglementUnavailable,
    PortOutcome,
    SlotItem,
    pbt_send,
)

STRATEGIES = (
    "none", "inqc", "detect", "attack_i", "attack_ii", "attack_iii",
    "attack_iii_naive", "sinqc", "displaced", "relay",
)


@dataclass
class AdversaryConfig:
    strategy: str = "none"
    trigger_dt: float = 1.0
    pbt_mode: str = "ideal"       # "ideal" | "exact" (exact: forward hop only)
    pbt_ports: int = 1
    supply_enabled: bool = True
    shuffle_order: bool = False   # attack_i variant: scrambled pairing
    displaced_pos: float | None = None

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.trigger_dt <= 0:
            raise ValueError("on-tick trigger interval must be positive")
        if self.pbt_mode not in ("ideal", "exact"):
            raise ValueError(f"unknown PBT mode {self.pbt_mode!r}")


@dataclass
class PublicInfo:
    """What the adversaries legitimately know (the paper's no-secret rule):
    geometry, protocol parameters, and the arrival script iff public-order."""

    geom: Geometry
    cfg: ProtocolConfig
    knowledge: str                 # "public" | "private"
    arrivals: list | None = None   # (side, meet_time, sid, round) if public
    pairing: dict | None = None    # sid -> round if public
    horizon: float = 0.0


def ledger_report(engine: Engine) -> dict:
    """The run's entanglement accounting: consumed, useful, waste fraction."""
    if engine.ledger is None:
        return {"consumed": 0, "useful": 0, "waste_fraction": 0.0}
    return engine.ledger.snapshot()


class AdversaryBase(Party):
    def __init__(self, side: int, pos: float, public: PublicInfo,
                 supply: EntanglementSupply, adv: AdversaryConfig):
        super().__init__(f"E{side}", pos)
        self.side = side
        self.partner = f"E{1 - side}"
        self.near_verifier = f"V{side}"
        self.public = public
        self.supply = supply
        self.adv = adv
        self.degraded = False
        self.responded: set[int] = set()
        self.buffer: list = []

    # -- helpers -----------------------------------------------------------

    def start(self) -> None:
        """Hook called once after wiring; strategies schedule ticks here."""

    def lease(self, label, sender, receiver, **kw):
        try:
            return self.supply.group(label, sender, receiver, **kw)
        except EntanglementUnavailable:
            self.degraded = True
            return None

    def respond(self, r: int, value, both: bool = False) -> bool:
        if r in self.responded or r >= self.public.cfg.rounds:
            return False
        self.responded.add(r)
        self.send(self.near_verifier, "response", (r, value), meta={"round": r})
        if both:
            self.send(f"V{1 - self.side}", "response", (r, value),
                      meta={"round": r})
        return True

    def finished(self) -> bool:
        return len(self.responded) >= self.public.cfg.rounds

    def tick_loop(self, t0: float, dt: float) -> None:
        def fire(t):
            if not self.finished() and t <= self.public.horizon:
                self.on_tick(t)
                self.engine.schedule(t + dt, "tick", self.name,
                                     lambda: fire(t + dt))
        self.engine.schedule(t0, "tick", self.name, lambda: fire(t0))


# ---------------------------------------------------------------------------
# INQC against the fixed-slot baseline (paper steps S1-S4)
# ---------------------------------------------------------------------------

class InqcAdversary(AdversaryBase):
    """Both-sided PBT relay: E0 forwards the challenge qubit, E1 measures all
    ports in the announced basis at bind time, returns the measured ports,
    and both deduce the response once the which-port envelopes arrive."""

    def __init__(self, side, pos, public, supply, adv):
        super().__init__(side, pos, public, supply, adv)
        self.state: dict[int, dict] = {}

    def _slot(self, r: int) -> dict:
        return self.state.setdefault(r, {})

    def on_arrival(self, env):
        if env.kind == "challenge_qubit" and self.side == 0:
            self._s1(env)
        elif env.kind == "challenge_classical" and self.side == 1:
            self._s2(env)
        elif env.kind == "port_outcome":
            self._note_outcome(env)
        elif env.kind == "inqc_bundle" and self.side == 0:
            self._s4(env)
        elif env.kind == "relay_qubit" and self.side == 1:
            self._relay_measure(env)
        elif env.kind == "relay_result" and self.side == 0:
            r, v = env.open(self.engine.now)
            self.respond(r, v)

    # E0, challenge arrival: PBT of the qubit toward E1
    def _s1(self, env):
        r = env.meta["round"]
        q = env.qubits[0]
        fwd = self.lease(("f", r), "E0", "E1", n_ports=self.adv.pbt_ports,
                         mode=self.adv.pbt_mode)
        if fwd is None:  # no entanglement: classical relay fallback
            self.send(self.partner, "relay_qubit", qubits=[q],
                      meta={"round": r})
            return
        out = pbt_send(self.engine, self.name, [SlotItem(("port", 1), q)], fwd)
        self._slot(r)["n0"] = out
        self.send(self.partner, "port_outcome", out, meta={"round": r})

    # E1, basis arrival: measure every forward port in that basis at bind,
    # then return-teleport the measured ports (paper S2) and announce.
    def _s2(self, env):
        r = env.meta["round"]
        basis_label = env.open(self.engine.now)["basis"]
        fwd = self.lease(("f", r), "E0", "E1", n_ports=self.adv.pbt_ports,
                         mode=self.adv.pbt_mode)
        if fwd is None:
            self._slot(r)["basis"] = basis_label
            return
        basis = BASELINE_BASES[basis_label]
        eng = self.engine

        def measure_ports():
            cands = {}
            for i in range(1, fwd.n_ports + 1):
                port = fwd.port_qubits(i)
                cands[i] = int(eng.measure(None, port, basis).outcome)
            return cands

        fut = fwd.when_bound(measure_ports)
        ret = self.lease(("r", r), "E1", "E0", n_ports=1)
        items = [SlotItem(("port", i), fwd.port_qubits(i)[0])
                 for i in range(1, fwd.n_ports + 1)] if fwd.bound else \
                [SlotItem(("fwd", r), group=fwd)]
        out = pbt_send(eng, self.name, items, ret)
        self._slot(r).update(basis=basis_label, cands=fut, ret=ret, n1=out)
        self.send(self.partner, "port_outcome", out, meta={"round": r})
        self.send(self.partner, "inqc_bundle",
                  {"round": r, "basis": basis_label, "cands": fut,
                   "n1": out.k}, meta={"round": r})

    def _note_outcome(self, env):
        out: PortOutcome = env.open(self.engine.now)
        r = env.meta["round"]
        slot = self._slot(r)
        if self.side == 1:
            slot["n0"] = out
            self._e1_try_respond(r)
        else:
            slot.setdefault("outcomes", []).append(out)

    def _e1_try_respond(self, r):
        slot = self._slot(r)
        if "n0" in slot and "cands" in slot and slot["cands"].resolved:
            self.respond(r, slot["cands"].value[slot["n0"].k])

    # E0 at the bundle's arrival: nested discard by her own n0, re-measure
    # the surviving returned port in the announced basis (paper S3/S4).
    def _s4(self, env):
        bundle = env.open(self.engine.now)
        r = bundle["round"]
        slot = self._slot(r)
        eng = self.engine
        ret = self.supply.group(("r", r), "E1", "E0")
        survivors = []
        for meta, q in ret.materialize():
            if not eng.sim.live(q):
                continue
            if meta == ("port", slot["n0"].k) or meta[0] == "fwd":
                survivors.append(q)
            else:
                eng.free(self.name, [q])
        value = bundle["cands"].value[slot["n0"].k]
        if survivors:
            basis = BASELINE_BASES[bundle["basis"]]
            check = int(eng.measure(self.name, survivors[:1], basis).outcome)
            eng.free(self.name, survivors)
            value = check  # eigenstate re-measurement; equal to the candidate
        self.respond(r, value)

    # classical-relay fallback (no entanglement): E1 measures on physical
    # arrival of the forwarded qubit; E0's copy of the result is late.
    def _relay_measure(self, env):
        r = env.meta["round"]
        q = env.qubits[0]
        slot = self._slot(r)
        basis = BASELINE_BASES[slot["basis"]]
        v = int(self.engine.measure(self.name, [q], basis).outcome)
        self.engine.free(self.name, [q])
        self.respond(r, v)
        self.send(self.partner, "relay_result", (r, v), meta={"round": r})


class RelayAdversary(InqcAdversary):
    """Classical relay without entanglement: always late on E0's side."""

    def _s1(self, env):
        r = env.meta["round"]
        self.send(self.partner, "relay_qubit", qubits=[env.qubits[0]],
                  meta={"round": r})

    def _s2(self, env):
        r = env.meta["round"]
        self._slot(r)["basis"] = env.open(self.engine.now)["basis"]


# ---------------------------------------------------------------------------
# Detect-triggered strategies
# ---------------------------------------------------------------------------

class WhichWayAdversary(AdversaryBase):
    """On-detect against wave packets: the trigger click *is* a which-way
    measurement, so interference is gone and the value must be guessed."""

    def on_arrival(self, env):
        if env.kind != "challenge_rail":
            return
        r = env.meta["round"]
        q = env.qubits[0]
        click = self.engine.measure(self.name, [q], computational(1)).outcome
        self.engine.free(self.name, [q])
        if click == "1":
            guess = f"D{int(self.engine.rng.integers(2))}"
            self.respond(r, guess, both=True)


class DisplacedProver(AdversaryBase):
    """A lone responder outside the secure region (baseline): must guess the
    basis because the classical piece never reaches her in time."""

    def on_arrival(self, env):
        if env.kind != "challenge_qubit":
            return
        r = env.meta["round"]
        q = env.qubits[0]
        v = int(self.engine.measure(self.name, [q], BASELINE_BASES["Z"]).outcome)
        self.engine.free(self.name, [q])
        self.respond(r, v, both=True)


# ---------------------------------------------------------------------------
# The chained relay (Attack I machinery)
# ---------------------------------------------------------------------------

class ChainSide(AdversaryBase):
    """One adversary's half of the chained PBT relay over an alternating
    slot sequence.  Subclasses provide the slot source and pairing rule."""

    measurement = BELL

    def __init__(self, side, pos, public, supply, adv):
        super().__init__(side, pos, public, supply, adv)
        self.flags: dict[int, bool] = {}          # slot -> carried a real signal
        self.my_outcomes: dict[int, PortOutcome] = {}
        self.partner_outcomes: dict[int, PortOutcome] = {}
        self.my_cands: dict[int, object] = {}     # slot -> Future (local gather)
        self.carriers: dict[int, object] = {}     # slot -> Future (partner gather)
        self.stepped: set[int] = set()
        self.consumed: set[int] = set()

    # -- slot geometry ------------------------------------------------------

    def slot_side(self, i: int) -> int:
        return (i - 1) % 2

    def group_for(self, i: int):
        s = self.slot_side(i)
        return self.lease(("chain", i), f"E{s}", f"E{1 - s}")

    def setup(self) -> None:
        # standing arrangement: the receiver of slot 1 pre-registers its gather
        if self.side == 1:
            self._register(1)

    def _register(self, i: int) -> None:
        g = self.group_for(i)
        if g is None:
            return
        fut = g.when_bound(lambda: self._gather(i, g))
        self.my_cands[i] = fut
        self.send(self.partner, "chain_candidates", {"slot": i, "fut": fut},
                  meta={"slot": i})

    # -- the per-slot step ----------------------------------------------------

    def step(self, i: int, fresh: list, real: bool) -> None:
        if i in self.stepped or self.degraded:
            self.engine.free(None, [q for q in fresh if self.engine.sim.live(q)])
            return
        self.stepped.add(i)
        self.flags[i] = real
        prev = self.supply.group(("chain", i - 1), f"E{self.slot_side(i - 1)}",
                                 f"E{1 - self.slot_side(i - 1)}") if i > 1 else None
        items = []
        if prev is not None and prev.bound:
            # flatten the remainder: carry the live content forward directly
            for meta, q in prev.materialize():
                if self.engine.sim.live(q):
                    items.append(SlotItem(meta, qubit=q))
        elif prev is not None:
            # out-of-order detection chains: forward the pending structure
            items.append(SlotItem(("chain", i - 1), group=prev))
        items += [SlotItem(("slot", i), qubit=q) for q in fresh]
        g = self.group_for(i)
        if g is None:
            return
        out = pbt_send(self.engine, self.name, items, g,
                       attachments={"flags": ((i, real),)})
        self.my_outcomes[i] = out
        self.send(self.partner, "port_outcome", out, meta={"slot": i})
        self._register(i + 1)
        self._try_respond_sender(i)

    # -- bind-time command execution -------------------------------------------

    def _gather(self, i: int, group) -> dict:
        # Runs at bind time on the registrar's receive ports.  Custody was
        # hers at registration (she is the group's receiver), so the engine
        # ops run unchecked here; see module docstring on pre-execution.
        eng = self.engine
        for s, real in group.attachments.get("flags", ()):
            self.flags.setdefault(s, real)
        qmap = {}
        for meta, q in group.materialize():
            if isinstance(meta, tuple) and meta[0] == "slot" and eng.sim.live(q):
                qmap[meta[1]] = q
        results = {}
        for r, sa, sb in self.commands_completing(i):
            qa, qb = qmap.get(sa), qmap.get(sb)
            if qa is None or qb is None or qa == qb:
                continue
            rec = eng.measure(None, [qa, qb], self.measurement)
            eng.free(None, [qa, qb])
            results[r] = BELL.labels.index(rec.outcome) + 1
            self.consumed.update((sa, sb))
        # prune empty-window qubits: charged already, never matched again
        for s, q in qmap.items():
            if s <= i and self.flags.get(s) is False and eng.sim.live(q):
                eng.free(None, [q])
        return {"slot": i, "results": results}

    def commands_completing(self, i: int) -> list[tuple[int, int, int]]:
        raise NotImplementedError

    # -- message handling ---------------------------------------------------------

    def on_arrival(self, env):
        if env.kind == "port_outcome":
            out = env.open(self.engine.now)
            i = env.meta["slot"]
            self.partner_outcomes[i] = out
            self._try_respond_registrar(i)
        elif env.kind == "chain_candidates":
            data = env.open(self.engine.now)
            self.carriers[data["slot"]] = data["fut"]
            self._try_respond_sender(data["slot"])
        else:
            self.on_challenge(env)

    def on_challenge(self, env):  # pragma: no cover - subclass hook
        pass

    # -- response deduction ------------------------------------------------------

    def _try_respond_registrar(self, i: int) -> None:
        # I pre-registered the gather for slot i; the sender's which-port
        # message just arrived, so the candidates are now interpretable.
        fut = self.my_cands.get(i)
        if fut is None or not fut.resolved or i not in self.partner_outcomes:
            return
        for r, value in fut.value["results"].items():
            self.respond(r, value)

    def _try_respond_sender(self, i: int) -> None:
        # I sent slot i; I need the registrar's candidate list (carrier) and
        # my own which-port outcome (known since my step).
        fut = self.carriers.get(i)
        if fut is None or not fut.resolved or i not in self.my_outcomes:
            return
        for r, value in fut.value["results"].items():
            self.respond(r, value)


class AttackIChain(ChainSide):
    """Attack I on a public-order run: the slot sequence and matching are
    derived from the published script via the empty-signal normalization."""

    def __init__(self, side, pos, public, supply, adv, rng):
        super().__init__(side, pos, public, supply, adv)
        if public.knowledge != "public":
            raise InsufficientKnowledgeError(
                "Attack I needs the public arrival order; a private-order "
                "run does not provide it")
        seq = normalize_order(
            [(s, t, sid) for (s, t, sid, _r) in public.arrivals], "public")
        self.slots = seq.slots
        self.sid_round = dict(public.pairing)
        by_round: dict[int, list[int]] = {}
        for slot in self.slots:
            if slot.real:
                by_round.setdefault(self.sid_round[slot.sid], []).append(slot.index)
        if adv.shuffle_order:
            rounds = sorted(by_round)
            seconds = [by_round[r][1] for r in rounds]
            perm = rng.permutation(len(rounds))
            for r, j in zip(rounds, perm):
                by_round[r] = [by_round[r][0], seconds[int(j)]]
        self.commands = {max(ss): (r, min(ss), max(ss))
                         for r, ss in by_round.items() if len(ss) == 2}
        self._d_meet = public.geom.d(pos, public.geom.prover)

    def start(self) -> None:
        self.setup()
        for slot in self.slots:
            if slot.side != self.side:
                continue
            trigger = slot.time - self._d_meet
            self.engine.schedule(trigger, "compute", self.name,
                                 lambda s=slot: self._slot_step(s))

    def _slot_step(self, slot: Slot) -> None:
        if slot.real and self.buffer:
            fresh = [self.buffer.pop(0)]
            real = True
        else:
            fresh = [self.engine.alloc(self.name, "0", tag=f"empty{slot.index}")]
            real = False
        self.step(slot.index, fresh, real)

    def on_challenge(self, env):
        if env.kind == "challenge_sub":
            self.buffer.append(env.qubits[0])

    def commands_completing(self, i):
        cmd = self.commands.get(i)
        return [cmd] if cmd else []


class AttackIIChain(ChainSide):
    """Superdense Attack II: tick-anchored empty signals turn the private
    order into a public one; pairing is read off the realness flags that
    ride the chain as classical attachments."""

    def __init__(self, side, pos, public, supply, adv):
        super().__init__(side, pos, public, supply, adv)
        self.dt = adv.trigger_dt
        self.tick_index: dict[float, int] = {}
        self._n_ticks = 0

    def start(self) -> None:
        self.setup()
        t0 = grid_ceil(self.public.cfg.start_time, self.dt)
        self.tick_loop(t0, self.dt)

    def slot_of_tick(self, n: int) -> int:
        return 2 * n + 1 + self.side

    def on_tick(self, t):
        n = self._n_ticks
        self._n_ticks += 1
        i = self.slot_of_tick(n)
        if self.buffer:
            fresh, real = [self.buffer.pop(0)], True
            while self.buffer:  # over-coarse window: extra arrivals ride along
                fresh.append(self.buffer.pop(0))
        else:
            fresh, real = [self.engine.alloc(self.name, "0", tag=f"w{i}")], False
        self.step(i, fresh, real)

    def on_challenge(self, env):
        if env.kind == "challenge_sub":
            self.buffer.append(env.qubits[0])

    def commands_completing(self, i):
        # consecutive real slots pair up, exactly the prover's rule
        reals = sorted(s for s, f in self.flags.items() if f and s <= i)
        if i not in reals:
            return []
        pos = reals.index(i)
        if pos % 2 == 1:
            return [(pos // 2, reals[pos - 1], i)]
        return []


class PairByLocalOrderChain(AttackIIChain):
    """Detect-triggered strategy against the private-order protocol: treat
    the i-th local detections on both sides as matched.  Defeated by
    same-side command placements."""

    def __init__(self, side, pos, public, supply, adv):
        super().__init__(side, pos, public, supply, adv)
        self._detections = 0

    def start(self) -> None:
        self.setup()

    def on_challenge(self, env):
        if env.kind != "challenge_sub":
            return
        self._detections += 1
        i = 2 * self._detections - 1 + self.side
        self.step(i, [env.qubits[0]], True)

    def commands_completing(self, i):
        if i % 2 == 0:
            return [(i // 2 - 1, i - 1, i)]
        return []


# ---------------------------------------------------------------------------
# Superdense INQC against interferometric protocols (p1; also the
# single-point-assumption attacker against p3)
# ---------------------------------------------------------------------------

class SinqcInterferenceSide(AdversaryBase):
    """Blind per-tick round trips.  E0 forwards her window content (a rail
    or a fresh |0>), E1 bounces it back together with hers, and E0's
    pre-registered interference measurement produces the per-tick candidate.
    A click becomes a response only once the which-port envelopes arrive,
    which lands it exactly on the honest deadline."""

    def __init__(self, side, pos, public, supply, adv):
        super().__init__(side, pos, public, supply, adv)
        self.dt = adv.trigger_dt
        self.cands: dict[float, object] = {}
        self.clicks = 0

    def start(self):
        self.tick_loop(grid_ceil(self.public.cfg.start_time, self.dt), self.dt)

    def on_arrival(self, env):
        if env.kind == "challenge_rail":
            self.buffer.append(env.qubits[0])
        elif env.kind == "port_outcome" and self.side == 0:
            t = env.meta["tick"]
            env.open(self.engine.now)
            self._deduce(t)
        elif env.kind == "sinqc_carrier" and self.side == 1:
            data = env.open(self.engine.now)
            self.cands[data["tick"]] = data["fut"]
            self._deduce(data["tick"])

    def _drop_buffer(self):
        live = [q for q in self.buffer if self.engine.sim.live(q)]
        if live:
            self.engine.free(None, live)
        self.buffer.clear()

    def on_tick(self, t):
        if self.degraded:
            self._drop_buffer()
            return
        if self.buffer:
            fresh, real = list(self.buffer), True
            self.buffer.clear()
        else:
            fresh, real = [self.engine.alloc(self.name, "0", tag=f"w{t}")], False
        tag = "w0" if self.side == 0 else "w1"
        items = [SlotItem((tag, t), qubit=q) for q in fresh]
        if self.side == 0:
            fwd = self.lease(("f", t), "E0", "E1")
            if fwd is None:
                self.engine.free(None, fresh)
                return
            pbt_send(self.engine, self.name, items, fwd)
            ret = self.lease(("r", t), "E1", "E0")
            fut = ret.when_bound(lambda: self._interfere(t, ret))
            self.cands[t] = fut
            self.send(self.partner, "sinqc_carrier", {"tick": t, "fut": fut},
                      meta={"tick": t})
        else:
            fwd = self.lease(("f", t), "E0", "E1")
            ret = self.lease(("r", t), "E1", "E0")
            if fwd is None or ret is None:
                self.engine.free(None, fresh)
                return
            out = pbt_send(self.engine, self.name,
                           [SlotItem(("f", t), group=fwd)] + items, ret)
            self.send(self.partner, "port_outcome", out, meta={"tick": t})

    def _interfere(self, t, group) -> dict:
        eng = self.engine
        qmap = {}
        leftovers = []
        for meta, q in group.materialize():
            if not eng.sim.live(q):
                continue
            if isinstance(meta, tuple) and meta[0] in ("w0", "w1"):
                if meta[0] in qmap:
                    leftovers.append(q)
                else:
                    qmap[meta[0]] = q
            else:
                leftovers.append(q)
        value = None
        if "w0" in qmap and "w1" in qmap:
            rec = eng.measure(None, [qmap["w0"], qmap["w1"]], INTERFERENCE)
            eng.free(None, [qmap["w0"], qmap["w1"]])
            value = rec.outcome
        else:
            leftovers.extend(qmap.values())  # a lone member is junk now
        for q in leftovers:
            if eng.sim.live(q):
                eng.free(None, [q])
        return {"tick": t, "value": value}

    def _deduce(self, t):
        fut = self.cands.get(t)
        if fut is None or not fut.resolved:
            return
        value = fut.value["value"]
        del self.cands[t]
        if value in ("D0", "D1"):
            self.respond(self.clicks, value)
            self.clicks += 1


# ---------------------------------------------------------------------------
# Attack III against the two-point protocol
# ---------------------------------------------------------------------------

class AttackIIISide(AdversaryBase):
    """Per-tick round trips with the unmatched-case bookkeeping: when the
    pending point is P0, E1's window at t pairs with E0's window at
    t + 2L/c; E1 pre-executes the pair measurement on E0's future forward
    group instead of waiting, so responses are never delayed (the naive
    variant waits and is exactly 2L/c late on V0's side)."""

    def __init__(self, side, pos, public, supply, adv, naive: bool):
        super().__init__(side, pos, public, supply, adv)
        self.naive = naive
        self.dt = adv.trigger_dt
        geom = public.geom
        self.lag = 2 * geom.point_separation / geom.c
        self.pending = geom.p1_point
        self.p0, self.p1 = geom.p0_point, geom.p1_point
        self.clicks = 0
        self.due: dict[float, list] = {}
        self.cands: dict[tuple, object] = {}
        self.gated: set[tuple] = set()          # keys whose classical gate passed
        self.await_f: dict[float, tuple] = {}   # E1: fwd tick -> cand key

    def start(self):
        self.tick_loop(grid_ceil(self.public.cfg.start_time, self.dt), self.dt)

    # -- messaging ------------------------------------------------------------

    def on_arrival(self, env):
        if env.kind == "challenge_rail":
            self.buffer.append(env.qubits[0])
            return
        if env.kind == "port_outcome":
            meta_t = env.meta["tick"]
            env.open(self.engine.now)
            if self.side == 0 and env.meta["dir"] == "r":
                self.gated.add(("m", meta_t))
            elif self.side == 1 and env.meta["dir"] == "f":
                key = self.await_f.pop(meta_t, None)
                if key is not None:
                    self.gated.add(key)
        elif env.kind == "sinqc_carrier":
            data = env.open(self.engine.now)
            self.cands[data["key"]] = data["fut"]
            self.gated.add(data["key"])
        self._sweep()

    def _sweep(self):
        # finish any read whose light-cone gate has already passed
        for key in list(self.cands):
            if key in self.gated:
                self._deduce(key)

    # -- ticks ------------------------------------------------------------------

    def _drop_buffer(self):
        live = [q for q in self.buffer if self.engine.sim.live(q)]
        if live:
            self.engine.free(None, live)
        self.buffer.clear()

    def on_tick(self, t):
        if self.degraded:
            self._drop_buffer()
            return
        if self.buffer:
            fresh, real = list(self.buffer), True
            self.buffer.clear()
        else:
            fresh, real = [self.engine.alloc(self.name, "0", tag=f"w{t}")], False
        tag = "w0" if self.side == 0 else "w1"
        items = [SlotItem((tag, t), qubit=q) for q in fresh]
        if self.side == 0:
            self._e0_tick(t, items)
        else:
            self._e1_tick(t, items)
        self._sweep()

    def _e0_tick(self, t, items):
        fwd = self.lease(("f", t), "E0", "E1")
        if fwd is None:
            self.engine.free(None, [it.qubit for it in items
                                    if self.engine.sim.live(it.qubit)])
            return
        due = [it for it in self.due.pop(t, [])
               if self.engine.sim.live(it.qubit)]
        payload = items + due
        out = pbt_send(self.engine, self.name, payload, fwd)
        self.send(self.partner, "port_outcome", out,
                  meta={"tick": t, "dir": "f"})
        ret = self.lease(("r", t), "E1", "E0")
        if self.pending == self.p1:
            fut = ret.when_bound(lambda: self._pair_measure(t, ret, t))
            self.cands[("m", t)] = fut
            self.send(self.partner, "sinqc_carrier",
                      {"key": ("m", t), "fut": fut}, meta={"tick": t})
        else:
            ret.when_bound(lambda: self._retain(t, ret))

    def _e1_tick(self, t, items):
        fwd = self.lease(("f", t), "E0", "E1")
        ret = self.lease(("r", t), "E1", "E0")
        if fwd is None or ret is None:
            self.engine.free(None, [it.qubit for it in items
                                    if self.engine.sim.live(it.qubit)])
            return
        payload = list(items)
        if not (self.naive and self.pending == self.p0):
            # the delaying variant holds on to the received ports it will
            # measure at t + 2L/c instead of bouncing them back
            payload = [SlotItem(("f", t), group=fwd)] + payload
        out = pbt_send(self.engine, self.name, payload, ret)
        self.send(self.partner, "port_outcome", out,
                  meta={"tick": t, "dir": "r"})
        if self.pending == self.p0:
            tplus = t + self.lag
            if self.naive:
                self.engine.schedule(tplus, "compute", self.name,
                                     lambda: self._register_c(t, tplus))
            else:
                self._register_c(t, tplus)

    def _register_c(self, t, tplus):
        fwd_future = self.lease(("f", tplus), "E0", "E1")
        if fwd_future is None:
            return
        fut = fwd_future.when_bound(
            lambda: self._pair_measure(t, fwd_future, tplus))
        self.cands[("c", t)] = fut
        self.await_f[tplus] = ("c", t)
        self.send(self.partner, "sinqc_carrier",
                  {"key": ("c", t), "fut": fut}, meta={"tick": t})

    # -- bind-time operations -----------------------------------------------------

    def _pair_measure(self, t, group, upper_tick) -> dict:
        eng = self.engine
        upper = lower = None
        leftovers = []
        for meta, q in group.materialize():
            if not eng.sim.live(q):
                continue
            if meta == ("w0", upper_tick) and upper is None:
                upper = q
            elif meta == ("w1", t) and lower is None:
                lower = q
            else:
                leftovers.append(q)
        value = None
        if upper is not None and lower is not None:
            rec = eng.measure(None, [upper, lower], INTERFERENCE)
            eng.free(None, [upper, lower])
            value = rec.outcome
        else:
            # an unpaired member cannot be matched by anyone later
            leftovers.extend(q for q in (upper, lower) if q is not None)
        for q in leftovers:
            if eng.sim.live(q):
                eng.free(None, [q])
        return {"value": value}

    def _retain(self, t, group) -> None:
        # unmatched case: keep everything for the forward hop at t + 2L/c
        kept = []
        for meta, q in group.materialize():
            if self.engine.sim.live(q):
                kept.append(SlotItem(meta, qubit=q))
        self.due.setdefault(t + self.lag, []).extend(kept)

    # -- deduction ---------------------------------------------------------------

    def _deduce(self, key):
        fut = self.cands.get(key)
        if fut is None or not fut.resolved or key not in self.gated:
            return
        value = fut.value["value"]
        del self.cands[key]
        self.gated.discard(key)
        if value in ("D0", "D1"):
            self.respond(self.clicks, value)
            self.clicks += 1
            self.pending = self.p0 if value == "D0" else self.p1


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def build_adversaries(engine: Engine, supply: EntanglementSupply,
                      public: PublicInfo, adv: AdversaryConfig) -> list:
    """Instantiate the configured strategy as one party per adversary.

    Raises InsufficientKnowledgeError when a strategy refuses the run (the
    harness records that as a non-attack: every round goes unanswered).
    """
    geom, kind = public.geom, public.cfg.kind
    strategy = adv.strategy

    if strategy == "displaced":
        pos = adv.displaced_pos if adv.displaced_pos is not None else geom.e0
        return [DisplacedProver(0, pos, public, supply, adv)]

    positions = (geom.e0, geom.e1)

    def pair(cls, *args, **kw):
        return [cls(0, positions[0], public, supply, adv, *args, **kw),
                cls(1, positions[1], public, supply, adv, *args, **kw)]

    if strategy == "detect":
        if kind == "baseline":
            return pair(InqcAdversary)
        if kind in ("p1", "p3"):
            return pair(WhichWayAdversary)
        return pair(PairByLocalOrderChain)
    if strategy == "inqc":
        if kind != "baseline":
            raise ValueError("the INQC strategy targets the baseline protocol")
        return pair(InqcAdversary)
    if strategy == "relay":
        return pair(RelayAdversary)
    if strategy == "attack_i":
        return [AttackIChain(0, positions[0], public, supply, adv, engine.rng),
                AttackIChain(1, positions[1], public, supply, adv, engine.rng)]
    if strategy == "attack_ii":
        return pair(AttackIIChain)
    if strategy == "sinqc":
        return pair(SinqcInterferenceSide)
    if strategy in ("attack_iii", "attack_iii_naive"):
        return pair(AttackIIISide, strategy.endswith("naive"))
    raise ValueError(f"unknown strategy {strategy!r}")
