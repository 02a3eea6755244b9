"""Standard and port-based teleportation, both modes, plus the ledger."""

import math

import numpy as np
import pytest

from qpvsim.optics import inject_photon, interfere_and_detect, vacuum_pair, DualRail
from qpvsim.qsim import ATOL, BELL, H, Basis, computational
from qpvsim.spacetime import CausalityError, Engine, Party
from qpvsim.teleport import (
    EntanglementLedger,
    EntanglementSupply,
    EntanglementUnavailable,
    EprPair,
    PortOutcome,
    SlotItem,
    TeleportError,
    apply_teleport_correction,
    nested_discard,
    pbt_receive,
    pbt_send,
    pretty_good_pbt_kraus,
    teleport_standard,
)

import oracles

Z1 = computational(1)
X_BASIS = Basis("x", np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
                ["+", "-"])


def make_engine(seed=11):
    eng = Engine(np.random.default_rng(seed), trace=False)
    eng.ledger = EntanglementLedger()
    eng.add_party(Party("A", 0.0))
    eng.add_party(Party("B", 10.0))
    return eng


def deliver(eng, out, src, dst):
    """Carry a which-port outcome to the counterpart at light speed."""
    eng.send(src, dst, "port_outcome", out)
    eng.run()


def load(eng, qids, vec):
    eng.apply_unitary(None, qids, oracles.prep_unitary(np.asarray(vec)))


class TestStandardTeleport:
    def test_fidelity_one_for_random_states(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            eng = make_engine(int(rng.integers(1 << 30)))
            psi = oracles.haar_state(rng, 1)
            src = eng.alloc("A", "0")
            load(eng, [src], psi)
            pair = EprPair.create(eng, "A", "B")
            bits, dst = teleport_standard(eng, "A", src, pair)
            apply_teleport_correction(eng, "B", dst, bits)
            assert eng.sim.fidelity([dst], psi) == pytest.approx(1.0, abs=1e-9)

    def test_correction_bits_uniform(self):
        # Born oracle gives exactly 1/4 per Bell outcome
        counts = {"00": 0, "01": 0, "10": 0, "11": 0}
        n = 10_000
        eng = make_engine(99)
        for _ in range(n):
            src = eng.alloc("A", "0")
            eng.apply_unitary("A", [src], H)
            pair = EprPair.create(eng, "A", "B")
            bits, dst = teleport_standard(eng, "A", src, pair)
            counts[bits] += 1
            eng.free(None, [dst])
        chi2 = sum((c - n / 4) ** 2 / (n / 4) for c in counts.values())
        assert chi2 < 16.3  # 3 dof, 3-sigma-ish

    def test_rail_coherence_preserved(self):
        # teleport one rail of a split photon, then recombine: still D0
        for seed in range(8):
            eng = make_engine(seed)
            dr = inject_photon(eng, "A", "S0")
            pair = EprPair.create(eng, "A", "B")
            bits, dst = teleport_standard(eng, "A", dr.lower, pair)
            apply_teleport_correction(eng, "B", dst, bits)
            eng.transfer([dr.upper], "B")
            assert interfere_and_detect(eng, "B", DualRail(dr.upper, dst)) == "D0"

    def test_pair_reuse_rejected(self):
        eng = make_engine()
        pair = EprPair.create(eng, "A", "B")
        src = eng.alloc("A", "0")
        teleport_standard(eng, "A", src, pair)
        with pytest.raises(TeleportError):
            teleport_standard(eng, "A", eng.alloc("A", "0"), pair)


class TestIdealPbt:
    def test_exact_transfer_any_input(self):
        rng = np.random.default_rng(4)
        eng = make_engine(8)
        supply = EntanglementSupply(eng, eng.ledger)
        for i in range(50):
            psi = oracles.haar_state(rng, 1)
            src = eng.alloc("A", "0")
            load(eng, [src], psi)
            g = supply.group(("t", i), "A", "B")
            out = pbt_send(eng, "A", [src], g)
            deliver(eng, out, "A", "B")
            kept = pbt_receive(eng, "B", g, out.k)
            assert eng.sim.fidelity(kept, psi) == pytest.approx(1.0, abs=1e-9)
            eng.free(None, kept)

    def test_entanglement_preserving(self):
        # teleporting one Bell half keeps the pair's correlations exact
        eng = make_engine(3)
        supply = EntanglementSupply(eng, eng.ledger)
        a, b = eng.alloc("A", "0"), eng.alloc("A", "0")
        load(eng, [a, b], oracles.BELL_VECS["phi+"])
        g = supply.group("half", "A", "B")
        out = pbt_send(eng, "A", [b], g)
        deliver(eng, out, "A", "B")
        kept = pbt_receive(eng, "B", g, out.k)
        assert eng.sim.fidelity([a, kept[0]], oracles.BELL_VECS["phi+"]) == \
            pytest.approx(1.0, abs=1e-9)

    def test_port_index_uniform_n3(self):
        eng = make_engine(21)
        supply = EntanglementSupply(eng, eng.ledger)
        counts = {1: 0, 2: 0, 3: 0}
        n = 10_000
        for i in range(n):
            src = eng.alloc("A", "1")
            g = supply.group(("u", i), "A", "B", n_ports=3)
            out = pbt_send(eng, "A", [src], g)
            counts[out.k] += 1
            deliver(eng, out, "A", "B")
            kept = pbt_receive(eng, "B", g, out.k)
            assert eng.measure("B", kept, Z1).outcome == "1"
            eng.free(None, kept)
        chi2 = sum((c - n / 3) ** 2 / (n / 3) for c in counts.values())
        assert chi2 < 14.2  # 2 dof, 3-sigma-ish

    def test_vacuum_qubit_teleports_to_zero(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        src = eng.alloc("A", "0")
        g = supply.group("vac", "A", "B")
        out = pbt_send(eng, "A", [src], g)
        deliver(eng, out, "A", "B")
        kept = pbt_receive(eng, "B", g, out.k)
        assert eng.measure("B", kept, Z1).outcome == "0"

    def test_plus_state_round(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        src = eng.alloc("A", "0")
        eng.apply_unitary("A", [src], H)
        g = supply.group("plus", "A", "B")
        out = pbt_send(eng, "A", [src], g)
        deliver(eng, out, "A", "B")
        kept = pbt_receive(eng, "B", g, out.k)
        assert eng.measure("B", kept, X_BASIS).outcome == "+"

    def test_receive_before_outcome_arrival_is_causality_error(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        src = eng.alloc("A", "0")
        g = supply.group("c", "A", "B")
        out = pbt_send(eng, "A", [src], g)
        with pytest.raises(CausalityError):
            pbt_receive(eng, "B", g, out.k)
        eng.send("A", "B", "port_outcome", out)
        eng.run()
        assert pbt_receive(eng, "B", g, out.k)

    def test_port_index_out_of_range(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        src = eng.alloc("A", "0")
        g = supply.group("r", "A", "B", n_ports=2)
        pbt_send(eng, "A", [src], g)
        with pytest.raises(TeleportError):
            pbt_receive(eng, "A", g, 3)

    def test_group_reuse_rejected(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        g = supply.group("once", "A", "B")
        pbt_send(eng, "A", [eng.alloc("A", "0")], g)
        with pytest.raises(TeleportError):
            pbt_send(eng, "A", [eng.alloc("A", "0")], g)

    def test_teleported_vacuum_pair_still_noclick(self):
        # composed channel oracle: ideal transfer of both rails is identity
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        dr = vacuum_pair(eng, "A")
        g = supply.group("vp", "A", "B")
        out = pbt_send(eng, "A", list(dr.qubits), g)
        deliver(eng, out, "A", "B")
        kept = pbt_receive(eng, "B", g, out.k)
        assert interfere_and_detect(eng, "B", DualRail(*kept)) == "NoClick"

    def test_supply_disable(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger, enabled=False)
        with pytest.raises(EntanglementUnavailable):
            supply.group("x", "A", "B")


class TestNestedDiscard:
    def _round_trip(self, seed, n_ports, psi):
        eng = make_engine(seed)
        supply = EntanglementSupply(eng, eng.ledger)
        src = eng.alloc("A", "0")
        load(eng, [src], psi)
        g1 = supply.group("fwd", "A", "B", n_ports=n_ports)
        out1 = pbt_send(eng, "A", [src], g1)
        back = [SlotItem(meta=i, qubit=g1.port_qubits(i)[0])
                for i in range(1, n_ports + 1)]
        g2 = supply.group("ret", "B", "A", n_ports=n_ports)
        out2 = pbt_send(eng, "B", back, g2)
        deliver(eng, out2, "B", "A")
        return eng, g2, out1, out2

    def test_round_trip_recovers_state(self):
        rng = np.random.default_rng(31)
        for n_ports in (1, 2, 3):
            psi = oracles.haar_state(rng, 1)
            eng, g2, out1, out2 = self._round_trip(int(rng.integers(1 << 30)),
                                                   n_ports, psi)
            kept = nested_discard(eng, "A", g2, out2.k, out1.k)
            assert eng.sim.fidelity([kept], psi) == pytest.approx(1.0, abs=1e-9)

    def test_ledger_counts_one_pair_per_direction(self):
        eng, g2, out1, out2 = self._round_trip(7, 1, oracles.KET["+"])
        assert eng.ledger.consumed == 2
        assert [e[1] for e in eng.ledger.events] == [1, 1]

    def test_wrong_inner_port_yields_discard_state(self):
        rng = np.random.default_rng(17)
        fids = []
        for _ in range(60):
            psi = oracles.haar_state(rng, 1)
            eng, g2, out1, out2 = self._round_trip(int(rng.integers(1 << 30)), 2, psi)
            wrong = 1 if out1.k == 2 else 2
            kept = nested_discard(eng, "A", g2, out2.k, wrong)
            fids.append(eng.sim.fidelity([kept], psi))
        assert np.mean(fids) <= 0.75

    def test_receive_path_applies_no_correction_unitary(self):
        # structural: the whole receive path is discards and custody moves
        eng, g2, out1, out2 = self._round_trip(5, 2, oracles.KET["0"])
        import qpvsim.spacetime as st
        calls = []
        orig = Engine.apply_unitary
        try:
            Engine.apply_unitary = lambda self, *a, **k: calls.append(a) or orig(self, *a, **k)
            nested_discard(eng, "A", g2, out2.k, out1.k)
        finally:
            Engine.apply_unitary = orig
        assert calls == []


class TestExactPbt:
    def test_povm_complete(self):
        for n in (1, 2, 3, 4):
            kraus = pretty_good_pbt_kraus(n)
            total = sum(m.conj().T @ m for m in kraus)
            assert np.allclose(total, np.eye(2 ** (n + 1)), atol=1e-8)

    def test_fidelity_monotone_and_below_one(self):
        fids = {n: oracles.exact_pbt_fidelity(n, pretty_good_pbt_kraus(n))
                for n in (1, 2, 3, 4)}
        assert fids[2] < fids[3] < fids[4] < 1.0
        assert fids[1] == pytest.approx(0.25, abs=1e-9)

    def test_simulated_channel_matches_oracle(self):
        # send |1> many times through N=2 exact PBT and compare P(outcome 1)
        n_ports = 2
        kraus = pretty_good_pbt_kraus(n_ports)
        rho = np.outer(oracles.KET["1"], oracles.KET["1"].conj())
        expected = float(np.real(
            oracles.exact_pbt_outputs(n_ports, kraus, rho)[1, 1]))
        eng = make_engine(13)
        supply = EntanglementSupply(eng, eng.ledger)
        n, hits = 400, 0
        for i in range(n):
            g = supply.group(("e", i), "A", "B", n_ports=n_ports, mode="exact")
            src = eng.alloc("A", "1")
            out = pbt_send(eng, "A", [src], g)
            kept = pbt_receive(eng, "A", g, out.k)
            if eng.measure(None, kept, Z1).outcome == "1":
                hits += 1
            eng.free(None, kept)
        sigma = math.sqrt(expected * (1 - expected) / n)
        assert abs(hits / n - expected) < 4 * sigma

    def test_exact_mode_port_cap(self):
        eng = make_engine()
        supply = EntanglementSupply(eng, eng.ledger)
        with pytest.raises(TeleportError):
            supply.group("big", "A", "B", n_ports=5, mode="exact")


class TestLedger:
    def test_monotone_and_conserved(self):
        led = EntanglementLedger()
        led.charge("a", 3, True)
        led.charge("b", 2, False)
        assert led.consumed == 5 and led.useful == 3
        assert led.waste_fraction == pytest.approx(0.4)
        with pytest.raises(ValueError):
            led.charge("c", -1, True)

    def test_zero_consumption_waste(self):
        assert EntanglementLedger().waste_fraction == 0.0
