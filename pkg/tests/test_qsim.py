"""Statevector registry: allocation, unitaries, measurement, discards."""

import math

import numpy as np
import pytest

from qpvsim import qsim
from qpvsim.qsim import (
    BELL,
    H,
    X,
    CNOT,
    Basis,
    BasisError,
    LivenessError,
    QuantumSim,
    ResourceError,
    computational,
)

import oracles

Z1 = computational(1)
Z2 = computational(2)


def make_sim(seed=7, cap=24):
    return QuantumSim(np.random.default_rng(seed), qubit_cap=cap)


def load_state(sim, qids, vector):
    """Prepare an arbitrary joint state via a completion unitary."""
    sim.apply_unitary(qids, oracles.prep_unitary(np.asarray(vector)))


class TestAlloc:
    def test_alloc_zero_measures_zero(self):
        sim = make_sim()
        q = sim.alloc("0")
        rec = sim.measure([q], Z1)
        assert rec.outcome == "0" and rec.probability == pytest.approx(1.0)

    def test_alloc_one_measures_one(self):
        sim = make_sim()
        q = sim.alloc("1")
        rec = sim.measure([q], Z1)
        assert rec.outcome == "1" and rec.probability == pytest.approx(1.0)

    def test_cap_is_a_hard_error(self):
        sim = make_sim(cap=24)
        for _ in range(24):
            sim.alloc("0")
        with pytest.raises(ResourceError):
            sim.alloc("0")

    def test_ids_never_reused(self):
        sim = make_sim()
        q1 = sim.alloc("0")
        sim.free([q1])
        q2 = sim.alloc("0")
        assert q1.uid != q2.uid


class TestUnitaries:
    def test_h_squared_is_identity(self):
        sim = make_sim()
        q = sim.alloc("0")
        sim.apply_unitary([q], H)
        sim.apply_unitary([q], H)
        assert sim.fidelity([q], [1, 0]) == pytest.approx(1.0, abs=1e-9)

    def test_x_flips(self):
        sim = make_sim()
        q = sim.alloc("0")
        sim.apply_unitary([q], X)
        assert sim.measure([q], Z1).outcome == "1"

    def test_bell_preparation(self):
        sim = make_sim()
        a, b = sim.alloc("0"), sim.alloc("0")
        sim.apply_unitary([a], H)
        sim.apply_unitary([a, b], CNOT)
        dist = sim.born_distribution([a, b], Z2)
        assert dist["00"] == pytest.approx(0.5, abs=1e-9)
        assert dist["11"] == pytest.approx(0.5, abs=1e-9)
        assert dist["01"] == pytest.approx(0.0, abs=1e-9)

    def test_non_unitary_rejected(self):
        sim = make_sim()
        q = sim.alloc("0")
        with pytest.raises(qsim.QsimError):
            sim.apply_unitary([q], np.array([[1, 0], [0, 2.0]]))

    def test_dead_and_duplicate_targets_rejected(self):
        sim = make_sim()
        q = sim.alloc("0")
        dead = sim.alloc("0")
        sim.free([dead])
        with pytest.raises(LivenessError):
            sim.apply_unitary([dead], X)
        with pytest.raises(LivenessError):
            sim.apply_unitary([q, q], CNOT)


class TestMeasurement:
    def test_bell_measure_eigenstate(self):
        sim = make_sim()
        a, b = sim.alloc("0"), sim.alloc("0")
        sim.apply_unitary([a], H)
        sim.apply_unitary([a, b], CNOT)
        rec = sim.measure([a, b], BELL)
        assert rec.outcome == "phi+" and rec.probability == pytest.approx(1.0)

    def test_bell_state_perfect_correlation(self):
        for seed in range(20):
            sim = make_sim(seed)
            a, b = sim.alloc("0"), sim.alloc("0")
            sim.apply_unitary([a], H)
            sim.apply_unitary([a, b], CNOT)
            ra = sim.measure([a], Z1)
            rb = sim.measure([b], Z1)
            assert ra.outcome == rb.outcome

    def test_plus_state_frequency(self):
        # Born oracle gives exactly 0.5; 3 sigma over 1e4 trials is ~0.015
        sim = make_sim(seed=1234)
        zeros = 0
        n = 10_000
        for _ in range(n):
            q = sim.alloc("0")
            sim.apply_unitary([q], H)
            if sim.measure([q], Z1).outcome == "0":
                zeros += 1
            sim.free([q])
        assert 0.47 <= zeros / n <= 0.53

    def test_incomplete_basis_rejected(self):
        with pytest.raises(BasisError):
            Basis("broken", np.array([[1, 0], [0, 0]], dtype=complex), ["a", "b"])
        sim = make_sim()
        q = sim.alloc("0")
        with pytest.raises(BasisError):
            sim.measure([q], Z2)

    def test_record_probability_matches_born(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            sim = QuantumSim(np.random.default_rng(int(rng.integers(1 << 30))))
            qs = [sim.alloc("0") for _ in range(3)]
            load_state(sim, qs, oracles.haar_state(rng, 3))
            dist = sim.born_distribution([qs[0], qs[2]], Z2)
            rec = sim.measure([qs[0], qs[2]], Z2)
            assert rec.probability == pytest.approx(dist[rec.outcome], abs=1e-12)


class TestBornDistribution:
    def test_basis_state(self):
        sim = make_sim()
        q = sim.alloc("0")
        assert sim.born_distribution([q], Z1) == pytest.approx({"0": 1.0, "1": 0.0})

    def test_completeness_on_random_states(self):
        rng = np.random.default_rng(42)
        sim = make_sim()
        qs = [sim.alloc("0") for _ in range(4)]
        load_state(sim, qs, oracles.haar_state(rng, 4))
        dist = sim.born_distribution(qs[:2], Z2)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)

    def test_matches_independent_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            state = oracles.haar_state(rng, 3)
            sim = make_sim()
            qs = [sim.alloc("0") for _ in range(3)]
            load_state(sim, qs, state)
            dist = sim.born_distribution([qs[1], qs[2]], Z2)
            expected = oracles.born_probs(state, np.eye(4), [1, 2], 3)
            got = np.array([dist[f"{i:02b}"] for i in range(4)])
            np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_no_collapse(self):
        sim = make_sim()
        a, b = sim.alloc("0"), sim.alloc("0")
        sim.apply_unitary([a], H)
        sim.apply_unitary([a, b], CNOT)
        before = sim.born_distribution([a, b], Z2)
        sim.born_distribution([a], Z1)
        after = sim.born_distribution([a, b], Z2)
        assert before == pytest.approx(after, abs=1e-12)


class TestFree:
    def test_free_product_factor_leaves_state(self):
        rng = np.random.default_rng(3)
        psi = oracles.haar_state(rng, 1)
        sim = make_sim()
        q = sim.alloc("0")
        load_state(sim, [q], psi)
        spare = sim.alloc("0")
        sim.free([spare])
        assert sim.fidelity([q], psi) == pytest.approx(1.0, abs=1e-9)

    def test_free_half_of_bell_gives_maximally_mixed(self):
        # oracle: the marginal of a Bell half is I/2 exactly
        counts = {"0": 0, "1": 0}
        for seed in range(200):
            sim = make_sim(seed)
            a, b = sim.alloc("0"), sim.alloc("0")
            sim.apply_unitary([a], H)
            sim.apply_unitary([a, b], CNOT)
            sim.free([a])
            dist = sim.born_distribution([b], Z1)
            # any single branch is definite, but branches are 50/50
            counts[max(dist, key=dist.get)] += 1
        assert abs(counts["0"] - 100) < 50  # 3 sigma ~ 21 over 200 fair flips

    def test_free_dead_id_raises(self):
        sim = make_sim()
        q = sim.alloc("0")
        sim.free([q])
        with pytest.raises(LivenessError):
            sim.free([q])


class TestInvariants:
    def test_norm_preserved_through_random_circuit(self):
        rng = np.random.default_rng(11)
        sim = make_sim()
        qs = [sim.alloc("0") for _ in range(4)]
        for _ in range(30):
            pick = rng.choice(4, size=2, replace=False)
            u = oracles.prep_unitary(oracles.haar_state(rng, 2))
            sim.apply_unitary([qs[pick[0]], qs[pick[1]]], u)
        for cid in sim._clusters.values():
            assert abs(np.linalg.norm(cid.amps) - 1.0) < 1e-9

    def test_born_consistency_chi_square(self):
        # empirical frequencies from measure() match born_distribution at 3 sigma
        rng = np.random.default_rng(77)
        state = oracles.haar_state(rng, 2)
        ref_sim = make_sim()
        qs = [ref_sim.alloc("0") for _ in range(2)]
        load_state(ref_sim, qs, state)
        expect = ref_sim.born_distribution(qs, Z2)
        n = 10_000
        counts = dict.fromkeys(expect, 0)
        sim = QuantumSim(np.random.default_rng(123456))
        for _ in range(n):
            qa, qb = sim.alloc("0"), sim.alloc("0")
            load_state(sim, [qa, qb], state)
            counts[sim.measure([qa, qb], Z2).outcome] += 1
            sim.free([qa, qb])
        chi2 = sum((counts[o] - n * p) ** 2 / (n * p)
                   for o, p in expect.items() if p > 1e-12)
        # 3 dof; 3-sigma-ish bound
        assert chi2 < 16.3

    def test_no_signaling_local_unitary(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            state = oracles.haar_state(rng, 3)
            sim = make_sim()
            qs = [sim.alloc("0") for _ in range(3)]
            load_state(sim, qs, state)
            before = sim.born_distribution([qs[2]], Z1)
            u = oracles.prep_unitary(oracles.haar_state(rng, 2))
            sim.apply_unitary(qs[:2], u)   # local operation on part A
            after = sim.born_distribution([qs[2]], Z1)
            assert before == pytest.approx(after, abs=1e-9)

    def test_no_signaling_local_measurement(self):
        # unconditional distribution on B: sum_a p(a) P(b|a) equals the prior
        rng = np.random.default_rng(22)
        for _ in range(10):
            state = oracles.haar_state(rng, 3)
            sim = make_sim()
            qs = [sim.alloc("0") for _ in range(3)]
            load_state(sim, qs, state)
            prior = sim.born_distribution([qs[2]], Z1)
            mixed = {"0": 0.0, "1": 0.0}
            dist_a = sim.born_distribution(qs[:2], Z2)
            for idx, a_label in enumerate(Z2.labels):
                if dist_a[a_label] < 1e-12:
                    continue
                branch = sim.copy()
                p = branch.project(qs[:2], Z2, idx)
                cond = branch.born_distribution([qs[2]], Z1)
                for o in mixed:
                    mixed[o] += p * cond[o]
            assert mixed == pytest.approx(prior, abs=1e-9)

    def test_measurement_order_independence(self):
        # joint distribution of disjoint measurements is order-free (exact)
        rng = np.random.default_rng(23)
        for _ in range(8):
            state = oracles.haar_state(rng, 4)
            base = make_sim()
            qs = [base.alloc("0") for _ in range(4)]
            load_state(base, qs, state)
            a_set, b_set = qs[:2], qs[2:]

            def joint(first, second, first_basis, second_basis):
                table = {}
                for i, la in enumerate(first_basis.labels):
                    sim1 = base.copy()
                    try:
                        pa = sim1.project(first, first_basis, i)
                    except qsim.QsimError:
                        continue
                    for j, lb in enumerate(second_basis.labels):
                        sim2 = sim1.copy()
                        try:
                            pb = sim2.project(second, second_basis, j)
                        except qsim.QsimError:
                            continue
                        table[(la, lb)] = pa * pb
                return table

            ab = joint(a_set, b_set, Z2, BELL)
            ba = joint(b_set, a_set, BELL, Z2)
            for (la, lb), p in ab.items():
                assert p == pytest.approx(ba.get((lb, la), 0.0), abs=1e-12)


class TestKraus:
    def test_projective_as_kraus(self):
        sim = make_sim()
        q = sim.alloc("0")
        sim.apply_unitary([q], H)
        p0 = np.array([[1, 0], [0, 0]], dtype=complex)
        p1 = np.array([[0, 0], [0, 1]], dtype=complex)
        rec = sim.measure_kraus([q], [p0, p1], ["0", "1"])
        assert rec.probability == pytest.approx(0.5, abs=1e-9)

    def test_incomplete_kraus_rejected(self):
        sim = make_sim()
        q = sim.alloc("0")
        p0 = np.array([[1, 0], [0, 0]], dtype=complex)
        with pytest.raises(BasisError):
            sim.measure_kraus([q], [p0], ["0"])
