"""Exact dense statevector simulation over a dynamically growing qubit registry.

This is the pure quantum layer: it knows nothing about time, position or
custody (the event engine in ``spacetime`` adds those).  Internally the
global pure state is kept factored into independent entangled clusters;
every observable quantity is identical to what a single dense vector over
the whole registry would give, but operations only ever touch the clusters
they involve, which keeps protocol runs fast.

All sampling goes through one ``numpy.random.Generator`` owned by the
caller (the event engine passes the run's seeded generator), so a run is
bit-for-bit reproducible from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Repo-wide numeric tolerance.  Every "within tolerance" check in the
#: package refers to this constant unless a caller overrides it.
ATOL = 1e-9

#: Default hard cap on the number of live qubits in one registry.
DEFAULT_QUBIT_CAP = 24


class QsimError(Exception):
    """Base class for quantum-layer errors."""


class ResourceError(QsimError):
    """Raised when allocating past the qubit cap."""


class LivenessError(QsimError):
    """Raised when an operation names a dead, duplicate or foreign qubit."""


class BasisError(QsimError):
    """Raised for incomplete or non-orthonormal measurement bases."""


@dataclass(frozen=True)
class QubitId:
    """Opaque handle for one qubit.  Ids are never reused within a run."""

    uid: int
    tag: str = field(default="", compare=False)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"q{self.uid}" + (f"[{self.tag}]" if self.tag else "")


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of one projective (or Kraus) measurement."""

    outcome: str
    probability: float
    basis: str


# --- gate matrices -------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=atol))


class Basis:
    """An orthonormal measurement basis on k qubits.

    ``matrix`` holds the basis vectors as columns; ``labels[i]`` names the
    outcome associated with column i.
    """

    def __init__(self, name: str, matrix: np.ndarray, labels: Sequence[str]):
        matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0] if matrix.ndim == 2 else 0
        k = int(round(math.log2(dim))) if dim else 0
        if matrix.ndim != 2 or matrix.shape != (dim, dim) or 2**k != dim:
            raise BasisError(f"basis {name}: matrix must be square with 2^k rows")
        if len(labels) != dim:
            raise BasisError(f"basis {name}: need {dim} labels, got {len(labels)}")
        if not is_unitary(matrix):
            raise BasisError(f"basis {name}: vectors not orthonormal/complete")
        self.name = name
        self.matrix = matrix
        self.labels = list(labels)
        self.n_qubits = k

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"Basis({self.name}, k={self.n_qubits})"


def computational(k: int) -> Basis:
    """Z^(x)k basis; outcome labels are big-endian bit strings."""
    labels = [format(i, f"0{k}b") for i in range(2**k)]
    return Basis("computational", np.eye(2**k, dtype=complex), labels)


def _kvec(*amps: complex) -> np.ndarray:
    return np.asarray(amps, dtype=complex)


_S2 = 1 / math.sqrt(2)

PHI_PLUS = _kvec(_S2, 0, 0, _S2)
PHI_MINUS = _kvec(_S2, 0, 0, -_S2)
PSI_PLUS = _kvec(0, _S2, _S2, 0)
PSI_MINUS = _kvec(0, _S2, -_S2, 0)

BELL = Basis(
    "bell",
    np.column_stack([PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS]),
    ["phi+", "phi-", "psi+", "psi-"],
)

Z1 = computational(1)
Z2 = computational(2)


class _Cluster:
    """One entangled factor of the global state: qubit ids + dense tensor."""

    __slots__ = ("ids", "amps")

    def __init__(self, ids: list[QubitId], amps: np.ndarray):
        self.ids = ids
        self.amps = amps  # complex tensor of shape (2,) * len(ids)


class QuantumSim:
    """Registry of live qubits with exact statevector semantics."""

    def __init__(self, rng: np.random.Generator, qubit_cap: int = DEFAULT_QUBIT_CAP,
                 atol: float = ATOL):
        self.rng = rng
        self.qubit_cap = qubit_cap
        self.atol = atol
        self._clusters: dict[int, _Cluster] = {}
        self._home: dict[QubitId, int] = {}
        self._next_uid = 0
        self._next_cid = 0

    # -- registry ---------------------------------------------------------

    @property
    def n_live(self) -> int:
        return len(self._home)

    def live(self, q: QubitId) -> bool:
        return q in self._home

    def live_qubits(self) -> list[QubitId]:
        return list(self._home)

    def alloc(self, initial: str = "0", tag: str = "") -> QubitId:
        """Allocate a fresh qubit in basis state |0> or |1>."""
        if initial not in ("0", "1"):
            raise QsimError(f"initial state must be '0' or '1', got {initial!r}")
        if self.n_live + 1 > self.qubit_cap:
            raise ResourceError(
                f"qubit cap {self.qubit_cap} exceeded ({self.n_live} live)")
        q = QubitId(self._next_uid, tag)
        self._next_uid += 1
        amps = np.zeros(2, dtype=complex)
        amps[int(initial)] = 1.0
        self._new_cluster([q], amps)
        return q

    def copy(self, rng: np.random.Generator | None = None) -> "QuantumSim":
        """Independent deep copy (for exact-enumeration oracles in tests)."""
        other = QuantumSim(rng or self.rng, self.qubit_cap, self.atol)
        other._next_uid = self._next_uid
        other._next_cid = self._next_cid
        for cid, cl in self._clusters.items():
            other._clusters[cid] = _Cluster(list(cl.ids), cl.amps.copy())
        other._home = dict(self._home)
        return other

    # -- internals --------------------------------------------------------

    def _new_cluster(self, ids: list[QubitId], amps: np.ndarray) -> int:
        cid = self._next_cid
        self._next_cid += 1
        self._clusters[cid] = _Cluster(ids, amps)
        for q in ids:
            self._home[q] = cid
        return cid

    def _check_targets(self, targets: Sequence[QubitId]) -> None:
        if len(set(targets)) != len(targets):
            raise LivenessError(f"duplicate targets {targets}")
        for q in targets:
            if q not in self._home:
                raise LivenessError(f"{q} is not live")

    def _merge(self, targets: Sequence[QubitId]) -> _Cluster:
        """Ensure all targets live in one cluster; returns it (mutating)."""
        cids: list[int] = []
        for q in targets:
            cid = self._home[q]
            if cid not in cids:
                cids.append(cid)
        if len(cids) == 1:
            return self._clusters[cids[0]]
        ids: list[QubitId] = []
        amps = np.ones((), dtype=complex)
        for cid in cids:
            cl = self._clusters.pop(cid)
            ids.extend(cl.ids)
            amps = np.tensordot(amps, cl.amps, axes=0)
        new_cid = self._new_cluster(ids, amps)
        return self._clusters[new_cid]

    def _joint_copy(self, targets: Sequence[QubitId]) -> tuple[np.ndarray, list[QubitId]]:
        """Joint amplitudes over all clusters touching targets, without mutation."""
        cids: list[int] = []
        for q in targets:
            cid = self._home[q]
            if cid not in cids:
                cids.append(cid)
        ids: list[QubitId] = []
        amps = np.ones((), dtype=complex)
        for cid in cids:
            cl = self._clusters[cid]
            ids.extend(cl.ids)
            amps = np.tensordot(amps, cl.amps, axes=0)
        return amps, ids

    def _assert_norm(self, amps: np.ndarray) -> None:
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > self.atol:
            raise QsimError(f"state norm drifted to {norm}")

    @staticmethod
    def _front(amps: np.ndarray, ids: list[QubitId],
               targets: Sequence[QubitId]) -> np.ndarray:
        """View with target axes first (in target order), flattened to (2^k, rest)."""
        axes = [ids.index(t) for t in targets]
        k = len(targets)
        moved = np.moveaxis(amps, axes, range(k))
        return moved.reshape(2**k, -1)

    # -- operations -------------------------------------------------------

    def apply_unitary(self, targets: Sequence[QubitId], u: np.ndarray) -> None:
        """Apply a 2^k x 2^k unitary to the k targets (big-endian order)."""
        self._check_targets(targets)
        u = np.asarray(u, dtype=complex)
        k = len(targets)
        if u.shape != (2**k, 2**k):
            raise QsimError(f"unitary shape {u.shape} does not match {k} targets")
        if not is_unitary(u, self.atol):
            raise QsimError("matrix is not unitary within tolerance")
        cl = self._merge(targets)
        axes = [cl.ids.index(t) for t in targets]
        op = u.reshape((2,) * (2 * k))
        cl.amps = np.tensordot(op, cl.amps, (tuple(range(k, 2 * k)), tuple(axes)))
        cl.amps = np.moveaxis(cl.amps, range(k), axes)
        self._assert_norm(cl.amps)

    def born_distribution(self, targets: Sequence[QubitId], basis: Basis) -> dict[str, float]:
        """Exact outcome distribution for measuring targets in basis.

        Does not collapse the state; probabilities sum to 1 within tolerance.
        """
        self._check_targets(targets)
        if basis.n_qubits != len(targets):
            raise BasisError(
                f"basis {basis.name} is on {basis.n_qubits} qubits, got {len(targets)} targets")
        amps, ids = self._joint_copy(targets)
        psi = self._front(amps, ids, targets)
        rotated = basis.matrix.conj().T @ psi
        p = (np.abs(rotated) ** 2).sum(axis=1)
        if abs(p.sum() - 1.0) > 100 * self.atol:
            raise QsimError(f"born probabilities sum to {p.sum()}")
        return {basis.labels[i]: float(p[i]) for i in range(len(p))}

    def project(self, targets: Sequence[QubitId], basis: Basis, index: int) -> float:
        """Collapse targets onto basis vector ``index``; returns its Born probability.

        This is the deterministic branch selector used both by ``measure``
        and by exact-enumeration oracles in the tests.
        """
        self._check_targets(targets)
        if basis.n_qubits != len(targets):
            raise BasisError("basis size mismatch")
        cl = self._merge(targets)
        k = len(targets)
        psi = self._front(cl.amps, cl.ids, targets)
        rotated = basis.matrix.conj().T @ psi
        p = (np.abs(rotated) ** 2).sum(axis=1)
        prob = float(p[index])
        if prob < self.atol**2:
            raise QsimError(
                f"projection onto zero-probability branch {basis.labels[index]}")
        rest_ids = [q for q in cl.ids if q not in targets]
        rest_amps = rotated[index] / math.sqrt(prob)
        # drop the old cluster; targets collapse to the selected basis vector
        cid = self._home[targets[0]]
        del self._clusters[cid]
        for q in cl.ids:
            del self._home[q]
        self._new_cluster(list(targets),
                          basis.matrix[:, index].reshape((2,) * k).copy())
        if rest_ids:
            self._new_cluster(rest_ids, rest_amps.reshape((2,) * len(rest_ids)))
            self._assert_norm(self._clusters[self._home[rest_ids[0]]].amps)
        return prob

    def measure(self, targets: Sequence[QubitId], basis: Basis) -> MeasurementRecord:
        """Projective measurement, sampled per the Born rule from the run RNG."""
        dist = self.born_distribution(targets, basis)
        p = np.array([dist[lbl] for lbl in basis.labels])
        index = int(self.rng.choice(len(p), p=p / p.sum()))
        prob = self.project(targets, basis, index)
        return MeasurementRecord(basis.labels[index], prob, basis.name)

    def measure_kraus(self, targets: Sequence[QubitId], kraus_ops: Sequence[np.ndarray],
                      labels: Sequence[str]) -> MeasurementRecord:
        """Generalized (POVM) measurement given Kraus operators M_i.

        Requires sum_i M_i^dagger M_i = I within tolerance.  Used by the
        exact port-based teleportation mode.
        """
        self._check_targets(targets)
        k = len(targets)
        dim = 2**k
        total = sum(np.asarray(m).conj().T @ np.asarray(m) for m in kraus_ops)
        if not np.allclose(total, np.eye(dim), atol=100 * self.atol):
            raise BasisError("Kraus operators do not form a complete POVM")
        cl = self._merge(targets)
        axes = [cl.ids.index(t) for t in targets]
        moved = np.moveaxis(cl.amps, axes, range(k))
        shape = moved.shape
        psi = moved.reshape(dim, -1)
        cands = [np.asarray(m, dtype=complex) @ psi for m in kraus_ops]
        p = np.array([float((np.abs(c) ** 2).sum()) for c in cands])
        index = int(self.rng.choice(len(p), p=p / p.sum()))
        post = cands[index] / math.sqrt(p[index])
        cl.amps = np.moveaxis(post.reshape(shape), range(k), axes)
        self._assert_norm(cl.amps)
        return MeasurementRecord(str(labels[index]), float(p[index]), "kraus")

    def free(self, targets: Sequence[QubitId]) -> None:
        """Remove qubits from the registry.

        Unmeasured qubits are discarded by measuring in Z and forgetting the
        outcome, which keeps the remaining global state pure and reproduces
        the partial-trace statistics exactly.
        """
        self._check_targets(targets)
        for q in list(targets):
            cid = self._home[q]
            cl = self._clusters[cid]
            if len(cl.ids) > 1:
                self.measure([q], Z1)  # collapse; q becomes its own cluster
                cid = self._home[q]
            del self._clusters[cid]
            del self._home[q]

    # -- diagnostics (used by oracles and tests) ---------------------------

    def density_matrix(self, targets: Sequence[QubitId]) -> np.ndarray:
        """Exact reduced density matrix of the targets (2^k x 2^k)."""
        self._check_targets(targets)
        amps, ids = self._joint_copy(targets)
        psi = self._front(amps, ids, targets)
        return psi @ psi.conj().T

    def fidelity(self, targets: Sequence[QubitId], reference: np.ndarray) -> float:
        """<ref| rho |ref> for the reduced state of the targets."""
        ref = np.asarray(reference, dtype=complex).reshape(-1)
        ref = ref / np.linalg.norm(ref)
        rho = self.density_matrix(targets)
        return float(np.real(ref.conj() @ rho @ ref))

    def cluster_of(self, q: QubitId) -> list[QubitId]:
        """Ids sharing q's entangled factor (diagnostic)."""
        return list(self._clusters[self._home[q]].ids)
