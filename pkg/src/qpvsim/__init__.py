"""Discrete-event simulator for one-dimensional quantum position verification."""

from .qsim import (
    ATOL,
    BELL,
    Basis,
    MeasurementRecord,
    QuantumSim,
    QubitId,
    computational,
)
from .spacetime import (
    CausalityError,
    Engine,
    Future,
    Party,
    PendingFutureError,
    SecureRegion,
    SignalEnvelope,
    arrival_time,
    tick_schedule,
)
from .teleport import (
    EntanglementLedger,
    EntanglementSupply,
    EntanglementUnavailable,
    EprPair,
    PortGroup,
    PortOutcome,
    apply_teleport_correction,
    nested_discard,
    pbt_receive,
    pbt_send,
    teleport_standard,
)
from .optics import (
    BS,
    INTERFERENCE,
    DualRail,
    inject_photon,
    interfere_and_detect,
    vacuum_pair,
    which_way_measure,
)
from .protocols import (
    ConfigError,
    Geometry,
    HonestProver,
    InsufficientKnowledgeError,
    OrderedSignalSeq,
    ProtocolConfig,
    Verdict,
    VerifierPair,
    baseline_round,
    build_script,
    normalize_order,
    protocol_i,
    protocol_ii,
    protocol_iii,
)
from .adversary import AdversaryConfig, PublicInfo, build_adversaries, ledger_report
from .harness import (
    Scenario,
    ScenarioError,
    load_scenario,
    run_scenario,
    run_trial,
    summarize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
