"""Scenario files, batch execution, aggregation and machine-readable outputs.

A scenario is a TOML file with ``[geometry]``, ``[protocol]``, optional
``[adversary]`` and ``[run]`` sections.  Trials are fully isolated: each
gets its own event loop, statevector, ledger and RNG, with per-trial seeds
derived from the master seed through ``numpy.random.SeedSequence``.
Results JSON carries no wall-clock data, so identical (scenario, seed)
pairs produce byte-identical canonical output.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .adversary import (
    AdversaryConfig,
    PublicInfo,
    build_adversaries,
)
from .protocols import (
    ChallengeScript,
    ConfigError,
    Geometry,
    HonestProver,
    InsufficientKnowledgeError,
    NullProver,
    ProtocolConfig,
    Verdict,
    VerifierPair,
    build_script,
)
from .spacetime import CausalityError, Engine, InvariantViolation
from .teleport import EntanglementLedger, EntanglementSupply

SCHEMA_VERSION = 1


class ScenarioError(ConfigError):
    """Scenario parse/validation failure (CLI exit code 1)."""


@dataclass
class Scenario:
    name: str = "scenario"
    geometry: Geometry = field(default_factory=Geometry)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    adversary: AdversaryConfig | None = None
    trials: int = 20
    seed: int = 1
    qubit_cap: int = 24

    def validate(self) -> None:
        try:
            self.protocol.validate()
            self.geometry.validate(self.protocol.kind, self.adversary is not None)
            if self.adversary is not None:
                self.adversary.validate()
            if self.trials < 1:
                raise ConfigError("need at least one trial")
        except (ConfigError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc

    def canonical(self) -> dict:
        d = {
            "name": self.name,
            "geometry": dataclasses.asdict(self.geometry),
            "protocol": dataclasses.asdict(self.protocol),
            "adversary": dataclasses.asdict(self.adversary) if self.adversary else None,
            "trials": self.trials,
            "seed": self.seed,
            "qubit_cap": self.qubit_cap,
        }
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _build_section(cls, section: dict, context: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in [{context}]")
    return cls(**section)


def scenario_from_dict(data: dict, name: str = "scenario") -> Scenario:
    data = dict(data)
    run = data.pop("run", {})
    sc = Scenario(
        name=data.pop("name", name),
        geometry=_build_section(Geometry, data.pop("geometry", {}), "geometry"),
        protocol=_build_section(ProtocolConfig, data.pop("protocol", {}), "protocol"),
        adversary=(_build_section(AdversaryConfig, data.pop("adversary"), "adversary")
                   if "adversary" in data and data["adversary"] is not None
                   else data.pop("adversary", None)),
        trials=int(run.get("trials", 20)),
        seed=int(run.get("seed", 1)),
        qubit_cap=int(run.get("qubit_cap", 24)),
    )
    if data:
        raise ScenarioError(f"unknown top-level key(s) {sorted(data)}")
    sc.validate()
    return sc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(f"cannot parse scenario {path}: {exc}") from exc
    return scenario_from_dict(data, name=path.stem)


# -- single trial -------------------------------------------------------------


def compute_horizon(cfg: ProtocolConfig, geom: Geometry,
                    script: ChallengeScript) -> float:
    span = (geom.v1 - geom.v0) / geom.c
    if cfg.kind == "p3":
        per_round = 2 * span + 4 * cfg.grid + cfg.min_gap
        return cfg.start_time + cfg.rounds * per_round + 4 * span
    return script.last_meet() + 3 * span + 10 * cfg.grid


@dataclass
class TrialOutcome:
    verdict: Verdict
    ledger: dict
    refused: bool = False


def run_trial(scenario: Scenario, seed, trace: bool = False):
    """One isolated run; returns (TrialOutcome, VerifierPair, Engine)."""
    rng = np.random.default_rng(seed)
    geom, cfg = scenario.geometry, scenario.protocol
    engine = Engine(rng, c=geom.c, qubit_cap=scenario.qubit_cap, trace=trace)
    engine.ledger = EntanglementLedger()
    script = build_script(cfg, geom, rng)
    engine.horizon = compute_horizon(cfg, geom, script)
    vp = VerifierPair(engine, geom, cfg, script)
    refused = False
    if scenario.adversary is None:
        engine.add_party(HonestProver(geom, cfg))
    else:
        engine.add_party(NullProver(geom))
        supply = EntanglementSupply(engine, engine.ledger,
                                    enabled=scenario.adversary.supply_enabled)
        knowledge = "public" if cfg.kind in ("baseline", "public_dt") else "private"
        arrivals = pairing = None
        if cfg.kind == "public_dt":
            arrivals = script.public_arrivals()
            pairing = {sid: r for (_s, _t, sid, r) in arrivals}
        public = PublicInfo(geom, cfg, knowledge, arrivals, pairing,
                            horizon=engine.horizon)
        try:
            adversaries = build_adversaries(engine, supply, public,
                                            scenario.adversary)
        except InsufficientKnowledgeError:
            adversaries = []
            refused = True
        for party in adversaries:
            engine.add_party(party)
            engine.add_tap(party)
        for party in adversaries:
            party.start()
    vp.start()
    engine.run()
    verdict = vp.judge()
    return TrialOutcome(verdict, engine.ledger.snapshot(), refused), vp, engine


# -- batch runs ----------------------------------------------------------------


def run_scenario(scenario: Scenario | str | Path, trials: int | None = None,
                 seed: int | None = None, out_dir: str | Path | None = None) -> dict:
    """Run all trials and build the results document (written if out_dir)."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    if trials is not None or seed is not None:
        scenario = dataclasses.replace(scenario,
                                       trials=trials if trials is not None else scenario.trials,
                                       seed=seed if seed is not None else scenario.seed)
        scenario.validate()
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    children = np.random.SeedSequence(scenario.seed).spawn(scenario.trials)
    per_trial = []
    consumed = useful = 0
    max_late = None
    accepted = 0
    trace_path = None
    for i, child in enumerate(children):
        want_trace = out_dir is not None and i == 0
        outcome, vp, engine = run_trial(scenario, child, trace=want_trace)
        v = outcome.verdict
        accepted += int(v.accept)
        consumed += outcome.ledger["consumed"]
        useful += outcome.ledger["useful"]
        if v.max_lateness is not None:
            max_late = v.max_lateness if max_late is None else max(max_late, v.max_lateness)
        per_trial.append({
            "accept": v.accept,
            "correct_rounds": v.n_correct,
            "timely_rounds": v.n_timely,
            "failure": v.failure_reason,
            "refused": outcome.refused,
        })
        if want_trace:
            trace_path = str(Path(out_dir) / f"{scenario.name}_trace.csv")
            write_trace(engine.trace_rows, trace_path)
    waste = 0.0 if consumed == 0 else 1.0 - useful / consumed
    results = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario.name,
        "scenario_hash": scenario.digest(),
        "protocol": scenario.protocol.kind,
        "strategy": scenario.adversary.strategy if scenario.adversary else "honest",
        "seed": scenario.seed,
        "trials": scenario.trials,
        "rounds": scenario.protocol.rounds,
        "accept_rate": accepted / scenario.trials,
        "per_trial": per_trial,
        "ledger": {"consumed": consumed, "useful": useful,
                   "waste_fraction": waste},
        "timing_summary": {"max_response_lateness": max_late},
        "trace_paths": [trace_path] if trace_path else [],
    }
    if out_dir is not None:
        path = Path(out_dir) / f"{scenario.name}_results.json"
        path.write_text(canonical_json(results))
    return results


def canonical_json(results: dict) -> str:
    return json.dumps(results, sort_keys=True, indent=2) + "\n"


def write_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC)
        writer.writerow(["time", "party", "kind", "detail"])
        for time, party, kind, detail in rows:
            writer.writerow([time, party, kind, detail])


def read_trace(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [(float(t), party, kind, detail)
                for t, party, kind, detail in reader]


# -- reporting ------------------------------------------------------------------


def summarize(results_list: list[dict], fmt: str = "md") -> str:
    """Protocol x strategy matrix of accept rate and waste fraction."""
    if not results_list:
        raise ScenarioError("summarize needs at least one results document")
    versions = {r.get("schema_version") for r in results_list}
    if len(versions) != 1:
        raise ScenarioError(f"mixed results schema versions {sorted(versions)}")
    rows = []
    for r in results_list:
        rows.append((r["protocol"], r["strategy"], r["accept_rate"],
                     r["ledger"]["waste_fraction"], r["trials"]))
    rows.sort()
    header = ["protocol", "strategy", "accept_rate", "waste_fraction", "trials"]
    if fmt == "csv":
        out = [",".join(header)]
        out += [f"{p},{s},{a:.6g},{w:.6g},{n}" for p, s, a, w, n in rows]
        return "\n".join(out) + "\n"
    if fmt == "md":
        out = ["| " + " | ".join(header) + " |",
               "|" + "---|" * len(header)]
        out += [f"| {p} | {s} | {a:.4g} | {w:.4g} | {n} |"
                for p, s, a, w, n in rows]
        return "\n".join(out) + "\n"
    raise ScenarioError(f"unknown format {fmt!r}")


def trace_for_round(results: dict, round_k: int) -> list:
    """Rows of the recorded trace that mention the given round."""
    if not results.get("trace_paths"):
        raise ScenarioError("results carry no trace (run with --out)")
    rows = read_trace(results["trace_paths"][0])
    needle = f"round={round_k}"
    return [row for row in rows if needle in row[3]]
