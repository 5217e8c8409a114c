"""Experiment runners shared by the CLI: one per command, each returning a Report."""

import time
from contextlib import contextmanager
from typing import Any

import numpy as np
from pydantic import BaseModel

from pdit_qkd.config import logger
from pdit_qkd.models import (
    CurveSpec,
    DistillationReport,
    ExperimentSpec,
    PditTrial,
    PditVerification,
    PgmSpec,
    RateInput,
    RateSpec,
    SimulateSpec,
    ThresholdSpec,
    VerifyPditSpec,
)
from pdit_qkd.quantum.states import DensityOperator
from pdit_qkd.services import (
    end_to_end,
    key_rate,
    key_security_distance,
    model_to_distribution,
    optimize_q,
    random_coset_error,
    rate_curve,
    threshold,
    twist,
    verify_private_state,
)
from pdit_qkd.services.pstate import (
    maximally_entangled,
    random_density_operator,
    random_twisting_operator,
)
from pdit_qkd.utils.seeding import trial_generators


@contextmanager
def log_time(operation: str):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    logger.debug(f"{operation}: {elapsed:.2f}s")


class Report(BaseModel):
    """Command output: the resolved spec, the result, and flat rows for CSV."""

    command: str
    spec: dict[str, Any]
    result: dict[str, Any] | list[dict[str, Any]]
    rows: list[dict[str, Any]]

    def to_json_dict(self) -> dict[str, Any]:
        return {"command": self.command, "spec": self.spec, "result": self.result}


def _flatten(record: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple)):
            flat.update(_flatten({str(i): v for i, v in enumerate(value)}, f"{name}."))
        else:
            flat[name] = value
    return flat


def _report(spec: ExperimentSpec, result: BaseModel | list[BaseModel]) -> Report:
    if isinstance(result, list):
        dumped = [r.model_dump(mode="json") for r in result]
        rows = [_flatten(r) for r in dumped]
    else:
        dumped = result.model_dump(mode="json")
        rows = [_flatten(dumped)]
    return Report(command=spec.command, spec=spec.model_dump(mode="json"), result=dumped, rows=rows)


def run_rate(spec: RateSpec) -> Report:
    d = model_to_distribution(spec.model())
    with log_time("rate"):
        if spec.optimize_q:
            result = optimize_q(d).result
        else:
            result = key_rate(RateInput(distribution=d, q=spec.q))
    return _report(spec, result)


def run_threshold(spec: ThresholdSpec) -> Report:
    with log_time(f"threshold {spec.protocol}"):
        result = threshold(spec.protocol, spec.q_policy, spec.q)
    return _report(spec, result)


def run_curve(spec: CurveSpec) -> Report:
    with log_time(f"curve {spec.protocol}"):
        rows = rate_curve(spec.protocol, spec.grid(), spec.q_policy, spec.q)
    return _report(spec, rows)


def run_simulate(spec: SimulateSpec) -> Report:
    with log_time(f"simulate n={spec.n}"):
        run = end_to_end(
            spec.n,
            spec.model(),
            spec.q,
            bit_code=spec.bit_code,
            phase_code=spec.phase_code,
            seed=spec.seed,
        )
    outcome = run.outcome
    report = DistillationReport(
        n=spec.n,
        q=spec.q,
        distribution=run.distribution,
        bit_checks=run.bit_code.k,
        phase_checks=run.phase_code.k,
        cosets=run.cosets,
        fidelity=outcome.fidelity,
        epsilon=outcome.epsilon,
        average_error=outcome.average_error,
        explicit=run.explicit,
        fidelity_explicit=outcome.fidelity_explicit,
        untwisted_distance=outcome.untwisted_distance,
        key_security_distance=run.key_security_distance,
    )
    return _report(spec, report)


def run_pgm(spec: PgmSpec) -> Report:
    d = model_to_distribution(spec.model())
    with log_time(f"pgm n={spec.n} trials={spec.trials}"):
        stats = random_coset_error(
            spec.n,
            spec.q,
            d,
            spec.set_exponent,
            spec.trials,
            spec.seed,
            method=spec.method,
            conditional=spec.conditional,
        )
    return _report(spec, stats)


def _shield_registers(qubits: int) -> tuple[tuple[str, int], ...]:
    if qubits == 1:
        return (("A'", 1),)
    return (("A'", qubits - qubits // 2), ("B'", qubits // 2))


def run_verify_pdit(spec: VerifyPditSpec) -> Report:
    """Random twists of Phi_d (x) rho, optionally depolarised, with their certificates."""
    shield_regs = _shield_registers(spec.shield_qubits)
    phi = maximally_entangled(spec.key_qubits).density()
    trials = []
    with log_time(f"verify-pdit trials={spec.trials}"):
        for i, rng in enumerate(trial_generators(spec.seed, spec.trials)):
            t = random_twisting_operator(spec.key_qubits, shield_regs, rng)
            shield = random_density_operator(shield_regs, rng)
            gamma = twist(phi, shield, t).gamma
            if spec.perturbation > 0.0:
                mixed = np.eye(gamma.dimension) / gamma.dimension
                gamma = DensityOperator(
                    (1.0 - spec.perturbation) * gamma.matrix + spec.perturbation * mixed,
                    gamma.registers,
                )
            fidelity, epsilon = verify_private_state(gamma, t.inverse().global_operator())
            trials.append(
                PditTrial(
                    trial=i,
                    key_security_distance=key_security_distance(gamma),
                    fidelity=fidelity,
                    epsilon=epsilon,
                )
            )
    verification = PditVerification(
        key_qubits=spec.key_qubits,
        shield_qubits=spec.shield_qubits,
        perturbation=spec.perturbation,
        seed=spec.seed,
        max_key_security_distance=max(t.key_security_distance for t in trials),
        min_fidelity=min(t.fidelity for t in trials),
        trials=trials,
    )
    report = _report(spec, verification)
    report.rows = [_flatten(t.model_dump(mode="json")) for t in trials]
    return report
