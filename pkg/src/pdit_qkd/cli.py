"""CLI interface for pdit-qkd."""

import csv
import io
import json
import tomllib
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError

from pdit_qkd.errors import BudgetExceededError, PditError
from pdit_qkd.models import (
    CurveSpec,
    ExperimentSpec,
    PgmSpec,
    RateSpec,
    SimulateSpec,
    ThresholdSpec,
    VerifyPditSpec,
)
from pdit_qkd.orchestration import (
    Report,
    run_curve,
    run_pgm,
    run_rate,
    run_simulate,
    run_threshold,
    run_verify_pdit,
)


class SpecValidationError(click.ClickException):
    exit_code = 2


class BudgetError(click.ClickException):
    exit_code = 3


@click.group()
def cli():
    """pdit-qkd: key rates and private-state distillation for noisy-processed QKD."""
    pass


def _load_config(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        if path.suffix == ".toml":
            with path.open("rb") as f:
                data = tomllib.load(f)
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise SpecValidationError(f"Cannot read config {path}: {e}")
    if not isinstance(data, dict):
        raise SpecValidationError(f"Config {path} must hold a table of settings")
    return data


def _parse_distribution(value: str | None) -> dict[str, float] | None:
    """"p00,p01,p10,p11" -> distribution fields."""
    if value is None:
        return None
    try:
        parts = [float(x) for x in value.split(",")]
    except ValueError:
        raise SpecValidationError(f"Bad distribution {value!r}; expected four comma-separated rates")
    if len(parts) != 4:
        raise SpecValidationError(f"Bad distribution {value!r}; expected four comma-separated rates")
    return dict(zip(("p00", "p01", "p10", "p11"), parts))


def _merge(base: dict[str, Any], flags: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in flags.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _render(report: Report, fmt: str) -> str:
    if fmt == "csv":
        buffer = io.StringIO()
        fields = sorted({k for row in report.rows for k in row})
        writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(report.rows)
        return buffer.getvalue()
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"


def _execute(
    spec_cls: type[ExperimentSpec],
    runner: Callable[[Any], Report],
    config: Path | None,
    flags: dict[str, Any],
    fmt: str,
    output: Path | None,
) -> None:
    data = _merge(_load_config(config), flags)
    data.pop("command", None)
    try:
        spec = spec_cls.model_validate(data)
        report = runner(spec)
    except ValidationError as e:
        raise SpecValidationError(f"Invalid {spec_cls.__name__}: {e}")
    except BudgetExceededError as e:
        raise BudgetError(f"Budget exceeded: {e}")
    except (PditError, ValueError) as e:
        raise SpecValidationError(str(e))

    text = _render(report, fmt)
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"Report saved: {output}", err=True)


def common_options(f):
    f = click.option(
        "--output", "-o", type=click.Path(path_type=Path), default=None, help="Write the report here"
    )(f)
    f = click.option(
        "--format", "fmt", type=click.Choice(["json", "csv"]), default="json", help="Report format"
    )(f)
    f = click.option(
        "--config",
        "-c",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="JSON or TOML experiment file; flags win over file values",
    )(f)
    return f


def channel_options(f):
    f = click.option(
        "--distribution",
        default=None,
        help="Custom Pauli rates p00,p01,p10,p11 (with --protocol custom)",
    )(f)
    f = click.option("--Q", "Q", type=float, default=None, help="Observed bit-error rate")(f)
    f = click.option(
        "--protocol", type=click.Choice(["bb84", "six-state", "custom"]), default=None
    )(f)
    return f


@cli.command()
@channel_options
@click.option("--q", "q", type=float, default=None, help="Added-noise rate")
@click.option("--optimize-q/--fixed-q", default=None, help="Optimise the added noise")
@common_options
def rate(protocol, Q, distribution, q, optimize_q, config, fmt, output):
    """Asymptotic key rate and its entropy terms."""
    flags = {
        "protocol": protocol,
        "Q": Q,
        "distribution": _parse_distribution(distribution),
        "q": q,
        "optimize_q": optimize_q,
    }
    _execute(RateSpec, run_rate, config, flags, fmt, output)


@cli.command("threshold")
@click.option("--protocol", type=click.Choice(["bb84", "six-state"]), default=None)
@click.option("--q-policy", type=click.Choice(["optimized", "fixed"]), default=None)
@click.option("--q", "q", type=float, default=None, help="Added noise for --q-policy fixed")
@common_options
def threshold_cmd(protocol, q_policy, q, config, fmt, output):
    """Largest Q with a positive key rate."""
    flags = {"protocol": protocol, "q_policy": q_policy, "q": q}
    _execute(ThresholdSpec, run_threshold, config, flags, fmt, output)


@cli.command()
@click.option("--protocol", type=click.Choice(["bb84", "six-state"]), default=None)
@click.option("--Q-start", "Q_start", type=float, default=None)
@click.option("--Q-stop", "Q_stop", type=float, default=None)
@click.option("--points", type=int, default=None)
@click.option("--q-policy", type=click.Choice(["optimized", "fixed"]), default=None)
@click.option("--q", "q", type=float, default=None)
@common_options
def curve(protocol, Q_start, Q_stop, points, q_policy, q, config, fmt, output):
    """Key rate over a grid of Q, for external plotting."""
    flags = {
        "protocol": protocol,
        "Q_start": Q_start,
        "Q_stop": Q_stop,
        "points": points,
        "q_policy": q_policy,
        "q": q,
    }
    _execute(CurveSpec, run_curve, config, flags, fmt, output)


def _code_flags(kind: str | None, checks: int | None) -> dict[str, Any] | None:
    if kind is None and checks is None:
        return None
    return {"kind": kind, "checks": checks}


@cli.command()
@channel_options
@click.option("--n", "n", type=int, default=None, help="Block length")
@click.option("--q", "q", type=float, default=None, help="Added-noise rate")
@click.option("--bit-code", type=click.Choice(["full", "empty", "random"]), default=None)
@click.option("--bit-checks", type=int, default=None)
@click.option("--phase-code", type=click.Choice(["full", "empty", "random"]), default=None)
@click.option("--phase-checks", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Required when a code is random")
@common_options
def simulate(
    protocol, Q, distribution, n, q, bit_code, bit_checks, phase_code, phase_checks, seed, config, fmt, output
):
    """Run the distillation pipeline at small n and certify the key."""
    flags = {
        "protocol": protocol,
        "Q": Q,
        "distribution": _parse_distribution(distribution),
        "n": n,
        "q": q,
        "bit_code": _code_flags(bit_code, bit_checks),
        "phase_code": _code_flags(phase_code, phase_checks),
        "seed": seed,
    }
    _execute(SimulateSpec, run_simulate, config, flags, fmt, output)


@cli.command()
@channel_options
@click.option("--n", "n", type=int, default=None)
@click.option("--q", "q", type=float, default=None)
@click.option("--set-exponent", type=float, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Required")
@click.option("--method", type=click.Choice(["code", "subset"]), default=None)
@click.option("--conditional/--unconditional", default=None, help="Condition priors on bit errors")
@common_options
def pgm(protocol, Q, distribution, n, q, set_exponent, trials, seed, method, conditional, config, fmt, output):
    """PGM decoding error over random phase cosets."""
    flags = {
        "protocol": protocol,
        "Q": Q,
        "distribution": _parse_distribution(distribution),
        "n": n,
        "q": q,
        "set_exponent": set_exponent,
        "trials": trials,
        "seed": seed,
        "method": method,
        "conditional": conditional,
    }
    _execute(PgmSpec, run_pgm, config, flags, fmt, output)


@cli.command("verify-pdit")
@click.option("--key-qubits", type=int, default=None)
@click.option("--shield-qubits", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--perturbation", type=float, default=None, help="Depolarising admixture")
@click.option("--seed", type=int, default=None, help="Required")
@common_options
def verify_pdit(key_qubits, shield_qubits, trials, perturbation, seed, config, fmt, output):
    """Check random private states against the security criterion."""
    flags = {
        "key_qubits": key_qubits,
        "shield_qubits": shield_qubits,
        "trials": trials,
        "perturbation": perturbation,
        "seed": seed,
    }
    _execute(VerifyPditSpec, run_verify_pdit, config, flags, fmt, output)


if __name__ == "__main__":
    cli()
