"""
Batch front end: the `ovfree` click group.

Each subcommand reads one JSON job document (--spec FILE), validates it with
a Draft 7 JSON schema plus shape checks, runs the computation and prints a
report as JSON or as an aligned table.

Exit codes: 0 success, 1 verification failure, 2 usage or validation error,
3 domain, numeric, convergence or bounds error.
"""
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import numpy as np
from jsonschema import Draft7Validator

import config
from analytic import UpperHalfPoint, burgers_richardson, cauchy_transform, closed_form, subordination
from balg import LinearMap, PolyLinearMap, random_cp_poly_map
from fock import Flavor, FockOperators, counterexample_distribution, gram_positivity, model_distribution, quadratic_witness
from series import max_difference
from suites import ANCHORS, SUITES, run_suite
from transforms import (BooleanPair, CumulantKind, Distribution, DistributionSpec, bb_alpha, boolean_pair_series, bm_hat,
                        convolution_power, convolve, cumulants, make_distribution, phi, rb_hat_alpha, rm_hat)
from utils import (ArgumentError, BoundsError, ConvergenceError, DomainError, NumericError, ValidationError,
                   configure_logging, decode_matrix, format_complex, format_matrix, get_logger, to_jsonable)

logger = get_logger("cli")

COMMANDS = ("moments", "cumulants", "convolve", "power", "bbalpha", "phi", "verify", "gram", "subordinate",
            "burgers", "model-check")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_COMPLEX = {"oneOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _COMPLEX}}
_LINEAR_MAP = {
    "type": "object",
    "properties": {"matrix": _MATRIX, "kraus": {"type": "array", "items": _MATRIX, "minItems": 1},
                   "scalar": _COMPLEX, "identity": {"type": "boolean"}},
    "minProperties": 1,
    "maxProperties": 1,
}
_WORD_MAP = {
    "type": "object",
    "properties": {
        "layers": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _MATRIX}},
        "random": {"type": "object", "properties": {"max_degree": {"type": "integer", "minimum": 0},
                                                     "ancilla": {"type": "integer", "minimum": 1},
                                                     "scale": {"type": "number", "exclusiveMinimum": 0},
                                                     "bimodule": {"type": "boolean"}},
                   "required": ["max_degree"]},
    },
    "minProperties": 1,
    "maxProperties": 1,
}
_DIST_TYPES = ["point_mass", "semicircular", "cp_free", "cp_boolean", "boolean_pair", "raw_moments",
               "raw_free_cumulants", "raw_boolean_cumulants", "flip_counterexample"]
_DIST = {
    "type": "object",
    "properties": {
        "type": {"enum": _DIST_TYPES},
        "lambda": _MATRIX,
        "center": _MATRIX,
        "eta": _LINEAR_MAP,
        "alpha": _LINEAR_MAP,
        "beta": _WORD_MAP,
        "nu": {"$ref": "#/definitions/dist"},
        "trunc": {"type": "integer", "minimum": 1, "maximum": config.AlgebraConfig.MAX_ORDER},
        "series": {"type": "object", "required": ["dim", "trunc", "terms"]},
        "t": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["type"],
    "allOf": [
        {"if": {"properties": {"type": {"const": kind}}}, "then": {"required": fields}}
        for kind, fields in [("point_mass", ["lambda"]), ("semicircular", ["eta"]), ("cp_free", ["nu", "alpha"]),
                             ("cp_boolean", ["nu", "alpha"]), ("boolean_pair", ["lambda", "beta"]),
                             ("raw_moments", ["series"]), ("raw_free_cumulants", ["series"]),
                             ("raw_boolean_cumulants", ["series"])]
    ],
}

_REQUIRED = {
    "moments": ["dist"],
    "cumulants": ["dist"],
    "convolve": ["dist", "dist2"],
    "power": ["dist", "alpha"],
    "bbalpha": ["dist", "alpha"],
    "phi": ["beta"],
    "verify": ["suite"],
    "gram": ["dist"],
    "subordinate": ["dist", "alpha", "b"],
    "burgers": ["dist", "eta", "rho", "b"],
    "model-check": ["lambda", "beta", "flavor"],
}

JOB_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "dim": {"type": "integer", "minimum": 1, "maximum": config.AlgebraConfig.MAX_DIM},
        "trunc": {"type": "integer", "minimum": 1, "maximum": config.AlgebraConfig.MAX_ORDER},
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "L": {"type": "integer", "minimum": 0},
        "M": {"type": "number", "exclusiveMinimum": 0},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "kind": {"enum": [kind.value for kind in CumulantKind]},
        "flavor": {"enum": [flavor.value for flavor in Flavor]},
        "suite": {"enum": sorted(SUITES) + sorted(ANCHORS)},
        "dist": {"$ref": "#/definitions/dist"},
        "dist2": {"$ref": "#/definitions/dist"},
        "alpha": _LINEAR_MAP,
        "eta": _LINEAR_MAP,
        "rho": _LINEAR_MAP,
        "beta": _WORD_MAP,
        "lambda": _MATRIX,
        "b": _MATRIX,
        "witness": _MATRIX,
    },
    "required": ["command", "dim", "trunc"],
    "definitions": {"dist": _DIST},
}


@dataclass(frozen=True)
class JobSpec:
    """A validated job: the command, its guards and the raw JSON inputs."""

    command: str
    dim: int
    trunc: int
    inputs: Dict[str, Any] = field(default_factory=dict)
    seed: int = config.CLIConfig.DEFAULT_SEED

    def option(self, name, default=None):
        return self.inputs.get(name, default)


def _json_path(parts) -> str:
    path = "$"
    for part in parts:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _schema_errors(document) -> List[Tuple[str, str]]:
    errors = []
    found = Draft7Validator(JOB_SCHEMA).iter_errors(document)
    for error in sorted(found, key=lambda e: [str(part) for part in e.absolute_path]):
        parts = list(error.absolute_path)
        if error.validator == "required":
            parts.append(error.message.split("'")[1])
        errors.append((_json_path(parts), error.message))
    return errors


def _shape_errors(document) -> List[Tuple[str, str]]:
    """Square matrices of the declared dimension."""
    errors = []
    dim = document["dim"]

    def check(value, parts):
        try:
            decode_matrix(value, dim)
        except ArgumentError as exc:
            errors.append((_json_path(parts), str(exc)))

    for name in ("lambda", "b", "witness"):
        if name in document:
            check(document[name], [name])
    for name in ("dist", "dist2"):
        dist = document.get(name, {})
        for key in ("lambda", "center"):
            if key in dist:
                check(dist[key], [name, key])
        if dist.get("type") == "flip_counterexample" and dim != 2:
            errors.append((_json_path(["dim"]), "the flip counterexample lives on M_2"))
    return errors


def parse_spec(text: str, command: Optional[str] = None) -> JobSpec:
    """Parse and validate a job document; raise ValidationError listing every problem."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError([("$", f"invalid JSON: {exc.msg} at line {exc.lineno}")])
    if not isinstance(document, dict):
        raise ValidationError([("$", "job document must be an object")])
    if command is not None:
        if document.get("command", command) != command:
            raise ValidationError([("$.command", f"document is for {document['command']!r}, not {command!r}")])
        document = {**document, "command": command}
    errors = _schema_errors(document)
    if not errors:
        for name in _REQUIRED[document["command"]]:
            if name not in document:
                errors.append((_json_path([name]), f"'{name}' is a required property for {document['command']}"))
        errors += _shape_errors(document)
    if errors:
        raise ValidationError(errors)
    inputs = {key: value for key, value in document.items() if key not in ("command", "dim", "trunc", "seed")}
    return JobSpec(document["command"], document["dim"], document["trunc"], inputs,
                   document.get("seed", config.CLIConfig.DEFAULT_SEED))


def serialize(job: JobSpec) -> Dict[str, Any]:
    """Inverse of parse_spec."""
    return {"command": job.command, "dim": job.dim, "trunc": job.trunc, "seed": job.seed, **job.inputs}


@dataclass
class Report:
    command: str
    status: str
    payload: Dict[str, Any] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.status == "ok" else EXIT_FAIL

    def to_dict(self):
        return {"schema": config.CLIConfig.SCHEMA_VERSION, "command": self.command, "status": self.status,
                **self.payload}


# Input builders
def build_distribution(value, job: JobSpec) -> Distribution:
    if value["type"] == "flip_counterexample":
        return counterexample_distribution(value.get("t", 1.0), job.trunc)
    if value["type"] == "boolean_pair" and "random" in value["beta"]:
        spec = BooleanPair(decode_matrix(value["lambda"], job.dim), build_word_map(value["beta"], job))
        return make_distribution(spec, job.trunc)
    return make_distribution(DistributionSpec.from_json(value, job.dim, job.trunc), job.trunc)


def build_map(value, job: JobSpec) -> LinearMap:
    return LinearMap.from_json(value, job.dim)


def build_word_map(value, job: JobSpec) -> PolyLinearMap:
    if "random" in value:
        options = value["random"]
        rng = np.random.default_rng(job.seed)
        return random_cp_poly_map(job.dim, options["max_degree"], rng, options.get("ancilla", 2),
                                  options.get("scale", 0.5), options.get("bimodule", False))
    return PolyLinearMap.from_json(value, job.dim)


def _series_payload(series, label):
    ones = [np.eye(series.dim)] * (series.trunc - 1)
    return {label: [term.to_json() for term in series.terms],
            f"{label}_at_identity": [term(*ones[:n - 1]) for n, term in enumerate(series.terms, start=1)]}


# Command handlers
def _moments(job):
    mu = build_distribution(job.option("dist"), job)
    return Report(job.command, "ok", _series_payload(mu.moments, "moments"))


def _cumulants(job):
    mu = build_distribution(job.option("dist"), job)
    kind = CumulantKind(job.option("kind", "free"))
    return Report(job.command, "ok", {"kind": kind.value, **_series_payload(cumulants(mu, kind), "cumulants")})


def _convolve(job):
    kind = CumulantKind(job.option("kind", "free"))
    mu = convolve(build_distribution(job.option("dist"), job), build_distribution(job.option("dist2"), job), kind)
    return Report(job.command, "ok", {"kind": kind.value, **_series_payload(mu.moments, "moments")})


def _power(job):
    kind = CumulantKind(job.option("kind", "free"))
    alpha = build_map(job.option("alpha"), job)
    if not alpha.is_cp():
        logger.warning("alpha is not completely positive; the power may leave the positive distributions")
    mu = convolution_power(build_distribution(job.option("dist"), job), alpha, kind)
    return Report(job.command, "ok", {"kind": kind.value, **_series_payload(mu.moments, "moments")})


def _bbalpha(job):
    mu = bb_alpha(build_map(job.option("alpha"), job), build_distribution(job.option("dist"), job))
    return Report(job.command, "ok", _series_payload(mu.moments, "moments"))


def _phi(job):
    mu = phi(build_word_map(job.option("beta"), job), job.trunc)
    return Report(job.command, "ok", _series_payload(mu.moments, "moments"))


def _verify(job):
    result = run_suite(job.option("suite"), job.seed, job.dim, job.trunc, job.option("trials"))
    return Report(job.command, "ok" if result.passed else "fail", result.to_dict())


def _gram(job):
    mu = build_distribution(job.option("dist"), job)
    report = gram_positivity(mu, job.option("L"), job.option("tol"))
    payload = report.to_dict()
    if "witness" in job.inputs:
        payload["witness"] = quadratic_witness(mu, decode_matrix(job.option("witness"), job.dim))
    return Report(job.command, "ok" if report.passed else "fail", payload)


def _subordinate(job):
    mu = build_distribution(job.option("dist"), job)
    alpha = build_map(job.option("alpha"), job)
    point = UpperHalfPoint.of(decode_matrix(job.option("b"), job.dim))
    M = job.option("M")
    result = subordination(mu, alpha, point, job.option("tol"), M=M)
    through_omega, tail_omega = cauchy_transform(mu, result.omega, M)
    direct, tail_direct = cauchy_transform(convolution_power(mu, alpha, CumulantKind.FREE), point, M)
    error = float(np.max(np.abs(through_omega - direct)))
    bound = tail_omega + tail_direct + 1e-8
    payload = {**result.to_dict(), "consistency_error": error, "consistency_bound": bound}
    return Report(job.command, "ok" if error <= bound else "fail", payload)


def _burgers(job):
    mu = build_distribution(job.option("dist"), job)
    report = burgers_richardson(mu, build_map(job.option("eta"), job), build_map(job.option("rho"), job),
                                decode_matrix(job.option("b"), job.dim), job.option("M"), job.option("step"))
    closed = mu.dim == 1 and closed_form(mu) is not None
    default = config.AnalyticConfig.BURGERS_TOL_CLOSED if closed else config.AnalyticConfig.BURGERS_TOL
    tol = job.option("tol", default)
    return Report(job.command, "ok" if report.residual <= tol else "fail", {**report.to_dict(), "tolerance": tol})


def _model_check(job):
    flavor = Flavor(job.option("flavor"))
    lam = decode_matrix(job.option("lambda"), job.dim)
    beta = build_word_map(job.option("beta"), job)
    alpha = build_map(job.option("alpha"), job) if "alpha" in job.inputs else None
    ops = FockOperators(lam, beta, flavor, alpha, max_len=job.trunc)
    model = model_distribution(ops, job.trunc).moments
    series = boolean_pair_series(lam, beta, job.trunc)
    if flavor is Flavor.BOOLEAN:
        expected = bm_hat(series)
    elif flavor is Flavor.FREE:
        expected = rm_hat(series)
    else:
        expected = bm_hat(rb_hat_alpha(ops.alpha, series))
    error = max_difference(model, expected)
    tol = job.option("tol", 1e-9)
    return Report(job.command, "ok" if error <= tol else "fail",
                  {"flavor": flavor.value, "max_error": error, "tolerance": tol})


HELP = {
    "moments": "Moment series of a distribution.",
    "cumulants": "Free or Boolean cumulant series of a distribution.",
    "convolve": "Free or Boolean additive convolution of two distributions.",
    "power": "Convolution power mu^(alpha) for a linear map alpha.",
    "bbalpha": "Interpolating transform BB_alpha(mu).",
    "phi": "Distribution Phi(beta) of a word map.",
    "verify": "Run a randomized identity suite.",
    "gram": "Gram positivity certificate for a distribution.",
    "subordinate": "Subordination fixed point for the free power mu^(alpha).",
    "burgers": "Complex Burgers residual of the variance family.",
    "model-check": "Compare a Fock model with the transform moments.",
}

HANDLERS: Dict[str, Callable[[JobSpec], Report]] = {
    "moments": _moments,
    "cumulants": _cumulants,
    "convolve": _convolve,
    "power": _power,
    "bbalpha": _bbalpha,
    "phi": _phi,
    "verify": _verify,
    "gram": _gram,
    "subordinate": _subordinate,
    "burgers": _burgers,
    "model-check": _model_check,
}


def run(job: JobSpec) -> Report:
    logger.debug("running %s (d=%d, trunc=%d, seed=%d)", job.command, job.dim, job.trunc, job.seed)
    return HANDLERS[job.command](job)


# Rendering
def _table_value(value) -> str:
    if isinstance(value, (complex, np.complexfloating)):
        return format_complex(value)
    if isinstance(value, np.ndarray):
        return format_matrix(value) if value.ndim == 2 else str(value.tolist())
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{config.CLIConfig.TABLE_DIGITS}g}"
    if isinstance(value, list):
        return ", ".join(_table_value(item) for item in value)
    return str(value)


def render(report: Report, fmt: str) -> str:
    payload = report.to_dict()
    if fmt == "json":
        return json.dumps(to_jsonable(payload), sort_keys=True, indent=2)
    rows = []
    for key in sorted(payload):
        value = payload[key]
        if key in ("moments", "cumulants"):
            continue
        if key.endswith("_at_identity"):
            for n, matrix in enumerate(value, start=1):
                rows.append((f"{key[:-len('_at_identity')]}[{n}](1..1)", _table_value(matrix)))
            continue
        rows.append((key, _table_value(value)))
    width = max(len(key) for key, _ in rows)
    return "\n".join(f"{key.ljust(width)}  {value}" for key, value in rows)


def execute(command: str, spec_path: str, seed: Optional[int], out: Optional[str], fmt: str) -> int:
    """Parse, run and emit one job; returns the exit code."""
    try:
        job = parse_spec(Path(spec_path).read_text(), command)
        if seed is not None:
            job = replace(job, seed=seed)
        report = run(job)
    except ValidationError as exc:
        click.echo(str(exc), err=True)
        return EXIT_USAGE
    except ArgumentError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except (DomainError, NumericError, ConvergenceError, BoundsError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_NUMERIC
    text = render(report, fmt)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)
    return report.exit_code


@click.group()
@click.option("--verbose", is_flag=True, help="Debug logging on stderr.")
def cli(verbose):
    """Operator-valued free and Boolean probability engine."""
    config.DEBUG_MODE = verbose
    configure_logging(verbose)


def _make_command(name: str) -> click.Command:
    @click.command(name=name, help=HELP[name])
    @click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False),
                  help="JSON job document.")
    @click.option("--seed", type=int, default=None, help="Override the job seed.")
    @click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report here.")
    @click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json", show_default=True)
    @click.pass_context
    def command(ctx, spec_path, seed, out, fmt):
        ctx.exit(execute(name, spec_path, seed, out, fmt))

    return command


for _name in COMMANDS:
    cli.add_command(_make_command(_name))
