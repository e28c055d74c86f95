import sys
import os
import json
import numpy as np
import pytest
from click.testing import CliRunner

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli import COMMANDS, EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, JobSpec, cli, parse_spec, run, serialize
from utils import ValidationError

SEMICIRCLE = {"type": "semicircular", "eta": {"identity": True}}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner, tmp_path):
    def _invoke(command, document, *extra):
        path = tmp_path / "job.json"
        path.write_text(json.dumps(document))
        return runner.invoke(cli, [command, "--spec", str(path), *extra])

    return _invoke


class TestParseSpec:
    """Tests for job document validation."""

    def test_minimal(self):
        """Command, guards and inputs are split."""
        job = parse_spec(json.dumps({"command": "moments", "dim": 1, "trunc": 4, "dist": SEMICIRCLE}))
        assert job.command == "moments"
        assert job.trunc == 4
        assert job.option("dist") == SEMICIRCLE
        assert job.seed == 0

    def test_serialize_round_trip(self):
        """serialize inverts parse_spec."""
        document = {"command": "gram", "dim": 2, "trunc": 6, "seed": 9, "L": 1,
                    "dist": {"type": "flip_counterexample", "t": 0.5}}
        job = parse_spec(json.dumps(document))
        assert serialize(job) == document
        assert parse_spec(json.dumps(serialize(job))) == job

    def test_missing_fields_have_paths(self):
        """Each missing field is reported with its JSON path."""
        with pytest.raises(ValidationError) as info:
            parse_spec(json.dumps({"command": "moments", "dim": 1}))
        paths = [path for path, _ in info.value.errors]
        assert "$.trunc" in paths

    def test_command_specific_requirements(self):
        """convolve needs a second distribution."""
        with pytest.raises(ValidationError) as info:
            parse_spec(json.dumps({"command": "convolve", "dim": 1, "trunc": 3, "dist": SEMICIRCLE}))
        assert [path for path, _ in info.value.errors] == ["$.dist2"]

    def test_nested_requirements(self):
        """A semicircle needs its variance map."""
        with pytest.raises(ValidationError) as info:
            parse_spec(json.dumps({"command": "moments", "dim": 1, "trunc": 3, "dist": {"type": "semicircular"}}))
        assert "$.dist.eta" in [path for path, _ in info.value.errors]

    def test_bounds(self):
        """dim and trunc are capped."""
        with pytest.raises(ValidationError) as info:
            parse_spec(json.dumps({"command": "moments", "dim": 4, "trunc": 12, "dist": SEMICIRCLE}))
        paths = {path for path, _ in info.value.errors}
        assert {"$.dim", "$.trunc"} <= paths

    def test_matrix_shapes(self):
        """Matrices must be d x d."""
        document = {"command": "moments", "dim": 2, "trunc": 3,
                    "dist": {"type": "point_mass", "lambda": [[1.0]]}}
        with pytest.raises(ValidationError) as info:
            parse_spec(json.dumps(document))
        assert info.value.errors[0][0] == "$.dist.lambda"

    def test_command_mismatch(self):
        """A document for one command cannot run another."""
        with pytest.raises(ValidationError):
            parse_spec(json.dumps({"command": "gram", "dim": 1, "trunc": 3, "dist": SEMICIRCLE}), "moments")

    def test_bad_json(self):
        """Syntax errors are validation errors."""
        with pytest.raises(ValidationError):
            parse_spec("{not json")

    def test_suite_anchor_accepted(self):
        """verify takes anchor names as well as registry names."""
        job = parse_spec(json.dumps({"command": "verify", "suite": "prop-5.9", "seed": 42, "dim": 2, "trunc": 6}))
        assert job.option("suite") == "prop-5.9"
        with pytest.raises(ValidationError):
            parse_spec(json.dumps({"command": "verify", "suite": "prop-99", "dim": 2, "trunc": 6}))

    def test_burgers_step(self):
        """The difference step must be positive."""
        document = {"command": "burgers", "dim": 1, "trunc": 4, "dist": SEMICIRCLE, "eta": {"scalar": 0.5},
                    "rho": {"scalar": 1.0}, "b": [[[0.0, 2.0]]], "step": 0.0}
        with pytest.raises(ValidationError) as info:
            parse_spec(json.dumps(document))
        assert info.value.errors[0][0] == "$.step"


class TestRun:
    """Tests for the handlers without the click layer."""

    def test_moments_report(self):
        """Semicircle moments at the identity."""
        job = JobSpec("moments", 1, 6, {"dist": SEMICIRCLE})
        report = run(job)
        values = [complex(m[0, 0]) for m in report.payload["moments_at_identity"]]
        assert values == pytest.approx([0, 1, 0, 2, 0, 5])
        assert report.exit_code == EXIT_OK
        assert report.to_dict()["schema"] == 1

    def test_model_check(self):
        """Every flavor agrees with its transform."""
        for flavor in ("boolean", "free", "bbalpha"):
            inputs = {"lambda": [[0.1, 0.0], [0.0, -0.2]], "beta": {"random": {"max_degree": 1}},
                      "flavor": flavor, "alpha": {"scalar": 0.5}}
            report = run(JobSpec("model-check", 2, 3, inputs, seed=3))
            assert report.status == "ok", report.payload


class TestCommands:
    """End-to-end runs through the click group."""

    def test_all_commands_registered(self, runner):
        """Help lists every subcommand."""
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for command in COMMANDS:
            assert command in result.output

    def test_subordinate_help(self, runner):
        """The fixed point is described as a free power."""
        result = runner.invoke(cli, ["subordinate", "--help"])
        assert result.exit_code == 0
        assert "free power" in result.output
        assert "Boolean" not in result.output

    def test_moments_json(self, invoke):
        """JSON output carries the schema version and moments."""
        result = invoke("moments", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE})
        assert result.exit_code == EXIT_OK
        payload = json.loads(result.output)
        assert payload["schema"] == 1
        assert payload["status"] == "ok"
        assert payload["moments_at_identity"][1] == [[[1.0, 0.0]]]

    def test_moments_table(self, invoke):
        """Table rows show M^[n](1, ..., 1)."""
        result = invoke("moments", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE}, "--format", "table")
        assert result.exit_code == EXIT_OK
        assert "moments[4](1..1)" in result.output

    def test_out_file(self, invoke, tmp_path):
        """--out writes the report instead of printing it."""
        target = tmp_path / "report.json"
        result = invoke("cumulants", {"dim": 1, "trunc": 3, "kind": "boolean", "dist": SEMICIRCLE},
                        "--out", str(target))
        assert result.exit_code == EXIT_OK
        assert json.loads(target.read_text())["kind"] == "boolean"

    def test_convolve_and_power(self, invoke):
        """Two semicircles add; the power 2 matches."""
        both = invoke("convolve", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE, "dist2": SEMICIRCLE})
        power = invoke("power", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE, "alpha": {"scalar": 2.0}})
        assert both.exit_code == power.exit_code == EXIT_OK
        pairs = zip(json.loads(both.output)["moments_at_identity"], json.loads(power.output)["moments_at_identity"])
        for left, right in pairs:
            assert np.allclose(left, right)

    def test_bbalpha_and_phi(self, invoke):
        """Both produce moment series."""
        bb = invoke("bbalpha", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE, "alpha": {"scalar": 0.5}})
        assert bb.exit_code == EXIT_OK
        phi = invoke("phi", {"dim": 2, "trunc": 4, "beta": {"random": {"max_degree": 2}}})
        assert phi.exit_code == EXIT_OK
        assert len(json.loads(phi.output)["moments"]) == 4

    def test_verify(self, invoke):
        """A passing suite exits 0 and reports its errors."""
        result = invoke("verify", {"dim": 1, "trunc": 3, "suite": "rb-inverse", "trials": 2}, "--seed", "5")
        assert result.exit_code == EXIT_OK
        payload = json.loads(result.output)
        assert payload["seed"] == 5
        assert payload["pass"] is True

    def test_verify_by_anchor(self, invoke):
        """Suites can be named by anchor; the report names both."""
        result = invoke("verify", {"dim": 2, "trunc": 6, "suite": "prop-6.6", "trials": 2}, "--seed", "1")
        assert result.exit_code == EXIT_OK, result.output
        payload = json.loads(result.output)
        assert payload["suite"] == "bb-powers"
        assert payload["anchor"] == "Prop 6.6"

    def test_gram_counterexample_fails(self, invoke):
        """The flip functional fails its certificate: exit 1."""
        result = invoke("gram", {"dim": 2, "trunc": 6, "dist": {"type": "flip_counterexample"},
                                 "witness": [[1.0, 0.0], [0.0, 0.0]]})
        assert result.exit_code == EXIT_FAIL
        payload = json.loads(result.output)
        assert payload["pass"] is False
        assert payload["witness"][0][0] == [-1.0, 0.0]

    def test_subordinate(self, invoke):
        """Scalar semicircle power through the fixed point."""
        result = invoke("subordinate", {"dim": 1, "trunc": 8, "dist": SEMICIRCLE, "alpha": {"scalar": 2.0},
                                        "b": [[[0.0, 12.0]]], "M": 2.0})
        assert result.exit_code == EXIT_OK, result.output
        assert json.loads(result.output)["iterations"] >= 1

    def test_burgers(self, invoke):
        """Scalar Burgers residual is small."""
        result = invoke("burgers", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE, "eta": {"scalar": 0.5},
                                    "rho": {"scalar": 1.0}, "b": [[[0.0, 2.0]]]})
        assert result.exit_code == EXIT_OK
        assert json.loads(result.output)["residual"] < 1e-6

    def test_burgers_threshold(self, invoke):
        """A coarse step fails the closed form threshold: exit 1."""
        result = invoke("burgers", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE, "eta": {"scalar": 0.5},
                                    "rho": {"scalar": 1.0}, "b": [[[0.0, 2.0]]], "step": 0.25})
        assert result.exit_code == EXIT_FAIL
        payload = json.loads(result.output)
        assert payload["status"] == "fail"
        assert payload["tolerance"] == 1e-6
        assert payload["residual"] > payload["tolerance"]

    def test_validation_exit_code(self, invoke):
        """Invalid documents exit 2 with the path on stderr."""
        result = invoke("moments", {"dim": 1, "dist": SEMICIRCLE})
        assert result.exit_code == EXIT_USAGE
        assert "$.trunc" in result.output

    def test_domain_exit_code(self, invoke):
        """A point below the real axis exits 3."""
        result = invoke("subordinate", {"dim": 1, "trunc": 4, "dist": SEMICIRCLE, "alpha": {"scalar": 2.0},
                                        "b": [[[0.0, -1.0]]]})
        assert result.exit_code == EXIT_NUMERIC

    def test_missing_spec_file(self, runner):
        """--spec must exist."""
        result = runner.invoke(cli, ["moments", "--spec", "/no/such/file.json"])
        assert result.exit_code == 2
