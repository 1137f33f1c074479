import json
import sys

import pytest

from gridharden.backends import (STATUS_ERROR, STATUS_GAPPED, STATUS_INFEASIBLE,
                                 STATUS_OPTIMAL, BackendConfig, SolveOptions,
                                 bundled_backend, parse_plain_solution, solve,
                                 write_values_file)
from gridharden.model import SENSE_GE, SENSE_LE, MilpModel


def lp_model():
    m = MilpModel("lp")
    m.add_variable("x", 0.0, 10.0)
    m.add_variable("y", 0.0, 10.0)
    m.add_row("need", {"x": 1.0, "y": 1.0}, SENSE_GE, 3.0, "t")
    m.set_objective({"x": 2.0, "y": 3.0})
    return m


def mip_model():
    m = MilpModel("mip")
    m.add_variable("x", 0.0, 10.0)
    m.add_variable("pick", 0.0, 1.0, integer=True)
    m.add_row("link", {"x": 1.0, "pick": -10.0}, SENSE_LE, 0.0, "t")
    m.add_row("need", {"x": 1.0}, SENSE_GE, 2.0, "t")
    m.set_objective({"x": 1.0, "pick": 5.0})
    return m


def test_lp_only_model_is_optimal_gap_zero():
    sol = solve(lp_model(), SolveOptions(mip_gap=0.0))
    assert sol.status == STATUS_OPTIMAL
    assert sol.gap == 0.0
    assert sol.objective == pytest.approx(6.0, abs=1e-9)
    assert sol.values["x"] == pytest.approx(3.0, abs=1e-9)


def test_mip_model_binaries_are_integral():
    sol = solve(mip_model(), SolveOptions(mip_gap=0.0))
    assert sol.status == STATUS_OPTIMAL
    assert sol.values["pick"] == 1.0
    assert sol.objective == pytest.approx(7.0, abs=1e-9)


def test_infeasible_from_contradictory_rows():
    m = MilpModel("bad")
    m.add_variable("x", 0.0, 10.0)
    m.add_row("ge", {"x": 1.0}, SENSE_GE, 1.0, "t")
    m.add_row("le", {"x": 1.0}, SENSE_LE, 0.0, "t")
    m.set_objective({"x": 1.0})
    sol = solve(m)
    assert sol.status == STATUS_INFEASIBLE
    assert sol.values == {}


def test_warm_start_passthrough_recorded():
    sol = solve(mip_model(), SolveOptions(mip_gap=0.0,
                                          warm_start={"pick": 1.0, "x": 2.0,
                                                      "ghost": 1.0}))
    assert sol.status == STATUS_OPTIMAL
    assert sol.stats["warm_start_offered"] is True
    assert sol.stats["warm_start_values"] == 2  # ghost filtered out
    assert sol.stats["warm_start_passed"] is True
    assert "warm start" in sol.stats.get("backend_note", "")


def test_external_backend_config_round_trip(tmp_path):
    cfg = bundled_backend()
    path = tmp_path / "backend.json"
    path.write_text(json.dumps({
        "name": "external-copy",
        "command": cfg.command,
        "args_template": list(cfg.args_template),
        "solution_format": "plain",
    }))
    loaded = BackendConfig.load(path)
    sol = solve(lp_model(), SolveOptions(mip_gap=0.0, backend=loaded))
    assert sol.status == STATUS_OPTIMAL
    assert sol.stats["backend"] == "external-copy"


def test_lying_backend_caught_by_verification(tmp_path):
    # a backend that claims optimality with values violating the rows
    script = tmp_path / "liar.py"
    script.write_text(
        "import sys\n"
        "open(sys.argv[2], 'w').write('# status optimal\\n# objective 0\\n"
        "x 0.0\\ny 0.0\\n')\n")
    liar = BackendConfig(name="liar", command=sys.executable,
                         args_template=(str(script), "{model}", "{solution}"))
    sol = solve(lp_model(), SolveOptions(backend=liar))
    assert sol.status == STATUS_ERROR
    assert "verification" in sol.diagnostics


def test_crashing_backend_reports_error(tmp_path):
    script = tmp_path / "crash.py"
    script.write_text("import sys; sys.exit(7)\n")
    crash = BackendConfig(name="crash", command=sys.executable,
                          args_template=(str(script), "{model}", "{solution}"))
    sol = solve(lp_model(), SolveOptions(backend=crash))
    assert sol.status == STATUS_ERROR
    assert "exited 7" in sol.diagnostics


def test_backend_writing_no_file_reports_error(tmp_path):
    script = tmp_path / "noop.py"
    script.write_text("pass\n")
    noop = BackendConfig(name="noop", command=sys.executable,
                         args_template=(str(script), "{model}", "{solution}"))
    sol = solve(lp_model(), SolveOptions(backend=noop))
    assert sol.status == STATUS_ERROR
    assert "no solution file" in sol.diagnostics


def test_missing_values_default_to_zero_then_verified(tmp_path):
    # omitting a variable defaults it to 0; here that is feasible and optimal
    script = tmp_path / "sparse.py"
    script.write_text(
        "import sys\n"
        "open(sys.argv[2], 'w').write('# status optimal\\nx 3.0\\n')\n")
    sparse = BackendConfig(name="sparse", command=sys.executable,
                           args_template=(str(script), "{model}", "{solution}"))
    sol = solve(lp_model(), SolveOptions(backend=sparse))
    assert sol.status == STATUS_OPTIMAL
    assert sol.values["y"] == 0.0
    assert sol.objective == pytest.approx(6.0)


def test_plain_solution_parser():
    meta, values = parse_plain_solution(
        "# status optimal\n# gap 0.005\n# nodes 12\n\nx 1.5\ny -2.0\n")
    assert meta == {"status": "optimal", "gap": "0.005", "nodes": "12"}
    assert values == {"x": 1.5, "y": -2.0}
    with pytest.raises(ValueError, match="malformed"):
        parse_plain_solution("lonely_token\n")


def test_values_file_round_trip(tmp_path):
    path = tmp_path / "warm.sol"
    write_values_file(path, {"a": 1.0, "b": 0.5}, meta={"status": "hint"})
    meta, values = parse_plain_solution(path.read_text())
    assert values == {"a": 1.0, "b": 0.5}
    assert meta["status"] == "hint"


def test_gapped_status_when_backend_reports_nonzero_gap(tmp_path):
    script = tmp_path / "gapped.py"
    script.write_text(
        "import sys\n"
        "open(sys.argv[2], 'w').write('# status optimal\\n# gap 0.008\\n"
        "x 3.0\\ny 0.0\\n')\n")
    gapped = BackendConfig(name="gapped", command=sys.executable,
                           args_template=(str(script), "{model}", "{solution}"))
    sol = solve(lp_model(), SolveOptions(backend=gapped))
    assert sol.status == STATUS_GAPPED
    assert sol.gap == pytest.approx(0.008)


def test_solve_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(mip_gap=-0.1)
    with pytest.raises(ValueError):
        SolveOptions(time_limit=0.0)
