import json
import os
import re
import textwrap

import numpy as np
import pytest

import main
from src.errors import ExperimentFailed, ModelInvalid, ToleranceNotMet
from src.graph.hypergraph import spatial_dimension_constant
from src.graph.lattices import chain
from src.IR.models import Picture
from src.runner import (
    EXIT_INVALID,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VERDICT_FAILED,
    ExperimentRunner,
    RunSettings,
    _open_chain_M,
    exit_code_for,
)
from src.storage.matrix_storage import MatrixStorage
from src.storage.report_storage import CSV_HEADER

NUMBER = re.compile(r"^-?\d\.\d{16}e[+-]\d{2,3}$")

LEAKAGE = """
    [experiment]
    name = "leakage_n6"
    kind = "leakage_vs_distance"
    seed = 1

    [model]
    sites = 6

    [[model.terms]]
    builder = "heisenberg_edge"
    supports = "edges"

    [[model.terms]]
    builder = "dephasing_site"
    supports = "sites"
    coefficient = 0.05

    [observables]
    a = { pauli = "X", site = 1 }
    b = { pauli = "Z", sites = [2, 3, 4, 5, 6] }

    [grid]
    b_dt = 0.2

    [bounds]
    mu = "auto"
    M = "auto"

    [verdict]
    slope_max = %s
    r2_min = 0.0
"""


@pytest.fixture
def write(tmp_path):
    def _write(text: str, name: str = "experiment.toml") -> str:
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def runner(tmp_path):
    return ExperimentRunner(RunSettings(out_dir=str(tmp_path / "reports"), quiet=True, jobs=1))


def _csv_rows(path):
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


def test_leakage_run_writes_reports(runner, write):
    result, paths = runner.run(write(LEAKAGE % "0.0"))
    assert result.passed
    csv_path, summary_path = paths
    rows = _csv_rows(csv_path)
    assert rows[0] == CSV_HEADER
    assert len(rows) == 6
    for row in rows[1:]:
        assert all(NUMBER.match(cell) for cell in row.split(","))
    summary = json.loads(open(summary_path, encoding="utf-8").read())
    assert summary["passed"]
    assert summary["metrics"]["mu"] == 1
    assert summary["metrics"]["M"] == 2.0
    assert summary["reports"][0]["parameters"]["bound"]["source"] == "default"


def test_reports_are_deterministic(tmp_path, write):
    path = write(LEAKAGE % "0.0")
    outputs = []
    for out in ("first", "second"):
        r = ExperimentRunner(RunSettings(out_dir=str(tmp_path / out), quiet=True))
        _, paths = r.run(path)
        outputs.append(open(paths[0], encoding="utf-8").read())
    assert outputs[0] == outputs[1]


def test_failed_verdict_still_writes_reports(runner, write):
    with pytest.raises(ExperimentFailed) as info:
        runner.run(write(LEAKAGE % "-100.0"))
    assert all(os.path.exists(p) for p in info.value.report_paths)
    assert "slope" in str(info.value)


def test_configured_bounds_are_recorded(runner, write):
    text = LEAKAGE.replace('mu = "auto"', 'mu = "auto"\n    v = 50.0\n    C = 4.0')
    result, _ = runner.run(write(text % "0.0"))
    bound = result.reports[0].parameters["bound"]
    assert bound == {"v": 50.0, "C": 4.0, "source": "configured"}


def test_invalid_models_are_rejected_before_running(runner, write):
    text = (LEAKAGE % "0.0").replace("sites = [2, 3, 4, 5, 6]", "sites = [2, 9]")
    with pytest.raises(ModelInvalid):
        runner.run(write(text))


def test_settings_override_seed_and_tolerance(tmp_path, write):
    r = ExperimentRunner(RunSettings(seed=42, tolerance_scale=10.0, quiet=True))
    config = r.load(write(LEAKAGE % "0.0"))
    assert config.seed == 42
    assert config.tolerance == pytest.approx(1e-9)


def test_output_directory_precedence(tmp_path, write, monkeypatch):
    path = write((LEAKAGE % "0.0") + '\n[output]\ndir = "from_config"\n')
    config = ExperimentRunner().load(path)
    monkeypatch.delenv("LOCALITY_OUT_DIR", raising=False)
    assert ExperimentRunner().out_dir(config) == "from_config"
    monkeypatch.setenv("LOCALITY_OUT_DIR", "from_env")
    assert ExperimentRunner().out_dir(config) == "from_env"
    assert ExperimentRunner(RunSettings(out_dir="from_flag")).out_dir(config) == "from_flag"


def test_exit_codes():
    assert exit_code_for(ExperimentFailed("x")) == EXIT_VERDICT_FAILED
    assert exit_code_for(ModelInvalid("x")) == EXIT_INVALID
    assert exit_code_for(ToleranceNotMet("x")) == EXIT_NUMERICAL
    assert exit_code_for(FloatingPointError("x")) == EXIT_NUMERICAL


# --- Experiment kinds on small models ---

def test_truncation_kind(runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "truncation_n6"
        kind = "truncation_vs_buffer"

        [model]
        sites = 6

        [[model.terms]]
        builder = "heisenberg_edge"
        supports = "edges"

        [[model.terms]]
        builder = "dephasing_site"
        supports = "sites"
        coefficient = 0.05

        [observables]
        a = { pauli = "X", site = 3 }

        [grid]
        b_dt = 0.3
        radii = [0, 1]
        full_region = true

        [verdict]
        slope_max = 0.0
    """))
    report = result.reports[0]
    assert report.abscissae[:2] == [1.0, 2.0]
    assert report.verdict["full_region"]


def test_covariance_kind(runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "covariance_n5"
        kind = "covariance_cone"
        seed = 3

        [model]
        sites = 5

        [[model.terms]]
        builder = "heisenberg_edge"
        supports = "edges"

        [[model.terms]]
        builder = "dephasing_site"
        supports = "sites"
        coefficient = 0.05

        [state]
        kind = "random_product"

        [observables]
        a = { pauli = "X", site = 1 }
        b = { pauli = "X", site = 5 }

        [grid]
        b_times = [0.0, 0.05]
    """))
    assert result.reports[0].verdict["initial_zero"]
    assert result.metrics["state"] == "random_product"


def test_trotter_kind_with_control_and_sizes(runner, write):
    result, paths = runner.run(write("""
        [experiment]
        name = "trotter_n3"
        kind = "trotter_order"

        [model]
        sites = 3

        [[model.terms]]
        builder = "heisenberg_edge"
        supports = "edges"

        [[model.terms]]
        builder = "dephasing_site"
        supports = "sites"
        coefficient = 0.1

        [observables]
        a = { staggered = "Z" }
        control = { staggered = "X" }

        [grid]
        b_dt = 1.0
        steps = [8, 16, 32]
        sizes = [3, 4]
        size_steps = 4

        [[grid.control_terms]]
        builder = "ising_edge"
        supports = "edges"

        [[grid.control_terms]]
        builder = "dephasing_site"
        supports = "sites"
        coefficient = 0.1

        [verdict]
        order_min = -3.0
        order_max = 0.0
    """))
    assert result.checks["commuting_control"]
    assert [r.name for r in result.reports] == ["trotter_n3", "trotter_n3_size_growth"]
    assert len(paths) == 3


def test_picture_duality_kind(runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "duality_n3"
        kind = "picture_duality"
        seed = 5

        [model]
        sites = 3

        [[model.terms]]
        builder = "xy_edge"
        supports = "edges"
        schedule = { pieces = [{ start = 0.0, end = 0.05, poly = [1.0] }, { start = 0.05, end = 1.0, poly = [0.5, 2.0] }] }

        [[model.terms]]
        builder = "dephasing_site"
        supports = "sites"
        coefficient = 0.1

        [grid]
        t = 0.1
        pairs = 3
    """))
    assert result.checks["duality"]
    assert result.metrics["pairs"] == 3


def test_composition_adjoint_kind(tmp_path, write):
    r = ExperimentRunner(RunSettings(out_dir=str(tmp_path / "reports"), quiet=True, save_matrices=True))
    result, _ = r.run(write("""
        [experiment]
        name = "composition_n2"
        kind = "composition_adjoint"

        [model]
        sites = 2

        [[model.terms]]
        builder = "heisenberg_edge"
        supports = "edges"
        schedule = { pieces = [{ start = 0.0, end = 0.1, poly = [1.0] }, { start = 0.1, end = 1.0, poly = [0.4] }] }

        [[model.terms]]
        builder = "amplitude_damping_site"
        supports = "sites"
        coefficient = 0.2

        [grid]
        r = 0.1
        t = 0.2
    """))
    assert result.checks == {"composition": True, "adjoint": True, "matches_exact": True}
    assert os.path.exists(tmp_path / "reports" / "matrices" / "composition_n2_T.npy")
    storage = MatrixStorage(str(tmp_path / "reports" / "matrices"))
    saved = storage.load("composition_n2_T")
    assert saved.t == 0.2
    assert saved.picture == Picture.SCHRODINGER
    assert saved.hilbert_dim == 4
    assert np.array_equal(storage.load_raw("composition_n2_T"), saved.matrix)
    with open(tmp_path / "reports" / "matrices" / "composition_n2_T.json", encoding="utf-8") as f:
        sidecar = json.load(f)
    assert sidecar["shape"] == [16, 16]
    assert sidecar["raw_layout"].startswith("row-major")
    assert os.path.getsize(tmp_path / "reports" / "matrices" / "composition_n2_T.bin") == 16 * 16 * 16


def test_cptp_audit_kind(tmp_path, runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "cptp_n2"
        kind = "cptp_audit"
        seed = 7

        [model]
        sites = 2
        site_edges = true

        [grid]
        b_dt = 0.5
        samples = 2
        jumps = 2
    """))
    assert result.checks["transpose_detected"]
    assert result.metrics["transpose_control_eigenvalue"] < 0
    rows = _csv_rows(tmp_path / "reports" / "cptp_n2" / "samples.csv")
    assert rows[0] == "sample,choi_min_eigenvalue,trace_error,t"
    assert len(rows) == 3


def test_jw_identity_suite_kind(runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "jw_small"
        kind = "jw_identity_suite"

        [fermion_model]
        sites = 4
        hopping = 1.0

        [grid]
        max_sites = 3
    """))
    assert result.checks["locality"]
    assert result.metrics["spectrum_sites"] == 4


def test_fermionic_cone_kind(runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "fermions_n5"
        kind = "fermionic_cone"

        [fermion_model]
        sites = 5
        hopping = 1.0

        [observables]
        a = { number = 1 }
        b = { number = [2, 3, 4, 5] }

        [grid]
        b_dt = 0.2

        [verdict]
        slope_max = 0.0
        r2_min = 0.0
    """))
    assert result.reports[0].abscissae == [1.0, 2.0, 3.0, 4.0]


def test_graph_metrics_kind(runner):
    config_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")
    result, _ = runner.run(os.path.join(config_dir, "graph_metrics.toml"))
    assert result.metrics["Z"] == 4
    assert result.metrics["connected"] is False
    assert "M" not in result.metrics
    assert result.checks["chain_12_M"]


def test_graph_metrics_on_square_lattice(runner, write):
    result, _ = runner.run(write("""
        [experiment]
        name = "square_metrics"
        kind = "graph_metrics"

        [model]
        lattice = "square"
        side = 6

        [bounds]
        mu = 2

        [verdict]
        expect_Z = 7
        expect_M = 16
    """))
    assert result.checks["Z"] and result.checks["M"]
    assert result.metrics["connected"] is True


@pytest.mark.parametrize("n", range(2, 10))
def test_chain_sphere_bound_from_bond_indices(n):
    assert _open_chain_M(n) == spatial_dimension_constant(chain(n), 1)
    assert _open_chain_M(n) <= 2.0


# --- Command line ---

def test_cli_validate(write, capsys):
    assert main.main(["validate", "--config", write(LEAKAGE % "0.0")]) == EXIT_OK
    assert "OK" in capsys.readouterr().out
    bad = write((LEAKAGE % "0.0").replace("b_dt = 0.2", "s = 1.0\nt = 0.5"), "bad.toml")
    assert main.main(["validate", "--config", bad]) == EXIT_INVALID
    assert "grid.t" in capsys.readouterr().out


def test_cli_run_exit_codes(tmp_path, write, capsys):
    out = str(tmp_path / "cli")
    assert main.main(["--quiet", "run", "--config", write(LEAKAGE % "0.0"), "--out-dir", out]) == EXIT_OK
    printed = capsys.readouterr().out.split()
    assert printed[-1].endswith("summary.json")
    failing = write(LEAKAGE % "-100.0", "failing.toml")
    assert main.main(["--quiet", "run", "--config", failing, "--out-dir", out]) == EXIT_VERDICT_FAILED
    missing = str(tmp_path / "missing.toml")
    assert main.main(["--quiet", "run", "--config", missing, "--out-dir", out]) == EXIT_INVALID


def test_cli_lists_examples(capsys):
    assert main.main(["list-examples"]) == EXIT_OK
    names = capsys.readouterr().out.split()
    assert "heisenberg_chain_n10_leakage" in names
    assert len(names) == 10
