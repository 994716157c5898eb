import glob
import math
import os
import textwrap

import numpy as np
import pytest

from src.errors import ConfigParse, ModelInvalid
from src.IR.models import ExperimentKind
from src.operators.paulis import Y, Z
from src.parsers.config_parser import ConfigParser, GridSpec, locate_field

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


@pytest.fixture
def parser():
    return ConfigParser()


@pytest.fixture
def write(tmp_path):
    def _write(text: str, name: str = "experiment.toml") -> str:
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return str(path)
    return _write


LEAKAGE = """
    [experiment]
    name = "small"
    kind = "leakage_vs_distance"

    [model]
    sites = 4

    [[model.terms]]
    builder = "heisenberg_edge"
    supports = "edges"

    [observables]
    a = {{ pauli = "X", site = 1 }}
    b = {{ pauli = "Z", sites = {b_sites} }}

    [grid]
    s = {s}
    t = {t}
"""


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(CONFIG_DIR, "*.toml"))))
def test_bundled_configs_validate(parser, path):
    assert parser.validate(path) == []


def test_parse_bundled_leakage_config(parser):
    config = parser.parse(os.path.join(CONFIG_DIR, "heisenberg_chain_n10_leakage.toml"))
    assert config.kind == ExperimentKind.LEAKAGE_VS_DISTANCE
    assert config.model.sites == 10
    assert config.observable("b").sites == list(range(2, 10))
    assert config.grid.b_dt == 0.2
    assert config.bounds.mu == "auto"
    assert config.bounds.v is None


def test_end_before_start_is_a_parse_error(parser, write):
    path = write(LEAKAGE.format(b_sites="[2, 3]", s=0.5, t=0.2))
    with pytest.raises(ConfigParse) as info:
        parser.parse(path)
    assert info.value.field == "grid.t"
    assert info.value.line == 19
    diagnostics = parser.validate(path)
    assert [d.code for d in diagnostics] == ["ConfigParse"]
    assert diagnostics[0].field == "grid.t"


def test_malformed_toml_reports_the_line(parser, write):
    path = write("[experiment]\nname = \"x\"\nkind = = 3\n")
    with pytest.raises(ConfigParse) as info:
        parser.parse(path)
    assert info.value.line == 3


def test_unknown_kind_and_builder(parser, write):
    with pytest.raises(ConfigParse) as info:
        parser.parse(write("[experiment]\nname = \"x\"\nkind = \"nope\"\n"))
    assert info.value.field == "experiment.kind"
    assert info.value.line == 3
    text = LEAKAGE.format(b_sites="[2]", s=0.0, t=0.1).replace("heisenberg_edge", "no_such_builder")
    with pytest.raises(ConfigParse) as info:
        parser.parse(write(text))
    assert info.value.field == "model.terms[0].builder"
    assert info.value.line == 10


def test_missing_observable(parser, write):
    text = LEAKAGE.format(b_sites="[2]", s=0.0, t=0.1).replace('b = { pauli = "Z", sites = [2] }', "")
    with pytest.raises(ConfigParse) as info:
        parser.parse(write(text))
    assert info.value.field == "observables.b"
    assert info.value.line == 13


def test_unknown_observable_vertex(parser, write):
    diagnostics = parser.validate(write(LEAKAGE.format(b_sites="[2, 7]", s=0.0, t=0.1)))
    assert [(d.code, d.field) for d in diagnostics] == [("UnknownVertex", "observables.b")]


def test_unknown_term_vertex(parser, write):
    text = LEAKAGE.format(b_sites="[2]", s=0.0, t=0.1).replace('supports = "edges"', "supports = [[1, 7]]")
    diagnostics = parser.validate(write(text))
    assert [d.code for d in diagnostics] == ["UnknownVertex"]
    assert diagnostics[0].field == "model"


FERMIONIC = """
    [experiment]
    name = "fermions"
    kind = "fermionic_cone"

    [fermion_model]
    sites = 4
    hopping = 1.0

    [observables]
    allow_odd = {allow_odd}
    a = {{ monomials = [{{ factors = [1] }}] }}
    b = {{ number = {b} }}

    [grid]
    t = 0.1
"""


def test_odd_observables_need_the_override(parser, write):
    diagnostics = parser.validate(write(FERMIONIC.format(allow_odd="false", b="[3]")))
    assert [(d.code, d.field) for d in diagnostics] == [("OddParity", "observables.a")]
    assert parser.validate(write(FERMIONIC.format(allow_odd="true", b="[3]"))) == []


def test_fermionic_sites_out_of_range(parser, write):
    diagnostics = parser.validate(write(FERMIONIC.format(allow_odd="true", b="[2, 9]")))
    assert [d.code for d in diagnostics] == ["IndexOutOfRange"]


def test_fermionic_hamiltonian_terms(parser, write):
    path = write("""
        [experiment]
        name = "terms"
        kind = "jw_identity_suite"

        [fermion_model]
        sites = 3

        [[fermion_model.terms]]
        support = [1, 2]
        monomials = [{ factors = [1, -2], coefficient = -1.0 }, { factors = [2, -1], coefficient = -1.0 }]

        [[fermion_model.terms]]
        support = [3]
        monomials = [{ factors = [3] }]
    """)
    config = parser.parse(path)
    assert len(config.fermion_model.terms) == 2
    assert [d.code for d in parser.diagnose(config)] == ["OddParity"]


def test_schedules_and_explicit_matrices(parser, write):
    config = parser.parse(write("""
        [experiment]
        name = "explicit"
        kind = "picture_duality"

        [model]
        sites = 2

        [[model.terms]]
        supports = [[1]]
        hamiltonian = [[0, [0, -1]], [[0, 1], 0]]
        coefficient = 2.0
        schedule = { pieces = [{ start = 0.0, end = 0.5, poly = [1.0] }, { start = 0.5, end = 1.0, poly = [0.0, 2.0] }] }

        [[model.terms]]
        supports = "sites"
        jumps = [[[1, 0], [0, -1]]]
        coefficient = 0.25

        [grid]
        t = 0.4
    """))
    L = config.model.liouvillian()
    hamiltonian, dephasing = L.terms[0], L.terms[1]
    assert np.allclose(hamiltonian.hamiltonian, 2.0 * Y)
    assert hamiltonian.schedule(0.75) == pytest.approx(1.5)
    assert np.allclose(dephasing.jumps[0], 0.5 * Z)
    assert len(L.terms) == 3


def test_grid_times_in_units_of_b():
    grid = GridSpec(s=1.0, b_dt=0.5, b_times=[0.0, 1.0])
    assert grid.end_time(2.0) == pytest.approx(1.25)
    assert grid.time_grid(4.0) == [1.0, 1.25]
    with pytest.raises(ModelInvalid):
        grid.end_time(0.0)
    assert GridSpec(t=3.0).end_time(0.0) == 3.0


def test_intermediate_time_must_lie_inside(parser, write):
    text = LEAKAGE.format(b_sites="[2]", s=0.0, t=0.1).replace("t = 0.1", "t = 0.1\nr = 0.3")
    with pytest.raises(ConfigParse) as info:
        parser.parse(write(text))
    assert info.value.field == "grid.r"


def test_only_chains_resize(parser):
    config = parser.parse(os.path.join(CONFIG_DIR, "trotter_n5.toml"))
    assert config.model.resized(7).graph().hilbert_dim == 2 ** 7
    figure = parser.parse(os.path.join(CONFIG_DIR, "graph_metrics.toml"))
    with pytest.raises(ModelInvalid):
        figure.model.resized(4)


def test_auto_bounds_and_defaults(parser):
    config = parser.parse(os.path.join(CONFIG_DIR, "covariance_cone_n10.toml"))
    assert config.state == "random_product"
    assert config.bounds.M == "auto"
    assert config.bounds.constant == 1.0
    assert math.isclose(config.tolerance, 1e-9)


TWO_TERMS = """
[experiment]
name = "two_terms"
kind = "picture_duality"

[model]
sites = 3

[[model.terms]]
builder = "heisenberg_edge"
supports = "edges"

[[model.terms]]
builder = "dephasing_site"
supports = "sites"
schedule = { pieces = [{ start = 0.2, end = 0.2, poly = [1.0] }] }

[grid]
t = 0.2
"""


def test_field_errors_carry_the_line_of_their_key(parser, write):
    with pytest.raises(ConfigParse) as info:
        parser.parse(write(TWO_TERMS))
    assert info.value.field == "model.terms[1].schedule"
    assert info.value.line == 16
    assert "line 16" in str(info.value)


def test_locate_field_falls_back_to_the_enclosing_table():
    text = "[experiment]\nname = \"x\"\n\n[grid]\ns = 0.0\n"
    assert locate_field(text, "grid.times") == 4
    assert locate_field(text, "grid.s") == 5
    assert locate_field(text, "bounds.mu") is None


def test_repeated_grid_times_are_rejected(parser, write):
    text = LEAKAGE.format(b_sites="[2]", s=0.0, t=0.1)
    text = text.replace("    t = 0.1", "    t = 0.1\n    times = [0.0, 0.1, 0.1]")
    with pytest.raises(ConfigParse) as info:
        parser.parse(write(text))
    assert info.value.field == "grid.times"
    assert info.value.line == 20
