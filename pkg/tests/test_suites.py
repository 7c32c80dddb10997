from pytest import mark, raises

from horotomo.config import ExperimentConfig
from horotomo.exceptions import UnknownSuite
from horotomo.suites import run_suite, suite_names


def test_suite_names():
    assert suite_names() == [
        "group",
        "zonal",
        "fubini",
        "weighted",
        "fuglede",
        "paths",
        "fractional",
        "recursion",
        "eigen",
        "n2-identity",
    ]


def test_unknown_suite():
    with raises(UnknownSuite):
        run_suite("sorcery", ExperimentConfig(method="validate", suite="sorcery"))


@mark.parametrize("n", [2, 3, 5])
def test_group_suite(n):
    rows = run_suite("group", ExperimentConfig(method="validate", suite="group", n=n, d=1))
    assert [row.probe_id for row in rows] == ["lorentz", "nilpotent", "nak"]
    assert all(row.passed for row in rows)


def test_group_suite_is_seeded():
    config = ExperimentConfig(method="validate", suite="group", seed=7)
    assert run_suite("group", config) == run_suite("group", config)


@mark.parametrize("d", [1, 2])
def test_fractional_suite(d):
    rows = run_suite("fractional", ExperimentConfig(method="validate", suite="fractional", n=3, d=d))
    assert len(rows) == 18
    assert all(row.passed for row in rows)


def test_fuglede_suite():
    config = ExperimentConfig(method="validate", suite="fuglede", n=3, d=1, probes=[0.0, 0.6])
    rows = run_suite("fuglede", config)
    assert len(rows) == 4
    assert all(row.passed for row in rows)


def test_recursion_suite():
    rows = run_suite("recursion", ExperimentConfig(method="validate", suite="recursion", n=3, d=1))
    assert [row.probe_id for row in rows] == ["alpha=2"]
    assert rows[0].passed


@mark.slow
def test_zonal_suite():
    rows = run_suite("zonal", ExperimentConfig(method="validate", suite="zonal"))
    assert len(rows) == 20
    assert all(row.passed for row in rows)


def test_paths_suite():
    config = ExperimentConfig(method="validate", suite="paths", n=3, d=2, probes=[0.3])
    rows = run_suite("paths", config)
    assert len(rows) == 8
    assert all(row.passed for row in rows)
