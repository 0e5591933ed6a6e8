import pytest

from holderlab.spectral import GridSpec


@pytest.fixture
def grid16():
    return GridSpec(16)


@pytest.fixture
def grid32():
    return GridSpec(32)


# Reduced parameter sets, one per experiment, for fast CLI runs.
SMALL_PARAMS = {
    "gen-field": {"n": "64", "octaves": "3", "pairs": "256"},
    "mollify-scan": {"n": "32", "octaves": "4", "delta_exponents": "2, 3, 4, 5", "seeds": "2", "quadrature_points": "24"},
    "fraclap-check": {"n": "16", "kmax": "3", "image_shells": "1", "shell_doubling": "false", "eigen_count": "4"},
    "commutator-check": {"pairs": "10"},
    "pressure-scan": {"n": "64", "octaves": "3", "seeds": "2", "pairs": "256"},
    "extend-check": {
        "n": "16", "octaves": "2", "seeds": "1", "pairs": "256", "oracle_points": "2",
        "oracle_radial_nodes": "12", "oracle_polar_nodes": "8", "oracle_radius": "3",
    },
    "simulate": {"n": "16", "dt": "1e-2", "t_end": "0.05"},
    "energy-scan": {"n": "16", "dt": "1e-2", "t_end": "0.1", "seeds": "2"},
    "identity-check": {"n": "16", "dt_ladder": "4e-3, 2e-3", "t_end": "0.02", "delta_cells": "4", "flux": "false"},
    "decomposition-check": {"n": "16", "delta_cells": "4"},
}


def write_config(path, experiment, params, acceptance=None, seed=None):
    lines = ["[experiment]", f"name = {experiment}"]
    if seed is not None:
        lines.append(f"seed = {seed}")
    lines += ["", "[parameters]"] + [f"{k} = {v}" for k, v in params.items()]
    if acceptance:
        lines += ["", "[acceptance]"] + [f"{k} = {v}" for k, v in acceptance.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


_CRITERIA = []


@pytest.fixture
def record():
    """Log one PASS/FAIL line per acceptance criterion; echoed in the terminal summary."""

    def _record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
