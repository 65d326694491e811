from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from hausflow import AdjacencySpec, BaseMetricSpec, GeneratorSet, get_group, run_flow, window
from hausflow.window import required_padding

ORACLE_DIR = Path(__file__).parent / "oracle"
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

X_LINE = [[-1.0], [0.0], [math.sqrt(2.0)]]


def load_oracle(case: str) -> dict:
    return json.loads((ORACLE_DIR / f"{case}.json").read_text(encoding="utf-8"))["values"]


@pytest.fixture(scope="session")
def oracle():
    return load_oracle


@pytest.fixture(scope="session")
def R1():
    return get_group("R1")


@pytest.fixture(scope="session")
def X_line(R1):
    return GeneratorSet.from_elements(R1, X_LINE)


def line_window(R1, X, resolution, bounds=(-2.0, 2.0)):
    pad = required_padding(R1, [bounds], X.elements)
    return window(R1, [bounds], resolution, pad)


def _arctan_flow(R1, X, resolution):
    return run_flow(BaseMetricSpec("arctan_pullback", R1), X, line_window(R1, X, resolution),
                    AdjacencySpec(2), tol=1e-4, max_iter=60)


@pytest.fixture(scope="session")
def arctan_flow(R1, X_line):
    return _arctan_flow(R1, X_line, 201)


@pytest.fixture(scope="session")
def arctan_flow_401(R1, X_line):
    return _arctan_flow(R1, X_line, 401)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
