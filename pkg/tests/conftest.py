import json
from importlib import resources

import pytest

from scamap.library import load_library, parse_library
from scamap.netlist import parse_netlist

DATA = resources.files("scamap.data")


def fixture_text(kind, name):
    return DATA.joinpath(kind, name).read_text()


def fixture_design(name):
    return parse_netlist(fixture_text("netlists", f"{name}.net"))


def make_library(cells, name="t", require_sequential=False):
    doc = {"name": name, "node_label": "test", "cells": []}
    for c in cells:
        d = {"ds": 1, "cap": 1.0, "area": 1.0, "sequential": False}
        d.update(c)
        d.setdefault("output", "Z")
        doc["cells"].append(d)
    return parse_library(json.dumps(doc), require_sequential=require_sequential)


# INV, AND2, OR2 only: XOR has no direct match here
AOI_CELLS = [
    {"name": "INV_X1", "inputs": ["A"], "function": "!A", "cap": 0.5},
    {"name": "AND2_X1", "inputs": ["A", "B"], "function": "A&B"},
    {"name": "OR2_X1", "inputs": ["A", "B"], "function": "A|B"},
]


@pytest.fixture(scope="session")
def lib65():
    return load_library("fixture-65")


@pytest.fixture(scope="session")
def lib15():
    return load_library("fixture-15")


@pytest.fixture(scope="session")
def aoi_lib():
    return make_library(AOI_CELLS)


@pytest.fixture(scope="session")
def half_adder():
    return fixture_design("half_adder")


@pytest.fixture(scope="session")
def present_sbox():
    return fixture_design("present_sbox")


@pytest.fixture(scope="session")
def ps_config():
    from scamap.flow import load_config

    return load_config("present_sbox")


@pytest.fixture(scope="session")
def ps_synth(ps_config):
    from scamap.flow import synthesize

    cfg = ps_config
    return synthesize(cfg.load_design(), cfg.load_library(), cfg.load_annotations(), cfg.weights, cfg.sa,
                      cfg.mode, cfg.fanout_threshold)


@pytest.fixture(scope="session")
def aes_synth():
    from scamap.flow import load_config, synthesize

    cfg = load_config("aes_sbox")
    return synthesize(cfg.load_design(), cfg.load_library(), cfg.load_annotations(), cfg.weights, cfg.sa,
                      cfg.mode, cfg.fanout_threshold)


ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""
    def _record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
