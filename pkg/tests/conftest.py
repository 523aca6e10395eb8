from __future__ import annotations

import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from resetqec import dem, noise
from resetqec.builders import SchemeSpec, build
from resetqec.layout import memory_patch, stability_patch

FAMILY_SCHEMES = [("standard", "UR"), ("standard", "CR"), ("standard", "NR"),
                  ("spreading", "NR"), ("squeezing", "NR")]


@lru_cache(maxsize=None)
def program(experiment: str, family: str, reset: str, size: int, rounds: int,
            basis: str = "Z", t_res: int = 500):
    if experiment == "memory":
        patch = memory_patch(size, family, basis)
    else:
        patch = stability_patch(size, family)
    return build(patch, SchemeSpec(family, reset, rounds, experiment, t_res))


@lru_cache(maxsize=None)
def noisy(experiment, family, reset, size, rounds, p=1e-3, basis="Z", t_res=500):
    return noise.apply(program(experiment, family, reset, size, rounds, basis, t_res),
                       noise.NoiseModel(p))


@lru_cache(maxsize=None)
def model(experiment, family, reset, size, rounds, p=1e-3, basis="Z", t_res=500):
    return dem.decompose(dem.extract(noisy(experiment, family, reset, size, rounds, p, basis,
                                           t_res)))


@pytest.fixture(params=FAMILY_SCHEMES, ids=lambda fs: f"{fs[0]}-{fs[1]}")
def family_scheme(request):
    return request.param


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
