import json
import pathlib
import sys

import numpy as np
import pytest
from hypothesis import settings

HERE = pathlib.Path(__file__).parent
sys.path.insert(0, str(HERE))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

DATA = HERE / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def frozen():
    raw = json.loads((DATA / "oracle_values.json").read_text())
    return {k: float(v) for k, v in raw.items()}


@pytest.fixture
def data_dir():
    return DATA




@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    from mplobpcg import _backend, _kernels_py

    if request.param == "compiled":
        if not _backend.COMPILED:
            pytest.skip("compiled extension not built")
        from mplobpcg import _kernels
        monkeypatch.setattr(_backend, "kernels", _kernels)
    else:
        monkeypatch.setattr(_backend, "kernels", _kernels_py)
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
