import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quota_robust import BinaryPrior, validate_model


SYMMETRIC = {
    "states": ["low", "high"],
    "actions": ["a0", "a1"],
    "utility": [[0.0, -1.0], [0.0, 1.0]],
    "prior": [0.5, 0.5],
}


@pytest.fixture
def symmetric_model():
    return validate_model(SYMMETRIC)


@pytest.fixture
def symmetric_prior():
    return BinaryPrior([-1.0, 1.0], [0.5, 0.5])


@pytest.fixture
def model_file(tmp_path):
    def write(raw, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw) if not isinstance(raw, str) else raw)
        return str(path)
    return write


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
