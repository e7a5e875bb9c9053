import numpy as np
import pytest

from featattn.data import default_schema
from featattn.model import ModelConfig, init_params
from featattn.numerics import RandomSource

# criterion id -> (description, outcome) collected by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


@pytest.fixture
def schema():
    return default_schema()


@pytest.fixture
def default_params(schema):
    return init_params(schema, ModelConfig(), RandomSource(0))


def random_scaled_values(schema, n, rng):
    """Standardized-looking feature rows with valid codes for every discrete column."""
    out = np.empty((n, len(schema)))
    for j, f in enumerate(schema.features):
        if f.kind == "numerical":
            out[:, j] = rng.gaussian(0.0, 1.0, size=n)
        else:
            out[:, j] = rng.integers(0, f.cardinality, size=n)
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        text, outcome = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"criterion {cid}: {outcome}  {text}")
