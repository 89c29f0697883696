import numpy as np
import pytest

from uniqcert import cases, features
from uniqcert.grid import MultiIndex


def oracle_columns(case, labels, counts=None):
    """Evaluate feature labels (e.g. 'u*u_x', 'u_x^2', '1') on exact derivatives."""
    fld = cases.sample(case, counts)
    tt, xx = np.meshgrid(fld.axes[0].coords(), fld.axes[1].coords(), indexing="ij")
    cols = []
    for label in labels:
        col = np.ones(tt.size)
        for factor in label.split("*"):
            name, _, power = factor.partition("^")
            p = int(power) if power else 1
            if name == "1":
                vals = np.ones(tt.size)
            else:
                idx = features.parse_input_token(name)
                vals = case.derivative_fn(idx, tt, xx).reshape(-1)
            col = col * vals**p
        cols.append(col)
    return np.stack(cols, axis=1)


def oracle_rms_residual(case, annihilator, counts=(100, 150)):
    """RMS of the relation on exact derivatives, relative to the largest column."""
    m = oracle_columns(case, annihilator.labels, counts)
    c = np.array(annihilator.coefficients)
    scale = float(np.max(np.linalg.norm(m, axis=0)) / np.sqrt(m.shape[0]))
    return float(np.sqrt(np.mean((m @ c) ** 2))) / scale


@pytest.fixture(scope="session")
def transport_field():
    return cases.sample(cases.make_case("transport_exp", {"a": 3.0}))


@pytest.fixture(scope="session")
def linear_growth_field():
    return cases.sample(cases.make_case("linear_growth", {"a": 1.0, "b": 2.0}))


@pytest.fixture(scope="session")
def kdv_field():
    return cases.sample(cases.make_case("kdv_soliton", {"a": 0.0, "c": 1.0}))


@pytest.fixture(scope="session")
def sine_field():
    return cases.sample(cases.make_case("sine_wave", {}))


U = MultiIndex(0, (0,))
UX = MultiIndex(0, (1,))
UXX = MultiIndex(0, (2,))
UXXX = MultiIndex(0, (3,))
UT = MultiIndex(1, (0,))
