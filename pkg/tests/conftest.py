import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def tiny_state():
    """8x8 lid-driven cavity state, single/col, for plumbing tests."""
    from lb2d import cases
    from lb2d.fields import Layout, Precision
    spec = cases.CaseSpec("ldc", 8, 8, re=10.0, u0=0.05)
    return cases.init(spec, Precision.SINGLE, Layout.COL)
