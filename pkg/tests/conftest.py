import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from cvbell.quadrature import DEFAULT_ORDER, QUICK_ORDER, gauss_hermite_rule


@pytest.fixture(scope="session")
def rule():
    return gauss_hermite_rule(DEFAULT_ORDER)


@pytest.fixture(scope="session")
def quick_rule():
    return gauss_hermite_rule(QUICK_ORDER)
