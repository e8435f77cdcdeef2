"""Shared test configuration.

Reference values in the suite come from two kinds of oracle: independent
high-precision evaluation with mpmath (set to 40 digits here, well beyond
binary64), and frozen measurements of the shipped default configuration.
Frozen numbers are written out as literals next to the assertion that uses
them so a failing test shows the expectation without indirection.
"""

import mpmath
import pytest

mpmath.mp.dps = 40


@pytest.fixture(scope="session")
def rule():
    from biharm.quad import DEFAULT_RULE

    return DEFAULT_RULE
