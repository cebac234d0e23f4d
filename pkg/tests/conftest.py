import random

import pytest
import sympy
from hypothesis import settings

from wavebea.symcore import Context, to_text

settings.register_profile("wavebea", max_examples=40, deadline=None)
settings.load_profile("wavebea")


def to_sympy(e):
    """Independent oracle view of an Expr: sympy expression parsed from the canonical text."""
    return sympy.sympify(to_text(e).replace("^", "**"))


def sympy_equal(a, b) -> bool:
    return sympy.simplify(sympy.together(a - b)) == 0


@pytest.fixture
def ctx2():
    return Context(dim=2)


@pytest.fixture
def rng():
    return random.Random(1234)
