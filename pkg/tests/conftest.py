import pytest

from otfsynth import kernel
from otfsynth.des import make_problem

KERNELS = [kernel.PyClassifier] + ([kernel.CClassifier] if kernel.CClassifier is not None else [])


def p1():
    """0 -c-> 1 (marked), 1 -c-> 1."""
    return make_problem("P1", [(2, [(0, "c", 1), (1, "c", 1)], 0, {1})], {"c": True})


def p2():
    """0 -c-> 1 (marked deadlock)."""
    return make_problem("P2", [(2, [(0, "c", 1)], 0, {1})], {"c": True})


def chain(length, marked_last=True):
    """0 -step-> 1 -> ... -> length, with a controllable loop at the end."""
    trans = [(i, "step", i + 1) for i in range(length)] + [(length, "step", length)]
    return make_problem(f"Chain-{length}", [(length + 1, trans, 0, {length} if marked_last else set())], {"step": True})


@pytest.fixture
def P1():
    return p1()


@pytest.fixture
def P2():
    return p2()


@pytest.fixture(params=KERNELS, ids=lambda k: k.__module__.rsplit(".", 1)[-1])
def kernel_cls(request):
    return request.param


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
