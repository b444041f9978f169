"""Acceptance suite: one test per criterion at its stated tolerance.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary. Run standalone with ``python tests/test_acceptance.py``.
"""
import sys

import pytest

from nemato.checks import ACCEPTANCE

LINES: list[str] = []
_CACHE: dict = {}


def run(label, fn):
    if label not in _CACHE:
        res = fn()
        _CACHE[label] = res
        LINES.append(f"[{label}] {res.line()}")
        print(LINES[-1])
    return _CACHE[label]


@pytest.mark.parametrize("label, fn", ACCEPTANCE, ids=[label.replace(" ", "_") for label, _ in ACCEPTANCE])
def test_acceptance(label, fn):
    res = run(label, fn)
    assert res.passed, f"{res.line()} failed: {res.failures}"


def test_stretch_conditions_besides_halving_factor():
    """Every part of the stretch criterion other than the step-halving factor."""
    label, fn = next(item for item in ACCEPTANCE if item[0].endswith("stretch"))
    res = run(label, fn)
    assert [f for f in res.failures if f != "halving_factor"] == []


if __name__ == "__main__":
    ok = True
    for label, fn in ACCEPTANCE:
        ok &= run(label, fn).passed
    sys.exit(0 if ok else 1)
