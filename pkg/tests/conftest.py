from __future__ import annotations

import numpy as np
import pytest

from mcflab.geometry import Polyline


def circle(r: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> Polyline:
    th = 2 * np.pi * np.arange(n) / n
    return Polyline(np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)]))


def ellipse(a: float, b: float, n: int = 256, center=(0.0, 0.0), angle: float = 0.0) -> Polyline:
    th = 2 * np.pi * np.arange(n) / n
    x, y = a * np.cos(th), b * np.sin(th)
    c, s = np.cos(angle), np.sin(angle)
    return Polyline(np.column_stack([center[0] + c * x - s * y, center[1] + s * x + c * y]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {line}")
