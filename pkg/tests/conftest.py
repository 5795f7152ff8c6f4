"""Shared synthetic-data builders for the test suite."""
import math

import numpy as np
import pytest

from cryocal import ComplexTrace, ErrorModelOnePort, FrequencyGrid


def aligned_grid(start_hz=1e7, step_hz=1e7, count=2650) -> FrequencyGrid:
    """Uniform grid whose start is an integer multiple of the step."""
    return FrequencyGrid(start_hz=start_hz, step_hz=step_hz, count=count)


def reflector_trace(grid: FrequencyGrid, taps) -> ComplexTrace:
    """Frequency response of ideal point reflectors: [(amplitude, delay_s), ...]."""
    f = grid.frequencies
    vals = np.zeros(grid.count, dtype=complex)
    for amp, delay in taps:
        vals += amp * np.exp(-2j * math.pi * f * delay)
    return ComplexTrace(grid=grid, values=vals)


def shorted_line_trace(grid: FrequencyGrid, loss_db_one_way, delay_s=2.15e-9) -> ComplexTrace:
    """Round-trip reflection off a shorting cap through a lossy line.

    |S11| = |S21|^2 = 10^(-2*loss/20); the short's -1 is dropped so the
    magnitude carries the loss directly (sign is irrelevant after gating).
    """
    s21 = 10.0 ** (-np.asarray(loss_db_one_way, dtype=float) / 20.0)
    f = grid.frequencies
    vals = (s21**2) * np.exp(-2j * math.pi * f * delay_s)
    return ComplexTrace(grid=grid, values=vals)


def constant_error_model(grid: FrequencyGrid, e00, e11, delta_e) -> ErrorModelOnePort:
    n = grid.count
    return ErrorModelOnePort(
        grid=grid,
        e00=np.full(n, complex(e00)),
        e11=np.full(n, complex(e11)),
        delta_e=np.full(n, complex(delta_e)),
    )


@pytest.fixture
def grid():
    return aligned_grid()


@pytest.fixture
def small_grid():
    return aligned_grid(count=11)
