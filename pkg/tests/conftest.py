"""Shared extended-precision oracles."""

from __future__ import annotations

import mpmath as mp
import pytest


def ml_series_mp(alpha: float, beta: float, z: float) -> mp.mpf:
    """Taylor series of ``E_{alpha,beta}(z)`` with enough digits to absorb cancellation."""
    peak = abs(float(z)) ** (1.0 / float(alpha))
    with mp.workdps(int(40 + peak / 2.3)):
        a, b, zz = mp.mpf(alpha), mp.mpf(beta), mp.mpf(z)
        total = mp.mpf(0)
        k = 0
        while True:
            term = zz**k / mp.gamma(a * k + b)
            total += term
            if k > 2 * peak + 20 and abs(term) < mp.mpf(10) ** -40 * max(abs(total), mp.mpf(10) ** -300):
                return +total
            k += 1


def ml_laplace_mp(alpha: float, beta: float, z: float) -> mp.mpf:
    """``E_{alpha,beta}(-lam)`` for ``z = -lam <= 0`` by Talbot inversion of ``s**(a-b) / (s**a + lam)`` at ``t = 1``."""
    lam = -mp.mpf(z)
    with mp.workdps(40):
        a, b = mp.mpf(alpha), mp.mpf(beta)
        return mp.invertlaplace(lambda s: s ** (a - b) / (s**a + lam), 1, method="talbot")


@pytest.fixture(scope="session")
def ml_oracle():
    return ml_series_mp


@pytest.fixture(scope="session")
def ml_far_oracle():
    return ml_laplace_mp


# criterion number -> one-line verdict, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
