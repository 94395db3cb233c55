"""Recompute the frozen oracle constants with mpmath."""

import mpmath as mp
import pytest

import oracles

mp.mp.dps = 50


def close(a, b, tol=1e-15):
    return abs(float(a) - b) <= tol * max(1.0, abs(b))


def test_closed_forms():
    s2 = mp.sqrt(2)
    assert close(2 * mp.log(mp.sqrt(0.75) + mp.sqrt(0.25)), oracles.RENYI_HALF_75_25)
    vn = -mp.mpf(0.75) * mp.log(0.75) - mp.mpf(0.25) * mp.log(0.25)
    assert close(vn, oracles.VON_NEUMANN_75_25)
    assert close(2 * mp.log(2) + 2 * mp.log(mp.mpf(0.5) + mp.mpf(2) ** -1.5), oracles.ENTANGLED_BOUND_D2_HALF)
    assert close(s2 - mp.mpf(2) ** -0.5 * mp.sqrt(2 + s2), oracles.GAP_THRESHOLD_D2_HALF)
    q = (mp.mpf("0.6"), mp.mpf("0.4"))
    assert close(8 * sum(mp.log(2 * x) + 1 - 2 * x for x in q), oracles.LOG_DENSITY_Q64_N10)
    assert close(2 * s2 * mp.mpf("0.1") / mp.mpf("0.25"), oracles.SQ_DEVIATION_D2_HALF_01)
    assert close(s2 * mp.mpf("0.1") / mp.mpf("0.25"), oracles.DEFICIT_RATE_HALF_D2_01)
    assert close(mp.mpf("0.5") / mp.log(2), oracles.PROFILE_AT_HALF)


@pytest.mark.slow
def test_critical_point_root():
    # stationarity of 2y^2 / -ln(1-y): -2 ln(1-y) = y / (1-y)
    y0 = mp.findroot(lambda y: -2 * mp.log(1 - y) - y / (1 - y), 0.7)
    h0 = 2 * y0**2 / -mp.log(1 - y0)
    p0 = (1 - mp.sqrt(1 - h0)) / 2
    assert abs(float(y0) - oracles.GRID_Y0) < 1e-7
    assert close(h0, oracles.GRID_H0, 1e-13)
    assert close(p0, oracles.GRID_P0, 1e-12)
