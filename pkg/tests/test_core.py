import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from traversal_lab.core import (
    BarrierSpec,
    IncidentSpec,
    PhysicalUnits,
    adaptive_n_eff,
    build_channels,
    decay_constant,
    sideband_energy,
    wavenumber,
)
from traversal_lab.errors import BranchPointError, DegenerateChannelError


def test_units_defaults_and_validation():
    u = PhysicalUnits()
    assert u.m == 1.0 and u.hbar == 1.0
    with pytest.raises(ValueError):
        PhysicalUnits(m=0.0)
    with pytest.raises(ValueError):
        PhysicalUnits(hbar=-1.0)


def test_barrier_spec_validation():
    with pytest.raises(ValueError):
        BarrierSpec.rectangular(0.0, 1.0)
    with pytest.raises(ValueError):
        BarrierSpec.rectangular(1.0, -2.0)
    with pytest.raises(ValueError):
        BarrierSpec.rectangular(1.0, 1.0, v1=-0.1)
    with pytest.raises(ValueError):
        BarrierSpec.rectangular(1.0, 1.0, v1=0.1, omega=0.0)
    b = BarrierSpec.rectangular(1.0, 2.0, v1=0.01, omega=0.1)
    assert b.edges == (-1.0, 1.0)
    assert b.static().modulation_amplitude == 0.0


@pytest.mark.parametrize(
    "energy,n,omega,expected",
    [(0.5, 0, 0.1, 0.5), (0.5, +2, 0.1, 0.7), (0.5, -1, 0.1, 0.4)],
)
def test_sideband_energy_values(energy, n, omega, expected):
    assert sideband_energy(energy, n, omega) == pytest.approx(expected, abs=1e-15)


@given(
    energy=st.floats(0.01, 10.0),
    n=st.integers(-20, 20),
    omega=st.floats(1e-3, 2.0),
)
def test_sideband_energy_spacing_is_exact(energy, n, omega):
    e_n = sideband_energy(energy, n, omega)
    e_n1 = sideband_energy(energy, n + 1, omega)
    assert e_n1 - e_n == pytest.approx(omega, rel=1e-12)


def test_wavenumber_values():
    assert wavenumber(0.5) == pytest.approx(1.0, abs=1e-15)
    assert wavenumber(2.0) == pytest.approx(2.0, abs=1e-15)
    # high-precision oracle for the non-round case
    expected = float(mp.sqrt(mp.mpf("0.9")))
    assert wavenumber(0.45).real == pytest.approx(expected, abs=1e-15)
    with pytest.raises(DegenerateChannelError):
        wavenumber(0.0)
    closed = wavenumber(-0.3)
    assert closed.real == 0.0 and closed.imag > 0.0


def test_decay_constant_values_and_branches():
    assert decay_constant(0.5, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert decay_constant(0.5, 2.5) == pytest.approx(2.0, abs=1e-15)
    # continuation above the top: rightward-propagating oscillating mode
    assert decay_constant(1.5, 1.0) == pytest.approx(-1.0j, abs=1e-15)
    with pytest.raises(BranchPointError):
        decay_constant(1.0, 1.0)


@given(
    e_n=st.floats(0.01, 5.0),
    v0=st.floats(0.02, 6.0),
    m=st.floats(0.1, 4.0),
    hbar=st.floats(0.1, 4.0),
)
def test_kinematic_reconstruction_identities(e_n, v0, m, hbar):
    if e_n == v0:
        return
    units = PhysicalUnits(m=m, hbar=hbar)
    k = wavenumber(e_n, units)
    kap = decay_constant(e_n, v0, units)
    assert (hbar * k) ** 2 / (2 * m) == pytest.approx(e_n, rel=1e-12)
    assert ((hbar * kap) ** 2 / (2 * m) + e_n).real == pytest.approx(v0, rel=1e-12, abs=1e-12)


def test_static_channel_set_has_single_open_channel():
    ch = build_channels(IncidentSpec(0.5), BarrierSpec.rectangular(1.0, 2.0))
    assert ch.ns == (0,)
    assert ch.open_ns == (0,)
    assert ch.z == 0.0


def test_channels_drop_nonpositive_energies():
    barrier = BarrierSpec.rectangular(1.0, 2.0, v1=0.008, omega=0.08)
    ch = build_channels(IncidentSpec(0.5), barrier, n_eff=7)
    # E - 7*0.08 < 0 and E - 0.08*n hits closure at n <= -7
    assert -7 in ch.dropped
    assert all(c.energy > 0 for c in ch.channels)
    assert 0 in ch and 1 in ch and -1 in ch


def test_adaptive_truncation_grows_with_coupling():
    assert adaptive_n_eff(0.0) == 0
    n_small, n_large = adaptive_n_eff(0.02), adaptive_n_eff(0.4)
    assert 0 < n_small <= n_large
    # retained orders really are negligible beyond the cutoff
    from scipy.special import jv

    assert abs(jv(n_small, 0.02)) < 1e-12 * abs(jv(0, 0.02))


def test_incident_spec():
    inc = IncidentSpec(0.5)
    assert inc.k0 == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        IncidentSpec(-1.0)
