"""Traversal-time laboratory for 1-D tunneling through a modulated barrier.

Three independent estimates of the time a tunneling particle spends under
the barrier, cross-validated against each other:

* sideband scattering of the harmonically modulated barrier, with the
  traversal time read off the visibility of the transmitted current,
* the semiclassical transit integral for general single-bump profiles,
* dwell statistics of stochastic-mechanics sample paths conditioned on
  transmission.
"""

from .core import (
    BarrierSpec,
    ChannelSet,
    IncidentSpec,
    PhysicalUnits,
    build_channels,
    decay_constant,
    sideband_energy,
    wavenumber,
)
from .kernels import backend
from .sideband import (
    ScatteringSolution,
    VisibilityReading,
    full_matching_solve,
    leading_order_amplitudes,
    sideband_asymmetry,
    static_coefficients,
    time_averaged_transmission,
    transmitted_current,
    traversal_time_from_visibility,
    visibility,
)
from .tdse import GridSpec, WaveField, WavePacketSpec, free_gaussian, propagate
from .nelson import (
    PathEnsemble,
    backward_transmitted_paths,
    forward_paths,
    tau_nelson,
    transmitted_dwell_run,
    velocities,
)
from .wkb import (
    PotentialProfile,
    WkbSolution,
    damping_factor,
    eckart_profile,
    gaussian_profile,
    profile_from_samples,
    rectangular_profile,
    sigma_factors,
    turning_points,
    wkb_tau_from_visibility,
    wkb_traversal_time,
    wkb_visibility,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
