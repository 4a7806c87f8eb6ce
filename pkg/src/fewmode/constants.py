"""Physical constants and unit conversions for the eV / fs / nm / e unit system.

All numerics in this package run with hbar = 1: energies, frequencies, loss
rates, and couplings are expressed in eV, and the internal time variable is
measured in units of hbar/eV.  Femtoseconds appear only at API boundaries;
the conversion uses ``HBAR_EV_FS`` below and nothing else.

The SI literals are CODATA 2018 (the 2019 redefinition makes e, c, and hbar
exact).  Derived combinations are computed here once so that every module
agrees on the same values.
"""

from __future__ import annotations

import math

# hbar in eV fs: 1.054571817e-34 J s / 1.602176634e-19 J/eV * 1e15 fs/s
HBAR_EV_FS = 0.6582119569

# speed of light in nm/fs (exact)
C_NM_FS = 299.792458

# SI values used to build conversion factors
E_CHARGE_C = 1.602176634e-19       # elementary charge, C (exact)
HBAR_SI = 1.054571817e-34          # J s
EPS0_SI = 8.8541878128e-12         # F/m
C_SI = 299792458.0                 # m/s (exact)

# vacuum permittivity in e^2 / (eV nm):  eps0[F/m] * 1e-9 / e
EPS0_E2_EVNM = EPS0_SI * 1e-9 / E_CHARGE_C

# intensity conversion: |E+|^2 in (V/m)^2 times this gives the cycle-averaged
# Poynting flux 2 eps0 c <E- . E+> in W/m^2
INTENSITY_W_PER_M2 = 2.0 * EPS0_SI * C_SI

# field-kernel normalization: converts the raw table integral
# int w^2 Im{G}.n e^{i w tau} dw  (w in eV, Im G in 1/m, result eV^3/m)
# into a field response in (V/m) per (e nm) of dipole moment per fs, so that
# E+(t) = mu[e nm] * int dt'[fs] c_e(t') K(t - t').
KERNEL_V_PER_M = (E_CHARGE_C * 1e-24 / (math.pi * EPS0_SI * C_SI**2)) * (E_CHARGE_C / HBAR_SI) ** 3


def fs_to_internal(t_fs):
    """Convert a time (or array of times) in fs to internal hbar/eV units."""
    return t_fs / HBAR_EV_FS


def internal_to_fs(t_internal):
    """Convert a time (or array of times) in internal hbar/eV units to fs."""
    return t_internal * HBAR_EV_FS


def free_space_spectral_density(omega_ev, mu_enm):
    """Free-space spectral density J0 at energy ``omega_ev``.

    J0(w) = w^3 mu^2 / (6 pi^2 hbar^3 eps0 c^3) in the eV/nm/fs/e system,
    which equals hbar times the free-space emission rate divided by 2 pi.

    Parameters
    ----------
    omega_ev : float or ndarray
        Transition energy in eV.
    mu_enm : float
        Transition dipole moment magnitude in e nm.

    Returns
    -------
    float or ndarray
        J0 in eV.
    """
    return (
        omega_ev**3
        * mu_enm**2
        / (6.0 * math.pi**2 * HBAR_EV_FS**3 * EPS0_E2_EVNM * C_NM_FS**3)
    )
