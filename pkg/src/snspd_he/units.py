"""Exact decimal conversions between SI and the lab units used in the data.

Everything inside the package is SI; these helpers are the only place where
the scale factors live.  Scaling is done with the exactly representable
powers of ten (1e6, 1e9) so each conversion is a single correctly rounded
operation: ``nm_to_m(250.0) == 250e-9``.
"""

NM = 1e-9
UM = 1e-6
UA = 1e-6
IONS_PER_NM2_TO_PER_CM2 = 1e14

_PER_NM = 1e9
_PER_MICRO = 1e6


def nm_to_m(value):
    return value / _PER_NM


def m_to_nm(value):
    return value * _PER_NM


def um_to_m(value):
    return value / _PER_MICRO


def m_to_um(value):
    return value * _PER_MICRO


def ua_to_a(value):
    return value / _PER_MICRO


def a_to_ua(value):
    return value * _PER_MICRO


def ipsn_to_per_cm2(value):
    """Fluence in ions/nm^2 to ions/cm^2 (1 ion/nm^2 = 1e14 ions/cm^2)."""
    return value * IONS_PER_NM2_TO_PER_CM2


def per_cm2_to_ipsn(value):
    return value / IONS_PER_NM2_TO_PER_CM2
