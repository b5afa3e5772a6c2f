"""Measured values for the He-irradiated NbTiN detectors, in SI units.

Used as fixtures by the reproduction recipes and tests.
"""

from types import MappingProxyType

# Nanowire used for the retrapping-current measurements
WIRE_LENGTH = 25.8e-6
WIRE_WIDTH = 250e-9
WIRE_THICKNESS = 8e-9
SUBSTRATE_TEMPERATURE = 1.0

# Retrapping current and extracted boundary conductance, 0 vs 2000 ions/nm^2
RETRAPPING_PRISTINE = 6.7e-6
RETRAPPING_IRRADIATED = 1.2e-6
SIGMA_PRISTINE = 210.0
SIGMA_IRRADIATED = 70.0
SIGMA_ANCHOR_FLUENCE = 2000.0

# Depth of the He stopping maximum and of the energy-loss maximum (nm)
STOPPING_PEAK_DEPTH_NM = 335.0
ENERGY_LOSS_PEAK_DEPTH_NM = 270.0
SIO2_SI_INTERFACE_NM = 150.0

# Lateral FWHM of stopping positions (nm): all ions, main stopping layer, film
LATERAL_FWHM_ALL_NM = 266.0
LATERAL_FWHM_STOPPING_LAYER_NM = 241.0
LATERAL_FWHM_FILM_NM = 400.0

# Standoff irradiation: 250 nm wire with 150 nm unirradiated margin each side
STANDOFF_WIRE_WIDTH_NM = 250.0
STANDOFF_MARGIN_NM = 150.0
STANDOFF_GAP_NM = STANDOFF_WIRE_WIDTH_NM + 2 * STANDOFF_MARGIN_NM

# (min, max, mean) implanted fraction under the wire, for FWHM 266 and 400 nm
STANDOFF_FRACTIONS = MappingProxyType({
    266.0: (0.015, 0.093, 0.039),
    400.0: (0.109, 0.201, 0.140),
})

# Switching / critical currents in amperes for the three irradiation schemes
SCHEME_CURRENTS = MappingProxyType({
    "unirradiated": MappingProxyType({"i_sw_before": 79.1e-6, "i_sw_after": 74.5e-6, "i_c_after": 60.1e-6}),
    "surrounding": MappingProxyType({"i_sw_before": 80.8e-6, "i_sw_after": 42.5e-6, "i_c_after": 59.0e-6}),
    "full": MappingProxyType({"i_sw_before": 95.2e-6, "i_sw_after": 19.7e-6, "i_c_after": 22.4e-6}),
})

# Reported reductions: I_sw before->after, and I_c(after) vs I_sw(before)
SWITCHING_REDUCTIONS = MappingProxyType({"surrounding": 0.47, "full": 0.79})
CRITICAL_VS_SWITCHING_REDUCTIONS = MappingProxyType({"surrounding": 0.27, "full": 0.76})

# Absolute saturation plateau widths (A) and relative width
PLATEAU_ABSOLUTE = MappingProxyType({"surrounding": 9.8e-6, "full": 3.7e-6})
PLATEAU_RELATIVE = 0.166

# Surface elevation fit: data at or above this fluence, zero crossing reported
ELEVATION_FIT_MIN_FLUENCE = 250.0
ELEVATION_ONSET_FLUENCE = 120.0
