"""Physical constants shared across the simulator."""

SPEED_OF_LIGHT_M_S = 299792458.0
SPEED_OF_LIGHT_KM_S = 299792.458
BOLTZMANN_J_K = 1.380649e-23

# 20*log10(f_GHz) + 20*log10(d_km) + 92.45 gives free-space loss in dB
FSPL_CONSTANT_DB = 92.45

# Reference temperature for noise-figure conversion
T0_K = 290.0
