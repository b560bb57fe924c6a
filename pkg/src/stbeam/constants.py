APP_NAME = "stbeam"

LOG_LEVEL_ENV = "STBEAM_LOG_LEVEL"

SCHEMA_VERSION = 1

# Scenario defaults not fixed by any measured 19-element design.
DEFAULT_N_ELEMENTS = 19
DEFAULT_CARRIER_HZ = 10e9
DEFAULT_DELTA_F_HZ = 10e3
DEFAULT_FDHM_S = 16.7e-6

# Floor for magnitude_db columns when a sample is exactly zero.
DB_FLOOR = -300.0

# Floating format for every CSV cell (round-trip exact for float64).
CSV_FLOAT_FORMAT = "%.17g"
