import logging
import os
from typing import Optional

import numpy as np

from stbeam.constants import DB_FLOOR, LOG_LEVEL_ENV

logger = logging.getLogger(__name__)

# -- Sample snapping ----------------------------------------------------------

DYADIC_EXPONENT = -37


def snap_dyadic(values, exponent: int = DYADIC_EXPONENT) -> np.ndarray:
    """Round to the nearest multiple of 2**exponent.

    Sums and integer multiples of snapped values stay exactly representable as long
    as they need no more than 53 significant bits.
    """
    arr = np.asarray(values, dtype=float)
    return np.ldexp(np.round(np.ldexp(arr, -exponent)), exponent)


# -- Formatting ---------------------------------------------------------------


def to_db(magnitudes, reference: float) -> np.ndarray:
    """20*log10(m / reference), with exact zeros mapped to DB_FLOOR."""
    mags = np.asarray(magnitudes, dtype=float)
    if reference <= 0.0:
        return np.full(mags.shape, DB_FLOOR)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mags / reference)
    return np.maximum(db, DB_FLOOR)


def format_db(value: Optional[float]) -> str:
    """Sidelobe-style display: 'none' for a missing level."""
    if value is None:
        return "none"
    return f"{value:.2f} dB"


def format_meters(value: float) -> str:
    if abs(value) >= 1000.0:
        return f"{value / 1000.0:.4f} km"
    return f"{value:.3f} m"


# -- Environment --------------------------------------------------------------


def default_log_level() -> str:
    """Log level from the environment, WARNING when unset."""
    return os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
