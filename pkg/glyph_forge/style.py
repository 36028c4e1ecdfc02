from typing import Dict, Tuple

import numpy as np

from models import Regime, StyleParams

IDENTITY_STYLE = StyleParams()

# full ranges; the scribbled regime draws from these
FULL_RANGES: Dict[str, Tuple[float, float]] = {
    "stroke_thickness": (0.6, 1.6),
    "rotation": (-0.12, 0.12),
    "scale": (0.85, 1.15),
    "shear": (-0.1, 0.1),
    "noise_sigma": (0.0, 0.15),
}

# the half of each range closest to the undistorted value
PRINTED_RANGES: Dict[str, Tuple[float, float]] = {
    "stroke_thickness": (0.75, 1.25),
    "rotation": (-0.06, 0.06),
    "scale": (0.925, 1.075),
    "shear": (-0.05, 0.05),
    "noise_sigma": (0.0, 0.075),
}


def sample_style(regime: Regime, rng: np.random.Generator) -> StyleParams:
    """Draw style parameters for one glyph or line under the given regime."""
    regime = Regime(regime)
    ranges = PRINTED_RANGES if regime == Regime.printed else FULL_RANGES
    values = {name: float(rng.uniform(low, high)) for name, (low, high) in ranges.items()}
    return StyleParams(regime=regime, **values)
