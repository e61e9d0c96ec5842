"""Heavy-tailed SDE models of SGD and Adam.

Thin wrapper over the compiled ``_core`` module; every function takes
keyword arguments and returns plain Python containers or NumPy arrays.
"""

from ._core import (
    DivergedError,
    __version__,
    compare_measures,
    decompose_jumps,
    ellipsoid_volume,
    escape,
    estimate_tail_index,
    flow,
    jump_intensity,
    ks_critical_value,
    ks_exponential,
    levy_measure_scale,
    noise_probe,
    predicted_mean_exit,
    radon_measure,
    sample_sas,
    scaling_sweep,
    stable_char_fn,
)

__all__ = [
    "DivergedError",
    "__version__",
    "compare_measures",
    "decompose_jumps",
    "ellipsoid_volume",
    "escape",
    "estimate_tail_index",
    "flow",
    "jump_intensity",
    "ks_critical_value",
    "ks_exponential",
    "levy_measure_scale",
    "noise_probe",
    "predicted_mean_exit",
    "radon_measure",
    "sample_sas",
    "scaling_sweep",
    "stable_char_fn",
]
