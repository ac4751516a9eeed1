from .kernels import (
    BACKEND,
    duhamel,
    duhamel_radial,
    mollifier_ft,
    mu_density,
    phase_integral,
    shifted_duhamel,
    shifted_duhamel_table,
    wave_kernel_ft,
)
from .params import HurstVector, MollifierKind, MollifierSpec

__all__ = [
    "BACKEND",
    "HurstVector",
    "MollifierKind",
    "MollifierSpec",
    "duhamel",
    "duhamel_radial",
    "mollifier_ft",
    "mu_density",
    "phase_integral",
    "shifted_duhamel",
    "shifted_duhamel_table",
    "wave_kernel_ft",
]
