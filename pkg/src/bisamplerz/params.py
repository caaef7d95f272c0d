"""Falcon sampler parameters."""
from __future__ import annotations

from dataclasses import dataclass

SIGMA_MAX = 1.8205

# Per-degree lower bound on the leaf standard deviations.
SIGMA_MIN = {
    "falcon512": 1.2778336969128337,
    "falcon1024": 1.298280334344292,
}


@dataclass(frozen=True)
class SamplerParams:
    sigma_min: float
    sigma_max: float = SIGMA_MAX
    name: str = "custom"

    def __post_init__(self):
        if not 0 < self.sigma_min < self.sigma_max:
            raise ValueError("need 0 < sigma_min < sigma_max")

    def check_sigma(self, sigma: float):
        if not self.sigma_min <= sigma <= self.sigma_max:
            raise ValueError(
                f"sigma' = {sigma!r} outside [{self.sigma_min}, {self.sigma_max}]")


def get_params(name: str = "falcon512", sigma_min: float | None = None,
               sigma_max: float | None = None) -> SamplerParams:
    if name == "custom":
        if sigma_min is None or sigma_max is None:
            raise ValueError("parameter set 'custom' requires sigma_min and sigma_max")
        return SamplerParams(sigma_min, sigma_max, "custom")
    if name not in SIGMA_MIN:
        raise ValueError(f"unknown parameter set {name!r}")
    return SamplerParams(
        SIGMA_MIN[name] if sigma_min is None else sigma_min,
        SIGMA_MAX if sigma_max is None else sigma_max,
        name,
    )


FALCON512 = get_params("falcon512")
FALCON1024 = get_params("falcon1024")
