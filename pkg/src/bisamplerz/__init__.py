"""Bit-exact model and latency simulator for a dual-datapath Falcon SamplerZ."""

__version__ = "0.1.0"

from .fxp81 import Fxp81
from .kernel import Kernel, SampleTask, samplerz_fixed
from .oracle import samplerz_oracle
from .params import FALCON512, FALCON1024, SamplerParams, get_params
from .randomness import RefillBuffer

__all__ = [
    "Fxp81", "Kernel", "SampleTask", "samplerz_fixed", "samplerz_oracle",
    "FALCON512", "FALCON1024", "SamplerParams", "get_params", "RefillBuffer",
    "__version__",
]
