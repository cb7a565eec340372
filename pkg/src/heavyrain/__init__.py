"""Heavy-rain physics model, synthetic rain rendering, residue-guided
frequency decomposition, baseline deraining and evaluation metrics."""

from .decomp import FrequencyPair, colored_residue, decompose, guided_filter, residue_channel
from .estimate import ParamEstimate, derain, estimate_params, load_external_params
from .imgcore import DepthMap, RngStream, load_depth, load_image, normalize_depth, save_image, split_stream
from .rainmodel import compose, compose_simple, reconstruct, relative_depth, transmission_from_depth
from .synth import RainParams, RainSample, render, sample_params

__version__ = "0.1.0"
