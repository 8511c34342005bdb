"""Polar code construction, encoding and SCL decoding."""
from .construction import PolarCode, design_ga, ga_mean_llrs, load_frozen, save_frozen
from .decoding import (
    DecoderList,
    bits_to_symbol_index,
    codeword_loglik,
    scl_decode,
    scl_decode_batch,
)
from .encoding import generator_matrix, polar_encode, polar_transform

__all__ = [
    "PolarCode",
    "design_ga",
    "ga_mean_llrs",
    "load_frozen",
    "save_frozen",
    "DecoderList",
    "codeword_loglik",
    "bits_to_symbol_index",
    "scl_decode",
    "scl_decode_batch",
    "generator_matrix",
    "polar_encode",
    "polar_transform",
]
