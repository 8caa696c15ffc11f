"""Lossless side-information coding."""

from .hyperlatent import FactorizedPrior, decode_hyperlatent, encode_hyperlatent
from .png import PngError, decode_rate_map, encode_rate_map
from .rangecoder import BACKEND, CdfTables, cross_entropy_bits, pmf_to_cdf, range_decode, range_encode
from .sideinfo import SideInfoError, SideInfoFrame, frame_side_info, parse_side_info

__all__ = [
    "BACKEND", "CdfTables", "FactorizedPrior", "PngError", "SideInfoError", "SideInfoFrame",
    "cross_entropy_bits", "decode_hyperlatent", "decode_rate_map", "encode_hyperlatent",
    "encode_rate_map", "frame_side_info", "parse_side_info", "pmf_to_cdf", "range_decode",
    "range_encode",
]
