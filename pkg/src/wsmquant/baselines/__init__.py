"""Comparator quantizers."""

from wsmquant.baselines.boxes import median_cut, wan_quantize, wu_quantize
from wsmquant.baselines.fastkm import fkm, skm
from wsmquant.baselines.fuzzy import fcm, fuzzy_memberships, pim
from wsmquant.baselines.mmm import mmm

__all__ = [
    "median_cut",
    "wan_quantize",
    "wu_quantize",
    "fkm",
    "skm",
    "fcm",
    "pim",
    "fuzzy_memberships",
    "mmm",
]
