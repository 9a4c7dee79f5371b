"""Secretive coded caching for networks with shared helper caches."""

from .analysis import (
    rate_dedicated_reference,
    rate_envelope,
    rate_nonsecret_reference,
    rate_secret,
    rate_uniform,
    uniform_is_minimum_check,
    verify_secrecy_bruteforce,
)
from .gf2m import FieldElem, FieldMatrix, FieldParams, cauchy_matrix, rank, solve
from .protocol import DemandVector, Transcript, attempt_eavesdrop, decode, simulate
from .secret_share import SharingParams, encode_file, leakage_rank_check, reconstruct_file
from .topology import Association, SubsetIndex, SystemParams

__version__ = "0.1.0"
