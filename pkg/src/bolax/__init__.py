"""Spectral toolkit for the Benjamin-Ono Lax operator ``L_u = D - T_u`` on the torus."""

from .errors import (
    BolaxError,
    CertificateFailure,
    MethodUnavailable,
    NumericalFailure,
    PotentialFormatError,
)
from .fourier import FourierTable, Potential, SobolevParams
from .laxop import LaxMatrix, VertRegion, build_lax_matrix, resolvent_solve, vert_n
from .spectrum import (
    GapSequence,
    SpectrumResult,
    contour_eigen,
    counting_certificate,
    dense_spectrum,
    gaps_and_moment_map,
    identity_residuals,
    riesz_projector,
)
from .finitegap import g_infinity, normalized_eigenfunctions, potential_from_roots
from .genfun import SpectralData, evaluate_H, kappa, mu, residue_F, spectral_functionals
from .report import CertReport

__version__ = "0.1.0"

__all__ = [
    "BolaxError",
    "CertReport",
    "CertificateFailure",
    "FourierTable",
    "GapSequence",
    "LaxMatrix",
    "MethodUnavailable",
    "NumericalFailure",
    "Potential",
    "PotentialFormatError",
    "SobolevParams",
    "SpectralData",
    "SpectrumResult",
    "VertRegion",
    "build_lax_matrix",
    "contour_eigen",
    "counting_certificate",
    "dense_spectrum",
    "evaluate_H",
    "g_infinity",
    "gaps_and_moment_map",
    "identity_residuals",
    "kappa",
    "mu",
    "normalized_eigenfunctions",
    "potential_from_roots",
    "residue_F",
    "resolvent_solve",
    "riesz_projector",
    "spectral_functionals",
    "vert_n",
]
