from .dgla import Cochain, DGLABackend, DGLAData, VolumeElement
from .probes import (OperatorProbe, harmonic_norm_ratio, make_backend, operator_norm_family,
                     operator_norm_probe, validate)
from .torus import NormReport, TorusBackend, TorusForm

__all__ = [
    "Cochain", "DGLABackend", "DGLAData", "VolumeElement", "NormReport", "TorusBackend",
    "TorusForm", "OperatorProbe", "harmonic_norm_ratio", "make_backend",
    "operator_norm_family", "operator_norm_probe", "validate",
]
