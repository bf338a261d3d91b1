"""Radar-absorbing stacks and monostatic radar cross section.

Layered absorbers are modelled with transmission-line theory; plates, ducts
and meshed scenes are solved with shooting and bouncing rays, checked against
closed-form physical optics.
"""
from .absorber import (
    FR4,
    VACUUM,
    Backing,
    Layer,
    LayerStack,
    Material,
    Sheet,
    SheetImpedance,
    input_impedance,
    reference_stack,
    reflection,
    reflection_coefficient,
)
from .coatings import PEC, Coating, MatchedCoating
from .core import AngleGrid, DomainError, FrequencyGrid, Polarization
from .fit import FitSpec, fit_absorber
from .po import PlateSpec, plate_rcs, sphere_rcs_go
from .postprocess import MedianReport, median_rcs
from .results import RcsResult
from .rivet import RivetLayout, effective_reflection
from .sbr import SbrParams, monostatic_sweep

__all__ = [
    "FR4", "VACUUM", "Backing", "Layer", "LayerStack", "Material", "Sheet", "SheetImpedance",
    "input_impedance", "reference_stack", "reflection", "reflection_coefficient",
    "PEC", "Coating", "MatchedCoating",
    "AngleGrid", "DomainError", "FrequencyGrid", "Polarization",
    "FitSpec", "fit_absorber",
    "PlateSpec", "plate_rcs", "sphere_rcs_go",
    "MedianReport", "median_rcs",
    "RcsResult",
    "RivetLayout", "effective_reflection",
    "SbrParams", "monostatic_sweep",
]
