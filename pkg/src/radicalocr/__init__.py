"""Zero-shot character recognition by radical decomposition.

Dictionary of character decompositions, splice-based synthetic data, a
template-matching radical/structure detector, confidence-based character
matching, annotation QA and evaluation metrics.
"""
from ._kernels import BACKEND
from .detection import DetectionResult, build_templates, detect, ingest_predictions
from .dictionary import Dictionary, load_dictionary, save_dictionary, validate
from .glyph import AnnotatedImage, Box, Glyph, ink_bounding_box, iou
from .layouts import StructureLayout, default_layouts, get_structure
from .reasoner import ReasonerConfig, crcm
from .synthesis import SynthesisConfig, gen_img_set, generate_img

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AnnotatedImage",
    "Box",
    "DetectionResult",
    "Dictionary",
    "Glyph",
    "ReasonerConfig",
    "StructureLayout",
    "SynthesisConfig",
    "build_templates",
    "crcm",
    "default_layouts",
    "detect",
    "gen_img_set",
    "generate_img",
    "get_structure",
    "ingest_predictions",
    "ink_bounding_box",
    "iou",
    "load_dictionary",
    "save_dictionary",
    "validate",
]
