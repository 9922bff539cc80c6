"""Faces, extreme rays and decompositions of the cone of non-negative
operator convex functions on (0, inf) and on (-1, 1)."""

from .decompose import (
    DecompositionRange,
    ExtremalDecomposition,
    RangeError,
    decomposition_range,
    extremal_decomposition,
    ray_transport,
    tangent_line,
)
from .faces import (
    E,
    F,
    FaceDescriptor,
    FaceRep,
    NotInFaceError,
    face_contains,
    face_rep,
    is_maximal,
    is_simplicial,
    member,
    non_simplicial_witness,
    parse_face,
    smallest_closed_face,
    tau_face,
)
from .interval import (
    OcFunctionI,
    affine_transport,
    boundary_rep_i,
    identity_check_i,
    make_extreme_i,
    membership_i,
)
from .measure import INF, ClosedSet, FiniteMeasure
from .ocfun import (
    NotInConeError,
    OcFunction,
    boundary,
    classify_extreme,
    evaluate,
    linear,
    make_extreme,
    reanchor,
    sigma_support,
    tau_transform,
)
from .recover import FitResult, SampleSet, fit_measure

__version__ = "0.1.0"

__all__ = [
    "DecompositionRange",
    "ExtremalDecomposition",
    "RangeError",
    "decomposition_range",
    "extremal_decomposition",
    "ray_transport",
    "tangent_line",
    "E",
    "F",
    "FaceDescriptor",
    "FaceRep",
    "NotInFaceError",
    "face_contains",
    "face_rep",
    "is_maximal",
    "is_simplicial",
    "member",
    "non_simplicial_witness",
    "parse_face",
    "smallest_closed_face",
    "tau_face",
    "OcFunctionI",
    "affine_transport",
    "boundary_rep_i",
    "identity_check_i",
    "make_extreme_i",
    "membership_i",
    "NotInConeError",
    "OcFunction",
    "boundary",
    "classify_extreme",
    "evaluate",
    "linear",
    "make_extreme",
    "reanchor",
    "sigma_support",
    "tau_transform",
    "INF",
    "ClosedSet",
    "FiniteMeasure",
    "FitResult",
    "SampleSet",
    "fit_measure",
]
