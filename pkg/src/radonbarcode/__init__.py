"""Radon barcodes for content-based image retrieval.

Images are normalized, projected at equi-spaced angles, binarized per angle
(median thresholding or MinMax extrema encoding), and searched by Hamming
distance, exactly or through bit-sampling LSH.  Retrieval quality is scored
with the hierarchical IRMA code error.
"""

__version__ = "0.1.0"

from .barcode import (
    Barcode,
    Encoder,
    barcode_to_string,
    encode_minmax,
    encode_threshold,
    find_extrema,
    hamming,
    parse_barcode,
    smooth,
)
from .estimators import HammingRetriever, RadonBarcodeTransformer
from .imaging import GrayImage, load_grayscale, normalize
from .index import (
    BarcodeIndex,
    IndexEntry,
    LshConfig,
    LshIndex,
    build_linear,
    build_lsh,
    knn,
    load_index,
    lsh_candidates,
    rerank_correlation,
    save_index,
)
from .irma import BranchTable, IrmaCode, build_branch_table, code_error, parse_code, total_error
from .pipeline import EncodingSettings, encode_image
from .radon import ProjectionSet, bins_per_angle, project, projection_at

__all__ = [
    "Barcode",
    "BarcodeIndex",
    "BranchTable",
    "Encoder",
    "EncodingSettings",
    "GrayImage",
    "HammingRetriever",
    "IndexEntry",
    "IrmaCode",
    "LshConfig",
    "LshIndex",
    "ProjectionSet",
    "RadonBarcodeTransformer",
    "barcode_to_string",
    "bins_per_angle",
    "build_branch_table",
    "build_linear",
    "build_lsh",
    "code_error",
    "encode_image",
    "encode_minmax",
    "encode_threshold",
    "find_extrema",
    "hamming",
    "knn",
    "load_grayscale",
    "load_index",
    "lsh_candidates",
    "normalize",
    "parse_barcode",
    "parse_code",
    "project",
    "projection_at",
    "rerank_correlation",
    "save_index",
    "smooth",
    "total_error",
]
