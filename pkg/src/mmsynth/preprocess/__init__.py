from .geometry import (
    CANVAS_SIZE,
    CropGeometry,
    PadGeometry,
    from_canvas,
    geometry_from_dict,
    resize_bilinear,
    to_canvas,
)
from .pipeline import (
    NORMALIZATION_VERSIONS,
    BoundingBox,
    CaseFiles,
    PatientCase,
    SliceSample,
    brain_bounding_box,
    case_to_slices,
    load_case,
    normalize_case,
    scan_dataset,
)
from .records import ShardWriter, decode_record, encode_record, iter_shard, read_shard
from .sharding import ShardManifest, default_roles, shard_filename, shard_path, write_shards

__all__ = [
    "CANVAS_SIZE",
    "BoundingBox",
    "CaseFiles",
    "CropGeometry",
    "NORMALIZATION_VERSIONS",
    "PadGeometry",
    "PatientCase",
    "ShardManifest",
    "ShardWriter",
    "SliceSample",
    "brain_bounding_box",
    "case_to_slices",
    "decode_record",
    "default_roles",
    "encode_record",
    "from_canvas",
    "geometry_from_dict",
    "iter_shard",
    "load_case",
    "normalize_case",
    "read_shard",
    "resize_bilinear",
    "scan_dataset",
    "shard_filename",
    "shard_path",
    "to_canvas",
    "write_shards",
]
