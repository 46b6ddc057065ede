from .io import (
    LoadReport,
    load_cd_dataset,
    load_cd_dataset_with_report,
    read_image,
    read_mask,
    save_pairs,
    write_image,
    write_mask,
)
from .pairs import ImagePair, TileGrid, stitch_tiles, tile_grid, tile_pair
from .perturb import PERTURBATION_KINDS, PerturbationSpec, derive_spec, strong_perturb
from .synth import (
    SynthDomainParams,
    apply_domain_style,
    geometry_mask,
    synth_domain_dataset,
    synth_domain_dataset_with_geometry,
    write_geometry,
)

__all__ = [
    "ImagePair",
    "TileGrid",
    "tile_grid",
    "tile_pair",
    "stitch_tiles",
    "LoadReport",
    "load_cd_dataset",
    "load_cd_dataset_with_report",
    "save_pairs",
    "read_image",
    "write_image",
    "read_mask",
    "write_mask",
    "PerturbationSpec",
    "PERTURBATION_KINDS",
    "strong_perturb",
    "derive_spec",
    "SynthDomainParams",
    "synth_domain_dataset",
    "synth_domain_dataset_with_geometry",
    "apply_domain_style",
    "geometry_mask",
    "write_geometry",
]
