"""Random-access light field codec with hierarchical residual coding.

The pipeline: an input grid of views is lifted to YCoCg-R, averaged into a
coarse-to-fine view pyramid, and the per-view residuals are quantized and
entropy-coded into fixed-layout records that support per-block random access.
A renderer samples the decoded field with quadrilinear interpolation for
novel views between cameras.
"""

from .errors import (
    RlfcError,
    ManifestError,
    FormatError,
    UnsupportedCodecError,
    VerificationError,
)
from .lightfield import (
    LightFieldGrid,
    PlaneGeometry,
    SyntheticSpec,
    default_geometry,
    load_manifest,
    save_grid,
    synthesize_lightfield,
)
from .hierarchy import EncodingParams, FilterSpec
from .encoder import EncodeReport, compress
from .decoder import (
    DecoderState,
    decode_all,
    decode_block,
    decode_block_progressive,
    decode_image,
    init,
)
from .renderer import CameraPose, LfCoord, SlabPose, ray_to_lf_coords, render_view
from .metrics import QualityReport, bpp, psnr_ycocg

__version__ = "0.1.0"

__all__ = [
    "RlfcError",
    "ManifestError",
    "FormatError",
    "UnsupportedCodecError",
    "VerificationError",
    "LightFieldGrid",
    "PlaneGeometry",
    "SyntheticSpec",
    "default_geometry",
    "load_manifest",
    "save_grid",
    "synthesize_lightfield",
    "EncodingParams",
    "FilterSpec",
    "EncodeReport",
    "compress",
    "DecoderState",
    "init",
    "decode_block",
    "decode_block_progressive",
    "decode_image",
    "decode_all",
    "SlabPose",
    "CameraPose",
    "LfCoord",
    "ray_to_lf_coords",
    "render_view",
    "QualityReport",
    "psnr_ycocg",
    "bpp",
    "__version__",
]
