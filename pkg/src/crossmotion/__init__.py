"""Cross-species text-to-motion toolkit.

Pipeline: a graph VAE samples species-consistent rest poses from bone-length
vectors; a convolutional autoencoder maps 76-dim motion frames to a 4x
temporally downsampled latent space; a masked transformer with a
flow-matching head generates latents from captions and rest-pose tokens
under a frozen morphology critic; metrics evaluate bone-length consistency
and text alignment in a toy matcher's feature space.
"""

from .config import RunConfig
from .dataset import MotionRecord, read_container, write_container
from .features import GlobalMotion, NormStats, decode_to_global, encode_features
from .generator import PipelineBundle, cross_species_transition, generate_motion
from .providers import HashingProvider
from .skeleton import SkeletonTopology, canonical_topology

__version__ = "0.1.0"

__all__ = [
    "GlobalMotion",
    "HashingProvider",
    "MotionRecord",
    "NormStats",
    "PipelineBundle",
    "RunConfig",
    "SkeletonTopology",
    "canonical_topology",
    "cross_species_transition",
    "decode_to_global",
    "encode_features",
    "generate_motion",
    "read_container",
    "write_container",
    "__version__",
]
