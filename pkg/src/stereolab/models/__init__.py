"""Vision encoders, the stereo cross-attention fusion stack, and the diffusion head."""

from .encoder import ConvEncoder, PairEncoder, PriorEncoder, fuse_prior
from .fusion import StereoFusion, StereoLayer, aggregate, grid_positions, rope2d
from .diffusion import (DiffusionSchedule, Normalizer, ddpm_forward, make_schedule,
                        sample_actions, train_loss)
from .denoiser import DenoiserNet
from .tokens import TokenPolicy

__all__ = [
    "ConvEncoder", "PairEncoder", "PriorEncoder", "fuse_prior",
    "StereoFusion", "StereoLayer", "aggregate", "grid_positions", "rope2d",
    "DiffusionSchedule", "Normalizer", "ddpm_forward", "make_schedule",
    "sample_actions", "train_loss", "DenoiserNet", "TokenPolicy",
]
