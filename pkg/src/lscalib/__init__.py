"""Targetless LiDAR-stereo extrinsic self-calibration toolkit."""

from lscalib.geometry import (
    RigidTransform,
    Twist,
    se3_exp,
    se3_log,
    skew,
    tangent_basis,
)

__all__ = [
    "RigidTransform",
    "Twist",
    "se3_exp",
    "se3_log",
    "skew",
    "tangent_basis",
]

__version__ = "0.1.0"
