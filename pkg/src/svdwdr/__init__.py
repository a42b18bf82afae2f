"""Lossy grayscale image compression: rank-k SVD followed by wavelet difference reduction."""

from .image_io import GrayImage, load_image, to_gray, to_real, write_image
from .metrics import mse, psnr, quality, ssim
from .pipeline import CompressionConfig, Container, compress, decompress, plan_parameters
from .svd_lowrank import svd_compression_ratio, svd_decompose, truncate_reconstruct
from .wavelet import delinearize, dwt2, idwt2, linearize
from .wdr_codec import WdrParams, wdr_decode, wdr_encode

__version__ = "0.1.0"

__all__ = [
    "CompressionConfig",
    "Container",
    "GrayImage",
    "WdrParams",
    "compress",
    "decompress",
    "delinearize",
    "dwt2",
    "idwt2",
    "linearize",
    "load_image",
    "mse",
    "plan_parameters",
    "psnr",
    "quality",
    "ssim",
    "svd_compression_ratio",
    "svd_decompose",
    "to_gray",
    "to_real",
    "truncate_reconstruct",
    "wdr_decode",
    "wdr_encode",
    "write_image",
]
