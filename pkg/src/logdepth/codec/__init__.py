"""Lossless codecs whose output length estimates algorithmic complexity."""
from .blob import CODEC_IDS, CompressedBlob
from .deflate import MAX_EFFORT, deflate_compress, inflate
from .filters import FilterId, apply_filter, paeth_predictor, unapply_filter
from .pipeline import (
    CODEC_VERSION,
    compress,
    compress_image,
    decompress,
    decompress_image,
    drop_buffers,
    k_estimate,
    verify,
    warmup,
)
from .rle import rle_compress, rle_decompress, runs

__all__ = [
    "CODEC_IDS", "CODEC_VERSION", "CompressedBlob", "FilterId", "MAX_EFFORT",
    "apply_filter", "compress", "compress_image", "decompress", "decompress_image",
    "deflate_compress", "drop_buffers", "inflate", "k_estimate", "paeth_predictor",
    "rle_compress", "rle_decompress", "runs", "unapply_filter", "verify", "warmup",
]
