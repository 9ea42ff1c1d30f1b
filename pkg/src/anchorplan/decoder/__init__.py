from .model import (
    ALL_STREAMS,
    DecoderConfig,
    DecoderModel,
    Stream,
    StreamSet,
    Tokens,
    decode_anchors,
    decoder_loss,
    encode_streams,
    pool_context,
    smoothed_ade,
    stream_prefixes,
)

__all__ = [
    "ALL_STREAMS",
    "DecoderConfig",
    "DecoderModel",
    "Stream",
    "StreamSet",
    "Tokens",
    "decode_anchors",
    "decoder_loss",
    "encode_streams",
    "pool_context",
    "smoothed_ade",
    "stream_prefixes",
]
