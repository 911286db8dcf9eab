"""Bottleneck-embedding extraction adapter for encoder-decoder networks."""

from .core import ExtractorConfig, ExtractorError, extract, load_model, resolve_layer
from .models import MODEL_REGISTRY, TinyEncoderDecoder, ToyEncoderDecoder

__version__ = "0.1.0"
