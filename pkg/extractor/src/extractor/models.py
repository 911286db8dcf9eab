"""Built-in toy networks for exercising the extraction pipeline.

Random-weight encoder-decoders with a named `bottleneck` submodule. The
full-size variant maps a (256, 128, 128) volume to a (768, 8, 4, 4)
bottleneck through five stride-2 stages; the tiny variant exists for fast
tests. Construction is seeded so rebuilding a model reproduces it exactly.
"""

from __future__ import annotations

import torch
from torch import nn


class ToyEncoderDecoder(nn.Module):
    """Five stride-2 encoder stages (1 -> 768 channels), light decoder."""

    CHANNELS = (1, 4, 8, 32, 128, 768)

    def __init__(self, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        stages = []
        chans = self.CHANNELS
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            stages += [nn.Conv3d(c_in, c_out, kernel_size=3, stride=2, padding=1),
                       nn.ReLU(inplace=True)]
        # the deepest activation is the bottleneck the hook is meant to tap
        self.encoder = nn.Sequential(*stages[:-2])
        self.bottleneck = nn.Sequential(*stages[-2:])
        self.decoder = nn.Sequential(
            nn.Conv3d(chans[-1], 2, kernel_size=1),
            nn.Upsample(scale_factor=32, mode="trilinear", align_corners=False),
            nn.Conv3d(2, 1, kernel_size=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        features = self.bottleneck(self.encoder(x))
        return self.decoder(features)


class TinyEncoderDecoder(nn.Module):
    """Two stride-2 stages; bottleneck (16, D/4, H/4, W/4). Test-sized."""

    def __init__(self, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.encoder = nn.Sequential(
            nn.Conv3d(1, 4, kernel_size=3, stride=2, padding=1),
            nn.ReLU(inplace=True),
        )
        self.bottleneck = nn.Sequential(
            nn.Conv3d(4, 16, kernel_size=3, stride=2, padding=1),
            nn.ReLU(inplace=True),
        )
        self.decoder = nn.Sequential(
            nn.Conv3d(16, 1, kernel_size=1),
            nn.Upsample(scale_factor=4, mode="trilinear", align_corners=False),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.bottleneck(self.encoder(x)))


MODEL_REGISTRY = {
    "toy_encoder_decoder": ToyEncoderDecoder,
    "tiny_encoder_decoder": TinyEncoderDecoder,
}
