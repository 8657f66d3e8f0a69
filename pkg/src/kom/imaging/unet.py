"""Five-level UNet for knee-center segmentation."""

from __future__ import annotations

import torch
import torch.nn as nn


def _double_conv(in_ch: int, out_ch: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, 3, padding=1, bias=False),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False),
        nn.BatchNorm2d(out_ch),
        nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    """Encoder-decoder with skip connections, batch norm and ReLU.

    Five resolution levels (four downsamplings). Weights use Kaiming-normal
    initialization. The forward pass emits per-pixel probabilities.
    ``in_channels=2`` accepts an extra x-coordinate plane, which
    side-specific models need to break translation equivariance.
    """

    def __init__(self, base_channels: int = 8, in_channels: int = 1):
        super().__init__()
        self.in_channels = in_channels
        c = base_channels
        chans = [c, 2 * c, 4 * c, 8 * c, 16 * c]
        self.enc1 = _double_conv(in_channels, chans[0])
        self.enc2 = _double_conv(chans[0], chans[1])
        self.enc3 = _double_conv(chans[1], chans[2])
        self.enc4 = _double_conv(chans[2], chans[3])
        self.bottom = _double_conv(chans[3], chans[4])
        self.pool = nn.MaxPool2d(2)
        self.up4 = nn.ConvTranspose2d(chans[4], chans[3], 2, stride=2)
        self.dec4 = _double_conv(chans[4], chans[3])
        self.up3 = nn.ConvTranspose2d(chans[3], chans[2], 2, stride=2)
        self.dec3 = _double_conv(chans[3], chans[2])
        self.up2 = nn.ConvTranspose2d(chans[2], chans[1], 2, stride=2)
        self.dec2 = _double_conv(chans[2], chans[1])
        self.up1 = nn.ConvTranspose2d(chans[1], chans[0], 2, stride=2)
        self.dec1 = _double_conv(chans[1], chans[0])
        self.head = nn.Conv2d(chans[0], 1, 1)
        self._init_weights()

    def _init_weights(self) -> None:
        for m in self.modules():
            if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
                nn.init.kaiming_normal_(m.weight, nonlinearity="relu")
                if m.bias is not None:
                    nn.init.zeros_(m.bias)
            elif isinstance(m, nn.BatchNorm2d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(self.pool(e1))
        e3 = self.enc3(self.pool(e2))
        e4 = self.enc4(self.pool(e3))
        b = self.bottom(self.pool(e4))
        d4 = self.dec4(torch.cat([self.up4(b), e4], dim=1))
        d3 = self.dec3(torch.cat([self.up3(d4), e3], dim=1))
        d2 = self.dec2(torch.cat([self.up2(d3), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return torch.sigmoid(self.head(d1))
