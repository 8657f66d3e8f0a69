"""Gradient-weighted class activation maps for the classifier heads."""

from __future__ import annotations

import numpy as np

from kom.imaging.types import KneeROI


def grad_cam(model, roi: KneeROI, target_class: int) -> np.ndarray:
    """Spatial attention map for one class, normalized to [0, 1] at ROI size.

    Class-score gradients at the model's final convolutional stage are pooled
    into channel weights, the weighted activations are rectified, upsampled to
    the ROI dimensions, and min-max normalized. An all-zero raw map (e.g. a
    zero-weight class head) stays all-zero.
    """
    import torch
    import torch.nn.functional as F

    net = getattr(model, "net", model)
    layer = getattr(net, "last_conv", None)
    if layer is None:
        raise ValueError("model does not expose a last_conv layer")
    n_classes = getattr(net, "num_classes", None)
    if n_classes is not None and not 0 <= target_class < n_classes:
        raise ValueError(f"target class {target_class} out of range 0-{n_classes - 1}")

    from kom.imaging.preprocess import resize_image

    size = getattr(model, "input_size", roi.crop.shape[0])
    img = np.asarray(roi.crop, dtype=np.float64)
    if img.shape != (size, size):
        img = resize_image(img, size)

    captured: dict[str, torch.Tensor] = {}

    def fwd_hook(_module, _inputs, output):
        captured["acts"] = output

    def bwd_hook(_module, _grad_in, grad_out):
        captured["grads"] = grad_out[0]

    h1 = layer.register_forward_hook(fwd_hook)
    h2 = layer.register_full_backward_hook(bwd_hook)
    try:
        net.eval()
        x = torch.from_numpy(img.astype(np.float32))[None, None]
        logits = net(x)
        if not 0 <= target_class < logits.shape[1]:
            raise ValueError(f"target class {target_class} out of range")
        net.zero_grad()
        logits[0, target_class].backward()
    finally:
        h1.remove()
        h2.remove()

    acts = captured["acts"][0]
    grads = captured["grads"][0]
    weights = grads.mean(dim=(1, 2))
    cam = torch.relu((weights[:, None, None] * acts).sum(dim=0))
    cam = F.interpolate(
        cam[None, None], size=roi.crop.shape, mode="bilinear", align_corners=False
    )[0, 0]
    cam = cam.detach().numpy().astype(np.float64)
    lo, hi = cam.min(), cam.max()
    if hi - lo < 1e-12:
        return np.zeros_like(cam)
    return (cam - lo) / (hi - lo)
