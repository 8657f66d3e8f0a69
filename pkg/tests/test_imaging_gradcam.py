"""Grad-CAM attention maps."""

import numpy as np
import pytest
import torch

from kom.imaging.gradcam import grad_cam
from kom.imaging.resnet import ResNetClassifier
from kom.imaging.types import KneeROI, KneeSide


def _roi(size=36):
    rng = np.random.default_rng(5)
    return KneeROI(side=KneeSide.LEFT, crop=rng.uniform(0, 1, (size, size)), origin=(0, 0))


def test_heatmap_matches_roi_dims_and_range():
    net = ResNetClassifier(num_classes=4, base_channels=8)
    roi = _roi(36)
    cam = grad_cam(net, roi, target_class=1)
    assert cam.shape == roi.crop.shape
    assert cam.min() >= 0.0 and cam.max() <= 1.0


def test_zero_weight_class_head_gives_zero_map():
    net = ResNetClassifier(num_classes=3, base_channels=8)
    with torch.no_grad():
        net.fc.weight[1].zero_()
        net.fc.bias[1].zero_()
    cam = grad_cam(net, _roi(36), target_class=1)
    assert np.all(cam == 0.0)


def test_target_class_out_of_range():
    net = ResNetClassifier(num_classes=4, base_channels=8)
    with pytest.raises(ValueError):
        grad_cam(net, _roi(36), target_class=7)


def test_gradcam_on_trained_model(tiny_imaging_models):
    model = tiny_imaging_models["severity"]
    size = model.input_size
    roi = KneeROI(side=KneeSide.RIGHT, crop=np.random.default_rng(0).uniform(0, 1, (size, size)), origin=(0, 0))
    cam = grad_cam(model, roi, target_class=0)
    assert cam.shape == roi.crop.shape
    assert 0.0 <= cam.min() and cam.max() <= 1.0
