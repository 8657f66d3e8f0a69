"""Study files and model-artifact persistence."""

import numpy as np

from kom.imaging.io import load_model, load_study, save_classifier, save_localizer, save_study
from kom.imaging.types import RadiographStudy


def test_study_png_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    image = rng.uniform(0, 1, (64, 64))
    study = RadiographStudy(study_id="rt-1", image=image)
    save_study(tmp_path, study, labels={"kl_left": 2, "kl_right": 1})
    loaded, sidecar = load_study(tmp_path / "rt-1.png")
    assert loaded.study_id == "rt-1"
    assert sidecar["labels"] == {"kl_left": 2, "kl_right": 1}
    np.testing.assert_allclose(loaded.image / 65535.0, image, atol=1e-4)


def test_localizer_artifact_roundtrip(tmp_path, tiny_localizer):
    save_localizer(tmp_path / "loc", tiny_localizer)
    assert (tmp_path / "loc" / "manifest.json").exists()
    loaded = load_model(tmp_path / "loc")
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 1, (64, 64))
    np.testing.assert_allclose(loaded.predict_prob(img), tiny_localizer.predict_prob(img), atol=1e-6)
    assert loaded.train_config.seed == tiny_localizer.train_config.seed
    assert loaded.data_hash == tiny_localizer.data_hash


def test_classifier_artifact_roundtrip(tmp_path, tiny_imaging_models):
    model = tiny_imaging_models["severity"]
    save_classifier(tmp_path / "severity", model)
    loaded = load_model(tmp_path / "severity")
    rng = np.random.default_rng(2)
    crop = rng.uniform(0, 1, (model.input_size, model.input_size))
    np.testing.assert_allclose(loaded.predict_probs(crop), model.predict_probs(crop), atol=1e-6)
    manifest = loaded.manifest()
    for key in ("task", "cardinality", "train_config", "seed", "data_hash", "metrics"):
        assert key in manifest
