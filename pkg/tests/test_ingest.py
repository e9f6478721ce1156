import numpy as np
import pytest
from PIL import Image

from scenesfr.errors import DatasetError, EmptyDatasetError
from scenesfr.ingest import (
    Frame, SkipReport, list_images, load_dataset, load_frame, to_luminance,
)


def test_to_luminance_8bit_full_scale():
    arr = np.array([[0, 128, 255]], dtype=np.uint8)
    lum = to_luminance(arr, 8)
    assert lum[0, 0] == 0.0
    assert lum[0, 2] == 1.0
    assert lum[0, 1] == pytest.approx(128 / 255)


def test_to_luminance_16bit_full_scale():
    arr = np.array([[0, 65535]], dtype=np.uint32)
    lum = to_luminance(arr, 16)
    assert lum[0, 0] == 0.0 and lum[0, 1] == 1.0


def test_to_luminance_rgb_rec601_weights():
    # pure primaries map to their luma weights exactly
    rgb = np.zeros((1, 3, 3), dtype=np.uint8)
    rgb[0, 0, 0] = 255
    rgb[0, 1, 1] = 255
    rgb[0, 2, 2] = 255
    lum = to_luminance(rgb, 8)
    assert lum[0, 0] == pytest.approx(0.299)
    assert lum[0, 1] == pytest.approx(0.587)
    assert lum[0, 2] == pytest.approx(0.114)


def test_to_luminance_rejects_odd_shapes():
    with pytest.raises(ValueError):
        to_luminance(np.zeros((4, 4, 2)), 8)


def test_frame_validates_shape_and_size():
    with pytest.raises(ValueError):
        Frame(id="x", width=100, height=100, luminance=np.zeros((50, 100)))
    with pytest.raises(ValueError):
        Frame(id="x", width=32, height=100, luminance=np.zeros((100, 32)))
    f = Frame(id="ok", width=64, height=64, luminance=np.zeros((64, 64)))
    assert f.id == "ok"


def test_list_images_sorted_by_relative_path(tmp_path):
    (tmp_path / "sub").mkdir()
    for name in ("b.png", "a.png", "sub/c.png"):
        p = tmp_path / name
        Image.fromarray(np.zeros((64, 64), dtype=np.uint8)).save(p)
    paths = list_images(tmp_path, "**/*.png")
    rel = [p.relative_to(tmp_path).as_posix() for p in paths]
    assert rel == ["a.png", "b.png", "sub/c.png"]


def test_list_images_missing_dir():
    with pytest.raises(DatasetError):
        list_images("/nonexistent/path/xyz")


def test_list_images_no_match_is_empty_dataset(tmp_path):
    with pytest.raises(EmptyDatasetError):
        list_images(tmp_path, "*.png")


def test_gray_png_roundtrip(tmp_path, rng):
    arr = rng.integers(0, 256, size=(80, 120), dtype=np.uint8)
    p = tmp_path / "g.png"
    Image.fromarray(arr).save(p)
    frame = load_frame(p, "g.png")
    assert frame.width == 120 and frame.height == 80
    np.testing.assert_allclose(frame.luminance, arr / 255.0, atol=1e-12)


def test_16bit_png_roundtrip(tmp_path, rng):
    arr = rng.integers(0, 65536, size=(64, 64), dtype=np.uint16)
    p = tmp_path / "d.png"
    Image.fromarray(arr).save(p)
    frame = load_frame(p, "d.png")
    np.testing.assert_allclose(frame.luminance, arr / 65535.0, atol=1e-12)


def test_rgb_png_uses_luma(tmp_path):
    arr = np.zeros((64, 64, 3), dtype=np.uint8)
    arr[..., 1] = 200  # green only
    p = tmp_path / "c.png"
    Image.fromarray(arr).save(p)
    frame = load_frame(p, "c.png")
    assert frame.luminance[0, 0] == pytest.approx(0.587 * 200 / 255)


def test_load_dataset_skips_undecodable(tmp_path):
    good = np.full((64, 64), 99, dtype=np.uint8)
    Image.fromarray(good).save(tmp_path / "ok.png")
    (tmp_path / "broken.png").write_bytes(b"not a png at all")
    report = SkipReport()
    with pytest.warns(UserWarning):
        frames = list(load_dataset(tmp_path, "*.png", report=report))
    assert [f.id for f in frames] == ["ok.png"]
    assert len(report.skipped) == 1
    assert report.skipped[0][0] == "broken.png"


def test_load_dataset_limit(tmp_path):
    for i in range(4):
        Image.fromarray(np.zeros((64, 64), dtype=np.uint8)).save(tmp_path / f"f{i}.png")
    frames = list(load_dataset(tmp_path, "*.png", limit=2))
    assert [f.id for f in frames] == ["f0.png", "f1.png"]
