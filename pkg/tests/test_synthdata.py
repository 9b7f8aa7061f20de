import numpy as np
import pytest

from config.configuration import SceneConfig
from synthdata import (
    Dataset,
    MultiGranularSample,
    check_alignment,
    generate_dataset,
    generate_sample,
    load_sample,
    read_pgm,
    read_ppm,
    save_sample,
    write_pgm,
    write_ppm,
)
from utils.errors import ContractError, FormatError


class TestGenerateSample:
    def test_same_index_same_pixels(self, scene_cfg):
        assert generate_sample(scene_cfg, 3).same_pixels(generate_sample(scene_cfg, 3))

    def test_different_indices_differ(self, scene_cfg):
        assert not generate_sample(scene_cfg, 0).same_pixels(generate_sample(scene_cfg, 1))

    def test_seed_changes_scenes(self):
        a = generate_sample(SceneConfig(seed=0), 0)
        b = generate_sample(SceneConfig(seed=1), 0)
        assert not a.same_pixels(b)

    def test_granularities_align(self, scene_cfg):
        for index in range(20):
            sample = generate_sample(scene_cfg, index)
            assert check_alignment(sample, scene_cfg.class_count) == []

    def test_shapes_respect_count_and_visibility(self, scene_cfg):
        for index in range(20):
            sample = generate_sample(scene_cfg, index)
            low, high = scene_cfg.shape_count_range
            assert len(sample.shapes) <= high
            for shape in sample.shapes:
                visible = int((sample.instance == shape["id"]).sum())
                assert visible == shape["visible_pixels"] >= scene_cfg.min_visible_pixels
                assert shape["class_id"] == scene_cfg.class_id(shape["kind"])

    def test_rgb_is_quantized(self, sample):
        levels = sample.rgb * 255.0
        np.testing.assert_array_equal(levels, np.round(levels))
        assert sample.rgb.min() >= 0.0 and sample.rgb.max() <= 1.0

    def test_empty_scene(self):
        cfg = SceneConfig(shape_count_range=(0, 0))
        sample = generate_sample(cfg, 0)
        assert sample.instance.max() == 0
        assert set(np.unique(sample.semantic)) <= {0, 1}

    def test_requested_shape_count_gives_consecutive_ids(self):
        cfg = SceneConfig(shape_count_range=(3, 3), seed=7)
        sample = generate_sample(cfg, 0)
        ids = sorted(int(i) for i in np.unique(sample.instance) if i)
        assert ids == [1, 2, 3]
        for instance_id in ids:
            assert (sample.instance == instance_id).sum() >= cfg.min_visible_pixels

    def test_negative_index(self, scene_cfg):
        with pytest.raises(ContractError):
            generate_sample(scene_cfg, -1)


class TestCodec:
    def test_ppm_round_trip(self, tmp_path, sample):
        write_ppm(tmp_path / "x.ppm", sample.rgb)
        np.testing.assert_array_equal(read_ppm(tmp_path / "x.ppm"), sample.rgb)

    def test_pgm_16_bit_is_big_endian(self, tmp_path):
        values = np.array([[0, 1], [258, 65535]])
        write_pgm(tmp_path / "x.pgm", values, maxval=65535)
        blob = (tmp_path / "x.pgm").read_bytes()
        assert blob.endswith(bytes([0, 0, 0, 1, 1, 2, 255, 255]))
        np.testing.assert_array_equal(read_pgm(tmp_path / "x.pgm"), values)

    def test_header_comments_are_skipped(self, tmp_path):
        (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x07\x09")
        np.testing.assert_array_equal(read_pgm(tmp_path / "c.pgm"), [[7, 9]])

    def test_truncated_raster(self, tmp_path, sample):
        path = tmp_path / "x.ppm"
        write_ppm(path, sample.rgb)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(FormatError, match="x.ppm"):
            read_ppm(path)

    def test_wrong_magic(self, tmp_path, sample):
        write_ppm(tmp_path / "x.ppm", sample.rgb)
        with pytest.raises(FormatError):
            read_pgm(tmp_path / "x.ppm")


@pytest.fixture(scope="module")
def hundred_samples(tmp_path_factory):
    root = tmp_path_factory.mktemp("hundred")
    cfg = SceneConfig()
    generate_dataset(cfg, 100, root)
    return cfg, root


class TestDataset:
    def test_sample_round_trip(self, tmp_path, sample, scene_cfg):
        save_sample(sample, tmp_path / "s", scene_cfg.class_count)
        loaded = load_sample(tmp_path / "s")
        assert loaded.same_pixels(sample)
        assert loaded.seed == sample.seed and loaded.index == sample.index

    def test_generate_and_read_back(self, tmp_path, scene_cfg):
        manifest = generate_dataset(scene_cfg, 3, tmp_path / "data", workers=2)
        assert [entry.index for entry in manifest.samples] == [0, 1, 2]
        dataset = Dataset(tmp_path / "data")
        assert len(dataset) == 3 and dataset.scene == scene_cfg
        assert dataset[2].same_pixels(generate_sample(scene_cfg, 2))

    def test_out_of_range_class_id(self, tmp_path, sample, scene_cfg):
        save_sample(sample, tmp_path / "s", scene_cfg.class_count)
        broken = sample.semantic.astype(np.int64)
        broken[0, 0] = scene_cfg.class_count
        write_pgm(tmp_path / "s" / "semantic.pgm", broken)
        with pytest.raises(FormatError, match="class id"):
            load_sample(tmp_path / "s")

    def test_dimension_mismatch(self, tmp_path, sample, scene_cfg):
        save_sample(sample, tmp_path / "s", scene_cfg.class_count)
        write_pgm(tmp_path / "s" / "semantic.pgm", np.zeros((4, 4), dtype=np.int64))
        with pytest.raises(FormatError, match="dimension mismatch"):
            load_sample(tmp_path / "s")

    def test_wide_instance_ids_survive(self, tmp_path):
        instance = np.zeros((4, 4), dtype=np.uint16)
        instance[1:3, 1:3] = 300
        semantic = np.where(instance > 0, 2, 0).astype(np.uint8)
        sample = MultiGranularSample(rgb=np.zeros((4, 4, 3)), instance=instance, semantic=semantic)
        save_sample(sample, tmp_path / "wide", class_count=5)
        loaded = load_sample(tmp_path / "wide")
        np.testing.assert_array_equal(loaded.instance, instance)
        assert loaded.instance.max() == 300

    def test_single_regeneration_is_byte_identical(self, tmp_path, hundred_samples):
        cfg, root = hundred_samples
        save_sample(generate_sample(cfg, 57), tmp_path / "again", cfg.class_count)
        original = Dataset(root).manifest.samples[57].path
        for name in ("rgb.ppm", "instance.pgm", "semantic.pgm", "meta.json"):
            assert (tmp_path / "again" / name).read_bytes() == (root / original / name).read_bytes()

    def test_every_thing_class_appears(self, hundred_samples):
        cfg, root = hundred_samples
        dataset = Dataset(root)
        histogram = np.bincount(
            np.concatenate([dataset[i].semantic.ravel() for i in range(len(dataset))]), minlength=cfg.class_count
        )
        assert np.all(histogram > 0), histogram

    def test_index_out_of_range(self, tmp_path, scene_cfg):
        generate_dataset(scene_cfg, 1, tmp_path / "data")
        with pytest.raises(IndexError):
            Dataset(tmp_path / "data")[1]
