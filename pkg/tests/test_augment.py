"""Seeded augmentation sampling, transform application, TTA views."""

import numpy as np
import pytest
from PIL import Image

from lesionkit.augment import (
    AugmentationPolicy,
    TransformSample,
    apply_cutout,
    apply_transform,
    contact_sheet,
    sample_transform,
    transform_rng,
    tta_variants,
)


def random_image(rng, h=32, w=32):
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


class TestPolicy:
    def test_defaults(self):
        policy = AugmentationPolicy(crop_pad_size=380)
        assert policy.max_rotate == 45.0
        assert policy.p_affine == 0.5
        assert policy.do_flip and policy.flip_vert
        assert policy.max_zoom == 1.05
        assert policy.max_lighting == 0.2
        assert policy.max_shear == 0.0
        assert policy.cutout_holes == (1, 1)
        assert policy.cutout_length == (16, 16)
        assert policy.cutout_p == 0.5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"crop_pad_size": 0},
            {"crop_pad_size": 64, "p_affine": 1.5},
            {"crop_pad_size": 64, "cutout_p": -0.1},
            {"crop_pad_size": 64, "max_rotate": -1.0},
            {"crop_pad_size": 64, "max_zoom": 0.9},
            {"crop_pad_size": 64, "cutout_holes": (3, 1)},
            {"crop_pad_size": 64, "cutout_length": (0, 4)},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            AugmentationPolicy(**kwargs)

    def test_cutout_zero_length_ok_when_disabled(self):
        AugmentationPolicy(crop_pad_size=64, cutout_p=0.0, cutout_length=(0, 0))


class TestTransformRng:
    def test_same_key_same_stream(self):
        a = transform_rng(11, "ISIC_0000000#3")
        b = transform_rng(11, "ISIC_0000000#3")
        assert a.random(5).tolist() == b.random(5).tolist()

    def test_seed_and_key_both_matter(self):
        base = transform_rng(11, "x").random()
        assert transform_rng(12, "x").random() != base
        assert transform_rng(11, "y").random() != base

    def test_key_separator_not_confusable(self):
        # "1" + "2x" must not collide with "12" + "x"
        assert transform_rng(1, "2x").random() != transform_rng(12, "x").random()


class TestSampleTransform:
    def test_deterministic(self):
        policy = AugmentationPolicy(crop_pad_size=64)
        for i in range(50):
            key = f"img_{i:04d}"
            assert sample_transform(policy, 3, key) == sample_transform(policy, 3, key)

    def test_all_disabled_gives_identity(self):
        policy = AugmentationPolicy(
            crop_pad_size=48,
            p_affine=0.0,
            do_flip=False,
            flip_vert=False,
            max_lighting=0.0,
            cutout_p=0.0,
        )
        for i in range(100):
            sample = sample_transform(policy, 0, f"k{i}")
            assert sample.is_identity
            assert (sample.dx, sample.dy) == (0.5, 0.5)

    def test_bounds_respected(self):
        policy = AugmentationPolicy(
            crop_pad_size=64,
            max_rotate=30.0,
            p_affine=0.7,
            max_zoom=1.1,
            max_lighting=0.3,
            max_shear=5.0,
            cutout_holes=(2, 4),
            cutout_length=(8, 16),
            cutout_p=0.6,
        )
        saw_affine = saw_plain = saw_cutout = False
        for i in range(2000):
            s = sample_transform(policy, 9, f"item{i}")
            assert abs(s.angle) <= 30.0
            assert 0.0 <= s.dx <= 1.0 and 0.0 <= s.dy <= 1.0
            assert 1.0 <= s.zoom <= 1.1
            assert abs(s.shear) <= 5.0
            assert abs(s.lighting) <= 0.3
            if s.apply_affine:
                saw_affine = True
            else:
                saw_plain = True
                assert s.angle == 0.0 and s.zoom == 1.0 and s.shear == 0.0
            if s.cutout:
                saw_cutout = True
                assert 2 <= len(s.cutout) <= 4
                for x, y, w, h in s.cutout:
                    assert w == h and 8 <= w <= 16
                    assert 0 <= x and x + w <= 64
                    assert 0 <= y and y + h <= 64
        assert saw_affine and saw_plain and saw_cutout

    def test_mean_absolute_angle(self):
        # |angle| ~ U(0, 45) has mean 22.5; 4000 draws pin it within 1.5
        policy = AugmentationPolicy(crop_pad_size=64, p_affine=1.0, max_rotate=45.0)
        angles = [
            abs(sample_transform(policy, 5, f"s{i}").angle) for i in range(4000)
        ]
        assert np.mean(angles) == pytest.approx(22.5, abs=1.5)

    def test_flip_rates_reasonable(self):
        policy = AugmentationPolicy(crop_pad_size=64)
        flips = [sample_transform(policy, 2, f"f{i}").flip_h for i in range(2000)]
        assert 0.4 < np.mean(flips) < 0.6


class TestApplyTransform:
    def test_identity_sample_is_byte_identical(self, rng):
        img = random_image(rng, 48, 48)
        out = apply_transform(img, TransformSample.identity(48))
        np.testing.assert_array_equal(out, img)

    def test_rotation_90_matches_rot90(self, rng):
        img = random_image(rng, 33, 33)
        for angle, k in ((90.0, -1), (-90.0, 1), (180.0, 2)):
            t = TransformSample(crop_size=33, apply_affine=True, angle=angle)
            np.testing.assert_array_equal(apply_transform(img, t), np.rot90(img, k=k))

    def test_flip_h_reverses_columns(self, rng):
        img = random_image(rng, 20, 20)
        t = TransformSample(crop_size=20, flip_h=True)
        np.testing.assert_array_equal(apply_transform(img, t), img[:, ::-1])

    def test_flip_v_reverses_rows(self, rng):
        img = random_image(rng, 20, 20)
        t = TransformSample(crop_size=20, flip_v=True)
        np.testing.assert_array_equal(apply_transform(img, t), img[::-1, :])

    def test_flip_twice_restores(self, rng):
        img = random_image(rng, 24, 24)
        t = TransformSample(crop_size=24, flip_h=True, flip_v=True)
        np.testing.assert_array_equal(apply_transform(apply_transform(img, t), t), img)

    def test_center_crop(self, rng):
        img = random_image(rng, 30, 30)
        t = TransformSample(crop_size=20)  # dx = dy = 0.5
        np.testing.assert_array_equal(apply_transform(img, t), img[5:25, 5:25])

    def test_corner_crops_follow_anchor(self, rng):
        img = random_image(rng, 30, 30)
        top_left = TransformSample(crop_size=20, dx=0.0, dy=0.0)
        bottom_right = TransformSample(crop_size=20, dx=1.0, dy=1.0)
        np.testing.assert_array_equal(apply_transform(img, top_left), img[:20, :20])
        np.testing.assert_array_equal(apply_transform(img, bottom_right), img[10:, 10:])

    def test_pad_path_matches_np_pad_reflect(self, rng):
        img = random_image(rng, 5, 6)
        t = TransformSample(crop_size=9, dx=0.3, dy=0.8)
        left = round(0.3 * (9 - 6))
        top = round(0.8 * (9 - 5))
        expected = np.pad(
            img,
            ((top, (9 - 5) - top), (left, (9 - 6) - left), (0, 0)),
            mode="reflect",
        )
        np.testing.assert_array_equal(apply_transform(img, t), expected)

    def test_lighting_pushes_away_from_midgrey(self):
        img = np.full((4, 4, 3), 200, dtype=np.uint8)
        brighter = apply_transform(img, TransformSample(crop_size=4, lighting=0.5))
        assert (brighter > 200).all()
        dark = np.full((4, 4, 3), 60, dtype=np.uint8)
        darker = apply_transform(dark, TransformSample(crop_size=4, lighting=0.5))
        assert (darker < 60).all()

    def test_lighting_zero_skipped_exactly(self, rng):
        img = random_image(rng)
        out = apply_transform(img, TransformSample(crop_size=32, lighting=0.0))
        np.testing.assert_array_equal(out, img)

    def test_cutout_rect_zeroed(self, rng):
        img = random_image(rng, 16, 16)
        img[img == 0] = 1  # keep zeros unambiguous
        t = TransformSample(crop_size=16, cutout=((3, 5, 4, 4),))
        out = apply_transform(img, t)
        assert (out[5:9, 3:7] == 0).all()
        mask = np.ones((16, 16), dtype=bool)
        mask[5:9, 3:7] = False
        np.testing.assert_array_equal(out[mask], img[mask])

    def test_zoom_magnifies_center(self):
        # center pixel block grows under zoom; corners fall off
        img = np.zeros((21, 21, 3), dtype=np.uint8)
        img[9:12, 9:12] = 255
        t = TransformSample(crop_size=21, apply_affine=True, zoom=2.0)
        out = apply_transform(img, t)
        assert (out[8:13, 8:13] == 255).all()
        assert int((out > 0).sum()) > int((img > 0).sum())

    def test_tiny_image_rejected(self):
        with pytest.raises(ValueError, match="2x2"):
            apply_transform(np.zeros((1, 4, 3), dtype=np.uint8), TransformSample(crop_size=4))

    def test_policy_to_output_shape(self, rng):
        policy = AugmentationPolicy(crop_pad_size=40)
        img = random_image(rng, 64, 80)
        for i in range(20):
            out = apply_transform(img, sample_transform(policy, 1, f"p{i}"))
            assert out.shape == (40, 40, 3)
            assert out.dtype == np.uint8

    def test_sampled_stream_reproducible(self, rng):
        policy = AugmentationPolicy(crop_pad_size=32)
        img = random_image(rng, 48, 48)
        first = [
            apply_transform(img, sample_transform(policy, 7, f"r{i}")).tobytes()
            for i in range(25)
        ]
        second = [
            apply_transform(img, sample_transform(policy, 7, f"r{i}")).tobytes()
            for i in range(25)
        ]
        assert first == second


class TestApplyCutout:
    def test_fill_value(self, rng):
        img = random_image(rng, 10, 10)
        out = apply_cutout(img, (2, 3, 4, 5), fill=7)
        assert (out[3:8, 2:6] == 7).all()

    def test_original_untouched(self, rng):
        img = random_image(rng, 10, 10)
        snapshot = img.copy()
        apply_cutout(img, (0, 0, 10, 10))
        np.testing.assert_array_equal(img, snapshot)

    def test_whole_image(self, rng):
        img = random_image(rng, 8, 8)
        assert (apply_cutout(img, (0, 0, 8, 8)) == 0).all()

    @pytest.mark.parametrize("rect", [(-1, 0, 4, 4), (0, 0, 0, 4), (5, 5, 6, 2), (0, 7, 2, 2)])
    def test_out_of_bounds_rejected(self, rect):
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="cutout"):
            apply_cutout(img, rect)


class TestTtaVariants:
    def test_eight_square_views(self, rng):
        img = random_image(rng, 100, 100)
        variants = tta_variants(img, crop_size=90)
        assert len(variants) == 8
        for v in variants:
            assert v.shape == (90, 90, 3)

    def test_pairs_are_mutual_flips(self, rng):
        img = random_image(rng, 100, 120)
        variants = tta_variants(img, crop_size=90)
        for k in range(0, 8, 2):
            np.testing.assert_array_equal(variants[k + 1], variants[k][:, ::-1])

    def test_corner_origins_against_pil_oracle(self, rng):
        img = random_image(rng, 100, 100)
        scaled = np.asarray(
            Image.fromarray(img).resize((105, 105), resample=Image.BILINEAR),
            dtype=np.uint8,
        )
        variants = tta_variants(img, crop_size=90, scale=1.05)
        origins = ((0, 0), (15, 0), (0, 15), (15, 15))
        for k, (x, y) in enumerate(origins):
            np.testing.assert_array_equal(variants[2 * k], scaled[y : y + 90, x : x + 90])

    def test_scale_one_skips_resampling(self, rng):
        img = random_image(rng, 50, 50)
        variants = tta_variants(img, crop_size=50, scale=1.0)
        np.testing.assert_array_equal(variants[0], img)
        np.testing.assert_array_equal(variants[1], img[:, ::-1])

    def test_deterministic(self, rng):
        img = random_image(rng, 64, 80)
        a = [v.tobytes() for v in tta_variants(img, crop_size=60)]
        b = [v.tobytes() for v in tta_variants(img, crop_size=60)]
        assert a == b

    def test_crop_larger_than_scaled_rejected(self):
        img = np.zeros((50, 50, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="exceeds"):
            tta_variants(img, crop_size=60, scale=1.05)

    def test_scale_below_one_rejected(self):
        img = np.zeros((50, 50, 3), dtype=np.uint8)
        with pytest.raises(ValueError, match="scale"):
            tta_variants(img, crop_size=40, scale=0.9)


class TestContactSheet:
    def test_grid_dimensions(self, rng):
        tiles = [random_image(rng, 90, 90) for _ in range(8)]
        sheet = contact_sheet(tiles, columns=4, gap=2)
        assert sheet.shape == (2 * 90 + 2, 4 * 90 + 3 * 2, 3)
        np.testing.assert_array_equal(sheet[:90, :90], tiles[0])
        np.testing.assert_array_equal(sheet[92:, 92 * 3 : 92 * 3 + 90], tiles[7])

    def test_separator_is_white(self, rng):
        tiles = [random_image(rng, 10, 10) for _ in range(2)]
        sheet = contact_sheet(tiles, columns=2, gap=2)
        assert (sheet[:, 10:12] == 255).all()

    def test_ragged_last_row_padded_white(self, rng):
        tiles = [random_image(rng, 10, 10) for _ in range(3)]
        sheet = contact_sheet(tiles, columns=2, gap=1)
        assert sheet.shape == (21, 21, 3)
        assert (sheet[11:, 11:] == 255).all()

    def test_size_mismatch_rejected(self, rng):
        with pytest.raises(ValueError, match="equally sized"):
            contact_sheet([random_image(rng, 8, 8), random_image(rng, 9, 8)])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="no images"):
            contact_sheet([])
