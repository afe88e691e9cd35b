import numpy as np
import pytest

from streambench import BBox, ValidationError, area_bucket, iou, iou_matrix


class TestBBox:
    def test_rejects_negative_extent(self):
        with pytest.raises(ValidationError):
            BBox(0, 0, -1, 5)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            BBox(float("nan"), 0, 1, 1)
        with pytest.raises(ValidationError):
            BBox(0, 0, float("inf"), 1)

    def test_area_and_translation(self):
        b = BBox(1, 2, 3, 4)
        assert b.area == 12
        assert b.translated(10, 20) == BBox(11, 22, 3, 4)


class TestIoU:
    def test_identity(self):
        b = BBox(0, 0, 10, 10)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(100, 100, 5, 5)) == 0.0

    def test_half_shift(self):
        # intersection 50, union 150
        assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)) == pytest.approx(1 / 3, abs=1e-15)

    def test_zero_area_boxes(self):
        z = BBox(5, 5, 0, 0)
        assert iou(z, z) == 0.0
        assert iou(z, BBox(0, 0, 10, 10)) == 0.0

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a = BBox(*rng.uniform(0, 50, 2), *rng.uniform(0.1, 30, 2))
            b = BBox(*rng.uniform(0, 50, 2), *rng.uniform(0.1, 30, 2))
            v = iou(a, b)
            assert 0.0 <= v <= 1.0
            assert v == iou(b, a)
            assert iou(a, a) == 1.0

    def test_translation_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a = BBox(*rng.uniform(0, 50, 2), *rng.uniform(0.1, 30, 2))
            b = BBox(*rng.uniform(0, 50, 2), *rng.uniform(0.1, 30, 2))
            dx, dy = rng.uniform(-100, 100, 2)
            assert iou(a.translated(dx, dy), b.translated(dx, dy)) == pytest.approx(
                iou(a, b), abs=1e-12
            )

    def test_scale_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            a = BBox(*rng.uniform(0, 50, 2), *rng.uniform(0.1, 30, 2))
            b = BBox(*rng.uniform(0, 50, 2), *rng.uniform(0.1, 30, 2))
            s = rng.uniform(0.01, 100)
            scaled_a = BBox(a.x * s, a.y * s, a.w * s, a.h * s)
            scaled_b = BBox(b.x * s, b.y * s, b.w * s, b.h * s)
            assert iou(scaled_a, scaled_b) == pytest.approx(iou(a, b), abs=1e-12)


class TestIoUMatrix:
    def test_single_pair(self):
        m = iou_matrix([BBox(0, 0, 10, 10)], [BBox(0, 0, 10, 10)])
        assert m.shape == (1, 1)
        assert m[0, 0] == 1.0

    def test_empty_operand(self):
        m = iou_matrix([], [BBox(0, 0, 1, 1)])
        assert m.shape == (0, 1)
        assert iou_matrix([BBox(0, 0, 1, 1)], []).shape == (1, 0)
        assert iou_matrix([], []).shape == (0, 0)

    def test_symmetric_half_shifts(self):
        # boxes shifted half a width to either side of the reference
        m = iou_matrix([BBox(0, 0, 10, 10), BBox(10, 0, 10, 10)], [BBox(5, 0, 10, 10)])
        np.testing.assert_allclose(m, [[1 / 3], [1 / 3]], atol=1e-15)
        far = iou_matrix([BBox(20, 0, 10, 10)], [BBox(5, 0, 10, 10)])
        assert far[0, 0] == 0.0

    def test_matches_scalar_iou(self):
        rng = np.random.default_rng(3)
        a = [BBox(*rng.uniform(0, 40, 2), *rng.uniform(0.1, 20, 2)) for _ in range(7)]
        b = [BBox(*rng.uniform(0, 40, 2), *rng.uniform(0.1, 20, 2)) for _ in range(5)]
        m = iou_matrix(a, b)
        for i in range(7):
            for j in range(5):
                assert m[i, j] == pytest.approx(iou(a[i], b[j]), abs=1e-12)


class TestAreaBucket:
    @pytest.mark.parametrize(
        "box,expected",
        [
            (BBox(0, 0, 10, 10), "small"),
            (BBox(0, 0, 32, 32), "medium"),  # boundary 1024 is medium (half-open)
            (BBox(0, 0, 95, 95), "medium"),
            (BBox(0, 0, 96, 96), "large"),
            (BBox(0, 0, 100, 100), "large"),
        ],
    )
    def test_buckets(self, box, expected):
        assert area_bucket(box) == expected
