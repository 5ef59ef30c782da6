import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from edgemask.raster import (
    BandPartition,
    BinaryMask,
    Box,
    PixelGrid,
    apply_white_mask,
    boundary_band,
    crop_resample,
    iou,
    mask_iou,
    read_mask_pgm,
    read_pgm,
    resample_mask,
    upsample_mask,
    write_pgm,
)

from oracles import band_bruteforce, box_iou, crop_resample_oracle

boxes = st.tuples(st.integers(0, 12), st.integers(0, 12), st.integers(1, 8), st.integers(1, 8)).map(
    lambda t: Box(t[0], t[1], t[0] + t[2], t[1] + t[3]))


def test_box_rejects_empty_and_negative():
    with pytest.raises(ValueError):
        Box(3, 0, 3, 5)
    with pytest.raises(ValueError):
        Box(-1, 0, 3, 5)


def test_iou_examples():
    assert iou(Box(0, 0, 10, 10), Box(5, 5, 15, 15)) == pytest.approx(25 / 175)
    assert iou(Box(2, 3, 7, 9), Box(2, 3, 7, 9)) == 1.0
    assert iou(Box(0, 0, 5, 5), Box(10, 10, 20, 20)) == 0.0


@given(boxes, boxes)
def test_iou_symmetric_bounded_and_matches_pixel_count(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(box_iou(a.as_list(), b.as_list()))
    assert iou(a, a) == 1.0


def test_mask_iou_examples():
    a = BinaryMask.from_boxes(8, 8, [Box(0, 0, 4, 4)])
    b = BinaryMask.from_boxes(8, 8, [Box(2, 0, 6, 4)])
    # enumeration: overlap is columns 2-3 of four rows, union spans columns 0-5
    overlap = sum(1 for y in range(8) for x in range(8) if a.data[y, x] and b.data[y, x])
    union = sum(1 for y in range(8) for x in range(8) if a.data[y, x] or b.data[y, x])
    assert (overlap, union) == (8, 24)
    assert mask_iou(a, b) == pytest.approx(1 / 3)
    assert mask_iou(a, a) == 1.0
    far = BinaryMask.from_boxes(8, 8, [Box(6, 6, 8, 8)])
    assert mask_iou(a, far) == 0.0
    assert mask_iou(BinaryMask.empty(8, 8), BinaryMask.empty(8, 8)) == 1.0
    with pytest.raises(ValueError):
        mask_iou(a, BinaryMask.empty(7, 8))


def test_band_uniform_targets_have_no_boundary():
    for fill in (True, False):
        band = boundary_band(BinaryMask(np.full((9, 9), fill)), 2)
        assert not band.boundary.any()
        assert band.interior.sum() == 81


def test_band_centered_block():
    target = np.zeros((6, 6), dtype=bool)
    target[1:5, 1:5] = True
    band = boundary_band(BinaryMask(target), 1)
    assert np.array_equal(band.boundary, band_bruteforce(target, 1))
    assert len(band.boundary_coords()) + len(band.interior_coords()) == 36
    assert {(2, 2), (2, 3), (3, 2), (3, 3)} == band.interior_coords()
    assert len(band.boundary_coords()) == 32


def test_band_rejects_bad_k_and_shapes():
    with pytest.raises(ValueError):
        boundary_band(BinaryMask(np.zeros((4, 4), bool)), 0)
    with pytest.raises(ValueError):
        boundary_band(BinaryMask(np.zeros((4, 5), bool)), 1)
    with pytest.raises(ValueError):
        BandPartition(4, 1, np.zeros((3, 3), bool))


@settings(max_examples=150, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 9), st.integers(1, 9)).map(lambda t: (t[0], t[0]))),
       st.integers(1, 3))
def test_band_matches_bruteforce_and_grows_with_k(target, k):
    band = boundary_band(BinaryMask(target), k)
    assert np.array_equal(band.boundary, band_bruteforce(target, k))
    assert band.boundary.sum() + band.interior.sum() == target.size
    bigger = boundary_band(BinaryMask(target), k + 1)
    assert not (band.boundary & ~bigger.boundary).any()


def test_crop_resample_examples():
    blank = PixelGrid.blank(10, 10)
    assert not crop_resample(blank, Box(0, 0, 10, 10), 4).any()
    ink = PixelGrid(np.zeros((10, 10), np.uint8))
    assert np.allclose(crop_resample(ink, Box(2, 2, 9, 9), 4), 1.0)
    tiny = PixelGrid(np.array([[0, 255], [255, 255]], np.uint8))
    assert crop_resample(tiny, Box(0, 0, 2, 2), 1)[0, 0] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        crop_resample(tiny, Box(0, 0, 3, 2), 1)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 13), st.integers(1, 13))), st.integers(1, 7))
def test_crop_resample_matches_area_integration(pixels, m):
    grid = PixelGrid(pixels)
    box = Box(0, 0, grid.width, grid.height)
    got = crop_resample(grid, box, m)
    want = crop_resample_oracle(1.0 - pixels / 255.0, m)
    assert np.allclose(got, want, atol=1e-12)
    assert got.min() >= 0.0 and got.max() <= 1.0


def test_upsample_examples():
    box = Box(3, 2, 7, 6)
    full = upsample_mask(BinaryMask(np.ones((5, 5), bool)), box, 10, 8)
    assert full == BinaryMask.from_boxes(10, 8, [box])
    assert upsample_mask(BinaryMask(np.zeros((5, 5), bool)), box, 10, 8).count() == 0
    checker = BinaryMask(np.array([[True, False], [False, True]]))
    out = upsample_mask(checker, box, 10, 8).data[box.slices()]
    assert np.array_equal(out, np.kron(checker.data, np.ones((2, 2), bool)))


def test_resample_then_upsample_of_box_aligned_mask_is_exact():
    page = BinaryMask.from_boxes(40, 40, [Box(7, 4, 22, 36)])
    box = Box(4, 4, 28, 36)  # 24 x 32, cells of 3 x 4 px at m = 8
    roi = resample_mask(page, box, 8)
    assert upsample_mask(roi, box, 40, 40) == page


def test_apply_white_mask():
    grid = PixelGrid(np.random.default_rng(0).integers(0, 256, (12, 9)).astype(np.uint8))
    assert apply_white_mask(grid, BinaryMask.empty(9, 12)) == grid
    assert (apply_white_mask(grid, ~BinaryMask.empty(9, 12)).data == 255).all()
    region = BinaryMask.from_boxes(9, 12, [Box(1, 1, 5, 7)])
    once = apply_white_mask(grid, region)
    assert apply_white_mask(once, region) == once
    with pytest.raises(ValueError):
        apply_white_mask(grid, BinaryMask.empty(12, 9))


def test_white_mask_over_headline_box(small_corpus):
    page = small_corpus[0]
    head = page.children(page.articles()[0].id, "headline")[0]
    region = head.mask(page.width, page.height)
    before = page.grid.ink()
    after = apply_white_mask(page.grid, region).ink()
    assert before[region.data].sum() > 0
    assert after[region.data].sum() == 0
    assert np.array_equal(after[~region.data], before[~region.data])


def test_pgm_round_trip(tmp_path):
    grid = PixelGrid(np.random.default_rng(1).integers(0, 256, (7, 11)).astype(np.uint8))
    write_pgm(tmp_path / "g.pgm", grid)
    assert read_pgm(tmp_path / "g.pgm") == grid
    mask = BinaryMask(np.random.default_rng(2).random((5, 6)) > 0.5)
    write_pgm(tmp_path / "m.pgm", mask)
    assert read_mask_pgm(tmp_path / "m.pgm") == mask


def test_pgm_header_comments_and_errors(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 200]))
    assert read_pgm(p).data.tolist() == [[0, 200]]
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P2\n2 1\n255\n0 1\n")
    with pytest.raises(ValueError):
        read_pgm(bad)
    short = tmp_path / "short.pgm"
    short.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(ValueError):
        read_pgm(short)
