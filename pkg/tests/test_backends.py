import numpy as np
import pytest

from countloop.backends.sim import (
    Image, SimBackend, SimConfig, palette_for, sim_aesthetic, sim_detect,
    sim_generate,
)
from countloop.layout import iou_pairs, relax_overlaps

from conftest import lattice_layout, make_layout, random_separated_layout


def rect_iou(a, b):
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(ix1 - ix0, 0) * max(iy1 - iy0, 0)
    union = ((a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter)
    return inter / union if union else 0.0


class TestSimGenerate:
    def test_disjoint_counts_match_layout(self):
        layout = make_layout([("cat", 100, 100, 220, 220),
                              ("cat", 400, 100, 520, 220),
                              ("dog", 100, 500, 220, 620)])
        image, manifest = sim_generate(layout, SimConfig(drop_prob=0.0))
        assert manifest.counts() == {"cat": 2, "dog": 1}
        assert image.width == image.height == 1024

    def test_iou_merge_records_one_instance(self):
        a = (100, 100, 300, 300)
        b = (180, 100, 380, 300)
        assert rect_iou(a, b) >= 0.1  # geometry oracle confirms the trigger
        layout = make_layout([("cup", *a), ("cup", *b)])
        _, manifest = sim_generate(layout, SimConfig(merge_iou=0.1))
        assert manifest.counts() == {"cup": 1}
        assert len(manifest.instances) == 1
        assert set(manifest.instances[0].member_ids) == {"cup_1", "cup_2"}

    def test_below_threshold_pair_stays_separate(self):
        a = (100, 100, 300, 300)
        b = (290, 100, 490, 300)
        assert rect_iou(a, b) < 0.1
        layout = make_layout([("cup", *a), ("cup", *b)])
        _, manifest = sim_generate(layout, SimConfig(merge_iou=0.1))
        assert manifest.counts() == {"cup": 2}

    def test_determinism_bytes_and_manifest(self):
        layout = make_layout([("cat", 100, 100, 260, 260),
                              ("cup", 500, 500, 600, 600)])
        cfg = SimConfig(drop_prob=0.3, noise_seed=9)
        img1, man1 = sim_generate(layout, cfg)
        img2, man2 = sim_generate(layout, cfg)
        assert img1.to_png() == img2.to_png()
        assert man1.to_dict() == man2.to_dict()

    def test_drop_prob_one_drops_everything(self):
        layout = make_layout([("cat", 100, 100, 200, 200),
                              ("cat", 400, 400, 500, 500)])
        _, manifest = sim_generate(layout, SimConfig(drop_prob=1.0, noise_seed=1))
        assert manifest.counts() == {}
        assert sorted(manifest.dropped) == ["cat_1", "cat_2"]

    def test_drop_prob_partial_seeded(self):
        layout = random_separated_layout(np.random.default_rng(5), 40)
        _, man_a = sim_generate(layout, SimConfig(drop_prob=0.5, noise_seed=7))
        _, man_b = sim_generate(layout, SimConfig(drop_prob=0.5, noise_seed=8))
        total_a = sum(man_a.counts().values())
        assert 0 < total_a < 40
        assert man_a.to_dict() != man_b.to_dict()  # seed changes the pattern


class TestSimDetect:
    def test_manifest_mode_disjoint(self):
        layout = random_separated_layout(np.random.default_rng(0), 50,
                                         categories=("orange",))
        image, manifest = sim_generate(layout, SimConfig())
        det = sim_detect(image, manifest, ["orange"], mode="manifest")
        assert det.counts == {"orange": 50}

    def test_pixel_mode_agrees_on_disjoint(self):
        layout = random_separated_layout(np.random.default_rng(1), 50,
                                         categories=("orange",))
        image, manifest = sim_generate(layout, SimConfig())
        manifest_counts = sim_detect(image, manifest, ["orange"], "manifest").counts
        pixel_counts = sim_detect(image, manifest, ["orange"], "pixel").counts
        assert pixel_counts == manifest_counts == {"orange": 50}

    @pytest.mark.parametrize("seed", range(8))
    def test_mode_agreement_random_layouts(self, seed):
        rng = np.random.default_rng(seed)
        layout = random_separated_layout(rng, int(rng.integers(5, 60)))
        image, manifest = sim_generate(layout, SimConfig())
        cats = sorted(layout.category_counts())
        a = sim_detect(image, manifest, cats, "manifest").counts
        b = sim_detect(image, manifest, cats, "pixel").counts
        assert a == b

    @pytest.mark.parametrize("seed", range(8))
    def test_mode_agreement_with_merged_clusters(self, seed):
        """Clustered same-size boxes: merge components must count identically
        in both modes (the outline ring keeps near-miss pairs separable)."""
        rng = np.random.default_rng(100 + seed)
        boxes = []
        for k in range(10):
            cx = int(rng.integers(150, 850))
            cy = int(rng.integers(150, 850))
            boxes.append(("cup", cx - 70, cy - 70, cx + 70, cy + 70))
        layout = make_layout(boxes)
        image, manifest = sim_generate(layout, SimConfig(merge_iou=0.1))
        a = sim_detect(image, manifest, ["cup"], "manifest").counts
        b = sim_detect(image, manifest, ["cup"], "pixel").counts
        assert a == b, f"seed {seed}: manifest {a} vs pixel {b}"

    def test_merged_pair_counts_one_in_pixel_mode(self):
        layout = make_layout([("cup", 100, 100, 300, 300),
                              ("cup", 180, 100, 380, 300)])
        image, manifest = sim_generate(layout, SimConfig(merge_iou=0.1))
        det = sim_detect(image, manifest, ["cup"], "pixel")
        assert det.counts == {"cup": 1}

    def test_empty_layout_zero_counts(self):
        layout = make_layout([])
        image, manifest = sim_generate(layout, SimConfig())
        det = sim_detect(image, manifest, ["cat", "dog"])
        assert det.counts == {"cat": 0, "dog": 0}


class TestSimAesthetic:
    def test_clean_layout_scores_one(self):
        layout = make_layout([("a", 40, 60, 140, 160),
                              ("b", 300, 90, 420, 210),
                              ("c", 520, 400, 640, 520)])
        assert sim_aesthetic(layout) == 1.0

    def test_lattice_penalized(self):
        assert sim_aesthetic(lattice_layout(4, 4, pitch=150, box=60)) <= 0.7

    def test_full_overlap_pair(self):
        layout = make_layout([("a", 100, 100, 300, 300),
                              ("b", 100, 100, 300, 300)])
        assert sim_aesthetic(layout) <= 0.5

    def test_bounds(self):
        layout = lattice_layout(5, 5, pitch=100, box=90)
        assert 0.0 <= sim_aesthetic(layout) <= 1.0


class TestPalette:
    def test_stable_and_distinct(self):
        cats = ["cat", "dog", "cup", "orange", "watch", "vase"]
        p1 = palette_for(cats)
        p2 = palette_for(list(reversed(cats)))
        assert p1 == p2
        assert len(set(p1.values())) == len(cats)

    def test_collision_open_addressing(self):
        # 33 categories cannot collide silently in a 32-entry palette
        cats = [f"cat{i}" for i in range(32)]
        palette = palette_for(cats)
        assert len(set(palette.values())) == 32


class TestImagePng:
    def test_round_trip(self):
        arr = np.zeros((16, 16, 3), dtype=np.uint8)
        arr[4:8, 4:8] = (255, 0, 0)
        img = Image(pixels=arr)
        again = Image.from_png(img.to_png())
        assert np.array_equal(again.pixels, arr)


class TestSimBackend:
    def test_backend_bundle(self):
        layout = relax_overlaps(
            random_separated_layout(np.random.default_rng(3), 12), 8)
        backend = SimBackend(SimConfig())
        image, manifest = backend.generate(layout, "p", "bg", seed=4)
        det = backend.detect(image, manifest, sorted(layout.category_counts()))
        assert det.counts == layout.category_counts()
        assert 0.0 <= backend.aesthetic(layout, image) <= 1.0
