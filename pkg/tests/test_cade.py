"""Genre gate and the 40-entry category feature vector."""
import numpy as np

from captain.bundles import unify
from captain.cade import (
    CADE_DIM, GENRE_LANDSCAPE, GENRE_OTHER, GENRE_PORTRAIT, LIMB_FEATURES,
    PERSON_AREA_COUNT_CUTOFF, _J, extract_cade_features, genre_gate,
    od_person_stats, pe_person_stats, scenery_area_fraction,
)
from captain.classmap import default_class_map
from captain.fusion import HysteresisThresholds, fuse
from helpers import box, joint, simple_bundle

CMAP = default_class_map()


def fused(bundle):
    return fuse(bundle, unify(bundle), CMAP)


class TestGenreGate:
    def test_dominant_water_means_landscape(self):
        # Water (parser class 22) on 30% of pixels, nobody in frame.
        sp_ids = np.zeros((10, 10), dtype=np.int32)
        sp_ids[:, :3] = 22
        sp_probs = np.where(sp_ids > 0, 0.8, 0.0)
        bundle = simple_bundle(width=10, height=10, sp=(sp_ids, sp_probs))
        fusion = fused(bundle)
        assert scenery_area_fraction(fusion, CMAP) == 0.3
        assert genre_gate(fusion, CMAP) == GENRE_LANDSCAPE

    def test_person_beats_scenery(self):
        sp_ids = np.full((10, 10), 22, dtype=np.int32)
        sp_probs = np.full((10, 10), 0.8)
        bundle = simple_bundle(width=10, height=10,
                               od=[box(1, 0.9, 0, 0, 9, 9)],
                               sp=(sp_ids, sp_probs))
        assert genre_gate(fused(bundle), CMAP) == GENRE_PORTRAIT

    def test_nothing_detected_is_other(self):
        bundle = simple_bundle(width=10, height=10)
        assert genre_gate(fused(bundle), CMAP) == GENRE_OTHER

    def test_scenery_boundary_is_strict(self):
        sp_ids = np.zeros((1000, 1), dtype=np.int32)
        sp_ids[:265] = 22
        sp_probs = np.where(sp_ids > 0, 0.8, 0.0)
        bundle = simple_bundle(width=1000, height=1, sp=(sp_ids, sp_probs))
        assert genre_gate(fused(bundle), CMAP) == GENRE_OTHER
        sp_ids[:266] = 22
        sp_probs = np.where(sp_ids > 0, 0.8, 0.0)
        above = simple_bundle(width=1000, height=1, sp=(sp_ids, sp_probs))
        assert genre_gate(fused(above), CMAP) == GENRE_LANDSCAPE


class TestCadeFeatures:
    def test_empty_detections_give_zero_vector(self):
        bundle = simple_bundle(width=8, height=8)
        feats = extract_cade_features(bundle, fused(bundle), CMAP)
        assert feats.shape == (CADE_DIM,)
        assert (feats == 0).all()

    def test_disjoint_best_people_have_zero_overlap(self):
        # Best detector person occupies the left edge; the skeleton sits
        # at the far right, so the overlap feature stays zero.
        people = [(joint(1, 28.0, 15.0, 0.9), joint(2, 28.0, 18.0, 0.8))]
        bundle = simple_bundle(width=32, height=24,
                               od=[box(1, 0.9, 0, 0, 3, 3)],
                               people=people)
        feats = extract_cade_features(bundle, fused(bundle), CMAP)
        assert feats[4] == 0.0
        assert feats[0] == 0.9

    def test_full_body_person_matches_straightline_recount(self):
        # Hand-built single-person bundle recomputed feature by feature.
        person = (
            joint(1, 16.0, 4.0, 0.90),   # nose
            joint(2, 16.0, 7.0, 0.85),   # neck
            joint(3, 13.0, 7.5, 0.80),   # right shoulder
            joint(4, 12.0, 11.0, 0.70),  # right elbow
            joint(5, 11.0, 14.0, 0.60),  # right wrist
            joint(6, 19.0, 7.5, 0.82),   # left shoulder
            joint(7, 20.0, 11.0, 0.72),  # left elbow
            joint(8, 21.0, 14.0, 0.62),  # left wrist
            joint(9, 14.0, 14.0, 0.75),  # right hip
            joint(10, 14.0, 18.0, 0.65),  # right knee
            joint(11, 14.0, 22.0, 0.55),  # right ankle
            joint(12, 18.0, 14.0, 0.76),  # left hip
            joint(13, 18.0, 18.0, 0.66),  # left knee
            joint(14, 18.0, 22.0, 0.56),  # left ankle
            joint(15, 17.0, 3.0, 0.88),  # left eye
            joint(16, 15.0, 3.0, 0.87),  # right eye
            joint(17, 18.5, 3.5, 0.50),  # left ear
            joint(18, 13.5, 3.5, 0.49),  # right ear
        )
        bundle = simple_bundle(width=32, height=26,
                               od=[box(1, 0.88, 10, 2, 22, 23)],
                               people=[person])
        fusion = fused(bundle)
        feats = extract_cade_features(bundle, fusion, CMAP)

        od_stats = od_person_stats(bundle, CMAP)
        pe_stats = pe_person_stats(bundle)
        assert len(od_stats) == 1 and len(pe_stats) == 1
        joint_scores = {j.joint_id: j.score for j in person}
        mean_score = float(np.mean([j.score for j in person]))

        expected = np.zeros(CADE_DIM)
        expected[0] = 0.88
        expected[1] = mean_score
        expected[2] = od_stats[0].area
        expected[3] = pe_stats[0].area
        # Overlap of the box and the joint discs, counted pixel by pixel.
        radius = 2
        overlap = 0
        for i in range(32):
            for j in range(26):
                in_box = 10 <= i <= 22 and 2 <= j <= 23
                on_person = any((i - p.x) ** 2 + (j - p.y) ** 2 <= radius ** 2
                                for p in person)
                overlap += in_box and on_person
        expected[4] = overlap / (32 * 26)
        expected[5] = 0.88
        expected[6] = mean_score
        expected[7] = od_stats[0].area
        expected[8] = pe_stats[0].area
        expected[9] = 1.0 if 0.88 > 0.44 else 0.0
        expected[10] = 1.0 if mean_score > 0.44 else 0.0
        expected[11] = 1.0 if od_stats[0].area > PERSON_AREA_COUNT_CUTOFF else 0.0
        expected[12] = 1.0 if pe_stats[0].area > PERSON_AREA_COUNT_CUTOFF else 0.0
        expected[13] = max(expected[9], expected[10])
        expected[14] = max(expected[11], expected[12])
        expected[15] = max(expected[13], expected[14])
        for offset, members in enumerate(LIMB_FEATURES):
            expected[16 + offset] = min(joint_scores[_J[name]] for name in members)
        np.testing.assert_allclose(feats, expected, atol=1e-12)

    def test_person_counts_use_high_threshold(self):
        bundle = simple_bundle(width=20, height=20, od=[
            box(1, 0.90, 0, 0, 9, 9),
            box(1, 0.50, 10, 10, 19, 19),
            box(1, 0.30, 0, 10, 9, 19),
        ])
        feats = extract_cade_features(bundle, fused(bundle), CMAP)
        assert feats[9] == 2.0   # two above the 0.44 HIGH threshold
        assert feats[11] == 3.0  # all three cover more than 5% each

    def test_custom_threshold_changes_counts(self):
        bundle = simple_bundle(width=20, height=20, od=[
            box(1, 0.90, 0, 0, 9, 9),
            box(1, 0.50, 10, 10, 19, 19),
        ])
        strict = HysteresisThresholds(overrides={(1, "od"): (0.09, 0.8)})
        fusion = fuse(bundle, unify(bundle), CMAP, strict)
        feats = extract_cade_features(bundle, fusion, CMAP)
        assert feats[9] == 1.0
