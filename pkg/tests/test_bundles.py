"""Bundle loading, validation, and value unification."""
import json

import numpy as np
import pytest

from captain.bundles import (
    PROB_CLAMP, VGG_DIM, gender_vector, load_bundle, save_bundle, unify,
)
from captain.errors import MalformedBundle, ValueOutOfRange
from helpers import box, joint, simple_bundle


def _minimal_manifest(**overrides):
    manifest = {
        "image_id": "tiny",
        "width": 1,
        "height": 1,
        "vgg": [0.0] * VGG_DIM,
        "objects": [],
        "people": [],
    }
    manifest.update(overrides)
    return manifest


def _write(tmp_path, manifest):
    bundle_dir = tmp_path / "b"
    bundle_dir.mkdir()
    (bundle_dir / "manifest.json").write_text(json.dumps(manifest))
    return bundle_dir


class TestLoadBundle:
    def test_minimal_bundle(self, tmp_path):
        bundle = load_bundle(_write(tmp_path, _minimal_manifest()))
        assert bundle.image_id == "tiny"
        assert bundle.od == () and bundle.people == ()
        assert bundle.vgg.shape == (VGG_DIM,)

    def test_short_vgg_rejected(self, tmp_path):
        manifest = _minimal_manifest(vgg=[0.0] * (VGG_DIM - 1))
        with pytest.raises(MalformedBundle):
            load_bundle(_write(tmp_path, manifest))

    def test_probability_one_rejected(self, tmp_path):
        manifest = _minimal_manifest(
            width=4, height=4,
            objects=[{"class_id": 1, "probability": 1.0, "box": [0, 0, 1, 1]}])
        with pytest.raises(ValueOutOfRange):
            load_bundle(_write(tmp_path, manifest))

    def test_box_outside_image_rejected(self, tmp_path):
        manifest = _minimal_manifest(
            width=4, height=4,
            objects=[{"class_id": 1, "probability": 0.5, "box": [0, 0, 4, 1]}])
        with pytest.raises(ValueOutOfRange):
            load_bundle(_write(tmp_path, manifest))

    def test_duplicate_joint_rejected(self, tmp_path):
        person = [
            {"joint_id": 1, "x": 0.0, "y": 0.0, "score": 0.5},
            {"joint_id": 1, "x": 1.0, "y": 1.0, "score": 0.5},
        ]
        manifest = _minimal_manifest(width=4, height=4, people=[person])
        with pytest.raises(MalformedBundle):
            load_bundle(_write(tmp_path, manifest))

    def test_negative_rating_rejected(self, tmp_path):
        with pytest.raises(ValueOutOfRange):
            load_bundle(_write(tmp_path, _minimal_manifest(rating=-1.0)))

    def test_roundtrip_through_disk(self, tmp_path):
        rng = np.random.default_rng(7)
        bundle = simple_bundle(
            width=6, height=5,
            od=[box(3, 0.7, 1, 1, 4, 3)],
            people=[(joint(1, 2, 2, 0.9), joint(2, 2, 3, 0.8))],
            sp=(rng.integers(0, 151, size=(6, 5)),
                rng.uniform(0, 0.99, size=(6, 5))),
            saliency=rng.uniform(0, 1, size=(6, 5)),
            vgg=rng.normal(size=VGG_DIM).astype(np.float32),
            rating=12.5, views=42, gender="female", category="facial",
        )
        reloaded = load_bundle(save_bundle(bundle, tmp_path / "rt"))
        assert reloaded.image_id == bundle.image_id
        assert reloaded.rating == bundle.rating
        np.testing.assert_array_equal(reloaded.vgg, bundle.vgg)
        np.testing.assert_array_equal(reloaded.sp_ids, bundle.sp_ids)
        np.testing.assert_allclose(reloaded.sp_probs, bundle.sp_probs, atol=1e-7)
        assert reloaded.od == bundle.od
        assert reloaded.people == bundle.people


class TestUnify:
    def test_probability_to_score_values(self):
        # p = 0.5 -> 1 bit, p = 0.75 -> 2 bits.
        bundle = simple_bundle(width=4, height=4, od=[
            box(5, 0.5, 0, 0, 1, 1),
            box(7, 0.75, 2, 2, 3, 3),
        ])
        t_od, _, _ = unify(bundle)
        assert t_od.scores[0, 0] == 1.0
        assert t_od.scores[3, 3] == 2.0

    def test_zero_probability_leaves_pixel_unlabeled(self):
        bundle = simple_bundle(width=2, height=2, od=[box(5, 0.0, 0, 0, 1, 1)])
        t_od, _, _ = unify(bundle)
        assert (t_od.ids == 0).all() and (t_od.scores == 0).all()

    def test_clamp_boundary_score_is_twenty(self):
        bundle = simple_bundle(width=2, height=2, od=[box(5, PROB_CLAMP, 0, 0, 1, 1)])
        t_od, _, _ = unify(bundle)
        assert t_od.scores[0, 0] == 20.0

    def test_score_strictly_increasing_in_probability(self):
        ps = np.linspace(0.01, PROB_CLAMP, 50)
        scores = []
        for p in ps:
            bundle = simple_bundle(width=1, height=1, od=[box(5, float(p), 0, 0, 0, 0)])
            t_od, _, _ = unify(bundle)
            scores.append(t_od.scores[0, 0])
        assert all(b > a for a, b in zip(scores, scores[1:]))

    def test_id_zero_iff_score_zero(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            bundle = simple_bundle(
                width=6, height=6,
                od=[box(int(rng.integers(1, 81)), float(rng.uniform(0, 0.99)),
                        0, 0, int(rng.integers(0, 6)), int(rng.integers(0, 6)))],
                sp=(rng.integers(0, 151, size=(6, 6)),
                    rng.uniform(0, 0.99, size=(6, 6))),
                people=[(joint(1, 2.0, 2.0, float(rng.uniform(0, 0.9))),)],
            )
            for tensor in unify(bundle):
                np.testing.assert_array_equal(tensor.ids == 0, tensor.scores == 0)

    def test_overlapping_boxes_highest_probability_wins(self):
        bundle = simple_bundle(width=4, height=4, od=[
            box(9, 0.6, 0, 0, 3, 3),
            box(2, 0.8, 1, 1, 2, 2),
        ])
        t_od, _, _ = unify(bundle)
        assert t_od.ids[0, 0] == 9
        assert t_od.ids[1, 1] == 2

    def test_probability_tie_takes_lower_class_id(self):
        bundle = simple_bundle(width=2, height=2, od=[
            box(9, 0.6, 0, 0, 1, 1),
            box(2, 0.6, 0, 0, 1, 1),
        ])
        t_od, _, _ = unify(bundle)
        assert (t_od.ids == 2).all()

    def test_deterministic(self):
        bundle = simple_bundle(width=5, height=5,
                               od=[box(1, 0.7, 0, 0, 4, 4)],
                               people=[(joint(1, 2, 2, 0.8), joint(2, 3, 3, 0.7))])
        first = unify(bundle)
        second = unify(bundle)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.ids, b.ids)
            np.testing.assert_array_equal(a.scores, b.scores)

    def test_joint_discs_cover_radius(self):
        bundle = simple_bundle(width=20, height=20, people=[(joint(4, 10, 10, 0.9),)])
        _, _, t_pe = unify(bundle)
        assert t_pe.ids[10, 10] == 4
        assert t_pe.ids[10, 12] == 4  # radius is 2 at this size
        assert t_pe.ids[10, 13] == 0


class TestGenderVector:
    @pytest.mark.parametrize("tag,expected", [
        ("male", [1, 0, 0]),
        ("female", [0, 1, 0]),
        ("unknown", [0, 0, 1]),
    ])
    def test_one_hot(self, tag, expected):
        np.testing.assert_array_equal(gender_vector(tag), expected)
