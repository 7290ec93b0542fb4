"""Command line interface: indexing, querying, matching, training, serving."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import cade as cade_mod
from .arpose import MIN_JOINTS, Skeleton, pose_vector
from .bundles import load_bundle, list_corpus, unify
from .classmap import default_class_map, load_class_map
from .cluster import fuzzy_membership, kmeans
from .errors import CaptainError
from .fusion import HysteresisThresholds, fuse, load_thresholds
from .index import (
    append_bundle, build, decompose, load_model, save_model,
)
from .matching import favorite_shot, pose_shot, to_polar
from .retrieval import FEATURES, UspWeights, rank
from .synth import write_synth_corpus


def parse_weights(text: str) -> UspWeights:
    """Parse 'vgg=0.5,cade=0.5' into preference weights."""
    mapping = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"weight entry {part!r} is not name=value")
        name, value = part.split("=", 1)
        mapping[name.strip()] = float(value)
    return UspWeights.from_mapping(mapping)


def _shared_pipeline_args(parser):
    parser.add_argument("--classmap", help="merged-class table JSON")
    parser.add_argument("--thresholds", help="hysteresis threshold table")
    parser.add_argument("--cade-model", help="trained category SVM file")


def _pipeline_kwargs(args):
    class_map = load_class_map(args.classmap) if args.classmap else default_class_map()
    thresholds = load_thresholds(args.thresholds) if args.thresholds \
        else HysteresisThresholds()
    model = cade_mod.load_svm_model(args.cade_model) if args.cade_model else None
    return {"class_map": class_map, "thresholds": thresholds, "cade_model": model}


def cmd_index_build(args) -> int:
    report = build(args.corpus, **_pipeline_kwargs(args))
    save_model(report.model, args.output)
    print(f"indexed {report.model.row_count} images into {args.output}")
    for path, message in report.errors:
        print(f"  skipped {path}: {message}", file=sys.stderr)
    return 0 if not report.errors else 1


def cmd_index_append(args) -> int:
    model = load_model(args.model)
    model = append_bundle(model, args.bundle, **_pipeline_kwargs(args))
    save_model(model, args.output or args.model)
    print(f"model now holds {model.row_count} images")
    return 0


def cmd_index_info(args) -> int:
    model = load_model(args.model)
    info = {
        "rows": model.row_count,
        "blocks": {name: int(block.shape[1]) for name, block in model.blocks.items()},
        "first_ids": list(model.ids[:10]),
    }
    print(json.dumps(info, indent=1))
    return 0


def cmd_query(args) -> int:
    model = load_model(args.model)
    record = decompose(load_bundle(args.bundle), **_pipeline_kwargs(args))
    weights = parse_weights(args.weights)
    items = rank(model, record, weights, top_k=args.top)
    if args.json:
        print(json.dumps({
            "query": record.image_id,
            "weights": weights.as_dict(),
            "results": [
                {"image_id": i.image_id, "score": i.score, "breakdown": i.breakdown}
                for i in items
            ],
        }, indent=1))
    else:
        for pos, item in enumerate(items, start=1):
            print(f"{pos:3d}. {item.image_id}  {item.score:.6f}")
    return 0


def _shot_records_and_skeletons(shots_dir, kwargs):
    records, skeletons = [], []
    for bundle_dir in list_corpus(shots_dir):
        bundle = load_bundle(bundle_dir)
        records.append(decompose(bundle, **kwargs))
        skeletons.append(_best_skeleton(bundle))
    return records, skeletons


def _best_skeleton(bundle):
    best, best_score = None, -1.0
    for person in bundle.people:
        skeleton = Skeleton.from_person(person)
        if skeleton.joint_count < MIN_JOINTS:
            continue
        if skeleton.mean_score() > best_score:
            best, best_score = skeleton, skeleton.mean_score()
    return best


def cmd_match(args) -> int:
    model = load_model(args.model)
    style_table = json.loads(Path(args.style).read_text())
    preferred = style_table["preferred"]
    ignored = style_table.get("ignored", [])
    weights = parse_weights(args.weights)
    kwargs = _pipeline_kwargs(args)
    records, skeletons = _shot_records_and_skeletons(args.shots, kwargs)

    style_model = model.submodel(preferred)
    favorite = favorite_shot(style_model, records, weights)
    output = {
        "favorite": favorite.shot_id,
        "scores": [
            {"shot_id": r.image_id, "score": float(s)}
            for r, s in zip(records, favorite.scores)
        ],
        "pose_shot": None,
    }

    taken = [to_polar(s) for s in skeletons if s is not None]
    if len(taken) == len(records) and taken:
        preferred_poses = _poses_for_ids(args.corpus, preferred) if args.corpus else []
        ignored_poses = _poses_for_ids(args.corpus, ignored) if args.corpus else []
        if preferred_poses:
            idx = pose_shot(taken, preferred_poses, ignored_poses)
            output["pose_shot"] = {"index": idx, "shot_id": records[idx].image_id}
    print(json.dumps(output, indent=1))
    return 0


def _poses_for_ids(corpus_dir, image_ids):
    wanted = set(image_ids)
    poses = []
    for bundle_dir in list_corpus(corpus_dir):
        if bundle_dir.name in wanted:
            skeleton = _best_skeleton(load_bundle(bundle_dir))
            if skeleton is not None:
                poses.append(to_polar(skeleton))
    return poses


def cmd_cade_train(args) -> int:
    kwargs = _pipeline_kwargs(args)
    class_map, thresholds = kwargs["class_map"], kwargs["thresholds"]
    features, labels = [], []
    for bundle_dir in list_corpus(args.corpus):
        bundle = load_bundle(bundle_dir)
        if bundle.category not in cade_mod.CATEGORIES:
            continue
        fusion = fuse(bundle, unify(bundle), class_map, thresholds)
        features.append(cade_mod.extract_cade_features(bundle, fusion, class_map))
        labels.append(cade_mod.CATEGORIES.index(bundle.category) + 1)
    if not features:
        print("no labeled bundles in corpus", file=sys.stderr)
        return 1
    model = cade_mod.train_mcmsvm(np.array(features), np.array(labels),
                                  c=args.svm_c, gamma=args.gamma)
    cade_mod.save_svm_model(model, args.output)
    accuracy = float((model.predict(np.array(features)) == np.array(labels)).mean())
    print(f"trained {len(model.binaries)} pairwise models on "
          f"{len(labels)} samples; training accuracy {accuracy:.4f}")
    return 0


def cmd_cade_eval(args) -> int:
    kwargs = _pipeline_kwargs(args)
    class_map, thresholds = kwargs["class_map"], kwargs["thresholds"]
    model = cade_mod.load_svm_model(args.model)
    total = correct = 0
    per_class = {}
    for bundle_dir in list_corpus(args.corpus):
        bundle = load_bundle(bundle_dir)
        if bundle.category not in cade_mod.CATEGORIES:
            continue
        fusion = fuse(bundle, unify(bundle), class_map, thresholds)
        feats = cade_mod.extract_cade_features(bundle, fusion, class_map)
        predicted = int(model.predict(feats)[0])
        expected = cade_mod.CATEGORIES.index(bundle.category) + 1
        total += 1
        correct += predicted == expected
        bucket = per_class.setdefault(bundle.category, [0, 0])
        bucket[0] += predicted == expected
        bucket[1] += 1
    if not total:
        print("no labeled bundles in corpus", file=sys.stderr)
        return 1
    print(json.dumps({
        "accuracy": correct / total,
        "samples": total,
        "per_class": {k: v[0] / v[1] for k, v in sorted(per_class.items())},
    }, indent=1))
    return 0


def cmd_arpose_cluster(args) -> int:
    kwargs = _pipeline_kwargs(args)
    vectors, owners = [], []
    for bundle_dir in list_corpus(args.corpus):
        bundle = load_bundle(bundle_dir)
        skeleton = _best_skeleton(bundle)
        if skeleton is None:
            continue
        vectors.append(pose_vector(skeleton))
        owners.append(bundle.image_id)
    if not vectors:
        print("no skeletons found in corpus", file=sys.stderr)
        return 1
    matrix = np.array(vectors)
    clusters = kmeans(matrix, k=args.k, restarts=args.restarts, seed=args.seed)
    report = {
        "k": args.k,
        "samples": len(owners),
        "distortion": clusters.distortion,
        "centers": [[float(v) for v in center] for center in clusters.centers],
        "clusters": [],
    }
    for c in range(args.k):
        member_rows = np.nonzero(clusters.assignments == c)[0]
        memberships = [
            (owners[i], float(fuzzy_membership(matrix[i], clusters.centers,
                                               clusters.fuzziness)[c]))
            for i in member_rows
        ]
        memberships.sort(key=lambda pair: -pair[1])
        report["clusters"].append({
            "size": int(len(member_rows)),
            "top_members": [
                {"image_id": name, "membership": q}
                for name, q in memberships[:args.top]
            ],
        })
    text = json.dumps(report, indent=1)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote cluster report to {args.output}")
    else:
        print(text)
    if args.save_centers:
        np.savez(args.save_centers, centers=clusters.centers,
                 fuzziness=clusters.fuzziness)
        print(f"wrote cluster centers to {args.save_centers}")
    return 0


def cmd_classmap(args) -> int:
    from .classmap import save_class_map

    save_class_map(default_class_map(), args.output)
    print(f"wrote default merge table to {args.output}")
    return 0


def cmd_synth(args) -> int:
    names = write_synth_corpus(args.output, count=args.count, seed=args.seed,
                               with_images=args.with_images)
    print(f"wrote {len(names)} bundles to {args.output}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .cluster import PoseClusters
    from .service import create_app

    model_path = args.model or os.environ.get("CAPTAIN_MODEL")
    if not model_path:
        print("no model: pass --model or set CAPTAIN_MODEL", file=sys.stderr)
        return 2
    clusters = None
    if args.pose_clusters:
        stored = np.load(args.pose_clusters)
        clusters = PoseClusters(centers=stored["centers"],
                                assignments=np.zeros(0, dtype=np.int64),
                                distortion=0.0,
                                fuzziness=float(stored["fuzziness"]))
    kwargs = _pipeline_kwargs(args)
    app = create_app(model=load_model(model_path), corpus_dir=args.corpus,
                     pose_clusters=clusters, **kwargs)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="captain",
        description="Composition model indexing, retrieval, and shot matching.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    index = sub.add_parser("index", help="build and inspect composition models")
    index_sub = index.add_subparsers(dest="index_command", required=True)

    p = index_sub.add_parser("build", help="index a corpus into a model directory")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_index_build)

    p = index_sub.add_parser("append", help="add one bundle to an existing model")
    p.add_argument("--model", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("-o", "--output", help="write to a new directory instead")
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_index_append)

    p = index_sub.add_parser("info", help="print model shape and ids")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_index_info)

    p = sub.add_parser("query", help="rank the corpus against one bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--weights", required=True, help="e.g. vgg=0.5,cade=0.5")
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--json", action="store_true")
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("match", help="pick the favorite among candidate shots")
    p.add_argument("--model", required=True)
    p.add_argument("--style", required=True, help="JSON file with preferred/ignored ids")
    p.add_argument("--shots", required=True, help="corpus directory of candidate shots")
    p.add_argument("--weights", required=True)
    p.add_argument("--corpus", help="source corpus for pose lookups")
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_match)

    cade_cmd = sub.add_parser("cade", help="category classifier training and evaluation")
    cade_sub = cade_cmd.add_subparsers(dest="cade_command", required=True)

    p = cade_sub.add_parser("train", help="train the category SVM on a labeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--svm-c", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_cade_train)

    p = cade_sub.add_parser("eval", help="evaluate a trained category SVM")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_cade_eval)

    arpose_cmd = sub.add_parser("arpose", help="pose clustering over a corpus")
    arpose_sub = arpose_cmd.add_subparsers(dest="arpose_command", required=True)

    p = arpose_sub.add_parser("cluster", help="cluster corpus poses")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=int, default=5, help="members listed per cluster")
    p.add_argument("-o", "--output")
    p.add_argument("--save-centers", help="also write centers as .npz for serving")
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_arpose_cluster)

    p = sub.add_parser("classmap", help="dump the default merge table for editing")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_classmap)

    p = sub.add_parser("synth", help="generate a synthetic demo corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--with-images", action="store_true",
                   help="also write placeholder photos for the UI")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--model", help="model directory (or CAPTAIN_MODEL)")
    p.add_argument("--corpus", help="corpus directory for image lookups")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8420)
    p.add_argument("--pose-clusters", help=".npz with cluster centers")
    _shared_pipeline_args(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CaptainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
