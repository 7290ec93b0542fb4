"""HTTP session service wrapping the retrieval and matching pipeline.

Sessions are held in memory; every response is a pure function of the
loaded model, the session state, and the request body, so replaying a
request log reproduces the same responses.
"""
from __future__ import annotations

import mimetypes
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .arpose import MIN_JOINTS, Skeleton
from .bundles import bundle_from_manifest, list_corpus, load_bundle, unify
from .cade import CATEGORIES, genre_gate
from .classmap import ClassMap, default_class_map
from .cluster import PoseClusters, fuzzy_membership
from .errors import CaptainError, MalformedBundle, NoSharedJoints
from .fusion import HysteresisThresholds, fuse
from .index import CompositionModel, decompose
from .matching import favorite_shot, pose_shot, to_polar
from .retrieval import UspWeights, rank


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class Session:
    session_id: str
    record: object
    bundle: object
    rank_cache: dict = field(default_factory=dict)
    last_rank_ids: list | None = None
    last_weights: dict | None = None
    preferred: list | None = None
    ignored: list | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _category_name(record) -> str | None:
    if record.cade.sum() <= 0:
        return None
    return CATEGORIES[int(np.argmax(record.cade))]


def _weights_from(payload) -> UspWeights:
    if not isinstance(payload, dict):
        raise ServiceError(422, "invalid_weights", "weights must be an object")
    try:
        return UspWeights.from_mapping(payload)
    except (ValueError, TypeError) as exc:
        raise ServiceError(422, "invalid_weights", str(exc)) from exc


def create_app(model: CompositionModel | None = None,
               corpus_dir: str | Path | None = None,
               class_map: ClassMap | None = None,
               thresholds: HysteresisThresholds | None = None,
               cade_model=None,
               pose_clusters: PoseClusters | None = None) -> FastAPI:
    app = FastAPI(title="captain", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    state = {
        "model": model,
        "class_map": class_map or default_class_map(),
        "thresholds": thresholds or HysteresisThresholds(),
        "cade_model": cade_model,
        "pose_clusters": pose_clusters,
        "sessions": {},
        "counter": 0,
        "lock": threading.Lock(),
        "corpus_dir": Path(corpus_dir) if corpus_dir else None,
        "bundle_dirs": None,
    }

    def bundle_dirs() -> dict[str, Path]:
        if state["bundle_dirs"] is None:
            mapping = {}
            if state["corpus_dir"] is not None:
                for bundle_dir in list_corpus(state["corpus_dir"]):
                    try:
                        bundle = load_bundle(bundle_dir)
                    except CaptainError:
                        continue
                    mapping[bundle.image_id] = bundle_dir
            state["bundle_dirs"] = mapping
        return state["bundle_dirs"]

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    def require_model() -> CompositionModel:
        if state["model"] is None or state["model"].row_count == 0:
            raise ServiceError(409, "model_not_loaded",
                               "no composition model is loaded")
        return state["model"]

    def get_session(session_id: str) -> Session:
        session = state["sessions"].get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session",
                               f"session {session_id!r} does not exist")
        return session

    async def parse_body(request: Request) -> dict:
        try:
            payload = await request.json()
        except Exception as exc:
            raise ServiceError(400, "malformed_bundle",
                               f"request body is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ServiceError(400, "malformed_bundle", "request body must be an object")
        return payload

    def bundle_from_payload(payload: dict):
        manifest = dict(payload)
        sp_inline = manifest.pop("sp", None)
        saliency_inline = manifest.pop("saliency", None)
        try:
            return bundle_from_manifest(manifest, sp_inline=sp_inline,
                                        saliency_inline=saliency_inline)
        except MalformedBundle as exc:
            raise ServiceError(400, "malformed_bundle", str(exc)) from exc

    def decomposition_summary(bundle, record) -> dict:
        class_map = state["class_map"]
        fusion = fuse(bundle, unify(bundle), class_map, state["thresholds"])
        genre = genre_gate(fusion, class_map)
        top = np.argsort(-record.iod)[:5]
        top_objects = [
            {"class_id": int(k) + 1,
             "name": class_map.name_of(int(k) + 1),
             "weight": float(record.iod[k])}
            for k in top if record.iod[k] > 0
        ]
        memberships = []
        clusters = state["pose_clusters"]
        if clusters is not None and record.arpose.any():
            vec = record.arpose.astype(np.float64)
            q = fuzzy_membership(vec / np.linalg.norm(vec), clusters.centers,
                                 clusters.fuzziness)
            order = np.argsort(-q)[:3]
            memberships = [{"cluster": int(c), "membership": float(q[c])}
                           for c in order]
        return {
            "genre": genre,
            "category": _category_name(record),
            "person_present": bool(fusion.person),
            "top_objects": top_objects,
            "pose_clusters": memberships,
        }

    @app.get("/model")
    async def model_info():
        model = require_model()
        return {
            "rows": model.row_count,
            "blocks": {name: int(block.shape[1])
                       for name, block in model.blocks.items()},
        }

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        require_model()
        payload = await parse_body(request)
        if ("image_id" in payload) == ("bundle" in payload):
            raise ServiceError(400, "malformed_bundle",
                               "provide exactly one of image_id or bundle")
        if "image_id" in payload:
            image_id = payload["image_id"]
            source = bundle_dirs().get(image_id)
            if source is None:
                raise ServiceError(404, "unknown_image",
                                   f"image {image_id!r} is not in the corpus")
            bundle = load_bundle(source)
        else:
            bundle = bundle_from_payload(payload["bundle"])
        record = decompose(bundle, state["class_map"], state["thresholds"],
                           state["cade_model"])
        with state["lock"]:
            state["counter"] += 1
            session = Session(session_id=f"s{state['counter']}",
                              record=record, bundle=bundle)
            state["sessions"][session.session_id] = session
        return {
            "session_id": session.session_id,
            "image_id": bundle.image_id,
            "summary": decomposition_summary(bundle, record),
        }

    @app.post("/sessions/{session_id}/rank")
    async def rank_session(session_id: str, request: Request):
        model = require_model()
        session = get_session(session_id)
        payload = await parse_body(request)
        weights = _weights_from(payload.get("weights", {}))
        top_k = payload.get("top_k", 20)
        if not isinstance(top_k, int) or top_k < 1:
            raise ServiceError(422, "invalid_weights", "top_k must be a positive integer")
        key = (tuple(weights.as_array().tolist()), top_k)
        with session.lock:
            cached = session.rank_cache.get(key)
            if cached is None:
                items = rank(model, session.record, weights, top_k=top_k)
                cached = {
                    "session_id": session.session_id,
                    "weights": weights.as_dict(),
                    "results": [
                        {"image_id": item.image_id,
                         "score": item.score,
                         "breakdown": item.breakdown}
                        for item in items
                    ],
                }
                session.rank_cache = {key: cached}
            session.last_rank_ids = [r["image_id"] for r in cached["results"]]
            session.last_weights = weights.as_dict()
        return cached

    @app.post("/sessions/{session_id}/style-set")
    async def set_style(session_id: str, request: Request):
        session = get_session(session_id)
        payload = await parse_body(request)
        preferred = payload.get("preferred", [])
        ignored = payload.get("ignored", [])
        if not isinstance(preferred, list) or not isinstance(ignored, list):
            raise ServiceError(422, "invalid_style_set",
                               "preferred and ignored must be lists of image ids")
        if not preferred:
            raise ServiceError(422, "invalid_style_set",
                               "preferred set must not be empty")
        overlap = set(preferred) & set(ignored)
        if overlap:
            raise ServiceError(422, "invalid_style_set",
                               f"ids in both sets: {sorted(overlap)}")
        with session.lock:
            known = set(session.last_rank_ids or [])
            unknown = [i for i in preferred + ignored if i not in known]
            if unknown:
                raise ServiceError(422, "invalid_style_set",
                                   f"ids not in the last ranked results: {unknown}")
            session.preferred = list(preferred)
            session.ignored = list(ignored)
        return {"session_id": session.session_id,
                "preferred": session.preferred, "ignored": session.ignored}

    def _best_skeleton(bundle):
        best, best_score = None, -1.0
        for person in bundle.people:
            skeleton = Skeleton.from_person(person)
            if skeleton.joint_count < MIN_JOINTS:
                continue
            if skeleton.mean_score() > best_score:
                best, best_score = skeleton, skeleton.mean_score()
        return best

    def _corpus_poses(image_ids) -> list:
        poses = []
        for image_id in image_ids:
            source = bundle_dirs().get(image_id)
            if source is None:
                continue
            skeleton = _best_skeleton(load_bundle(source))
            if skeleton is not None:
                try:
                    poses.append(to_polar(skeleton))
                except CaptainError:
                    continue
        return poses

    @app.post("/sessions/{session_id}/shots")
    async def submit_shots(session_id: str, request: Request):
        model = require_model()
        session = get_session(session_id)
        payload = await parse_body(request)
        if session.preferred is None:
            raise ServiceError(409, "no_style_set",
                               "select a style set before submitting shots")
        shots_payload = payload.get("shots")
        if not isinstance(shots_payload, list) or not shots_payload:
            raise ServiceError(400, "malformed_bundle",
                               "shots must be a non-empty list of bundles")
        bundles = [bundle_from_payload(entry) for entry in shots_payload]
        weights = _weights_from(payload["weights"]) if "weights" in payload \
            else _weights_from(session.last_weights or {})
        kwargs = (state["class_map"], state["thresholds"], state["cade_model"])
        records = [decompose(b, *kwargs) for b in bundles]

        style_model = model.submodel(session.preferred)
        favorite = favorite_shot(style_model, records, weights)

        pose_result = None
        skeletons = [_best_skeleton(b) for b in bundles]
        if all(s is not None for s in skeletons):
            try:
                taken = [to_polar(s) for s in skeletons]
                preferred_poses = _corpus_poses(session.preferred)
                ignored_poses = _corpus_poses(session.ignored or [])
                if preferred_poses:
                    idx = pose_shot(taken, preferred_poses, ignored_poses)
                    pose_result = {"index": idx, "shot_id": records[idx].image_id}
            except (CaptainError, NoSharedJoints):
                pose_result = None

        return {
            "session_id": session.session_id,
            "favorite": favorite.shot_id,
            "favorite_index": favorite.index,
            "scores": [
                {"shot_id": record.image_id, "score": float(score)}
                for record, score in zip(records, favorite.scores)
            ],
            "pose_shot": pose_result,
        }

    @app.get("/sessions/{session_id}")
    async def session_snapshot(session_id: str):
        """JSON snapshot of the session for client-side persistence."""
        session = get_session(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "image_id": session.bundle.image_id,
                "weights": session.last_weights,
                "ranked_ids": session.last_rank_ids,
                "preferred": session.preferred,
                "ignored": session.ignored,
            }

    @app.get("/images/{image_id}")
    async def image_bytes(image_id: str):
        source = bundle_dirs().get(image_id)
        if source is None:
            raise ServiceError(404, "unknown_image",
                               f"image {image_id!r} is not in the corpus")
        bundle = load_bundle(source)
        if not bundle.image_path:
            raise ServiceError(404, "no_image_file",
                               f"bundle {image_id!r} references no photo")
        photo = source / bundle.image_path
        if not photo.is_file():
            raise ServiceError(404, "no_image_file",
                               f"photo for {image_id!r} is missing on disk")
        media_type = mimetypes.guess_type(photo.name)[0] or "application/octet-stream"
        return Response(content=photo.read_bytes(), media_type=media_type)

    return app
