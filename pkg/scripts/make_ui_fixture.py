#!/usr/bin/env python3
"""Record a scripted session for the frontend conformance tests.

Runs the real HTTP service (in-process) through a create/rank/style/shots
flow, runs the CLI matcher on the same model, style set, and shot bundles,
and freezes every response body into frontend/tests/fixtures/session.json.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "frontend" / "tests" / "fixtures" / "session.json"

sys.path.insert(0, str(ROOT / "src"))

from captain.bundles import save_bundle, write_corpus_manifest  # noqa: E402
from captain.index import build, save_model  # noqa: E402
from captain.service import create_app  # noqa: E402
from captain.synth import synth_bundle, write_synth_corpus  # noqa: E402


def bundle_manifest(bundle) -> dict:
    return {
        "image_id": bundle.image_id,
        "width": bundle.width,
        "height": bundle.height,
        "rating": bundle.rating,
        "views": bundle.views,
        "gender": bundle.gender,
        "vgg": [float(v) for v in bundle.vgg],
        "objects": [
            {"class_id": b.class_id, "probability": b.probability, "box": list(b.box)}
            for b in bundle.od
        ],
        "people": [
            [{"joint_id": j.joint_id, "x": j.x, "y": j.y, "score": j.score}
             for j in person]
            for person in bundle.people
        ],
        "tags": list(bundle.tags),
    }


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="captain-ui-fixture-"))
    corpus = workdir / "corpus"
    write_synth_corpus(corpus, count=14, seed=21)
    model = build(corpus).model
    model_dir = workdir / "model.cm"
    save_model(model, model_dir)

    rng = np.random.default_rng(99)
    shot_bundles = [synth_bundle(rng, f"shot{i}", kind="portrait") for i in range(3)]
    shots_dir = workdir / "shots"
    for bundle in shot_bundles:
        save_bundle(bundle, shots_dir / bundle.image_id)
    write_corpus_manifest(shots_dir, [b.image_id for b in shot_bundles])

    client = TestClient(create_app(model=model, corpus_dir=corpus))
    weights = {"vgg": 0.4, "iod": 0.6}

    created = client.post("/sessions", json={"image_id": "img0001"})
    created.raise_for_status()
    sid = created.json()["session_id"]

    ranked = client.post(f"/sessions/{sid}/rank",
                         json={"weights": weights, "top_k": 8})
    ranked.raise_for_status()
    ranked_ids = [r["image_id"] for r in ranked.json()["results"]]
    preferred = ranked_ids[:3]
    ignored = ranked_ids[3:4]

    style = client.post(f"/sessions/{sid}/style-set",
                        json={"preferred": preferred, "ignored": ignored})
    style.raise_for_status()

    shots = client.post(
        f"/sessions/{sid}/shots",
        json={"shots": [bundle_manifest(b) for b in shot_bundles],
              "weights": weights})
    shots.raise_for_status()

    style_path = workdir / "style.json"
    style_path.write_text(json.dumps({"preferred": preferred, "ignored": ignored}))
    weight_arg = ",".join(f"{k}={v}" for k, v in weights.items())
    cli = subprocess.run(
        [sys.executable, "-m", "captain.cli", "match",
         "--model", str(model_dir), "--style", str(style_path),
         "--shots", str(shots_dir), "--weights", weight_arg,
         "--corpus", str(corpus)],
        capture_output=True, text=True, check=True,
        env={"PYTHONPATH": str(ROOT / "src"), "PATH": "/usr/bin:/bin:/usr/local/bin"},
    )
    cli_result = json.loads(cli.stdout)

    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps({
        "weights": weights,
        "create_response": created.json(),
        "rank_response": ranked.json(),
        "style_request": {"preferred": preferred, "ignored": ignored},
        "shots_response": shots.json(),
        "cli_match": cli_result,
    }, indent=1))
    print(f"fixture written to {FIXTURE}")
    print(f"service favorite: {shots.json()['favorite']}, "
          f"cli favorite: {cli_result['favorite']}")


if __name__ == "__main__":
    main()
