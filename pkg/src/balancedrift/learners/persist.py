"""Model files: a zip archive (numpy ``.npz`` layout) holding one ``meta``
entry with versioned JSON and one flat array per fitted-state field."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import LearnerSpec, TrainedModel

FORMAT = "balancedrift-model"
FORMAT_VERSION = 1


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    meta = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "spec": model.spec.to_json(),
        "feature_names": list(model.feature_names),
        "train_summary": model.train_summary,
        "model_id": model.model_id,
        "arrays": sorted(model.state),
    }
    payload = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with path.open("wb") as fh:
        np.savez(fh, meta=payload, **{f"state_{k}": v for k, v in model.state.items()})
    return path


def load_model(path) -> TrainedModel:
    with np.load(Path(path), allow_pickle=False) as archive:
        if "meta" not in archive.files:
            raise ValueError(f"{path} is not a {FORMAT} file")
        meta = json.loads(archive["meta"].tobytes().decode())
        if meta.get("format") != FORMAT:
            raise ValueError(f"{path} is not a {FORMAT} file")
        if meta["version"] > FORMAT_VERSION:
            raise ValueError(f"{path}: format version {meta['version']} is newer than supported")
        state = {k: archive[f"state_{k}"].copy() for k in meta["arrays"]}
    spec = meta["spec"]
    return TrainedModel(
        spec=LearnerSpec(spec["family"], spec["hyperparameters"], spec["seed"]),
        feature_names=tuple(meta["feature_names"]),
        train_summary=meta["train_summary"],
        state=state,
        model_id=meta["model_id"],
    )
