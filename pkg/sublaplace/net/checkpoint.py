""" Lossless model checkpoints: layer specs, flat parameters and seed in one .npz blob """

import json
import logging
import pathlib
import numpy as np

from .model import Activation, LayerSpec, MlpModel

CHECKPOINT_FORMAT = "sublaplace-mlp-v1"


def save_checkpoint(model: MlpModel, path: str | pathlib.Path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": CHECKPOINT_FORMAT,
        "layers": [layer.serialize() for layer in model.layers],
        "seed": str(model.seed),
        "p": model.p,
    }
    with open(path, "wb") as f:
        np.savez(f, header=np.array(json.dumps(header)), theta=np.asarray(model.theta, dtype="<f8"))
    logging.info(f"checkpoint with p={model.p} written to {path}")
    return path


def load_checkpoint(path: str | pathlib.Path) -> MlpModel:
    with np.load(pathlib.Path(path), allow_pickle=False) as blob:
        header = json.loads(str(blob["header"]))
        theta = blob["theta"].astype(np.float64)
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    layers = tuple(
        LayerSpec(layer["in_dim"], layer["out_dim"], Activation[layer["activation"]]) for layer in header["layers"]
    )
    return MlpModel(layers, theta, int(header["seed"]))
