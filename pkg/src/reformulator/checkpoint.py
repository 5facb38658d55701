"""Versioned checkpoint container.

Layout: one ASCII control line `reformulator-checkpoint v1 header=<n>`,
then <n> bytes of JSON header (config snapshot, vocabulary, tensor manifest,
optimizer scalar state, metadata), then the binary payload: every manifest
tensor's float64 values, little-endian, row-major, concatenated in manifest
order. Round-trips are bit-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .config import config_from_dict, config_to_dict
from .corpus import Vocabulary
from .errors import DataError
from .model import ReformulationModel
from .optim import Adam

MAGIC = "reformulator-checkpoint"
VERSION = 1


def save_checkpoint(path, model: ReformulationModel, optimizer: Adam | None = None,
                    epoch: int | None = None, best_val_loss: float | None = None):
    tensors: list[tuple[str, np.ndarray]] = []
    for p in model.parameters():
        tensors.append((p.name, p.data))
    adam_meta = None
    if optimizer is not None:
        adam_meta = {"t": optimizer.t, "lr": optimizer.lr,
                     "beta1": optimizer.beta1, "beta2": optimizer.beta2,
                     "eps": optimizer.eps}
        for name, arr in optimizer.state_tensors().items():
            tensors.append((name, arr))

    header = {
        "format": MAGIC,
        "version": VERSION,
        "config": config_to_dict(model.config),
        "vocab": model.vocab.corpus_words,
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in tensors],
        "adam": adam_meta,
        "epoch": epoch,
        "best_val_loss": best_val_loss,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(("%s v%d header=%d\n" % (MAGIC, VERSION, len(header_bytes))).encode("ascii"))
        f.write(header_bytes)
        for _, arr in tensors:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (model, optimizer_or_None, metadata dict)."""
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise DataError("cannot open checkpoint: %s" % e)
    try:
        nl = blob.index(b"\n")
        control = blob[:nl].decode("ascii")
        magic, version, header_field = control.split(" ")
        if magic != MAGIC or version != "v%d" % VERSION:
            raise ValueError("bad control line")
        header_len = int(header_field.split("=", 1)[1])
        header = json.loads(blob[nl + 1: nl + 1 + header_len].decode("utf-8"))
        payload = blob[nl + 1 + header_len:]
        if header.get("format") != MAGIC or header.get("version") != VERSION:
            raise ValueError("header format mismatch")
        config = config_from_dict(header["config"])
        vocab = Vocabulary(header["vocab"])
        arrays = {}
        offset = 0
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            nbytes = count * 8
            chunk = payload[offset: offset + nbytes]
            if len(chunk) != nbytes:
                raise ValueError("payload truncated at tensor %s" % entry["name"])
            arrays[entry["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
            offset += nbytes
        if offset != len(payload):
            raise ValueError("trailing bytes in payload")
    except DataError:
        raise
    except Exception as e:
        raise DataError("corrupted checkpoint %s: %s" % (path, e))

    model = ReformulationModel(vocab, config)
    named = model.named_parameters()
    for name, p in named.items():
        if name not in arrays:
            raise DataError("checkpoint is missing tensor %s" % name)
        if arrays[name].shape != p.data.shape:
            raise DataError("checkpoint tensor %s has shape %r, expected %r"
                            % (name, arrays[name].shape, p.data.shape))
        p.data[...] = arrays[name]

    optimizer = None
    if header.get("adam") is not None:
        am = header["adam"]
        optimizer = Adam(model.parameters(), lr=am["lr"], beta1=am["beta1"],
                         beta2=am["beta2"], eps=am["eps"])
        try:
            optimizer.load_state_tensors(arrays, am["t"])
        except KeyError as e:
            raise DataError("checkpoint is missing optimizer tensor %s" % e)

    meta = {"epoch": header.get("epoch"), "best_val_loss": header.get("best_val_loss")}
    return model, optimizer, meta
