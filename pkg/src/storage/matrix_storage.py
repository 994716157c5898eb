import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np

from src.IR.models import Picture
from src.propagation.superoperator import SuperoperatorMatrix

logger = logging.getLogger(__name__)

RAW_DTYPE = np.dtype("<c16")
RAW_LAYOUT = "row-major, (re, im) little-endian float64 pairs"


class MatrixStorage:
    """
    Dense superoperators as .npy files with a JSON sidecar describing interval and picture.

    Each save also writes `<name>.bin`, the bare row-major (re, im) double pairs, for tools that do
    not read .npy; the sidecar records its shape and layout.
    """

    def __init__(self, out_dir: str = "reports/matrices"):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def save(self, name: str, T: SuperoperatorMatrix, metadata: Optional[Dict[str, Any]] = None) -> str:
        path = os.path.join(self.out_dir, f"{name}.npy")
        np.save(path, T.matrix)
        raw_path = os.path.join(self.out_dir, f"{name}.bin")
        np.ascontiguousarray(T.matrix, dtype=RAW_DTYPE).tofile(raw_path)
        sidecar = {"s": T.s, "t": T.t, "picture": T.picture.value, "hilbert_dim": T.hilbert_dim,
                   "vectorization": "column-stacking", "format": "npy",
                   "raw": os.path.basename(raw_path), "raw_layout": RAW_LAYOUT, "shape": list(T.matrix.shape)}
        sidecar.update(metadata or {})
        with open(os.path.join(self.out_dir, f"{name}.json"), "w", encoding="utf-8") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
        logger.debug(f"Saved {T} to {path}")
        return path

    def load(self, name: str) -> SuperoperatorMatrix:
        with open(os.path.join(self.out_dir, f"{name}.json"), encoding="utf-8") as f:
            sidecar = json.load(f)
        matrix = np.load(os.path.join(self.out_dir, f"{name}.npy"))
        return SuperoperatorMatrix(matrix, sidecar["s"], sidecar["t"], Picture(sidecar["picture"]))

    def load_raw(self, name: str) -> np.ndarray:
        with open(os.path.join(self.out_dir, f"{name}.json"), encoding="utf-8") as f:
            shape = tuple(json.load(f)["shape"])
        return np.fromfile(os.path.join(self.out_dir, f"{name}.bin"), dtype=RAW_DTYPE).reshape(shape)
