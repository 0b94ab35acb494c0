"""Plain-text and image writers shared by the command-line front end."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np


def to_pgm_bytes(grid: np.ndarray, scale: str = "linear") -> bytes:
    """Binary 8-bit PGM (P5) of a grid indexed ``[X_index, P_index]``.

    Columns run along X, rows along P with the largest P at the top. NaN cells
    render black. ``scale`` is ``"linear"`` (max-normalised) or ``"log"``
    (``log1p`` of counts).
    """
    v = np.nan_to_num(np.asarray(grid, dtype=float), nan=0.0)
    v = np.clip(v, 0.0, None)
    if scale == "log":
        v = np.log1p(v)
    elif scale != "linear":
        raise ValueError(f"unknown scale {scale!r}")
    top = v.max()
    img = np.zeros_like(v) if top <= 0 else v / top
    pix = np.round(img * 255.0).astype(np.uint8)
    pix = np.ascontiguousarray(pix.T[::-1])
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def write_pgm(path, grid: np.ndarray, scale: str = "linear") -> None:
    Path(path).write_bytes(to_pgm_bytes(grid, scale))


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    # header is four whitespace-separated tokens; exactly one whitespace byte follows maxval
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(raw[m.end() : m.end() + w * h], dtype=np.uint8).reshape(h, w)


def write_counts_csv(path, counts: np.ndarray) -> None:
    """CSV ``X_index,P_index,count`` for every cell of a count grid."""
    nx, npix = counts.shape
    I, J = np.meshgrid(np.arange(nx), np.arange(npix), indexing="ij")
    table = np.column_stack([I.ravel(), J.ravel(), counts.ravel()])
    with open(path, "w", newline="") as fh:
        fh.write("X_index,P_index,count\n")
        np.savetxt(fh, table, fmt="%d", delimiter=",")


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
