"""Raster images of carpets as binary PGM/PPM."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .empirical import cell_index, chaos_game_chains, chaos_game_sample
from .measure import BernoulliMeasure
from .symbolic import DEFAULT_BUDGET, enumerate_words

MIN_SIDE, MAX_SIDE = 16, 8192


@dataclass(frozen=True)
class RenderSpec:
    width: int
    height: int
    mode: str = "cylinders"
    level: int = 4
    samples: int = 1_000_000
    gamma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for side in (self.width, self.height):
            if not MIN_SIDE <= side <= MAX_SIDE:
                raise ValueError(f"image sides must lie in [{MIN_SIDE}, {MAX_SIDE}]")
        if self.mode not in ("cylinders", "density"):
            raise ValueError("mode must be 'cylinders' or 'density'")


def render_cylinders(system, spec: RenderSpec, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Fill every pixel whose centre lies in a level-n cylinder rectangle.

    Row 0 is the top of the image, so y increases upwards.
    """
    if not system.is_carpet:
        raise TypeError("rendering needs a carpet system")
    words = np.array(list(enumerate_words(system.n_symbols, spec.level, budget)), dtype=np.int64)
    xi, yi = system.word_intervals(words)
    img = np.zeros((spec.height, spec.width), dtype=np.uint8)
    w, h = spec.width, spec.height
    c0 = np.ceil(xi[:, 0] * w - 0.5).astype(int)
    c1 = np.floor(xi[:, 1] * w - 0.5).astype(int)
    # pixel row r has centre y = 1 - (r + 0.5)/h
    r0 = np.ceil((1.0 - yi[:, 1]) * h - 0.5).astype(int)
    r1 = np.floor((1.0 - yi[:, 0]) * h - 0.5).astype(int)
    for a, b, c, d in zip(r0, r1, c0, c1):
        if b >= a and d >= c:
            img[max(a, 0):min(b, h - 1) + 1, max(c, 0):min(d, w - 1) + 1] = 255
    return img


def render_density(system, measure, spec: RenderSpec, batch: int = 1_000_000) -> np.ndarray:
    """Gamma-mapped histogram of chaos-game samples.

    Bernoulli measures use parallel chains; other measures draw exact
    independent samples, which is much slower.
    """
    if not system.is_carpet:
        raise TypeError("rendering needs a carpet system")
    counts = np.zeros((spec.height, spec.width), dtype=np.int64)
    done = 0
    part = 0
    while done < spec.samples:
        n = min(batch, spec.samples - done)
        if isinstance(measure, BernoulliMeasure):
            pts = chaos_game_chains(system, measure, n, seed=(spec.seed, part))
        else:
            pts = chaos_game_sample(system, measure, n, seed=(spec.seed, part))
        col = np.minimum(cell_index(pts[:, 0], 1.0 / spec.width), spec.width - 1)
        row = spec.height - 1 - np.minimum(cell_index(pts[:, 1], 1.0 / spec.height), spec.height - 1)
        np.add.at(counts, (row, col), 1)
        done += n
        part += 1
    peak = counts.max()
    if peak == 0:
        return np.zeros_like(counts, dtype=np.uint8)
    return np.round(255 * (counts / peak) ** spec.gamma).astype(np.uint8)


def write_pnm(path: str | Path, img: np.ndarray) -> None:
    """Write P5 for ``.pgm`` paths and P6 otherwise (grey replicated to RGB)."""
    path = Path(path)
    img = np.asarray(img, dtype=np.uint8)
    if path.suffix.lower() == ".pgm":
        if img.ndim != 2:
            raise ValueError("PGM output needs a single-channel image")
        header, body = b"P5", img
    else:
        body = np.repeat(img[:, :, None], 3, axis=2) if img.ndim == 2 else img
        header = b"P6"
    h, w = body.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + f"\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(body).tobytes())


def read_pnm(path: str | Path) -> np.ndarray:
    """Minimal reader for the files written by :func:`write_pnm`."""
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1  # exactly one whitespace byte before the raster
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255 or magic not in (b"P5", b"P6"):
        raise ValueError("unsupported PNM file")
    channels = 1 if magic == b"P5" else 3
    arr = np.frombuffer(data[pos:pos + w * h * channels], dtype=np.uint8)
    return arr.reshape(h, w) if channels == 1 else arr.reshape(h, w, 3)
