"""Raster images, the binary PPM codec, pixel mapping and error images."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wsmquant import _kernels


class PPMError(ValueError):
    """Base class for PPM decoding failures."""


class BadMagicError(PPMError):
    pass


class HeaderError(PPMError):
    pass


class UnsupportedMaxvalError(PPMError):
    pass


class TruncatedDataError(PPMError):
    pass


@dataclass(frozen=True)
class RgbImage:
    """An H x W raster of 8-bit RGB pixels.

    ``pixels`` is a read-only ``uint8`` array of shape ``(height, width, 3)``
    in row-major order.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must have shape (H, W, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must have positive width and height")
        if px.dtype != np.uint8:
            if np.issubdtype(px.dtype, np.integer) or np.issubdtype(px.dtype, np.floating):
                if px.min() < 0 or px.max() > 255:
                    raise ValueError("channel values must lie in [0, 255]")
                if np.issubdtype(px.dtype, np.floating) and not np.all(px == np.floor(px)):
                    raise ValueError("channel values must be integers")
            else:
                raise ValueError(f"unsupported pixel dtype {px.dtype}")
        px = np.ascontiguousarray(px, dtype=np.uint8)
        if px is self.pixels:
            px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    def flat(self) -> np.ndarray:
        """Pixels as an ``(H*W, 3)`` uint8 view."""
        return self.pixels.reshape(-1, 3)

    @classmethod
    def from_flat(cls, flat, width: int, height: int) -> "RgbImage":
        arr = np.asarray(flat)
        if arr.size != width * height * 3:
            raise ValueError("pixel count does not match width x height")
        return cls(arr.reshape(height, width, 3))

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and comment lines
    while True:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise HeaderError("unexpected end of header")
    return data[start:pos], pos


def read_ppm(data: bytes) -> RgbImage:
    """Decode a binary (P6) PPM file with maxval 255."""
    if data[:2] != b"P6":
        raise BadMagicError(f"bad magic {data[:2]!r}, expected b'P6'")
    pos = 2
    if pos >= len(data) or not (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
        raise HeaderError("missing whitespace after magic")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _next_token(data, pos)
        if not tok.isdigit():
            raise HeaderError(f"non-numeric {name}: {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise HeaderError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise HeaderError("missing whitespace after maxval")
    pos += 1
    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise TruncatedDataError(f"expected {need} pixel bytes, found {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RgbImage(arr)


def write_ppm(image: RgbImage) -> bytes:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def load_ppm(path) -> RgbImage:
    return read_ppm(Path(path).read_bytes())


def save_ppm(image: RgbImage, path) -> None:
    Path(path).write_bytes(write_ppm(image))


def rounded_palette(centers) -> np.ndarray:
    """Round real-valued palette entries to 8-bit channels (half rounds up)."""
    c = np.asarray(centers, dtype=np.float64)
    return np.clip(np.floor(c + 0.5), 0, 255).astype(np.uint8)


def map_pixels(image: RgbImage, palette) -> RgbImage:
    """Replace every pixel with its nearest rounded palette entry.

    Ties go to the lowest palette index.
    """
    centers = getattr(palette, "centers", palette)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if len(centers) == 0:
        raise ValueError("palette is empty")
    pal8 = rounded_palette(centers)
    flat = image.flat()
    keys = _pack(flat)
    uniq, inverse = np.unique(keys, return_inverse=True)
    colors = _unpack(uniq).astype(np.float64)
    memb, _, _ = _kernels.assign_naive(colors, pal8.astype(np.float64))
    out = pal8[memb[inverse.ravel()]]
    return RgbImage(out.reshape(image.pixels.shape))


def error_image(original: RgbImage, quantized: RgbImage) -> RgbImage:
    """Absolute difference scaled by 4, clamped, and negated (white = no error)."""
    if original.pixels.shape != quantized.pixels.shape:
        raise ValueError(
            f"dimension mismatch: {original.pixels.shape} vs {quantized.pixels.shape}"
        )
    diff = np.abs(original.pixels.astype(np.int32) - quantized.pixels.astype(np.int32))
    return RgbImage((255 - np.minimum(255, 4 * diff)).astype(np.uint8))


def _pack(flat: np.ndarray) -> np.ndarray:
    f = flat.astype(np.uint32)
    return (f[:, 0] << 16) | (f[:, 1] << 8) | f[:, 2]


def _unpack(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint32)
    return np.stack([(keys >> 16) & 255, (keys >> 8) & 255, keys & 255], axis=1).astype(np.uint8)


def write_palette(centers, path=None) -> str:
    """Serialize a palette as one ``R G B`` float triple per line."""
    centers = getattr(centers, "centers", centers)
    lines = [" ".join(repr(float(v)) for v in row) for row in np.asarray(centers)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_palette(source) -> np.ndarray:
    """Parse palette text (or a path to it) into a ``(K, 3)`` float array."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        source = Path(source).read_text()
    rows = []
    for lineno, line in enumerate(source.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 values, got {len(parts)}")
        rows.append([float(p) for p in parts])
    return np.array(rows, dtype=np.float64).reshape(-1, 3)
