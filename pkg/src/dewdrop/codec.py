"""Minimal lossless image file I/O: 8-bit PNG (gray/RGB) and binary PPM/PGM.

Only what the pipeline needs is implemented: 8-bit depth, no alpha, no
palette, no interlacing, PPM/PGM maxval 255. Anything else raises
:class:`UnsupportedImageError`; malformed data raises
:class:`CorruptImageError`; a missing path raises ``FileNotFoundError``.

Round-trip guarantee: for data already quantized to 8 bits,
``load_image(save_image(x, p))`` reproduces ``x`` bit-exactly.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .image import quantize8

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# Fixed compression level so identical pixels always produce identical files.
_ZLIB_LEVEL = 6


class CodecError(Exception):
    """Base class for image file errors."""


class UnsupportedImageError(CodecError):
    """File is a recognized format but uses features outside the 8-bit subset."""


class CorruptImageError(CodecError):
    """File does not parse as a valid image."""


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------

def _png_chunks(data: bytes):
    pos = len(PNG_SIGNATURE)
    while pos < len(data):
        if pos + 8 > len(data):
            raise CorruptImageError("truncated chunk header")
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        ctype = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + length]
        if len(body) != length or pos + 12 + length > len(data):
            raise CorruptImageError("truncated chunk body")
        (crc,) = struct.unpack(">I", data[pos + 8 + length : pos + 12 + length])
        if zlib.crc32(ctype + body) & 0xFFFFFFFF != crc:
            raise CorruptImageError(f"bad CRC in {ctype!r} chunk")
        yield ctype, body
        pos += 12 + length


def _unfilter_scanlines(raw: bytes, height: int, width: int, channels: int) -> np.ndarray:
    stride = width * channels
    if len(raw) != height * (stride + 1):
        raise CorruptImageError("decompressed size does not match dimensions")
    out = np.zeros((height, stride), dtype=np.uint8)
    raw = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride + 1)
    bpp = channels
    for y in range(height):
        ftype = raw[y, 0]
        line = raw[y, 1:].astype(np.int32)
        prev = out[y - 1].astype(np.int32) if y > 0 else np.zeros(stride, dtype=np.int32)
        if ftype == 0:
            cur = line
        elif ftype == 1:  # Sub
            cur = line
            for x in range(bpp, stride):
                cur[x] = (cur[x] + cur[x - bpp]) & 0xFF
        elif ftype == 2:  # Up
            cur = (line + prev) & 0xFF
        elif ftype == 3:  # Average
            cur = line
            for x in range(stride):
                left = cur[x - bpp] if x >= bpp else 0
                cur[x] = (cur[x] + ((left + prev[x]) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            cur = line
            for x in range(stride):
                a = cur[x - bpp] if x >= bpp else 0
                b = prev[x]
                c = prev[x - bpp] if x >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
                cur[x] = (cur[x] + pred) & 0xFF
        else:
            raise CorruptImageError(f"unknown scanline filter {ftype}")
        out[y] = cur.astype(np.uint8)
    return out.reshape(height, width, channels)


def _decode_png(data: bytes) -> np.ndarray:
    chunks = _png_chunks(data)
    try:
        ctype, body = next(chunks)
    except StopIteration:
        raise CorruptImageError("no chunks found") from None
    if ctype != b"IHDR" or len(body) != 13:
        raise CorruptImageError("first chunk is not a valid IHDR")
    width, height, depth, color, comp, filt, interlace = struct.unpack(">IIBBBBB", body)
    if width == 0 or height == 0:
        raise CorruptImageError("zero image dimension")
    if comp != 0 or filt != 0:
        raise CorruptImageError("unknown compression/filter method")
    if depth != 8:
        raise UnsupportedImageError(f"only 8-bit PNG supported, got depth {depth}")
    if color not in (0, 2):
        raise UnsupportedImageError(f"only gray/RGB PNG supported, got color type {color}")
    if interlace != 0:
        raise UnsupportedImageError("interlaced PNG not supported")
    channels = 1 if color == 0 else 3
    idat = b"".join(body for ctype, body in chunks if ctype == b"IDAT")
    if not idat:
        raise CorruptImageError("no IDAT data")
    try:
        raw = zlib.decompress(idat)
    except zlib.error as exc:
        raise CorruptImageError(f"bad IDAT stream: {exc}") from exc
    pixels = _unfilter_scanlines(raw, height, width, channels)
    return pixels[..., 0] if channels == 1 else pixels


def _write_chunk(parts: list, ctype: bytes, body: bytes) -> None:
    parts.append(struct.pack(">I", len(body)))
    parts.append(ctype)
    parts.append(body)
    parts.append(struct.pack(">I", zlib.crc32(ctype + body) & 0xFFFFFFFF))


def _encode_png(pixels: np.ndarray) -> bytes:
    if pixels.ndim == 2:
        color, channels = 0, 1
        rows = pixels[:, :, None]
    else:
        color, channels = 2, 3
        rows = pixels
    height, width = rows.shape[:2]
    parts = [PNG_SIGNATURE]
    _write_chunk(parts, b"IHDR", struct.pack(">IIBBBBB", width, height, 8, color, 0, 0, 0))
    stride = width * channels
    filtered = np.zeros((height, stride + 1), dtype=np.uint8)
    filtered[:, 1:] = rows.reshape(height, stride)
    _write_chunk(parts, b"IDAT", zlib.compress(filtered.tobytes(), _ZLIB_LEVEL))
    _write_chunk(parts, b"IEND", b"")
    return b"".join(parts)


# ---------------------------------------------------------------------------
# PPM / PGM (binary, maxval 255)
# ---------------------------------------------------------------------------

def _read_pnm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        if data[pos : pos + 1].isspace():
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise CorruptImageError("truncated PNM header")
    return data[start:pos], pos


def _decode_pnm(data: bytes) -> np.ndarray:
    magic = data[:2]
    channels = 3 if magic == b"P6" else 1
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_pnm_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise CorruptImageError(f"non-numeric PNM header field {token!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise CorruptImageError("non-positive PNM dimensions")
    if maxval != 255:
        raise UnsupportedImageError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height * channels
    body = data[pos : pos + expected]
    if len(body) != expected:
        raise CorruptImageError("truncated PNM pixel data")
    pixels = np.frombuffer(body, dtype=np.uint8)
    if channels == 1:
        return pixels.reshape(height, width)
    return pixels.reshape(height, width, 3)


def _encode_pnm(pixels: np.ndarray) -> bytes:
    if pixels.ndim == 2:
        magic = b"P5"
    else:
        magic = b"P6"
    height, width = pixels.shape[:2]
    header = magic + b"\n%d %d\n255\n" % (width, height)
    return header + pixels.tobytes()


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def load_bytes(path) -> np.ndarray:
    """Decode a PNG/PPM/PGM file to a uint8 array, sniffing the format by magic."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    data = path.read_bytes()
    if data[: len(PNG_SIGNATURE)] == PNG_SIGNATURE:
        return _decode_png(data)
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data)
    raise CorruptImageError(f"unrecognized image file: {path}")


def load_image(path) -> np.ndarray:
    """Load an image as float64 intensities in [0, 1] (raw byte / 255)."""
    return load_bytes(path).astype(np.float64) / 255.0


def load_mask(path) -> np.ndarray:
    """Load a binary mask stored as an 8-bit image with values {0, 255}."""
    raw = load_bytes(path)
    if raw.ndim == 3:
        raw = raw[..., 0]
    vals = np.unique(raw)
    if not np.all(np.isin(vals, (0, 255))):
        raise CorruptImageError(f"mask file {path} has levels other than 0/255")
    return (raw == 255).astype(np.uint8)


def image_size(path) -> tuple[int, int]:
    """Read just the (height, width) of an image file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4096)
    if head[: len(PNG_SIGNATURE)] == PNG_SIGNATURE:
        if len(head) < 24 or head[12:16] != b"IHDR":
            raise CorruptImageError("truncated PNG header")
        width, height = struct.unpack(">II", head[16:24])
        return height, width
    if head[:2] in (b"P5", b"P6"):
        pos = 2
        token, pos = _read_pnm_token(head, pos)
        width = int(token)
        token, pos = _read_pnm_token(head, pos)
        return int(token), width
    raise CorruptImageError(f"unrecognized image file: {path}")


def save_bytes(pixels: np.ndarray, path) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        encoded = _encode_png(pixels)
    elif suffix in (".ppm", ".pgm"):
        if suffix == ".ppm" and pixels.ndim != 3:
            raise ValueError("PPM requires RGB data; use .pgm for gray")
        if suffix == ".pgm" and pixels.ndim != 2:
            raise ValueError("PGM requires gray data; use .ppm for RGB")
        encoded = _encode_pnm(pixels)
    else:
        raise ValueError(f"unsupported output extension {suffix!r} (use .png/.ppm/.pgm)")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encoded)


def save_image(img: np.ndarray, path) -> None:
    """Save float intensities in [0, 1] as an 8-bit image file."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError(f"image must be 2-D or 3-D, got shape {img.shape}")
    save_bytes(quantize8(img), path)


def save_mask(mask: np.ndarray, path) -> None:
    """Save a {0, 1} mask as an 8-bit image with white (255) for raindrop pixels."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    save_bytes((mask > 0).astype(np.uint8) * 255, path)
