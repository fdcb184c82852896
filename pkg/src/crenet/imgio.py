"""Image containers, PPM/PNG file I/O, patch extraction and dataset pairing.

An image is a float64 numpy array of shape (H, W, 3) with every channel in
[0, 1]. Files are 8-bit; values map to [0, 1] by v/255 on read and by
round-half-up quantization on write, so read -> write -> read is exact.
"""

import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageIOError(Exception):
    """Unreadable, truncated or unsupported image file."""


def validate_image(img):
    """Check the (H, W, 3) unit-interval contract; raises ValueError."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if not np.isfinite(img).all():
        raise ValueError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("channel values must lie in [0, 1]")
    return img


@dataclass(frozen=True)
class ExposurePair:
    """Registered (short exposure, long exposure) frames of one scene."""

    low: np.ndarray
    ref: np.ndarray
    scene_id: str
    dt_low: float
    dt_ref: float

    def __post_init__(self):
        if self.low.shape != self.ref.shape:
            raise ValueError(
                f"low {self.low.shape} and ref {self.ref.shape} dimensions differ"
            )
        if not self.dt_low < self.dt_ref:
            raise ValueError("dt_low must be shorter than dt_ref")


@dataclass
class PatchBatch:
    """Aligned stacks of square crops; conditions are filled in later."""

    n: int
    size: int
    low: np.ndarray  # (n, size, size, 3)
    ref: np.ndarray  # (n, size, size, 3)
    cond: np.ndarray | None = field(default=None)  # (n, size, size)

    def __post_init__(self):
        if self.size % 2 != 0:
            raise ValueError("patch size must be even")
        expect = (self.n, self.size, self.size, 3)
        if self.low.shape != expect or self.ref.shape != expect:
            raise ValueError("patch stacks do not match n/size")
        if self.cond is not None and self.cond.shape != expect[:3]:
            raise ValueError("condition stack does not match n/size")


def quantize(img):
    """[0,1] floats to uint8 by round-half-up, clamped to [0, 255]."""
    return np.clip(np.floor(np.asarray(img) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _read_ppm_token(f):
    # Tokens are separated by whitespace; '#' starts a comment to end of line.
    tok = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise ImageIOError("truncated PPM header")
        if c == b"#":
            while c not in (b"\n", b"\r", b""):
                c = f.read(1)
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def _read_ppm(f):
    magic = f.read(2)
    if magic != b"P6":
        raise ImageIOError(f"not a binary PPM (magic {magic!r})")
    width = int(_read_ppm_token(f))
    height = int(_read_ppm_token(f))
    maxval = int(_read_ppm_token(f))
    if width < 1 or height < 1:
        raise ImageIOError(f"bad PPM dimensions {width}x{height}")
    if height * width * 3 > 2**31:
        raise ImageIOError("PPM dimensions overflow supported size")
    if maxval != 255:
        raise ImageIOError(f"unsupported PPM bit depth (maxval {maxval})")
    payload = f.read(height * width * 3)
    if len(payload) != height * width * 3:
        raise ImageIOError("truncated PPM payload")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return data.astype(np.float64) / 255.0


def _write_ppm(img, f):
    h, w = img.shape[:2]
    f.write(b"P6\n%d %d\n255\n" % (w, h))
    f.write(quantize(img).tobytes())


def _png_chunks(f):
    while True:
        head = f.read(8)
        if len(head) < 8:
            raise ImageIOError("truncated PNG chunk header")
        (length,), ctype = struct.unpack(">I", head[:4]), head[4:]
        data = f.read(length)
        if len(data) != length:
            raise ImageIOError("truncated PNG chunk")
        f.read(4)  # CRC, not verified on read
        yield ctype, data
        if ctype == b"IEND":
            return


def _paeth(a, b, c):
    p = int(a) + int(b) - int(c)
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    return b if pb <= pc else c


def _unfilter_png(raw, height, width):
    stride = width * 3
    out = np.zeros((height, stride), dtype=np.uint8)
    pos = 0
    for y in range(height):
        ftype = raw[pos]
        row = bytearray(raw[pos + 1 : pos + 1 + stride])
        pos += 1 + stride
        prev = out[y - 1] if y > 0 else np.zeros(stride, dtype=np.uint8)
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub
            for i in range(3, stride):
                row[i] = (row[i] + row[i - 3]) & 0xFF
        elif ftype == 2:  # Up
            out[y] = (np.frombuffer(bytes(row), dtype=np.uint8) + prev) & 0xFF
            continue
        elif ftype == 3:  # Average
            for i in range(stride):
                left = row[i - 3] if i >= 3 else 0
                row[i] = (row[i] + ((left + int(prev[i])) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                left = row[i - 3] if i >= 3 else 0
                ul = int(prev[i - 3]) if i >= 3 else 0
                row[i] = (row[i] + _paeth(left, int(prev[i]), ul)) & 0xFF
        else:
            raise ImageIOError(f"unknown PNG filter type {ftype}")
        out[y] = row
    return out.reshape(height, width, 3)


def _read_png(f):
    if f.read(8) != PNG_SIGNATURE:
        raise ImageIOError("not a PNG file")
    width = height = None
    idat = b""
    for ctype, data in _png_chunks(f):
        if ctype == b"IHDR":
            width, height, depth, color, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", data
            )
            if depth != 8 or color != 2:
                raise ImageIOError(
                    f"unsupported PNG (bit depth {depth}, color type {color}); "
                    "only 8-bit RGB is handled"
                )
            if interlace != 0:
                raise ImageIOError("interlaced PNG not supported")
        elif ctype == b"IDAT":
            idat += data
    if width is None:
        raise ImageIOError("PNG missing IHDR")
    raw = zlib.decompress(idat)
    if len(raw) != height * (width * 3 + 1):
        raise ImageIOError("PNG payload size mismatch")
    return _unfilter_png(raw, height, width).astype(np.float64) / 255.0


def _png_chunk(ctype, data):
    crc = zlib.crc32(ctype + data) & 0xFFFFFFFF
    return struct.pack(">I", len(data)) + ctype + data + struct.pack(">I", crc)


def _write_png(img, f):
    h, w = img.shape[:2]
    f.write(PNG_SIGNATURE)
    f.write(_png_chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)))
    rows = quantize(img)
    raw = b"".join(b"\x00" + rows[y].tobytes() for y in range(h))
    f.write(_png_chunk(b"IDAT", zlib.compress(raw)))
    f.write(_png_chunk(b"IEND", b""))


def read_image(path):
    """Read a PPM (P6) or PNG (8-bit RGB) file into a unit-interval image."""
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise ImageIOError(f"cannot open {path}: {exc}") from exc
    with f:
        magic = f.read(2)
        f.seek(0)
        if magic == b"P6":
            return _read_ppm(f)
        if magic == PNG_SIGNATURE[:2]:
            return _read_png(f)
        raise ImageIOError(f"unsupported image format in {path}")


def write_image(img, path):
    """Write an image as PPM (default) or PNG when the path ends in .png."""
    img = validate_image(img)
    try:
        f = open(path, "wb")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
    with f:
        if str(path).lower().endswith(".png"):
            _write_png(img, f)
        else:
            _write_ppm(img, f)


def sample_patches(pair, size, n, rng_seed):
    """Crop n aligned size x size patches at random positions.

    Top-left corners are drawn uniformly over the valid range, identical
    for the low and reference frames, deterministic for a given seed.
    """
    h, w = pair.low.shape[:2]
    if size % 2 != 0:
        raise ValueError("patch size must be even")
    if size > h or size > w:
        raise ValueError(f"patch {size} larger than image {h}x{w}")
    rng = np.random.default_rng(rng_seed)
    ys = rng.integers(0, h - size + 1, size=n)
    xs = rng.integers(0, w - size + 1, size=n)
    low = np.stack([pair.low[y : y + size, x : x + size] for y, x in zip(ys, xs)])
    ref = np.stack([pair.ref[y : y + size, x : x + size] for y, x in zip(ys, xs)])
    return PatchBatch(n=n, size=size, low=low, ref=ref)


def load_dataset(root, dt_low=1.0, dt_ref=2.0):
    """Pair `<root>/low/<scene>` with `<root>/ref/<scene>` by filename.

    Exposure times are not stored in the directory layout; the nominal
    defaults only preserve the short/long ordering.
    """
    low_dir = os.path.join(root, "low")
    ref_dir = os.path.join(root, "ref")
    if not os.path.isdir(low_dir) or not os.path.isdir(ref_dir):
        raise ImageIOError(f"{root} does not contain low/ and ref/ directories")
    pairs = []
    for name in sorted(os.listdir(low_dir)):
        ref_path = os.path.join(ref_dir, name)
        if not os.path.isfile(ref_path):
            continue
        scene = os.path.splitext(name)[0]
        pairs.append(
            ExposurePair(
                low=read_image(os.path.join(low_dir, name)),
                ref=read_image(ref_path),
                scene_id=scene,
                dt_low=dt_low,
                dt_ref=dt_ref,
            )
        )
    if not pairs:
        raise ImageIOError(f"no filename-matched pairs under {root}")
    return pairs
