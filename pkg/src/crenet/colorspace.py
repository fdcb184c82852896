"""RGB<->HSV conversion and illumination division.

The point of this module is an executable identity: dividing all three RGB
channels by one shared illumination map rescales the V channel and leaves
hue and saturation untouched. `verify_hs_invariance` measures exactly that,
and the enhancement network relies on it (the condition it consumes is an
enhanced V channel).
"""

from dataclasses import dataclass

import numpy as np

from .imgio import validate_image

DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class HsvImage:
    """Per-pixel hue in degrees [0, 360), saturation and value in [0, 1]."""

    h: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def shape(self):
        return self.v.shape


@dataclass(frozen=True)
class IlluminationMap:
    """Shared-across-channels illumination estimate, floored away from zero."""

    i: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if np.any(np.asarray(self.i) + self.epsilon <= 0.0):
            raise ValueError("illumination + epsilon must be positive everywhere")


def v_channel(img):
    """Value channel: per-pixel max over R, G, B."""
    return np.asarray(img).max(axis=2)


def rgb_to_hsv(img):
    """Convert an (H, W, 3) RGB image to HsvImage.

    Value is the channel max, saturation is (max-min)/max (0 where max is 0)
    and hue follows the 60-degree sector convention; achromatic pixels get
    hue 0.
    """
    img = np.asarray(img, dtype=np.float64)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    mx = img.max(axis=2)
    mn = img.min(axis=2)
    chroma = mx - mn

    s = np.zeros_like(mx)
    nz = mx > 0
    s[nz] = chroma[nz] / mx[nz]

    h = np.zeros_like(mx)
    cz = chroma > 0
    # Sector priority R, G, B on ties; any pick keeps the round trip exact.
    rmax = cz & (r >= g) & (r >= b)
    gmax = cz & ~rmax & (g >= b)
    bmax = cz & ~rmax & ~gmax
    h[rmax] = np.mod(60.0 * (g[rmax] - b[rmax]) / chroma[rmax], 360.0)
    h[gmax] = 120.0 + 60.0 * (b[gmax] - r[gmax]) / chroma[gmax]
    h[bmax] = 240.0 + 60.0 * (r[bmax] - g[bmax]) / chroma[bmax]
    return HsvImage(h=h, s=s, v=mx)


def hsv_to_rgb(hsv):
    """Exact inverse of rgb_to_hsv (to float rounding)."""
    h = np.mod(np.asarray(hsv.h, dtype=np.float64), 360.0)
    s = np.asarray(hsv.s, dtype=np.float64)
    v = np.asarray(hsv.v, dtype=np.float64)

    c = v * s
    hp = h / 60.0
    x = c * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    m = v - c

    sector = np.floor(hp).astype(int) % 6
    zeros = np.zeros_like(c)
    # (R, G, B) before adding m, per 60-degree sector.
    lut = [
        (c, x, zeros),
        (x, c, zeros),
        (zeros, c, x),
        (zeros, x, c),
        (x, zeros, c),
        (c, zeros, x),
    ]
    rgb = np.zeros(h.shape + (3,), dtype=np.float64)
    for k, (rr, gg, bb) in enumerate(lut):
        mask = sector == k
        rgb[mask, 0] = rr[mask]
        rgb[mask, 1] = gg[mask]
        rgb[mask, 2] = bb[mask]
    return rgb + m[..., None]


def retinex_divide(img, illum, clamp=True):
    """Divide each channel by illumination + epsilon.

    With clamp=True the output is a valid image in [0, 1]; clamp=False is
    the raw quotient used by the invariance check below.
    """
    img = np.asarray(img, dtype=np.float64)
    i = np.asarray(illum.i, dtype=np.float64)
    if i.shape != img.shape[:2]:
        raise ValueError(
            f"illumination {i.shape} does not match image {img.shape[:2]}"
        )
    out = img / (i + illum.epsilon)[..., None]
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return out


def circular_hue_distance(h1, h2):
    d = np.abs(h1 - h2) % 360.0
    return np.minimum(d, 360.0 - d)


def verify_hs_invariance(img, illum):
    """Max (hue, saturation) drift caused by unclamped illumination division.

    Degenerate pixels (achromatic or black) are excluded: their hue is a
    convention, not a measurement. For everything else both deviations are
    zero up to float rounding.
    """
    img = validate_image(np.asarray(img, dtype=np.float64))
    before = rgb_to_hsv(img)
    after = rgb_to_hsv(retinex_divide(img, illum, clamp=False))

    mx = img.max(axis=2)
    mn = img.min(axis=2)
    ok = (mx > mn) & (mx > 0)
    if not ok.any():
        return 0.0, 0.0
    dh = circular_hue_distance(before.h[ok], after.h[ok]).max()
    ds = np.abs(before.s[ok] - after.s[ok]).max()
    return float(dh), float(ds)
