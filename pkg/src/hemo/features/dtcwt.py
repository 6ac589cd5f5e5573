"""Dual-tree complex wavelet texture features.

A 3-level 2-D dual-tree transform built from the near-symmetric 13/19-tap
biorthogonal pair at level 1 and the orthonormal Q-shift 14-tap pair beyond.
The two trees are carried interleaved in a single array (even rows/columns =
tree a); quadrant recombination turns each real subband pair into the six
oriented complex subbands (about 15/45/75/105/135/165 degrees).

Features: mean absolute coefficient magnitude per (level, orientation) plus
the RMS of the final lowpass, 19 values. Off-mask pixels are replaced by the
masked mean before the transform so neighboring cells cannot leak in.
"""

from __future__ import annotations

import numpy as np

from ..imaging import BinaryMask, GrayImage

# near-symmetric 13-tap lowpass / 19-tap highpass for the first level
H0O = np.array([
    -0.0017581, 0.0, 0.0222656, -0.0468750, -0.0482422, 0.2968750, 0.5554688,
    0.2968750, -0.0482422, -0.0468750, 0.0222656, 0.0, -0.0017581,
])
H1O = np.array([
    -0.000070626, 0.0, 0.0013419, -0.0018834, -0.0071568, 0.0238560, 0.0556431,
    -0.0516881, -0.2997576, 0.5594308, -0.2997576, -0.0516881, 0.0556431,
    0.0238560, -0.0071568, -0.0018834, 0.0013419, 0.0, -0.000070626,
])

# Q-shift 14-tap orthonormal lowpass; the tree pair is (filter, reverse),
# the reversal supplying the half-sample delay between trees
_QSHIFT_14 = np.array([
    0.00325314, -0.00388321, 0.03466035, -0.03887280, -0.11720389, 0.27529538,
    0.75614564, 0.56881042, 0.01186609, -0.10671180, 0.02382538, 0.01702522,
    -0.00543948, -0.00455690,
])
_ALT = np.array([(-1.0) ** i for i in range(len(_QSHIFT_14))])
H0A = _QSHIFT_14[::-1].copy()
H0B = _QSHIFT_14.copy()
H1A = H0B * _ALT
H1B = H0A * _ALT

N_LEVELS = 3
N_ORIENTATIONS = 6


def _colfilter(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Filter columns with symmetric edge-repeating extension, same-size output."""
    m = len(h) // 2
    ext = np.pad(x, ((m, len(h) - 1 - m), (0, 0)), mode="symmetric")
    out = np.zeros_like(x, dtype=np.float64)
    for k, hk in enumerate(h):
        out += hk * ext[len(h) - 1 - k : len(h) - 1 - k + x.shape[0], :]
    return out


def _coldfilt(x: np.ndarray, ha: np.ndarray, hb: np.ndarray) -> np.ndarray:
    """Decimating dual filter on columns: tree a = even rows, tree b = odd."""
    if x.shape[0] % 4 != 0:
        raise ValueError(f"row count must be a multiple of 4, got {x.shape[0]}")
    xa, xb = x[0::2], x[1::2]

    def dec(xt: np.ndarray, h: np.ndarray) -> np.ndarray:
        m = len(h)
        ext = np.pad(xt, ((m // 2, m - 1 - m // 2), (0, 0)), mode="symmetric")
        full = np.zeros_like(xt, dtype=np.float64)
        for k, hk in enumerate(h):
            full += hk * ext[m - 1 - k : m - 1 - k + xt.shape[0], :]
        return full[0::2]

    ya, yb = dec(xa, ha), dec(xb, hb)
    out = np.empty((ya.shape[0] + yb.shape[0], x.shape[1]), dtype=np.float64)
    out[0::2], out[1::2] = ya, yb
    return out


def _q2c(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Recombine the four tree quadrants of a real subband into two complex ones."""
    a = y[0::2, 0::2]
    b = y[0::2, 1::2]
    c = y[1::2, 0::2]
    d = y[1::2, 1::2]
    p = (a + 1j * b) / np.sqrt(2.0)
    q = (d - 1j * c) / np.sqrt(2.0)
    return p - q, p + q


def dtcwt_transform(x: np.ndarray, nlevels: int = N_LEVELS) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward 2-D dual-tree transform.

    Input sides must be multiples of 2^nlevels. Returns the final lowpass
    (interleaved trees) and, per level, an (H, W, 6) complex subband stack
    ordered by orientation 15/45/75/105/135/165 degrees.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] % (2**nlevels) or x.shape[1] % (2**nlevels):
        raise ValueError(f"input shape {x.shape} not a multiple of {2 ** nlevels}")
    subbands = []
    lolo = x
    for level in range(nlevels):
        if level == 0:
            lo = _colfilter(lolo, H0O).T
            hi = _colfilter(lolo, H1O).T
            nxt = _colfilter(lo, H0O).T
            hilo = _colfilter(hi, H0O).T
            lohi = _colfilter(lo, H1O).T
            hihi = _colfilter(hi, H1O).T
        else:
            lo = _coldfilt(lolo, H0A, H0B).T
            hi = _coldfilt(lolo, H1A, H1B).T
            nxt = _coldfilt(lo, H0A, H0B).T
            hilo = _coldfilt(hi, H0A, H0B).T
            lohi = _coldfilt(lo, H1A, H1B).T
            hihi = _coldfilt(hi, H1A, H1B).T
        stack = np.empty((hilo.shape[0] // 2, hilo.shape[1] // 2, N_ORIENTATIONS), dtype=np.complex128)
        stack[:, :, 0], stack[:, :, 5] = _q2c(hilo)  # near-horizontal pair
        stack[:, :, 2], stack[:, :, 3] = _q2c(lohi)  # near-vertical pair
        stack[:, :, 1], stack[:, :, 4] = _q2c(hihi)  # diagonal pair
        subbands.append(stack)
        lolo = nxt
    return lolo, subbands


def _pad_to_multiple(x: np.ndarray, multiple: int) -> np.ndarray:
    """Reflective padding up to the next multiple, applied repeatedly for tiny inputs."""
    out = x
    for axis in (0, 1):
        target = max(multiple, -(-out.shape[axis] // multiple) * multiple)
        while out.shape[axis] < target:
            grow = min(target - out.shape[axis], out.shape[axis])
            pad = [(0, 0), (0, 0)]
            pad[axis] = (0, grow)
            out = np.pad(out, pad, mode="symmetric")
    return out


def dtcwt_features(patch: GrayImage, mask: BinaryMask) -> np.ndarray:
    """18 per-(level, orientation) mean magnitudes + lowpass RMS."""
    if not mask.bits.any():
        raise ValueError("empty mask")
    pix = patch.pixels.astype(np.float64)
    fill = pix[mask.bits].mean()
    x = np.where(mask.bits, pix, fill)
    x = _pad_to_multiple(x, 2**N_LEVELS)
    lolo, subbands = dtcwt_transform(x, N_LEVELS)
    values = []
    for stack in subbands:
        for k in range(N_ORIENTATIONS):
            values.append(float(np.mean(np.abs(stack[:, :, k]))))
    values.append(float(np.sqrt(np.mean(lolo**2))))
    return np.array(values, dtype=np.float64)
