"""Real/complex 2-D grids and the DFT conventions used throughout.

Grids are plain numpy arrays. A single grid is a 2-D array of shape
``(M, N)``; a multichannel grid is a 3-D array of shape ``(D, M, N)``
with the channel index first.

Conventions
-----------
* ``dft2`` is the unnormalized forward transform; ``idft2`` carries the
  ``1/(MN)`` factor.
* ``correlate(x, f)`` is circular cross-correlation summed over channels,
  ``r[n] = sum_d sum_m x_d[m] f_d[m + n]``, computed as
  ``idft2(sum_d conj(dft2(x_d)) * dft2(f_d))``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, SymmetryViolation

# Imaginary residue allowed by idft2, relative to the largest input magnitude.
SYMMETRY_RTOL = 1e-8


def as_grid(a, dtype=np.float64) -> np.ndarray:
    """Validate a single 2-D grid and return it as an array."""
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimMismatch(f"expected a non-empty 2-D grid, got shape {arr.shape}")
    return arr


def as_multichannel(a, dtype=np.float64) -> np.ndarray:
    """Validate a ``(D, M, N)`` stack of grids; a 2-D input becomes ``D = 1``."""
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise DimMismatch(f"expected a (D, M, N) stack, got shape {arr.shape}")
    return arr


def dft2(g) -> np.ndarray:
    """Unnormalized forward 2-D DFT over the last two axes.

    Accepts a single grid or a channel stack; channels are transformed
    independently.
    """
    g = np.asarray(g)
    if g.ndim < 2:
        raise DimMismatch(f"dft2 needs at least 2 dimensions, got {g.ndim}")
    return np.fft.fft2(g, axes=(-2, -1))


def idft2(G, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Inverse 2-D DFT returning a real grid.

    Raises
    ------
    SymmetryViolation
        If the imaginary part of the result exceeds ``rtol`` times the
        largest input magnitude, i.e. ``G`` is not (close to) the
        transform of a real grid.
    """
    G = np.asarray(G)
    if G.ndim < 2:
        raise DimMismatch(f"idft2 needs at least 2 dimensions, got {G.ndim}")
    out = np.fft.ifft2(G, axes=(-2, -1))
    scale = float(np.max(np.abs(G))) if G.size else 0.0
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residue > rtol * scale:
        raise SymmetryViolation(
            f"imaginary residue {residue:.3e} exceeds {rtol:g} x {scale:.3e}"
        )
    return np.ascontiguousarray(out.real)


def hadamard(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimMismatch(f"hadamard operands differ: {a.shape} vs {b.shape}")
    return a * b


def correlate_hat(xhat, fhat) -> np.ndarray:
    """Spectrum of ``correlate``: ``sum_d conj(xhat_d) * fhat_d``."""
    xhat = np.asarray(xhat)
    fhat = np.asarray(fhat)
    if xhat.shape != fhat.shape:
        raise DimMismatch(f"sample {xhat.shape} and filter {fhat.shape} differ")
    return np.einsum("dmn,dmn->mn", np.conj(xhat), fhat)


def correlate(x, f) -> np.ndarray:
    """Channel-summed circular cross-correlation of ``x`` with ``f``.

    This is the response map: used as the data-term prediction when
    training and as the detection score at test time. A target that
    moved by ``+s`` relative to the training sample produces a peak at
    ``-s`` (mod the grid size).
    """
    x = as_multichannel(x)
    f = as_multichannel(f)
    if x.shape != f.shape:
        raise DimMismatch(f"sample {x.shape} and filter {f.shape} differ")
    return idft2(correlate_hat(dft2(x), dft2(f)))
