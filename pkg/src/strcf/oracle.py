"""Brute-force minimisers of the filter objective, for verification only.

Two independent routes:

* ``dense`` assembles the real ``DMN x DMN`` normal equations from the
  spatial definition of the correlation and factorises them. Used when
  ``D*M*N <= 256``.
* ``iterative`` runs preconditioned conjugate gradients on the same
  normal equations, with matrix-vector products done by explicit circular
  shifts and a per-frequency dense ``D x D`` solve as preconditioner.
  Covers ``D*M*N <= 1024``.

Neither route touches the ADMM solver or ``grid.correlate``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, TooLarge

DENSE_LIMIT = 256
ITERATIVE_LIMIT = 1024


@dataclass
class DenseProblem:
    x: np.ndarray  # (D, M, N) sample
    y: np.ndarray  # (M, N) label
    w: np.ndarray  # (M, N) spatial weight
    fprev: np.ndarray  # (D, M, N)
    mu: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim == 2:
            self.x = self.x[None]
        self.fprev = np.asarray(self.fprev, dtype=np.float64).reshape(self.x.shape)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.y.shape != self.x.shape[1:] or self.w.shape != self.x.shape[1:]:
            raise DimMismatch("label/weight dims do not match the sample")

    @property
    def size(self) -> int:
        return int(self.x.size)


def spatial_correlate(x, f) -> np.ndarray:
    """``r[n] = sum_d sum_m x_d[m] f_d[m + n]`` by explicit loops over shifts."""
    x = np.asarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    _, M, N = x.shape
    r = np.empty((M, N))
    for n1 in range(M):
        for n2 in range(N):
            shifted = np.roll(f, (-n1, -n2), axis=(1, 2))  # shifted[m] = f[m + n]
            r[n1, n2] = np.sum(x * shifted)
    return r


def spatial_correlate_adjoint(x, r) -> np.ndarray:
    """Adjoint of ``f -> spatial_correlate(x, f)``: ``g_d[p] = sum_n x_d[p - n] r[n]``."""
    x = np.asarray(x, dtype=np.float64)
    D, M, N = x.shape
    g = np.zeros((D, M, N))
    for n1 in range(M):
        for n2 in range(N):
            g += r[n1, n2] * np.roll(x, (n1, n2), axis=(1, 2))
    return g


def correlation_matrix(x) -> np.ndarray:
    """Matrix ``A`` with ``A @ f.ravel() == spatial_correlate(x, f).ravel()``."""
    x = np.asarray(x, dtype=np.float64)
    D, M, N = x.shape
    n1, n2, p1, p2 = np.meshgrid(np.arange(M), np.arange(N), np.arange(M), np.arange(N), indexing="ij")
    # A[(n1,n2), (d,p1,p2)] = x_d[p - n]
    rows = []
    for d in range(D):
        block = x[d][(p1 - n1) % M, (p2 - n2) % N]
        rows.append(block.reshape(M * N, M * N))
    return np.concatenate(rows, axis=1)


def problem_objective(p: DenseProblem, f) -> float:
    f = np.asarray(f, dtype=np.float64).reshape(p.x.shape)
    resid = spatial_correlate(p.x, f) - p.y
    return float(
        0.5 * np.sum(resid ** 2)
        + 0.5 * np.sum((p.w * f) ** 2)
        + 0.5 * p.mu * np.sum((f - p.fprev) ** 2)
    )


def analytic_gradient(p: DenseProblem, f) -> np.ndarray:
    """Gradient of the objective, using the adjoint of the correlation."""
    f = np.asarray(f, dtype=np.float64).reshape(p.x.shape)
    resid = spatial_correlate(p.x, f) - p.y
    return spatial_correlate_adjoint(p.x, resid) + p.w ** 2 * f + p.mu * (f - p.fprev)


def finite_diff_grad(fun, f, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``fun`` at every entry of ``f``."""
    if not step > 0:
        raise ValueError("step must be positive")
    f = np.array(f, dtype=np.float64)
    grad = np.empty_like(f)
    flat = f.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        hi = fun(f)
        flat[k] = orig - step
        lo = fun(f)
        flat[k] = orig
        gflat[k] = (hi - lo) / (2 * step)
    return grad


def _dense(p: DenseProblem) -> np.ndarray:
    A = correlation_matrix(p.x)
    D = p.x.shape[0]
    diag = np.tile((p.w ** 2).ravel(), D) + p.mu
    H = A.T @ A + np.diag(diag)
    b = A.T @ p.y.ravel() + p.mu * p.fprev.ravel()
    return np.linalg.solve(H, b).reshape(p.x.shape)


def _iterative(p: DenseProblem, max_iters: int, tol: float) -> np.ndarray:
    D, M, N = p.x.shape
    w2 = p.w ** 2
    shift = float(np.mean(w2)) + p.mu
    if shift == 0:
        shift = 1e-12

    # preconditioner: the problem with w^2 replaced by its mean, which is
    # block-diagonal over frequencies. Build (a a^H + shift I)^-1 per frequency.
    xhat = np.fft.fft2(p.x, axes=(1, 2)).reshape(D, -1).T  # (MN, D)
    outer = xhat[:, :, None] * np.conj(xhat)[:, None, :]
    inv = np.linalg.inv(outer + shift * np.eye(D)[None])

    def precond(r):
        rhat = np.fft.fft2(r, axes=(1, 2)).reshape(D, -1).T
        zhat = np.einsum("kij,kj->ki", inv, rhat)
        return np.fft.ifft2(zhat.T.reshape(D, M, N), axes=(1, 2)).real

    def hess(v):
        return (
            spatial_correlate_adjoint(p.x, spatial_correlate(p.x, v))
            + w2 * v
            + p.mu * v
        )

    b = spatial_correlate_adjoint(p.x, p.y) + p.mu * p.fprev
    f = p.fprev.copy()
    r = b - hess(f)
    z = precond(r)
    d = z.copy()
    rz = np.sum(r * z)
    scale = max(1.0, float(np.linalg.norm(b)))
    for _ in range(max_iters):
        if np.linalg.norm(r) < tol * scale:
            break
        Hd = hess(d)
        alpha = rz / np.sum(d * Hd)
        f += alpha * d
        r -= alpha * Hd
        z = precond(r)
        rz_new = np.sum(r * z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    return f


def dense_solve(p: DenseProblem, outer_iters: int = 500, method: str = "auto", tol: float = 1e-10) -> np.ndarray:
    """Minimise the objective of ``p`` exactly (up to round-off).

    ``method`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (dense when
    ``D*M*N <= 256``). ``outer_iters`` caps the conjugate-gradient
    iterations of the iterative route, which stops once the gradient norm
    falls below ``tol`` (relative to ``max(1, ||rhs||)``).
    """
    if p.size > ITERATIVE_LIMIT:
        raise TooLarge(f"D*M*N = {p.size} exceeds {ITERATIVE_LIMIT}")
    if method == "auto":
        method = "dense" if p.size <= DENSE_LIMIT else "iterative"
    if method == "dense":
        if p.size > DENSE_LIMIT:
            raise TooLarge(f"dense route limited to D*M*N <= {DENSE_LIMIT}")
        return _dense(p)
    if method == "iterative":
        return _iterative(p, outer_iters, tol)
    raise ValueError(f"unknown method {method!r}")
