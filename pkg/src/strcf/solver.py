"""Single-sample spatial-temporal regularized filter learning by ADMM.

The learned filter minimises

    0.5 * ||correlate(x, f) - y||^2
    + 0.5 * sum_d ||w * f_d||^2
    + 0.5 * mu * ||f - f_prev||^2

by splitting ``f = g``. The ``f`` subproblem decouples over frequencies
into ``D x D`` rank-one-plus-identity systems solved with
Sherman-Morrison; the ``g`` subproblem is elementwise in the spatial
domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRegularization, DimMismatch
from .grid import as_grid, as_multichannel, correlate, correlate_hat, dft2, idft2


@dataclass(frozen=True)
class AdmmParams:
    mu: float = 16.0
    gamma0: float = 10.0
    gamma_max: float = 100.0
    rho: float = 1.2
    iters: int = 2

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be > 0, got {self.gamma0}")
        if not self.gamma_max >= self.gamma0:
            raise ValueError("gamma_max must be >= gamma0")
        if not self.rho >= 1:
            raise ValueError(f"rho must be >= 1, got {self.rho}")
        if int(self.iters) != self.iters or self.iters < 1:
            raise ValueError(f"iters must be a positive integer, got {self.iters}")

    def replace(self, **changes) -> "AdmmParams":
        values = {k: getattr(self, k) for k in ("mu", "gamma0", "gamma_max", "rho", "iters")}
        values.update(changes)
        return AdmmParams(**values)


@dataclass
class FilterState:
    """Current filter and the one used in the previous frame."""

    f_prev: np.ndarray
    f_cur: np.ndarray

    def __post_init__(self):
        self.f_prev = as_multichannel(self.f_prev)
        self.f_cur = as_multichannel(self.f_cur)
        if self.f_prev.shape != self.f_cur.shape:
            raise DimMismatch(f"f_prev {self.f_prev.shape} vs f_cur {self.f_cur.shape}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.f_cur.shape


@dataclass
class LearnDiagnostics:
    objective: list[float] = field(default_factory=list)
    gamma: list[float] = field(default_factory=list)
    primal_residual: float = float("nan")


def check_spatial_weight(w) -> np.ndarray:
    w = as_grid(w)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("spatial weight must be finite and non-negative")
    return w


def _check_problem(x, y, w, f):
    x = as_multichannel(x)
    f = as_multichannel(f)
    y = as_grid(y)
    w = as_grid(w)
    if x.shape != f.shape:
        raise DimMismatch(f"sample {x.shape} vs filter {f.shape}")
    if y.shape != x.shape[1:] or w.shape != x.shape[1:]:
        raise DimMismatch(f"label {y.shape} / weight {w.shape} vs grid {x.shape[1:]}")
    return x, y, w, f


def objective(x, y, w, f, f_prev, mu: float) -> float:
    """Value of the regularized least-squares objective at ``f``."""
    x, y, w, f = _check_problem(x, y, w, f)
    f_prev = as_multichannel(f_prev)
    if f_prev.shape != f.shape:
        raise DimMismatch(f"f_prev {f_prev.shape} vs filter {f.shape}")
    resid = correlate(x, f) - y
    return float(
        0.5 * np.sum(resid ** 2)
        + 0.5 * np.sum((w * f) ** 2)
        + 0.5 * mu * np.sum((f - f_prev) ** 2)
    )


def solve_f_subproblem(xhat, yhat, ghat, hhat, fprev_hat, mu: float, gamma: float) -> np.ndarray:
    """Per-frequency closed-form filter update.

    At every frequency ``j`` with ``a = xhat[:, j]`` this solves

        (a a^H + (mu + gamma) I) f = a * yhat[j] + gamma (g - h) + mu f_prev

    via Sherman-Morrison in ``O(D)`` per frequency.
    """
    lam = mu + gamma
    if lam == 0:
        raise DegenerateRegularization("mu + gamma must be non-zero")
    xhat = np.asarray(xhat)
    q = xhat * yhat + gamma * (ghat - hhat) + mu * fprev_hat
    # a^H q and a^H a, both per frequency
    aq = np.einsum("dmn,dmn->mn", np.conj(xhat), q)
    aa = np.einsum("dmn,dmn->mn", np.conj(xhat), xhat).real
    return (q - xhat * (aq / (lam + aa))) / lam


def solve_g_subproblem(w, f, h, gamma: float) -> np.ndarray:
    """Elementwise ``g = gamma (f + h) / (w^2 + gamma)``."""
    return gamma * (f + h) / (np.square(w) + gamma)


def update_multiplier(h, f, g) -> np.ndarray:
    # grouping keeps h unchanged bit-for-bit once f == g
    return h + (f - g)


def update_gamma(gamma: float, rho: float, gamma_max: float) -> float:
    return min(gamma_max, rho * gamma)


def learn(x, y, w, f_prev, params: AdmmParams = AdmmParams(), g0=None):
    """Fit a filter to sample ``x`` and label ``y`` by ADMM.

    ``g`` is warm-started at ``f_prev`` (or ``g0`` when given) and the
    scaled multiplier ``h`` at zero; ``gamma`` restarts from
    ``params.gamma0`` on every call.

    Returns
    -------
    f : ndarray, shape (D, M, N)
        The filter variable after the last iteration.
    diag : LearnDiagnostics
        Objective after every iteration, the stepsize used at every
        iteration and the final primal residual ``||f - g||``.
    """
    x, y, w, f_prev = _check_problem(x, y, w, f_prev)
    w = check_spatial_weight(w)
    mu = params.mu
    xhat = dft2(x)
    yhat = dft2(y)
    fprev_hat = dft2(f_prev)
    g = f_prev.copy() if g0 is None else as_multichannel(g0).copy()
    if g.shape != f_prev.shape:
        raise DimMismatch(f"g0 {g.shape} vs filter {f_prev.shape}")
    h = np.zeros_like(g)
    gamma = params.gamma0
    diag = LearnDiagnostics()

    for _ in range(int(params.iters)):
        fhat = solve_f_subproblem(xhat, yhat, dft2(g), dft2(h), fprev_hat, mu, gamma)
        f = idft2(fhat)
        g = solve_g_subproblem(w, f, h, gamma)
        h = update_multiplier(h, f, g)
        diag.gamma.append(gamma)
        diag.objective.append(_objective_hat(xhat, y, w, f, fhat, f_prev, mu))
        gamma = update_gamma(gamma, params.rho, params.gamma_max)

    diag.primal_residual = float(np.linalg.norm(f - g))
    return f, diag


def _objective_hat(xhat, y, w, f, fhat, f_prev, mu) -> float:
    # same value as objective(), reusing the spectra already at hand
    resid = idft2(correlate_hat(xhat, fhat)) - y
    return float(
        0.5 * np.sum(resid ** 2)
        + 0.5 * np.sum((w * f) ** 2)
        + 0.5 * mu * np.sum((f - f_prev) ** 2)
    )


def linear_interp_update(f_model, f_new, eta: float) -> np.ndarray:
    """Blend ``(1 - eta) * f_model + eta * f_new``."""
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return (1 - eta) * np.asarray(f_model) + eta * np.asarray(f_new)
