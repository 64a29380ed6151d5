"""Constrained Bayesian inference for finite-dimensional Gaussians.

Small-scale, dense reference implementations of the information
projection that the low-rank solvers exploit at scale: project a Gaussian
posterior over a vectorized matrix onto the nuclear-norm-penalized family.
The projection decouples — the covariance is kept, the mean is soft
thresholded in the metric of the posterior covariance.

Vectorization is column-major throughout (``order='F'``): the vector
element for grid cell ``(m, n)`` sits at flat position ``m + n * n_rows``,
matching the Kronecker structure ``C = kron(col_cov, row_cov)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NumericError, ValidationError
from .solver import svt

DEFAULT_MAX_DIM = 2500


@dataclass(frozen=True)
class GaussianBelief:
    """Mean vector and symmetric positive definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape != (mean.size, mean.size):
            raise ValidationError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if not np.all(np.abs(cov - cov.T) <= 1e-10):
            raise ValidationError("covariance must be symmetric within 1e-10")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True)
class SelectionMap:
    """Observed flat indices defining a 0/1 selection matrix."""

    indices: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= self.dim):
            raise ValidationError(f"selection indices outside [0, {self.dim})")
        if idx.size != np.unique(idx).size:
            raise ValidationError("selection indices must be unique")
        object.__setattr__(self, "indices", idx)


def flat_index(row, col, n_rows):
    """Column-major flat position of grid cell (row, col)."""
    return row + col * n_rows


def _chol(matrix, what):
    try:
        return scipy.linalg.cho_factor(matrix, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"{what} is not positive definite: {exc}") from exc


def gaussian_kl(q, p):
    """KL divergence KL(q || p) between two Gaussians of equal dimension."""
    if q.dim != p.dim:
        raise ValidationError("beliefs must have equal dimension")
    chol_p = _chol(p.cov, "reference covariance")
    sign_q, logdet_q = np.linalg.slogdet(q.cov)
    if sign_q <= 0:
        raise NumericError("query covariance is not positive definite")
    logdet_p = 2.0 * float(np.log(np.diag(chol_p[0])).sum())
    trace = float(np.trace(scipy.linalg.cho_solve(chol_p, q.cov)))
    delta = p.mean - q.mean
    quad = float(delta @ scipy.linalg.cho_solve(chol_p, delta))
    return 0.5 * (trace + quad - q.dim + logdet_p - float(logdet_q))


def project_mean_nuclear(posterior, shape, lam, max_dim=DEFAULT_MAX_DIM,
                         rel_tol=1e-12, max_iters=10000):
    """Project a Gaussian onto the nuclear-norm-penalized family.

    The covariance of the projection equals the posterior covariance; the
    mean minimizes ``(mean - x)^T cov^{-1} (mean - x) + 2*lam*||mat(x)||_*``
    over vectors ``x`` reshaping to ``shape``, solved by accelerated
    proximal gradient with singular value thresholding.  Dense covariance
    arithmetic caps the dimension at ``max_dim``.
    """
    n_rows, n_cols = shape
    d = n_rows * n_cols
    if posterior.dim != d:
        raise ValidationError(
            f"posterior dim {posterior.dim} does not match grid {shape}"
        )
    if d > max_dim:
        raise ValidationError(
            f"grid has {d} cells, above the dense cap of {max_dim}; "
            "use the factored solver for large problems"
        )
    if lam < 0:
        raise ValidationError("lam must be nonnegative")
    if lam == 0:
        return GaussianBelief(posterior.mean.copy(), posterior.cov.copy())

    eigvals = scipy.linalg.eigvalsh(posterior.cov)
    if eigvals[0] <= 0:
        raise ValidationError("posterior covariance must be positive definite")
    chol = _chol(posterior.cov, "posterior covariance")
    target = posterior.mean
    step = 0.5 * eigvals[0]  # 1 / L with L = 2 / min-eigenvalue

    def grad(x):
        return 2.0 * scipy.linalg.cho_solve(chol, x - target)

    def smooth(x):
        delta = x - target
        return float(delta @ scipy.linalg.cho_solve(chol, delta))

    def full_obj(x):
        nuc = np.linalg.svd(x.reshape(shape, order="F"), compute_uv=False).sum()
        return smooth(x) + 2.0 * lam * float(nuc)

    x = target.copy()
    x_prev = x
    obj_x = full_obj(x)
    y = x
    t_mom = 1.0
    restarted = False
    for _ in range(max_iters):
        z_mat = svt((y - step * grad(y)).reshape(shape, order="F"),
                    2.0 * lam * step)
        z = z_mat.ravel(order="F")
        obj_z = full_obj(z)
        if obj_z <= obj_x:
            x_prev, x = x, z
            obj_prev, obj_x = obj_x, obj_z
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom**2))
            y = x + ((t_mom - 1.0) / t_next) * (x - x_prev)
            t_mom = t_next
            restarted = False
            if obj_prev - obj_x <= rel_tol * max(1.0, abs(obj_prev)):
                break
        elif restarted:
            break
        else:
            y = x
            t_mom = 1.0
            restarted = True
    return GaussianBelief(x, posterior.cov.copy())


def postdata_covariance(prior_cov, noise_var, selection):
    """Optimal post-data covariance given noisy observations of a subset.

    Equals ``(C^{-1} + PᵀP / noise_var)^{-1}`` but is computed in the
    downdated form ``C - C[:, idx] (C_idx + noise_var*I)^{-1} C[idx, :]``
    so only an ``L x L`` system is solved.  An empty selection returns the
    prior unchanged.
    """
    c = np.asarray(prior_cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValidationError("prior covariance must be square")
    if noise_var <= 0:
        raise ValidationError("noise_var must be positive")
    if selection.dim != c.shape[0]:
        raise ValidationError(
            f"selection dim {selection.dim} does not match covariance "
            f"dim {c.shape[0]}"
        )
    idx = selection.indices
    if idx.size == 0:
        return c.copy()
    inner = c[np.ix_(idx, idx)] + noise_var * np.eye(idx.size)
    chol = _chol(inner, "observed covariance block")
    return c - c[:, idx] @ scipy.linalg.cho_solve(chol, c[idx, :])
