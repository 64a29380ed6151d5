"""Exact Gaussian process posteriors over matrix entries.

The prior covariance between entries factorizes over rows and columns:
``cov((m, n), (m', n')) = C_row[m, m'] * C_col[n, n']``.  Restricted to the
observed index set this gives an ``L x L`` system, so these routines are
meant for modest ``L``; the factored solver covers the large-scale case.
All linear systems go through symmetric factorizations, never an explicit
inverse.
"""

import numpy as np
import scipy.linalg

from .exceptions import NumericError, ValidationError


def _kernel_values(kernel):
    return kernel.values if hasattr(kernel, "values") else np.asarray(kernel, float)


def _pair_indices(indices):
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        return np.zeros((0, 2), dtype=int)
    if idx.ndim != 2 or idx.shape[1] != 2:
        raise ValidationError("indices must be (row, col) pairs")
    return idx


def _cross_covariance(row_cov, col_cov, left, right):
    """Covariance block between two lists of (m, n) indices."""
    return row_cov[np.ix_(left[:, 0], right[:, 0])] \
        * col_cov[np.ix_(left[:, 1], right[:, 1])]


def _solve_observed(row_cov, col_cov, obs_idx, noise_var, rhs):
    """Solve ``(C + noise_var * I) x = rhs`` over the observed entries."""
    cov = _cross_covariance(row_cov, col_cov, obs_idx, obs_idx)
    n = cov.shape[0]
    jitter = 1e-10 * np.trace(cov) / max(n, 1)
    system = cov + (noise_var + jitter) * np.eye(n)
    try:
        chol = scipy.linalg.cho_factor(system, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"observed-covariance solve failed: {exc}") from exc
    return scipy.linalg.cho_solve(chol, rhs)


def gp_posterior_mean_exact(obs, row_cov, col_cov, noise_var, query_indices):
    """Posterior mean at query indices via the representer weights.

    Computes ``alpha = (C + noise_var*I)^{-1} y`` once over the observed
    set, then evaluates ``mean(q) = c_{q,obs} @ alpha`` for each query.
    """
    if noise_var <= 0:
        raise ValidationError("noise_var must be positive")
    row_cov = _kernel_values(row_cov)
    col_cov = _kernel_values(col_cov)
    query = _pair_indices(query_indices)
    if len(obs) == 0:
        return np.zeros(len(query))
    obs_idx = np.column_stack([obs.rows, obs.cols])
    alpha = _solve_observed(row_cov, col_cov, obs_idx, noise_var, obs.values)
    cross = _cross_covariance(row_cov, col_cov, query, obs_idx)
    return cross @ alpha


def gp_posterior_covariance(obs_indices, row_cov, col_cov, noise_var,
                            query_indices):
    """Posterior covariance matrix between the query indices.

    ``Sigma(q, q') = C(q, q') - c_{q,obs} (C + noise_var*I)^{-1} c_{q',obs}^T``.
    With no observed indices this is just the prior covariance.
    """
    if noise_var <= 0:
        raise ValidationError("noise_var must be positive")
    row_cov = _kernel_values(row_cov)
    col_cov = _kernel_values(col_cov)
    query = _pair_indices(query_indices)
    obs_idx = _pair_indices(obs_indices)
    prior = _cross_covariance(row_cov, col_cov, query, query)
    if len(obs_idx) == 0:
        return prior
    cross = _cross_covariance(row_cov, col_cov, query, obs_idx)
    solved = _solve_observed(row_cov, col_cov, obs_idx, noise_var, cross.T)
    return prior - cross @ solved


def update_noise_variance(residuals, trace_term):
    """Closed-form noise variance update.

    ``noise_var = (sum(residual^2) + trace_term) / L`` where ``trace_term``
    is the trace of the fitted covariance restricted to the observed
    entries.  Off by default in the experiment driver; the noise level is
    normally grid-searched instead because learned values tend to collapse
    toward zero.
    """
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ValidationError("residuals must be nonempty")
    if trace_term < 0:
        raise ValidationError("trace term must be nonnegative")
    return float((r @ r + trace_term) / r.size)


def hyperparam_objective(cov_fn, rho, mean_vec, cov_term):
    """Covariance-hyperparameter selection objective at ``rho``.

    ``J(rho) = 0.5*log|C| + 0.5*mean^T C^{-1} mean + 0.5*tr(C^{-1} S)``
    with ``C = cov_fn(rho)`` and ``mean_vec``, ``cov_term`` held fixed.
    """
    c = np.asarray(cov_fn(rho), dtype=float)
    mean_vec = np.asarray(mean_vec, dtype=float)
    cov_term = np.asarray(cov_term, dtype=float)
    try:
        chol = scipy.linalg.cho_factor(c, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"covariance not positive definite: {exc}") from exc
    logdet = 2.0 * float(np.log(np.diag(chol[0])).sum())
    quad = float(mean_vec @ scipy.linalg.cho_solve(chol, mean_vec))
    trace = float(np.trace(scipy.linalg.cho_solve(chol, cov_term)))
    return 0.5 * (logdet + quad + trace)


def covariance_hyperparam_gradient(cov_fn, dcov_fn, rho, mean_vec, cov_term):
    """Derivative of ``hyperparam_objective`` with respect to ``rho``.

    ``dJ = 0.5*tr(C^{-1}C') - 0.5*m^T C^{-1}C'C^{-1} m
    - 0.5*tr(C^{-1}C'C^{-1}S)`` where ``C' = dcov_fn(rho)`` is the
    elementwise derivative of the parametric kernel.  Intended for small
    matrices; everything is evaluated with linear solves.
    """
    c = np.asarray(cov_fn(rho), dtype=float)
    dc = np.asarray(dcov_fn(rho), dtype=float)
    mean_vec = np.asarray(mean_vec, dtype=float)
    cov_term = np.asarray(cov_term, dtype=float)
    try:
        chol = scipy.linalg.cho_factor(c, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"covariance not positive definite: {exc}") from exc
    cinv_dc = scipy.linalg.cho_solve(chol, dc)
    cinv_m = scipy.linalg.cho_solve(chol, mean_vec)
    cinv_s = scipy.linalg.cho_solve(chol, cov_term)
    grad = 0.5 * float(np.trace(cinv_dc))
    grad -= 0.5 * float(cinv_m @ (dc @ cinv_m))
    grad -= 0.5 * float(np.trace(cinv_dc @ cinv_s))
    return grad
