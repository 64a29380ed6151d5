"""Low-rank mean-function solvers for transposable data.

The mean function is parameterized through row/column bases ``G_M, G_N``
(factors of the prior covariances) and a coefficient matrix ``B`` stored in
factored form ``B = P @ Q.T``.  Fitting minimizes

    (1 / 2*noise_var) * sum_obs (y - G_M B G_N^T)^2
    + (w / 2) * ||B||_F^2  +  lam * ||B||_*

with ``w = 1`` (Frobenius + nuclear), ``w = 0`` (nuclear only), or
``lam = 0`` (Frobenius only, plain kernel ridge).

Two solvers are provided:

* ``fit_exact_prox`` holds ``B`` densely and runs a monotone accelerated
  proximal-gradient loop with singular value thresholding.  It serves as
  the small-scale oracle.
* ``fit_factored`` never materializes ``B``: it grows the factorization
  one rank at a time using a power-method estimate of the dominant
  singular pair of the negative gradient, followed by quasi-Newton
  refinement of all factors under the variational bound
  ``||B||_* <= (||P||_F^2 + ||Q||_F^2) / 2``.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize
import scipy.sparse

from .exceptions import ConvergenceError, NumericError, ValidationError

# Singular values below this relative threshold are treated as zero rank.
RANK_CLEANUP_RTOL = 1e-12

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FitOptions:
    """Iteration caps and tolerances shared by both solvers."""

    max_outer_iters: int = 2000
    max_rank: int | None = None
    objective_rel_tol: float = 1e-6
    power_iters: int = 30
    power_tol: float = 1e-7
    inner_iters: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.inner_iters < 1 or self.power_iters < 1:
            raise ValidationError("iteration caps must be positive")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValidationError("max_rank must be positive when given")
        if self.objective_rel_tol <= 0 or self.power_tol <= 0:
            raise ValidationError("tolerances must be positive")


@dataclass(frozen=True)
class MeanModel:
    """Fitted mean function: factors of ``B`` plus its hyperparameters.

    ``row_factor`` is ``D_M x R`` and ``col_factor`` is ``D_N x R``; the
    coefficient matrix is their outer product ``B = P @ Q.T``.  ``R = 0``
    (the all-zero mean) is a valid state.  ``n_rows``/``n_cols`` record
    the training-matrix extent and the kernel ids record which prior
    covariances produced the bases used at fit time.
    """

    row_factor: np.ndarray
    col_factor: np.ndarray
    lam: float
    frobenius_weight: int
    noise_var: float
    n_rows: int
    n_cols: int
    row_kernel_id: str = "unspecified"
    col_kernel_id: str = "unspecified"
    seed: int = 0
    fit_iterations: int | None = None  # informational, not serialized

    def __post_init__(self):
        p = np.asarray(self.row_factor, dtype=float)
        q = np.asarray(self.col_factor, dtype=float)
        if p.ndim != 2 or q.ndim != 2 or p.shape[1] != q.shape[1]:
            raise ValidationError("row/col factors must be 2-d with equal rank")
        if self.frobenius_weight not in (0, 1):
            raise ValidationError("frobenius_weight must be 0 or 1")
        if self.lam < 0:
            raise ValidationError("lam must be nonnegative")
        if self.noise_var <= 0:
            raise ValidationError("noise_var must be positive")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValidationError("factors must be finite")
        object.__setattr__(self, "row_factor", p)
        object.__setattr__(self, "col_factor", q)

    @property
    def rank(self):
        return self.row_factor.shape[1]

    @property
    def basis_dim_row(self):
        return self.row_factor.shape[0]

    @property
    def basis_dim_col(self):
        return self.col_factor.shape[0]

    def parameter_matrix(self):
        """Dense coefficient matrix ``B = P @ Q.T``."""
        return self.row_factor @ self.col_factor.T

    def singular_values(self):
        """Singular values of ``B``, computed from the factors."""
        return _factor_singular_values(self.row_factor, self.col_factor)


# ---------------------------------------------------------------------------
# factored-form linear algebra
# ---------------------------------------------------------------------------

def _factor_svd(p, q):
    """SVD of ``p @ q.T`` without forming it: QR on each factor first."""
    if p.shape[1] == 0:
        empty = np.zeros(0)
        return np.zeros((p.shape[0], 0)), empty, np.zeros((q.shape[0], 0))
    qp, rp = np.linalg.qr(p)
    qq, rq = np.linalg.qr(q)
    u_small, svals, vt_small = np.linalg.svd(rp @ rq.T)
    return qp @ u_small, svals, qq @ vt_small.T


def _factor_singular_values(p, q):
    if p.shape[1] == 0:
        return np.zeros(0)
    _, rp = np.linalg.qr(p, mode="reduced")
    _, rq = np.linalg.qr(q, mode="reduced")
    return np.linalg.svd(rp @ rq.T, compute_uv=False)


def _rebalance(p, q, drop_rtol=RANK_CLEANUP_RTOL):
    """Rewrite factors as ``U sqrt(s), V sqrt(s)`` and drop zero modes.

    After this, ``(||P||_F^2 + ||Q||_F^2) / 2`` equals ``||B||_*`` exactly,
    which re-tightens the variational bound between outer iterations.
    """
    u, svals, v = _factor_svd(p, q)
    if svals.size:
        keep = svals > svals[0] * drop_rtol
        u, svals, v = u[:, keep], svals[keep], v[:, keep]
    root = np.sqrt(svals)
    return u * root, v * root, svals


def svt(matrix, tau):
    """Singular value thresholding: proximal operator of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValidationError("svt threshold must be nonnegative")
    m = np.asarray(matrix, dtype=float)
    if tau == 0:
        return m.copy()
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed in svt: {exc}") from exc
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vt[keep]


# ---------------------------------------------------------------------------
# predictions and objective
# ---------------------------------------------------------------------------

def _check_bases(model, row_basis, col_basis):
    if model.basis_dim_row != row_basis.basis_dim:
        raise ValidationError(
            f"model expects row basis dim {model.basis_dim_row}, "
            f"got {row_basis.basis_dim}"
        )
    if model.basis_dim_col != col_basis.basis_dim:
        raise ValidationError(
            f"model expects col basis dim {model.basis_dim_col}, "
            f"got {col_basis.basis_dim}"
        )


def _split_indices(indices, n_rows, n_cols):
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    if idx.ndim != 2 or idx.shape[1] != 2:
        raise ValidationError("indices must be a sequence of (row, col) pairs")
    rows, cols = idx[:, 0], idx[:, 1]
    if rows.min() < 0 or rows.max() >= n_rows:
        raise ValidationError(f"row index out of range [0, {n_rows})")
    if cols.min() < 0 or cols.max() >= n_cols:
        raise ValidationError(f"col index out of range [0, {n_cols})")
    return rows, cols


def predict_mean(model, row_basis, col_basis, indices):
    """Mean prediction ``G_M(m) B G_N(n)^T`` at each ``(m, n)`` index.

    Rows appended to the bases never change predictions at existing
    indices, so the same model extends to new rows/columns covered by a
    larger kernel.
    """
    _check_bases(model, row_basis, col_basis)
    rows, cols = _split_indices(indices, row_basis.rows, col_basis.rows)
    if rows.size == 0:
        return np.zeros(0)
    left = row_basis.values[rows] @ model.row_factor
    right = col_basis.values[cols] @ model.col_factor
    return np.einsum("ij,ij->i", left, right)


def objective(model, row_basis, col_basis, obs):
    """Full regularized objective value at the model's coefficients."""
    _check_bases(model, row_basis, col_basis)
    svals = model.singular_values()
    value = model.lam * float(svals.sum())
    value += 0.5 * model.frobenius_weight * float((svals**2).sum())
    if len(obs) > 0:
        idx = np.column_stack([obs.rows, obs.cols])
        resid = obs.values - predict_mean(model, row_basis, col_basis, idx)
        value += 0.5 / model.noise_var * float(resid @ resid)
    return value


def smooth_objective(param_matrix, row_basis, col_basis, obs, noise_var,
                     frobenius_weight=1):
    """Smooth part of the objective (data term + Frobenius term) at ``B``."""
    b = np.asarray(param_matrix, dtype=float)
    left = row_basis.values[obs.rows] @ b
    resid = obs.values - np.einsum("ij,ij->i", left, col_basis.values[obs.cols])
    value = 0.5 / noise_var * float(resid @ resid)
    value += 0.5 * frobenius_weight * float(np.sum(b * b))
    return value


def smooth_gradient(param_matrix, row_basis, col_basis, obs, noise_var,
                    frobenius_weight=1):
    """Gradient of the smooth objective part with respect to dense ``B``.

    Equals ``-(1/noise_var) G_M^T R G_N + w B`` where ``R`` is the sparse
    residual matrix on the observed entries.
    """
    b = np.asarray(param_matrix, dtype=float)
    a_rows = row_basis.values[obs.rows]
    a_cols = col_basis.values[obs.cols]
    resid = obs.values - np.einsum("ij,ij->i", a_rows @ b, a_cols)
    grad = -(1.0 / noise_var) * (a_rows.T @ (resid[:, None] * a_cols))
    return grad + frobenius_weight * b


def zero_solution_threshold(obs, row_basis, col_basis, noise_var):
    """Smallest ``lam`` at which the all-zero model is optimal.

    This is the spectral norm of ``(1/noise_var) G_M^T Y G_N`` with ``Y``
    the sparse matrix of observations (the negative smooth gradient at
    ``B = 0``), computed by exact SVD.
    """
    a_rows = row_basis.values[obs.rows]
    a_cols = col_basis.values[obs.cols]
    m = a_rows.T @ (obs.values[:, None] * a_cols) / noise_var
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def _validate_fit_inputs(obs, row_basis, col_basis, lam, noise_var,
                         frobenius_weight):
    if len(obs) == 0:
        raise ValidationError("cannot fit a model on an empty observation set")
    if obs.n_rows > row_basis.rows or obs.n_cols > col_basis.rows:
        raise ValidationError(
            f"observations cover a {obs.n_rows}x{obs.n_cols} grid but bases "
            f"only cover {row_basis.rows}x{col_basis.rows}"
        )
    if lam < 0:
        raise ValidationError("lam must be nonnegative")
    if noise_var <= 0:
        raise ValidationError("noise_var must be positive")
    if frobenius_weight not in (0, 1):
        raise ValidationError("frobenius_weight must be 0 or 1")


def _model_from_dense(b, lam, frobenius_weight, noise_var, obs, seed,
                      iterations):
    try:
        u, svals, vt = np.linalg.svd(b, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"final SVD cleanup failed: {exc}") from exc
    keep = svals > (svals[0] * RANK_CLEANUP_RTOL if svals.size else 0.0)
    root = np.sqrt(svals[keep])
    return MeanModel(
        row_factor=u[:, keep] * root,
        col_factor=vt[keep].T * root,
        lam=float(lam),
        frobenius_weight=int(frobenius_weight),
        noise_var=float(noise_var),
        n_rows=obs.n_rows,
        n_cols=obs.n_cols,
        seed=int(seed),
        fit_iterations=iterations,
    )


# ---------------------------------------------------------------------------
# exact proximal-gradient solver (dense B, oracle scale)
# ---------------------------------------------------------------------------

def fit_exact_prox(obs, row_basis, col_basis, lam, noise_var,
                   frobenius_weight=1, options=None, init=None,
                   callback=None):
    """Solve the low-rank mean problem with dense monotone FISTA + SVT.

    Holds the full ``D_M x D_N`` coefficient matrix in memory, so this is
    the oracle-scale path; use ``fit_factored`` for large bases.  Raises
    ``ConvergenceError`` (carrying the last iterate) when the relative
    objective change has not dropped below ``objective_rel_tol`` within
    ``max_outer_iters`` steps.  ``callback``, when given, receives the
    objective value after every outer iteration.
    """
    options = options or FitOptions()
    _validate_fit_inputs(obs, row_basis, col_basis, lam, noise_var,
                         frobenius_weight)
    gm, gn = row_basis.values, col_basis.values
    dm, dn = gm.shape[1], gn.shape[1]
    a_rows = gm[obs.rows]
    a_cols = gn[obs.cols]
    y = obs.values
    w = float(frobenius_weight)
    inv_nv = 1.0 / noise_var

    def f_smooth(b):
        resid = y - np.einsum("ij,ij->i", a_rows @ b, a_cols)
        return 0.5 * inv_nv * float(resid @ resid) + 0.5 * w * float(np.sum(b * b))

    def grad_smooth(b):
        resid = y - np.einsum("ij,ij->i", a_rows @ b, a_cols)
        return -inv_nv * (a_rows.T @ (resid[:, None] * a_cols)) + w * b

    def nuclear(b):
        if lam == 0:
            return 0.0
        return float(np.linalg.svd(b, compute_uv=False).sum())

    # conservative Lipschitz bound for the initial step size
    smax = np.linalg.norm(gm, 2) * np.linalg.norm(gn, 2)
    step = 1.0 / (inv_nv * smax**2 + w + 1e-12)

    x = np.zeros((dm, dn)) if init is None else np.array(init, dtype=float)
    if x.shape != (dm, dn):
        raise ValidationError(f"init must have shape ({dm}, {dn})")
    x_prev = x
    obj_x = f_smooth(x) + lam * nuclear(x)
    momentum_point = x
    t_mom = 1.0
    restarted = False
    converged = False
    iterations = 0

    for iterations in range(1, options.max_outer_iters + 1):
        grad = grad_smooth(momentum_point)
        f_at_y = f_smooth(momentum_point)
        while True:
            cand = svt(momentum_point - step * grad, step * lam)
            diff = cand - momentum_point
            quad = f_at_y + float(np.vdot(grad, diff)) \
                + float(np.vdot(diff, diff)) / (2.0 * step)
            if f_smooth(cand) <= quad + 1e-12 * max(1.0, abs(quad)):
                break
            step *= 0.5
            if step < 1e-20:
                raise NumericError("backtracking line search underflowed")
        obj_cand = f_smooth(cand) + lam * nuclear(cand)
        if obj_cand <= obj_x:
            x_prev, x = x, cand
            obj_prev, obj_x = obj_x, obj_cand
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom**2))
            momentum_point = x + ((t_mom - 1.0) / t_next) * (x - x_prev)
            t_mom = t_next
            restarted = False
            if callback is not None:
                callback(obj_x)
            if obj_prev - obj_x <= options.objective_rel_tol * max(1.0, abs(obj_prev)):
                converged = True
                break
        elif restarted:
            converged = True  # plain step from x makes no progress: fixed point
            break
        else:
            momentum_point = x
            t_mom = 1.0
            restarted = True
            if callback is not None:
                callback(obj_x)

    model = _model_from_dense(x, lam, frobenius_weight, noise_var, obs,
                              options.seed, iterations)
    if not converged:
        raise ConvergenceError(
            f"proximal solver did not converge in {iterations} iterations "
            f"(last objective {obj_x:.6g})",
            iterations=iterations, last_objective=obj_x, model=model,
        )
    return model


# ---------------------------------------------------------------------------
# rank-incremental factored solver (large scale)
# ---------------------------------------------------------------------------

def _power_top_singular(matvec, rmatvec, dim_right, rng, iters, tol, v0=None):
    """Dominant singular triple of an implicit operator by power iteration."""
    if v0 is not None and np.linalg.norm(v0) > 0:
        v = v0 / np.linalg.norm(v0)
    else:
        v = rng.standard_normal(dim_right)
        v /= np.linalg.norm(v)
    u = None
    s = 0.0
    for _ in range(iters):
        u = matvec(v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return u, 0.0, v
        u /= nu
        v = rmatvec(u)
        s_new = np.linalg.norm(v)
        if s_new == 0.0:
            return u, 0.0, v
        v /= s_new
        if abs(s_new - s) <= tol * max(s_new, 1e-30):
            s = s_new
            break
        s = s_new
    return u, float(s), v


def _refine_factors(p, q, a_rows, a_cols, y, lam, noise_var, w, maxiter):
    """Quasi-Newton descent on the factored objective.

    The nuclear norm is replaced by its variational upper bound
    ``(||P||_F^2 + ||Q||_F^2) / 2`` so the objective is smooth in (P, Q).
    """
    dm, rank = p.shape
    dn = q.shape[0]
    inv_nv = 1.0 / noise_var

    def fun(z):
        pp = z[: dm * rank].reshape(dm, rank)
        qq = z[dm * rank:].reshape(dn, rank)
        left = a_rows @ pp
        right = a_cols @ qq
        resid = y - np.einsum("ij,ij->i", left, right)
        ptp = pp.T @ pp
        qtq = qq.T @ qq
        val = 0.5 * inv_nv * float(resid @ resid) \
            + 0.5 * w * float(np.sum(ptp * qtq)) \
            + 0.5 * lam * float(np.trace(ptp) + np.trace(qtq))
        scaled = inv_nv * resid
        gp = -(a_rows.T @ (scaled[:, None] * right)) + w * (pp @ qtq) + lam * pp
        gq = -(a_cols.T @ (scaled[:, None] * left)) + w * (qq @ ptp) + lam * qq
        return val, np.concatenate([gp.ravel(), gq.ravel()])

    z0 = np.concatenate([p.ravel(), q.ravel()])
    res = scipy.optimize.minimize(
        fun, z0, jac=True, method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-14, "gtol": 1e-12},
    )
    z = res.x if res.fun <= fun(z0)[0] else z0  # never accept an uphill result
    return z[: dm * rank].reshape(dm, rank), z[dm * rank:].reshape(dn, rank)


def fit_factored(obs, row_basis, col_basis, lam, noise_var,
                 frobenius_weight=1, options=None):
    """Rank-incremental conditional-gradient-style solver.

    Starting from the empty (rank-0) model, each outer iteration forms the
    sparse-residual gradient implicitly, estimates its dominant singular
    pair by power iteration, stops once ``lam`` dominates that singular
    value, and otherwise appends the optimally scaled rank-one direction
    and refines all factors with L-BFGS.  The true objective (exact
    nuclear norm, recomputed at outer-iteration boundaries) is
    nonincreasing across outer iterations.
    """
    options = options or FitOptions()
    _validate_fit_inputs(obs, row_basis, col_basis, lam, noise_var,
                         frobenius_weight)
    gm, gn = row_basis.values, col_basis.values
    dm, dn = gm.shape[1], gn.shape[1]
    a_rows = gm[obs.rows]
    a_cols = gn[obs.cols]
    y = obs.values
    w = float(frobenius_weight)
    inv_nv = 1.0 / noise_var
    max_rank = options.max_rank if options.max_rank is not None else min(dm, dn)
    rng = np.random.default_rng(options.seed)

    resid_shape = (row_basis.rows, col_basis.rows)
    p = np.zeros((dm, 0))
    q = np.zeros((dn, 0))
    svals = np.zeros(0)
    preds = np.zeros(len(obs))
    obj = 0.5 * inv_nv * float(y @ y)
    converged = False
    v_warm = None

    for outer in range(1, options.max_outer_iters + 1):
        resid = y - preds
        r_sp = scipy.sparse.csr_matrix(
            (resid, (obs.rows, obs.cols)), shape=resid_shape
        )

        def neg_grad_mv(vec):
            out = inv_nv * (gm.T @ (r_sp @ (gn @ vec)))
            if p.shape[1]:
                out -= w * (p @ (q.T @ vec))
            return out

        def neg_grad_rmv(vec):
            out = inv_nv * (gn.T @ (r_sp.T @ (gm @ vec)))
            if p.shape[1]:
                out -= w * (q @ (p.T @ vec))
            return out

        u, top_sv, v = _power_top_singular(
            neg_grad_mv, neg_grad_rmv, dn, rng,
            options.power_iters, options.power_tol, v0=v_warm,
        )
        v_warm = v
        if top_sv <= lam * (1.0 + 1e-9) + 1e-12:
            converged = True
            break
        if p.shape[1] >= max_rank:
            converged = True  # rank budget reached; factors already refined
            break

        # optimal scale for the new rank-one direction under the bound
        h = np.einsum("ij,j->i", a_rows, u) * np.einsum("ij,j->i", a_cols, v)
        cross = float(u @ (p @ (q.T @ v))) if p.shape[1] else 0.0
        denom = inv_nv * float(h @ h) + w
        numer = inv_nv * float(h @ resid) - w * cross - lam
        if denom <= 1e-30 or numer <= 0.0:
            converged = True
            break
        theta = numer / denom
        root = np.sqrt(theta)
        p = np.column_stack([p, root * u])
        q = np.column_stack([q, root * v])

        p, q = _refine_factors(p, q, a_rows, a_cols, y, lam, noise_var, w,
                               options.inner_iters)
        p, q, svals = _rebalance(p, q)
        preds = np.einsum("ij,ij->i", a_rows @ p, a_cols @ q)
        resid_new = y - preds
        obj_new = 0.5 * inv_nv * float(resid_new @ resid_new) \
            + 0.5 * w * float((svals**2).sum()) + lam * float(svals.sum())
        if obj - obj_new <= options.objective_rel_tol * max(1.0, abs(obj)):
            obj = min(obj, obj_new)
            converged = True
            break
        obj = obj_new
    else:
        outer = options.max_outer_iters

    model = MeanModel(
        row_factor=p, col_factor=q, lam=float(lam),
        frobenius_weight=int(frobenius_weight), noise_var=float(noise_var),
        n_rows=obs.n_rows, n_cols=obs.n_cols, seed=int(options.seed),
        fit_iterations=outer,
    )
    if not converged:
        raise ConvergenceError(
            f"factored solver did not converge in {outer} outer iterations "
            f"(last objective {obj:.6g})",
            iterations=outer, last_objective=obj, model=model,
        )
    return model


# ---------------------------------------------------------------------------
# model serialization
# ---------------------------------------------------------------------------
# Single-file format: one JSON header line, then the row factor and the
# column factor as raw little-endian float64 in row-major order.

def save_model(model, path):
    """Write a MeanModel to ``path`` (JSON header + raw factor bytes)."""
    header = {
        "format_version": FORMAT_VERSION,
        "n_rows": int(model.n_rows),
        "n_cols": int(model.n_cols),
        "basis_dim_row": int(model.basis_dim_row),
        "basis_dim_col": int(model.basis_dim_col),
        "rank": int(model.rank),
        "lam": float(model.lam),
        "frobenius_weight": int(model.frobenius_weight),
        "noise_var": float(model.noise_var),
        "row_kernel_id": str(model.row_kernel_id),
        "col_kernel_id": str(model.col_kernel_id),
        "seed": int(model.seed),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.row_factor, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.col_factor, dtype="<f8").tobytes())


def load_model(path):
    """Read a MeanModel written by ``save_model``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ValidationError(f"{path}: missing model header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: bad model header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ValidationError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )
    dm, dn, rank = header["basis_dim_row"], header["basis_dim_col"], header["rank"]
    body = raw[newline + 1:]
    expected = (dm + dn) * rank * 8
    if len(body) != expected:
        raise ValidationError(
            f"{path}: expected {expected} payload bytes, found {len(body)}"
        )
    flat = np.frombuffer(body, dtype="<f8")
    return MeanModel(
        row_factor=flat[: dm * rank].reshape(dm, rank).copy(),
        col_factor=flat[dm * rank:].reshape(dn, rank).copy(),
        lam=header["lam"],
        frobenius_weight=header["frobenius_weight"],
        noise_var=header["noise_var"],
        n_rows=header["n_rows"],
        n_cols=header["n_cols"],
        row_kernel_id=header["row_kernel_id"],
        col_kernel_id=header["col_kernel_id"],
        seed=header["seed"],
    )
