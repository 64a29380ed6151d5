"""Prior covariances over rows and columns, built from graphs.

The covariance of a row (or column) set comes either from a graph, via the
diffusion kernel ``exp(-a*L) + b*I`` on the normalized Laplacian ``L``, or
is simply the identity.  Kernels are factored into a basis ``G`` with
``G @ G.T == C``, which is how the low-rank mean solvers consume them.

All functions here are pure: they never mutate their inputs, so sharing
graphs, kernels and bases across threads is safe.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import NumericError, ValidationError

SYMMETRY_ATOL = 1e-10
PSD_EIG_TOL = -1e-8


@dataclass(frozen=True)
class GraphSpec:
    """An undirected weighted graph on ``node_count`` nodes.

    Edges are normalized on construction: indices validated, self-loops
    dropped, duplicates (in either orientation) collapsed by summing their
    weights.  Directed inputs therefore come out symmetrized.
    """

    node_count: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.node_count < 1:
            raise ValidationError("graph needs at least one node")
        merged = {}
        for edge in self.edges:
            if len(edge) == 2:
                i, j = edge
                w = 1.0
            elif len(edge) == 3:
                i, j, w = edge
            else:
                raise ValidationError(f"edge {edge!r} is not (i, j) or (i, j, w)")
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise ValidationError(
                    f"edge ({i}, {j}) out of range for {self.node_count} nodes"
                )
            if w <= 0:
                raise ValidationError(f"edge ({i}, {j}) has non-positive weight {w}")
            if i == j:
                continue  # self-loops dropped
            key = (min(i, j), max(i, j))
            merged[key] = merged.get(key, 0.0) + w
        normalized = tuple((i, j, w) for (i, j), w in sorted(merged.items()))
        object.__setattr__(self, "edges", normalized)


@dataclass(frozen=True)
class KernelMatrix:
    """Dense symmetric PSD prior covariance over a row or column set."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"kernel must be square, got shape {v.shape}")
        if not np.all(np.abs(v - v.T) <= SYMMETRY_ATOL):
            raise ValidationError("kernel matrix is not symmetric within 1e-10")
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.values.shape[0]

    def min_eigenvalue(self):
        return float(scipy.linalg.eigvalsh(self.values)[0])

    def is_psd(self, tol=PSD_EIG_TOL):
        """True when the smallest eigenvalue is above -1e-8 (or ``tol``)."""
        return self.min_eigenvalue() >= tol


@dataclass(frozen=True)
class BasisFactor:
    """Factor ``G`` of a kernel ``C`` with ``G @ G.T == C``.

    ``basis_dim`` may be smaller than ``rows`` when the kernel is rank
    deficient and zero modes were dropped.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValidationError("basis factor must be a 2-d array")
        object.__setattr__(self, "values", v)

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def basis_dim(self):
        return self.values.shape[1]


def build_adjacency(graph):
    """Dense symmetric adjacency matrix of a GraphSpec (zero diagonal)."""
    a = np.zeros((graph.node_count, graph.node_count))
    for i, j, w in graph.edges:
        a[i, j] += w
        a[j, i] += w
    return a


def normalized_laplacian(adjacency):
    """Normalized graph Laplacian ``I - D^{-1/2} A D^{-1/2}``.

    ``D`` holds the row sums of ``A``.  For isolated nodes (zero degree)
    the scaling entry is defined as 0, so their Laplacian row is the
    identity row and they stay decoupled from the rest of the graph.
    """
    a = np.asarray(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"adjacency must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=SYMMETRY_ATOL, rtol=0.0):
        raise ValidationError("adjacency matrix must be symmetric")
    if np.any(a < 0):
        raise ValidationError("adjacency weights must be nonnegative")
    deg = a.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    lap = -a * dinv_sqrt[:, None] * dinv_sqrt[None, :]
    np.fill_diagonal(lap, 1.0)
    return lap


def diffusion_kernel(laplacian, decay=1.0, offset=1.0):
    """Diffusion prior covariance ``exp(-decay * L) + offset * I``.

    The matrix exponential is computed through a symmetric
    eigendecomposition of ``L``, which is exact for symmetric input.  The
    result is re-symmetrized to scrub round-off.

    Parameters
    ----------
    laplacian : ndarray
        Symmetric (normalized) graph Laplacian.
    decay : float
        Diffusion rate ``a >= 0``; larger values smooth more.
    offset : float
        Ridge ``b >= 0`` added to the diagonal.
    """
    lap = np.asarray(laplacian, dtype=float)
    if not np.allclose(lap, lap.T, atol=SYMMETRY_ATOL, rtol=0.0):
        raise ValidationError("laplacian must be symmetric")
    if decay < 0 or offset < 0:
        raise ValidationError("diffusion parameters must be nonnegative")
    try:
        eigvals, eigvecs = scipy.linalg.eigh(lap)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition of laplacian failed: {exc}") from exc
    cov = (eigvecs * np.exp(-decay * eigvals)) @ eigvecs.T
    cov += offset * np.eye(lap.shape[0])
    cov = 0.5 * (cov + cov.T)
    return KernelMatrix(cov)


def identity_kernel(n):
    """Identity prior covariance ``I_n``."""
    if n < 1:
        raise ValidationError("identity kernel needs n >= 1")
    return KernelMatrix(np.eye(int(n)))


def factorize_basis(kernel, jitter=None):
    """Factor a kernel into ``G`` with ``G @ G.T`` reconstructing it.

    Tries a Cholesky factorization of ``C + jitter*I`` first (jitter
    defaults to ``1e-8 * max(diag(C))``).  Diffusion kernels can be
    numerically semidefinite, so on failure we fall back to a symmetric
    eigendecomposition, clip negative eigenvalues to zero and drop the
    zero modes; the returned factor may then have fewer columns than rows.
    """
    if not isinstance(kernel, KernelMatrix):
        kernel = KernelMatrix(np.asarray(kernel, dtype=float))
    c = kernel.values
    if jitter is None:
        jitter = 1e-8 * max(float(np.max(np.diag(c))), 0.0)
    try:
        g = np.linalg.cholesky(c + jitter * np.eye(c.shape[0]))
        return BasisFactor(g)
    except np.linalg.LinAlgError:
        pass
    try:
        eigvals, eigvecs = scipy.linalg.eigh(c)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition of kernel failed: {exc}") from exc
    eigvals = np.clip(eigvals, 0.0, None)
    scale = max(float(eigvals[-1]), 1.0)
    keep = eigvals > scale * np.finfo(float).eps * c.shape[0]
    if not np.any(keep):
        return BasisFactor(np.zeros((c.shape[0], 0)))
    g = eigvecs[:, keep] * np.sqrt(eigvals[keep])
    return BasisFactor(g[:, ::-1])  # largest modes first


def load_edge_list(path, node_count=None):
    """Read a whitespace-separated edge list file into a GraphSpec.

    One edge per line as ``i j [weight]`` with 0-based indices; lines
    starting with ``#`` are ignored.  When ``node_count`` is omitted it is
    inferred as ``max index + 1``.
    """
    edges = []
    max_index = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValidationError(
                    f"{path}:{lineno}: expected 'i j [weight]', got {line!r}"
                )
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            max_index = max(max_index, i, j)
            edges.append((i, j, w))
    if node_count is None:
        if max_index < 0:
            raise ValidationError(f"{path}: no edges and no node count given")
        node_count = max_index + 1
    return GraphSpec(node_count=node_count, edges=tuple(edges))
