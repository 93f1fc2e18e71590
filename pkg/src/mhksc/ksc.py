"""Kernel spectral clustering model on graphs.

The model is trained on the adjacency columns of a small set of training
nodes using the normalized linear (cosine) kernel, and extends to any other
node through its own adjacency column.

Training solves the weighted-centered dual problem

    D^-1 M_D Omega alpha = lambda alpha,
    M_D = I - 1 1^T D^-1 / (1^T D^-1 1),

where ``D`` is the diagonal of kernel degrees. Since ``D^-1 M_D`` equals
``D^-1/2 P D^-1/2`` with ``P`` the orthogonal projector removing
``v = D^-1/2 1 / ||D^-1/2 1||``, the non-zero spectrum is that of the symmetric
matrix ``P D^-1/2 Omega D^-1/2 P``; with ``beta`` one of its eigenvectors,
``alpha = D^-1/2 beta`` solves the dual problem.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapacityError, ConfigError, InputError, NumericalError
from .graph import Graph

log = logging.getLogger(__name__)

DEFAULT_CAP = 10_000
# Above this many training nodes the top eigenpairs come from Lanczos iterations.
DENSE_SOLVER_LIMIT = 2_000
RESIDUAL_GUARD = 1e-6


def cosine_similarity(x, z) -> float:
    """Cosine similarity of two binary vectors given as sorted index lists."""
    x = np.asarray(x)
    z = np.asarray(z)
    if len(x) == 0 or len(z) == 0:
        return 0.0
    common = len(np.intersect1d(x, z, assume_unique=True))
    return common / np.sqrt(float(len(x)) * float(len(z)))


@dataclass
class KernelMatrix:
    """Dense training kernel with its degree vector ``d_i = sum_j Omega_ij``."""

    values: np.ndarray
    degree: np.ndarray
    nodes: np.ndarray

    @property
    def size(self) -> int:
        return len(self.degree)


def _train_columns(g: Graph, nodes: np.ndarray) -> sp.csr_matrix:
    """``N x N_tr`` binary matrix whose columns are the training adjacency columns."""
    return g.to_csr()[:, nodes].tocsr()


def build_kernel_matrix(g: Graph, train, cap: int = DEFAULT_CAP) -> KernelMatrix:
    """Pairwise cosine similarities between training adjacency columns.

    Nodes without neighbors get an all-zero row and column, including the
    diagonal.
    """
    nodes = np.asarray(train, dtype=np.int64)
    if len(nodes) < 2:
        raise ConfigError("kernel matrix needs at least 2 training nodes")
    if len(nodes) > cap:
        raise CapacityError(f"training set of {len(nodes)} nodes exceeds cap {cap}")
    x = _train_columns(g, nodes)
    counts = (x.T @ x).toarray()
    deg = g.degrees()[nodes].astype(np.float64)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    # one product per entry keeps the matrix exactly symmetric
    counts *= np.outer(inv, inv)
    return KernelMatrix(values=counts, degree=counts.sum(axis=1), nodes=nodes)


@dataclass
class KscModel:
    """Trained dual model.

    ``alphas`` holds one unit-norm dual vector per column, ordered by
    decreasing eigenvalue. ``train_columns`` is the ``N x N_tr`` binary matrix
    of training adjacency columns, ``n_nodes`` the ambient dimension ``N``.
    """

    maxk: int
    train_nodes: np.ndarray
    train_columns: sp.csr_matrix | None
    alphas: np.ndarray
    biases: np.ndarray
    eigenvalues: np.ndarray
    train_scores: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_train(self) -> int:
        return len(self.train_nodes)

    @property
    def n_nodes(self) -> int:
        return self.train_columns.shape[0]

    @cached_property
    def column_norms(self) -> np.ndarray:
        return np.sqrt(np.diff(self.train_columns.tocsc().indptr).astype(np.float64))


@dataclass
class LatentMatrix:
    """Eigenspace projections, one row per node in ``node_ids``."""

    rows: np.ndarray
    node_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.node_ids)


def centering_matrix(degree: np.ndarray) -> np.ndarray:
    """``M_D = I - 1 1^T D^-1 / (1^T D^-1 1)``."""
    dinv = 1.0 / degree
    n = len(degree)
    return np.eye(n) - np.outer(np.ones(n), dinv) / dinv.sum()


def dual_operator(kernel: KernelMatrix) -> np.ndarray:
    """Explicit ``D^-1 M_D Omega``; small kernels only (tests and diagnostics)."""
    dinv = 1.0 / kernel.degree
    return dinv[:, None] * (centering_matrix(kernel.degree) @ kernel.values)


def _apply_dual(kernel: KernelMatrix, a: np.ndarray) -> np.ndarray:
    # D^-1 M_D Omega a without forming M_D
    y = kernel.values @ a
    dinv = 1.0 / kernel.degree
    wy = dinv[:, None] * y
    return wy - np.outer(dinv, wy.sum(axis=0)) / dinv.sum()


def dual_residuals(kernel: KernelMatrix, model: KscModel) -> np.ndarray:
    """Relative residuals ``||D^-1 M_D Omega a - lambda a|| / ||a||`` per kept pair."""
    a = model.alphas
    r = _apply_dual(kernel, a) - a * model.eigenvalues[None, :]
    return np.linalg.norm(r, axis=0) / np.linalg.norm(a, axis=0)


def _top_eigenpairs(kernel: KernelMatrix, q: int, solver: str):
    d = kernel.degree
    s = 1.0 / np.sqrt(d)
    v = s / np.linalg.norm(s)
    n = kernel.size
    if solver == "auto":
        solver = "dense" if n <= DENSE_SOLVER_LIMIT else "lanczos"

    if solver == "dense":
        om = kernel.values * np.outer(s, s)
        w = om @ v
        m = om - np.outer(v, w) - np.outer(w, v) + float(v @ w) * np.outer(v, v)
        m = 0.5 * (m + m.T)
        vals, vecs = sla.eigh(m, subset_by_index=[n - q, n - 1])
    elif solver == "lanczos":
        omega = kernel.values

        def matvec(b):
            b = np.asarray(b).reshape(-1)
            b = b - v * (v @ b)
            y = s * (omega @ (s * b))
            return y - v * (v @ y)

        op = spla.LinearOperator((n, n), matvec=matvec, dtype=np.float64)
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            vals, vecs = spla.eigsh(op, k=q, which="LA", v0=v0, tol=0.0)
        except spla.ArpackError as exc:
            raise NumericalError(f"eigensolver failed: {exc}") from exc
    else:
        raise ConfigError(f"unknown eigensolver {solver!r}")

    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = vecs - np.outer(v, v @ vecs)
    return vals, s[:, None] * vecs


def train(kernel: KernelMatrix, maxk: int, train_columns: sp.csr_matrix | None = None,
          solver: str = "auto") -> KscModel:
    """Solve the dual problem and keep the ``maxk - 1`` leading eigenvectors.

    Each dual vector is scaled to unit norm and its sign fixed so that its
    largest-magnitude entry is positive. Biases make the training scores
    ``Omega alpha + b`` centered in the ``D^-1``-weighted sense.
    """
    if maxk < 2:
        raise ConfigError(f"maxk must be >= 2, got {maxk}")
    q = maxk - 1
    n = kernel.size
    if q > n - 1:
        raise ConfigError(f"maxk={maxk} needs more than {n} training nodes")
    if np.any(kernel.degree <= 0):
        bad = kernel.nodes[kernel.degree <= 0]
        raise NumericalError(f"zero kernel degree for training nodes {bad[:10].tolist()}")

    vals, alphas = _top_eigenpairs(kernel, q, solver)
    if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(alphas)):
        raise NumericalError("eigensolver returned non-finite values")
    alphas /= np.linalg.norm(alphas, axis=0)[None, :]
    lead = np.argmax(np.abs(alphas), axis=0)
    signs = np.sign(alphas[lead, np.arange(q)])
    signs[signs == 0] = 1.0
    alphas *= signs[None, :]

    dinv = 1.0 / kernel.degree
    raw = kernel.values @ alphas
    biases = -(dinv @ raw) / dinv.sum()
    scores = raw + biases[None, :]

    model = KscModel(
        maxk=maxk,
        train_nodes=np.asarray(kernel.nodes, dtype=np.int64),
        train_columns=train_columns,
        alphas=alphas,
        biases=biases,
        eigenvalues=vals,
        train_scores=scores,
    )
    res = dual_residuals(kernel, model)
    if np.max(res) > RESIDUAL_GUARD:
        raise NumericalError(f"dual eigen residual {np.max(res):.3e} exceeds {RESIDUAL_GUARD}")
    log.debug("trained KSC model: N_tr=%d eigenvalues=%s", n, np.round(vals, 6))
    return model


def fit(g: Graph, train_nodes, maxk: int, cap: int = DEFAULT_CAP, solver: str = "auto"):
    """Build the kernel on ``train_nodes`` and train; returns ``(model, kernel)``."""
    nodes = np.asarray(train_nodes, dtype=np.int64)
    kernel = build_kernel_matrix(g, nodes, cap=cap)
    model = train(kernel, maxk, train_columns=_train_columns(g, nodes), solver=solver)
    return model, kernel


def _scores_from_rows(model: KscModel, rows: sp.csr_matrix) -> np.ndarray:
    """Out-of-sample scores for adjacency rows given as a binary CSR block."""
    counts = (rows @ model.train_columns).tocsr()
    deg = np.diff(rows.indptr).astype(np.float64)
    rinv = np.zeros_like(deg)
    rinv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    norms = model.column_norms
    cinv = np.zeros_like(norms)
    cinv[norms > 0] = 1.0 / norms[norms > 0]
    kern = sp.diags(rinv) @ counts @ sp.diags(cinv)
    return np.asarray(kern @ model.alphas) + model.biases[None, :]


def project(model: KscModel, x) -> np.ndarray:
    """Scores ``sum_i alpha_i K(x, x_i) + b`` for one adjacency column ``x``."""
    x = np.asarray(x, dtype=np.int64)
    row = sp.csr_matrix(
        (np.ones(len(x)), x, np.array([0, len(x)])), shape=(1, model.n_nodes)
    )
    return _scores_from_rows(model, row)[0]


def project_batch(model: KscModel, g: Graph, nodes=None, chunk: int = 1000,
                  threads: int = 1) -> LatentMatrix:
    """Project graph nodes (default: all) into the eigenspace.

    Chunks are independent and results come back in input order, so output
    does not depend on ``chunk`` or ``threads``.
    """
    if chunk < 1:
        raise ConfigError(f"chunk must be >= 1, got {chunk}")
    if g.n_nodes != model.n_nodes:
        raise ConfigError(
            f"graph has {g.n_nodes} nodes but the model was trained on {model.n_nodes}"
        )
    nodes = np.arange(g.n_nodes) if nodes is None else np.asarray(nodes, dtype=np.int64)
    adj = g.to_csr()
    blocks = [nodes[i : i + chunk] for i in range(0, len(nodes), chunk)]

    def work(block):
        return _scores_from_rows(model, adj[block])

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    q = model.maxk - 1
    rows = np.vstack(parts) if parts else np.empty((0, q))
    return LatentMatrix(rows=rows, node_ids=nodes)


def save_model(model: KscModel, path) -> None:
    """Persist a model as a single ``.npz`` archive."""
    cols = model.train_columns.tocsr()
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=np.array("mhksc-ksc-model"),
            version=np.array(1),
            maxk=np.array(model.maxk),
            n_nodes=np.array(model.n_nodes),
            train_nodes=model.train_nodes,
            columns_indptr=cols.indptr,
            columns_indices=cols.indices,
            alphas=model.alphas,
            biases=model.biases,
            eigenvalues=model.eigenvalues,
            train_scores=model.train_scores if model.train_scores is not None else np.empty(0),
        )


def load_model(path) -> KscModel:
    path = Path(path)
    try:
        z = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    with z:
        if str(z["format"]) != "mhksc-ksc-model":
            raise InputError(f"{path} is not a KSC model file")
        n = int(z["n_nodes"])
        train_nodes = z["train_nodes"]
        indptr = z["columns_indptr"]
        indices = z["columns_indices"]
        cols = sp.csr_matrix(
            (np.ones(len(indices)), indices, indptr), shape=(n, len(train_nodes))
        )
        scores = z["train_scores"]
        return KscModel(
            maxk=int(z["maxk"]),
            train_nodes=train_nodes,
            train_columns=cols,
            alphas=z["alphas"],
            biases=z["biases"],
            eigenvalues=z["eigenvalues"],
            train_scores=scores if scores.size else None,
        )
