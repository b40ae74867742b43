"""Undirected weighted graphs, Laplacians and the spectral change of basis.

The orthonormal transform ``T = [1/sqrt(N) 1, R]`` diagonalises the Laplacian
(``T.T @ L @ T = diag(0, lambda_2, ..., lambda_N)``); the columns of ``R`` span
the disagreement subspace, so ``||R.T q|| = ||(I - 11^T/N) q||``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "Spectrum",
    "GraphValidationError",
    "laplacian",
    "spectrum",
    "jacobi_eigh",
    "disagreement_norm",
    "load_edge_list",
    "example_graph",
    "complete_graph",
    "random_connected_graph",
]


class GraphValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected graph given by a symmetric, nonnegative, zero-diagonal adjacency."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphValidationError("adjacency must be a square matrix")
        if not np.all(np.isfinite(a)):
            raise GraphValidationError("adjacency weights must be finite")
        if np.any(a < 0):
            raise GraphValidationError("adjacency weights must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise GraphValidationError("adjacency must have a zero diagonal")
        if not np.array_equal(a, a.T):
            raise GraphValidationError("adjacency must be symmetric (undirected graph)")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build from ``(i, j, weight)`` or ``(i, j)`` tuples, 0-based."""
        a = np.zeros((n, n))
        for edge in edges:
            i, j = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else 1.0
            if i == j:
                raise GraphValidationError(f"self loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphValidationError(f"edge ({i}, {j}) out of range for n={n}")
            a[i, j] = a[j, i] = w
        return cls(a)

    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(self.adjacency[i]):
                if j not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        return len(seen) == self.n


@dataclass(frozen=True)
class Spectrum:
    """Ascending Laplacian eigenvalues with the matching orthonormal transform."""

    eigenvalues: np.ndarray
    transform: np.ndarray
    laplacian: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def R(self) -> np.ndarray:
        return self.transform[:, 1:]

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def nonzero(self) -> np.ndarray:
        """``lambda_2 .. lambda_N``."""
        return self.eigenvalues[1:]

    def distinct_nonzero(self, rtol: float = 1e-9) -> np.ndarray:
        """``lambda_2 .. lambda_N`` with repeated eigenvalues merged."""
        out = []
        for lam in self.nonzero:
            if not out or abs(lam - out[-1]) > rtol * max(1.0, abs(lam)):
                out.append(float(lam))
        return np.array(out)

    def is_connected(self, tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.abs(self.eigenvalues).max()))
        return self.n < 2 or self.eigenvalues[1] > tol * scale

    def to_modal(self, x) -> np.ndarray:
        return self.transform.T @ np.asarray(x, dtype=float)

    def from_modal(self, z) -> np.ndarray:
        return self.transform @ np.asarray(z, dtype=float)


def laplacian(g: Graph) -> np.ndarray:
    """``L = diag(A 1) - A``."""
    a = g.adjacency
    # row sums cancel by construction: diagonal is the off-diagonal mass
    return np.diag(a.sum(axis=1)) - a


def jacobi_eigh(m, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm drops below
    ``tol * ||m||_F``.  Returns ``(eigenvalues, eigenvectors)`` sorted ascending,
    each eigenvector oriented so its largest-magnitude component is positive.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise GraphValidationError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise GraphValidationError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v

    converged_sweeps = 0
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            # one polishing sweep past the threshold; convergence is quadratic
            converged_sweeps += 1
            if converged_sweeps > 1 or off == 0.0:
                break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("Jacobi sweeps did not converge")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(n)])
    signs[signs == 0] = 1.0
    return w, v * signs


def spectrum(lap, tol: float = 1e-12) -> Spectrum:
    """Spectral decomposition of a graph Laplacian.

    The first column of the transform is exactly ``1/sqrt(N)``; eigenvectors
    of any other zero eigenvalues (disconnected graphs) are re-orthogonalised
    against it.
    """
    lap = np.array(lap, dtype=float)
    w, v = jacobi_eigh(lap, tol=tol)
    n = len(w)
    scale = max(1.0, float(np.abs(w).max()))
    w[np.abs(w) <= 1e-12 * scale] = 0.0
    zero = np.flatnonzero(w == 0.0)
    ones = np.full(n, 1.0 / np.sqrt(n))
    if len(zero):
        basis = np.column_stack([ones, v[:, zero]])
        q, _ = np.linalg.qr(basis)
        q = q[:, : len(zero)]
        q[:, 0] = ones
        v[:, zero] = q
    lap.setflags(write=False)
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(eigenvalues=w, transform=v, laplacian=lap)


def disagreement_norm(q, spec: Spectrum) -> float:
    """``||R^T q||``, the size of ``q``'s component off the consensus line."""
    q = np.asarray(q, dtype=float)
    if q.shape != (spec.n,):
        raise ValueError(f"expected a length-{spec.n} vector, got shape {q.shape}")
    return float(np.linalg.norm(spec.R.T @ q))


def load_edge_list(path, n: int | None = None) -> Graph:
    """Read ``i j [weight]`` lines (0-based, ``#`` starts a comment)."""
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (2, 3):
            raise GraphValidationError(f"{path}:{lineno}: expected 'i j weight', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise GraphValidationError(f"{path}:{lineno}: {exc}") from None
        if i < 0 or j < 0:
            raise GraphValidationError(f"{path}:{lineno}: negative node index")
        edges.append((i, j, w))
    if not edges and n is None:
        raise GraphValidationError(f"{path}: no edges")
    size = n if n is not None else 1 + max(max(i, j) for i, j, _ in edges)
    return Graph.from_edges(size, edges)


def example_graph() -> Graph:
    """The 5-node benchmark graph (node 1 is the hub; 0-based here)."""
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 4), (2, 3), (3, 4)]
    return Graph.from_edges(5, edges)


def complete_graph(n: int) -> Graph:
    a = np.ones((n, n)) - np.eye(n)
    return Graph(a)


def random_connected_graph(n: int, p: float = 0.4, rng=None, weighted: bool = False) -> Graph:
    """Erdos-Renyi sample forced connected by a random spanning tree."""
    rng = np.random.default_rng(rng)
    a = np.zeros((n, n))
    order = rng.permutation(n)
    for idx in range(1, n):
        i, j = order[idx], order[rng.integers(idx)]
        a[i, j] = a[j, i] = 1.0
    extra = np.triu(rng.random((n, n)) < p, 1)
    a = np.maximum(a, (extra | extra.T).astype(float))
    if weighted:
        w = np.triu(rng.uniform(0.5, 2.0, (n, n)), 1)
        a = a * (w + w.T)
    return Graph(a)
