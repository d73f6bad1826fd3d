"""Finite-dimensional real Hilbert spaces and skew-adjoint generators.

A generator L is skew-adjoint with respect to a diagonally weighted inner
product, so exp(tL) is orthogonal (norm preserving) in that product.  The
exponential is evaluated through the rotation-plane decomposition of L,
which keeps unitarity exact up to the orthonormality of the computed
planes; ``scipy.linalg.expm`` is the fallback for generic matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    SpectralDecompositionError,
    WorkbenchError,
)

SKEW_TOL = 1e-12


@dataclass(frozen=True)
class HilbertSpace:
    """R^dim with inner product (x, y) = sum_i w_i x_i y_i."""

    dim: int
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1 or int(self.dim) != self.dim:
            raise WorkbenchError(f"dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.dim,):
                raise DimensionMismatchError(
                    f"weights shape {w.shape} does not match dim {self.dim}"
                )
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise WorkbenchError("all weights must be strictly positive and finite")
            object.__setattr__(self, "weights", w)

    @property
    def weight_vector(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.dim)
        return self.weights

    def check_vector(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"vector shape {x.shape}, expected ({self.dim},)")
        return x


def inner(space: HilbertSpace, x: np.ndarray, y: np.ndarray) -> float:
    """Weighted inner product (x, y)."""
    x = space.check_vector(x)
    y = space.check_vector(y)
    if space.weights is None:
        return float(x @ y)
    return float(x @ (space.weights * y))


def norm(space: HilbertSpace, x: np.ndarray) -> float:
    return float(np.sqrt(max(inner(space, x, x), 0.0)))


@dataclass(frozen=True, eq=False)
class Generator:
    """Skew-adjoint matrix acting on a :class:`HilbertSpace`.

    Skew-adjointness in the weighted product, (Lx, y) = -(x, Ly), is
    validated once at construction.  ``seed`` and ``frequencies`` are
    optional provenance metadata kept for serialization.
    """

    matrix: np.ndarray = field(repr=False)
    space: HilbertSpace
    seed: int | None = None
    frequencies: tuple[float, ...] | None = None

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        n = self.space.dim
        if mat.shape != (n, n):
            raise DimensionMismatchError(f"matrix shape {mat.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(mat)):
            raise WorkbenchError("generator matrix contains non-finite entries")
        w = self.space.weight_vector
        wl = w[:, None] * mat
        scale = max(np.max(np.abs(wl)), 1.0)
        dev = np.max(np.abs(wl + wl.T)) / scale
        if dev > SKEW_TOL:
            raise WorkbenchError(
                f"matrix is not skew-adjoint in the weighted product (deviation {dev:.3e})"
            )
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.space.dim

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ self.space.check_vector(x)

    @property
    def spectral(self) -> "SpectralDecomposition":
        """Cached rotation-plane decomposition."""
        cached = self.__dict__.get("_spectral")
        if cached is None:
            cached = spectral_decompose(self)
            object.__setattr__(self, "_spectral", cached)
        return cached

    def operator_norm(self) -> float:
        """Largest singular value in the weighted norm (= max frequency)."""
        return float(self.spectral.frequencies[-1]) if len(self.spectral.frequencies) else 0.0


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Rotation planes and kernel block of a skew-adjoint generator.

    ``plane_basis[k]`` holds the two weighted-orthonormal vectors (u, v)
    spanning the k-th invariant plane, on which L acts as
    L u = f_k v, L v = -f_k u.  ``kernel_basis`` spans ker L.
    """

    frequencies: np.ndarray
    plane_basis: np.ndarray = field(repr=False)   # (n_planes, 2, dim)
    kernel_basis: np.ndarray = field(repr=False)  # (n_zero, dim)
    space: HilbertSpace = field(repr=False)

    @property
    def zero_multiplicity(self) -> int:
        return self.kernel_basis.shape[0]

    def basis_matrix(self) -> np.ndarray:
        """All basis vectors stacked as rows: planes (u, v pairs) then kernel."""
        parts = []
        if self.plane_basis.size:
            parts.append(self.plane_basis.reshape(-1, self.space.dim))
        if self.kernel_basis.size:
            parts.append(self.kernel_basis)
        if not parts:
            return np.zeros((0, self.space.dim))
        return np.vstack(parts)

    def reconstruct(self) -> np.ndarray:
        """Rebuild the generator matrix from planes and frequencies."""
        n = self.space.dim
        w = self.space.weight_vector
        mat = np.zeros((n, n))
        for f, (u, v) in zip(self.frequencies, self.plane_basis):
            mat += f * (np.outer(v, u * w) - np.outer(u, v * w))
        return mat

    def gram_deviation(self) -> float:
        basis = self.basis_matrix()
        w = self.space.weight_vector
        g = basis @ (basis * w).T
        return float(np.max(np.abs(g - np.eye(len(basis))))) if len(basis) else 0.0


def _flat(space: HilbertSpace, mat: np.ndarray) -> np.ndarray:
    """Conjugate to coordinates where the inner product is Euclidean."""
    if space.weights is None:
        return mat
    r = np.sqrt(space.weights)
    return (r[:, None] * mat) / r[None, :]


def spectral_decompose(generator: Generator) -> SpectralDecomposition:
    """Split a skew generator into 2-D rotation planes plus a kernel block.

    Frequencies come back sorted ascending.  Planes are extracted from the
    eigenspaces of the symmetric matrix -S^2 (S being the generator in
    flat coordinates) and are weighted-orthonormal.
    """
    space = generator.space
    n = space.dim
    s = _flat(space, generator.matrix)
    s = (s - s.T) / 2.0  # kill symmetric round-off
    m = -(s @ s)
    m = (m + m.T) / 2.0
    try:
        eigvals, eigvecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh is robust
        raise SpectralDecompositionError(f"eigen-solver failed: {exc}") from exc

    scale = max(eigvals[-1], 0.0)
    zero_tol = 64.0 * n * np.finfo(float).eps * max(scale, 1e-300)
    kernel = eigvecs[:, eigvals <= zero_tol]

    pos_idx = np.flatnonzero(eigvals > zero_tol)
    planes = []
    freqs = []
    # group numerically equal eigenvalues so degenerate planes stay orthonormal
    i = 0
    group_tol = 64.0 * n * np.finfo(float).eps * max(scale, 1e-300)
    while i < len(pos_idx):
        j = i + 1
        while j < len(pos_idx) and eigvals[pos_idx[j]] - eigvals[pos_idx[j - 1]] <= group_tol:
            j += 1
        block = eigvecs[:, pos_idx[i:j]]
        if block.shape[1] % 2 != 0:
            raise SpectralDecompositionError(
                "odd-dimensional eigenspace for a positive frequency",
                residual=float(np.sqrt(eigvals[pos_idx[i]])),
            )
        while block.shape[1] > 0:
            u = block[:, 0]
            u = u / np.linalg.norm(u)
            su = s @ u
            lam = np.linalg.norm(su)
            if lam <= zero_tol:
                raise SpectralDecompositionError(
                    "plane extraction collapsed to the kernel", residual=lam
                )
            v = su / lam
            resid = np.linalg.norm(s @ v + lam * u)
            if resid > 1e-8 * max(lam, 1.0):
                raise SpectralDecompositionError(
                    "plane is not invariant under the generator", residual=float(resid)
                )
            planes.append((u, v))
            freqs.append(lam)
            # deflate the pair out of the remaining group vectors
            rest = block[:, 1:]
            rest = rest - np.outer(u, u @ rest) - np.outer(v, v @ rest)
            if rest.shape[1] > 0:
                q, r = np.linalg.qr(rest)
                keep = np.abs(np.diag(r)) > 1e-10
                block = q[:, keep]
            else:
                block = rest
        i = j

    order = np.argsort(freqs) if freqs else []
    freqs_sorted = np.asarray([freqs[k] for k in order])
    plane_arr = (
        np.asarray([[planes[k][0], planes[k][1]] for k in order])
        if freqs
        else np.zeros((0, 2, n))
    )
    kernel_arr = kernel.T.copy() if kernel.size else np.zeros((0, n))

    # map back to weighted coordinates: basis b = D^{-1/2} u
    if space.weights is not None:
        r = np.sqrt(space.weights)
        if plane_arr.size:
            plane_arr = plane_arr / r[None, None, :]
        if kernel_arr.size:
            kernel_arr = kernel_arr / r[None, :]

    return SpectralDecomposition(
        frequencies=freqs_sorted,
        plane_basis=plane_arr,
        kernel_basis=kernel_arr,
        space=space,
    )


def make_skew_generator(
    frequencies=None,
    dim: int | None = None,
    seed: int = 0,
    weights=None,
) -> Generator:
    """Build a seeded random skew-adjoint generator.

    Either pass ``frequencies`` (one rotation plane per entry; ``dim`` may
    pad with extra kernel directions and defaults to ``2 * len(frequencies)``)
    or pass ``dim`` alone for a dense random skew matrix with spectral
    radius of order one.  The random orthogonal change of basis is drawn
    from ``seed``, so equal arguments give bitwise-equal matrices.
    """
    rng = np.random.default_rng(seed)
    if frequencies is not None:
        frequencies = [float(f) for f in frequencies]
        if not all(np.isfinite(f) for f in frequencies):
            raise WorkbenchError("frequencies must be finite")
        if any(f < 0 for f in frequencies):
            raise WorkbenchError("frequencies must be nonnegative")
        min_dim = 2 * len(frequencies)
        if dim is None:
            dim = max(min_dim, 1)
        if dim < max(min_dim, 1):
            raise WorkbenchError(f"dim {dim} too small for {len(frequencies)} planes")
        block = np.zeros((dim, dim))
        for k, f in enumerate(frequencies):
            i = 2 * k
            block[i, i + 1] = -f
            block[i + 1, i] = f
        q = _random_orthogonal(rng, dim)
        mat = q @ block @ q.T
        meta_freqs = tuple(frequencies)
    else:
        if dim is None:
            raise WorkbenchError("either frequencies or dim must be given")
        if dim < 1:
            raise WorkbenchError(f"dimension must be positive, got {dim}")
        a = rng.standard_normal((dim, dim))
        mat = (a - a.T) / (2.0 * np.sqrt(dim))
        meta_freqs = None

    space = HilbertSpace(dim, weights=weights)
    if weights is not None:
        # conjugate so the matrix is skew-adjoint in the weighted product
        r = np.sqrt(space.weight_vector)
        mat = mat / r[:, None] * r[None, :]
    mat = _symmetrize_skew(mat, space)
    return Generator(matrix=mat, space=space, seed=seed, frequencies=meta_freqs)


def _symmetrize_skew(mat: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """Project onto exact weighted skew-symmetry to absorb round-off."""
    w = space.weight_vector
    wl = w[:, None] * mat
    wl = (wl - wl.T) / 2.0
    return wl / w[:, None]


def _random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))[None, :]


def propagate(generator: Generator, t: float, x: np.ndarray) -> np.ndarray:
    """Evolve x to exp(tL) x.

    Uses the rotation-plane decomposition, which preserves the weighted
    norm exactly on each invariant plane.
    """
    if not np.isfinite(t):
        raise WorkbenchError(f"time must be finite, got {t}")
    return propagate_series(generator, x, np.asarray([float(t)]))[0]


def propagate_series(generator: Generator, x: np.ndarray, times: np.ndarray) -> np.ndarray:
    """exp(t L) x for every t in ``times``; returns shape (len(times), dim).

    Each node is computed from closed-form plane rotations, so there is no
    step-to-step error accumulation.
    """
    space = generator.space
    x = space.check_vector(x)
    times = np.asarray(times, dtype=float)
    try:
        dec = generator.spectral
    except SpectralDecompositionError:
        return np.stack([scipy.linalg.expm(t * generator.matrix) @ x for t in times])

    w = space.weight_vector
    out = np.zeros((len(times), space.dim))
    if dec.kernel_basis.size:
        coords = dec.kernel_basis @ (w * x)
        out += coords @ dec.kernel_basis
    if dec.plane_basis.size:
        u = dec.plane_basis[:, 0, :]  # (P, dim)
        v = dec.plane_basis[:, 1, :]
        a = u @ (w * x)  # (P,)
        b = v @ (w * x)
        theta = np.outer(times, dec.frequencies)  # (T, P)
        c, s = np.cos(theta), np.sin(theta)
        # on each plane L u = f v, L v = -f u, so exp rotates (a, b)
        a_t = a[None, :] * c - b[None, :] * s
        b_t = a[None, :] * s + b[None, :] * c
        out += a_t @ u + b_t @ v
    return out


def evolution_on_grid(generator: Generator, x: np.ndarray, grid) -> np.ndarray:
    """exp(t_k L) x on every node of a TimeGrid."""
    return propagate_series(generator, x, grid.times)
