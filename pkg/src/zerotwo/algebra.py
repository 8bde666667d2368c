"""Finite-dimensional non-commutative L1 spaces.

A finite-dimensional von Neumann algebra is a direct sum of full matrix
blocks ``M_{n_1} + ... + M_{n_r}``.  A faithful trace on it is
``tau(x) = sum_k w_k tr(x_k)`` with strictly positive weights ``w_k``, and the
L1 norm is ``||x||_1 = tau(|x|)``.  Only the self-adjoint part is modelled;
every element here is Hermitian blockwise.

Elements are also identified with real coordinate vectors in a fixed
tau-orthonormal Hermitian basis (see :func:`hermitian_basis`).  Superoperators
are real matrices acting on those coordinates.
"""

from __future__ import annotations

import builtins
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InvalidInput, NumericalFailure

RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class AlgebraShape:
    """Block dimensions and trace weights of ``M_{n_1} + ... + M_{n_r}``."""

    dims: tuple[int, ...]
    weights: tuple[float, ...]

    def __init__(self, dims: Sequence[int], weights: Sequence[float] | None = None):
        dims = tuple(int(n) for n in dims)
        if weights is None:
            weights = (1.0,) * len(dims)
        weights = tuple(float(w) for w in weights)
        if not dims:
            raise InvalidInput("an algebra needs at least one block")
        if len(weights) != len(dims):
            raise InvalidInput(f"{len(dims)} blocks but {len(weights)} weights")
        if any(n < 1 for n in dims):
            raise InvalidInput(f"block dimensions must be >= 1, got {dims}")
        if not all(np.isfinite(w) and w > 0 for w in weights):
            raise InvalidInput(f"trace weights must be finite and > 0, got {weights}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def diagonal(cls, n: int, weights: Sequence[float] | None = None) -> "AlgebraShape":
        """The commutative algebra ``C^n`` (n one-dimensional blocks)."""
        return cls((1,) * n, weights)

    @property
    def nblocks(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        """Real dimension of the Hermitian part, ``sum n_k^2``."""
        return sum(n * n for n in self.dims)

    @property
    def unit_mass(self) -> float:
        """``tau(1) = sum w_k n_k``."""
        return float(sum(w * n for w, n in zip(self.weights, self.dims)))

    @property
    def is_diagonal(self) -> bool:
        return all(n == 1 for n in self.dims)

    def offsets(self) -> list[int]:
        """Start index of each block in the coordinate vector."""
        out, pos = [], 0
        for n in self.dims:
            out.append(pos)
            pos += n * n
        return out

    def require_same(self, other: "AlgebraShape") -> None:
        if self != other:
            raise InvalidInput(f"shape mismatch: {self} vs {other}")


@lru_cache(maxsize=64)
def _block_basis(n: int) -> np.ndarray:
    """Trace-orthonormal Hermitian basis of ``M_n``, shape ``(n*n, n, n)``.

    Order: the diagonal units ``E_ii``; then for each ``i < j`` (row-major)
    the symmetric ``(E_ij + E_ji)/sqrt 2`` followed by the antisymmetric
    ``i(E_ij - E_ji)/sqrt 2``.
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    idx = 0
    for i in range(n):
        basis[idx, i, i] = 1.0
        idx += 1
    r = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            basis[idx, i, j] = r
            basis[idx, j, i] = r
            basis[idx + 1, i, j] = 1j * r
            basis[idx + 1, j, i] = -1j * r
            idx += 2
    basis.setflags(write=False)
    return basis


def hermitian_basis(shape: AlgebraShape) -> list[tuple[int, np.ndarray]]:
    """The tau-orthonormal basis used for coordinates, as ``(block, matrix)``.

    Each block's trace-orthonormal basis is divided by ``sqrt(w_k)`` so that
    ``tau(b_i b_j) = delta_ij``.
    """
    out = []
    for k, (n, w) in enumerate(zip(shape.dims, shape.weights)):
        for b in _block_basis(n):
            out.append((k, b / np.sqrt(w)))
    return out


def coords_to_blocks(shape: AlgebraShape, coords: np.ndarray) -> list[np.ndarray]:
    """Map coordinate arrays ``(..., D)`` to block arrays ``(..., n_k, n_k)``."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape[-1] != shape.dim:
        raise InvalidInput(f"expected {shape.dim} coordinates, got {coords.shape[-1]}")
    blocks = []
    for off, n, w in zip(shape.offsets(), shape.dims, shape.weights):
        c = coords[..., off:off + n * n]
        blocks.append(np.tensordot(c, _block_basis(n), axes=([-1], [0])) / np.sqrt(w))
    return blocks


def blocks_to_coords(shape: AlgebraShape, blocks: Sequence[np.ndarray]) -> np.ndarray:
    parts = []
    for blk, n, w in zip(blocks, shape.dims, shape.weights):
        # tau(x b) = w tr(x b) with b scaled by 1/sqrt(w)
        c = np.einsum("...ab,jba->...j", blk, _block_basis(n)).real
        parts.append(c * np.sqrt(w))
    return np.concatenate(parts, axis=-1)


class HermitianElement:
    """An element of the self-adjoint part of a block algebra.

    Blocks are symmetrized as ``(x + x*)/2`` on construction and frozen.
    """

    __slots__ = ("shape", "blocks")

    def __init__(self, shape: AlgebraShape, blocks: Sequence[np.ndarray]):
        if len(blocks) != shape.nblocks:
            raise InvalidInput(f"expected {shape.nblocks} blocks, got {len(blocks)}")
        frozen = []
        for blk, n in zip(blocks, shape.dims):
            if np.size(blk) != n * n:
                raise InvalidInput(f"block of size {np.shape(blk)} does not fit M_{n}")
            a = np.array(blk, dtype=complex).reshape(n, n)
            a = (a + a.conj().T) / 2
            a.setflags(write=False)
            frozen.append(a)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "blocks", tuple(frozen))

    def __setattr__(self, name, value):
        raise AttributeError("HermitianElement is immutable")

    @classmethod
    def zero(cls, shape: AlgebraShape) -> "HermitianElement":
        return cls(shape, [np.zeros((n, n)) for n in shape.dims])

    @classmethod
    def unit(cls, shape: AlgebraShape) -> "HermitianElement":
        return cls(shape, [np.eye(n) for n in shape.dims])

    @classmethod
    def from_coords(cls, shape: AlgebraShape, coords: np.ndarray) -> "HermitianElement":
        return cls(shape, coords_to_blocks(shape, coords))

    @classmethod
    def random(cls, shape: AlgebraShape, rng: np.random.Generator) -> "HermitianElement":
        blocks = []
        for n in shape.dims:
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            blocks.append(a + a.conj().T)
        return cls(shape, blocks)

    @classmethod
    def random_positive(cls, shape: AlgebraShape, rng: np.random.Generator) -> "HermitianElement":
        blocks = []
        for n in shape.dims:
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            blocks.append(a @ a.conj().T)
        return cls(shape, blocks)

    def coords(self) -> np.ndarray:
        return blocks_to_coords(self.shape, self.blocks)

    def _combine(self, other, op):
        if not isinstance(other, HermitianElement):
            return NotImplemented
        self.shape.require_same(other.shape)
        return HermitianElement(self.shape, [op(a, b) for a, b in zip(self.blocks, other.blocks)])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        return HermitianElement(self.shape, [-a for a in self.blocks])

    def __mul__(self, alpha):
        if isinstance(alpha, HermitianElement) or np.iscomplexobj(alpha):
            return NotImplemented
        return HermitianElement(self.shape, [float(alpha) * a for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return self * (1.0 / float(alpha))

    def max_abs_diff(self, other: "HermitianElement") -> float:
        self.shape.require_same(other.shape)
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.blocks, other.blocks))

    def allclose(self, other: "HermitianElement", atol: float = 1e-10) -> bool:
        return self.max_abs_diff(other) <= atol

    def eigenvalues(self) -> list[np.ndarray]:
        try:
            return [a.real.diagonal().copy() if len(a) == 1 else np.linalg.eigvalsh(a) for a in self.blocks]
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(str(exc)) from exc

    def is_positive(self, tol: float = 1e-9) -> bool:
        return all(ev[0] >= -tol for ev in self.eigenvalues())

    def __repr__(self) -> str:
        return f"HermitianElement(dims={self.shape.dims}, blocks={[b.round(6).tolist() for b in self.blocks]})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Per-block eigenvalues and orthonormal eigenvectors (columns)."""

    shape: AlgebraShape
    eigenvalues: tuple[np.ndarray, ...]
    vectors: tuple[np.ndarray, ...]

    def projections(self, block: int) -> list[np.ndarray]:
        """Rank-one spectral projections ``e_i = v_i v_i*`` of one block."""
        v = self.vectors[block]
        return [np.outer(v[:, i], v[:, i].conj()) for i in range(v.shape[1])]

    def apply(self, f) -> HermitianElement:
        """Functional calculus ``f(x) = sum_i f(lambda_i) e_i``."""
        blocks = [(v * f(lam)) @ v.conj().T for lam, v in zip(self.eigenvalues, self.vectors)]
        return HermitianElement(self.shape, blocks)

    def reconstruct(self) -> HermitianElement:
        return self.apply(lambda lam: lam)


def spectral(x: HermitianElement) -> SpectralDecomposition:
    try:
        pairs = [np.linalg.eigh(a) for a in x.blocks]
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    dec = SpectralDecomposition(
        x.shape, tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)
    )
    scale = max(1.0, max(float(np.max(np.abs(a))) for a in x.blocks))
    residual = dec.reconstruct().max_abs_diff(x)
    if not residual <= RECONSTRUCTION_TOL * scale:
        raise NumericalFailure(f"spectral reconstruction residual {residual:.3e}")
    return dec


def trace(x: HermitianElement) -> float:
    return float(sum(w * np.trace(a).real for w, a in zip(x.shape.weights, x.blocks)))


def pairing(x: HermitianElement, a: HermitianElement) -> float:
    """The trace pairing ``<x, a> = tau(x a)``."""
    x.shape.require_same(a.shape)
    return float(sum(w * np.sum(p * q.T).real for w, p, q in zip(x.shape.weights, x.blocks, a.blocks)))


def abs(x: HermitianElement) -> HermitianElement:  # noqa: A001 - mirrors |x|
    return spectral(x).apply(np.abs)


def trace_norm(x: HermitianElement) -> float:
    return float(sum(w * np.sum(np.abs(ev)) for w, ev in zip(x.shape.weights, x.eigenvalues())))


def sup_norm(x: HermitianElement) -> float:
    return float(max(np.max(np.abs(ev)) for ev in x.eigenvalues()))


def batch_trace_norm(shape: AlgebraShape, coords: np.ndarray) -> np.ndarray:
    """Trace norms of many elements given as coordinate rows ``(m, D)``."""
    total = np.zeros(coords.shape[:-1])
    for blk, w in zip(coords_to_blocks(shape, coords), shape.weights):
        try:
            ev = np.linalg.eigvalsh(blk)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(str(exc)) from exc
        total += w * np.sum(np.abs(ev), axis=-1)
    return total


def extreme_point(shape: AlgebraShape, block: int, psi) -> HermitianElement:
    """``(1/w_k) psi psi*`` placed in block ``k``; a unit-norm positive extreme point."""
    if not 0 <= block < shape.nblocks:
        raise InvalidInput(f"block index {block} out of range")
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != shape.dims[block]:
        raise InvalidInput(f"vector of length {psi.size} for block of size {shape.dims[block]}")
    if builtins.abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise InvalidInput(f"psi must be a unit vector (norm {np.linalg.norm(psi)!r})")
    blocks = [np.zeros((n, n), dtype=complex) for n in shape.dims]
    blocks[block] = np.outer(psi, psi.conj()) / shape.weights[block]
    return HermitianElement(shape, blocks)
