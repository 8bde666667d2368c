"""Independent reference computations for the test-suite.

Nothing here calls the package's norm or spectral routines: maps are
described by raw Kraus data and evaluated with plain numpy, so agreement
with the package is a genuine cross-check.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize


def random_unit_vectors(rng, m: int, n: int) -> np.ndarray:
    v = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_isometry_kraus(rng, n: int, r: int) -> list[np.ndarray]:
    """``r`` Kraus operators with ``sum K*K = 1`` (columns of a random isometry)."""
    a = rng.normal(size=(r * n, n)) + 1j * rng.normal(size=(r * n, n))
    q, _ = np.linalg.qr(a)
    return [q[i * n:(i + 1) * n] for i in range(r)]


class RawPositiveMap:
    """``x -> (sum_i K_i x_b K_i*)_b  +  sum_(s->t) tr(A x_s) rho in block t``.

    Block-diagonal Kraus parts plus rank-one transfers between blocks; both
    are positive, so the sum is.
    """

    def __init__(self, dims, weights, kraus, transfers=()):
        self.dims = list(dims)
        self.weights = list(weights)
        self.kraus = kraus  # kraus[b] = list of (n_b x n_b) operators
        self.transfers = list(transfers)  # (src, dst, A, rho)

    def blocks_out(self, blocks):
        out = [sum(k @ x @ k.conj().T for k in ks) for ks, x in zip(self.kraus, blocks)]
        for s, t, a, rho in self.transfers:
            out[t] = out[t] + np.trace(a @ blocks[s]) * rho
        return out

    def batch_pure_outputs(self, block: int, psi: np.ndarray):
        """Outputs of ``psi psi* / w_block`` for a batch ``psi`` of shape ``(m, n)``."""
        w = self.weights[block]
        m = len(psi)
        out = [None] * len(self.dims)  # None: block not reached from ``block``
        n = self.dims[block]
        out[block] = np.zeros((m, n, n), dtype=complex)
        for k in self.kraus[block]:
            kp = psi @ k.T  # rows K psi
            out[block] += np.einsum("ma,mb->mab", kp, kp.conj()) / w
        for s, t, a, rho in self.transfers:
            if s == block:
                c = np.einsum("ma,ab,mb->m", psi.conj(), a, psi) / w
                if out[t] is None:
                    out[t] = np.zeros((m,) + rho.shape, dtype=complex)
                out[t] += c[:, None, None] * rho[None]
        return out

    def dual_unit(self):
        """``Delta*(1)`` from the adjoint formulas, block by block."""
        dual = [sum(k.conj().T @ k for k in ks) for ks in self.kraus]
        for s, t, a, rho in self.transfers:
            # tau(1 . tr(a x_s) rho) = w_t tr(rho) tr(a x_s) = w_s tr(y x_s)
            dual[s] = dual[s] + (self.weights[t] / self.weights[s]) * np.trace(rho).real * a
        return dual

    def trace_batch(self, outs) -> np.ndarray:
        total = 0.0
        for w, y in zip(self.weights, outs):
            if y is not None:
                total = total + w * np.trace(y, axis1=-2, axis2=-1).real
        return total

    def trace_norm_batch(self, outs) -> np.ndarray:
        total = 0.0
        for w, y in zip(self.weights, outs):
            if y is None:
                continue
            total = total + w * np.sum(np.abs(np.linalg.eigvalsh(y)), axis=-1)
        return total


def random_positive_map(rng, dims, weights=None, max_rank: int = 3, cross: bool = True):
    weights = list(weights) if weights is not None else [1.0] * len(dims)
    kraus = []
    for n in dims:
        r = int(rng.integers(1, max_rank + 1))
        ks = [(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2 * n * r) for _ in range(r)]
        kraus.append(ks)
    transfers = []
    if cross and len(dims) > 1:
        s, t = 0, len(dims) - 1
        g = rng.normal(size=(dims[s], dims[s])) + 1j * rng.normal(size=(dims[s], dims[s]))
        h = rng.normal(size=(dims[t], dims[t])) + 1j * rng.normal(size=(dims[t], dims[t]))
        transfers.append((s, t, g @ g.conj().T / (4 * dims[s]), h @ h.conj().T / (4 * dims[t])))
    return RawPositiveMap(dims, weights, kraus, transfers)


def sphere_maximum(raw: RawPositiveMap, rng, samples: int = 100_000, polish: int = 3, leaders: int = 64) -> float:
    """``max ||Delta(psi psi*/w)||_1`` over pure states of every block.

    Uniform sampling of the sphere (``samples`` in total, shared between
    blocks in proportion to ``n^2``), then local maximization (BFGS on a
    real parametrization) from the best samples; sampling alone leaves a
    quadratic deficit far above 1e-6.  Outputs of a positive map are
    positive, so samples are ranked by trace and exact trace norms are
    taken for the ``leaders`` only.
    """
    best = 0.0
    total = sum(n * n for n in raw.dims)
    for b, n in enumerate(raw.dims):
        psi = random_unit_vectors(rng, max(1, samples * n * n // total), n)
        rank = raw.trace_batch(raw.batch_pure_outputs(b, psi))
        psi = psi[np.argsort(-rank)[:leaders]]
        vals = raw.trace_norm_batch(raw.batch_pure_outputs(b, psi))
        best = max(best, float(vals.max()))
        if n == 1:
            continue

        def neg(z, b=b, n=n):
            v = z[:n] + 1j * z[n:]
            v = v / np.linalg.norm(v)
            return -float(raw.trace_norm_batch(raw.batch_pure_outputs(b, v[None]))[0])

        for idx in np.argsort(-vals)[:polish]:
            z0 = np.concatenate([psi[idx].real, psi[idx].imag])
            res = minimize(neg, z0, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
            best = max(best, -float(res.fun))
    return best


def tv_gamma(ell: int) -> Fraction:
    """``sum_j |C(l,j) - C(l,j-1)| / 2^l`` by direct summation."""
    total = 0
    for j in range(ell + 2):
        a = math.comb(ell, j) if j <= ell else 0
        b = math.comb(ell, j - 1) if j >= 1 else 0
        total += abs(a - b)
    return Fraction(total, 2 ** ell)


def depolarizing_pair_dominated(q: float, q2: float, n: int) -> bool:
    """``T_q - T_q2/2 >= 0`` on ``M_n`` (weight 1) from its form ``a id + b Pi``.

    ``a id + b Pi`` sends ``psi psi*`` to ``a psi psi* + (b/n) 1``, whose
    eigenvalues are ``a + b/n`` and (for ``n > 1``) ``b/n``.
    """
    a = (1 - q) - 0.5 * (1 - q2)
    b = q - 0.5 * q2
    return a + b / n >= -1e-12 and (n == 1 or b >= -1e-12)


def tv_distance_columns(p: np.ndarray) -> float:
    """Maximum column l1 norm: the induced 1-norm of a real matrix on masses."""
    return float(np.max(np.sum(np.abs(p), axis=0)))
