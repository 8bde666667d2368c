"""Real-linear maps on the Hermitian part of a block algebra.

A :class:`SuperOperator` stores its action as a real matrix on the
tau-orthonormal coordinates of :mod:`zerotwo.algebra`.  Because the basis is
orthonormal for the trace pairing ``<x, a> = tau(x a)``, the pairing adjoint
is the matrix transpose.

Positivity cannot be decided efficiently for general maps, so it is tracked
as a certificate: maps built by positive constructions (Kraus, Schur,
stochastic, convex combinations, compositions) carry ``ByConstruction``;
maps that survived a falsification search carry ``Checked``.  Norm shortcuts
that are only valid for positive maps refuse to run without one.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .algebra import (
    AlgebraShape,
    HermitianElement,
    _block_basis,
    batch_trace_norm,
    coords_to_blocks,
    sup_norm,
    trace_norm,
)
from .errors import InvalidInput, NumericalFailure

DEFAULT_RESTARTS = 64
GRAD_TOL = 1e-8
MAX_ITER = 500
STALL_TOL = 1e-15
DOMINANCE_TOL = 1e-9
BLOCH_GRID = (200, 400)  # (polar, azimuthal)


@dataclass(frozen=True)
class ByConstruction:
    kind: str


@dataclass(frozen=True)
class Checked:
    budget: int


Certificate = Union[ByConstruction, Checked, None]


class SuperOperator:
    """A linear map ``L1(M_sa) -> L1(N_sa)`` in coordinates."""

    __slots__ = ("domain", "codomain", "matrix", "certificate")

    def __init__(
        self,
        domain: AlgebraShape,
        codomain: AlgebraShape,
        matrix,
        certificate: Certificate = None,
    ):
        m = np.array(matrix, dtype=float)
        if m.shape != (codomain.dim, domain.dim):
            raise InvalidInput(
                f"matrix shape {m.shape} does not match ({codomain.dim}, {domain.dim})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "codomain", codomain)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "certificate", certificate)

    def __setattr__(self, name, value):
        raise AttributeError("SuperOperator is immutable")

    @classmethod
    def identity(cls, shape: AlgebraShape) -> "SuperOperator":
        return cls(shape, shape, np.eye(shape.dim), ByConstruction("identity"))

    @classmethod
    def zero(cls, domain: AlgebraShape, codomain: AlgebraShape | None = None) -> "SuperOperator":
        codomain = domain if codomain is None else codomain
        return cls(domain, codomain, np.zeros((codomain.dim, domain.dim)), ByConstruction("zero"))

    @classmethod
    def from_blockmap(
        cls,
        domain: AlgebraShape,
        codomain: AlgebraShape,
        func: Callable[[list[np.ndarray]], Sequence[np.ndarray]],
        certificate: Certificate = None,
    ) -> "SuperOperator":
        """Tabulate ``func`` (blocks in, blocks out) on the coordinate basis."""
        cols = np.empty((codomain.dim, domain.dim))
        eye = np.eye(domain.dim)
        for j in range(domain.dim):
            x = HermitianElement.from_coords(domain, eye[j])
            out = HermitianElement(codomain, func([np.array(b) for b in x.blocks]))
            cols[:, j] = out.coords()
        return cls(domain, codomain, cols, certificate)

    @property
    def is_square(self) -> bool:
        return self.domain == self.codomain

    @property
    def is_certified_positive(self) -> bool:
        return self.certificate is not None

    def with_certificate(self, certificate: Certificate) -> "SuperOperator":
        return SuperOperator(self.domain, self.codomain, self.matrix, certificate)

    def __call__(self, x: HermitianElement) -> HermitianElement:
        return apply(self, x)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        return compose(self, other)

    def _linear(self, other, op, cert):
        if not isinstance(other, SuperOperator):
            return NotImplemented
        self.domain.require_same(other.domain)
        self.codomain.require_same(other.codomain)
        return SuperOperator(self.domain, self.codomain, op(self.matrix, other.matrix), cert)

    def __add__(self, other):
        both = self.is_certified_positive and getattr(other, "is_certified_positive", False)
        return self._linear(other, operator.add, ByConstruction("sum") if both else None)

    def __sub__(self, other):
        return self._linear(other, operator.sub, None)

    def __neg__(self):
        return SuperOperator(self.domain, self.codomain, -self.matrix)

    def __mul__(self, alpha):
        if isinstance(alpha, SuperOperator):
            return NotImplemented
        alpha = float(alpha)
        cert = ByConstruction("scaled") if self.is_certified_positive and alpha >= 0 else None
        return SuperOperator(self.domain, self.codomain, alpha * self.matrix, cert)

    __rmul__ = __mul__

    def max_abs_diff(self, other: "SuperOperator") -> float:
        return float(np.max(np.abs(self.matrix - other.matrix), initial=0.0))

    def __repr__(self) -> str:
        return (
            f"SuperOperator({self.domain.dims}->{self.codomain.dims}, "
            f"certificate={self.certificate})"
        )


def apply(T: SuperOperator, x: HermitianElement) -> HermitianElement:
    if x.shape != T.domain:
        raise InvalidInput(f"element of shape {x.shape} fed to map on {T.domain}")
    return HermitianElement.from_coords(T.codomain, T.matrix @ x.coords())


def compose(T: SuperOperator, S: SuperOperator) -> SuperOperator:
    """``T o S`` (apply ``S`` first)."""
    if S.codomain != T.domain:
        raise InvalidInput(f"cannot compose {T} after {S}")
    cert = ByConstruction("composition") if T.is_certified_positive and S.is_certified_positive else None
    return SuperOperator(S.domain, T.codomain, T.matrix @ S.matrix, cert)


def power(T: SuperOperator, n: int, preserve_trace: bool = False) -> SuperOperator:
    """``T^n`` by repeated squaring; ``n`` may be an arbitrarily large int.

    With ``preserve_trace=True`` (for a trace-preserving ``T``) every product
    is projected back onto ``{M : u^T M = u^T}``, ``u`` the unit's
    coordinates.  Without it, rounding on the eigenvalue-one direction
    compounds as ``(1 + 1e-16)^n`` and overflows for astronomically large ``n``.
    """
    n = int(n)
    if n < 0:
        raise InvalidInput("negative powers are not defined")
    if not T.is_square:
        raise InvalidInput("powers need a map from an algebra to itself")
    if preserve_trace:
        if not is_trace_preserving(T):
            raise InvalidInput("preserve_trace needs a trace-preserving map")
        u = unit_coords(T.domain)
        uu = float(u @ u)

        def mul(a, b):
            m = a @ b
            return m - np.outer(u, u @ m - u) / uu
    else:
        def mul(a, b):
            return a @ b

    result = np.eye(T.domain.dim)
    base = T.matrix
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    cert = ByConstruction("power") if T.is_certified_positive else None
    return SuperOperator(T.domain, T.domain, result, cert)


def adjoint(T: SuperOperator) -> SuperOperator:
    """Trace-pairing adjoint: ``tau(T(x) a) = tau(x T*(a))``."""
    return SuperOperator(T.codomain, T.domain, T.matrix.T, T.certificate)


def unit_coords(shape: AlgebraShape) -> np.ndarray:
    return HermitianElement.unit(shape).coords()


def is_trace_preserving(T: SuperOperator, tol: float = 1e-9) -> bool:
    """``tau(T b) = tau(b)`` on every basis element."""
    traced = unit_coords(T.codomain) @ T.matrix
    return bool(np.max(np.abs(traced - unit_coords(T.domain))) <= tol)


def is_unital_dual(T: SuperOperator, tol: float = 1e-9) -> bool:
    """``T*(1) = 1``, checked on the element level."""
    image = apply(adjoint(T), HermitianElement.unit(T.codomain))
    return image.max_abs_diff(HermitianElement.unit(T.domain)) <= tol


def commutator_defect(T: SuperOperator, S: SuperOperator) -> float:
    return float(np.max(np.abs(T.matrix @ S.matrix - S.matrix @ T.matrix), initial=0.0))


def _block_coords(shape: AlgebraShape, block: int, mats: np.ndarray) -> np.ndarray:
    """Coordinates of elements supported on one block; ``mats`` is ``(m, n, n)``."""
    n, w = shape.dims[block], shape.weights[block]
    off = shape.offsets()[block]
    out = np.zeros(mats.shape[:-2] + (shape.dim,))
    out[..., off:off + n * n] = np.einsum("...ab,jba->...j", mats, _block_basis(n)).real * np.sqrt(w)
    return out


def _batch_abs_eigsum(y: np.ndarray) -> np.ndarray:
    """``sum_i |lambda_i|`` for a batch of Hermitian matrices ``(m, d, d)``."""
    d = y.shape[-1]
    if d == 1:
        return np.abs(y[:, 0, 0].real)
    if d == 2:
        # eigenvalues are mean +- r, so |l1| + |l2| = 2 max(|mean|, r)
        a, c, b = y[:, 0, 0].real, y[:, 1, 1].real, y[:, 0, 1]
        mean = (a + c) / 2
        r = np.sqrt(((a - c) / 2) ** 2 + np.abs(b) ** 2)
        return 2 * np.maximum(np.abs(mean), r)
    try:
        return np.sum(np.abs(np.linalg.eigvalsh(y)), axis=-1)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc


class _BlockProblem:
    """``D`` restricted to inputs supported on block ``k``, in matrix form.

    ``F[j]`` maps ``vec(P)`` (row-major, ``P`` in block ``k``) to ``vec(D(P)_j)``.
    """

    def __init__(self, D: SuperOperator, k: int):
        dom, cod = D.domain, D.codomain
        n = dom.dims[k]
        off = dom.offsets()[k]
        # vec(P) -> input coordinates of block k
        b_in = _block_basis(n)
        to_coords = np.transpose(b_in, (0, 2, 1)).reshape(n * n, n * n) * np.sqrt(dom.weights[k])
        self.n = n
        self.w_in = dom.weights[k]
        self.w_out = cod.weights
        self.F = []
        for j, (m, o) in enumerate(zip(cod.dims, cod.offsets())):
            b_out = _block_basis(m).reshape(m * m, m * m) / np.sqrt(cod.weights[j])
            sub = D.matrix[o:o + m * m, off:off + n * n]
            self.F.append(b_out.T @ (sub @ to_coords))

    def outputs(self, psi: np.ndarray) -> list[np.ndarray]:
        """Output blocks for a batch of vectors ``(m, n)``."""
        p = np.einsum("ma,mb->mab", psi, psi.conj()).reshape(len(psi), -1)
        outs = []
        for f in self.F:
            d = int(round(np.sqrt(f.shape[0])))
            y = (p @ f.T).reshape(-1, d, d)
            outs.append((y + np.conj(np.transpose(y, (0, 2, 1)))) / 2)
        return outs

    def values(self, psi: np.ndarray) -> np.ndarray:
        """``||D(psi psi*)||_1 / w_k`` for a batch of unit vectors."""
        total = np.zeros(len(psi))
        for y, w in zip(self.outputs(psi), self.w_out):
            total += w * _batch_abs_eigsum(y)
        return total / self.w_in

    def value(self, psi: np.ndarray) -> float:
        return float(self.values(psi[None])[0])

    def pullback(self, j: int, a: np.ndarray) -> np.ndarray:
        """``G`` with ``tr(a D(P)_j) = tr(G P)`` for ``P`` in block ``k``."""
        h = self.F[j].T @ a.T.reshape(-1)
        g = h.reshape(self.n, self.n).T
        return (g + g.conj().T) / 2

    def linearisation(self, psi: np.ndarray):
        """Value ``f`` and ``G`` with ``f(psi) = psi* G psi`` at the current signs."""
        g = np.zeros((self.n, self.n), dtype=complex)
        total = 0.0
        for j, (y, w) in enumerate(zip(self.outputs(psi[None]), self.w_out)):
            lam, vec = np.linalg.eigh(y[0])
            total += w * np.sum(np.abs(lam))
            u = (vec * np.sign(lam)) @ vec.conj().T
            g += w * self.pullback(j, u)
        return total / self.w_in, g / self.w_in

    def least_eigen(self, psi: np.ndarray):
        """Least eigenvalue of ``D(psi psi*)`` over output blocks, with block and vector."""
        best = (np.inf, 0, None)
        for j, y in enumerate(self.outputs(psi[None])):
            lam, vec = np.linalg.eigh(y[0])
            if lam[0] < best[0]:
                best = (float(lam[0]), j, vec[:, 0])
        return best


# -- positivity ---------------------------------------------------------------


@dataclass(frozen=True)
class Dominated:
    """No negative direction found for ``S - T`` (a proof only if ``proof``)."""

    min_eigenvalue: float
    proof: bool

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class NotDominated:
    psi: np.ndarray
    block: int
    min_eigenvalue: float

    def __bool__(self) -> bool:
        return False


def _descend_min_eigen(prob: _BlockProblem, psi: np.ndarray, iters: int = 200):
    """Alternating minimisation of ``<D(psi psi*), v v*>`` over unit psi, v.

    Each half step is an exact eigenproblem, so the value never increases.
    """
    val, j, v = prob.least_eigen(psi)
    for _ in range(iters):
        g = prob.pullback(j, np.outer(v, v.conj()))
        cand = np.linalg.eigh(g)[1][:, 0]
        nval, nj, nv = prob.least_eigen(cand)
        if nval > val - 1e-14:
            break
        psi, val, j, v = cand, nval, nj, nv
    return val, psi


def _structured_starts(n: int) -> list[np.ndarray]:
    starts = list(np.eye(n, dtype=complex))
    r = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            for phase in (1, -1, 1j, -1j):
                v = np.zeros(n, dtype=complex)
                v[i], v[j] = r, r * phase
                starts.append(v)
    return starts


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def dominance_check(T: SuperOperator, S: SuperOperator, budget: int = 16, seed: int = 0):
    """Decide ``T <= S`` by searching for a pure state on which ``S - T`` goes negative.

    Returns :class:`NotDominated` with the witness as soon as a least
    eigenvalue below ``-1e-9`` is found.  ``Dominated.proof`` is true when the
    verdict is exact: every block is one-dimensional (the search is then
    exhaustive) or the difference map carries a positivity certificate.
    """
    if T.domain != S.domain or T.codomain != S.codomain:
        raise InvalidInput("dominance needs maps with identical shapes")
    D = S - T
    rng = np.random.default_rng(seed)
    worst = np.inf
    for k, n in enumerate(D.domain.dims):
        prob = _BlockProblem(D, k)
        starts = _structured_starts(n) + [_random_unit(rng, n) for _ in range(budget if n > 1 else 0)]
        for psi in starts:
            val, psi = _descend_min_eigen(prob, psi) if n > 1 else (prob.least_eigen(psi)[0], psi)
            worst = min(worst, val)
            if val < -DOMINANCE_TOL:
                return NotDominated(psi=psi, block=k, min_eigenvalue=val)
    exact = D.domain.is_diagonal
    return Dominated(min_eigenvalue=float(worst), proof=exact)


def certify_by_search(D: SuperOperator, budget: int = 16, seed: int = 0) -> SuperOperator:
    """Attach a ``Checked`` certificate to ``D`` if no negative direction is found."""
    if D.is_certified_positive:
        return D
    zero = SuperOperator(D.domain, D.codomain, np.zeros_like(D.matrix))
    verdict = dominance_check(zero, D, budget=budget, seed=seed)
    if not verdict:
        raise InvalidInput(
            f"map is not positive: eigenvalue {verdict.min_eigenvalue:.3e} in block {verdict.block}"
        )
    return D.with_certificate(ByConstruction("exhaustive") if verdict.proof else Checked(budget))


# -- norms --------------------------------------------------------------------


@dataclass(frozen=True)
class NormEstimate:
    lower: float
    upper: float
    witness: HermitianElement
    exact: bool

    @property
    def value(self) -> float:
        """Best point estimate (the certified lower bound)."""
        return self.lower


def norm_positive(D: SuperOperator, assume_positive: bool = False) -> float:
    """Exact norm of a positive map: ``||D|| = ||D*(1)||_inf``."""
    if not (D.is_certified_positive or assume_positive):
        raise InvalidInput("norm_positive needs a positivity certificate or assume_positive=True")
    return sup_norm(apply(adjoint(D), HermitianElement.unit(D.codomain)))


def _projected_ascent(prob: _BlockProblem, psi: np.ndarray):
    """Projected gradient ascent on the unit sphere with Armijo backtracking.

    Stops at gradient norm ``GRAD_TOL``, after ``MAX_ITER`` steps, or when an
    accepted step gains less than ``STALL_TOL`` (relative); the last case
    covers kinks where an output eigenvalue crosses zero.
    """
    val = prob.value(psi)
    step = 1.0
    for _ in range(MAX_ITER):
        _, g = prob.linearisation(psi)
        gpsi = g @ psi
        grad = 2 * (gpsi - np.real(psi.conj() @ gpsi) * psi)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < GRAD_TOL:
            break
        step = min(step * 2.0, 1e3)
        while step > 1e-14:
            cand = psi + step * grad
            cand /= np.linalg.norm(cand)
            cval = prob.value(cand)
            if cval >= val + 1e-4 * step * gnorm * gnorm:
                break
            step /= 2
        else:
            break
        gain = cval - val
        psi, val = cand, cval
        if gain <= STALL_TOL * max(1.0, abs(val)):
            break
    return val, psi


def _bloch_states(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta / 2) + 0j, np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)


def _grid_block(prob: _BlockProblem, refine: int = 8):
    """Exhaustive Bloch-sphere grid, then local ascent from the best cells."""
    nt, nphi = BLOCH_GRID
    theta = np.linspace(0.0, np.pi, nt)
    phi = np.linspace(0.0, 2 * np.pi, nphi, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    psi = _bloch_states(tt.ravel(), pp.ravel())
    vals = prob.values(psi)
    best_val, best_psi = -np.inf, None
    for idx in np.argsort(-vals, kind="stable")[:refine]:
        val, v = _projected_ascent(prob, psi[idx])
        if val > best_val:
            best_val, best_psi = val, v
    return best_val, best_psi


def _basis_sup_norms(shape: AlgebraShape) -> np.ndarray:
    total = np.zeros(shape.dim)
    for blk in coords_to_blocks(shape, np.eye(shape.dim)):
        total = np.maximum(total, np.max(np.abs(np.linalg.eigvalsh(blk)), axis=-1))
    return total


def column_bound(D: SuperOperator) -> float:
    """``sum_j ||b_j||_inf ||D b_j||_1``: valid since ``|<x, b_j>| <= ||x||_1 ||b_j||_inf``."""
    cols = batch_trace_norm(D.codomain, D.matrix.T)
    return float(_basis_sup_norms(D.domain) @ cols)


def norm_1to1(
    D: SuperOperator,
    strategy: str = "auto",
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    positive_parts: tuple[SuperOperator, SuperOperator] | None = None,
    positive_only: bool = True,
) -> NormEstimate:
    """Induced norm ``sup{||D x||_1 : ||x||_1 = 1, x = x*}``.

    The supremum of a convex function over the unit ball is attained at an
    extreme point ``+-(1/w_k) psi psi*``, and the sign does not change the
    value, so only positive pure states are searched (``positive_only=False``
    additionally tries the negated states, for cross-checking).

    ``strategy``: ``"auto"`` uses the exhaustive Bloch grid on 2-dim blocks
    and gradient ascent elsewhere; ``"ascent"`` never uses the grid;
    ``"grid"`` requires every block to have dimension <= 2.
    """
    if strategy not in ("auto", "ascent", "grid"):
        raise InvalidInput(f"unknown strategy {strategy!r}")
    dom = D.domain
    if strategy == "grid" and max(dom.dims) > 2:
        raise InvalidInput("grid strategy only covers blocks of dimension <= 2")
    if not np.all(np.isfinite(D.matrix)):
        raise NumericalFailure("map has non-finite entries")
    rng = np.random.default_rng(seed)
    best_val, best_block, best_psi = -np.inf, 0, None
    covered = True
    if dom.is_diagonal:
        # every extreme point is a scaled minimal projection: one column each
        w = np.asarray(dom.weights)
        vals = batch_trace_norm(D.codomain, (D.matrix / np.sqrt(w)[None, :]).T)
        if not positive_only:
            vals = np.maximum(vals, batch_trace_norm(D.codomain, -(D.matrix / np.sqrt(w)[None, :]).T))
        best_block = int(np.argmax(vals))
        best_val, best_psi = float(vals[best_block]), np.ones(1, dtype=complex)
        blocks_iter = []
    else:
        blocks_iter = list(enumerate(dom.dims))
    for k, n in blocks_iter:
        prob = _BlockProblem(D, k)
        if n == 1:
            psi = np.ones(1, dtype=complex)
            val = prob.value(psi)
        elif n == 2 and strategy in ("auto", "grid"):
            val, psi = _grid_block(prob)
        else:
            covered = False
            val, psi = -np.inf, None
            for start in _structured_starts(n) + [_random_unit(rng, n) for _ in range(restarts)]:
                v, p = _projected_ascent(prob, start)
                if v > val:
                    val, psi = v, p
        if not positive_only:
            # ||D(-P)|| computed independently of the sign symmetry
            x = -_block_coords(dom, k, np.outer(psi, psi.conj())[None])[0]
            val = max(val, trace_norm(HermitianElement.from_coords(D.codomain, D.matrix @ x)) / dom.weights[k])
        if val > best_val:
            best_val, best_block, best_psi = val, k, psi
    witness = HermitianElement(
        dom,
        [
            np.outer(best_psi, best_psi.conj()) / dom.weights[k] if k == best_block else np.zeros((n, n))
            for k, n in enumerate(dom.dims)
        ],
    )
    lower = max(0.0, float(best_val))
    upper = column_bound(D)
    if positive_parts is not None:
        A, B = positive_parts
        if (A - B).max_abs_diff(D) > 1e-10:
            raise InvalidInput("positive_parts do not sum to the map")
        upper = min(upper, norm_positive(A) + norm_positive(B))
    if D.is_certified_positive:
        upper = min(upper, norm_positive(D))
    if covered:
        upper = lower
    upper = max(upper, lower)
    exact = covered or upper - lower <= 1e-9
    return NormEstimate(lower=lower, upper=upper, witness=witness, exact=exact)
