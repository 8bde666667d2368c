"""Bundles of block algebras over a finite measure space.

A bundle assigns a fiber algebra ``M(w)`` with trace ``tau_w`` to each atom
``w`` of a finite measure space.  Sections are per-atom elements, the
center-valued trace and norm are per-atom numbers, and a map on the total
algebra that commutes with the center splits into fiber maps.

The total algebra is the direct sum of the fibers, with block weights
``m(w) * w_k``.  In that realization the diagonal sub-blocks of a
center-commuting map's representation matrix equal the fiber matrices
exactly (the weight rescalings cancel), so disintegration is slicing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .algebra import AlgebraShape, HermitianElement, trace, trace_norm
from .errors import CenterCommutationViolated, InvalidInput, InvalidTrace, PremiseViolated
from .laws import ConvergesToZero, ZeroTwoReport, difference_norm_sequence, STRICT_MARGIN
from .superop import (
    ByConstruction,
    NormEstimate,
    SuperOperator,
    apply,
    dominance_check,
    is_unital_dual,
    norm_1to1,
    norm_positive,
    power,
)

COUPLING_TOL = 1e-10
KERNEL_RTOL = 1e-10
GRAM_NEG_TOL = 1e-9
FIDELITY_TOL = 1e-10


@dataclass(frozen=True)
class FiniteMeasureSpace:
    atoms: tuple
    masses: tuple

    def __init__(self, atoms: Sequence[Hashable], masses: Sequence[float] | None = None):
        atoms = tuple(atoms)
        masses = tuple(float(m) for m in (masses if masses is not None else [1.0] * len(atoms)))
        if not atoms:
            raise InvalidInput("a measure space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise InvalidInput("atom labels must be distinct")
        if len(masses) != len(atoms):
            raise InvalidInput("one mass per atom is required")
        if not all(np.isfinite(m) and m > 0 for m in masses):
            raise InvalidInput(f"atom masses must be positive, got {masses}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class BundleAlgebra:
    base: FiniteMeasureSpace
    fibers: tuple

    def __init__(self, base: FiniteMeasureSpace, fibers: Sequence[AlgebraShape]):
        fibers = tuple(fibers)
        if len(fibers) != len(base):
            raise InvalidInput("one fiber algebra per atom is required")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fibers", fibers)

    @property
    def global_shape(self) -> AlgebraShape:
        dims, weights = [], []
        for m, f in zip(self.base.masses, self.fibers):
            dims += list(f.dims)
            weights += [m * w for w in f.weights]
        return AlgebraShape(dims, weights)

    def coord_ranges(self) -> list[slice]:
        out, start = [], 0
        for f in self.fibers:
            out.append(slice(start, start + f.dim))
            start += f.dim
        return out

    def require_same(self, other: "BundleAlgebra") -> None:
        if self != other:
            raise InvalidInput("bundle algebras differ")


@dataclass(frozen=True)
class CenterValue:
    """A real function on the atoms (an element of the center's predual)."""

    base: FiniteMeasureSpace
    values: tuple

    def __init__(self, base: FiniteMeasureSpace, values: Sequence[float]):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def as_dict(self) -> dict:
        return dict(zip(self.base.atoms, self.values))

    def __getitem__(self, i):
        return self.values[i]


class Section:
    """One Hermitian element per atom."""

    __slots__ = ("bundle", "elements")

    def __init__(self, bundle: BundleAlgebra, elements: Sequence[HermitianElement]):
        elements = tuple(elements)
        if len(elements) != len(bundle.base):
            raise InvalidInput("one element per atom is required")
        for x, f in zip(elements, bundle.fibers):
            x.shape.require_same(f)
        object.__setattr__(self, "bundle", bundle)
        object.__setattr__(self, "elements", elements)

    def __setattr__(self, name, value):
        raise AttributeError("Section is immutable")

    @classmethod
    def unit(cls, bundle: BundleAlgebra) -> "Section":
        return cls(bundle, [HermitianElement.unit(f) for f in bundle.fibers])

    @classmethod
    def zero(cls, bundle: BundleAlgebra) -> "Section":
        return cls(bundle, [HermitianElement.zero(f) for f in bundle.fibers])

    @classmethod
    def random(cls, bundle: BundleAlgebra, rng: np.random.Generator) -> "Section":
        return cls(bundle, [HermitianElement.random(f, rng) for f in bundle.fibers])

    @classmethod
    def from_global(cls, bundle: BundleAlgebra, x: HermitianElement) -> "Section":
        x.shape.require_same(bundle.global_shape)
        out, start = [], 0
        for f in bundle.fibers:
            out.append(HermitianElement(f, x.blocks[start:start + f.nblocks]))
            start += f.nblocks
        return cls(bundle, out)

    def to_global(self) -> HermitianElement:
        return HermitianElement(self.bundle.global_shape, [b for x in self.elements for b in x.blocks])

    def __getitem__(self, i) -> HermitianElement:
        return self.elements[i]

    def __add__(self, other: "Section") -> "Section":
        self.bundle.require_same(other.bundle)
        return Section(self.bundle, [a + b for a, b in zip(self.elements, other.elements)])

    def __sub__(self, other: "Section") -> "Section":
        self.bundle.require_same(other.bundle)
        return Section(self.bundle, [a - b for a, b in zip(self.elements, other.elements)])

    def __mul__(self, alpha: float) -> "Section":
        return Section(self.bundle, [a * alpha for a in self.elements])

    __rmul__ = __mul__

    def max_abs_diff(self, other: "Section") -> float:
        return max(a.max_abs_diff(b) for a, b in zip(self.elements, other.elements))


class SectionOperator:
    """Fiber maps ``T_w``, acting on sections atom by atom."""

    def __init__(self, bundle: BundleAlgebra, maps: Sequence[SuperOperator]):
        maps = tuple(maps)
        if len(maps) != len(bundle.base):
            raise InvalidInput("one fiber map per atom is required")
        for t, f in zip(maps, bundle.fibers):
            if t.domain != f or t.codomain != f:
                raise InvalidInput("fiber map does not act on its fiber algebra")
        self.bundle = bundle
        self.maps = maps

    def __call__(self, x: Section) -> Section:
        self.bundle.require_same(x.bundle)
        return Section(self.bundle, [apply(t, e) for t, e in zip(self.maps, x.elements)])

    def __getitem__(self, i) -> SuperOperator:
        return self.maps[i]

    def map(self, func: Callable[[SuperOperator], SuperOperator]) -> "SectionOperator":
        return SectionOperator(self.bundle, [func(t) for t in self.maps])

    @property
    def is_certified_positive(self) -> bool:
        return all(t.is_certified_positive for t in self.maps)


# -- center-valued quantities ----------------------------------------------------


def center_trace(x: Section) -> CenterValue:
    """``Phi(x)(w) = tau_w(x(w))``."""
    return CenterValue(x.bundle.base, [trace(e) for e in x.elements])


def vector_norm(x: Section) -> CenterValue:
    """``||x||_{1,Phi}(w) = tau_w(|x(w)|)``."""
    return CenterValue(x.bundle.base, [trace_norm(e) for e in x.elements])


def normalized_center_trace(x: Section) -> CenterValue:
    """``Phi(x) / (1 + Phi(1))``: a rescaling that keeps values bounded by the unit's."""
    num = center_trace(x).as_array()
    den = 1.0 + center_trace(Section.unit(x.bundle)).as_array()
    return CenterValue(x.bundle.base, num / den)


def lift(x: Section) -> Section:
    """Lifting on an atomic base: every class has one everywhere-defined representative."""
    return x


# -- disintegration --------------------------------------------------------------


def assemble(T: SectionOperator) -> SuperOperator:
    """The block-diagonal map on the total algebra with fibers ``T_w``."""
    bundle = T.bundle
    shape = bundle.global_shape
    m = np.zeros((shape.dim, shape.dim))
    for r, t in zip(bundle.coord_ranges(), T.maps):
        m[r, r] = t.matrix
    cert = ByConstruction("fiberwise") if T.is_certified_positive else None
    return SuperOperator(shape, shape, m, cert)


def disintegrate(bundle: BundleAlgebra, T_global: SuperOperator, tol: float = COUPLING_TOL) -> SectionOperator:
    """Split a center-commuting map into fiber maps ``T_w`` with ``T_w(x(w)) = (Tx)(w)``.

    Raises ``CenterCommutationViolated`` if an off-diagonal atom block has an
    entry above ``tol``.  Fiber maps inherit a positivity certificate from
    the global map (a compression of a positive map to a central summand is
    positive).
    """
    shape = bundle.global_shape
    if T_global.domain != shape or T_global.codomain != shape:
        raise InvalidInput("map does not act on the bundle's total algebra")
    ranges = bundle.coord_ranges()
    atoms = bundle.base.atoms
    for i, ri in enumerate(ranges):
        for j, rj in enumerate(ranges):
            if i == j:
                continue
            mag = float(np.max(np.abs(T_global.matrix[ri, rj]), initial=0.0))
            if mag > tol:
                raise CenterCommutationViolated(atoms[j], atoms[i], mag)
    cert = ByConstruction("fiber-restriction") if T_global.is_certified_positive else None
    maps = [SuperOperator(f, f, T_global.matrix[r, r].copy(), cert) for f, r in zip(bundle.fibers, ranges)]
    return SectionOperator(bundle, maps)


def operator_center_norm(T: SectionOperator, seed: int = 0) -> tuple[CenterValue, list[NormEstimate]]:
    """``||T||(w) = ||T_w||`` per atom, with the underlying estimates."""
    estimates = [norm_1to1(t, seed=seed) for t in T.maps]
    return CenterValue(T.bundle.base, [e.lower for e in estimates]), estimates


# -- vector-valued zero-two law -------------------------------------------------------


@dataclass
class FiberVerdict:
    atom: Hashable
    unital_dual: bool
    premises_ok: bool
    premise_detail: str
    hypothesis_norms: tuple[float, float] | None
    report: ZeroTwoReport

    @property
    def n0(self):
        c = self.report.classification
        return c.n0[0] if isinstance(c, ConvergesToZero) else None

    @property
    def converges(self) -> bool:
        return isinstance(self.report.classification, ConvergesToZero)


@dataclass
class OrderLimitReport:
    k: int
    eps: float
    global_unital: bool
    fibers: list[FiberVerdict]

    @property
    def converges(self) -> bool:
        """Order convergence on a finite base: every component converges."""
        return all(f.converges for f in self.fibers)

    @property
    def premises_ok(self) -> bool:
        return all(f.premises_ok for f in self.fibers)

    def rows(self) -> list[tuple]:
        """``(atom, n, lower, upper, exact)`` per atom and sample."""
        return [(f.atom, n[0], e.lower, e.upper, e.exact) for f in self.fibers for n, e in f.report.samples]

    def component(self, n: int) -> CenterValue:
        """The center-valued norm ``||T^{n+k} - T^n||`` at sample ``n``."""
        vals = []
        for f in self.fibers:
            vals.append(next(e.lower for m, e in f.report.samples if m[0] == n))
        return CenterValue(FiniteMeasureSpace([f.atom for f in self.fibers]), vals)


def _fiber_premises(t: SuperOperator, s: SuperOperator, m: int, k: int, seed: int):
    """Hypotheses ``S <= T^{m+k}``, ``S <= T^m`` and both gaps of norm < 1."""
    tm = power(t, m)
    tmk = power(t, m + k)
    norms = []
    for label, big in ((f"S <= T^{m + k}", tmk), (f"S <= T^{m}", tm)):
        verdict = dominance_check(s, big, seed=seed)
        if not verdict:
            return False, f"{label} fails (eigenvalue {verdict.min_eigenvalue:.3e})", None
        norms.append(norm_positive(big - s, assume_positive=True))
    for label, val in zip((f"||T^{m + k} - S|| < 1", f"||T^{m} - S|| < 1"), norms):
        if not val < 1 - STRICT_MARGIN:
            return False, f"{label} fails (norm {val:.12g})", tuple(norms)
    return True, "", tuple(norms)


def order_limit_check(
    T: SectionOperator,
    k: int = 1,
    eps: float = 1e-3,
    N: int = 64,
    S: SectionOperator | None = None,
    m: int = 1,
    strict: bool = False,
    seed: int = 0,
) -> OrderLimitReport:
    """Componentwise check that ``||T^{n+k} - T^n||`` tends to zero in order.

    ``S`` supplies the dominated fiber family (default ``S(w) = T_w^m / 2``).
    With ``strict=True`` the first fiber whose premises fail raises
    ``PremiseViolated``; otherwise failures are recorded per atom and the
    sequences are still computed.
    """
    bundle = T.bundle
    if S is None:
        S = T.map(lambda t: 0.5 * power(t, m))
    global_map = assemble(T)
    unit = HermitianElement.unit(bundle.global_shape)
    global_unital = apply(global_map, unit).allclose(unit, 1e-9)
    fibers = []
    for atom, t, s in zip(bundle.base.atoms, T.maps, S.maps):
        unital = is_unital_dual(t)
        if not t.is_certified_positive:
            ok, detail, norms = False, "fiber map has no positivity certificate", None
        elif not unital:
            ok, detail, norms = False, "fiber adjoint does not fix the unit", None
        else:
            ok, detail, norms = _fiber_premises(t, s, m, k, seed)
        if strict and not ok:
            raise PremiseViolated(f"atom {atom!r}", detail)
        report = difference_norm_sequence(t, k, range(N + 1), eps=eps, seed=seed)
        fibers.append(FiberVerdict(atom, unital, ok, detail, norms, report))
    return OrderLimitReport(k=k, eps=eps, global_unital=global_unital, fibers=fibers)


# -- GNS fiber ----------------------------------------------------------------------


def _matrix_units(shape: AlgebraShape) -> list[tuple[int, int, int]]:
    return [(b, i, j) for b, n in enumerate(shape.dims) for i in range(n) for j in range(n)]


@dataclass
class GnsFiber:
    """Quotient of a block algebra by the null space of ``s(x, y) = phi(y* x)``.

    Elements are coefficient vectors on the matrix units ``e^(b)_ij``; the
    quotient carries the orthonormal basis ``f_r = sum_a U[a, r] e_a / sqrt(l_r)``.
    """

    shape: AlgebraShape
    phi: tuple
    gram: np.ndarray
    kernel: np.ndarray  # columns span the null space
    range_vectors: np.ndarray
    range_values: np.ndarray

    @property
    def quotient_dim(self) -> int:
        return self.range_vectors.shape[1]

    @property
    def kernel_dim(self) -> int:
        return self.kernel.shape[1]

    def phi_of(self, blocks: Sequence[np.ndarray]) -> complex:
        return complex(sum(p * np.trace(b) for p, b in zip(self.phi, blocks)))

    def coefficients(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(b, dtype=complex).reshape(-1) for b in blocks])

    def left_multiplication(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """``L_x`` on coefficient vectors: ``x e_(i,j) = sum_r x_ri e_(r,j)`` per block."""
        mats = [np.kron(np.asarray(b, dtype=complex), np.eye(len(b))) for b in blocks]
        size = sum(len(m) for m in mats)
        out = np.zeros((size, size), dtype=complex)
        start = 0
        for m in mats:
            out[start:start + len(m), start:start + len(m)] = m
            start += len(m)
        return out

    def pi(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """``pi(x)`` in the orthonormal quotient basis."""
        u, lam = self.range_vectors, self.range_values
        return (np.sqrt(lam)[:, None] * (u.conj().T @ self.left_multiplication(blocks) @ u)) / np.sqrt(lam)[None, :]

    def unit_vector(self) -> np.ndarray:
        """The class of ``1`` in the orthonormal quotient basis."""
        one = self.coefficients([np.eye(n) for n in self.shape.dims])
        return np.sqrt(self.range_values) * (self.range_vectors.conj().T @ one)

    def mu(self, op: np.ndarray) -> complex:
        """``mu(A) = <A 1, 1>``."""
        q = self.unit_vector()
        return complex(q.conj() @ op @ q)

    def fidelity(self) -> float:
        """``max |mu(pi(e)) - phi(e)|`` over all matrix units."""
        worst = 0.0
        for b, i, j in _matrix_units(self.shape):
            blocks = [np.zeros((n, n), dtype=complex) for n in self.shape.dims]
            blocks[b][i, j] = 1.0
            worst = max(worst, abs(self.mu(self.pi(blocks)) - self.phi_of(blocks)))
        return worst


def gns(shape: AlgebraShape, phi: Sequence[float] | None = None) -> GnsFiber:
    """GNS construction for the trace ``phi(x) = sum_b phi_b tr(x_b)``.

    Builds the Gram matrix ``K[a, b] = phi(e_a* e_b)`` on matrix units,
    discards eigenvalues below ``1e-10 * max`` as the kernel, and represents
    left multiplication on the quotient.
    """
    phi = tuple(float(p) for p in (shape.weights if phi is None else phi))
    if len(phi) != shape.nblocks:
        raise InvalidInput("one trace weight per block is required")
    units = _matrix_units(shape)
    size = len(units)
    gram = np.zeros((size, size), dtype=complex)
    for a, (ba, ia, ja) in enumerate(units):
        for b, (bb, ib, jb) in enumerate(units):
            # e_a* e_b = e_(ja, ia) e_(ib, jb) = [ia == ib] e_(ja, jb)
            if ba == bb and ia == ib and ja == jb:
                gram[a, b] = phi[ba]
    lam, vec = np.linalg.eigh(gram)
    if lam[0] < -GRAM_NEG_TOL:
        raise InvalidTrace(f"Gram form is indefinite (eigenvalue {lam[0]:.3e})")
    top = max(float(lam[-1]), 0.0)
    keep = lam > KERNEL_RTOL * top if top > 0 else np.zeros(size, dtype=bool)
    return GnsFiber(
        shape=shape,
        phi=phi,
        gram=gram,
        kernel=vec[:, ~keep],
        range_vectors=vec[:, keep],
        range_values=lam[keep],
    )
