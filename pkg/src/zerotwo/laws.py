"""Zero-two law machinery for positive contractions on block algebras.

The central quantity is ``||T^(n+k) - T^n||`` for a commuting family
``T = (T_1, ..., T_d)`` and multi-indices ``n, k``.  This module provides
the dichotomy sequence, dominance propagation for ``Z(S^n - T^n)``, the
operator recursions behind the multi-parameter law together with residual
checks of the identities they satisfy, the binomial halving bound, end-to-end
experiments that derive ``(l_eps, d_eps, n_0)`` and verify the conclusion,
and the lattice-meet criterion for Markov kernels.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .algebra import HermitianElement, sup_norm
from .errors import (
    CommutationViolated,
    IdentityResidualExceeded,
    InvalidInput,
    PremiseViolated,
    SearchExhausted,
)
from .superop import (
    DEFAULT_RESTARTS,
    ByConstruction,
    NormEstimate,
    SuperOperator,
    adjoint,
    apply,
    commutator_defect,
    dominance_check,
    is_unital_dual,
    norm_1to1,
    norm_positive,
    power,
)

COMMUTATION_TOL = 1e-9
RESIDUAL_TOL = 1e-9
STRICT_MARGIN = 1e-9
TWO_BRANCH_TOL = 1e-6
DEFAULT_EPS = 1e-3
DEFAULT_HORIZON = 64


@dataclass(frozen=True, order=True)
class MultiIndex:
    """An element of ``N_0^d`` with componentwise arithmetic."""

    entries: tuple[int, ...]

    def __init__(self, entries: Union[int, Iterable[int]]):
        if isinstance(entries, (int, np.integer)):
            entries = (entries,)
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise InvalidInput(f"multi-index entries must be >= 0, got {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, d: int) -> "MultiIndex":
        return cls((0,) * d)

    @classmethod
    def unit(cls, d: int, i: int) -> "MultiIndex":
        return cls(tuple(int(j == i) for j in range(d)))

    @property
    def d(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def _check(self, other: "MultiIndex") -> None:
        if len(other) != len(self):
            raise InvalidInput(f"multi-index lengths differ: {self} vs {other}")

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        other = MultiIndex(other) if not isinstance(other, MultiIndex) else other
        self._check(other)
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other: "MultiIndex") -> "MultiIndex":
        self._check(other)
        return MultiIndex(a - b for a, b in zip(self, other))

    def __mul__(self, scalar: int) -> "MultiIndex":
        return MultiIndex(int(scalar) * a for a in self)

    __rmul__ = __mul__

    def leq(self, other: "MultiIndex") -> bool:
        """Componentwise order ``self <= other``."""
        self._check(other)
        return all(a <= b for a, b in zip(self, other))

    @property
    def total(self) -> int:
        """``|n| = n_1 + ... + n_d``."""
        return sum(self.entries)

    def __repr__(self) -> str:
        return f"MultiIndex{self.entries}"


def _as_index(n, d: int) -> MultiIndex:
    n = n if isinstance(n, MultiIndex) else MultiIndex(n)
    if len(n) != d:
        raise InvalidInput(f"multi-index {n} does not match a family of size {d}")
    return n


class CommutingFamily:
    """A tuple of maps on one algebra whose pairwise commutators vanish."""

    def __init__(self, maps: Sequence[SuperOperator], tol: float = COMMUTATION_TOL):
        maps = tuple(maps)
        if not maps:
            raise InvalidInput("a family needs at least one map")
        shape = maps[0].domain
        for t in maps:
            if t.domain != shape or t.codomain != shape:
                raise InvalidInput("family members must act on one common algebra")
        for i, j in itertools.combinations(range(len(maps)), 2):
            defect = commutator_defect(maps[i], maps[j])
            if defect > tol:
                raise CommutationViolated(i, j, defect)
        self.maps = maps
        self.shape = shape

    def __len__(self) -> int:
        return len(self.maps)

    def __iter__(self):
        return iter(self.maps)

    def __getitem__(self, i) -> SuperOperator:
        return self.maps[i]

    @property
    def certified_positive(self) -> bool:
        return all(t.is_certified_positive for t in self.maps)


def as_family(family) -> CommutingFamily:
    if isinstance(family, CommutingFamily):
        return family
    if isinstance(family, SuperOperator):
        return CommutingFamily([family])
    return CommutingFamily(family)


def multi_power(family, n, preserve_trace: bool = False) -> SuperOperator:
    """``T^n = T_1^{n_1} ... T_d^{n_d}``; see ``power`` for ``preserve_trace``."""
    fam = as_family(family)
    n = _as_index(n, len(fam))
    result = SuperOperator.identity(fam.shape)
    for t, e in zip(fam, n):
        result = result @ power(t, e, preserve_trace=preserve_trace)
    return result


# -- dichotomy ----------------------------------------------------------------


@dataclass(frozen=True)
class ConvergesToZero:
    eps: float
    n0: MultiIndex
    name = "ConvergesToZero"


@dataclass(frozen=True)
class StaysNearTwo:
    name = "StaysNearTwo"


@dataclass(frozen=True)
class Undetermined:
    name = "Undetermined"


Classification = Union[ConvergesToZero, StaysNearTwo, Undetermined]


@dataclass
class ZeroTwoReport:
    k: MultiIndex
    samples: list[tuple[MultiIndex, NormEstimate]]
    classification: Classification

    def rows(self) -> list[tuple]:
        """``(n_1, ..., n_d, lower, upper, exact)`` per sample."""
        return [(*n.entries, e.lower, e.upper, e.exact) for n, e in self.samples]

    def values(self) -> list[float]:
        return [e.lower for _, e in self.samples]


def default_schedule(d: int, horizon: int = DEFAULT_HORIZON) -> list[MultiIndex]:
    """Coordinate rays and the diagonal ray, up to ``|n| <= horizon``."""
    pts = [MultiIndex.zeros(d)]
    for i in range(d):
        pts += [MultiIndex.unit(d, i) * t for t in range(1, horizon + 1)]
    if d > 1:
        pts += [MultiIndex((t,) * d) for t in range(1, horizon // d + 1)]
    return pts


def classify(samples: Sequence[tuple[MultiIndex, NormEstimate]], eps: float = DEFAULT_EPS) -> Classification:
    """Three-way verdict on sampled ``||T^(n+k) - T^n||``.

    ``ConvergesToZero(eps, n0)``: ``n0`` is the first sample such that every
    sample ``n >= n0`` has ``upper < eps``.  ``StaysNearTwo``: every lower
    bound exceeds ``2 - 1e-6``.
    """
    for n0, _ in samples:
        tail = [e for n, e in samples if n0.leq(n)]
        if tail and all(e.upper < eps for e in tail):
            return ConvergesToZero(eps, n0)
    if samples and all(e.lower > 2 - TWO_BRANCH_TOL for _, e in samples):
        return StaysNearTwo()
    return Undetermined()


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ZEROTWO_THREADS", "1")))
    except ValueError:
        return 1


def _evaluate(points, func):
    """Evaluate independent schedule points, in order, optionally on threads."""
    workers = _thread_count()
    if workers == 1:
        return [func(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, points))


def difference_norm_sequence(
    family,
    k,
    n_schedule: Sequence | None = None,
    eps: float = DEFAULT_EPS,
    left: SuperOperator | None = None,
    strategy: str = "auto",
    seed: int = 0,
    preserve_trace: bool = False,
) -> ZeroTwoReport:
    """``||L (T^(n+k) - T^n)||`` along a schedule, with ``L = left`` or the identity.

    ``preserve_trace`` stabilizes huge powers of trace-preserving families.
    """
    fam = as_family(family)
    d = len(fam)
    k = _as_index(k, d)
    points = default_schedule(d) if n_schedule is None else [_as_index(n, d) for n in n_schedule]
    tk = multi_power(fam, k)

    def one(n):
        tn = multi_power(fam, n, preserve_trace=preserve_trace)
        diff = tk @ tn - tn
        if left is not None:
            diff = left @ diff
        return n, norm_1to1(diff, strategy=strategy, seed=seed)

    samples = _evaluate(points, one)
    return ZeroTwoReport(k=k, samples=samples, classification=classify(samples, eps))


def ray_monotonicity_defect(report: ZeroTwoReport) -> float:
    """Largest increase ``value(n + e_i) - value(n)`` between sampled neighbours."""
    by_index = {n: e for n, e in report.samples}
    worst = 0.0
    for n, e in report.samples:
        for i in range(len(n)):
            nxt = by_index.get(n + MultiIndex.unit(len(n), i))
            if nxt is not None:
                worst = max(worst, nxt.lower - e.upper)
    return worst


# -- halving bound ------------------------------------------------------------


def gamma_exact(ell: int) -> Fraction:
    """``sum_j |C(l, j) - C(l, j-1)| / 2^l`` as an exact fraction."""
    ell = int(ell)
    if ell < 1:
        raise InvalidInput("gamma_oracle needs ell >= 1")
    total = sum(abs(math.comb(ell, j) - (math.comb(ell, j - 1) if j else 0)) for j in range(ell + 2))
    return Fraction(total, 2 ** ell)


def gamma_oracle(ell: int) -> float:
    """Total-variation bound on ``||H^l - T^k H^l||`` with ``H = (I + T^k)/2``.

    Expanding ``H^l`` binomially gives
    ``H^l - T^k H^l = 2^-l sum_j (C(l,j) - C(l,j-1)) T^(jk)``, so for any
    contraction the norm is at most ``2 C(l, floor(l/2)) / 2^l``.
    """
    ell = int(ell)
    if ell < 1:
        raise InvalidInput("gamma_oracle needs ell >= 1")
    return 2 * math.comb(ell, ell // 2) / 2 ** ell


def gamma_envelope_holds(ell: int) -> bool:
    """``gamma_oracle(l) * sqrt(l) <= 2`` in exact integer arithmetic."""
    c = math.comb(ell, ell // 2)
    # (2c / 2^l)^2 * l <= 4  <=>  c^2 l <= 4^l
    return c * c * ell <= 4 ** ell


def gamma_envelope_violations(max_ell: int) -> list[int]:
    """All ``l <= max_ell`` breaking the envelope, with central binomials updated in place."""
    bad = []
    c, four = 1, 1  # C(0, 0), 4^0
    for ell in range(1, max_ell + 1):
        # C(l, floor(l/2)) from C(l-1, floor((l-1)/2))
        c = 2 * c if ell % 2 == 0 else c * ell // ((ell + 1) // 2)
        four *= 4
        if c * c * ell > four:
            bad.append(ell)
    return bad


def _halving_coefficients(ell: int) -> list[int]:
    return [math.comb(ell, j) - (math.comb(ell, j - 1) if j else 0) for j in range(ell + 2)]


def halving_map(family, k, ell: int) -> tuple[SuperOperator, tuple[SuperOperator, SuperOperator] | None]:
    """``H^l - T^k H^l`` and, for a positive family, its split into positive parts."""
    fam = as_family(family)
    tk = multi_power(fam, _as_index(k, len(fam)))
    ident = SuperOperator.identity(fam.shape)
    h = power(0.5 * (ident + tk), ell)
    delta = h - tk @ h
    if not tk.is_certified_positive:
        return delta, None
    pos = SuperOperator.zero(fam.shape)
    neg = SuperOperator.zero(fam.shape)
    for j, c in enumerate(_halving_coefficients(ell)):
        term = (abs(c) / 2 ** ell) * power(tk, j)
        if c > 0:
            pos = pos + term
        elif c < 0:
            neg = neg + term
    return delta, (pos, neg)


def halving_defect(family, k, ell: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> NormEstimate:
    """``||H^l - T^k H^l||``; the upper bound uses the binomial positive split."""
    delta, parts = halving_map(family, k, ell)
    if parts is not None and (parts[0] - parts[1]).max_abs_diff(delta) > 1e-10:
        parts = None
    return norm_1to1(delta, positive_parts=parts, seed=seed, restarts=restarts)


# -- Q / V recursions ---------------------------------------------------------


@dataclass
class ConstructionTrace:
    m: MultiIndex
    k: MultiIndex
    S: SuperOperator
    Q: dict[int, SuperOperator] = field(default_factory=dict)
    V: dict[tuple[int, int], SuperOperator] = field(default_factory=dict)
    residual_T3: float = 0.0
    residual_T4: float = 0.0
    gamma: float | None = None
    ell_eps: int | None = None
    d_eps: int | None = None
    d_method: str | None = None
    n0: MultiIndex | None = None
    M_power: int | None = None
    commutation: dict[str, float] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "m": list(self.m),
            "k": list(self.k),
            "residual_T3": self.residual_T3,
            "residual_T4": self.residual_T4,
            "gamma": self.gamma,
            "ell_eps": self.ell_eps,
            "d_eps": None if self.d_eps is None else str(self.d_eps),
            "d_method": self.d_method,
            "n0": None if self.n0 is None else [str(e) for e in self.n0],
            "M_power": None if self.M_power is None else str(self.M_power),
            "commutation": self.commutation,
        }


def _max_entry(a: SuperOperator) -> float:
    return float(np.max(np.abs(a.matrix), initial=0.0))


def _halving_base(fam: CommutingFamily, k: MultiIndex) -> SuperOperator:
    return 0.5 * (SuperOperator.identity(fam.shape) + multi_power(fam, k))


def q_sequence(family, S: SuperOperator, m, k, ell_max: int, Z: SuperOperator | None = None,
               keep: str = "all") -> ConstructionTrace:
    """Build ``Q_1 .. Q_{ell_max}`` and check ``T^{l(m+k)} = H^l S^l + Q_l``.

    ``Q_1 = (T^{m+k} - S)/2 + T^k (T^m - S)/2`` and
    ``Q_{l+1} = H^l Q_1 S^l + T^{m+k} Q_l`` with ``H = (I + T^k)/2``.
    ``keep="last"`` stores only ``Q_{ell_max}`` (for long runs).
    """
    fam = as_family(family)
    d = len(fam)
    m, k = _as_index(m, d), _as_index(k, d)
    if ell_max < 1:
        raise InvalidInput("ell_max must be >= 1")
    if S.domain != fam.shape or S.codomain != fam.shape:
        raise InvalidInput("S must act on the family's algebra")
    trace = ConstructionTrace(m=m, k=k, S=S)
    if Z is not None:
        defect = commutator_defect(S, Z)
        trace.commutation["SZ"] = defect
        if defect > COMMUTATION_TOL:
            raise CommutationViolated("S", "Z", defect)
    tm, tk = multi_power(fam, m), multi_power(fam, k)
    tmk = tk @ tm
    h = _halving_base(fam, k)
    q1 = 0.5 * (tmk - S) + 0.5 * (tk @ (tm - S))
    q, h_pow, s_pow, t_pow = q1, h, S, tmk
    residual = 0.0
    for ell in range(1, ell_max + 1):
        if ell > 1:
            q = h_pow @ q1 @ s_pow + tmk @ q  # uses H^{l-1}, S^{l-1}
            h_pow, s_pow, t_pow = h_pow @ h, s_pow @ S, t_pow @ tmk
        residual = max(residual, _max_entry(t_pow - h_pow @ s_pow - q))
        if keep == "all" or ell == ell_max:
            trace.Q[ell] = q
    trace.residual_T3 = residual
    if residual > RESIDUAL_TOL:
        raise IdentityResidualExceeded("T3", residual, RESIDUAL_TOL)
    return trace


def v_table(family, S: SuperOperator, m, k, ell: int, d_max: int, trace: ConstructionTrace | None = None,
            Z: SuperOperator | None = None) -> ConstructionTrace:
    """Build ``V_l^(1..d_max)`` and check ``T^{d l(m+k)} = H^l V_l^(d) + Q_l^d``.

    ``V_l^(1) = S^l`` and ``V_l^(d+1) = T^{l(m+k)} V_l^(d) + V_l^(1) Q_l^d``.
    """
    fam = as_family(family)
    if trace is None or ell not in trace.Q:
        trace = q_sequence(fam, S, m, k, ell, Z=Z)
    if d_max < 1:
        raise InvalidInput("d_max must be >= 1")
    m, k = trace.m, trace.k
    q = trace.Q[ell]
    h_l = power(_halving_base(fam, k), ell)
    t_l = multi_power(fam, (m + k) * ell)
    v1 = power(S, ell)
    v, q_pow, t_pow = v1, q, t_l
    residual = 0.0
    for dd in range(1, d_max + 1):
        if dd > 1:
            v = t_l @ v + v1 @ q_pow  # uses V^(d-1), Q^(d-1)
            q_pow, t_pow = q_pow @ q, t_pow @ t_l
        trace.V[(dd, ell)] = v
        residual = max(residual, _max_entry(t_pow - h_l @ v - q_pow))
    trace.residual_T4 = max(trace.residual_T4, residual)
    if residual > RESIDUAL_TOL:
        raise IdentityResidualExceeded("T4", residual, RESIDUAL_TOL)
    return trace


# -- dominance propagation ----------------------------------------------------


def _require_positive(name: str, t: SuperOperator) -> None:
    if not t.is_certified_positive:
        raise PremiseViolated(f"{name} positive", "no positivity certificate")


def _require_contraction(name: str, t: SuperOperator) -> float:
    val = norm_positive(t)
    if val > 1 + 1e-9:
        raise PremiseViolated(f"{name} contraction", f"norm {val:.12g} > 1")
    return val


def _positive_difference(a: SuperOperator, b: SuperOperator) -> SuperOperator:
    """``a - b`` for verified ``b <= a``; the certificate records the search."""
    return (a - b).with_certificate(ByConstruction("dominated-difference"))


@dataclass
class ZN0Report:
    n0: int
    norms: list[tuple[int, float]]
    margin: float
    holds: bool
    dominance: object


def zn0_experiment(Z: SuperOperator, T: SuperOperator, S: SuperOperator, n0: int, N: int,
                   budget: int = 16, seed: int = 0) -> ZN0Report:
    """Check that ``||Z(S^n - T^n)|| < 1`` for ``n0 <= n <= N``.

    Premises: ``Z, T, S`` certified positive contractions, ``T <= S`` (no
    negative direction found), ``ZS = SZ``, and the starting norm below one.
    ``Z(S^n - T^n)`` is positive whenever ``T <= S``, so every norm is
    exact via the dual unit.
    """
    if n0 < 1 or N < n0:
        raise InvalidInput("need 1 <= n0 <= N")
    for name, t in (("Z", Z), ("T", T), ("S", S)):
        _require_positive(name, t)
        _require_contraction(name, t)
    verdict = dominance_check(T, S, budget=budget, seed=seed)
    if not verdict:
        raise PremiseViolated("T <= S", f"eigenvalue {verdict.min_eigenvalue:.3e}")
    defect = commutator_defect(Z, S)
    if defect > COMMUTATION_TOL:
        raise PremiseViolated("ZS = SZ", f"defect {defect:.3e}")
    norms = []
    for n in range(n0, N + 1):
        val = norm_positive(Z @ (power(S, n) - power(T, n)), assume_positive=True)
        if n == n0 and not val < 1 - STRICT_MARGIN:
            raise PremiseViolated("||Z(S^n0 - T^n0)|| < 1", f"norm {val:.12g}")
        norms.append((n, val))
    worst = max(v for _, v in norms)
    return ZN0Report(n0=n0, norms=norms, margin=1 - worst, holds=worst < 1, dominance=verdict)


# -- end-to-end multi-parameter law --------------------------------------------


def ell_for_eps(eps: float) -> int:
    """Smallest ``l`` with ``gamma_oracle(l) < eps/2`` (exact comparison)."""
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    target = Fraction(eps) / 2

    def ok(ell):
        return Fraction(2 * math.comb(ell, ell // 2), 2 ** ell) < target

    hi = 1
    while not ok(hi):
        hi *= 2
    lo = hi // 2 + 1 if hi > 1 else 1
    # gamma is non-increasing in l
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return hi


def _power_count_for(deficit: float, target: float) -> int | None:
    """A ``d`` with ``(1 - deficit)^d < target``, or None if infeasible.

    ``d`` is the least integer above ``log(target)/log(1 - deficit)``
    inflated by a relative slack of 1e-12, which absorbs rounding in the
    logarithms; at the sizes reached here (up to ~1e308) unit steps are
    below float resolution, so no further tightening is attempted.
    """
    if not deficit > 0:
        return None
    if deficit >= 1:
        return 1
    x = math.log(target) / math.log1p(-deficit)
    if not math.isfinite(x):
        return None
    return max(1, int(x * (1 + 1e-12)) + 1)


@dataclass
class Theorem12Result:
    trace: ConstructionTrace
    report: ZeroTwoReport
    hypothesis_norms: tuple[float, float]
    zq_norm: float
    zq_norm_dual: float
    zq_deficit: float
    bound_at_n0: float
    eps: float
    holds: bool


def theorem12_experiment(
    Z: SuperOperator | None,
    family,
    S: SuperOperator,
    m,
    k,
    eps: float,
    n_schedule: Sequence | None = None,
    d_budget: int = 64,
    budget: int = 16,
    seed: int = 0,
    horizon: int = 16,
) -> Theorem12Result:
    """Derive ``(l_eps, d_eps, n_0, M)`` and verify the multi-parameter law.

    ``n_schedule`` lists offsets added to the derived ``n_0`` (default:
    coordinate and diagonal rays up to ``|offset| <= horizon``).  ``d_eps`` is
    searched directly by powers of ``ZQ`` up to ``d_budget``; past that it
    comes from ``||(ZQ)^d|| <= ||ZQ||^d`` with
    ``||ZQ|| = 1 - lambda_min(S*^l(1))``.
    """
    fam = as_family(family)
    d = len(fam)
    m, k = _as_index(m, d), _as_index(k, d)
    Z = SuperOperator.identity(fam.shape) if Z is None else Z
    unital = {"Z": is_unital_dual(Z)}
    unital.update({f"T{i + 1}": is_unital_dual(t) for i, t in enumerate(fam)})
    for name, ok in unital.items():
        if not ok:
            raise PremiseViolated(f"{name} unital", "adjoint does not fix the unit")
    _require_positive("Z", Z)
    _require_positive("S", S)
    _require_contraction("S", S)
    for i, t in enumerate(fam):
        _require_positive(f"T{i + 1}", t)
    commutation = {f"ZT{i + 1}": commutator_defect(Z, t) for i, t in enumerate(fam)}
    commutation["SZ"] = commutator_defect(S, Z)
    for name, defect in commutation.items():
        if defect > COMMUTATION_TOL:
            raise PremiseViolated(f"{name} commute", f"defect {defect:.3e}")

    tm, tk = multi_power(fam, m), multi_power(fam, k)
    zs, ztmk, ztm = Z @ S, Z @ tk @ tm, Z @ tm
    for label, big in (("T1: ZS <= ZT^(m+k)", ztmk), ("T1: ZS <= ZT^m", ztm)):
        verdict = dominance_check(zs, big, budget=budget, seed=seed)
        if not verdict:
            raise PremiseViolated(label, f"eigenvalue {verdict.min_eigenvalue:.3e}")
    hyp = (
        norm_positive(_positive_difference(ztmk, zs)),
        norm_positive(_positive_difference(ztm, zs)),
    )
    for label, val in zip(("T2: ||Z(T^(m+k) - S)|| < 1", "T2: ||Z(T^m - S)|| < 1"), hyp):
        if not val < 1 - STRICT_MARGIN:
            raise PremiseViolated(label, f"norm {val:.12g}")

    ell = ell_for_eps(eps)
    trace = q_sequence(fam, S, m, k, ell, Z=Z, keep="last")
    trace.commutation.update(commutation)
    trace.gamma = gamma_oracle(ell)
    trace.ell_eps = ell
    zq = Z @ trace.Q[ell]
    zq_norm = norm_positive(zq, assume_positive=True)
    unit = HermitianElement.unit(fam.shape)
    s_star = apply(power(adjoint(S), ell), unit)
    zq_dual = sup_norm(unit - s_star)
    deficit = float(min(np.min(ev) for ev in s_star.eigenvalues()))
    if not deficit > 0:
        raise SearchExhausted(f"||ZQ_l|| is not below 1 in floating point (deficit {deficit:.3e})")

    target = eps / 4
    d_eps, method = None, None
    zq_pow = zq
    for dd in range(1, d_budget + 1):
        if dd > 1:
            zq_pow = zq_pow @ zq
        if norm_positive(zq_pow, assume_positive=True) < target:
            d_eps, method = dd, "direct"
            break
    if d_eps is None:
        d_eps = _power_count_for(deficit, target)
        method = "submultiplicative"
        if d_eps is None:
            raise SearchExhausted(f"no d with ||ZQ||^d < {target} (deficit {deficit:.3e})")
    trace.d_eps, trace.d_method, trace.M_power = d_eps, method, d_eps
    trace.n0 = (m + k) * (d_eps * ell)
    if d_eps <= 8:
        v_table(fam, S, m, k, ell, d_eps, trace=trace)

    # unital-dual premises make every power trace preserving
    z_m = power(Z, d_eps, preserve_trace=True)
    tn0 = multi_power(fam, trace.n0, preserve_trace=True)
    bound = norm_1to1(z_m @ (tk @ tn0 - tn0), seed=seed).upper

    offsets = default_schedule(d, horizon) if n_schedule is None else [_as_index(o, d) for o in n_schedule]
    points = [trace.n0 + o for o in offsets]
    report = difference_norm_sequence(fam, k, points, eps=eps, left=z_m, seed=seed, preserve_trace=True)
    holds = all(e.upper < eps for _, e in report.samples)
    return Theorem12Result(
        trace=trace,
        report=report,
        hypothesis_norms=hyp,
        zq_norm=zq_norm,
        zq_norm_dual=zq_dual,
        zq_deficit=deficit,
        bound_at_n0=bound,
        eps=eps,
        holds=holds,
    )


@dataclass
class Corollary14Result:
    theorem12: Theorem12Result
    table: ZeroTwoReport


def corollary14_experiment(
    T: SuperOperator,
    S_map: SuperOperator,
    m0: int,
    k: int,
    eps: float = 0.1,
    n_schedule: Sequence | None = None,
    dominated: SuperOperator | None = None,
    table_size: int = 8,
    seed: int = 0,
) -> Corollary14Result:
    """Two-parameter law for commuting ``T`` and ``S_map`` with ``m = (m0, m0)``, ``k = (k, 0)``.

    ``dominated`` is the positive contraction under ``T^{m0+k} S^{m0}`` and
    ``T^{m0} S^{m0}``; it defaults to ``T^{m0} S^{m0} / 2``.  Besides the
    delegated end-to-end check, the table covers ``0 <= n, m < table_size``.
    """
    fam = CommutingFamily([T, S_map])
    m = MultiIndex((m0, m0))
    kk = MultiIndex((k, 0))
    if dominated is None:
        dominated = 0.5 * multi_power(fam, m)
    result = theorem12_experiment(None, fam, dominated, m, kk, eps, n_schedule=n_schedule, seed=seed)
    grid = [MultiIndex((a, b)) for a in range(table_size) for b in range(table_size)]
    table = difference_norm_sequence(fam, kk, grid, eps=eps, seed=seed)
    return Corollary14Result(theorem12=result, table=table)


# -- classical meet criterion --------------------------------------------------


def _require_classical(*maps: SuperOperator) -> None:
    for t in maps:
        if not (t.domain.is_diagonal and t.codomain.is_diagonal):
            raise InvalidInput("the lattice meet is only defined here for diagonal (classical) algebras")


def meet_classical(A: SuperOperator, B: SuperOperator) -> SuperOperator:
    """``A ^ B`` for kernels on ``C^N``: the entrywise minimum.

    Coordinates on a diagonal algebra are positive rescalings of point
    values, which commute with entrywise minima.
    """
    _require_classical(A, B)
    A.domain.require_same(B.domain)
    m = np.minimum(A.matrix, B.matrix)
    cert = ByConstruction("meet") if np.all(m >= 0) else None
    return SuperOperator(A.domain, A.codomain, m, cert)


@dataclass
class ZaharopolReport:
    m: int
    condition_i: float
    condition_ii: float
    implication_holds: bool
    decay: ZeroTwoReport
    decay_verified: bool


def zaharopol_check(T: SuperOperator, m: int = 1, N: int = DEFAULT_HORIZON, eps: float = DEFAULT_EPS) -> ZaharopolReport:
    """Evaluate the meet criterion ``||T^{m+1} - T^{m+1} ^ T^m|| < 1`` and the decay.

    ``condition_i`` is ``||T^{m+1} - T^m||``; the report checks (i) => (ii) on
    the instance and, when (ii) holds, that the sequence falls below ``eps``.
    """
    _require_classical(T)
    if T.matrix.min() < 0:
        raise InvalidInput("classical kernel must be entrywise nonnegative")
    a, b = power(T, m + 1), power(T, m)
    meet = meet_classical(a, b)
    gap = a - meet
    if gap.matrix.min() < 0:
        raise InvalidInput("meet exceeds T^{m+1}")
    cond_ii = norm_positive(gap.with_certificate(ByConstruction("entrywise")))
    cond_i = norm_1to1(a - b).upper
    implication = (not cond_i < 2 - STRICT_MARGIN) or cond_ii < 1
    decay = difference_norm_sequence(T, 1, range(N + 1), eps=eps)
    verified = isinstance(decay.classification, ConvergesToZero) if cond_ii < 1 else True
    return ZaharopolReport(
        m=m,
        condition_i=cond_i,
        condition_ii=cond_ii,
        implication_holds=implication,
        decay=decay,
        decay_verified=verified,
    )
