"""Constructors for positive maps with by-construction certificates."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .algebra import AlgebraShape
from .errors import InvalidInput, TracePreservationViolated
from .superop import ByConstruction, SuperOperator, compose, unit_coords

TP_TOL = 1e-10


def _per_block(shape: AlgebraShape, op) -> list[np.ndarray]:
    """Accept one matrix for single-block shapes or a list of per-block matrices."""
    if shape.nblocks == 1:
        arr = np.asarray(op, dtype=complex)
        blocks = [arr[0] if arr.ndim == 3 and len(arr) == 1 else arr]
    else:
        blocks = [np.asarray(b, dtype=complex) for b in op]
    if len(blocks) != shape.nblocks:
        raise InvalidInput(f"expected {shape.nblocks} per-block matrices, got {len(blocks)}")
    for b, n in zip(blocks, shape.dims):
        if b.shape != (n, n):
            raise InvalidInput(f"block matrix of shape {b.shape} for block of size {n}")
    return blocks


def kraus(shape: AlgebraShape, operators: Sequence, require_tp: bool = False) -> SuperOperator:
    """``x -> sum_i K_i x K_i*`` with block-diagonal Kraus operators."""
    if not len(operators):
        raise InvalidInput("at least one Kraus operator is required")
    ks = [_per_block(shape, k) for k in operators]
    if require_tp:
        defect = 0.0
        for b, n in enumerate(shape.dims):
            s = sum(k[b].conj().T @ k[b] for k in ks)
            defect = max(defect, float(np.max(np.abs(s - np.eye(n)))))
        if defect > TP_TOL:
            raise TracePreservationViolated(defect)

    def f(blocks):
        return [sum(k[b] @ x @ k[b].conj().T for k in ks) for b, x in enumerate(blocks)]

    return SuperOperator.from_blockmap(shape, shape, f, ByConstruction("kraus"))


def unitary_conjugation(shape: AlgebraShape, u) -> SuperOperator:
    blocks = _per_block(shape, u)
    for b in blocks:
        if np.max(np.abs(b.conj().T @ b - np.eye(len(b)))) > 1e-10:
            raise InvalidInput("conjugation needs a unitary")
    return kraus(shape, [blocks])


def swap_conjugation() -> SuperOperator:
    """Qubit conjugation by ``[[0, 1], [1, 0]]``: an involution with ``||T - I|| = 2``."""
    shape = AlgebraShape([2])
    return unitary_conjugation(shape, [[0, 1], [1, 0]])


def depolarizing(shape: AlgebraShape, p: float) -> SuperOperator:
    """``x -> (1 - p) x + p tau(x)/tau(1) 1``."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidInput(f"depolarizing parameter must lie in [0, 1], got {p}")
    u = unit_coords(shape)
    m = (1.0 - p) * np.eye(shape.dim) + p * np.outer(u, u) / shape.unit_mass
    return SuperOperator(shape, shape, m, ByConstruction("depolarizing"))


def permutation(shape: AlgebraShape, perms) -> SuperOperator:
    """``x -> P x P*`` blockwise, where ``P e_i = e_{perm[i]}``."""
    if shape.nblocks == 1 and perms and np.ndim(perms[0]) == 0:
        perms = [perms]
    if len(perms) != shape.nblocks:
        raise InvalidInput("one permutation per block is required")
    mats = []
    for perm, n in zip(perms, shape.dims):
        perm = [int(i) for i in perm]
        if sorted(perm) != list(range(n)):
            raise InvalidInput(f"{perm} is not a permutation of range({n})")
        p = np.zeros((n, n))
        p[perm, range(n)] = 1.0
        mats.append(p)
    return kraus(shape, [mats]).with_certificate(ByConstruction("permutation"))


def stochastic(a, weights: Sequence[float] | None = None) -> SuperOperator:
    """Markov kernel on the commutative algebra ``C^N``.

    ``a`` acts on masses ``mu_i = w_i x_i`` (``mu' = a mu``), so the map is
    trace preserving exactly when every column of ``a`` sums to one.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput("stochastic kernel must be a square matrix")
    if np.any(a < 0):
        raise InvalidInput("stochastic kernel must have nonnegative entries")
    shape = AlgebraShape.diagonal(a.shape[0], weights)
    s = np.sqrt(np.asarray(shape.weights))
    return SuperOperator(shape, shape, (a * s[None, :]) / s[:, None], ByConstruction("stochastic"))


def schur(shape: AlgebraShape, c) -> SuperOperator:
    """Schur multiplier ``x -> C o x`` for PSD ``C`` with unit diagonal."""
    cs = _per_block(shape, c)
    for m in cs:
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise InvalidInput("Schur multiplier must be Hermitian")
        if np.max(np.abs(np.diag(m) - 1)) > 1e-12:
            raise InvalidInput("Schur multiplier must have unit diagonal")
        if np.linalg.eigvalsh(m)[0] < -1e-12:
            raise InvalidInput("Schur multiplier must be positive semidefinite")

    def f(blocks):
        return [m * x for m, x in zip(cs, blocks)]

    return SuperOperator.from_blockmap(shape, shape, f, ByConstruction("schur"))


def convex(terms: Sequence[tuple[float, SuperOperator]]) -> SuperOperator:
    if not terms:
        raise InvalidInput("empty convex combination")
    lams = np.array([float(t[0]) for t in terms])
    if np.any(lams < 0) or abs(lams.sum() - 1.0) > 1e-12:
        raise InvalidInput(f"convex weights must be >= 0 and sum to 1, got {lams.tolist()}")
    first = terms[0][1]
    for _, t in terms:
        first.domain.require_same(t.domain)
        first.codomain.require_same(t.codomain)
    m = sum(lam * t.matrix for lam, (_, t) in zip(lams, terms))
    cert = ByConstruction("convex") if all(t.is_certified_positive for _, t in terms) else None
    return SuperOperator(first.domain, first.codomain, m, cert)


def commuting_family(shape: AlgebraShape, members: Sequence[dict]) -> list[SuperOperator]:
    """Maps ``T_i = Schur(C_i) o Depolarizing(p_i)`` with real ``C_i``.

    All members are diagonal in the coordinate basis on the off-diagonal
    directions and act as ``a I + b Pi`` (``Pi`` the trace projection) on the
    diagonal ones, so they commute pairwise.
    """
    out = []
    for spec in members:
        extra = set(spec) - {"p", "schur"}
        if extra:
            raise InvalidInput(f"unknown commuting-family keys {sorted(extra)}")
        t = depolarizing(shape, spec.get("p", 0.0))
        if spec.get("schur") is not None:
            cs = _per_block(shape, spec["schur"])
            if any(np.max(np.abs(c.imag)) > 0 for c in cs):
                raise InvalidInput("commuting family needs real Schur multipliers")
            t = compose(schur(shape, cs), t)
        out.append(t)
    return out


def make_channel(kind: str, params: dict[str, Any] | None = None, shape: AlgebraShape | None = None):
    """Build a map from a config-style description.

    ``shape`` is required for every kind except ``stochastic``, ``swap`` and
    ``convex`` (whose terms carry their own shapes).  ``commuting_family``
    returns a list of maps.
    """
    params = dict(params or {})

    def need_shape():
        if shape is None:
            raise InvalidInput(f"channel kind {kind!r} needs an algebra shape")
        return shape

    if kind == "kraus":
        ops = [_complex_matrix(k) for k in params.pop("operators")]
        return kraus(need_shape(), ops, **params)
    if kind == "unitary":
        return unitary_conjugation(need_shape(), _complex_matrix(params["u"]))
    if kind == "swap":
        return swap_conjugation()
    if kind == "depolarizing":
        return depolarizing(need_shape(), params["p"])
    if kind == "permutation":
        return permutation(need_shape(), params["perm"])
    if kind == "stochastic":
        return stochastic(params["matrix"], params.get("weights"))
    if kind == "schur":
        return schur(need_shape(), _complex_matrix(params["c"]))
    if kind == "identity":
        return SuperOperator.identity(need_shape())
    if kind == "scaled":
        inner = make_channel(params["of"]["kind"], params["of"].get("params"), shape)
        return float(params["factor"]) * inner
    if kind == "convex":
        return convex(
            [(t["weight"], make_channel(t["kind"], t.get("params"), shape)) for t in params["terms"]]
        )
    if kind == "commuting_family":
        return commuting_family(need_shape(), params["members"])
    raise InvalidInput(f"unknown channel kind {kind!r}")


def _complex_matrix(obj):
    """Decode a matrix literal: rows of ``[re, im]`` pairs (plain reals allowed).

    A list of such literals (one per block) decodes to a list of matrices.
    """
    try:
        arr = np.asarray(obj, dtype=float)
    except ValueError:  # ragged: per-block matrices of different sizes
        return [_complex_matrix(b) for b in obj]
    if arr.ndim == 2:
        return arr.astype(complex)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 4 and arr.shape[-1] == 2:
        return [b[..., 0] + 1j * b[..., 1] for b in arr]
    raise InvalidInput(f"cannot read a matrix literal of shape {arr.shape}")
