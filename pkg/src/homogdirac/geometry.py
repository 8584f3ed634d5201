"""Invariant connections, torsion and the Levi-Civita correction.

Connections are parameterized the global way: the canonical covariant
derivative differentiates a section along the right-translation flow of
the direction field, and every invariant connection differs from it by a
zero-order term given pointwise by a linear map ``gamma`` from the
tangent complement into fiber operators,

    (nabla_W xi)(x) = d/dt xi(x exp(t W(x)))|_0 + gamma(W(x)) xi(x).

``gamma`` must intertwine the subgroup actions for the zero-order term to
send equivariant sections to equivariant sections; skew-valued ``gamma``
are exactly the metric-compatible connections.  For the tangent bundle
the torsion-free choice is ``gamma(X) = (1/2) P ad_X``, which reproduces
the pointwise correction (1/2) P[V(x), W(x)] of the Levi-Civita
connection; it vanishes identically precisely on symmetric spaces.

Torsion is never evaluated through pointwise brackets of general fields
(no such formula exists); it is computed exactly on the fundamental-field
frame, where the bracket is again a fundamental field, and extended to
general arguments by module bilinearity through the frame expansion.
"""

from __future__ import annotations

import numpy as np

from .cliffordalg import CliffordAlgebra
from .groups import GroupModel
from .sections import (
    AInner,
    DerivativeOrderError,
    FundamentalField,
    MatrixKRep,
    Scale,
    Section,
    Sum,
    TangentKRep,
)

__all__ = [
    "Connection",
    "ApplyConnection",
    "canonical_connection",
    "levi_civita_connection",
    "fundamental_field",
    "tangent_frame",
    "canonical_derivative",
    "apply_connection",
    "torsion_pair",
    "torsion",
    "torsion_trace",
    "symmetric_space_check",
]

_SKEW_TOL = 1e-10
_EQUIVARIANCE_TOL = 1e-8


class Connection:
    """An invariant connection: the canonical one plus a pointwise correction.

    ``gamma`` holds one fiber operator per tangent-complement basis vector;
    the correction applied to a section is the operator ``gamma(W(x))``
    (extended to a derivation of the Clifford bundle when the section is
    Clifford-valued, which requires skew values).
    """

    def __init__(self, group: GroupModel, gamma: np.ndarray | None = None,
                 fiber_krep: MatrixKRep | None = None, name: str = "connection",
                 fiber_dim: int | None = None):
        self.group = group
        self.name = name
        h = fiber_dim if fiber_dim is not None else group.m_dim
        if gamma is None:
            gamma = np.zeros((group.m_dim, h, h))
        self.gamma = np.asarray(gamma, dtype=complex)
        if self.gamma.shape[0] != group.m_dim or self.gamma.shape[1] != self.gamma.shape[2]:
            raise ValueError("gamma must hold one square fiber operator per tangent direction")
        self.fiber_dim = self.gamma.shape[1]
        self.is_canonical = bool(np.all(self.gamma == 0))
        skew_defect = max(
            (float(np.linalg.norm(gm + gm.conj().T)) for gm in self.gamma), default=0.0)
        self.is_compatible = skew_defect <= _SKEW_TOL * max(
            1.0, float(np.linalg.norm(self.gamma)))
        self._fiber_krep = fiber_krep if fiber_krep is not None else TangentKRep(group)
        self._check_equivariance()
        self._derivation_stacks: dict = {}
        self._torsion_pairs: dict = {}

    def _check_equivariance(self) -> None:
        """gamma(Ad_s X) = pi_s gamma(X) pi_s^{-1} on subgroup samples."""
        if self.is_canonical:
            return
        worst = 0.0
        tangent = TangentKRep(self.group)
        for s in self.group.k_rule.nodes:
            ts = tangent.matrix(s).real
            ps = self._fiber_krep.matrix(s)
            lhs = np.einsum("ba,bij->aij", ts, self.gamma)  # gamma(Ad_s u_a)
            rhs = np.einsum("ij,ajk,lk->ail", ps, self.gamma, ps.conj())
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        if worst > _EQUIVARIANCE_TOL:
            raise ValueError(
                f"gamma violates the subgroup intertwining condition (residual {worst:.2e})")

    def gamma_of(self, w: np.ndarray) -> np.ndarray:
        """The fiber operator gamma(w) for tangent-frame coordinates w."""
        return np.einsum("a,aij->ij", np.asarray(w), self.gamma)

    def derivation_stack(self, algebra: CliffordAlgebra) -> np.ndarray:
        """Derivation matrices extending each gamma(u_a) to the Clifford algebra."""
        hit = self._derivation_stacks.get(id(algebra))
        if hit is not None:
            return hit[1]
        if not self.is_compatible:
            raise ValueError("only skew-valued corrections extend to the Clifford bundle")
        if self.fiber_dim != self.group.m_dim:
            raise ValueError("Clifford extension needs a tangent-bundle connection")
        stack = algebra.derivation_stack(self.gamma.real)
        self._derivation_stacks[id(algebra)] = (algebra, stack)
        return stack

    def __repr__(self) -> str:  # pragma: no cover
        return f"Connection({self.name}, canonical={self.is_canonical})"


def canonical_connection(group: GroupModel, fiber_krep=None,
                         fiber_dim: int | None = None) -> Connection:
    return Connection(group, None, fiber_krep, "canonical", fiber_dim)


def levi_civita_connection(group: GroupModel) -> Connection:
    """The metric-compatible torsion-free connection on the tangent bundle.

    gamma(u_a) = (1/2) P ad_{u_a} restricted to the tangent complement; on
    symmetric spaces this vanishes and the canonical connection is already
    torsion-free.
    """
    p = group.m_dim
    gamma = np.zeros((p, p, p))
    for a in range(p):
        ad = np.einsum("abc,a->cb", group.structure, group.from_m(np.eye(p)[a]))
        gamma[a] = 0.5 * group.m_frame @ ad @ group.m_frame.T
    return Connection(group, gamma, name="levi-civita")


def fundamental_field(group: GroupModel, coords: np.ndarray) -> FundamentalField:
    """The tangent section generated by an algebra vector."""
    return FundamentalField(group, coords)


def tangent_frame(group: GroupModel, basis: np.ndarray | None = None) -> list:
    """Fundamental fields of an orthonormal algebra basis; a module frame.

    With no basis given, the group's own orthonormal basis is used (in
    declared order) and the frame is cached on the group's quadrature
    cache, so shared subgraphs are evaluated once.
    """
    if basis is None:
        cache = getattr(group, "_frame_cache", None)
        if cache is None:
            cache = [FundamentalField(group, np.eye(group.dim)[j]) for j in range(group.dim)]
            group._frame_cache = cache
        return cache
    basis = np.asarray(basis, dtype=float)
    if np.linalg.norm(basis @ basis.T - np.eye(group.dim)) > 1e-10:
        raise ValueError("frame basis must be orthonormal")
    return [FundamentalField(group, basis[j]) for j in range(group.dim)]


class ApplyConnection(Section):
    """Covariant derivative of a section along a tangent direction field.

    The result supports no further exact directional derivatives (the
    engine budgets one derivative per generator), so its order is zero.
    """

    def __init__(self, connection: Connection, direction: Section, target: Section):
        if direction.codomain.kind != "tangent":
            raise ValueError("connection directions must be tangent sections")
        if target.deriv_order < 1:
            raise DerivativeOrderError("target section has no derivative budget left")
        kind = target.codomain.kind
        if kind == "vector" and target.codomain.shape[0] != connection.fiber_dim:
            raise ValueError("section fiber does not match the connection")
        if kind == "operator":
            raise ValueError("covariant derivatives of operator sections are not needed here")
        self.connection = connection
        self.children = (direction, target)
        self.codomain = target.codomain
        self.deriv_order = 0
        self.bandwidth = target.bandwidth + direction.bandwidth
        self.group = connection.group
        self.krep = target.krep if direction.krep is not None else None
        self._algebra = None

    def set_algebra(self, algebra: CliffordAlgebra) -> "ApplyConnection":
        self._algebra = algebra
        return self

    def _values(self, pts) -> np.ndarray:
        direction, target = self.children
        g = self.group
        wvals = direction.values(pts)  # tangent-frame coordinates, possibly complex
        dirs = wvals @ g.m_frame.astype(complex)
        out = target.derivs(pts, dirs)
        conn = self.connection
        if conn.is_canonical:
            return out
        kind = target.codomain.kind
        if kind == "scalar":
            return out
        if kind in ("vector", "tangent"):
            return out + np.einsum("na,aij,nj->ni", wvals, conn.gamma, target.values(pts))
        if kind == "clifford":
            if self._algebra is None:
                raise ValueError("Clifford covariant derivative needs the algebra set")
            dstack = conn.derivation_stack(self._algebra)
            return out + np.einsum("na,aij,nj->ni", wvals, dstack, target.values(pts))
        raise ValueError(f"unsupported codomain {kind}")  # pragma: no cover

    def _derivs(self, pts, dirs):  # pragma: no cover - guarded by deriv_order
        raise DerivativeOrderError("covariant derivatives are exact to first order only")


def apply_connection(connection: Connection, direction: Section, target: Section,
                     algebra: CliffordAlgebra | None = None) -> Section:
    node = ApplyConnection(connection, direction, target)
    if algebra is not None:
        node.set_algebra(algebra)
    return node


def canonical_derivative(group: GroupModel, direction: Section, target: Section) -> Section:
    """The canonical covariant derivative (zero correction) along a direction field."""
    cache = getattr(group, "_canonical_conn", None)
    if cache is None:
        cache = canonical_connection(group)
        group._canonical_conn = cache
    return ApplyConnection(cache, direction, target)


def torsion_pair(connection: Connection, i: int, j: int) -> Section:
    """Torsion on a pair of frame fundamental fields, computed exactly.

    The bracket of fundamental fields is the fundamental field of the
    bracket, so no second derivatives are required.
    """
    key = (i, j)
    cached = connection._torsion_pairs.get(key)
    if cached is not None:
        return cached
    g = connection.group
    frame = tangent_frame(g)
    br = g.bracket(np.eye(g.dim)[i], np.eye(g.dim)[j])
    section = Sum([
        ApplyConnection(connection, frame[i], frame[j]),
        ApplyConnection(connection, frame[j], frame[i]),
        FundamentalField(g, br),
    ], [1.0, -1.0, -1.0])
    connection._torsion_pairs[key] = section
    return section


def torsion(connection: Connection, v: Section, w: Section) -> Section:
    """Torsion of the connection on two tangent sections.

    Extended from frame pairs by module bilinearity: general arguments are
    expanded through the frame with their pointwise frame coefficients.
    """
    g = connection.group
    frame = tangent_frame(g)
    terms = []
    for i in range(g.dim):
        ci = AInner(frame[i], v)
        for j in range(g.dim):
            cj = AInner(frame[j], w)
            terms.append(Scale(Scale(torsion_pair(connection, i, j), ci), cj))
    return Sum(terms)


def torsion_trace(connection: Connection, u: Section,
                  frame: list | None = None) -> Section:
    """The scalar section summing <T(u, W_j), W_j> over a module frame."""
    g = connection.group
    frame = frame if frame is not None else tangent_frame(g)
    return Sum([AInner(torsion(connection, u, wj), wj) for wj in frame])


def symmetric_space_check(group: GroupModel) -> tuple:
    """(is_symmetric, residual): whether tangent brackets fall into the isotropy algebra."""
    residual = group.symmetric_space_residual()
    return residual <= 1e-12, residual
