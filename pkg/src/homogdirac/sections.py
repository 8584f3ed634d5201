"""Exactly differentiable function engine on a compact group.

Sections are immutable expression graphs.  Each node knows how to produce
its values on a batch of group elements and the exact first derivative of
``t -> value(x . exp(t Y))`` at ``t = 0`` (the right-direction derivative
that every covariant-derivative formula in this package consumes).  The
left-translation derivative is a separate primitive (:func:`lambda_deriv`)
and the two are never interchanged; identities relating them go through
explicit formulas.

Derivatives are symbolic per node, never finite differences; finite
differencing appears only in the test suite as an independent oracle.
Evaluation is batched: an :class:`EvalPoints` wraps a list of group
elements and caches representation stacks and node values, so quadrature
loops over shared subgraphs cost one pass per node.  Each node carries a
conservative bandwidth bound (total spin of its Peter-Weyl content) that
:func:`l2_inner` checks against the quadrature rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cliffordalg import CliffordAlgebra
from .groups import GroupElement, GroupModel, QuadratureRule
from .reps import UnitaryRep

__all__ = [
    "Codomain",
    "EvalPoints",
    "Section",
    "Constant",
    "MatrixCoefficient",
    "FundamentalField",
    "Sum",
    "Scale",
    "CliffordProduct",
    "AInner",
    "Translate",
    "KAverage",
    "RealPart",
    "ImagPart",
    "EmbedTangent",
    "RankOne",
    "ConjugatedProjection",
    "GramSection",
    "OpApply",
    "HarmonicSpinor",
    "TrivialKRep",
    "MatrixKRep",
    "RestrictedKRep",
    "TangentKRep",
    "CliffordKRep",
    "OperatorKRep",
    "evaluate",
    "directional_deriv",
    "translate",
    "a_inner",
    "l2_inner",
    "equivariant_project",
    "lambda_deriv",
    "equivariance_defect",
    "BandwidthWarning",
    "DerivativeOrderError",
]


class BandwidthWarning(UserWarning):
    """Integrand bandwidth bound exceeds the quadrature rule's exactness."""


class DerivativeOrderError(RuntimeError):
    """A directional derivative was requested beyond a node's exact order."""


@dataclass(frozen=True)
class Codomain:
    """Value type of a section: kind plus coefficient shape."""

    kind: str  # scalar | vector | tangent | clifford | operator
    shape: tuple

    @staticmethod
    def scalar() -> "Codomain":
        return Codomain("scalar", ())

    @staticmethod
    def vector(dim: int) -> "Codomain":
        return Codomain("vector", (dim,))

    @staticmethod
    def tangent(group: GroupModel) -> "Codomain":
        return Codomain("tangent", (group.m_dim,))

    @staticmethod
    def clifford(algebra: CliffordAlgebra) -> "Codomain":
        return Codomain("clifford", (algebra.n,))

    @staticmethod
    def operator(dim: int) -> "Codomain":
        return Codomain("operator", (dim, dim))


class EvalPoints:
    """A batch of group elements with shared evaluation caches."""

    def __init__(self, group: GroupModel, matrices: np.ndarray, elements=None):
        self.group = group
        self.matrices = np.asarray(matrices, dtype=complex)
        self._elements = list(elements) if elements is not None else None
        self._reps: dict = {}
        self._ad: np.ndarray | None = None
        self._vals: dict = {}
        self._right: dict = {}
        self._left: dict = {}
        self._parent = None  # (kind, factor_rep_input, parent)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def of(cls, group: GroupModel, elements) -> "EvalPoints":
        elements = list(elements)
        return cls(group, np.stack([e.matrix for e in elements]), elements)

    @classmethod
    def for_rule(cls, group: GroupModel, rule: QuadratureRule) -> "EvalPoints":
        pts = rule.cache.get("pts")
        if pts is None or pts.group is not group:
            pts = cls.of(group, rule.nodes)
            rule.cache["pts"] = pts
        return pts

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def elements(self) -> list:
        if self._elements is None:
            self._elements = [GroupElement(m) for m in self.matrices]
        return self._elements

    # -- translated batches ----------------------------------------------------

    def right_translated(self, s: GroupElement) -> "EvalPoints":
        # cache entries hold (key_object, value) so the id keys stay alive
        hit = self._right.get(id(s))
        if hit is not None:
            return hit[1]
        child = EvalPoints(self.group, self.matrices @ s.matrix)
        child._parent = ("right", s, self)
        self._right[id(s)] = (s, child)
        return child

    def left_translated(self, y_inv: GroupElement) -> "EvalPoints":
        hit = self._left.get(id(y_inv))
        if hit is not None:
            return hit[1]
        child = EvalPoints(self.group, y_inv.matrix @ self.matrices)
        child._parent = ("left", y_inv, self)
        self._left[id(y_inv)] = (y_inv, child)
        return child

    # -- cached stacks ----------------------------------------------------------

    def rep_stack(self, rep: UnitaryRep) -> np.ndarray:
        hit = self._reps.get(id(rep))
        if hit is not None:
            return hit[1]
        if self._parent is not None:
            kind, factor, parent = self._parent
            base = parent.rep_stack(rep)
            stack = base @ rep.matrix(factor) if kind == "right" else rep.matrix(factor) @ base
        else:
            stack = rep.matrix_stack(self.matrices)
        self._reps[id(rep)] = (rep, stack)
        return stack

    def ad_stack(self) -> np.ndarray:
        """Adjoint matrices Ad_x for each point, in the orthonormal basis."""
        if self._ad is None:
            g = self.group
            if self._parent is not None:
                kind, factor, parent = self._parent
                ad_f = g.adjoint_matrix(factor)
                self._ad = parent.ad_stack() @ ad_f if kind == "right" else ad_f @ parent.ad_stack()
            else:
                conj = np.einsum("nij,ajk,nlk->nail", self.matrices, g.basis,
                                 self.matrices.conj())
                self._ad = (np.einsum("bij,naji->nba", g.basis, conj)
                            * (-g.form_factor)).real
        return self._ad

    def node_values(self, node: "Section") -> np.ndarray:
        hit = self._vals.get(id(node))
        if hit is not None:
            return hit[1]
        vals = node._values(self)
        self._vals[id(node)] = (node, vals)
        return vals


# -- equivariance actions of the subgroup ---------------------------------------


class TrivialKRep:
    """Trivial action; tags right-K-invariant scalar sections."""

    def matrix(self, s: GroupElement) -> np.ndarray:
        return np.eye(1)

    def apply(self, s: GroupElement, values: np.ndarray) -> np.ndarray:
        return values

    def apply_inverse(self, s: GroupElement, values: np.ndarray) -> np.ndarray:
        return values


class MatrixKRep:
    """Action through a unitary matrix-valued function of subgroup elements."""

    def __init__(self, matrix_fn, dim: int):
        self._fn = matrix_fn
        self.dim = dim

    def matrix(self, s: GroupElement) -> np.ndarray:
        # keep self alive in the entry so the id key cannot be recycled
        key = ("krep", id(self))
        hit = s._cache.get(key)
        if hit is not None:
            return hit[1]
        m = self._fn(s)
        s._cache[key] = (self, m)
        return m

    def apply(self, s: GroupElement, values: np.ndarray) -> np.ndarray:
        return np.einsum("ij,...j->...i", self.matrix(s), values)

    def apply_inverse(self, s: GroupElement, values: np.ndarray) -> np.ndarray:
        return np.einsum("ji,...j->...i", self.matrix(s).conj(), values)


def RestrictedKRep(rep: UnitaryRep, embed: np.ndarray) -> MatrixKRep:
    """Subgroup action on an invariant subspace: E* rho(s) E."""
    e = np.asarray(embed, dtype=complex)
    return MatrixKRep(lambda s: e.conj().T @ rep.matrix(s) @ e, e.shape[1])


def TangentKRep(group: GroupModel) -> MatrixKRep:
    """Adjoint action on the tangent complement, in complement-frame coordinates."""
    mf = group.m_frame
    return MatrixKRep(lambda s: (mf @ group.adjoint_matrix(s) @ mf.T).astype(complex),
                      group.m_dim)


def CliffordKRep(group: GroupModel, algebra: CliffordAlgebra) -> MatrixKRep:
    """Adjoint action extended to the Clifford algebra as automorphisms."""
    mf = group.m_frame

    def fn(s: GroupElement) -> np.ndarray:
        return algebra.orthogonal_extend(mf @ group.adjoint_matrix(s) @ mf.T).astype(complex)

    return MatrixKRep(fn, algebra.n)


class OperatorKRep:
    """Conjugation action on operator-valued sections: T -> pi_s T pi_s^{-1}."""

    def __init__(self, inner: MatrixKRep):
        self.inner = inner

    def matrix(self, s: GroupElement) -> np.ndarray:  # pragma: no cover
        raise TypeError("operator actions act by conjugation, not matrices")

    def apply(self, s: GroupElement, values: np.ndarray) -> np.ndarray:
        m = self.inner.matrix(s)
        return np.einsum("ij,...jk,lk->...il", m, values, m.conj())

    def apply_inverse(self, s: GroupElement, values: np.ndarray) -> np.ndarray:
        m = self.inner.matrix(s)
        return np.einsum("ji,...jk,kl->...il", m.conj(), values, m)


# -- section nodes ----------------------------------------------------------------


class Section:
    """Base node: immutable, with batched values and exact first derivatives."""

    codomain: Codomain
    deriv_order: int
    bandwidth: float
    krep = None

    def _values(self, pts: EvalPoints) -> np.ndarray:
        raise NotImplementedError

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- public API -----------------------------------------------------------

    def values(self, pts: EvalPoints) -> np.ndarray:
        return pts.node_values(self)

    def derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        # directions may be complex: covariant derivatives extend linearly
        # in the direction field over complexified sections
        if self.deriv_order < 1:
            raise DerivativeOrderError(
                f"{type(self).__name__} supports no exact directional derivative")
        return self._derivs(pts, np.asarray(dirs))

    def value(self, x: GroupElement, group: GroupModel | None = None):
        pts = EvalPoints.of(group or self._group(), [x])
        return self.values(pts)[0]

    def deriv(self, x: GroupElement, direction: np.ndarray,
              group: GroupModel | None = None):
        pts = EvalPoints.of(group or self._group(), [x])
        return self.derivs(pts, np.asarray(direction)[None])[0]

    def _group(self) -> GroupModel:
        g = _find_group(self)
        if g is None:
            raise ValueError("cannot infer the group; pass it explicitly")
        return g

    def _lambda(self, coords: np.ndarray) -> "Section":
        raise NotImplementedError(
            f"left-translation derivative unsupported for {type(self).__name__}")


def _find_group(node) -> GroupModel | None:
    g = getattr(node, "group", None)
    if g is not None:
        return g
    for child in getattr(node, "children", ()):  # type: ignore[attr-defined]
        g = _find_group(child)
        if g is not None:
            return g
    return None


def _broadcast_scalar(scalar_vals: np.ndarray, codomain: Codomain) -> np.ndarray:
    return scalar_vals.reshape(scalar_vals.shape + (1,) * len(codomain.shape))


class Constant(Section):
    """A constant section."""

    def __init__(self, codomain: Codomain, value, krep=None, group=None):
        self.codomain = codomain
        self.const = np.asarray(value, dtype=complex).reshape(codomain.shape)
        self.deriv_order = 1
        self.bandwidth = 0.0
        self.krep = krep
        self.group = group
        self.children = ()

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return np.broadcast_to(self.const, (pts.n,) + self.codomain.shape).copy()

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        return np.zeros((pts.n,) + self.codomain.shape, dtype=complex)

    def _lambda(self, coords: np.ndarray) -> Section:
        return Constant(self.codomain, np.zeros(self.codomain.shape), group=self.group)


class MatrixCoefficient(Section):
    """The scalar section x -> <u, rho(x) v> (linear in the second slot)."""

    def __init__(self, rep: UnitaryRep, u: np.ndarray, v: np.ndarray):
        self.rep = rep
        self.group = rep.group
        self.u = np.asarray(u, dtype=complex)
        self.v = np.asarray(v, dtype=complex)
        self.codomain = Codomain.scalar()
        self.deriv_order = 1
        self.bandwidth = rep.spin
        self.children = ()

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return np.einsum("i,nij,j->n", self.u.conj(), pts.rep_stack(self.rep), self.v)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        dv = np.einsum("na,aij,j->ni", dirs, self.rep.generators, self.v)
        return np.einsum("i,nij,nj->n", self.u.conj(), pts.rep_stack(self.rep), dv)

    def _lambda(self, coords: np.ndarray) -> Section:
        return MatrixCoefficient(self.rep, self.rep.derivative(coords) @ self.u, self.v)


class FundamentalField(Section):
    """The tangent section generated by an algebra vector.

    Its value is minus the tangent projection of the inverse-adjoint image
    of the generator, expressed in complement-frame coordinates, and its
    right derivative is the projected bracket of the direction with that
    inverse-adjoint image.
    """

    def __init__(self, group: GroupModel, coords: np.ndarray):
        self.group = group
        self.x_coords = np.asarray(coords, dtype=float)
        self.codomain = Codomain.tangent(group)
        self.deriv_order = 1
        self.bandwidth = group.ad_bandwidth
        self.krep = TangentKRep(group)
        self.children = ()

    def _pulled(self, pts: EvalPoints) -> np.ndarray:
        # Ad_x^{-1} X = Ad_x^T X for orthogonal adjoint matrices
        return np.einsum("nba,b->na", pts.ad_stack(), self.x_coords)

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return -np.einsum("pa,na->np", self.group.m_frame, self._pulled(pts)).astype(complex)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        br = np.einsum("abc,na,nb->nc", self.group.structure, dirs, self._pulled(pts))
        return np.einsum("pa,na->np", self.group.m_frame, br).astype(complex)

    def _lambda(self, coords: np.ndarray) -> Section:
        return FundamentalField(self.group, self.group.bracket(coords, self.x_coords))


class Sum(Section):
    """Linear combination of sections with constant coefficients."""

    def __init__(self, children, coeffs=None):
        children = list(children)
        if not children:
            raise ValueError("empty sum")
        cod = children[0].codomain
        if any(c.codomain != cod for c in children):
            raise ValueError("summands have mismatched codomains")
        self.children = tuple(children)
        self.coeffs = (np.ones(len(children), dtype=complex) if coeffs is None
                       else np.asarray(coeffs, dtype=complex))
        self.codomain = cod
        self.deriv_order = min(c.deriv_order for c in children)
        self.bandwidth = max(c.bandwidth for c in children)
        self.group = _find_group(self)
        if all(isinstance(c.krep, TrivialKRep) for c in children):
            self.krep = TrivialKRep()
        elif len({id(c.krep) for c in children}) == 1:
            self.krep = children[0].krep
        else:
            self.krep = None

    def _values(self, pts: EvalPoints) -> np.ndarray:
        out = self.coeffs[0] * self.children[0].values(pts)
        for c, child in zip(self.coeffs[1:], self.children[1:]):
            out = out + c * child.values(pts)
        return out

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        out = self.coeffs[0] * self.children[0].derivs(pts, dirs)
        for c, child in zip(self.coeffs[1:], self.children[1:]):
            out = out + c * child.derivs(pts, dirs)
        return out

    def _lambda(self, coords: np.ndarray) -> Section:
        return Sum([c._lambda(coords) for c in self.children], self.coeffs)


class Scale(Section):
    """Pointwise module action: a section scaled by a scalar section."""

    def __init__(self, child: Section, scalar: Section):
        if scalar.codomain.kind != "scalar":
            raise ValueError("scale factor must be a scalar section")
        self.children = (child, scalar)
        self.codomain = child.codomain
        self.deriv_order = min(child.deriv_order, scalar.deriv_order)
        self.bandwidth = child.bandwidth + scalar.bandwidth
        self.group = _find_group(self)
        # the module action of an invariant scalar preserves equivariance
        self.krep = child.krep if scalar.krep is not None else None

    def _values(self, pts: EvalPoints) -> np.ndarray:
        child, scalar = self.children
        return child.values(pts) * _broadcast_scalar(scalar.values(pts), self.codomain)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        child, scalar = self.children
        return (child.derivs(pts, dirs) * _broadcast_scalar(scalar.values(pts), self.codomain)
                + child.values(pts) * _broadcast_scalar(scalar.derivs(pts, dirs), self.codomain))

    def _lambda(self, coords: np.ndarray) -> Section:
        child, scalar = self.children
        return Sum([Scale(child._lambda(coords), scalar),
                    Scale(child, scalar._lambda(coords))])


class CliffordProduct(Section):
    """Pointwise Clifford product of two Clifford-valued sections."""

    def __init__(self, algebra: CliffordAlgebra, a: Section, b: Section):
        if a.codomain.kind != "clifford" or b.codomain.kind != "clifford":
            raise ValueError("both factors must be Clifford-valued")
        if a.codomain != b.codomain:
            raise ValueError("factors live in different algebras")
        self.algebra = algebra
        self.children = (a, b)
        self.codomain = a.codomain
        self.deriv_order = min(a.deriv_order, b.deriv_order)
        self.bandwidth = a.bandwidth + b.bandwidth
        self.group = _find_group(self)
        self.krep = a.krep if (a.krep is not None and b.krep is not None) else None

    def _values(self, pts: EvalPoints) -> np.ndarray:
        a, b = self.children
        return self.algebra.mul(a.values(pts), b.values(pts))

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        a, b = self.children
        return (self.algebra.mul(a.derivs(pts, dirs), b.values(pts))
                + self.algebra.mul(a.values(pts), b.derivs(pts, dirs)))

    def _lambda(self, coords: np.ndarray) -> Section:
        a, b = self.children
        return Sum([CliffordProduct(self.algebra, a._lambda(coords), b),
                    CliffordProduct(self.algebra, a, b._lambda(coords))])


def _pairing(vals_a: np.ndarray, vals_b: np.ndarray) -> np.ndarray:
    prod = vals_a.conj() * vals_b
    return prod.reshape(prod.shape[0], -1).sum(axis=1)


class AInner(Section):
    """Pointwise fiber inner product, Hermitian in the first slot.

    For vector sections this is the Hilbert-space pairing, for tangent
    sections the Riemannian metric, and for Clifford sections the trace
    pairing tau(a* . b); all reduce to coordinate pairings because the
    bases used are orthonormal for the corresponding fiber products.
    """

    def __init__(self, a: Section, b: Section):
        if a.codomain != b.codomain:
            raise ValueError("fiber inner product needs matching codomains")
        if a.codomain.kind == "operator":
            raise ValueError("operator sections have no fiber inner product here")
        self.children = (a, b)
        self.codomain = Codomain.scalar()
        self.deriv_order = min(a.deriv_order, b.deriv_order)
        self.bandwidth = a.bandwidth + b.bandwidth
        self.group = _find_group(self)
        self.krep = TrivialKRep() if (a.krep is not None and b.krep is not None) else None

    def _values(self, pts: EvalPoints) -> np.ndarray:
        a, b = self.children
        return _pairing(a.values(pts), b.values(pts))

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        a, b = self.children
        return (_pairing(a.derivs(pts, dirs), b.values(pts))
                + _pairing(a.values(pts), b.derivs(pts, dirs)))

    def _lambda(self, coords: np.ndarray) -> Section:
        a, b = self.children
        return Sum([AInner(a._lambda(coords), b), AInner(a, b._lambda(coords))])


class Translate(Section):
    """Left translation: value(x) = child(y^{-1} x)."""

    def __init__(self, child: Section, y: GroupElement):
        self.children = (child,)
        self.y = y
        self.codomain = child.codomain
        self.deriv_order = child.deriv_order
        self.bandwidth = child.bandwidth
        self.group = _find_group(self)
        self.krep = child.krep

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return self.children[0].values(pts.left_translated(self.y.inverse))

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        # right-direction derivatives commute with left translation
        return self.children[0].derivs(pts.left_translated(self.y.inverse), dirs)

    def _lambda(self, coords: np.ndarray) -> Section:
        pulled = self.group.adjoint(self.y.inverse, coords)
        return Translate(self.children[0]._lambda(pulled), self.y)


class KAverage(Section):
    """Equivariant projection: average of pi_s child(x s) over the subgroup.

    Idempotent on already-equivariant sections; the output satisfies the
    defining equivariance condition exactly whenever the subgroup rule
    integrates the (band-limited) integrand exactly.
    """

    def __init__(self, child: Section, krep, group: GroupModel):
        self.children = (child,)
        self.group = group
        self.codomain = child.codomain
        self.deriv_order = child.deriv_order
        self.bandwidth = child.bandwidth
        self.krep = krep
        self.rule = group.k_rule

    def _values(self, pts: EvalPoints) -> np.ndarray:
        child = self.children[0]
        out = None
        for s, w in zip(self.rule.nodes, self.rule.weights):
            term = w * self.krep.apply(s, child.values(pts.right_translated(s)))
            out = term if out is None else out + term
        return out

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        child = self.children[0]
        out = None
        for s, w in zip(self.rule.nodes, self.rule.weights):
            pulled = dirs @ self.group.adjoint_matrix(s)  # Ad_{s^{-1}} dirs, rowwise
            term = w * self.krep.apply(s, child.derivs(pts.right_translated(s), pulled))
            out = term if out is None else out + term
        return out

    def _lambda(self, coords: np.ndarray) -> Section:
        return KAverage(self.children[0]._lambda(coords), self.krep, self.group)


class RealPart(Section):
    """Real part of a scalar section (an R-linear node)."""

    def __init__(self, child: Section):
        if child.codomain.kind != "scalar":
            raise ValueError("real part applies to scalar sections")
        self.children = (child,)
        self.codomain = Codomain.scalar()
        self.deriv_order = child.deriv_order
        self.bandwidth = child.bandwidth
        self.group = _find_group(self)
        self.krep = child.krep

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return self.children[0].values(pts).real.astype(complex)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        return self.children[0].derivs(pts, dirs).real.astype(complex)

    def _lambda(self, coords: np.ndarray) -> Section:
        return RealPart(self.children[0]._lambda(coords))


class ImagPart(Section):
    """Imaginary part of a scalar section (an R-linear node)."""

    def __init__(self, child: Section):
        if child.codomain.kind != "scalar":
            raise ValueError("imaginary part applies to scalar sections")
        self.children = (child,)
        self.codomain = Codomain.scalar()
        self.deriv_order = child.deriv_order
        self.bandwidth = child.bandwidth
        self.group = _find_group(self)
        self.krep = child.krep

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return self.children[0].values(pts).imag.astype(complex)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        return self.children[0].derivs(pts, dirs).imag.astype(complex)

    def _lambda(self, coords: np.ndarray) -> Section:
        return ImagPart(self.children[0]._lambda(coords))


class EmbedTangent(Section):
    """Embed a tangent section into grade one of the Clifford bundle."""

    def __init__(self, algebra: CliffordAlgebra, child: Section, clifford_krep=None):
        if child.codomain.kind != "tangent":
            raise ValueError("only tangent sections embed into the Clifford bundle")
        self.algebra = algebra
        self.children = (child,)
        self.codomain = Codomain.clifford(algebra)
        self.deriv_order = child.deriv_order
        self.bandwidth = child.bandwidth
        self.group = _find_group(self)
        self.krep = clifford_krep if clifford_krep is not None else (
            CliffordKRep(self.group, algebra) if child.krep is not None and self.group else None)

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return self.algebra.embed_vector(self.children[0].values(pts))

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        return self.algebra.embed_vector(self.children[0].derivs(pts, dirs))

    def _lambda(self, coords: np.ndarray) -> Section:
        return EmbedTangent(self.algebra, self.children[0]._lambda(coords), self.krep)


class RankOne(Section):
    """The operator-valued section zeta(x) eta(x)^*, acting as xi -> zeta <eta, xi>."""

    def __init__(self, zeta: Section, eta: Section):
        if zeta.codomain != eta.codomain or zeta.codomain.kind not in ("vector", "tangent"):
            raise ValueError("rank-one sections need two matching vector sections")
        self.children = (zeta, eta)
        dim = zeta.codomain.shape[0]
        self.codomain = Codomain.operator(dim)
        self.deriv_order = min(zeta.deriv_order, eta.deriv_order)
        self.bandwidth = zeta.bandwidth + eta.bandwidth
        self.group = _find_group(self)
        self.krep = (OperatorKRep(zeta.krep) if zeta.krep is not None
                     and eta.krep is not None else None)

    def _values(self, pts: EvalPoints) -> np.ndarray:
        zeta, eta = self.children
        return np.einsum("ni,nj->nij", zeta.values(pts), eta.values(pts).conj())

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        zeta, eta = self.children
        return (np.einsum("ni,nj->nij", zeta.derivs(pts, dirs), eta.values(pts).conj())
                + np.einsum("ni,nj->nij", zeta.values(pts), eta.derivs(pts, dirs).conj()))


class ConjugatedProjection(Section):
    """The operator section rho(x) M rho(x)^*, e.g. the bundle projection."""

    def __init__(self, rep: UnitaryRep, m: np.ndarray):
        self.rep = rep
        self.group = rep.group
        self.m = np.asarray(m, dtype=complex)
        self.codomain = Codomain.operator(rep.dim)
        self.deriv_order = 1
        self.bandwidth = 2 * rep.spin
        self.children = ()

    def _values(self, pts: EvalPoints) -> np.ndarray:
        r = pts.rep_stack(self.rep)
        return np.einsum("nij,jk,nlk->nil", r, self.m, r.conj())

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        r = pts.rep_stack(self.rep)
        d = np.einsum("na,aij->nij", dirs, self.rep.generators)
        inner = d @ self.m - self.m @ d
        return np.einsum("nij,njk,nlk->nil", r, inner, r.conj())


class GramSection(Section):
    """The matrix of pairwise fiber inner products of a family of sections."""

    def __init__(self, frame):
        frame = list(frame)
        if not frame:
            raise ValueError("empty frame")
        self.children = tuple(frame)
        self.codomain = Codomain.operator(len(frame))
        self.deriv_order = min(f.deriv_order for f in frame)
        self.bandwidth = 2 * max(f.bandwidth for f in frame)
        self.group = _find_group(self)
        self.krep = TrivialKRep() if all(f.krep is not None for f in frame) else None

    @staticmethod
    def _flat(stack: np.ndarray) -> np.ndarray:
        return stack.reshape(stack.shape[0], stack.shape[1], -1)

    def _values(self, pts: EvalPoints) -> np.ndarray:
        stack = self._flat(np.stack([f.values(pts) for f in self.children]))
        return np.einsum("jnc,knc->njk", stack.conj(), stack)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        stack = self._flat(np.stack([f.values(pts) for f in self.children]))
        dstack = self._flat(np.stack([f.derivs(pts, dirs) for f in self.children]))
        return (np.einsum("jnc,knc->njk", dstack.conj(), stack)
                + np.einsum("jnc,knc->njk", stack.conj(), dstack))


class OpApply(Section):
    """Pointwise application of an operator section to a vector section."""

    def __init__(self, op: Section, xi: Section):
        if op.codomain.kind != "operator":
            raise ValueError("first factor must be operator-valued")
        if xi.codomain.shape[0] != op.codomain.shape[1]:
            raise ValueError("operator and argument dimensions differ")
        self.children = (op, xi)
        self.codomain = xi.codomain
        self.deriv_order = min(op.deriv_order, xi.deriv_order)
        self.bandwidth = op.bandwidth + xi.bandwidth
        self.group = _find_group(self)
        self.krep = xi.krep if (op.krep is not None and xi.krep is not None) else None

    def _values(self, pts: EvalPoints) -> np.ndarray:
        op, xi = self.children
        return np.einsum("nij,nj->ni", op.values(pts), xi.values(pts))

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        op, xi = self.children
        return (np.einsum("nij,nj->ni", op.derivs(pts, dirs), xi.values(pts))
                + np.einsum("nij,nj->ni", op.values(pts), xi.derivs(pts, dirs)))


class HarmonicSpinor(Section):
    """A Clifford-valued section with a single-level Peter-Weyl profile.

    value(x) = sum_{r,T} rho(x)[row, r] * coeff[r, T] * e_T.  With a
    coefficient tensor satisfying the subgroup-invariance constraint these
    sections span the left-translation isotypic components of the spinor
    module, and their quadrature-free orthogonality follows from Schur
    orthogonality of the matrix coefficients.
    """

    def __init__(self, rep: UnitaryRep, row: int, coeff: np.ndarray,
                 algebra: CliffordAlgebra, krep=None):
        self.rep = rep
        self.group = rep.group
        self.row = int(row)
        self.coeff = np.asarray(coeff, dtype=complex)
        self.algebra = algebra
        self.codomain = Codomain.clifford(algebra)
        self.deriv_order = 1
        self.bandwidth = rep.spin
        self.krep = krep
        self.children = ()

    def _values(self, pts: EvalPoints) -> np.ndarray:
        return np.einsum("nr,rT->nT", pts.rep_stack(self.rep)[:, self.row, :], self.coeff)

    def _derivs(self, pts: EvalPoints, dirs: np.ndarray) -> np.ndarray:
        d = np.einsum("na,aij->nij", dirs, self.rep.generators)
        rows = np.einsum("nj,njr->nr", pts.rep_stack(self.rep)[:, self.row, :], d)
        return np.einsum("nr,rT->nT", rows, self.coeff)

    def _lambda(self, coords: np.ndarray) -> Section:
        d = self.rep.derivative(coords)
        rows = [HarmonicSpinor(self.rep, i, self.coeff, self.algebra, self.krep)
                for i in range(self.rep.dim)]
        return Sum(rows, -d[self.row, :])


# -- module-level operations -------------------------------------------------------


def evaluate(section: Section, x: GroupElement, group: GroupModel | None = None):
    """Value of a section at a single group element."""
    return section.value(x, group)


def directional_deriv(section: Section, x: GroupElement, direction: np.ndarray,
                      group: GroupModel | None = None):
    """Exact derivative of t -> section(x exp(t Y)) at t = 0."""
    return section.deriv(x, direction, group)


def translate(section: Section, y: GroupElement) -> Section:
    return Translate(section, y)


def a_inner(a: Section, b: Section) -> Section:
    return AInner(a, b)


def l2_inner(a: Section, b: Section, rule: QuadratureRule,
             group: GroupModel | None = None) -> complex:
    """Quadrature pairing of the pointwise fiber inner product.

    Warns if the combined bandwidth bound of the integrand exceeds the
    declared exactness of the rule.
    """
    g = group or a._group()
    bound = a.bandwidth + b.bandwidth
    if rule.kind == "exact" and bound > rule.bandwidth + 1e-9:
        warnings.warn(
            f"integrand bandwidth bound {bound} exceeds rule bandwidth {rule.bandwidth}",
            BandwidthWarning, stacklevel=2)
    pts = EvalPoints.for_rule(g, rule)
    pair = _pairing(a.values(pts), b.values(pts))
    total = complex(np.dot(rule.weights, pair))
    return total.real if abs(total.imag) < 1e-13 * max(1.0, abs(total)) else total


def equivariant_project(section: Section, krep, group: GroupModel) -> Section:
    """Average a section into an exactly equivariant one."""
    return KAverage(section, krep, group)


def lambda_deriv(section: Section, coords: np.ndarray) -> Section:
    """The left-translation derivative generated by an algebra vector.

    This is the derivative of y -> translate(section, exp(-t Y)) at t = 0,
    built structurally so the result is again an exactly differentiable
    section.  It is kept separate from the right-direction derivative used
    by covariant differentiation.
    """
    return section._lambda(np.asarray(coords, dtype=float))


def equivariance_defect(section: Section, x: GroupElement, s: GroupElement,
                        group: GroupModel | None = None) -> float:
    """Residual of the defining equivariance condition at (x, s)."""
    if section.krep is None:
        raise ValueError("section carries no equivariance tag")
    g = group or section._group()
    lhs = section.value(x @ s, g)
    rhs = section.krep.apply_inverse(s, section.value(x, g))
    return float(np.linalg.norm(np.atleast_1d(lhs - rhs)))
