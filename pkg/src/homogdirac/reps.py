"""Finite-dimensional unitary representations of the catalog groups.

A representation is held by its generator images: the matrices assigned
to the orthonormal algebra basis of the owning :class:`GroupModel`.
Group elements are evaluated by exponentiating the generator combination
obtained from the closed-form logarithm, so the exact first-derivative
formulas used by the section engine need nothing beyond these matrices.

The catalog covers the irreducible representations of SU(2) indexed by
``two_j`` (twice the spin), their direct sums, and the adjoint
representation of any cataloged group (evaluated by conjugation, which
requires no logarithm).
"""

from __future__ import annotations

import numpy as np

from .groups import GroupElement, GroupModel, expm_skew

__all__ = [
    "UnitaryRep",
    "spin_rep",
    "adjoint_rep",
    "direct_sum",
    "conjugation_intertwiner",
]


class UnitaryRep:
    """A unitary representation given by its algebra generator images."""

    def __init__(self, group: GroupModel, generators: np.ndarray, name: str,
                 spin: float):
        self.group = group
        self.generators = np.asarray(generators, dtype=complex)
        self.dim = self.generators.shape[1]
        self.name = name
        # largest irreducible spin occurring in the decomposition; used for
        # quadrature bandwidth accounting
        self.spin = float(spin)

    def derivative(self, coords: np.ndarray) -> np.ndarray:
        """Generator image of the algebra vector with the given coordinates."""
        return np.einsum("a,aij->ij", np.asarray(coords, dtype=float), self.generators)

    def matrix(self, x: GroupElement) -> np.ndarray:
        """Value at a group element, cached on the element."""
        # the entry holds the representation itself so the id key cannot be
        # reused by another object while the cache lives
        key = ("rep", id(self))
        hit = x._cache.get(key)
        if hit is not None:
            return hit[1]
        m = self.matrix_stack(x.matrix[None])[0]
        x._cache[key] = (self, m)
        return m

    def matrix_stack(self, matrices: np.ndarray) -> np.ndarray:
        """Values at a stack of defining matrices."""
        coords = self.group.log_stack(matrices)
        gen = np.einsum("na,aij->nij", coords, self.generators)
        return expm_skew(gen)

    def __repr__(self) -> str:  # pragma: no cover
        return f"UnitaryRep({self.name}, dim={self.dim})"


class _AdjointRep(UnitaryRep):
    """The adjoint representation, evaluated by conjugation (no logarithm)."""

    def __init__(self, group: GroupModel):
        # ad(X_a) maps X_b to sum_c structure[a,b,c] X_c: entries M[c,b].
        gens = np.transpose(group.structure, (0, 2, 1))
        super().__init__(group, gens, "adjoint", spin=group.ad_bandwidth)

    def matrix(self, x: GroupElement) -> np.ndarray:
        return self.group.adjoint_matrix(x).astype(complex)

    def matrix_stack(self, matrices: np.ndarray) -> np.ndarray:
        g = self.group
        conj = np.einsum("nij,ajk,nlk->nail", matrices, g.basis, matrices.conj())
        return (np.einsum("bij,naji->nba", g.basis, conj) * (-g.form_factor)).real.astype(complex)


def spin_rep(group: GroupModel, two_j: int) -> UnitaryRep:
    """The spin-(two_j/2) irreducible representation of the SU(2) catalog.

    Basis vectors are weight vectors ordered by decreasing weight; the
    third algebra axis acts diagonally with eigenvalues -i*m for
    m = j, j-1, ..., -j (scaled with the metric normalization).
    """
    if group.matrix_dim != 2 or group.dim != 3:
        raise ValueError("spin representations are cataloged for SU(2) groups")
    if two_j < 0 or int(two_j) != two_j:
        raise ValueError("two_j must be a nonnegative integer")
    j = two_j / 2.0
    m = j - np.arange(two_j + 1)
    jz = np.diag(m)
    raise_offdiag = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    jp = np.zeros((two_j + 1, two_j + 1))
    jp[np.arange(two_j), np.arange(1, two_j + 1)] = raise_offdiag
    jm = jp.T
    j1 = (jp + jm) / 2.0
    j2 = (jp - jm) / 2j
    # the orthonormal basis is the raw -(i/2)sigma basis over sqrt(scale)
    gens = np.array([-1j * j1, -1j * j2, -1j * jz]) / np.sqrt(group.metric_scale)
    return UnitaryRep(group, gens, f"spin-{two_j}/2", spin=j)


def adjoint_rep(group: GroupModel) -> UnitaryRep:
    return _AdjointRep(group)


def direct_sum(*reps: UnitaryRep) -> UnitaryRep:
    """Block-diagonal direct sum of representations of the same group."""
    group = reps[0].group
    dim = sum(r.dim for r in reps)
    gens = np.zeros((group.dim, dim, dim), dtype=complex)
    off = 0
    for r in reps:
        gens[:, off:off + r.dim, off:off + r.dim] = r.generators
        off += r.dim
    name = "+".join(r.name for r in reps)
    return UnitaryRep(group, gens, name, spin=max(r.spin for r in reps))


def conjugation_intertwiner(two_j: int) -> np.ndarray:
    """Matrix C with conj(rho(x)) = C rho(x) C^{-1} for the spin basis."""
    n = two_j + 1
    c = np.zeros((n, n))
    for a in range(n):
        c[n - 1 - a, a] = (-1.0) ** a
    return c
