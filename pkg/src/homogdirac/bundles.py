"""Induced equivariant vector bundles over G/K, given by global frames.

A bundle is specified by an ambient representation of the whole group
together with an isometric embedding of the fiber as a subgroup-invariant
subspace.  Cross-sections are the equivariant fiber-valued functions on
the group; the global frame obtained by sweeping an orthonormal ambient
basis satisfies the reproducing formula and exhibits the section module
as a direct summand of a free module, with the pointwise frame Gram
matrix equal to the conjugated-projection section.

The monopole family over the two-sphere arises from weight lines of the
irreducible representations of SU(2) restricted to the circle subgroup;
the tangent bundle arises from the adjoint representation restricted to
the tangent complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import GroupModel
from .reps import UnitaryRep, adjoint_rep, spin_rep
from .sections import (
    Codomain,
    ConjugatedProjection,
    Constant,
    GramSection,
    KAverage,
    MatrixCoefficient,
    MatrixKRep,
    RankOne,
    RestrictedKRep,
    Scale,
    Section,
    Sum,
)

__all__ = [
    "InducedBundle",
    "FrameField",
    "build_frame",
    "projection_section",
    "frame_gram",
    "rank_one_endo",
    "monopole_bundle",
    "tangent_bundle",
    "random_equivariant_section",
    "module_map_values",
]


@dataclass
class InducedBundle:
    """An equivariant bundle presented inside an ambient representation."""

    group: GroupModel
    rep_tilde: UnitaryRep
    embed: np.ndarray  # ambient_dim x fiber_dim isometry onto the fiber
    name: str = "bundle"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.embed = np.asarray(self.embed, dtype=complex)
        if self.embed.ndim != 2 or self.embed.shape[0] != self.rep_tilde.dim:
            raise ValueError("embedding shape does not match the ambient representation")
        if np.linalg.norm(self.embed.conj().T @ self.embed
                          - np.eye(self.embed.shape[1])) > 1e-12:
            raise ValueError("embedding is not an isometry")
        # the fiber must be invariant under the restricted subgroup action
        proj = self.embed @ self.embed.conj().T
        for s in self.group.k_rule.nodes:
            m = self.rep_tilde.matrix(s)
            if np.linalg.norm(m @ proj - proj @ m) > 1e-10:
                raise ValueError("fiber is not invariant under the subgroup")

    @property
    def fiber_dim(self) -> int:
        return self.embed.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.rep_tilde.dim

    @property
    def krep(self) -> MatrixKRep:
        kr = self._cache.get("krep")
        if kr is None:
            kr = RestrictedKRep(self.rep_tilde, self.embed)
            self._cache["krep"] = kr
        return kr

    def subgroup_matrix(self, s) -> np.ndarray:
        """The fiber representation of a subgroup element."""
        return self.krep.matrix(s)

    def codomain(self) -> Codomain:
        return Codomain.vector(self.fiber_dim)


class FrameField(Section):
    """Frame section j: the fiber projection of the pulled-back ambient basis vector."""

    def __init__(self, bundle: InducedBundle, j: int):
        self.bundle = bundle
        self.group = bundle.group
        self.j = int(j)
        self.codomain = bundle.codomain()
        self.deriv_order = 1
        self.bandwidth = bundle.rep_tilde.spin
        self.krep = bundle.krep
        self.children = ()

    def _values(self, pts) -> np.ndarray:
        stack = pts.rep_stack(self.bundle.rep_tilde)
        # row j of rho(x), conjugated, is rho(x)^* e_j; then restrict to the fiber
        return np.conj(stack[:, self.j, :] @ self.bundle.embed)

    def _derivs(self, pts, dirs) -> np.ndarray:
        rep = self.bundle.rep_tilde
        stack = pts.rep_stack(rep)
        d = np.einsum("na,aij->nij", dirs, rep.generators)
        # d/dt rho(x exp(tY))^* e_j = -drho(Y) rho(x)^* e_j
        w = np.conj(stack[:, self.j, :])
        return -np.einsum("ik,nij,nj->nk", self.bundle.embed.conj(), d, w)


def build_frame(bundle: InducedBundle) -> list:
    """The standard global frame swept from the ambient orthonormal basis."""
    frame = bundle._cache.get("frame")
    if frame is None:
        frame = [FrameField(bundle, j) for j in range(bundle.ambient_dim)]
        bundle._cache["frame"] = frame
    return frame


def projection_section(bundle: InducedBundle) -> Section:
    """The operator section rho(x) P rho(x)^* onto the moving fiber."""
    proj = bundle.embed @ bundle.embed.conj().T
    return ConjugatedProjection(bundle.rep_tilde, proj)


def frame_gram(bundle: InducedBundle) -> Section:
    """Pointwise Gram matrix of the frame; a projection of rank fiber_dim."""
    return GramSection(build_frame(bundle))


def rank_one_endo(zeta: Section, eta: Section) -> Section:
    """The endomorphism section acting as xi -> zeta <eta, xi>."""
    return RankOne(zeta, eta)


def monopole_bundle(group: GroupModel, charge: int,
                    two_level: int | None = None) -> InducedBundle:
    """A line bundle over the two-sphere from a weight line of a spin level.

    ``charge`` is twice the weight of the circle action on the fiber (so
    the circle element at angle t acts by exp(-i*charge*t/2)).  The
    ambient level defaults to the minimal one containing that weight:
    ``two_level = |charge|``.  Any ``two_level >= |charge|`` of equal
    parity is a valid override.
    """
    if group.k_dim != 1:
        raise ValueError("monopole bundles need a circle subgroup")
    if two_level is None:
        two_level = abs(charge)
    if two_level < abs(charge) or (two_level - charge) % 2:
        raise ValueError(
            f"charge {charge} does not occur among the weights of level {two_level}")
    rep = spin_rep(group, two_level)
    idx = (two_level - charge) // 2  # weights are ordered decreasingly
    embed = np.zeros((rep.dim, 1), dtype=complex)
    embed[idx, 0] = 1.0
    return InducedBundle(group, rep, embed, name=f"monopole({charge},{two_level})")


def tangent_bundle(group: GroupModel) -> InducedBundle:
    """The tangent module as the bundle induced from the adjoint representation."""
    return InducedBundle(group, adjoint_rep(group),
                         group.m_frame.T.astype(complex), name="tangent")


def random_equivariant_section(bundle: InducedBundle, rng: np.random.Generator,
                               two_j_max: int = 2, terms: int = 2) -> Section:
    """A random band-limited equivariant section, built by subgroup averaging."""
    parts = []
    for _ in range(terms):
        vec = rng.standard_normal(bundle.fiber_dim) + 1j * rng.standard_normal(bundle.fiber_dim)
        const = Constant(bundle.codomain(), vec, group=bundle.group)
        two_j = int(rng.integers(0, two_j_max + 1))
        if two_j == 0:
            parts.append(const)
            continue
        rep = spin_rep(bundle.group, two_j)
        u = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
        v = rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim)
        parts.append(Scale(const, MatrixCoefficient(rep, u, v)))
    return KAverage(Sum(parts), bundle.krep, bundle.group)


def module_map_values(bundle: InducedBundle, section: Section, pts) -> np.ndarray:
    """Values of the free-module embedding x -> rho(x) (embedded section value).

    The image lies pointwise in the range of the projection section; this
    is the map exhibiting the section module as a projective summand.
    """
    stack = pts.rep_stack(bundle.rep_tilde)
    lifted = section.values(pts) @ bundle.embed.T
    return np.einsum("nij,nj->ni", stack, lifted)
