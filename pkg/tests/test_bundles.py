import numpy as np
import pytest

from homogdirac import (
    AInner,
    EvalPoints,
    InducedBundle,
    OpApply,
    Scale,
    Sum,
    build_frame,
    conjugation_intertwiner,
    direct_sum,
    equivariance_defect,
    frame_gram,
    module_map_values,
    monopole_bundle,
    projection_section,
    random_equivariant_section,
    rank_one_endo,
    spin_rep,
    tangent_bundle,
)


@pytest.fixture(scope="module")
def sample_pts(sphere):
    rng = np.random.default_rng(77)
    return EvalPoints.of(sphere, sphere.random_elements(rng, 30))


def test_minimal_level_defaults(sphere):
    b = monopole_bundle(sphere, 3)
    assert b.ambient_dim == 4 and b.fiber_dim == 1
    with pytest.raises(ValueError, match="does not occur"):
        monopole_bundle(sphere, 1, 2)  # parity mismatch
    with pytest.raises(ValueError, match="does not occur"):
        monopole_bundle(sphere, 3, 1)  # weight out of range


def test_trivial_bundle_projection_is_identity(sphere, sample_pts):
    b = monopole_bundle(sphere, 0, 0)
    pv = projection_section(b).values(sample_pts)
    assert np.abs(pv - 1.0).max() < 1e-14


def test_trivial_ambient_frame_is_constant_basis(sphere, sample_pts):
    rep = spin_rep(sphere, 0)
    b = InducedBundle(sphere, rep, np.eye(1, dtype=complex))
    (eta,) = build_frame(b)
    assert np.abs(eta.values(sample_pts) - 1.0).max() < 1e-13


def test_full_fiber_gram_is_constant_identity(full_group, rng):
    """Fiber equal to the ambient space: free module, identity Gram."""
    rep = spin_rep(full_group, 2)
    b = InducedBundle(full_group, rep, np.eye(3, dtype=complex))
    pts = EvalPoints.of(full_group, full_group.random_elements(rng, 10))
    gv = frame_gram(b).values(pts)
    assert np.abs(gv - np.eye(3)).max() < 1e-13


@pytest.mark.parametrize("charge,two_level", [(1, 1), (-1, 1), (2, 2), (0, 2), (1, 3), (4, 4)])
def test_monopole_bundles(sphere, sample_pts, charge, two_level, rng):
    b = monopole_bundle(sphere, charge, two_level)
    frame = build_frame(b)

    for eta in frame:
        for s in sphere.k_rule.nodes[::8]:
            assert equivariance_defect(eta, sample_pts.elements[0], s, sphere) < 1e-10

    xi = random_equivariant_section(b, rng)
    recon = Sum([Scale(eta, AInner(eta, xi)) for eta in frame])
    assert np.abs(recon.values(sample_pts) - xi.values(sample_pts)).max() < 1e-10

    pv = projection_section(b).values(sample_pts)
    assert np.abs(np.einsum("nij,njk->nik", pv, pv) - pv).max() < 1e-11
    assert np.abs(pv - np.conj(np.transpose(pv, (0, 2, 1)))).max() < 1e-12
    assert np.abs(np.einsum("nii->n", pv) - b.fiber_dim).max() < 1e-12

    # the frame Gram matrix is that projection, pointwise
    gv = frame_gram(b).values(sample_pts)
    assert np.abs(gv - pv).max() < 1e-11
    # rank equals the fiber dimension, with a clean singular gap
    svals = np.linalg.svd(gv, compute_uv=False)
    assert np.all(svals[:, :b.fiber_dim] > 0.5)
    if b.fiber_dim < b.ambient_dim:
        assert np.all(svals[:, b.fiber_dim:] < 0.5)

    mm = module_map_values(b, xi, sample_pts)
    assert np.abs(np.einsum("nij,nj->ni", pv, mm) - mm).max() < 1e-10


def test_projection_is_right_invariant(sphere, rng):
    b = monopole_bundle(sphere, 1, 1)
    p = projection_section(b)
    xs = sphere.random_elements(rng, 5)
    s = sphere.k_rule.nodes[3]
    lhs = p.values(EvalPoints.of(sphere, [x @ s for x in xs]))
    rhs = p.values(EvalPoints.of(sphere, xs))
    assert np.abs(lhs - rhs).max() < 1e-12


@pytest.mark.parametrize("charge,two_level", [(1, 1), (2, 2)])
def test_opposite_charges_conjugate(sphere, sample_pts, charge, two_level):
    bp = monopole_bundle(sphere, charge, two_level)
    bm = monopole_bundle(sphere, -charge, two_level)
    c = conjugation_intertwiner(two_level)
    pv = projection_section(bp).values(sample_pts)
    mv = projection_section(bm).values(sample_pts)
    moved = np.einsum("ij,njk,kl->nil", c, mv, np.linalg.inv(c))
    assert np.abs(np.conj(pv) - moved).max() < 1e-12


def test_frame_members_can_vanish_identically(sphere, sample_pts, rng):
    """A fiber inside a reducible ambient: sections from the other summand vanish."""
    amb = direct_sum(spin_rep(sphere, 0), spin_rep(sphere, 2))
    embed = np.zeros((4, 1), dtype=complex)
    embed[0, 0] = 1.0
    b = InducedBundle(sphere, amb, embed)
    frame = build_frame(b)
    norms = [np.abs(eta.values(sample_pts)).max() for eta in frame]
    assert norms[0] > 0.9
    assert max(norms[1:]) < 1e-14
    xi = random_equivariant_section(b, rng)
    recon = Sum([Scale(eta, AInner(eta, xi)) for eta in frame])
    assert np.abs(recon.values(sample_pts) - xi.values(sample_pts)).max() < 1e-10


def test_rank_one_endomorphism(sphere, sample_pts, rng):
    from homogdirac import Codomain, Constant
    b = monopole_bundle(sphere, 2, 4)
    zeta = random_equivariant_section(b, rng)
    eta = random_equivariant_section(b, rng)
    xi = random_equivariant_section(b, rng)
    t = rank_one_endo(zeta, eta)
    # zero second factor gives the zero endomorphism
    zero_scalar = Constant(Codomain.scalar(), 0.0, group=sphere)
    zero = rank_one_endo(zeta, Scale(eta, zero_scalar))
    assert np.abs(zero.values(sample_pts)).max() == 0.0
    lhs = OpApply(t, xi).values(sample_pts)
    rhs = Scale(zeta, AInner(eta, xi)).values(sample_pts)
    assert np.abs(lhs - rhs).max() < 1e-12
    s = sphere.k_rule.nodes[5]
    assert equivariance_defect(t, sample_pts.elements[0], s, sphere) < 1e-10


def test_rank_one_reconstruction(sphere, sample_pts, rng):
    b = monopole_bundle(sphere, 1, 3)
    frame = build_frame(b)
    for _ in range(5):
        t = rank_one_endo(random_equivariant_section(b, rng),
                          random_equivariant_section(b, rng))
        recon = Sum([rank_one_endo(OpApply(t, fj), fj) for fj in frame])
        assert np.abs(recon.values(sample_pts) - t.values(sample_pts)).max() < 1e-10


def test_tangent_bundle_through_generic_machinery(sphere, sample_pts, rng):
    b = tangent_bundle(sphere)
    assert b.fiber_dim == sphere.m_dim
    xi = random_equivariant_section(b, rng)
    frame = build_frame(b)
    recon = Sum([Scale(eta, AInner(eta, xi)) for eta in frame])
    assert np.abs(recon.values(sample_pts) - xi.values(sample_pts)).max() < 1e-10
    pv = projection_section(b).values(sample_pts)
    assert np.abs(np.einsum("nij,njk->nik", pv, pv) - pv).max() < 1e-12


def test_embedding_must_be_isometric(sphere):
    rep = spin_rep(sphere, 2)
    bad = np.zeros((3, 1), dtype=complex)
    bad[0, 0] = 2.0
    with pytest.raises(ValueError, match="isometry"):
        InducedBundle(sphere, rep, bad)


def test_fiber_must_be_invariant(sphere):
    rep = spin_rep(sphere, 2)
    bad = np.zeros((3, 1), dtype=complex)
    bad[0, 0] = bad[1, 0] = 1 / np.sqrt(2)  # mixes two weights
    with pytest.raises(ValueError, match="invariant"):
        InducedBundle(sphere, rep, bad)
