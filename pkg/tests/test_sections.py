import numpy as np
import pytest

from homogdirac import (
    AInner,
    BandwidthWarning,
    CliffordKRep,
    CliffordProduct,
    Codomain,
    Constant,
    DerivativeOrderError,
    EvalPoints,
    FundamentalField,
    GroupElement,
    ImagPart,
    KAverage,
    MatrixCoefficient,
    RealPart,
    Scale,
    Sum,
    TrivialKRep,
    equivariance_defect,
    l2_inner,
    lambda_deriv,
    spin_rep,
    spinor_algebra,
    translate,
)


def fd_deriv(group, section, x, direction, h):
    xp = GroupElement(x.matrix @ group.exp(direction, h).matrix)
    xm = GroupElement(x.matrix @ group.exp(direction, -h).matrix)
    return (np.atleast_1d(section.value(xp, group))
            - np.atleast_1d(section.value(xm, group))) / (2 * h)


def random_spinor(group, rng, two_j=2):
    alg = spinor_algebra(group)
    rep = spin_rep(group, two_j)
    const = Constant(Codomain.clifford(alg), rng.standard_normal(alg.n), group=group)
    f = MatrixCoefficient(rep, rng.standard_normal(rep.dim), rng.standard_normal(rep.dim))
    return KAverage(Scale(const, RealPart(f)), CliffordKRep(group, alg), group)


def test_constant_evaluation(sphere, rng):
    c = Constant(Codomain.scalar(), 2.5 + 1.0j, group=sphere)
    x = sphere.random_element(rng)
    assert c.value(x) == 2.5 + 1.0j
    assert c.deriv(x, sphere.random_algebra(rng)) == 0.0


def test_trivial_rep_coefficient_is_one(sphere, rng):
    rep = spin_rep(sphere, 0)
    f = MatrixCoefficient(rep, np.array([1.0]), np.array([1.0]))
    for _ in range(5):
        assert abs(f.value(sphere.random_element(rng)) - 1.0) < 1e-14


def test_fundamental_field_at_identity(sphere, rng):
    coords = sphere.random_algebra(rng)
    w = FundamentalField(sphere, coords)
    val = w.value(sphere.identity())
    assert np.linalg.norm(val + sphere.to_m(sphere.project_m(coords))) < 1e-14
    # isotropy generators vanish at the identity coset
    wk = FundamentalField(sphere, sphere.k_frame[0])
    assert np.linalg.norm(wk.value(sphere.identity())) < 1e-14


def test_fundamental_field_derivative_formula(sphere, rng):
    coords = sphere.random_algebra(rng)
    w = FundamentalField(sphere, coords)
    for _ in range(10):
        x = sphere.random_element(rng)
        y = sphere.random_algebra(rng)
        pulled = sphere.adjoint(x.inverse, coords)
        expect = sphere.to_m(sphere.bracket(y, pulled))
        assert np.linalg.norm(w.deriv(x, y) - expect) < 1e-13


def node_zoo(group, rng):
    """One differentiable section per node species."""
    rep = spin_rep(group, 2)
    alg = spinor_algebra(group)
    mc = MatrixCoefficient(rep, rng.standard_normal(3) + 1j * rng.standard_normal(3),
                           rng.standard_normal(3))
    ff = FundamentalField(group, group.random_algebra(rng))
    zoo = [
        mc,
        ff,
        Sum([mc, MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))],
            [0.7, -1.3]),
        Scale(ff, mc),
        CliffordProduct(alg, random_spinor(group, rng), random_spinor(group, rng, 1)),
        AInner(ff, FundamentalField(group, group.random_algebra(rng))),
        translate(mc, group.random_element(rng)),
        KAverage(mc, TrivialKRep(), group),
        RealPart(mc),
        ImagPart(mc),
    ]
    return zoo


@pytest.mark.parametrize("space", ["sphere", "full_group"])
def test_richardson_consistency_all_nodes(space, request, rng):
    group = request.getfixturevalue(space)
    for section in node_zoo(group, rng):
        for _ in range(5):
            x = group.random_element(rng)
            y = group.random_algebra(rng)
            exact = np.atleast_1d(section.deriv(x, y))
            e1 = np.linalg.norm(fd_deriv(group, section, x, y, 1e-4) - exact)
            e2 = np.linalg.norm(fd_deriv(group, section, x, y, 5e-5) - exact)
            scale = max(1.0, float(np.linalg.norm(exact)))
            if e1 < 1e-8 * scale:
                continue  # beneath the roundoff floor the ratio is noise
            assert abs(e1 / e2 - 4.0) < 0.5


def test_derivative_linearity_in_direction(sphere, rng):
    rep = spin_rep(sphere, 3)
    f = MatrixCoefficient(rep, rng.standard_normal(4), rng.standard_normal(4))
    x = sphere.random_element(rng)
    y1, y2 = sphere.random_algebra(rng), sphere.random_algebra(rng)
    lhs = f.deriv(x, 2.0 * y1 - 0.5 * y2)
    rhs = 2.0 * f.deriv(x, y1) - 0.5 * f.deriv(x, y2)
    assert abs(lhs - rhs) < 1e-12


def test_product_rule(full_group, rng):
    alg = spinor_algebra(full_group)
    a = random_spinor(full_group, rng)
    b = random_spinor(full_group, rng, 1)
    prod = CliffordProduct(alg, a, b)
    for _ in range(10):
        x = full_group.random_element(rng)
        y = full_group.random_algebra(rng)
        lhs = prod.deriv(x, y)
        rhs = alg.mul(a.deriv(x, y), b.value(x)) + alg.mul(a.value(x), b.deriv(x, y))
        assert np.abs(lhs - rhs).max() < 1e-10


def test_derivative_order_exhaustion(sphere, rng):
    from homogdirac import canonical_connection, tangent_frame
    from homogdirac.geometry import ApplyConnection
    rep = spin_rep(sphere, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))
    frame = tangent_frame(sphere)
    once = ApplyConnection(canonical_connection(sphere), frame[0], f)
    assert once.deriv_order == 0
    with pytest.raises(DerivativeOrderError):
        once.deriv(sphere.random_element(rng), sphere.random_algebra(rng))


def test_translate_by_identity(sphere, rng):
    rep = spin_rep(sphere, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))
    t = translate(f, sphere.identity())
    x = sphere.random_element(rng)
    assert abs(t.value(x) - f.value(x)) < 1e-14


def test_translate_fundamental_field_covariance(sphere, rng):
    coords = sphere.random_algebra(rng)
    w = FundamentalField(sphere, coords)
    y = sphere.random_element(rng)
    moved = translate(w, y)
    expect = FundamentalField(sphere, sphere.adjoint(y, coords))
    for _ in range(10):
        x = sphere.random_element(rng)
        assert np.linalg.norm(moved.value(x) - expect.value(x)) < 1e-12


def test_translate_module_covariance(sphere, rng):
    rep = spin_rep(sphere, 2)
    f = RealPart(KAverage(MatrixCoefficient(
        rep, rng.standard_normal(3), rng.standard_normal(3)), TrivialKRep(), sphere))
    w = FundamentalField(sphere, sphere.random_algebra(rng))
    y = sphere.random_element(rng)
    lhs = translate(Scale(w, f), y)
    rhs = Scale(translate(w, y), translate(f, y))
    for _ in range(5):
        x = sphere.random_element(rng)
        assert np.linalg.norm(lhs.value(x) - rhs.value(x)) < 1e-13


def test_a_inner_properties(sphere, rng):
    x, y = sphere.random_algebra(rng), sphere.random_algebra(rng)
    wx, wy = FundamentalField(sphere, x), FundamentalField(sphere, y)
    inner = AInner(wx, wy)
    # value at the identity is the projected algebra pairing
    expect = np.dot(sphere.project_m(x), sphere.project_m(y))
    assert abs(inner.value(sphere.identity()) - expect) < 1e-13
    norm = AInner(wx, wx)
    for _ in range(10):
        assert norm.value(sphere.random_element(rng)).real >= 0.0


def test_a_inner_translation_invariance(sphere, rng):
    wx = FundamentalField(sphere, sphere.random_algebra(rng))
    wy = FundamentalField(sphere, sphere.random_algebra(rng))
    y = sphere.random_element(rng)
    lhs = translate(AInner(wx, wy), y)
    rhs = AInner(translate(wx, y), translate(wy, y))
    for _ in range(5):
        x = sphere.random_element(rng)
        assert abs(lhs.value(x) - rhs.value(x)) < 1e-13


def test_a_inner_right_invariance_for_equivariant_inputs(sphere, rng):
    wx = FundamentalField(sphere, sphere.random_algebra(rng))
    wy = FundamentalField(sphere, sphere.random_algebra(rng))
    inner = AInner(wx, wy)
    for s in sphere.k_rule.nodes[::8]:
        for _ in range(3):
            x = sphere.random_element(rng)
            assert abs(inner.value(x @ s) - inner.value(x)) < 1e-10


def test_clifford_star_representation_pointwise(sphere, rng):
    alg = spinor_algebra(sphere)
    theta = random_spinor(sphere, rng)
    phi = random_spinor(sphere, rng, 1)
    psi = random_spinor(sphere, rng, 1)
    lhs = AInner(CliffordProduct(alg, theta, phi), psi)
    for _ in range(5):
        x = sphere.random_element(rng)
        tv = theta.value(x)
        lhs_v = alg.inner(alg.mul(tv, phi.value(x)), psi.value(x))
        rhs_v = alg.inner(phi.value(x), alg.mul(alg.star(tv), psi.value(x)))
        assert abs(lhs_v - rhs_v) < 1e-12
        assert abs(lhs.value(x) - lhs_v) < 1e-12


def test_l2_inner_normalization_and_positivity(sphere, rule8, rng):
    one = Constant(Codomain.scalar(), 1.0, krep=TrivialKRep(), group=sphere)
    assert abs(l2_inner(one, one, rule8) - 1.0) < 1e-13
    rep = spin_rep(sphere, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))
    assert l2_inner(f, f, rule8).real > 1e-3


def test_l2_inner_kills_lambda_derivatives(sphere, rule8, rng):
    one = Constant(Codomain.scalar(), 1.0, krep=TrivialKRep(), group=sphere)
    rep = spin_rep(sphere, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(3) + 1j * rng.standard_normal(3),
                          rng.standard_normal(3))
    for _ in range(5):
        coords = sphere.random_algebra(rng)
        assert abs(l2_inner(one, lambda_deriv(f, coords), rule8)) < 1e-12


def test_l2_translation_invariance(sphere, rule8, rng):
    rep = spin_rep(sphere, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))
    h = MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))
    base = l2_inner(f, h, rule8)
    for _ in range(3):
        y = sphere.random_element(rng)
        moved = l2_inner(translate(f, y), translate(h, y), rule8)
        assert abs(base - moved) < 1e-9


def test_l2_bandwidth_warning(sphere, rng):
    rule = sphere.haar_rule(2)
    rep = spin_rep(sphere, 4)
    f = MatrixCoefficient(rep, rng.standard_normal(5), rng.standard_normal(5))
    with pytest.warns(BandwidthWarning):
        l2_inner(f, f, rule)


def test_equivariant_projection_idempotent(sphere, rng):
    alg = spinor_algebra(sphere)
    raw = Constant(Codomain.clifford(alg), rng.standard_normal(alg.n), group=sphere)
    krep = CliffordKRep(sphere, alg)
    once = KAverage(raw, krep, sphere)
    twice = KAverage(once, krep, sphere)
    for _ in range(5):
        x = sphere.random_element(rng)
        assert np.abs(once.value(x) - twice.value(x)).max() < 1e-12


def test_equivariant_projection_fixes_trivial_constants(sphere, rng):
    c = Constant(Codomain.scalar(), 1.5, krep=TrivialKRep(), group=sphere)
    proj = KAverage(c, TrivialKRep(), sphere)
    x = sphere.random_element(rng)
    assert abs(proj.value(x) - 1.5) < 1e-14


def test_equivariant_projection_satisfies_defining_condition(sphere, rng):
    alg = spinor_algebra(sphere)
    raw = Constant(Codomain.clifford(alg), rng.standard_normal(alg.n), group=sphere)
    proj = KAverage(raw, CliffordKRep(sphere, alg), sphere)
    for s in sphere.k_rule.nodes[::6]:
        x = sphere.random_element(rng)
        assert equivariance_defect(proj, x, s, sphere) < 1e-10


def test_delta_along_fundamental_equals_lambda(sphere, rng):
    rep = spin_rep(sphere, 2)
    f = RealPart(KAverage(MatrixCoefficient(
        rep, rng.standard_normal(3), rng.standard_normal(3)), TrivialKRep(), sphere))
    coords = sphere.random_algebra(rng)
    w = FundamentalField(sphere, coords)
    lam = lambda_deriv(f, coords)
    for _ in range(10):
        x = sphere.random_element(rng)
        delta = f.deriv(x, sphere.from_m(w.value(x).real))
        assert abs(delta - lam.value(x)) < 1e-12


def test_element_caches_survive_object_recycling(sphere):
    """Short-lived representations must not collide in element caches.

    Cache entries are keyed by object id; each entry retains its owner so
    a recycled id from a garbage-collected representation can never serve
    stale values of the wrong dimension.
    """
    import gc
    x = sphere.k_rule.nodes[1]
    for two_j in (2, 1, 4, 1, 3, 2):
        rep = spin_rep(sphere, two_j)
        m = rep.matrix(x)
        assert m.shape == (two_j + 1, two_j + 1)
        assert np.linalg.norm(m @ m.conj().T - np.eye(two_j + 1)) < 1e-12
        del rep, m
        gc.collect()


def test_shared_subgraph_caching(sphere, rng):
    rep = spin_rep(sphere, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(3), rng.standard_normal(3))
    s1 = Scale(f, f)
    s2 = Sum([s1, f])
    pts = EvalPoints.of(sphere, sphere.random_elements(rng, 7))
    v1 = s2.values(pts)
    assert id(f) in pts._vals  # shared child evaluated through the cache
    assert np.allclose(v1, f.values(pts) ** 2 + f.values(pts))
