"""The invariant check suite behind the ``verify`` command.

Each check measures one identity as a residual, compares it against its
tolerance (overridable per check id through the config) and reports a
dictionary row.  Checks are pure measurements; the expected values come
from closed-form identities or independent recomputation, never from the
code path under test.
"""

from __future__ import annotations

import numpy as np

from .bundles import (
    build_frame,
    frame_gram,
    module_map_values,
    monopole_bundle,
    projection_section,
    random_equivariant_section,
    rank_one_endo,
    tangent_bundle,
)
from .dirac import (
    commutator_defect,
    criterion_check,
    hodge_dirac,
    selfadjoint_defect,
    spinor_algebra,
)
from .geometry import (
    ApplyConnection,
    canonical_connection,
    levi_civita_connection,
    tangent_frame,
    torsion,
)
from .groups import GroupElement, GroupModel
from .reps import spin_rep
from .sections import (
    AInner,
    CliffordKRep,
    Codomain,
    Constant,
    EvalPoints,
    FundamentalField,
    KAverage,
    MatrixCoefficient,
    OpApply,
    RealPart,
    Scale,
    Sum,
    Translate,
    TrivialKRep,
    equivariance_defect,
    l2_inner,
    lambda_deriv,
    translate,
)

__all__ = ["run_suite"]


class _Context:
    """Shared lazily-built objects for one verify run."""

    def __init__(self, cfg, group: GroupModel, rng: np.random.Generator):
        self.cfg = cfg
        self.group = group
        self.rng = rng
        self.samples = group.random_elements(rng, cfg.sample_count)
        self.pts = EvalPoints.of(group, self.samples)
        self.rule = group.haar_rule(cfg.quadrature_bandwidth)
        self.connection = cfg.make_connection(group)
        self.algebra = spinor_algebra(group)
        if cfg.bundle == "monopole":
            self.bundle = monopole_bundle(group, cfg.charge,
                                          cfg.level if cfg.level >= 0 else None)
        else:
            self.bundle = tangent_bundle(group)
        self._scalar = None

    def scalar_section(self):
        """A band-limited right-invariant scalar test function."""
        if self._scalar is None:
            rep = spin_rep(self.group, 2)
            f = MatrixCoefficient(rep, self.rng.standard_normal(rep.dim),
                                  self.rng.standard_normal(rep.dim))
            self._scalar = RealPart(KAverage(f, TrivialKRep(), self.group))
        return self._scalar

    def spinor(self, max_two_j: int = 2):
        """A random band-limited equivariant spinor section."""
        g, alg, rng = self.group, self.algebra, self.rng
        parts = []
        for _ in range(2):
            c = Constant(Codomain.clifford(alg), rng.standard_normal(alg.n), group=g)
            two_j = int(rng.integers(0, max_two_j + 1))
            if two_j:
                rep = spin_rep(g, two_j)
                c = Scale(c, RealPart(MatrixCoefficient(
                    rep, rng.standard_normal(rep.dim), rng.standard_normal(rep.dim))))
            parts.append(c)
        return KAverage(Sum(parts), CliffordKRep(g, alg), g)


# -- group and algebra checks ----------------------------------------------------


def _check_exp_unitarity(ctx: _Context):
    worst, count = 0.0, 0
    for _ in range(20):
        coords = ctx.group.random_algebra(ctx.rng)
        t = float(ctx.rng.uniform(-3.0, 3.0))
        worst = max(worst, ctx.group.exp(coords, t).unitary_defect())
        count += 1
    return worst, count


def _check_ad_invariance(ctx: _Context):
    g, rng = ctx.group, ctx.rng
    worst = 0.0
    n = 200
    for _ in range(n):
        x = g.random_element(rng)
        a, b = g.random_algebra(rng), g.random_algebra(rng)
        worst = max(worst, abs(float(np.dot(g.adjoint(x, a), g.adjoint(x, b))
                                     - np.dot(a, b))))
    return worst, n


def _check_subalgebra(ctx: _Context):
    g = ctx.group
    worst = 0.0
    for i in range(g.k_dim):
        for j in range(g.k_dim):
            br = g.bracket(g.k_frame[i], g.k_frame[j])
            worst = max(worst, float(np.linalg.norm(g.project_m(br))))
    return worst, g.k_dim * g.k_dim


def _check_quadrature_normalization(ctx: _Context):
    return abs(float(ctx.rule.weights.sum()) - 1.0), len(ctx.rule)


def _check_left_invariance(ctx: _Context):
    g, rng, rule = ctx.group, ctx.rng, ctx.rule
    rep = spin_rep(g, 2)
    f = MatrixCoefficient(rep, rng.standard_normal(rep.dim), rng.standard_normal(rep.dim))
    f2 = Scale(f, MatrixCoefficient(rep, rng.standard_normal(rep.dim),
                                    rng.standard_normal(rep.dim)))
    one = Constant(Codomain.scalar(), 1.0, krep=TrivialKRep(), group=g)
    worst = 0.0
    for _ in range(3):
        y = g.random_element(rng)
        a = l2_inner(one, f2, rule, g)
        b = l2_inner(one, translate(f2, y), rule, g)
        worst = max(worst, abs(a - b))
    return worst, 3 * len(rule)


def _check_clifford_relation(ctx: _Context):
    alg = ctx.algebra
    worst = 0.0
    for i in range(alg.p):
        for j in range(alg.p):
            anti = alg.mul(alg.generator(i), alg.generator(j)) \
                + alg.mul(alg.generator(j), alg.generator(i))
            expect = -2.0 * (i == j) * alg.unit()
            worst = max(worst, float(np.abs(anti - expect).max()))
    return worst, alg.p * alg.p


def _check_clifford_associativity(ctx: _Context):
    alg, rng = ctx.algebra, ctx.rng
    worst = 0.0
    for _ in range(100):
        a, b, c = (alg.random(rng) for _ in range(3))
        worst = max(worst, float(np.abs(
            alg.mul(alg.mul(a, b), c) - alg.mul(a, alg.mul(b, c))).max()))
    return worst, 100


def _check_clifford_star(ctx: _Context):
    alg, rng = ctx.algebra, ctx.rng
    worst = 0.0
    for _ in range(50):
        a, u, v = (alg.random(rng) for _ in range(3))
        lhs = alg.inner(alg.mul(a, u), v)
        rhs = alg.inner(u, alg.mul(alg.star(a), v))
        worst = max(worst, abs(lhs - rhs))
    return worst, 50


def _check_derivative_consistency(ctx: _Context):
    """Central differences of section values must converge at second order."""
    g, rng = ctx.group, ctx.rng
    rep = spin_rep(g, 3)
    sections = [
        MatrixCoefficient(rep, rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim),
                          rng.standard_normal(rep.dim)),
        FundamentalField(g, g.random_algebra(rng)),
        ctx.spinor(),
    ]
    worst, count = 0.0, 0
    for sec in sections:
        for _ in range(8):
            x = g.random_element(rng)
            y = g.random_algebra(rng)
            exact = np.atleast_1d(sec.deriv(x, y, g))
            errs = []
            for h in (1e-4, 5e-5):
                xp = GroupElement(x.matrix @ g.exp(y, h).matrix)
                xm = GroupElement(x.matrix @ g.exp(y, -h).matrix)
                fd = (np.atleast_1d(sec.value(xp, g)) - np.atleast_1d(sec.value(xm, g))) / (2 * h)
                errs.append(float(np.linalg.norm(fd - exact)))
            # below the roundoff floor the truncation ratio is meaningless:
            # a wrong derivative would show an O(1) error here instead
            scale = max(1.0, float(np.linalg.norm(exact)))
            ratio = 4.0 if errs[0] < 1e-8 * scale else errs[0] / errs[1]
            worst = max(worst, abs(ratio - 4.0))
            count += 1
    return worst, count


def _check_product_rule(ctx: _Context):
    g, rng, alg = ctx.group, ctx.rng, ctx.algebra
    from .sections import CliffordProduct
    a, b = ctx.spinor(), ctx.spinor()
    prod = CliffordProduct(alg, a, b)
    worst = 0.0
    for _ in range(20):
        x = g.random_element(rng)
        y = g.random_algebra(rng)
        lhs = prod.deriv(x, y, g)
        rhs = alg.mul(a.deriv(x, y, g), b.value(x, g)) + alg.mul(a.value(x, g), b.deriv(x, y, g))
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst, 20


# -- bundle checks ------------------------------------------------------------------


def _check_frame_equivariance(ctx: _Context):
    b, g = ctx.bundle, ctx.group
    worst = 0.0
    for eta in build_frame(b):
        for s in g.k_rule.nodes[:5]:
            worst = max(worst, equivariance_defect(eta, ctx.samples[0], s, g))
    return worst, 5 * b.ambient_dim


def _check_reproducing(ctx: _Context):
    b, g = ctx.bundle, ctx.group
    frame = build_frame(b)
    worst = 0.0
    for _ in range(3):
        xi = random_equivariant_section(b, ctx.rng)
        recon = Sum([Scale(eta, AInner(eta, xi)) for eta in frame])
        worst = max(worst, float(np.abs(recon.values(ctx.pts) - xi.values(ctx.pts)).max()))
    return worst, 3 * ctx.pts.n


def _check_projection_idempotent(ctx: _Context):
    pv = projection_section(ctx.bundle).values(ctx.pts)
    res = np.abs(np.einsum("nij,njk->nik", pv, pv) - pv).max()
    res = max(res, np.abs(pv - np.conj(np.transpose(pv, (0, 2, 1)))).max())
    return float(res), ctx.pts.n


def _check_projection_trace(ctx: _Context):
    pv = projection_section(ctx.bundle).values(ctx.pts)
    return float(np.abs(np.einsum("nii->n", pv) - ctx.bundle.fiber_dim).max()), ctx.pts.n


def _check_gram_matches_projection(ctx: _Context):
    pv = projection_section(ctx.bundle).values(ctx.pts)
    gv = frame_gram(ctx.bundle).values(ctx.pts)
    return float(np.abs(pv - gv).max()), ctx.pts.n


def _check_module_map_range(ctx: _Context):
    b = ctx.bundle
    pv = projection_section(b).values(ctx.pts)
    worst = 0.0
    for _ in range(3):
        xi = random_equivariant_section(b, ctx.rng)
        mm = module_map_values(b, xi, ctx.pts)
        worst = max(worst, float(np.abs(np.einsum("nij,nj->ni", pv, mm) - mm).max()))
    return worst, 3 * ctx.pts.n


def _check_endo_reconstruction(ctx: _Context):
    b = ctx.bundle
    frame = build_frame(b)
    worst = 0.0
    for _ in range(20):
        zeta = random_equivariant_section(b, ctx.rng)
        eta = random_equivariant_section(b, ctx.rng)
        t = rank_one_endo(zeta, eta)
        recon = Sum([rank_one_endo(OpApply(t, fj), fj) for fj in frame])
        worst = max(worst, float(np.abs(recon.values(ctx.pts) - t.values(ctx.pts)).max()))
    return worst, 20 * ctx.pts.n


# -- geometry checks -----------------------------------------------------------------


def _check_frame_identity(ctx: _Context):
    g = ctx.group
    frame = tangent_frame(g)
    w = Sum([Scale(frame[0], ctx.scalar_section()), frame[1]])
    recon = Sum([Scale(fj, AInner(fj, w)) for fj in frame])
    return float(np.abs(recon.values(ctx.pts) - w.values(ctx.pts)).max()), ctx.pts.n


def _check_frame_norm_sum(ctx: _Context):
    g = ctx.group
    frame = tangent_frame(g)
    norms = Sum([AInner(fj, fj) for fj in frame])
    return float(np.abs(norms.values(ctx.pts) - g.m_dim).max()), ctx.pts.n


def _check_bracket_identity(ctx: _Context):
    """Commutator of fundamental derivations equals the bracket field."""
    g, rng = ctx.group, ctx.rng
    f = ctx.scalar_section()
    worst, count = 0.0, 0
    for _ in range(5):
        a, b = g.random_algebra(rng), g.random_algebra(rng)
        comm = Sum([lambda_deriv(lambda_deriv(f, b), a),
                    lambda_deriv(lambda_deriv(f, a), b)], [1.0, -1.0])
        bracket_field = FundamentalField(g, g.bracket(a, b))
        for x in ctx.samples[:10]:
            direction = g.from_m(bracket_field.value(x, g).real)
            worst = max(worst, abs(complex(comm.value(x, g))
                                   - complex(f.deriv(x, direction, g))))
            count += 1
    return worst, count


def _check_compatibility(ctx: _Context):
    g = ctx.group
    conn = ctx.connection if ctx.connection.is_compatible else levi_civita_connection(g)
    frame = tangent_frame(g)
    xi = FundamentalField(g, g.random_algebra(ctx.rng))
    eta = FundamentalField(g, g.random_algebra(ctx.rng))
    worst = 0.0
    for wj in frame:
        lhs = ApplyConnection(conn, wj, AInner(xi, eta)).values(ctx.pts)
        rhs = (AInner(ApplyConnection(conn, wj, xi), eta).values(ctx.pts)
               + AInner(xi, ApplyConnection(conn, wj, eta)).values(ctx.pts))
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst, len(frame) * ctx.pts.n


def _check_connection_invariance(ctx: _Context):
    g = ctx.group
    conn = ctx.connection if ctx.connection.is_compatible else canonical_connection(g)
    w = FundamentalField(g, g.random_algebra(ctx.rng))
    xi = FundamentalField(g, g.random_algebra(ctx.rng))
    worst = 0.0
    for _ in range(3):
        y = g.random_element(ctx.rng)
        left = Translate(ApplyConnection(conn, w, xi), y).values(ctx.pts)
        right = ApplyConnection(conn, Translate(w, y), Translate(xi, y)).values(ctx.pts)
        worst = max(worst, float(np.abs(left - right).max()))
    return worst, 3 * ctx.pts.n


def _check_canonical_torsion(ctx: _Context):
    g = ctx.group
    v = FundamentalField(g, g.random_algebra(ctx.rng))
    w = FundamentalField(g, g.random_algebra(ctx.rng))
    tv = torsion(canonical_connection(g), v, w).values(ctx.pts)
    vv, wv = v.values(ctx.pts), w.values(ctx.pts)
    expect = -np.stack([g.bracket_m(vv[n].real, wv[n].real) for n in range(ctx.pts.n)])
    return float(np.abs(tv - expect).max()), ctx.pts.n


def _check_levi_civita_torsion(ctx: _Context):
    g = ctx.group
    lc = levi_civita_connection(g)
    v = FundamentalField(g, g.random_algebra(ctx.rng))
    w = FundamentalField(g, g.random_algebra(ctx.rng))
    return float(np.abs(torsion(lc, v, w).values(ctx.pts)).max()), ctx.pts.n


def _check_metric_derivative_balance(ctx: _Context):
    """sum_j <nabla_U W_j, W_j> vanishes for compatible connections."""
    g = ctx.group
    conn = ctx.connection if ctx.connection.is_compatible else levi_civita_connection(g)
    frame = tangent_frame(g)
    u = FundamentalField(g, g.random_algebra(ctx.rng))
    total = Sum([AInner(ApplyConnection(conn, u, wj), wj) for wj in frame])
    return float(np.abs(total.values(ctx.pts)).max()), ctx.pts.n


# -- Dirac checks ---------------------------------------------------------------------


def _dirac_connection(ctx: _Context):
    return ctx.connection if ctx.connection.is_compatible else None


def _check_dirac_frame_independence(ctx: _Context):
    conn = _dirac_connection(ctx)
    if conn is None:
        return float("inf"), 0
    g = ctx.group
    phi = ctx.spinor()
    base = hodge_dirac(conn, phi)
    q, _ = np.linalg.qr(ctx.rng.standard_normal((g.dim, g.dim)))
    other = hodge_dirac(conn, phi, frame=tangent_frame(g, q.T))
    return float(np.abs(base.values(ctx.pts) - other.values(ctx.pts)).max()), ctx.pts.n


def _check_dirac_translation(ctx: _Context):
    conn = _dirac_connection(ctx)
    if conn is None:
        return float("inf"), 0
    g = ctx.group
    phi = ctx.spinor()
    worst = 0.0
    for _ in range(3):
        y = g.random_element(ctx.rng)
        left = translate(hodge_dirac(conn, phi), y).values(ctx.pts)
        right = hodge_dirac(conn, translate(phi, y)).values(ctx.pts)
        worst = max(worst, float(np.abs(left - right).max()))
    return worst, 3 * ctx.pts.n


def _check_dirac_commutator(ctx: _Context):
    conn = _dirac_connection(ctx)
    if conn is None:
        return float("inf"), 0
    return commutator_defect(conn, ctx.scalar_section(), ctx.spinor(), ctx.pts), ctx.pts.n


def _check_dirac_criterion(ctx: _Context):
    conn = _dirac_connection(ctx)
    if conn is None:
        return float("inf"), 0
    report = criterion_check(conn, ctx.pts)
    return max(report.torsion_trace_max, report.correction_sum_residual), ctx.pts.n


def _check_dirac_defect(ctx: _Context):
    conn = _dirac_connection(ctx)
    if conn is None:
        return float("inf"), 0
    g, alg = ctx.group, ctx.algebra
    one = Constant(Codomain.clifford(alg), alg.unit(),
                   krep=CliffordKRep(g, alg), group=g)
    pairs = [(ctx.spinor(), ctx.spinor()) for _ in range(4)]
    pairs += [(ctx.spinor(), one)]
    return selfadjoint_defect(conn, pairs, ctx.rule), len(pairs) * len(ctx.rule)


_GROUP_CHECKS = [
    ("algebra.exp-unitarity", "exponentials stay in the group", 1e-12, _check_exp_unitarity),
    ("algebra.ad-invariance", "inner product is conjugation invariant", 1e-12, _check_ad_invariance),
    ("algebra.subalgebra-closure", "isotropy basis closes under brackets", 1e-12, _check_subalgebra),
    ("quadrature.normalization", "rule integrates constants to one", 1e-13, _check_quadrature_normalization),
    ("quadrature.left-invariance", "rule is left-translation invariant", 1e-10, _check_left_invariance),
    ("clifford.defining-relation", "generators anticommute to the metric", 1e-14, _check_clifford_relation),
    ("clifford.associativity", "product is associative", 1e-12, _check_clifford_associativity),
    ("clifford.star-representation", "left action is a star representation", 1e-12, _check_clifford_star),
    ("sections.derivative-consistency", "exact derivatives match central differences", 0.5, _check_derivative_consistency),
    ("sections.product-rule", "derivatives obey the product rule", 1e-10, _check_product_rule),
]

_BUNDLE_CHECKS = [
    ("bundle.frame-equivariance", "frame sections are equivariant", 1e-10, _check_frame_equivariance),
    ("bundle.reproducing-formula", "frame reproduces sections", 1e-10, _check_reproducing),
    ("bundle.projection-idempotent", "projection section squares to itself", 1e-11, _check_projection_idempotent),
    ("bundle.projection-trace", "projection rank equals the fiber dimension", 1e-10, _check_projection_trace),
    ("bundle.gram-projection-match", "frame Gram equals the projection section", 1e-11, _check_gram_matches_projection),
    ("bundle.module-map-range", "free-module image lies in the projection range", 1e-10, _check_module_map_range),
    ("bundle.endomorphism-reconstruction", "rank-one sums rebuild endomorphisms", 1e-10, _check_endo_reconstruction),
]

_GEOMETRY_CHECKS = [
    ("geometry.frame-identity", "fundamental frame reproduces tangent fields", 1e-10, _check_frame_identity),
    ("geometry.frame-norm-sum", "frame norms sum to the tangent dimension", 1e-10, _check_frame_norm_sum),
    ("geometry.bracket-identity", "derivation commutators match bracket fields", 1e-10, _check_bracket_identity),
    ("geometry.compatibility-leibniz", "connection differentiates the metric", 1e-9, _check_compatibility),
    ("geometry.connection-invariance", "connection commutes with translations", 1e-9, _check_connection_invariance),
    ("geometry.canonical-torsion-formula", "canonical torsion equals the projected bracket", 1e-10, _check_canonical_torsion),
    ("geometry.levi-civita-torsion", "the compatible correction kills torsion", 1e-10, _check_levi_civita_torsion),
    ("geometry.metric-derivative-balance", "frame covariant derivatives balance", 1e-10, _check_metric_derivative_balance),
]

_DIRAC_CHECKS = [
    ("dirac.frame-independence", "operator agrees across module frames", 1e-10, _check_dirac_frame_independence),
    ("dirac.translation-commutation", "operator commutes with translations", 1e-9, _check_dirac_translation),
    ("dirac.multiplication-commutator", "commutator with multiplication is the gradient", 1e-9, _check_dirac_commutator),
    ("dirac.selfadjointness-criterion", "trace and correction criteria vanish", 1e-8, _check_dirac_criterion),
    ("dirac.selfadjoint-defect", "pairing defect of the operator", 1e-8, _check_dirac_defect),
]


def run_suite(cfg, group: GroupModel, rng: np.random.Generator) -> list:
    ctx = _Context(cfg, group, rng)
    checks = list(_GROUP_CHECKS) + list(_BUNDLE_CHECKS)
    if cfg.bundle in ("tangent", "clifford"):
        checks += _GEOMETRY_CHECKS
    if cfg.bundle == "clifford":
        checks += _DIRAC_CHECKS
    results = []
    for anchor, name, default_tol, fn in checks:
        tol = float(cfg.tolerances.get(anchor, default_tol))
        residual, samples = fn(ctx)
        results.append({
            "anchor": anchor,
            "name": name,
            "residual": float(residual),
            "tolerance": tol,
            "samples": int(samples),
            "pass": bool(residual <= tol),
        })
    return results
