"""The Hodge-Dirac operator on the Clifford bundle of a homogeneous space.

The spinor module is the Clifford bundle of the tangent module acting on
itself by left multiplication; no spin structure enters.  For a metric
compatible connection the operator is the frame sum

    D phi = sum_j (nabla_{W_j} phi) . W_j

over any standard module frame, and is frame independent because the
summand is module-bilinear in the pair (direction, frame member).  The
module provides the operator itself, the gradient on scalar functions,
the defect measurements for the multiplication-commutator identity and
for formal self-adjointness, the equivalent trace/correction criteria
that decide self-adjointness for compatible invariant connections, exact
finite matrices of D on left-translation isotypic blocks, and the metric
lower-bound estimator driven by gradient sup norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cliffordalg import CliffordAlgebra
from .groups import GroupElement, GroupModel, QuadratureRule
from .reps import UnitaryRep, spin_rep
from .sections import (
    CliffordKRep,
    CliffordProduct,
    EmbedTangent,
    EvalPoints,
    HarmonicSpinor,
    Scale,
    Section,
    Sum,
    l2_inner,
)
from .geometry import (
    ApplyConnection,
    Connection,
    canonical_connection,
    canonical_derivative,
    levi_civita_connection,
    tangent_frame,
    torsion_trace,
)

__all__ = [
    "spinor_algebra",
    "hodge_dirac",
    "gradient",
    "commutator_defect",
    "selfadjoint_defect",
    "CriterionReport",
    "criterion_check",
    "connection_test_matrix",
    "minimal_violating_connection",
    "SpectralBlock",
    "isotypic_coefficients",
    "isotypic_basis",
    "spectral_block",
    "block_closure",
    "kernel_count",
    "grade_compressed_square",
    "casimir_value",
    "metric_estimate",
    "orbit_vector",
    "geodesic_arc",
    "coefficient_family",
]

_CRITERION_TOL = 1e-8


def spinor_algebra(group: GroupModel) -> CliffordAlgebra:
    """The Clifford algebra over the tangent complement, cached on the group."""
    alg = getattr(group, "_spinor_algebra", None)
    if alg is None:
        alg = CliffordAlgebra(group.m_dim)
        group._spinor_algebra = alg
    return alg


def hodge_dirac(connection: Connection, phi: Section,
                frame: list | None = None) -> Section:
    """Apply the Hodge-Dirac operator of a compatible connection to a spinor.

    The connection correction must be skew-valued (metric compatible) so it
    extends to derivations of the Clifford bundle; other corrections are
    rejected.  A non-default orthonormal frame may be passed to exercise
    frame independence.
    """
    if not connection.is_compatible:
        raise ValueError("the Clifford extension needs a metric-compatible connection")
    if phi.codomain.kind != "clifford":
        raise ValueError("the Hodge-Dirac operator acts on Clifford-valued sections")
    g = connection.group
    algebra = spinor_algebra(g)
    frame = frame if frame is not None else tangent_frame(g)
    ckrep = CliffordKRep(g, algebra)
    terms = [
        CliffordProduct(algebra,
                        ApplyConnection(connection, wj, phi).set_algebra(algebra),
                        EmbedTangent(algebra, wj, clifford_krep=ckrep))
        for wj in frame
    ]
    return Sum(terms)


def gradient(group: GroupModel, f: Section, frame: list | None = None) -> Section:
    """The tangent section metrically dual to df: sum_j W_j (delta_{W_j} f)."""
    if f.codomain.kind != "scalar":
        raise ValueError("gradients are defined for scalar sections")
    frame = frame if frame is not None else tangent_frame(group)
    return Sum([Scale(wj, canonical_derivative(group, wj, f)) for wj in frame])


def commutator_defect(connection: Connection, f: Section, phi: Section,
                      pts: EvalPoints) -> float:
    """max_x || D(phi f) - (D phi) f - phi . grad_f || over the sample points.

    The identity [D, M_f] phi = phi . grad_f holds for every compatible
    connection entering D; the returned defect is its pointwise residual.
    """
    g = connection.group
    algebra = spinor_algebra(g)
    lhs = hodge_dirac(connection, Scale(phi, f))
    mid = Scale(hodge_dirac(connection, phi), f)
    grad = EmbedTangent(algebra, gradient(g, f))
    rhs = CliffordProduct(algebra, phi, grad)
    resid = Sum([lhs, mid, rhs], [1.0, -1.0, -1.0])
    vals = resid.values(pts)
    return float(np.linalg.norm(vals, axis=1).max())


def selfadjoint_defect(connection: Connection, pairs: list,
                       rule: QuadratureRule) -> float:
    """max | <D phi, psi> - <phi, D psi> | over the test pairs."""
    worst = 0.0
    g = connection.group
    for phi, psi in pairs:
        a = l2_inner(hodge_dirac(connection, phi), psi, rule, g)
        b = l2_inner(phi, hodge_dirac(connection, psi), rule, g)
        worst = max(worst, abs(a - b))
    return float(worst)


@dataclass
class CriterionReport:
    """Result of the self-adjointness criterion for a compatible connection."""

    torsion_trace_max: float
    correction_sum_residual: float
    tolerance: float = _CRITERION_TOL

    @property
    def passes(self) -> bool:
        return (self.torsion_trace_max <= self.tolerance
                and self.correction_sum_residual <= self.tolerance)

    @property
    def verdict(self) -> str:
        return "self-adjoint" if self.passes else "not-self-adjoint"

    @property
    def consistent(self) -> bool:
        """The two equivalent residuals must pass or fail together."""
        return ((self.torsion_trace_max <= self.tolerance)
                == (self.correction_sum_residual <= self.tolerance))


def criterion_check(connection: Connection, pts: EvalPoints,
                    tolerance: float = _CRITERION_TOL) -> CriterionReport:
    """Evaluate both equivalent self-adjointness criteria on sample points.

    The trace criterion measures the per-direction torsion trace over the
    frame directions; the correction criterion measures the frame sum of
    the zero-order term applied to the frame itself.  For compatible
    invariant connections the two vanish together.
    """
    if not connection.is_compatible:
        raise ValueError("the criterion applies to metric-compatible connections")
    g = connection.group
    frame = tangent_frame(g)
    trace_max = 0.0
    for u in frame:
        tt = torsion_trace(connection, u)
        trace_max = max(trace_max, float(np.abs(tt.values(pts)).max()))
    canon = canonical_connection(g)
    correction = Sum([
        Sum([ApplyConnection(connection, wj, wj),
             ApplyConnection(canon, wj, wj)], [1.0, -1.0])
        for wj in frame
    ])
    corr_res = float(np.linalg.norm(correction.values(pts), axis=1).max())
    return CriterionReport(trace_max, corr_res, tolerance)


def _balanced_random_gamma(group: GroupModel, rng: np.random.Generator) -> np.ndarray:
    """Random skew-valued gamma with the frame correction sum equal to zero.

    The correction sum of a pointwise gamma is the constant vector
    sum_a gamma(u_a) u_a; a least-squares step removes it within the space
    of skew-matrix tuples.
    """
    p = group.m_dim
    gamma = np.stack([_random_skew(rng, p) for _ in range(p)])
    basis = []
    for a in range(p):
        for i in range(p):
            for j in range(i + 1, p):
                s = np.zeros((p, p, p))
                s[a, i, j] = 1.0
                s[a, j, i] = -1.0
                basis.append(s)
    basis = np.array(basis)
    targets = np.einsum("kaia->ki", basis)  # correction sum of each basis tuple
    current = np.einsum("aia->i", gamma)
    coef, *_ = np.linalg.lstsq(targets.T, -current, rcond=None)
    gamma = gamma + np.einsum("k,kaij->aij", coef, basis)
    assert np.linalg.norm(np.einsum("aia->i", gamma)) < 1e-12
    return gamma


def _violating_random_gamma(group: GroupModel, rng: np.random.Generator) -> np.ndarray:
    """Random skew-valued gamma whose frame correction sum is bounded away from zero."""
    p = group.m_dim
    while True:
        gamma = np.stack([_random_skew(rng, p) for _ in range(p)])
        if np.linalg.norm(np.einsum("aia->i", gamma)) >= 0.5:
            return gamma


def _random_skew(rng: np.random.Generator, p: int) -> np.ndarray:
    a = rng.standard_normal((p, p))
    return (a - a.T) / 2.0


def minimal_violating_connection(group: GroupModel) -> Connection:
    """The smallest correction that breaks self-adjointness.

    One rotation generator in the plane of the first two tangent axes,
    attached to the first frame direction: its correction sum is the
    second axis, so both criteria fail while the connection stays
    metric compatible.
    """
    p = group.m_dim
    if p < 2:
        raise ValueError("needs at least two tangent directions")
    rot = np.zeros((p, p))
    rot[1, 0], rot[0, 1] = 1.0, -1.0
    gamma = np.zeros((p, p, p))
    gamma[0] = rot
    return Connection(group, gamma, name="violating-minimal")


def connection_test_matrix(group: GroupModel, rng: np.random.Generator,
                           n_good: int = 5, n_bad: int = 5) -> list:
    """Named connections spanning both sides of the self-adjointness criterion.

    On quotients with a nontrivial subgroup the intertwining condition
    pins the compatible invariant connection family down to the canonical
    one (which coincides with Levi-Civita on symmetric spaces), so the
    random entries only exist over a trivial subgroup.
    """
    out = [("canonical", canonical_connection(group)),
           ("levi-civita", levi_civita_connection(group))]
    if group.k_dim == 0:
        for i in range(n_good):
            out.append((f"balanced-{i}",
                        Connection(group, _balanced_random_gamma(group, rng),
                                   name=f"balanced-{i}")))
        out.append(("violating-minimal", minimal_violating_connection(group)))
        for i in range(n_bad - 1):
            out.append((f"violating-{i}",
                        Connection(group, _violating_random_gamma(group, rng),
                                   name=f"violating-{i}")))
    return out


# -- isotypic blocks -----------------------------------------------------------


def isotypic_coefficients(group: GroupModel, level: int) -> list:
    """Per-grade orthonormal bases of the invariant coefficient space.

    A level-``level`` profile sum_{r,T} C[r,T] rho(x)[row,r] e_T is an
    equivariant spinor exactly when rho(s) C = C K(s) for subgroup
    elements s, with K the Clifford extension of the tangent action.  The
    subgroup average of the induced action on coefficient space projects
    onto the solutions; its fixed space is extracted per Clifford grade
    (the action is grade-preserving) so basis members carry a pure grade.
    Returns a list of (grade, coefficient-matrix) pairs.
    """
    algebra = spinor_algebra(group)
    rep = spin_rep(group, 2 * level)
    ckrep = CliffordKRep(group, algebra)
    dim_r, dim_c = rep.dim, algebra.n
    proj = np.zeros((dim_r * dim_c, dim_r * dim_c), dtype=complex)
    for s, w in zip(group.k_rule.nodes, group.k_rule.weights):
        rho = rep.matrix(s).conj().T          # rho(s)^{-1}
        kmat = ckrep.matrix(s).real           # K(s); vec(A C B) = kron(A, B^T) vec(C)
        proj += w * np.kron(rho, kmat.T)
    out = []
    for grade in range(algebra.p + 1):
        cols = np.where(algebra.grades == grade)[0]
        mask = np.zeros(dim_c)
        mask[cols] = 1.0
        sub = proj * np.kron(np.ones((dim_r, dim_r)), np.outer(mask, mask))
        w, v = np.linalg.eigh((sub + sub.conj().T) / 2.0)
        for col in np.where(w > 0.5)[0]:
            c = v[:, col].reshape(dim_r, dim_c)
            out.append((grade, c))
    return out


def isotypic_basis(group: GroupModel, level: int) -> list:
    """Orthonormal spinor basis of the left-translation isotypic level.

    Entries are (row, grade, section); the scaling by sqrt(dim) makes the
    family orthonormal for the quadrature inner product by Schur
    orthogonality, which the spectral assembly re-verifies numerically.
    """
    algebra = spinor_algebra(group)
    rep = spin_rep(group, 2 * level)
    ckrep = CliffordKRep(group, algebra)
    coeffs = isotypic_coefficients(group, level)
    basis = []
    for row in range(rep.dim):
        for grade, c in coeffs:
            section = HarmonicSpinor(rep, row, np.sqrt(rep.dim) * c, algebra, krep=ckrep)
            basis.append((row, grade, section))
    return basis


@dataclass
class SpectralBlock:
    """The finite matrix of D on one left-translation isotypic level."""

    level: int
    grades: np.ndarray
    rows: np.ndarray
    matrix: np.ndarray
    gram_defect: float
    asymmetry: float
    eigenvalues: np.ndarray = field(default=None)
    sections: list = field(default=None, repr=False)
    dirac_values: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def spectral_block(connection: Connection, level: int,
                   rule: QuadratureRule) -> SpectralBlock:
    """Assemble and diagonalize D restricted to one isotypic level.

    The matrix is symmetrized before the eigensolve and the asymmetry norm
    reported, so quadrature noise cannot leak complex eigenvalues for
    criterion-passing connections.
    """
    g = connection.group
    basis = isotypic_basis(g, level)
    if not basis:
        return SpectralBlock(level, np.zeros(0, int), np.zeros(0, int),
                             np.zeros((0, 0)), 0.0, 0.0, np.zeros(0), [], None)
    needed = 2 * level + 2 * g.ad_bandwidth
    if rule.kind == "exact" and rule.bandwidth < needed:
        raise ValueError(
            f"rule bandwidth {rule.bandwidth} below the requirement {needed} for level {level}")
    pts = EvalPoints.for_rule(g, rule)
    sections = [b[2] for b in basis]
    vals = np.stack([s.values(pts) for s in sections])
    dvals = np.stack([hodge_dirac(connection, s).values(pts) for s in sections])
    gram = np.einsum("n,anT,bnT->ab", rule.weights, vals.conj(), vals)
    gram_defect = float(np.abs(gram - np.eye(len(basis))).max())
    matrix = np.einsum("n,anT,bnT->ab", rule.weights, vals.conj(), dvals)
    asymmetry = float(np.abs(matrix - matrix.conj().T).max())
    sym = (matrix + matrix.conj().T) / 2.0
    eigenvalues = np.linalg.eigvalsh(sym)
    return SpectralBlock(level, np.array([b[1] for b in basis]),
                         np.array([b[0] for b in basis]), matrix,
                         gram_defect, asymmetry, eigenvalues, sections, dvals)


def block_closure(blocks: list, rule: QuadratureRule, group: GroupModel) -> float:
    """max |<xi at one level, D xi at another>|: the off-block leakage of D."""
    pts = EvalPoints.for_rule(group, rule)
    worst = 0.0
    for a in blocks:
        if not a.sections:
            continue
        avals = np.stack([s.values(pts) for s in a.sections])
        for b in blocks:
            if b.level == a.level or b.dirac_values is None or not b.sections:
                continue
            cross = np.einsum("n,anT,bnT->ab", rule.weights, avals.conj(), b.dirac_values)
            worst = max(worst, float(np.abs(cross).max()))
    return worst


def kernel_count(blocks: list, tol: float = 1e-6) -> int:
    return int(sum(int(np.sum(np.abs(b.eigenvalues) < tol)) for b in blocks))


def grade_compressed_square(block: SpectralBlock, grade: int = 0) -> np.ndarray:
    """Eigenvalues of D^2 compressed to the basis vectors of one grade."""
    sym = (block.matrix + block.matrix.conj().T) / 2.0
    sq = sym @ sym
    idx = np.where(block.grades == grade)[0]
    return np.linalg.eigvalsh(sq[np.ix_(idx, idx)])


def casimir_value(rep: UnitaryRep) -> float:
    """The quadratic Casimir eigenvalue of an irreducible representation.

    Computed from the generator images alone: minus the normalized trace
    of the sum of squared generators.
    """
    total = np.einsum("aij,ajk->ik", rep.generators, rep.generators)
    return float((-np.trace(total) / rep.dim).real)


# -- metric estimation -----------------------------------------------------------


def orbit_vector(group: GroupModel, x: GroupElement) -> np.ndarray:
    """Adjoint image of the isotropy axis: the unit-sphere embedding of xK."""
    if group.k_dim != 1:
        raise ValueError("orbit vectors are defined for circle quotients")
    return group.adjoint_matrix(x) @ group.k_frame[0]


def geodesic_arc(group: GroupModel, p: GroupElement, q: GroupElement,
                 count: int = 64) -> list:
    """Group elements projecting onto the geodesic arc between two cosets.

    Obtained by rotating ``p`` about the axis orthogonal to both orbit
    vectors; used to densify gradient sup-norm sampling where the
    distance-realizing test functions attain their maxima.
    """
    np_, nq = orbit_vector(group, p), orbit_vector(group, q)
    cosang = float(np.clip(np.dot(np_, nq), -1.0, 1.0))
    angle = float(np.arccos(cosang))
    axis = np.cross(np_, nq)
    nrm = np.linalg.norm(axis)
    if nrm < 1e-12:
        return [p, q]
    axis = axis / nrm
    out = []
    for t in np.linspace(0.0, angle, count):
        rot = group.exp(axis * np.sqrt(group.metric_scale), t)
        out.append(rot @ p)
    return out


def metric_estimate(group: GroupModel, p: GroupElement, q: GroupElement,
                    family: list, rule: QuadratureRule,
                    extra_points: list | None = None) -> float:
    """Lower bound on the quotient metric from a family of test functions.

    Each function is normalized by the measured sup of its gradient norm
    (the operator norm of its Dirac commutator); the estimate is the best
    normalized separation over the family.  The sup is a max over the
    quadrature nodes plus optional extra sample points, so callers probing
    tight bounds should densify near the expected maximizers (the
    geodesic arc between the two points).
    """
    if not family:
        raise ValueError("empty test function family")
    pts = EvalPoints.for_rule(group, rule)
    eval_pts = [pts]
    if extra_points:
        eval_pts.append(EvalPoints.of(group, list(extra_points)))
    ends = EvalPoints.of(group, [p, q])
    best = 0.0
    for f in family:
        grad = gradient(group, f)
        sup = max(float(np.linalg.norm(grad.values(ep), axis=1).max())
                  for ep in eval_pts)
        if sup < 1e-14:
            continue
        fp, fq = f.values(ends)
        best = max(best, float(abs((fp - fq).real) / sup))
    return best


def coefficient_family(group: GroupModel, max_two_j: int = 4,
                       vectors: list | None = None) -> list:
    """Real matrix-coefficient test functions on the circle quotient.

    Real and imaginary parts of the invariant-column coefficients of the
    integer levels up to ``max_two_j``; optionally extended by linear
    functionals of the orbit vector (adjoint coefficients) for the given
    direction vectors.
    """
    from .sections import ImagPart, MatrixCoefficient, RealPart
    from .reps import adjoint_rep

    fam = []
    k_axis = group.k_frame[0]
    ar = adjoint_rep(group)
    for v in (vectors or []):
        fam.append(MatrixCoefficient(ar, np.asarray(v, dtype=float), k_axis))
    for two_j in range(2, max_two_j + 1, 2):
        rep = spin_rep(group, two_j)
        col = two_j // 2  # the subgroup-invariant weight column
        for row in range(rep.dim):
            coef = MatrixCoefficient(rep, np.eye(rep.dim)[row], np.eye(rep.dim)[col])
            fam.append(RealPart(coef))
            fam.append(ImagPart(coef))
    return fam
