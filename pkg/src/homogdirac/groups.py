"""Compact matrix Lie groups with a chosen reductive splitting.

A :class:`GroupModel` packages a compact matrix group G together with an
orthonormal basis of its Lie algebra, a closed subgroup K (given by a
subalgebra and a quadrature rule over K), the orthogonal splitting of the
algebra into the isotropy part and its complement, and Haar quadrature
over G.  Everything downstream (bundles, connections, Dirac operators)
consumes the group only through coordinate operations in the orthonormal
basis: exponential, adjoint action, brackets and projections.

Conventions.  The algebra basis is orthonormalized in declared order for
the invariant form ``<A, B> = -c * tr(A B)``, with ``c`` fixed so that the
declared basis has unit norm (times an optional ``metric_scale``).  All
coordinate vectors are expressed in that orthonormal basis.  The isotropy
subalgebra is spanned by ``k_frame`` rows; its orthogonal complement,
conventionally written ``m``, is spanned by ``m_frame`` rows and carries
the induced inner product that defines the invariant metric on G/K.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GroupElement",
    "QuadratureRule",
    "GroupModel",
    "expm_skew",
]

_EXPANSION_TOL = 1e-10
_SUBALGEBRA_TOL = 1e-12
_PIVOT_TOL = 1e-10


class GroupElement:
    """A group element held as a unitary/orthogonal matrix.

    Instances cache derived data (inverse, adjoint matrix, representation
    values) keyed by consumer, so elements should be created once and
    reused when evaluating many sections at the same point.
    """

    __slots__ = ("matrix", "_cache")

    def __init__(self, matrix: np.ndarray):
        self.matrix = np.asarray(matrix, dtype=complex)
        self._cache: dict = {}

    @property
    def inverse(self) -> "GroupElement":
        inv = self._cache.get("inv")
        if inv is None:
            inv = GroupElement(self.matrix.conj().T)
            self._cache["inv"] = inv
        return inv

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix)

    def unitary_defect(self) -> float:
        n = self.matrix.shape[0]
        return float(np.linalg.norm(self.matrix @ self.matrix.conj().T - np.eye(n)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"GroupElement({self.matrix.tolist()!r})"


@dataclass
class QuadratureRule:
    """Nodes and weights for integration over a compact group.

    ``kind`` is "exact" for rules integrating all products of matrix
    coefficients of total spin <= ``bandwidth`` exactly, "monte-carlo"
    for sampled rules whose statistical error scales like ``mc_sigma``.
    """

    nodes: list
    weights: np.ndarray
    bandwidth: float
    kind: str = "exact"
    mc_sigma: float = 0.0
    cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.nodes)


def expm_skew(a: np.ndarray) -> np.ndarray:
    """Exponential of a (skew-Hermitian) matrix via eigendecomposition.

    ``i*a`` is Hermitian, so ``exp(a) = V exp(-i w) V*`` with ``(w, V)``
    the eigendecomposition of ``i*a``.  Supports stacked input.
    """
    w, v = np.linalg.eigh(1j * np.asarray(a, dtype=complex))
    phase = np.exp(-1j * w)
    return np.einsum("...ij,...j,...kj->...ik", v, phase, v.conj())


def _gram_schmidt_matrices(mats: np.ndarray, form) -> np.ndarray:
    """Orthonormalize matrices in declared order for the bilinear form."""
    out = []
    for m in mats:
        v = m.astype(complex)
        for u in out:
            v = v - form(u, v) * u
        nrm = form(v, v)
        if nrm < _PIVOT_TOL:
            raise ValueError("algebra basis is numerically dependent")
        out.append(v / np.sqrt(nrm))
    return np.array(out)


def _su2_raw_basis() -> np.ndarray:
    """The standard su(2) basis -(i/2)*sigma_j, j = 1, 2, 3."""
    s1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    s2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
    s3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    return np.array([-0.5j * s1, -0.5j * s2, -0.5j * s3])


def _su2_log_coords(matrices: np.ndarray) -> np.ndarray:
    """Coordinates X (in the raw -(i/2)sigma basis) with exp(X) = x.

    Works on a stack (N, 2, 2).  Near ``-I`` the rotation axis is chosen
    along the third basis direction; the returned angle lies in [0, 2*pi].
    """
    x = np.asarray(matrices, dtype=complex)
    c = np.clip(x[..., 0, 0].real + x[..., 1, 1].real, -2.0, 2.0) / 2.0
    n1 = -x[..., 0, 1].imag
    n2 = -x[..., 0, 1].real
    n3 = -x[..., 0, 0].imag
    vec = np.stack([n1, n2, n3], axis=-1)
    s = np.linalg.norm(vec, axis=-1)
    t = 2.0 * np.arctan2(s, c)
    safe = s > 1e-14
    axis = np.zeros_like(vec)
    axis[..., 2] = 1.0
    axis[safe] = vec[safe] / s[safe][..., None]
    return axis * t[..., None]


def _qr_haar_unitaries(rng: np.random.Generator, dim: int, count: int,
                       special: bool) -> np.ndarray:
    """Haar samples on U(dim) via QR with phase normalization."""
    z = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[:, None, :]
    if special:
        det = np.linalg.det(q)
        q = q * (det ** (-1.0 / dim))[:, None, None]
    return q


class GroupModel:
    """A compact matrix group with subgroup, splitting and quadrature."""

    def __init__(self, name: str, basis_matrices, subgroup_indices=(),
                 metric_scale: float = 1.0, k_rule_size: int = 33,
                 subgroup_matrices=None):
        raw = np.asarray(basis_matrices, dtype=complex)
        if raw.ndim != 3 or raw.shape[1] != raw.shape[2]:
            raise ValueError("basis_matrices must be a stack of square matrices")
        self.name = name
        self.matrix_dim = raw.shape[1]
        self.dim = raw.shape[0]
        self.metric_scale = float(metric_scale)

        # Fix c in <A,B> = -c tr(AB) so the declared basis has average
        # unit norm, then absorb the optional metric scale.
        raw_sq = float(np.mean([-np.trace(m @ m).real for m in raw]))
        if raw_sq <= 0:
            raise ValueError("basis matrices must have positive -tr(X^2)")
        self.form_factor = self.metric_scale / raw_sq
        form = lambda a, b: float((-self.form_factor * np.trace(a @ b)).real)
        self.basis = _gram_schmidt_matrices(raw, form)

        # Structure constants in the orthonormal basis.
        comm = np.einsum("aij,bjk->abik", self.basis, self.basis)
        comm = comm - np.einsum("abik->baik", comm)
        self.structure = np.einsum("cij,abji->abc", self.basis, comm).real * (-self.form_factor)

        # Isotropy subalgebra frame (coordinates in the orthonormal basis).
        if subgroup_matrices is not None:
            k_coords = np.array([self.matrix_to_coords(m) for m in subgroup_matrices])
        else:
            k_coords = np.eye(self.dim)[list(subgroup_indices)] if len(subgroup_indices) else np.zeros((0, self.dim))
        self.k_frame = self._orthonormal_rows(k_coords)
        self.k_dim = self.k_frame.shape[0]

        proj_k = self.k_frame.T @ self.k_frame if self.k_dim else np.zeros((self.dim, self.dim))
        self.proj_m = np.eye(self.dim) - proj_k
        self.m_frame = self._complement_frame(proj_k)
        self.m_dim = self.m_frame.shape[0]

        self._check_subalgebra()
        self.k_rule = self._build_k_rule(k_rule_size)
        self.ad_bandwidth = 1.0  # adjoint coefficients of SU(2)-like catalog groups

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def _orthonormal_rows(rows: np.ndarray) -> np.ndarray:
        out = []
        for r in rows:
            v = r.astype(float).copy()
            for u in out:
                v -= np.dot(u, v) * u
            nrm = np.linalg.norm(v)
            if nrm < _PIVOT_TOL:
                raise ValueError("subgroup basis is numerically dependent")
            out.append(v / nrm)
        return np.array(out) if out else np.zeros((0, rows.shape[1] if rows.size else 0))

    def _complement_frame(self, proj_k: np.ndarray) -> np.ndarray:
        out = []
        for a in range(self.dim):
            v = np.eye(self.dim)[a] - proj_k @ np.eye(self.dim)[a]
            for u in out:
                v -= np.dot(u, v) * u
            nrm = np.linalg.norm(v)
            # directions already spanned leave residues at roundoff level,
            # far below any genuinely new direction
            if nrm > 1e-6:
                out.append(v / nrm)
        frame = np.array(out)
        if frame.shape[0] != self.dim - self.k_dim:
            raise ValueError("could not build a complement frame")
        return frame

    def _check_subalgebra(self) -> None:
        for i in range(self.k_dim):
            for j in range(self.k_dim):
                br = self.bracket(self.k_frame[i], self.k_frame[j])
                if np.linalg.norm(self.proj_m @ br) > _SUBALGEBRA_TOL:
                    raise ValueError("declared subgroup basis does not close under brackets")

    def _build_k_rule(self, size: int) -> QuadratureRule:
        if self.k_dim == 0:
            return QuadratureRule([self.identity()], np.array([1.0]), np.inf)
        if self.k_dim == 1:
            # Circle subgroup: uniform rule over one full period.  The
            # generator is normalized so the period of exp(t Z) is read off
            # the defining matrices; for the su(2) catalog it is 4*pi.
            z = np.einsum("a,aij->ij", self.k_frame[0], self.basis)
            period = _one_parameter_period(z)
            ts = period * np.arange(size) / size
            nodes = [GroupElement(expm_skew(t * z)) for t in ts]
            return QuadratureRule(nodes, np.full(size, 1.0 / size), (size - 1) / 2)
        raise NotImplementedError("only trivial and one-parameter subgroups are cataloged")

    # -- catalog ---------------------------------------------------------------

    @classmethod
    def su2(cls, metric_scale: float = 1.0, k_rule_size: int = 33) -> "GroupModel":
        """SU(2) with the circle subgroup generated by the third basis axis."""
        return cls("su2", _su2_raw_basis(), subgroup_indices=(2,),
                   metric_scale=metric_scale, k_rule_size=k_rule_size)

    @classmethod
    def su2_trivial_k(cls, metric_scale: float = 1.0) -> "GroupModel":
        """SU(2) with the trivial subgroup; the quotient is SU(2) itself."""
        return cls("su2-trivial-k", _su2_raw_basis(), subgroup_indices=(),
                   metric_scale=metric_scale)

    @classmethod
    def named(cls, name: str, **kwargs) -> "GroupModel":
        catalog = {"su2": cls.su2, "su2-trivial-k": cls.su2_trivial_k}
        if name not in catalog:
            raise KeyError(f"unknown group {name!r}; catalog: {sorted(catalog)}")
        return catalog[name](**kwargs)

    @classmethod
    def from_config(cls, path: str) -> "GroupModel":
        """Load a custom group from a text config.

        The ``[group]`` section must define ``matrix_dim``, ``basis_count``
        and one ``basis_<i>`` entry per generator, each a whitespace
        separated list of ``re im`` pairs in row-major order.  Optional:
        ``subgroup`` (comma separated basis indices), ``scale``, ``name``.
        """
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_string(fh.read())
        sec = cp["group"]
        n = sec.getint("matrix_dim")
        count = sec.getint("basis_count")
        mats = []
        for i in range(count):
            vals = [float(v) for v in sec[f"basis_{i}"].replace(";", " ").split()]
            if len(vals) != 2 * n * n:
                raise ValueError(f"basis_{i}: expected {2 * n * n} numbers, got {len(vals)}")
            flat = np.array(vals).reshape(n * n, 2)
            mats.append((flat[:, 0] + 1j * flat[:, 1]).reshape(n, n))
        sub = tuple(int(s) for s in sec.get("subgroup", "").replace(",", " ").split())
        return cls(sec.get("name", "custom"), np.array(mats), subgroup_indices=sub,
                   metric_scale=sec.getfloat("scale", 1.0))

    # -- basic operations ------------------------------------------------------

    def identity(self) -> GroupElement:
        return GroupElement(np.eye(self.matrix_dim, dtype=complex))

    def algebra_element(self, coords: np.ndarray) -> np.ndarray:
        return np.einsum("a,aij->ij", np.asarray(coords, dtype=float), self.basis)

    def matrix_to_coords(self, m: np.ndarray) -> np.ndarray:
        """Expand an algebra matrix in the orthonormal basis.

        Raises if the expansion residual exceeds the closure tolerance,
        which signals a basis that does not span the matrix.
        """
        coords = np.einsum("aij,ji->a", self.basis, np.asarray(m, dtype=complex))
        coords = (-self.form_factor * coords).real
        residual = np.linalg.norm(self.algebra_element(coords) - m)
        if residual > _EXPANSION_TOL * max(1.0, np.linalg.norm(m)):
            raise ValueError(f"algebra expansion residual {residual:.2e}")
        return coords

    def exp(self, coords: np.ndarray, t: float = 1.0) -> GroupElement:
        """exp(t X) for the algebra vector with the given coordinates."""
        return GroupElement(expm_skew(t * self.algebra_element(coords)))

    def log(self, x: GroupElement) -> np.ndarray:
        """Algebra coordinates X with exp(X) = x (catalog SU(2) only)."""
        if self.matrix_dim != 2:
            raise NotImplementedError("closed-form log is provided for the 2x2 catalog")
        raw = _su2_log_coords(x.matrix)
        # raw coordinates refer to the unnormalized -(i/2)sigma basis
        return raw * np.sqrt(self.metric_scale)

    def log_stack(self, matrices: np.ndarray) -> np.ndarray:
        if self.matrix_dim != 2:
            raise NotImplementedError("closed-form log is provided for the 2x2 catalog")
        return _su2_log_coords(matrices) * np.sqrt(self.metric_scale)

    def adjoint_matrix(self, x: GroupElement) -> np.ndarray:
        """Matrix of Ad_x on the algebra in the orthonormal basis."""
        # the entry keeps the group alive so the id key cannot be recycled
        hit = x._cache.get(("ad", id(self)))
        if hit is not None:
            return hit[1]
        conj = x.matrix @ self.basis @ x.matrix.conj().T
        ad = np.einsum("aij,bji->ab", self.basis, conj).real * (-self.form_factor)
        residual = np.linalg.norm(np.einsum("ba,aij->bij", ad.T, self.basis) - conj)
        if residual > _EXPANSION_TOL * self.dim:
            raise ValueError(f"adjoint expansion residual {residual:.2e}")
        x._cache[("ad", id(self))] = (self, ad)
        return ad

    def adjoint(self, x: GroupElement, coords: np.ndarray) -> np.ndarray:
        """Coordinates of Ad_x X = x X x^{-1}."""
        return self.adjoint_matrix(x) @ np.asarray(coords, dtype=float)

    def bracket(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coordinates of the commutator [A, B]."""
        return np.einsum("abc,a,b->c", self.structure, a, b)

    def project_m(self, coords: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the tangent complement of the isotropy algebra."""
        return self.proj_m @ np.asarray(coords)

    def to_m(self, coords: np.ndarray) -> np.ndarray:
        """Complement-frame coordinates of (the projection of) an algebra vector."""
        return np.asarray(coords) @ self.m_frame.T

    def from_m(self, vec: np.ndarray) -> np.ndarray:
        """Algebra coordinates of a complement-frame vector."""
        return np.asarray(vec) @ self.m_frame

    def bracket_m(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Projected bracket P[v, w] in complement-frame coordinates."""
        br = self.bracket(self.from_m(v), self.from_m(w))
        return self.to_m(br)

    # -- sampling and quadrature ----------------------------------------------

    def euler_element(self, alpha: float, beta: float, gamma: float) -> GroupElement:
        """exp(alpha Z3) exp(beta Z2) exp(gamma Z3) in the raw defining basis."""
        raw = _su2_raw_basis()
        m = expm_skew(alpha * raw[2]) @ expm_skew(beta * raw[1]) @ expm_skew(gamma * raw[2])
        return GroupElement(m)

    def random_element(self, rng: np.random.Generator) -> GroupElement:
        return self.random_elements(rng, 1)[0]

    def random_elements(self, rng: np.random.Generator, count: int) -> list:
        if self.matrix_dim == 2:
            alphas = rng.uniform(0.0, 4 * np.pi, count)
            gammas = rng.uniform(0.0, 4 * np.pi, count)
            betas = np.arccos(rng.uniform(-1.0, 1.0, count))
            return [self.euler_element(a, b, g) for a, b, g in zip(alphas, betas, gammas)]
        special = abs(np.trace(self.basis[0])) < 1e-12
        return [GroupElement(u) for u in
                _qr_haar_unitaries(rng, self.matrix_dim, count, special)]

    def random_algebra(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim)

    def haar_rule(self, bandwidth: int, kind: str = "auto",
                  node_count: int | None = None,
                  rng: np.random.Generator | None = None) -> QuadratureRule:
        """Quadrature over the group.

        For the SU(2) catalog this is the Euler-angle product rule: uniform
        grids over both circle angles (full 4*pi period, so half-integer
        frequencies cancel exactly) and Gauss-Legendre in the cosine of the
        middle angle.  It integrates every product of irreducible matrix
        coefficients of total spin <= bandwidth exactly.  Other groups fall
        back to Monte Carlo sampling with a declared statistical tolerance;
        unsupported groups raise.
        """
        if bandwidth < 1:
            raise ValueError("bandwidth must be >= 1")
        if kind in ("auto", "exact") and self.matrix_dim == 2 and self.dim == 3:
            n_circ = 2 * int(np.ceil(bandwidth)) + 1
            n_leg = int(np.ceil((bandwidth + 1) / 2))
            us, wu = np.polynomial.legendre.leggauss(n_leg)
            nodes, weights = [], []
            for u, w in zip(us, wu):
                beta = float(np.arccos(u))
                for ia in range(n_circ):
                    for ig in range(n_circ):
                        nodes.append(self.euler_element(
                            4 * np.pi * ia / n_circ, beta, 4 * np.pi * ig / n_circ))
                        weights.append(w / 2.0 / n_circ ** 2)
            return QuadratureRule(nodes, np.array(weights), float(bandwidth))
        if kind == "exact":
            raise NotImplementedError(f"no exact rule for group {self.name!r}")
        if kind in ("auto", "monte-carlo"):
            full_su = self.dim == self.matrix_dim ** 2 - 1
            full_u = self.dim == self.matrix_dim ** 2
            if not (full_su or full_u):
                raise NotImplementedError(
                    f"group {self.name!r} has no exact rule and no Monte Carlo sampler")
            count = node_count or 4096
            rng = rng or np.random.default_rng(0)
            mats = _qr_haar_unitaries(rng, self.matrix_dim, count, full_su)
            return QuadratureRule([GroupElement(m) for m in mats],
                                  np.full(count, 1.0 / count), 0.0,
                                  kind="monte-carlo", mc_sigma=1.0 / np.sqrt(count))
        raise ValueError(f"unknown rule kind {kind!r}")

    # -- diagnostics -----------------------------------------------------------

    def symmetric_space_residual(self) -> float:
        """max ||P [Y_a, Y_b]|| over complement-frame pairs; 0 for symmetric spaces."""
        worst = 0.0
        for a in range(self.m_dim):
            for b in range(self.m_dim):
                br = self.bracket(self.from_m(np.eye(self.m_dim)[a]),
                                  self.from_m(np.eye(self.m_dim)[b]))
                worst = max(worst, float(np.linalg.norm(self.project_m(br))))
        return worst


def _one_parameter_period(z: np.ndarray) -> float:
    """Period of t -> exp(t z) for skew-Hermitian z with commensurable spectrum."""
    w = np.linalg.eigvalsh(1j * z)
    w = np.abs(w[np.abs(w) > 1e-12])
    if w.size == 0:
        raise ValueError("subgroup generator is central/nilpotent; no finite period")
    base = float(np.min(w))
    ratios = w / base
    if np.max(np.abs(ratios - np.round(ratios))) > 1e-9:
        raise ValueError("subgroup generator has incommensurable frequencies")
    # exp(t z) = 1 iff every frequency times t lies in 2*pi*Z, so the period
    # is 2*pi over the gcd of the frequencies.
    g = base * np.gcd.reduce(np.round(ratios).astype(int))
    return float(2 * np.pi / g)
