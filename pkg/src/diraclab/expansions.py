"""Root systems and spectral partial sums.

A root system holds, for every index n in [-2m, 2m+1], an eigenvalue
lambda_n, a root vector y_n and a dual vector z_n taken from the adjoint
problem at conj(lambda_n), normalized so that <y_j, z_k> = delta_jk within
each eigenvalue cluster.  The partial sum

    S_m f = sum_{n=-2m}^{2m+1} <f, z_n> y_n

then coincides with the sum of Riesz projectors over the first clusters,
which :func:`projector_contour` cross-checks by direct contour integration
of the resolvent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryMatrixPair, adjoint_pair
from .green import green_kernel
from .mesh import GridFunction2, Mesh, inner_product
from .ode import B_INV, bvp_eigenfunction, fundamental_matrix
from .potentials import PotentialMatrix
from .spectrum import CLUSTER_TOL, Circle, EigenvalueList, localize

GRAM_COND_MAX = 1e8


class RootSystemError(RuntimeError):
    """Root system construction failed (defective Gram matrix etc.)."""


@dataclass
class RootSystemEntry:
    index: int
    lam: complex
    y: GridFunction2
    z: GridFunction2
    role: str                    # "eigen" | "associated"
    cluster: tuple               # indices in the same cluster


@dataclass
class RootSystem:
    potential: PotentialMatrix
    form: BoundaryMatrixPair
    mesh: Mesh
    m_max: int
    entries: dict
    eigs: EigenvalueList

    def indices(self, m=None):
        m = self.m_max if m is None else m
        if m > self.m_max:
            raise ValueError(f"m={m} exceeds stored range m_max={self.m_max}")
        return range(-2 * m, 2 * m + 2)

    def biorthogonality_residual(self, sample=None):
        """Max |<y_j, z_k> - delta_jk| over index pairs (all by default)."""
        idx = list(self.indices()) if sample is None else list(sample)
        worst = 0.0
        for j in idx:
            for k in idx:
                g = inner_product(self.entries[j].y, self.entries[k].z)
                worst = max(worst, abs(g - (1.0 if j == k else 0.0)))
        return worst


def _associated_function(P, U, lam, y, mesh):
    """Minimal-norm solution of (B d/dx + P - lam) u = y with U(u) = 0,
    via variation of constants; solvable because lam is an eigenvalue."""
    F = fundamental_matrix(P, lam, mesh)
    Mn = F.node_values
    dets = Mn[:, 0, 0] * Mn[:, 1, 1] - Mn[:, 0, 1] * Mn[:, 1, 0]
    Mn_inv = np.empty_like(Mn)
    Mn_inv[:, 0, 0] = Mn[:, 1, 1] / dets
    Mn_inv[:, 1, 1] = Mn[:, 0, 0] / dets
    Mn_inv[:, 0, 1] = -Mn[:, 0, 1] / dets
    Mn_inv[:, 1, 0] = -Mn[:, 1, 0] / dets
    g = np.einsum("nab,bn->an", Mn_inv @ B_INV[None], y.values)
    gcum = mesh.cumulative(g)
    gtot = mesh.integrate(g)
    T = U.C + U.D @ F.monodromy
    rhs = -U.D @ (F.monodromy @ gtot)
    c, *_ = np.linalg.lstsq(T, rhs, rcond=None)
    vals = np.einsum("nab,bn->an", Mn, c[:, None] + gcum)
    return GridFunction2(mesh, vals)


def _cluster_basis(P, U, lams, mults, mesh, accept_tol):
    """Root vectors spanning the root subspace of a cluster: eigenfunctions
    first, associated functions when the algebraic multiplicity exceeds the
    geometric one."""
    basis = []
    roles = []
    for lam, mult in zip(lams, mults):
        r = bvp_eigenfunction(P, U, lam, mesh, accept_tol=accept_tol)
        funcs = r.functions[:mult]
        basis.extend(funcs)
        roles.extend(["eigen"] * len(funcs))
        if mult > len(funcs):
            u = _associated_function(P, U, lam, funcs[0], mesh)
            basis.append(u)
            roles.append("associated")
    return basis, roles


def _clusters(eigs: EigenvalueList):
    """Group consecutive indices whose eigenvalues agree to CLUSTER_TOL.
    Pairs (2k, 2k+1) always land in one group when they coincide."""
    idx = sorted(eigs.values)
    groups = []
    cur = [idx[0]]
    for n in idx[1:]:
        if abs(eigs.values[n] - eigs.values[cur[-1]]) < CLUSTER_TOL:
            cur.append(n)
        else:
            groups.append(cur)
            cur = [n]
    groups.append(cur)
    return groups


def root_system(P: PotentialMatrix, U: BoundaryMatrixPair, m_max, mesh: Mesh,
                eigs: EigenvalueList = None, accept_tol=1e-6) -> RootSystem:
    """Biorthogonal root system of the operator and its adjoint for all
    indices in [-2 m_max, 2 m_max + 1]."""
    if eigs is None:
        eigs = localize(P, U, m_max, mesh)
    Pa = P.adjoint()
    Ua = adjoint_pair(U)
    entries = {}
    for group in _clusters(eigs):
        lams = []
        mults = []
        for n in group:
            lam = eigs.values[n]
            if lams and abs(lam - lams[-1]) < 1e-10:
                mults[-1] += 1
            else:
                lams.append(lam)
                mults.append(1)
        ys, roles = _cluster_basis(P, U, lams, mults, mesh, accept_tol)
        zs, _ = _cluster_basis(Pa, Ua, [np.conj(l) for l in lams], mults,
                               mesh, accept_tol)
        if len(ys) != len(group) or len(zs) != len(group):
            raise RootSystemError(
                f"cluster {group}: found {len(ys)} root vectors for "
                f"{len(group)} indices")
        G = np.array([[inner_product(y, z) for z in zs] for y in ys])
        if np.linalg.cond(G) > GRAM_COND_MAX:
            raise RootSystemError(
                f"cluster {group}: Gram matrix ill-conditioned "
                f"(cond {np.linalg.cond(G):.2e})")
        # dual basis: z~_k = sum_j coeff[j, k] z_j with <y_j, z~_k> = delta
        coeff = np.conj(np.linalg.inv(G))
        zt = [GridFunction2(mesh, sum(coeff[j, k] * zs[j].values
                                      for j in range(len(zs))))
              for k in range(len(zs))]
        for pos, n in enumerate(group):
            entries[n] = RootSystemEntry(index=n, lam=eigs.values[n],
                                         y=ys[pos], z=zt[pos],
                                         role=roles[pos],
                                         cluster=tuple(group))
    return RootSystem(potential=P, form=U, mesh=mesh, m_max=eigs.m_max,
                      entries=entries, eigs=eigs)


def unperturbed_root_system(U: BoundaryMatrixPair, m_max,
                            mesh: Mesh) -> RootSystem:
    """Root system of the free operator B y' = lambda y."""
    return root_system(PotentialMatrix.zero(), U, m_max, mesh)


def expansion_coefficients(rs: RootSystem, f: GridFunction2, m=None):
    """c_n = <f, z_n> for n in [-2m, 2m+1]."""
    return {n: inner_product(f, rs.entries[n].z) for n in rs.indices(m)}


def partial_sum(rs: RootSystem, f: GridFunction2, m=None) -> GridFunction2:
    """S_m f = sum over the first 2m+1 clusters of <f, z_n> y_n."""
    acc = np.zeros((2, rs.mesh.size), dtype=complex)
    for n in rs.indices(m):
        e = rs.entries[n]
        acc += inner_product(f, e.z) * e.y.values
    return GridFunction2(rs.mesh, acc)


def projector_contour(P: PotentialMatrix, U: BoundaryMatrixPair,
                      contour: Circle, f: GridFunction2, mesh: Mesh,
                      n_start=32, tol=1e-8, max_doublings=6) -> GridFunction2:
    """Riesz projector -(1/2 pi i) contour-integral of (L - lambda)^{-1} f
    by the trapezoid rule with node doubling."""
    prev = None
    n = n_start
    for _ in range(max_doublings + 1):
        theta = 2.0 * np.pi * np.arange(n) / n
        pts = contour.center + contour.radius * np.exp(1j * theta)
        dl = 1j * contour.radius * np.exp(1j * theta)
        acc = np.zeros((2, mesh.size), dtype=complex)
        for lam, w in zip(pts, dl):
            acc += w * green_kernel(P, U, lam, mesh).apply(f).values
        cur = -acc / (1j * n)
        if prev is not None and np.max(np.abs(cur - prev)) < tol:
            return GridFunction2(mesh, cur)
        prev = cur
        n *= 2
    return GridFunction2(mesh, prev)


def partial_sum_contour(rs: RootSystem, f: GridFunction2, m,
                        delta=0.25, **kw) -> GridFunction2:
    """Cross-check of partial_sum: sum of contour projectors over the
    circles gamma_k, k in [-m, m]."""
    from .spectrum import contour_family, localization_seeds
    spec0, _ = localization_seeds(rs.potential, rs.form, rs.mesh)
    fam = contour_family(spec0, rs.eigs, delta=delta, P=rs.potential,
                         U=rs.form, mesh=rs.mesh, validate=False)
    acc = np.zeros((2, rs.mesh.size), dtype=complex)
    for k in range(-m, m + 1):
        acc += projector_contour(rs.potential, rs.form, fam.gamma(k), f,
                                 rs.mesh, **kw).values
    return GridFunction2(rs.mesh, acc)
