"""Fundamental solutions of B y' + P y = lambda y by panel product integration.

On each mesh panel the coefficient matrix A(x) = B^{-1}(lambda I - P(x)) is
replaced by a fourth-order Magnus argument built from two Gauss points, and
the panel propagator is its exact 2x2 exponential.  The free part is inside
the exponential, so P = 0 (and any constant P) propagates exactly; integrable
singularities are handled by the graded panels, which sample the potential
only at interior Gauss points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryMatrixPair
from .mesh import GridFunction2, Mesh, lp_norm
from .potentials import PotentialMatrix

B_MATRIX = np.diag([-1j, 1j])
B_INV = np.diag([1j, -1j])
IM_CAP_DEFAULT = 50.0
_G2 = 1.0 / (2.0 * np.sqrt(3.0))
_C4 = np.sqrt(3.0) / 12.0


class OverflowCapError(ValueError):
    """|Im lambda| exceeds the configured cap for e^{+-i lambda x}."""


class NotAnEigenvalueError(ValueError):
    """Characteristic determinant not small enough at the requested lambda."""


def _check_cap(lams, im_cap):
    if np.any(np.abs(np.imag(lams)) > im_cap):
        raise OverflowCapError(
            f"|Im lambda| exceeds cap {im_cap}; raise im_cap explicitly if intended")


def expm2(M):
    """Exact exponential of 2x2 matrices (vectorized over leading axes)."""
    tau = 0.5 * (M[..., 0, 0] + M[..., 1, 1])
    n00 = M[..., 0, 0] - tau
    n11 = M[..., 1, 1] - tau
    detn = n00 * n11 - M[..., 0, 1] * M[..., 1, 0]
    w = np.sqrt(-detn + 0j)
    c = np.cosh(w)
    small = np.abs(w) < 1e-5
    wsafe = np.where(small, 1.0, w)
    s = np.where(small, 1.0 + w * w / 6.0, np.sinh(wsafe) / wsafe)
    out = np.empty(np.broadcast(M, M).shape, dtype=complex)
    out[..., 0, 0] = c + s * n00
    out[..., 0, 1] = s * M[..., 0, 1]
    out[..., 1, 0] = s * M[..., 1, 0]
    out[..., 1, 1] = c + s * n11
    return np.exp(tau)[..., None, None] * out


def _ap_values(P: PotentialMatrix, x):
    """A_P(x) = -B^{-1} P(x): the lambda-independent part of A."""
    out = np.zeros(np.shape(x) + (2, 2), dtype=complex)
    if not P.p1.is_zero:
        out[..., 0, 0] = -1j * P.p1(x)
    if not P.p2.is_zero:
        out[..., 0, 1] = -1j * P.p2(x)
    if not P.p3.is_zero:
        out[..., 1, 0] = 1j * P.p3(x)
    if not P.p4.is_zero:
        out[..., 1, 1] = 1j * P.p4(x)
    return out


def _magnus_factors(P, lams, starts, lengths):
    """Fourth-order Magnus propagators over intervals [start, start+length].

    lams has shape (L,), starts/lengths any common shape S; result is
    (L,) + S + (2, 2).
    """
    starts = np.asarray(starts, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    x1 = starts + lengths * (0.5 - _G2)
    x2 = starts + lengths * (0.5 + _G2)
    ap1 = _ap_values(P, x1)
    ap2 = _ap_values(P, x2)
    asum = 0.5 * (ap1 + ap2)
    comm0 = ap2 @ ap1 - ap1 @ ap2
    dap = ap1 - ap2
    dcomm = np.zeros_like(dap)
    dcomm[..., 0, 1] = 2.0 * dap[..., 0, 1]
    dcomm[..., 1, 0] = -2.0 * dap[..., 1, 0]

    lams = np.asarray(lams, dtype=complex)
    lshape = lams.shape + (1,) * starts.ndim
    il = (1j * lams).reshape(lshape + (1, 1))
    s = lengths[..., None, None]
    dmat = np.diag([1.0, -1.0]).astype(complex)
    omega = s * (il * dmat + asum) + _C4 * s * s * (il * dcomm + comm0)
    return expm2(omega)


def propagate(P: PotentialMatrix, lams, mesh: Mesh, nodes=True,
              im_cap=IM_CAP_DEFAULT):
    """Transfer matrices for a batch of spectral parameters.

    Returns (Mb, Mn): Mb[l, k] = M(break_k, lam_l) with Mb[l, 0] = I, and
    Mn[l, j] = M(node_j, lam_l) (or None when nodes=False).
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    _check_cap(lams, im_cap)
    K = mesh.n_panels
    T = _magnus_factors(P, lams, mesh.panel_starts, mesh.panel_lengths)
    L = lams.size
    Mb = np.empty((L, K + 1, 2, 2), dtype=complex)
    Mb[:, 0] = np.eye(2)
    for k in range(K):
        Mb[:, k + 1] = T[:, k] @ Mb[:, k]
    if not nodes:
        return Mb, None
    sub_len = mesh.nodes2d - mesh.panel_starts[:, None]
    sub_start = np.broadcast_to(mesh.panel_starts[:, None], sub_len.shape)
    Tn = _magnus_factors(P, lams, sub_start, sub_len)
    Mn = np.einsum("lkjab,lkbc->lkjac", Tn, Mb[:, :-1])
    return Mb, Mn.reshape(L, mesh.size, 2, 2)


@dataclass
class FundamentalSolution:
    """M(x, lambda) with M(0, lambda) = I, stored at panel boundaries and
    quadrature nodes."""
    potential: PotentialMatrix
    lam: complex
    mesh: Mesh
    boundary_values: np.ndarray     # (K+1, 2, 2)
    node_values: np.ndarray         # (N, 2, 2)

    @property
    def monodromy(self):
        return self.boundary_values[-1]

    def at(self, x):
        """M(x, lambda) at arbitrary points by one Magnus sub-step from the
        containing panel's left boundary."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.mesh.panel_of(x)
        a = self.mesh.breaks[k]
        T = _magnus_factors(self.potential, np.array([self.lam]), a, x - a)[0]
        out = T @ self.boundary_values[k]
        return out[0] if scalar else out

    def det_residual(self):
        """Max deviation from the Liouville identity
        det M(x) = exp(i int_0^x (p4 - p1))."""
        x = self.mesh.nodes
        trace = 1j * (self.potential.p4(x) - self.potential.p1(x))
        target = np.exp(self.mesh.cumulative(trace))
        dets = (self.node_values[:, 0, 0] * self.node_values[:, 1, 1]
                - self.node_values[:, 0, 1] * self.node_values[:, 1, 0])
        return float(np.max(np.abs(dets - target)))


def fundamental_matrix(P: PotentialMatrix, lam, mesh: Mesh,
                       im_cap=IM_CAP_DEFAULT) -> FundamentalSolution:
    Mb, Mn = propagate(P, [lam], mesh, nodes=True, im_cap=im_cap)
    return FundamentalSolution(potential=P, lam=complex(lam), mesh=mesh,
                               boundary_values=Mb[0], node_values=Mn[0])


def char_det(P: PotentialMatrix, U: BoundaryMatrixPair, lam, mesh: Mesh,
             im_cap=IM_CAP_DEFAULT):
    """Characteristic determinant det(C + D M(pi, lambda))."""
    scalar = np.ndim(lam) == 0
    lams = np.atleast_1d(np.asarray(lam, dtype=complex))
    Mb, _ = propagate(P, lams, mesh, nodes=False, im_cap=im_cap)
    T = U.C[None] + U.D[None] @ Mb[:, -1]
    det = T[:, 0, 0] * T[:, 1, 1] - T[:, 0, 1] * T[:, 1, 0]
    return complex(det[0]) if scalar else det


@dataclass
class EigenfunctionResult:
    lam: complex
    functions: list            # one GridFunction2, or two when degenerate
    degenerate: bool
    delta: complex


def normalize_eigenfunction(y: GridFunction2, value_at_zero=None):
    """L2 norm 1 with the first sizable component of y(0) rotated to the
    positive real axis."""
    nrm = lp_norm(y, 2)
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero function")
    vals = y.values / nrm
    ref = value_at_zero if value_at_zero is not None else vals[:, 0]
    ref = np.asarray(ref, dtype=complex)
    mags = np.abs(ref)
    idx = 0 if mags[0] > 1e-8 * max(mags.max(), 1e-300) else 1
    phase = ref[idx] / abs(ref[idx]) if mags[idx] > 0 else 1.0
    return GridFunction2(y.mesh, vals * np.conj(phase))


def bvp_eigenfunction(P: PotentialMatrix, U: BoundaryMatrixPair, lam,
                      mesh: Mesh, accept_tol=1e-7,
                      im_cap=IM_CAP_DEFAULT) -> EigenfunctionResult:
    """Eigenfunction(s) at an accepted eigenvalue: y = M(., lambda) v with v
    spanning the numerical null space of C + D M(pi, lambda)."""
    lam = complex(lam)
    probe = lam + 0.5 * np.array([1.0, -1.0, 1j, -1j])
    lams = np.concatenate([[lam], probe])
    Mb, Mn = propagate(P, lams, mesh, nodes=True, im_cap=im_cap)
    T_all = U.C[None] + U.D[None] @ Mb[:, -1]
    dets = (T_all[:, 0, 0] * T_all[:, 1, 1] - T_all[:, 0, 1] * T_all[:, 1, 0])
    scale = max(1.0, float(np.median(np.abs(dets[1:]))))
    if abs(dets[0]) > accept_tol * scale:
        raise NotAnEigenvalueError(
            f"|Delta({lam})| = {abs(dets[0]):.3e} exceeds {accept_tol:.1e} * {scale:.3e}")
    T = T_all[0]
    _, s, vh = np.linalg.svd(T)
    tscale = max(1.0, float(np.max(np.abs(Mb[0, -1]))))
    degenerate = s[0] <= 1e-6 * tscale
    vecs = [vh[1].conj()] if not degenerate else [vh[0].conj(), vh[1].conj()]
    funcs = []
    for v in vecs:
        yvals = (Mn[0] @ v).T          # (2, N)
        y = GridFunction2(mesh, yvals)
        funcs.append(normalize_eigenfunction(y, value_at_zero=v))
    return EigenfunctionResult(lam=lam, functions=funcs,
                               degenerate=degenerate, delta=complex(dets[0]))
