"""Composite Gauss-Legendre meshes on [0, pi] with geometric grading.

The mesh is a partition of [0, pi] into panels, each carrying a fixed-order
Gauss-Legendre rule.  Panels adjacent to a declared singular point are
geometrically refined toward it (ratio 1/2 by default), so that integrable
power singularities |x - x0|^(-alpha), alpha < 1, are resolved by the
quadrature.  Singular points always land on panel boundaries and never on
quadrature nodes (Gauss nodes are interior).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

PI = np.pi


class MeshMismatchError(ValueError):
    """Two grid functions do not live on the same mesh."""


def _reference_panel(order):
    """Nodes, weights, barycentric weights, partial-integral and
    differentiation matrices for the Gauss rule on [-1, 1]."""
    xi, w = np.polynomial.legendre.leggauss(order)
    bw = np.array([
        1.0 / np.prod([xi[i] - xi[j] for j in range(order) if j != i])
        for i in range(order)
    ])
    # Wpart[j, i] = integral of the i-th Lagrange basis over [-1, xi_j]
    wpart = np.zeros((order, order))
    wfull = np.zeros(order)
    for i in range(order):
        c = np.array([1.0])
        for j in range(order):
            if j != i:
                c = npoly.polymul(c, np.array([-xi[j], 1.0]))
        c = c / npoly.polyval(xi[i], c)
        ci = npoly.polyint(c)
        wpart[:, i] = npoly.polyval(xi, ci) - npoly.polyval(-1.0, ci)
        wfull[i] = npoly.polyval(1.0, ci) - npoly.polyval(-1.0, ci)
    # Lagrange differentiation matrix at the nodes
    diff = np.zeros((order, order))
    for j in range(order):
        for i in range(order):
            if i != j:
                diff[j, i] = (bw[i] / bw[j]) / (xi[j] - xi[i])
        diff[j, j] = -np.sum(diff[j])
    return xi, w, bw, wpart, diff


class Mesh:
    """Composite Gauss mesh on [0, pi].  Immutable by convention; safe to
    share read-only across workers."""

    def __init__(self, breaks, order=5, singular_points=()):
        breaks = np.asarray(breaks, dtype=float)
        if breaks[0] != 0.0 or abs(breaks[-1] - PI) > 1e-14:
            raise ValueError("mesh must cover [0, pi]")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("panel boundaries must be strictly increasing")
        self.breaks = breaks
        self.order = int(order)
        self.singular_points = tuple(float(s) for s in singular_points)
        xi, w, bw, wpart, diff = _reference_panel(self.order)
        self._xi, self._w, self._bw = xi, w, bw
        self._wpart, self._diff = wpart, diff
        self.panel_starts = breaks[:-1]
        self.panel_lengths = np.diff(breaks)
        half = 0.5 * self.panel_lengths
        mid = self.panel_starts + half
        self.nodes2d = mid[:, None] + half[:, None] * xi[None, :]
        self.weights2d = half[:, None] * w[None, :]
        self.nodes = self.nodes2d.ravel()
        self.weights = self.weights2d.ravel()
        self.midpoints = mid
        for s in self.singular_points:
            if np.min(np.abs(self.nodes - s)) == 0.0:
                raise ValueError("singular point coincides with a node")

    @property
    def n_panels(self):
        return len(self.panel_lengths)

    @property
    def size(self):
        return self.nodes.size

    def same_as(self, other):
        return self is other or (
            isinstance(other, Mesh)
            and self.order == other.order
            and self.breaks.shape == other.breaks.shape
            and np.array_equal(self.breaks, other.breaks)
        )

    # -- quadrature -------------------------------------------------------

    def integrate(self, values):
        """Integral over [0, pi] of values sampled at the nodes
        (last axis)."""
        return np.asarray(values) @ self.weights

    def cumulative(self, values):
        """Antiderivative x -> int_0^x, evaluated at every node.

        Within each panel the integrand is replaced by its interpolating
        polynomial on the Gauss nodes, so sub-panel integrals keep the
        order of the quadrature.
        """
        v = np.asarray(values)
        vk = v.reshape(v.shape[:-1] + (self.n_panels, self.order))
        panel_int = np.einsum("...ki,ki->...k", vk, self.weights2d)
        prefix = np.cumsum(panel_int, axis=-1)
        prefix = np.concatenate(
            [np.zeros(prefix.shape[:-1] + (1,), dtype=prefix.dtype),
             prefix[..., :-1]], axis=-1)
        half = 0.5 * self.panel_lengths
        partial = np.einsum("ji,...ki->...kj", self._wpart, vk)
        partial = partial * half[:, None]
        out = prefix[..., :, None] + partial
        return out.reshape(v.shape)

    def derivative(self, values):
        """Per-panel spectral differentiation of node values."""
        v = np.asarray(values)
        vk = v.reshape(v.shape[:-1] + (self.n_panels, self.order))
        dv = np.einsum("ji,...ki->...kj", self._diff, vk)
        dv = dv / (0.5 * self.panel_lengths)[:, None]
        return dv.reshape(v.shape)

    # -- interpolation ----------------------------------------------------

    def panel_of(self, x):
        k = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(k, 0, self.n_panels - 1)

    def interpolate(self, values, x):
        """Evaluate the panel-wise interpolating polynomial at x
        (scalar or 1-d array)."""
        v = np.asarray(values)
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.panel_of(x)
        a = self.panel_starts[k]
        h = self.panel_lengths[k]
        xi = 2.0 * (x - a) / h - 1.0
        vk = v.reshape(v.shape[:-1] + (self.n_panels, self.order))
        vals = vk[..., k, :]                         # (..., m, q)
        d = xi[:, None] - self._xi[None, :]          # (m, q)
        exact = np.abs(d) < 1e-14
        hit = exact.any(axis=-1)
        c = self._bw[None, :] / np.where(exact, 1.0, d)
        c = c / c.sum(axis=-1)[:, None]
        c = np.where(hit[:, None], exact.astype(float), c)
        out = np.einsum("...mq,mq->...m", vals, c)
        return out[..., 0] if scalar else out


def build_mesh(panels=512, order=5, singular_points=(),
               grading_depth=20, grading_ratio=0.5):
    """Uniform panels on [0, pi] plus geometric grading toward each
    declared singular point."""
    base = np.linspace(0.0, PI, panels + 1)
    pts = set(np.round(base, 15))
    sing = [float(s) for s in singular_points]
    for x0 in sing:
        if not 0.0 <= x0 <= PI:
            raise ValueError("singular point outside [0, pi]")
        h0 = PI / panels
        # neighbouring base boundaries, pushed one panel away from x0
        left = max(0.0, (np.floor(x0 / h0) - 0) * h0)
        right = min(PI, (np.ceil(x0 / h0) + 0) * h0)
        if abs(left - x0) < 1e-12 * PI:
            left = max(0.0, left - h0)
        if abs(right - x0) < 1e-12 * PI:
            right = min(PI, right + h0)
        if x0 > 0.0:
            for j in range(grading_depth + 1):
                pts.add(round(x0 - (x0 - left) * grading_ratio ** j, 15))
        if x0 < PI:
            for j in range(grading_depth + 1):
                pts.add(round(x0 + (right - x0) * grading_ratio ** j, 15))
        pts.add(round(x0, 15))
    breaks = np.array(sorted(pts))
    breaks[0], breaks[-1] = 0.0, PI
    keep = np.concatenate([[True], np.diff(breaks) > 1e-15])
    return Mesh(breaks[keep], order=order, singular_points=sing)


@dataclass(frozen=True)
class GridFunction2:
    """Two-component complex function sampled at the quadrature nodes."""
    mesh: Mesh
    values: np.ndarray          # shape (2, N)
    mu_class: float = np.inf

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (2, self.mesh.size):
            raise ValueError("component length must equal mesh size")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callables(cls, mesh, f1, f2, mu_class=np.inf):
        x = mesh.nodes
        return cls(mesh, np.stack([
            np.asarray(f1(x), dtype=complex) * np.ones_like(x),
            np.asarray(f2(x), dtype=complex) * np.ones_like(x)]),
            mu_class=mu_class)

    def __add__(self, other):
        self._check(other)
        return GridFunction2(self.mesh, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction2(self.mesh, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction2(self.mesh, self.values * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if not self.mesh.same_as(other.mesh):
            raise MeshMismatchError("grid functions live on different meshes")


def lp_norm(f, alpha, mesh=None):
    """L_alpha norm on [0, pi]; alpha = inf gives the grid max (a lower
    bound of the essential sup)."""
    if alpha != np.inf and alpha < 1:
        raise ValueError("alpha must be >= 1 or inf")
    if isinstance(f, GridFunction2):
        mesh = f.mesh
        vals = f.values
        if alpha == np.inf:
            return float(np.max(np.abs(vals)))
        integrand = np.sum(np.abs(vals) ** alpha, axis=0)
        return float(mesh.integrate(integrand) ** (1.0 / alpha))
    if mesh is None:
        raise ValueError("a mesh is required for callable input")
    vals = np.asarray(f(mesh.nodes), dtype=complex)
    if alpha == np.inf:
        vmid = np.asarray(f(mesh.midpoints), dtype=complex)
        return float(max(np.max(np.abs(vals)), np.max(np.abs(vmid))))
    return float(mesh.integrate(np.abs(vals) ** alpha) ** (1.0 / alpha))


def inner_product(f, g):
    """L_2 pairing int_0^pi (f1 conj(g1) + f2 conj(g2)) dx."""
    if not f.mesh.same_as(g.mesh):
        raise MeshMismatchError("inner product requires a shared mesh")
    integrand = np.sum(f.values * np.conj(g.values), axis=0)
    return complex(f.mesh.integrate(integrand))
