"""Eigenvalue localization and contour machinery.

Perturbed eigenvalues are found by Newton iteration on the characteristic
determinant, seeded by the closed-form unperturbed spectrum (shifted by the
gauge constant gamma when the potential has diagonal entries).  Winding
numbers of Delta along circles gamma_n and rectangles Gamma_m validate the
counts; a bisection fallback recovers zeros when Newton clusters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryMatrixPair, NotRegularError, is_regular, \
    unperturbed_spectrum
from .mesh import Mesh
from .ode import char_det
from .potentials import PotentialMatrix, gauge_reduce

DOUBLE_TOL = 1e-8
CLUSTER_TOL = 1e-4


class ContourError(RuntimeError):
    """Winding-number computation failed to stabilize."""


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def points(self, n):
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.center + self.radius * np.exp(1j * th)

    @property
    def arc_length(self):
        return 2.0 * np.pi * self.radius

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius


@dataclass(frozen=True)
class RectContour:
    re_min: float
    re_max: float
    im_half: float

    def points(self, n):
        w = self.re_max - self.re_min
        h = 2.0 * self.im_half
        per = 2.0 * (w + h)
        t = np.linspace(0.0, per, n, endpoint=False)
        pts = np.empty(n, dtype=complex)
        for i, ti in enumerate(t):
            if ti < w:
                pts[i] = self.re_min + ti - 1j * self.im_half
            elif ti < w + h:
                pts[i] = self.re_max + 1j * (ti - w - self.im_half)
            elif ti < 2 * w + h:
                pts[i] = self.re_max - (ti - w - h) + 1j * self.im_half
            else:
                pts[i] = self.re_min - 1j * (ti - 2 * w - h - self.im_half)
        return pts

    @property
    def arc_length(self):
        return 2.0 * (self.re_max - self.re_min + 2.0 * self.im_half)

    def contains(self, z):
        z = np.asarray(z)
        return ((z.real > self.re_min) & (z.real < self.re_max)
                & (np.abs(z.imag) < self.im_half))


def winding_count(P: PotentialMatrix, U: BoundaryMatrixPair, contour,
                  mesh: Mesh, quad_order=None, max_doublings=8):
    """Winding number of Delta along the contour; refined until every
    argument increment stays below pi/2."""
    n = quad_order or max(64, int(np.ceil(64 * contour.arc_length)))
    for _ in range(max_doublings + 1):
        pts = contour.points(n)
        vals = char_det(P, U, pts, mesh)
        vals = np.concatenate([vals, vals[:1]])
        if np.min(np.abs(vals)) == 0.0:
            raise ContourError("Delta vanishes on the contour; adjust it")
        steps = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(steps)) < 0.5 * np.pi:
            total = steps.sum() / (2.0 * np.pi)
            if abs(total - round(total)) > 0.05:
                raise ContourError("argument accumulation is not an integer")
            return int(round(total))
        n *= 2
    raise ContourError(
        "winding did not stabilize after doublings; adjust the contour")


@dataclass
class EigenvalueList:
    m_max: int
    values: dict                    # n -> lambda_n
    seeds: dict                     # n -> lambda_n^0 (possibly gamma-shifted)
    multiplicity: dict              # n -> 1 or 2
    N0: int = 0
    diagnostics: list = field(default_factory=list)

    def indices(self):
        return sorted(self.values)

    def pair(self, k):
        return self.values[2 * k], self.values[2 * k + 1]

    def pair_indices(self):
        return range(-self.m_max, self.m_max + 1)

    def tail_max(self, lo, hi):
        devs = [abs(self.values[n] - self.seeds[n]) for n in self.values
                if lo <= abs(n) <= hi]
        return max(devs) if devs else 0.0

    def as_rows(self):
        rows = []
        for n in self.indices():
            lam, lam0 = self.values[n], self.seeds[n]
            rows.append((n, lam.real, lam.imag, lam0.real, lam0.imag,
                         abs(lam - lam0), self.multiplicity[n]))
        return rows


def _newton(P, U, mesh, seeds, tol=1e-12, max_iter=30, max_step=0.45):
    lam = seeds.astype(complex).copy()
    active = np.ones(lam.shape, dtype=bool)
    h = 1e-6
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        cur = lam[idx]
        probe = np.concatenate([cur, cur + h, cur - h])
        vals = char_det(P, U, probe, mesh)
        f = vals[:idx.size]
        fp = (vals[idx.size:2 * idx.size] - vals[2 * idx.size:]) / (2.0 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp != 0, f / fp, 0.0)
        mags = np.abs(step)
        with np.errstate(divide="ignore", invalid="ignore"):
            clipped = step / mags * max_step
        step = np.where(mags > max_step, clipped, step)
        lam[idx] = cur - step
        done = np.abs(step) < tol * np.maximum(1.0, np.abs(cur))
        active[idx[done]] = False
    return lam, ~active


def _bisect_zero(P, U, mesh, rect, depth=0, max_depth=24):
    """Locate one zero of Delta inside rect by winding quadrisection."""
    if depth >= max_depth:
        return complex(0.5 * (rect.re_min + rect.re_max))
    rm = 0.5 * (rect.re_min + rect.re_max)
    halves = [RectContour(rect.re_min, rm, rect.im_half),
              RectContour(rm, rect.re_max, rect.im_half)]
    for halfbox in halves:
        try:
            w = winding_count(P, U, halfbox, mesh)
        except ContourError:
            continue
        if w >= 1:
            if halfbox.re_max - halfbox.re_min < 1e-10:
                return complex(0.5 * (halfbox.re_min + halfbox.re_max))
            return _bisect_zero(P, U, mesh, halfbox, depth + 1, max_depth)
    return complex(rm)


def _pair_moments(P, U, mesh, circ: Circle, n=256, max_doublings=6):
    """The two zeros of Delta inside circ via argument-principle moments
    s_p = (1/2 pi i) oint lam^p Delta'/Delta dlam; requires winding 2."""
    h = 1e-6
    prev_s1 = None
    for _ in range(max_doublings + 1):
        th = 2.0 * np.pi * np.arange(n) / n
        pts = circ.center + circ.radius * np.exp(1j * th)
        dl = 1j * circ.radius * np.exp(1j * th) * (2.0 * np.pi / n)
        vals = char_det(P, U, np.concatenate([pts, pts + h, pts - h]), mesh)
        f = vals[:n]
        fp = (vals[n:2 * n] - vals[2 * n:]) / (2.0 * h)
        logd = fp / f
        s0 = np.sum(logd * dl) / (2j * np.pi)
        s1 = np.sum(pts * logd * dl) / (2j * np.pi)
        s2 = np.sum(pts ** 2 * logd * dl) / (2j * np.pi)
        stable = prev_s1 is not None and abs(s1 - prev_s1) < 1e-8
        if abs(s0 - 2.0) < 1e-2 and stable:
            e1, e2 = s1, 0.5 * (s1 * s1 - s2)
            disc = np.sqrt(e1 * e1 - 4.0 * e2 + 0j)
            return 0.5 * (e1 + disc), 0.5 * (e1 - disc)
        prev_s1 = s1
        n *= 2
    raise ContourError(
        f"moment extraction failed on circle {circ}; s0 = {s0:.4f}")


def _recover_pair(P, U, mesh, seed_mid, cap, delta):
    """Both zeros of a pair whose Newton iterations failed: grow a circle
    around the seed midpoint until it winds twice, then take moments."""
    r = delta
    while r <= cap:
        circ = Circle(complex(seed_mid), float(r))
        try:
            if winding_count(P, U, circ, mesh) == 2:
                z0, z1 = _pair_moments(P, U, mesh, circ)
                lam, conv = _newton(P, U, mesh, np.array([z0, z1]))
                z0 = complex(lam[0]) if conv[0] and abs(lam[0] - z0) < 0.1 else z0
                z1 = complex(lam[1]) if conv[1] and abs(lam[1] - z1) < 0.1 else z1
                return sorted([complex(z0), complex(z1)],
                              key=lambda z: (z.real, z.imag))
        except ContourError:
            pass
        r *= 1.4
    raise ContourError(
        f"could not isolate the eigenvalue pair around {seed_mid}")


def localization_seeds(P: PotentialMatrix, U: BoundaryMatrixPair, mesh: Mesh):
    """Seeds lambda_n^0 of the gauge-equivalent free operator, shifted by
    the gauge constant gamma."""
    if P.is_zero or (P.p1.is_zero and P.p4.is_zero):
        spec0 = unperturbed_spectrum(U)
        return spec0, 0.0 + 0.0j
    red = gauge_reduce(P, U, mesh)
    return unperturbed_spectrum(red.form), red.gamma


def localize(P: PotentialMatrix, U: BoundaryMatrixPair, m_max, mesh: Mesh,
             delta=0.25, validate=False) -> EigenvalueList:
    """Eigenvalues lambda_n for n in [-2 m_max, 2 m_max + 1], paired to
    their seeds."""
    ok, _ = is_regular(U)
    if not ok:
        raise NotRegularError("localization requires a regular form")
    spec0, gamma = localization_seeds(P, U, mesh)
    ns = np.arange(-2 * m_max, 2 * m_max + 2)
    seeds = spec0.lambda0(ns).astype(complex) + gamma
    lam, converged = _newton(P, U, mesh, seeds)
    diagnostics = []
    values, seedmap, mult = {}, {}, {}
    for i, n in enumerate(ns):
        if not converged[i] and abs(char_det(P, U, seeds[i], mesh)) < 1e-9:
            lam[i] = seeds[i]       # seed already on a (possibly double) zero
            converged[i] = True
        values[int(n)] = complex(lam[i])
        seedmap[int(n)] = complex(seeds[i])
        mult[int(n)] = 1
    # residual-based acceptance; failed or collapsed pairs are recovered by
    # contour moments around the seed midpoint
    probe = char_det(P, U, seeds + 0.49, mesh)
    scale = max(1.0, float(np.median(np.abs(probe))))
    res = np.abs(char_det(P, U, lam, mesh))
    h = 1e-6
    mids = {k: 0.5 * (seedmap[2 * k] + seedmap[2 * k + 1])
            for k in range(-m_max, m_max + 1)}
    for k in range(-m_max, m_max + 1):
        ia, ib = 2 * k + 2 * m_max, 2 * k + 1 + 2 * m_max
        a, b = values[2 * k], values[2 * k + 1]
        bad = (not converged[ia] or not converged[ib]
               or res[ia] > 1e-6 * scale or res[ib] > 1e-6 * scale
               or abs(a - seeds[ia]) > 0.75 or abs(b - seeds[ib]) > 0.75)
        if not bad and abs(a - b) < DOUBLE_TOL:
            dp = (char_det(P, U, a + h, mesh)
                  - char_det(P, U, a - h, mesh)) / (2.0 * h)
            if abs(dp) > 1e-3 * scale:
                bad = True          # both members fell into one simple zero
        if bad:
            gaps = [abs(mids[k] - mids[j]) for j in (k - 1, k + 1) if j in mids]
            cap = 0.45 * min(gaps) if gaps else 0.9
            z0, z1 = _recover_pair(P, U, mesh, mids[k], max(cap, delta), delta)
            values[2 * k], values[2 * k + 1] = z0, z1
            diagnostics.append(f"pair {k} recovered by contour moments")
    for k in range(-m_max, m_max + 1):
        a, b = values[2 * k], values[2 * k + 1]
        if abs(a - b) < DOUBLE_TOL:
            merged = 0.5 * (a + b)
            values[2 * k] = values[2 * k + 1] = merged
            mult[2 * k] = mult[2 * k + 1] = 2
    eigs = EigenvalueList(m_max=m_max, values=values, seeds=seedmap,
                          multiplicity=mult, diagnostics=diagnostics)
    if validate:
        _validate_pairs(P, U, mesh, eigs, delta)
    return eigs


def _pair_circle(lam_a, lam_b, delta):
    center = 0.5 * (lam_a + lam_b)
    radius = max(delta, 0.5 * abs(lam_a - lam_b) + delta)
    return Circle(complex(center), float(radius))


def _validate_pairs(P, U, mesh, eigs: EigenvalueList, delta):
    failed = []
    for k in eigs.pair_indices():
        circ = _pair_circle(*eigs.pair(k), delta)
        try:
            w = winding_count(P, U, circ, mesh)
        except ContourError:
            w = -1
        if w != 2:
            failed.append(k)
            eigs.diagnostics.append(f"gamma_{k} winding {w} != 2")
            # recover by bisection inside the circle's bounding box
            box = RectContour(circ.center.real - circ.radius,
                              circ.center.real + circ.radius, circ.radius)
            z = _bisect_zero(P, U, mesh, box)
            d_a = abs(z - eigs.values[2 * k])
            d_b = abs(z - eigs.values[2 * k + 1])
            if d_a > d_b:
                eigs.values[2 * k] = z
            else:
                eigs.values[2 * k + 1] = z
    eigs.N0 = (max(abs(k) for k in failed) + 1) if failed else 0


@dataclass
class ContourFamily:
    gammas: dict                    # pair index k -> Circle
    half_height: float
    eigs: EigenvalueList
    spec0_values: dict              # n -> lambda_n^0

    def gamma(self, k):
        return self.gammas[k]

    def big_contour(self, m):
        """Gamma_m: rectangle enclosing lambda_n and lambda_n^0 for
        n in [-2m, 2m+1], with vertical sides midway between clusters."""
        lo, hi = -2 * m, 2 * m + 1
        inner = [self.eigs.values[n].real for n in range(lo, hi + 1)]
        inner += [self.spec0_values[n].real for n in range(lo, hi + 1)]
        outer_left = [self.eigs.values[n].real for n in self.eigs.values if n < lo]
        outer_left += [self.spec0_values[n].real for n in self.spec0_values if n < lo]
        outer_right = [self.eigs.values[n].real for n in self.eigs.values if n > hi]
        outer_right += [self.spec0_values[n].real for n in self.spec0_values if n > hi]
        left = (0.5 * (min(inner) + max(outer_left)) if outer_left
                else min(inner) - 0.5)
        right = (0.5 * (max(inner) + min(outer_right)) if outer_right
                 else max(inner) + 0.5)
        return RectContour(left, right, self.half_height)


def contour_family(spec0, eigs: EigenvalueList, delta=0.25,
                   P=None, U=None, mesh=None, validate=True) -> ContourFamily:
    """Circles gamma_k around the eigenvalue pairs (lambda_2k, lambda_2k+1)
    and rectangles Gamma_m, winding-validated when (P, U, mesh) are given."""
    gammas = {}
    all_vals = eigs.values
    for k in eigs.pair_indices():
        circ = _pair_circle(*eigs.pair(k), delta)
        outside = [abs(all_vals[n] - circ.center) for n in all_vals
                   if n not in (2 * k, 2 * k + 1)]
        if outside:
            nearest = min(outside)
            if nearest <= circ.radius:
                shrunk = 0.5 * (nearest + 0.5 * abs(all_vals[2 * k] - all_vals[2 * k + 1]))
                circ = Circle(circ.center, max(shrunk, 1e-6))
        gammas[k] = circ
    im_max = max(abs(v.imag) for v in all_vals.values())
    half_height = max(1.0, im_max + 0.5)
    ns = np.array(sorted(all_vals))
    spec0_values = {int(n): complex(spec0.lambda0(np.array([n]))[0])
                    for n in ns}
    fam = ContourFamily(gammas=gammas, half_height=half_height,
                        eigs=eigs, spec0_values=spec0_values)
    if validate:
        if P is None or U is None or mesh is None:
            raise ValueError("validation requires P, U and a mesh")
        for k, circ in gammas.items():
            needed = eigs.multiplicity[2 * k] if eigs.multiplicity[2 * k] == 2 \
                else 2
            w = winding_count(P, U, circ, mesh)
            if w != needed:
                raise ContourError(
                    f"gamma_{k} (center {circ.center:.4f}, r {circ.radius:.3f}) "
                    f"winding {w} != {needed}")
        m_small = min(2, eigs.m_max)
        rect = fam.big_contour(m_small)
        w = winding_count(P, U, rect, mesh)
        if w != 4 * m_small + 2:
            raise ContourError(f"Gamma_{m_small} winding {w} != {4 * m_small + 2}")
        inside0 = [spec0_values[n] + 0j for n in range(-2 * m_small, 2 * m_small + 2)]
        if not np.all(rect.contains(np.array(inside0))):
            raise ContourError("Gamma_m fails to enclose the unperturbed block")
    return fam
