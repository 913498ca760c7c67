"""Equiconvergence experiment harness.

Runs the end-to-end pipeline for a configuration (boundary form, potential
with class kappa, test function with class mu, norm exponents nu, partial
sum schedule m): builds the perturbed and comparison root systems, measures
||S_m f - S_m^0 f||_nu over the schedule, and attaches the admissibility
verdict for each nu.  The admissibility predicate

    1/kappa + 1/mu - 1/nu <= 1,   kappa in (1, inf],

is evaluated in exact rational arithmetic with symbolic infinity, with the
excluded corner kappa = nu = inf, mu = 1 flagged separately.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np

from .boundary import boundary_from_config
from .expansions import partial_sum, root_system
from .green import green_kernel, kernel_sup
from .mesh import GridFunction2, build_mesh, lp_norm
from .potentials import comparison_operator, make_potential, PotentialMatrix

CSV_HEADER = "m,nu,norm_diff,admissible,excluded_case"


class OutsideTheoremError(ValueError):
    """kappa <= 1 is outside the scope of the admissibility statement."""


class StageError(RuntimeError):
    """Pipeline failure carrying the stage tag."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause!r}")
        self.stage = stage
        self.cause = cause


def _inv(p, name):
    """1/p as an exact Fraction; p may be numeric or the string 'inf'."""
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return Fraction(0)
        p = float(p)
    if p == np.inf:
        return Fraction(0)
    if isinstance(p, float):
        frac = Fraction(p).limit_denominator(10 ** 9)
    else:
        frac = Fraction(p)
    if frac < 1:
        raise ValueError(f"{name} must be >= 1 or inf, got {p}")
    return 1 / frac


def admissible(kappa, mu, nu):
    """(verdict, excluded_case) for the triple; exact arithmetic."""
    try:
        ik = _inv(kappa, "kappa")
    except ValueError:
        ik = Fraction(1)
    if ik >= 1:
        raise OutsideTheoremError(
            "admissibility is stated for kappa in (1, inf]")
    imu = _inv(mu, "mu")
    inu = _inv(nu, "nu")
    excluded = (ik == 0 and inu == 0 and imu == 1)
    holds = (ik + imu - inu <= 1)
    return (holds and not excluded), excluded


def _num_from_json(v):
    return np.inf if v == "inf" else v


def _num_to_json(v):
    return "inf" if v == np.inf else v


@dataclass
class ExperimentConfig:
    boundary: object = "dirichlet_analog"
    potential: dict = field(default_factory=lambda: {"family": "zero"})
    kappa: float = np.inf
    f: dict = field(default_factory=lambda: {"family": "smooth"})
    mu: float = 2.0
    nu_list: tuple = (2.0, np.inf)
    m_schedule: tuple = (2, 4, 8, 16, 32, 64)
    mesh_panels: int = 256
    mesh_order: int = 5
    seed: int = 0
    comparison: str = "free"        # "free" | "corollary-diagonal"

    def __post_init__(self):
        ms = tuple(int(m) for m in self.m_schedule)
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("m schedule must be strictly increasing")
        object.__setattr__(self, "m_schedule", ms)
        object.__setattr__(self, "nu_list", tuple(self.nu_list))
        if self.comparison not in ("free", "corollary-diagonal"):
            raise ValueError(f"unknown comparison mode {self.comparison!r}")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("kappa", "mu"):
            if key in d:
                d[key] = _num_from_json(d[key])
        if "nu_list" in d:
            d["nu_list"] = tuple(_num_from_json(v) for v in d["nu_list"])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["kappa"] = _num_to_json(self.kappa)
        d["mu"] = _num_to_json(self.mu)
        d["nu_list"] = [_num_to_json(v) for v in self.nu_list]
        d["m_schedule"] = list(self.m_schedule)
        return d


@dataclass
class EquiconvReport:
    config: ExperimentConfig
    rows: list                      # dicts m, nu, norm_diff
    verdicts: dict                  # nu -> (admissible, excluded)
    warnings: list
    metadata: dict

    def norm(self, m, nu):
        for r in self.rows:
            if r["m"] == m and r["nu"] == nu:
                return r["norm_diff"]
        raise KeyError((m, nu))


def _terms_fn(terms):
    parsed = []
    for kind, k, amp in terms:
        parsed.append((kind, float(k), complex(amp) if not isinstance(amp, list)
                       else complex(amp[0], amp[1])))

    def fn(x):
        out = np.zeros_like(x, dtype=complex)
        for kind, k, amp in parsed:
            if kind == "sin":
                out += amp * np.sin(k * x)
            elif kind == "cos":
                out += amp * np.cos(k * x)
            elif kind == "pow":
                out += amp * x ** k
            else:
                raise ValueError(f"unknown term kind {kind!r}")
        return out
    return fn


def make_function(spec, mesh, mu=2.0, seed=0, form=None) -> GridFunction2:
    """Test functions f = (f1, f2) on the mesh.

    Families: smooth (trig/monomial term lists), bc_smooth (smooth with
    U(f) = 0), bump (indicator), power (|x-x0|^{-1/mu+eps} profile),
    random_trig (seeded random trigonometric pair).
    """
    family = spec.get("family", "smooth")
    x = mesh.nodes
    if family == "smooth":
        comps = spec.get("components")
        if comps is None:
            comps = [[["sin", 1, 1.0], ["cos", 3, 0.2]],
                     [["cos", 2, 0.7], ["sin", 1, 0.4]]]
        f1 = _terms_fn(comps[0])(x)
        f2 = _terms_fn(comps[1])(x)
        return GridFunction2(mesh, np.stack([f1, f2]), mu_class=mu)
    if family == "bc_smooth":
        if form is None:
            raise ValueError("bc_smooth requires the boundary form")
        # endpoint values from the null space of (C D)
        _, _, vh = np.linalg.svd(np.hstack([form.C, form.D]))
        w = vh[2].conj() + 0.5 * vh[3].conj()
        v0, vpi = w[:2], w[2:]
        blend0 = np.cos(0.5 * x) ** 2
        blendpi = np.sin(0.5 * x) ** 2
        wig = np.sin(x) * np.array([[0.3], [0.2j]]) * np.sin(2 * x)
        vals = (v0[:, None] * blend0 + vpi[:, None] * blendpi + wig)
        return GridFunction2(mesh, vals, mu_class=mu)
    if family == "bump":
        c = float(spec.get("center", np.pi / 2))
        w = float(spec.get("width", np.pi / 8))
        comp = int(spec.get("component", 0))
        ind = ((x > c - w / 2) & (x < c + w / 2)).astype(complex)
        vals = np.zeros((2, mesh.size), dtype=complex)
        vals[comp] = ind
        return GridFunction2(mesh, vals, mu_class=mu)
    if family == "power":
        eps = float(spec.get("eps", 0.05))
        x0 = float(spec.get("x0", np.pi / 3))
        comp = int(spec.get("component", 0))
        alpha = (0.0 if mu == np.inf else 1.0 / float(mu)) - eps
        vals = np.zeros((2, mesh.size), dtype=complex)
        vals[comp] = np.abs(x - x0) ** (-alpha)
        return GridFunction2(mesh, vals, mu_class=mu)
    if family == "random_trig":
        rng = np.random.default_rng(seed)
        nt = int(spec.get("n_terms", 6))
        vals = np.zeros((2, mesh.size), dtype=complex)
        for comp in range(2):
            for k in range(1, nt + 1):
                a = rng.normal() + 1j * rng.normal()
                b = rng.normal() + 1j * rng.normal()
                vals[comp] += (a * np.sin(k * x) + b * np.cos(k * x)) / k
        return GridFunction2(mesh, vals, mu_class=mu)
    raise ValueError(f"unknown function family {family!r}")


def _stage(tag):
    class _Ctx:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc, tb):
            self.elapsed = time.perf_counter() - self.t0
            if exc is not None and not isinstance(exc, StageError):
                raise StageError(tag, exc) from exc
            return False
    return _Ctx()


def run_equiconv(config: ExperimentConfig) -> EquiconvReport:
    """Full pipeline for one configuration; deterministic given the seed."""
    warnings = []
    timings = {}
    with _stage("setup") as st:
        U = boundary_from_config(config.boundary)
        P = make_potential(config.potential)
        mesh = build_mesh(config.mesh_panels, order=config.mesh_order,
                          singular_points=P.singular_points)
        f = make_function(config.f, mesh, mu=config.mu, seed=config.seed,
                          form=U)
        if config.comparison == "corollary-diagonal":
            P0, U0 = comparison_operator(P, U, mesh)
        else:
            P0, U0 = PotentialMatrix.zero(), U
    timings["setup"] = st.elapsed
    m_max = max(config.m_schedule)
    with _stage("root_system") as st:
        rs = root_system(P, U, m_max, mesh)
    timings["root_system"] = st.elapsed
    with _stage("comparison_system") as st:
        rs0 = root_system(P0, U0, m_max, mesh)
    timings["comparison_system"] = st.elapsed
    with _stage("partial_sums") as st:
        rows = []
        for m in config.m_schedule:
            d = partial_sum(rs, f, m) - partial_sum(rs0, f, m)
            for nu in config.nu_list:
                rows.append({"m": m, "nu": nu,
                             "norm_diff": lp_norm(d, nu)})
    timings["partial_sums"] = st.elapsed
    verdicts = {}
    for nu in config.nu_list:
        try:
            verdicts[nu] = admissible(config.kappa, config.mu, nu)
        except OutsideTheoremError as exc:
            verdicts[nu] = (False, False)
            warnings.append(f"nu={nu}: {exc}")
    for nu, (ok, _) in verdicts.items():
        if not ok:
            warnings.append(
                f"nu={nu}: triple (kappa={config.kappa}, mu={config.mu}, "
                f"nu={nu}) not admissible; norms recorded as observations")
    with _stage("metadata") as st:
        lam_probe = rs.eigs.values[0] + 0.5 + 2.0j
        M_est = kernel_sup(green_kernel(P, U, lam_probe, mesh))
    timings["metadata"] = st.elapsed
    metadata = {
        "N0": rs.eigs.N0,
        "M_est": M_est,
        "mesh_panels": mesh.n_panels,
        "mesh_order": mesh.order,
        "timings": timings,
        "diagnostics": list(rs.eigs.diagnostics),
    }
    return EquiconvReport(config=config, rows=rows, verdicts=verdicts,
                          warnings=warnings, metadata=metadata)


def _worker_count():
    env = os.environ.get("DIRACLAB_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def sweep(configs, out_dir=None):
    """Run configurations in parallel with per-config isolation."""
    results = [None] * len(configs)

    def one(i):
        try:
            return ("report", run_equiconv(configs[i]))
        except Exception as exc:
            return ("error", f"config {i}: {exc}")

    if configs:
        with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
            for i, res in enumerate(pool.map(one, range(len(configs)))):
                results[i] = res
    bundle = {
        "reports": [r for kind, r in results if kind == "report"],
        "errors": [r for kind, r in results if kind == "error"],
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        index = []
        for i, (kind, r) in enumerate(results):
            if kind == "report":
                base = os.path.join(out_dir, f"run_{i:03d}")
                emit_report(r, base + ".csv", "csv")
                emit_report(r, base + ".json", "structured")
                index.append({"config": i, "status": "ok",
                              "csv": base + ".csv", "json": base + ".json"})
            else:
                index.append({"config": i, "status": "error", "message": r})
        with open(os.path.join(out_dir, "index.json"), "w") as fh:
            json.dump(index, fh, indent=2)
    return bundle


def _fmt_nu(nu):
    return "inf" if nu == np.inf else repr(float(nu))


def emit_report(report: EquiconvReport, path, format="csv"):
    """Write a report as CSV (fixed header) or structured JSON."""
    if format == "csv":
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in report.rows:
                ok, exc = report.verdicts[r["nu"]]
                fh.write(f"{r['m']},{_fmt_nu(r['nu'])},{r['norm_diff']!r},"
                         f"{str(ok).lower()},{str(exc).lower()}\n")
        return path
    if format == "structured":
        doc = {
            "config": report.config.to_dict(),
            "rows": [{"m": r["m"], "nu": _fmt_nu(r["nu"]),
                      "norm_diff": r["norm_diff"]} for r in report.rows],
            "verdicts": {_fmt_nu(nu): {"admissible": ok, "excluded_case": exc}
                         for nu, (ok, exc) in report.verdicts.items()},
            "warnings": report.warnings,
            "metadata": report.metadata,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
        return path
    raise ValueError(f"unknown format {format!r}")


def parse_report_csv(path):
    """Round-trip parser for the CSV format."""
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        rows = []
        for rec in csv.reader(fh):
            rows.append({
                "m": int(rec[0]),
                "nu": np.inf if rec[1] == "inf" else float(rec[1]),
                "norm_diff": float(rec[2]),
                "admissible": rec[3] == "true",
                "excluded_case": rec[4] == "true",
            })
    return rows


def load_report_json(path):
    with open(path) as fh:
        return json.load(fh)
