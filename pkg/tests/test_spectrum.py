import numpy as np
import pytest

from diraclab import (BoundaryMatrixPair, Circle, ContourError, NotRegularError,
                      PotentialMatrix, RectContour, contour_family, localize,
                      localization_seeds, unperturbed_spectrum, winding_count)

PI = np.pi
P0 = PotentialMatrix.zero()


def test_winding_free_dirichlet(dirichlet, mesh96):
    # lambda_n^0 = n, so a circle of radius 2.5 around 0 encloses five zeros
    assert winding_count(P0, dirichlet, Circle(0.0, 0.5), mesh96) == 1
    assert winding_count(P0, dirichlet, Circle(0.0, 2.5), mesh96) == 5
    assert winding_count(P0, dirichlet, RectContour(-1.5, 1.5, 1.0),
                         mesh96) == 3
    assert winding_count(P0, dirichlet, Circle(0.5 + 3.0j, 0.2), mesh96) == 0


def test_winding_counts_doubles_twice(periodic, mesh96):
    # the free periodic zeros at 2k are double
    assert winding_count(P0, periodic, Circle(0.0, 0.5), mesh96) == 2
    assert winding_count(P0, periodic, Circle(2.0, 0.5), mesh96) == 2


def test_winding_unstable_contour_raises(dirichlet, mesh96):
    # too coarse a quadrature with refinement disabled cannot resolve the
    # argument increments around five zeros
    with pytest.raises(ContourError):
        winding_count(P0, dirichlet, Circle(0.0, 2.5), mesh96,
                      quad_order=6, max_doublings=0)


def test_localize_requires_regular_form(mesh96):
    bf = BoundaryMatrixPair(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(NotRegularError):
        localize(P0, bf, 2, mesh96)


def test_localize_free_is_exact(dirichlet, mesh96):
    eigs = localize(P0, dirichlet, 4, mesh96)
    assert sorted(eigs.values) == list(range(-8, 10))
    for n, lam in eigs.values.items():
        assert abs(lam - n) < 1e-10
    assert not eigs.diagnostics


def test_localize_constant_offdiag_oracle(const_potential, periodic, mesh96):
    # off-diagonal constant c: Delta = 2 - 2 cos(pi sqrt(lambda^2 - c^2)),
    # so the pair at 0 splits into +-c and the pair at 2k sits at
    # +-sqrt(4 k^2 + c^2) as a genuine double eigenvalue
    c = 0.3
    eigs = localize(const_potential, periodic, 3, mesh96)
    a, b = sorted(eigs.pair(0), key=lambda z: z.real)
    assert abs(a + c) < 1e-7 and abs(b - c) < 1e-7
    for k in (1, 2, 3):
        root = np.sqrt(4.0 * k ** 2 + c ** 2)
        assert abs(eigs.values[2 * k] - root) < 1e-7
        assert abs(eigs.values[-2 * k] + root) < 1e-7
        assert eigs.multiplicity[2 * k] == 2
    assert any("contour moments" in d for d in eigs.diagnostics)


def test_localize_antiperiodic_free(antiperiodic, mesh96):
    eigs = localize(P0, antiperiodic, 2, mesh96)
    for n, lam in eigs.values.items():
        assert abs(lam.imag) < 1e-10
        assert abs(lam.real % 2 - 1) < 1e-10
        assert eigs.multiplicity[n] == 2


def test_localize_tail_decay(trig_potential, dirichlet, mesh128):
    # |lambda_n - lambda_n^0| decays as |n| grows (integrable potential)
    eigs = localize(trig_potential, dirichlet, 10, mesh128)
    assert eigs.tail_max(8, 10) < eigs.tail_max(0, 3)
    assert eigs.tail_max(8, 10) < 0.1


def test_localization_seeds_gauge_shift(full_trig_potential, dirichlet,
                                        mesh96):
    spec0, gamma = localization_seeds(full_trig_potential, dirichlet, mesh96)
    x = mesh96.nodes
    expect = (mesh96.integrate(full_trig_potential.p1(x))
              + mesh96.integrate(full_trig_potential.p4(x))) / (2 * PI)
    assert gamma == pytest.approx(expect, abs=1e-12)
    _, gamma0 = localization_seeds(P0, dirichlet, mesh96)
    assert gamma0 == 0.0


def test_contour_family_free(dirichlet, mesh96):
    spec0 = unperturbed_spectrum(dirichlet)
    eigs = localize(P0, dirichlet, 3, mesh96)
    fam = contour_family(spec0, eigs, P=P0, U=dirichlet, mesh=mesh96)
    for k in range(-3, 4):
        circ = fam.gamma(k)
        assert np.all(circ.contains(np.array(eigs.pair(k))))
    rect = fam.big_contour(1)
    assert winding_count(P0, dirichlet, rect, mesh96) == 6


def test_contour_family_perturbed(const_potential, periodic, mesh96):
    spec0 = unperturbed_spectrum(periodic)
    eigs = localize(const_potential, periodic, 2, mesh96)
    fam = contour_family(spec0, eigs, P=const_potential, U=periodic,
                         mesh=mesh96)
    # gamma_0 must enclose both split members and no neighbors
    circ = fam.gamma(0)
    assert np.all(circ.contains(np.array(eigs.pair(0))))
    assert not np.any(circ.contains(np.array(eigs.pair(1))))


def test_contour_family_needs_operator_for_validation(dirichlet, mesh96):
    spec0 = unperturbed_spectrum(dirichlet)
    eigs = localize(P0, dirichlet, 2, mesh96)
    with pytest.raises(ValueError):
        contour_family(spec0, eigs)
    fam = contour_family(spec0, eigs, validate=False)
    assert set(fam.gammas) == set(range(-2, 3))


def test_validate_flag_smoke(trig_potential, dirichlet, mesh96):
    eigs = localize(trig_potential, dirichlet, 2, mesh96, validate=True)
    assert eigs.N0 == 0
    rows = eigs.as_rows()
    assert [r[0] for r in rows] == list(range(-4, 6))
