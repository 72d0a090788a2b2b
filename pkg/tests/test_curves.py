import math

import numpy as np
import pytest

from charnets.curves import (Curve, adjoin_F, almost_semicircle, check_curve, curvature_at, in_S_eps, mollifier,
                             straight_end_lengths)
from charnets.errors import BadWindow, BoundaryPoint


def test_segment_and_arc_geometry():
    S = Curve.segment(1 + 1j, math.pi / 4, 2.0, 0.1)
    assert S.end == pytest.approx(1 + 1j + 2 * np.exp(1j * math.pi / 4))
    A = Curve.arc(0j, 0.0, 1.0, math.pi, 0.01)
    assert A.end == pytest.approx(2j, abs=1e-12)
    assert A.turning == pytest.approx(math.pi)
    assert check_curve(A)["reintegrates"]


def test_curvature_at_interior_and_boundary():
    A = Curve.arc(0j, 0.0, -2.0, 1.0, 0.01)
    assert curvature_at(A, 0.5) == pytest.approx(-2.0)
    with pytest.raises(BoundaryPoint):
        curvature_at(A, 0.0)


def test_reverse_mirror_similar():
    A = Curve.arc(0j, 0.3, 1.5, 1.0, 0.01)
    R = A.reversed()
    assert R.start == A.end and R.phi[0] == pytest.approx(A.phi[-1] + math.pi)
    M = A.mirrored()
    assert M.z == pytest.approx(-np.conj(A.z))
    T = A.similar(2.0, 1j, 0.5)
    assert T.length == pytest.approx(2 * A.length)
    assert check_curve(T)["reintegrates"]


def test_sub_and_bad_window():
    A = Curve.arc(0j, 0.0, 1.0, 2.0, 0.01)
    B = A.sub(0.5, 1.5)
    assert B.length == pytest.approx(1.0)
    assert B.start == pytest.approx(A.point_at(0.5))
    with pytest.raises(BadWindow):
        A.sub(1.5, 3.0)


def test_json_round_trip():
    A = Curve.arc(0j, 0.0, 1.0, 1.0, 0.1)
    B = Curve.from_json(A.to_json())
    assert np.array_equal(A.z, B.z) and np.array_equal(A.phi, B.phi)
    assert A.to_csv().splitlines()[0] == "s,x,y,phi"


def test_mollifier_normalised():
    u = np.linspace(-1, 1, 200001)
    assert np.trapezoid(mollifier(u), u) == pytest.approx(1.0, abs=1e-6)
    assert mollifier(np.array([1.0, -1.5]))[0] == 0.0


def test_adjoin_F_keeps_prefix_and_reaches_target():
    Z = Curve.arc(0j, 0.0, 0.5, 2.0, 0.002)
    l, delta, k0, tau = 0.5, 0.5, -1.0, 0.3
    F = adjoin_F(Z, l, delta, k0, tau)
    keep = F.s <= l
    assert np.max(np.abs(F.z[keep] - Z.z[: keep.sum()])) < 1e-12
    tail = F.s >= l + delta + 1e-9
    expect = (F.s[tail] - l - delta) * k0 + tau
    gap = F.phi[tail] - expect
    assert np.ptp(gap) < 1e-9 and abs(gap[0] / (2 * math.pi) - round(gap[0] / (2 * math.pi))) < 1e-9
    with pytest.raises(BadWindow):
        adjoin_F(Z, 1.8, 0.5, k0, tau)


def test_almost_semicircle_membership():
    C = almost_semicircle(0.02)
    rep = in_S_eps(C, 0.02)
    assert rep["all"], rep["violations"]
    r0, r1 = straight_end_lengths(C)
    assert r0 > 0 and r1 > 0
