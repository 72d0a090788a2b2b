import math

import numpy as np
import pytest

from charnets import fractal


def test_cantor_tau_identity():
    for g in (1 / 3, 0.25, 0.4):
        assert g ** fractal.cantor_tau(g) == pytest.approx(0.5)
    assert fractal.cantor_tau(1 / 3) == pytest.approx(math.log(2) / math.log(3))
    with pytest.raises(ValueError):
        fractal.cantor_tau(1.0)


def test_generate_structure():
    iv = fractal.generate_middle_gamma_cantor(1 / 3, 3)
    assert iv.shape == (8, 2)
    assert iv[0] == pytest.approx([0, 1 / 27])
    assert iv[-1] == pytest.approx([26 / 27, 1])
    with pytest.raises(ValueError):
        fractal.generate_middle_gamma_cantor(0.6, 2)


def test_box_dimension_of_interval_and_points():
    assert fractal.box_dimension(np.array([[0.0, 1.0]])).slope == pytest.approx(1.0, abs=0.05)
    one = fractal.box_dimension(np.array([0.25]), scales=[0.1, 0.01, 0.001, 0.0001])
    assert one.slope == pytest.approx(0.0, abs=1e-12)


def test_box_dimension_high_precision_input():
    iv = fractal.generate_middle_gamma_cantor(1 / 3, 8)
    lo = fractal.box_dimension(iv).slope
    hi = fractal.box_dimension([(repr(float(a)), repr(float(b))) for a, b in iv]).slope
    assert hi == pytest.approx(lo, abs=0.05)


def test_estimate_serialisation():
    est = fractal.box_dimension(fractal.generate_middle_gamma_cantor(0.25, 6))
    d = est.to_json()
    assert set(d) >= {"slope", "r_squared", "scales", "counts", "degenerate_fit"}
    assert est.to_csv().splitlines()[0] == "scale,count"
