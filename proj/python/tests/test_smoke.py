import math

import numpy as np
import pytest

import cylgeo


def test_great_circle_energy_and_criticality():
    loop = cylgeo.great_circle(cylgeo.standard_circle(2), 256)
    assert loop.x.shape == (256, 3)
    form = cylgeo.PerturbationForm(2)
    e = cylgeo.energy(loop, form, 0.0)
    assert abs(e - 2 * math.pi**2) / (2 * math.pi**2) < 1e-3
    assert cylgeo.residual_norm(loop, form, 0.0) < 1e-10


def test_kernel_dimension():
    loop = cylgeo.great_circle(cylgeo.standard_circle(1), 64)
    s = cylgeo.spectrum(loop, cylgeo.PerturbationForm(1), 0.0)
    assert s["kernel_dim"] == 2
    assert s["morse_index"] == 0
    assert np.all(np.diff(s["eigenvalues"]) >= 0)


def test_gamma_closed_form_for_diagonal_form():
    lam = np.array([3.0, 2.0, 1.0])
    prof = cylgeo.Profile.gaussian(0.0, 1.0)
    form = cylgeo.PerturbationForm.diagonal(2, prof, lam)
    s = 1 / math.sqrt(2)
    c = cylgeo.CircleParam(0.4, np.array([s, s, 0.0]), np.array([0.0, 0.0, 1.0]))
    expected = math.pi**2 * prof(0.4) * (lam @ c.p**2 + lam @ c.q**2)
    assert cylgeo.gamma(c, form) == pytest.approx(expected, rel=1e-10)


def test_json_forms_and_errors():
    form = cylgeo.form_from_json({"builtin": "odd_decay_anisotropic"}, 2)
    assert form.n == 2
    with pytest.raises(ValueError):
        cylgeo.form_from_json({"builtin": "mystery"}, 2)
    with pytest.raises(ValueError):
        cylgeo.CircleParam(0.0, np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_multiplicity_report():
    form = cylgeo.PerturbationForm.odd_decay_anisotropic(2)
    report = cylgeo.multiplicity_experiment(form, 0.02, nodes=32, starts=16)
    assert report["status"] == "ok"
    assert report["count"] >= 4
