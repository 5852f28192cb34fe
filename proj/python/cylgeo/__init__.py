"""Closed geodesics on perturbed cylinders R x S^N."""

import json as _json

from ._cylgeo import (
    CircleParam,
    Loop,
    PerturbationForm,
    Profile,
    circle_energy,
    compute_w_norm,
    corrected_energy,
    energy,
    gamma,
    great_circle,
    residual_norm,
    spectrum,
    standard_circle,
    _form_from_json,
    _multiplicity_experiment,
)

__all__ = [
    "CircleParam",
    "Loop",
    "PerturbationForm",
    "Profile",
    "circle_energy",
    "compute_w_norm",
    "corrected_energy",
    "energy",
    "form_from_json",
    "gamma",
    "great_circle",
    "multiplicity_experiment",
    "residual_norm",
    "spectrum",
    "standard_circle",
]


def form_from_json(spec, n=-1):
    """Builds a form from the JSON layout used by the command-line configs."""
    return _form_from_json(_json.dumps(spec), n)


def multiplicity_experiment(form, eps, nodes=256, starts=64, seed=1, threads=1):
    """Runs the reduction pipeline and returns the report as a dict."""
    return _json.loads(_multiplicity_experiment(form, eps, nodes, starts, seed, threads))
