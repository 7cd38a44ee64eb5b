"""Python bindings for the dinnlab core."""

import json

from . import _core
from ._core import (
    DinnlabError,
    final_size,
    i_max,
    integrate,
    make_range,
    param_error,
    ratio_from_final_size,
    rhs,
    synthesize,
)

__version__ = _core.__version__


def models():
    return list(_core.model_names())


def model_info(name):
    return json.loads(_core.model_json(name))


def train(model="covid_sird", config=None, points=100, horizon=None, noise=0.0, hidden=()):
    """Train a DINN on synthetic data and return the report as a dict."""
    return json.loads(_core.train_json(model, json.dumps(config or {}), points, horizon, noise, list(hidden)))


def fit_baseline(model="covid_sird", method="gauss_newton", points=100, noise=0.0, seed=0, x0=None,
                 fit_compartments=()):
    return json.loads(_core.fit_baseline_json(model, method, points, noise, seed, x0, list(fit_compartments)))


def experiment(id, config=None):
    return json.loads(_core.experiment_json(id, json.dumps(config or {})))


def experiment_ids():
    return list(_core.experiment_ids())
