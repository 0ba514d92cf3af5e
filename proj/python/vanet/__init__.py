"""Grid-city vehicular network connectivity.

Configurations may be passed as a dict, a JSON string or None (defaults).
"""

import csv
import io
import json

from . import _vanet
from ._vanet import (  # noqa: F401
    ConfigError,
    VanetError,
    hetero_middle_bound,
    inhomogeneous_sample,
    microcanonical,
    p_connect_middle,
    p_connect_street,
    p_connect_uniform,
    percolation_curve,
)

__version__ = _vanet.__version__


def _text(config):
    if config is None or isinstance(config, str):
        return config
    return json.dumps(config)


def default_config():
    return json.loads(_vanet.default_config())


def validate_config(config=None):
    return _vanet.validate_config(_text(config))


def config_hash(config=None):
    return _vanet.config_hash(_text(config))


def street_densities(config=None):
    return _vanet.street_densities(_text(config))


def street_probabilities(config=None):
    return _vanet.street_probabilities(_text(config))


def analyze_city(config=None, iterations=1000, seed=1):
    return _vanet.analyze_city(_text(config), iterations, seed)


def simulate(config=None, stream=0):
    return _vanet.simulate(_text(config), stream)


def scenario_csv(number, config=None, **kwargs):
    return _vanet.scenario_csv(number, _text(config), **kwargs)


def run_scenario(number, config=None, **kwargs):
    """Rows of scenario_csv as dicts with numeric fields converted."""
    rows = list(csv.DictReader(io.StringIO(scenario_csv(number, config, **kwargs))))
    for r in rows:
        r["side"] = int(r["side"])
        for key in ("sweep_value", "mean", "stderr"):
            r[key] = float(r[key])
    return rows
