"""Python interface to the sspde C++ core."""

import json

from . import _core
from ._core import (
    SspdeError,
    apriori_bound,
    gpam_renorm_constant,
    growth_envelope,
    kappa_bar,
    massive_recursion,
    moment_fixed_point,
    sample_gpam_noise,
    set_thread_count,
    solve,
    study_names,
    wiener_renorm_constant,
)

__all__ = [
    "SspdeError",
    "apriori_bound",
    "exponents",
    "gpam_order_bounds",
    "gpam_renorm_constant",
    "growth_envelope",
    "kappa_bar",
    "massive_recursion",
    "moment_fixed_point",
    "run_study",
    "sample_gpam_noise",
    "set_thread_count",
    "solve",
    "study_names",
    "wiener_renorm_constant",
]


def exponents(kappa, delta=0.01):
    return json.loads(_core.exponents(kappa, delta))


def gpam_order_bounds(n, epsilon, seed, **kwargs):
    return json.loads(_core.gpam_order_bounds(n, epsilon, seed, **kwargs))


def run_study(name, config=None):
    """Run a study. `config` is a mapping of config keys or raw `key = value` text."""
    if config is None:
        text = ""
    elif isinstance(config, str):
        text = config
    else:
        text = "".join(f"{k} = {v}\n" for k, v in config.items())
    out = _core.run_study(name, text)
    out["summary"] = json.loads(out["summary"])
    out["manifest"] = json.loads(out["manifest"])
    return out
