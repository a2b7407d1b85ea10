import logging
import math
import os
from functools import wraps
import warnings

import numpy as np

from ._errors import DomainError

logger = logging.getLogger(__name__)


def as_float_array(name, value):
    """``value`` as a float array; ragged or non-numeric input is a DomainError."""
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise DomainError(f"{name} must be numeric with a regular shape: {e}") from e


def check_finite(name, value):
    """Raise a DomainError unless ``value`` (scalar or array) is entirely finite."""
    arr = as_float_array(name, value)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(name, value, allow_zero=False):
    check_finite(name, value)
    if value < 0 or (value == 0 and not allow_zero):
        bound = '>= 0' if allow_zero else '> 0'
        raise DomainError(f"{name} must be {bound}, got {value!r}")
    return value


def stream_seed(master_seed, *key):
    """
    Derive the seed sequence of one random stream.

    The stream is identified by ``master_seed`` and an integer key such as
    ``(model_index, path_index)``; the derivation is a stable 64-bit mix
    that does not depend on the order in which streams are requested.
    """
    if master_seed < 0 or any(k < 0 for k in key):
        raise DomainError(f"seed and stream keys must be non-negative, got {master_seed}, {key}")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def spawn_generator(master_seed, *key):
    """Counter-based generator (Philox) for the stream ``(master_seed, *key)``."""
    return np.random.Generator(np.random.Philox(stream_seed(master_seed, *key)))


def binomial_standard_error(rate, n):
    """Standard error of an empirical frequency ``rate`` over ``n`` trials."""
    if n <= 0:
        return math.nan
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / n)


def ignore_runtime_warnings(func):
    """Silence numpy overflow/underflow RuntimeWarnings inside ``func``."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=RuntimeWarning)
            return func(*args, **kwargs)
    return wrapper


def ensure_directory_exists(directory_path):
    """
    Ensure that ``directory_path`` exists, creating it (and parents) if needed.

    :param directory_path: The output directory to check/create.
    """
    if not os.path.exists(directory_path):
        os.makedirs(directory_path)
        logger.info("Directory '%s' created.", directory_path)
    else:
        logger.debug("Directory '%s' already exists.", directory_path)
    return directory_path


def _update_configuration(scheme_dict, default_dict, updated_dict):
    """
    Update the scheme dictionary with values from the updated dictionary, or from the default
    dictionary if the updated value is not available.

    Args:
    - scheme_dict (dict): The scheme dictionary with keys and None values.
    - default_dict (dict): The dictionary containing default values.
    - updated_dict (dict): The dictionary containing updated values.

    Returns:
    - dict: The configuration dictionary with updated values.
    """

    for key, value in scheme_dict.items():
        if value is None:
            if key in updated_dict and updated_dict[key] is not None:
                scheme_dict[key] = updated_dict[key]
            else:
                scheme_dict[key] = default_dict.get(key, None)
        elif isinstance(value, dict):
            # Nested sections are resolved recursively
            scheme_dict[key] = _update_configuration(
                dict(value),
                default_dict.get(key, {}) or {},
                updated_dict.get(key, {}) or {}
            )

    return scheme_dict
