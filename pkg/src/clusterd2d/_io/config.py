"""Reader of the TOML experiment configuration.

Units are fixed by the schema: Hz, m, per km^2, bits and seconds; the SIR threshold is given in dB.
"""

from __future__ import annotations

import dataclasses
import re
import sys
from pathlib import Path
from typing import Any, Optional, Union

from clusterd2d._exceptions import ConfigError
from clusterd2d._logging import logger
from clusterd2d._utils import db_to_linear
from clusterd2d.models import AdaptiveWindow, ExperimentConfig, FixedWindow

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["SCHEMA", "parse_config", "read_config"]

_FLOAT = "float"
_INT = "int"
_STR = "str"
_BOOL = "bool"
_FLOATS = "list of floats"

# section -> key -> (expected type, attribute of the section record)
SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "": {
        "experiment": (_STR, "experiment"),
        "seed": (_INT, "seed"),
        "trials": (_INT, "trials"),
        "output": (_STR, "output"),
    },
    "geometry": {
        "lambda_p_km2": (_FLOAT, "lambda_p"),
        "sigma_m": (_FLOAT, "sigma"),
        "n_bar": (_FLOAT, "n_bar"),
        "p": (_FLOAT, "p"),
        "lambda_b_km2": (_FLOAT, "lambda_b"),
    },
    "radio": {
        "bandwidth_hz": (_FLOAT, "bandwidth"),
        "theta_db": (_FLOAT, "theta"),
        "alpha": (_FLOAT, "alpha"),
        "mean_size_bits": (_FLOAT, "mean_size"),
        "channel_mode": (_STR, "channel_mode"),
        "alpha_los": (_FLOAT, "alpha_los"),
        "nakagami_m": (_FLOAT, "nakagami_m"),
    },
    "content": {
        "n_files": (_INT, "n_files"),
        "cache_size": (_INT, "cache_size"),
        "beta": (_FLOAT, "beta"),
        "policy": (_STR, "policy"),
        "b_i": (_FLOAT, "b_i"),
    },
    "traffic": {
        "zeta": (_FLOAT, "zeta"),
        "eta": (_FLOAT, "eta"),
    },
    "sweep": {
        "values": (_FLOATS, "sweep_values"),
        "series": (_FLOATS, "series"),
    },
    "montecarlo": {
        "process_kind": (_STR, "process_kind"),
        "provider_selection": (_STR, "provider_selection"),
        "intra_model": (_STR, "intra_model"),
        "condition_on_provider": (_BOOL, "condition_on_provider"),
        "window": (_STR, "window"),
        "window_radius_m": (_FLOAT, "window_radius"),
        "delta": (_FLOAT, "delta"),
        "max_doublings": (_INT, "max_doublings"),
        "ball_radius_m": (_FLOAT, "ball_radius"),
    },
    "solver": {
        "obj_tol": (_FLOAT, "obj_tol"),
        "max_outer_iters": (_INT, "max_outer_iters"),
        "barrier_mu0": (_FLOAT, "barrier_mu0"),
        "barrier_shrink": (_FLOAT, "barrier_shrink"),
        "barrier_min": (_FLOAT, "barrier_min"),
        "grad_step_tol": (_FLOAT, "grad_step_tol"),
        "max_inner_iters": (_INT, "max_inner_iters"),
        "fd_step": (_FLOAT, "fd_step"),
        "interior_shift": (_FLOAT, "interior_shift"),
        "upsilon_grid_points": (_INT, "upsilon_grid_points"),
    },
    "des": {
        "horizon_requests": (_INT, "horizon_requests"),
        "warmup_requests": (_INT, "warmup_requests"),
        "n_batches": (_INT, "n_batches"),
    },
    "quadrature": {
        "rel_tol": (_FLOAT, "rel_tol"),
        "abs_tol": (_FLOAT, "abs_tol"),
        "tail_mass_tol": (_FLOAT, "tail_mass_tol"),
        "order": (_INT, "order"),
        "inner_panels": (_INT, "inner_panels"),
        "max_panels": (_INT, "max_panels"),
    },
}

_SECTION_HEADER = re.compile(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]")
_DECODE_LINE = re.compile(r"line (\d+)")


def _key_line(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    """1-based line of ``key`` in ``section`` (top level: ``""``), or of the section header when ``key`` is None."""
    current = ""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = _SECTION_HEADER.match(line)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section and re.match(rf"^\"?{re.escape(key)}\"?\s*=", line):
            return number
    return None


def _check_type(value: Any, expected: str) -> bool:
    if expected == _BOOL:
        return isinstance(value, bool)
    if expected == _INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if expected == _FLOAT:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected == _STR:
        return isinstance(value, str)
    return isinstance(value, list) and all(_check_type(v, _FLOAT) for v in value)


def _validate(data: dict[str, Any], text: str) -> None:
    for key, value in data.items():
        if isinstance(value, dict):
            if not key or key not in SCHEMA:
                raise ConfigError(f"Unknown section `[{key}]`.", field=key, line=_key_line(text, key))
            entries, section = value, key
        elif key in SCHEMA[""]:
            entries, section = {key: value}, ""
        else:
            raise ConfigError(f"Unknown key `{key}`.", field=key, line=_key_line(text, "", key))
        for name, entry in entries.items():
            qualified = f"{section}.{name}" if section else name
            if name not in SCHEMA[section]:
                raise ConfigError(f"Unknown key `{qualified}`.", field=qualified, line=_key_line(text, section, name))
            expected, _ = SCHEMA[section][name]
            if not _check_type(entry, expected):
                raise ConfigError(
                    f"`{qualified}` must be a {expected}, got {type(entry).__name__}.",
                    field=qualified,
                    line=_key_line(text, section, name),
                )


def _section_changes(data: dict[str, Any], section: str) -> dict[str, Any]:
    return {SCHEMA[section][name][1]: value for name, value in data.get(section, {}).items()}


def _resolve(data: dict[str, Any], text: str) -> ExperimentConfig:
    if "experiment" not in data:
        raise ConfigError("Missing mandatory field `experiment`.", field="experiment", line=None)
    try:
        config = ExperimentConfig.for_figure(data["experiment"])
    except ValueError as e:
        raise ConfigError(str(e), field="experiment", line=_key_line(text, "", "experiment")) from e

    changes: dict[str, Any] = {
        attribute: data[name] for name, (_, attribute) in SCHEMA[""].items() if name in data and name != "experiment"
    }
    section = ""
    try:
        for section in ("geometry", "radio", "traffic", "solver", "des", "quadrature"):
            updates = _section_changes(data, section)
            if section == "radio" and "theta" in updates:
                updates["theta"] = db_to_linear(updates["theta"])
            record = "quad" if section == "quadrature" else section
            if updates:
                changes[record] = dataclasses.replace(getattr(config, record), **updates)
        section = "traffic"
        if "geometry" in changes and "eta" not in data.get("traffic", {}):
            # clients per base station follow the densities unless given
            traffic = changes.get("traffic", config.traffic)
            changes["traffic"] = dataclasses.replace(traffic, eta=changes["geometry"].eta)

        section = "montecarlo"
        mc_updates = _section_changes(data, section)
        window_kind = mc_updates.pop("window", None)
        radius = mc_updates.pop("window_radius", None)
        delta = mc_updates.pop("delta", None)
        if window_kind == "fixed" or (window_kind is None and radius is not None):
            if radius is None:
                raise ValueError("A fixed window needs `window_radius_m`.")
            mc_updates["window"] = FixedWindow(radius)
        elif window_kind in (None, "adaptive"):
            if delta is not None:
                mc_updates["window"] = AdaptiveWindow(delta)
        else:
            raise ValueError(f"`window` must be 'adaptive' or 'fixed', got {window_kind!r}.")
        if mc_updates:
            changes["montecarlo"] = config.montecarlo.replace(**mc_updates)

        section = "content"
        changes.update(_section_changes(data, section))
        section = "sweep"
        changes.update({k: tuple(v) for k, v in _section_changes(data, section).items()})
        section = ""
        return config.replace(**changes)
    except (TypeError, ValueError) as e:
        line = _key_line(text, section) if section else None
        where = f"[{section}] " if section else ""
        raise ConfigError(f"Invalid {where}parameters: {e}", field=section or None, line=line) from e


def parse_config(text: str) -> ExperimentConfig:
    """Parse the text of a TOML experiment configuration; see :func:`read_config`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _DECODE_LINE.search(str(e))
        raise ConfigError(f"Invalid TOML: {e}", line=int(match.group(1)) if match else None) from e
    _validate(data, text)
    return _resolve(data, text)


def read_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read a TOML experiment configuration.

    The only mandatory key is ``experiment``, a figure identifier. Every other value defaults to the reference
    operating point as adjusted by the figure recipe. Sections: ``[geometry]``, ``[radio]``, ``[content]``,
    ``[traffic]``, ``[sweep]``, ``[montecarlo]``, ``[solver]``, ``[des]`` and ``[quadrature]``.

    Parameters
    ----------
    path
        Path of the ``.toml`` file.

    Returns
    -------
    The resolved configuration.

    Raises
    ------
    ConfigError
        On a TOML syntax error, an unknown key, a value of the wrong type, a missing ``experiment`` or parameters
        rejected by the records; the message carries the line number when it is known.
    """
    path = Path(path)
    config = parse_config(path.read_text(encoding="utf-8"))
    logger.info(f"Read the configuration of {config.experiment} from {path}.")
    return config
