"""
Run configuration loading
Reads the flat key=value run file with python-dotenv, applies command-line
overrides and builds the nested RunConfig model.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import ValidationError

from .errors import ConfigurationError
from .models import RunConfig, reference_integrator

logger = logging.getLogger(__name__)

# flat key -> location in the nested RunConfig
FLAT_KEYS: Dict[str, Tuple[str, ...]] = {
    "energy": ("energy", "kind"),
    "scale": ("energy", "scale"),
    "epsilon": ("energy", "epsilon"),
    "harmonic": ("energy", "harmonic"),
    "cos_coeffs": ("energy", "cos_coeffs"),
    "sin_coeffs": ("energy", "sin_coeffs"),
    "curve": ("curve", "kind"),
    "r0": ("curve", "r0"),
    "a": ("curve", "a"),
    "b": ("curve", "b"),
    "series_cos": ("curve", "series_cos"),
    "series_sin": ("curve", "series_sin"),
    "n_list": ("n_list",),
    "n": ("n_sides",),
    "grid": ("reference_grid",),
    "t_end_fraction": ("t_end_fraction",),
    "tol_abs": ("integrator", "tol_abs"),
    "tol_rel": ("integrator", "tol_rel"),
    "method": ("integrator", "method"),
    "max_step": ("integrator", "max_step"),
    "vanish_tolerance": ("integrator", "vanish_tolerance"),
    "extinction_margin": ("integrator", "extinction_margin"),
    "ref_method": ("reference_integrator", "method"),
    "ref_tol_abs": ("reference_integrator", "tol_abs"),
    "ref_tol_rel": ("reference_integrator", "tol_rel"),
    "ref_max_step": ("reference_integrator", "max_step"),
    "samples": ("sample_times",),
    "hausdorff_samples": ("hausdorff_samples",),
    "validation_samples": ("validation_samples",),
    "workers": ("workers",),
    "seed": ("seed",),
    "out": ("output_dir",),
}

LIST_KEYS = {"cos_coeffs", "sin_coeffs", "series_cos", "series_sin", "n_list"}
NULLABLE_KEYS = {"n", "max_step", "ref_max_step"}


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def _parse_value(key: str, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    value = raw.strip()
    if key in LIST_KEYS:
        return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]
    if key in NULLABLE_KEYS and value.lower() in ("", "none", "null"):
        return None
    return value


def read_flat_config(path: Path) -> Dict[str, Optional[str]]:
    """Raw key=value pairs of a run file, keys normalized"""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}", path=str(path))
    return {normalize_key(key): value for key, value in dotenv_values(path).items()}


def nest(flat: Mapping[str, Any]) -> Dict[str, Any]:
    """Flat keys into the nested dict RunConfig validates"""
    nested: Dict[str, Any] = {}
    unknown: List[str] = []
    for key, raw in flat.items():
        key = normalize_key(key)
        if key not in FLAT_KEYS:
            unknown.append(key)
            continue
        if raw is None and key not in NULLABLE_KEYS:
            raise ConfigurationError(f"config key '{key}' has no value")
        target = nested
        *parents, leaf = FLAT_KEYS[key]
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = _parse_value(key, raw)

    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}",
                                 known=", ".join(FLAT_KEYS))
    if "reference_integrator" in nested:
        # partial ref_* overrides keep the stiff reference method
        nested["reference_integrator"].setdefault("method", reference_integrator().method.value)
    return nested


def build_run_config(flat: Mapping[str, Any]) -> RunConfig:
    try:
        return RunConfig(**nest(flat))
    except ValidationError as error:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}" for item in error.errors()
        )
        raise ConfigurationError(f"invalid run configuration: {problems}") from error


def load_run_config(path: Optional[Path] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Precedence: command-line override > config file > model default.
    Overrides whose value is None are treated as not given.
    """
    flat: Dict[str, Any] = {}
    if path is not None:
        flat.update(read_flat_config(path))
        logger.debug(f"Loaded {len(flat)} keys from {path}")
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[normalize_key(key)] = value

    config = build_run_config(flat)
    logger.debug(f"Run configuration: {config.model_dump(mode='json')}")
    return config
