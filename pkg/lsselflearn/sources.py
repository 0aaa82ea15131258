"""Dataset references: builtin generators, local files and URLs."""

import hashlib
import logging
import tempfile
from pathlib import Path
from typing import Dict, Hashable, Optional, Tuple, Union
from urllib.parse import parse_qsl, urlsplit

import requests

from .data import Dataset, GaussianConfig, generate_two_gaussians, load_csv
from .errors import ConfigError, DatasetNotFoundError

logger = logging.getLogger(__name__)

BUILTIN_SCHEME = "builtin"

# query key -> (GaussianConfig field, converter)
_GAUSSIAN_KEYS = {
    "d": ("d", int),
    "separation": ("mean_separation", float),
    "prior": ("class_prior", float),
    "n": ("n_per_draw", int),
}


def parse_builtin(ref: str) -> Tuple[str, Dict[str, str]]:
    """Split ``builtin:<kind>?k=v&...`` into kind and parameters."""
    parts = urlsplit(ref)
    if parts.scheme != BUILTIN_SCHEME or not parts.path:
        raise ConfigError(f"not a builtin dataset reference: {ref!r}")
    return parts.path, dict(parse_qsl(parts.query, keep_blank_values=True))


def gaussian_config_from_ref(ref: str) -> GaussianConfig:
    kind, params = parse_builtin(ref)
    if kind != "gaussians":
        raise ConfigError(f"unknown builtin dataset {kind!r}; available: gaussians")
    values = {}
    for key, raw in params.items():
        if key not in _GAUSSIAN_KEYS:
            raise ConfigError(
                f"unknown parameter {key!r} in {ref!r}; expected {sorted(_GAUSSIAN_KEYS)}"
            )
        field_name, convert = _GAUSSIAN_KEYS[key]
        try:
            values[field_name] = convert(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} in {ref!r}: {raw!r}") from exc
    return GaussianConfig(**values)


def _fetch(url: str, cache_dir: Path) -> Path:
    """Download ``url`` once; later calls reuse the cached copy."""
    name = Path(urlsplit(url).path).name or "dataset.csv"
    target = cache_dir / f"{hashlib.sha1(url.encode('utf-8')).hexdigest()[:12]}-{name}"
    if target.is_file():
        logger.info("Using cached copy of %s", url)
        return target
    logger.info("Downloading %s", url)
    try:
        response = requests.get(url, timeout=30)
        response.raise_for_status()
    except requests.RequestException as exc:
        raise DatasetNotFoundError(f"{url}: {exc}") from exc
    cache_dir.mkdir(parents=True, exist_ok=True)
    target.write_bytes(response.content)
    return target


def resolve_dataset(
    ref: Union[str, Path],
    label_column: str = "class",
    classes: Optional[Tuple[Hashable, Hashable]] = None,
    seed: int = 0,
    cache_dir: Optional[Union[str, Path]] = None,
) -> Dataset:
    """Load a dataset from a builtin URI, a file path or an http(s) URL.

    ``seed`` only matters for builtin generators. URLs are downloaded once
    into ``cache_dir``; without one every call downloads afresh.
    """
    if isinstance(ref, Path):
        ref = str(ref)

    if ref.startswith(BUILTIN_SCHEME + ":"):
        cfg = gaussian_config_from_ref(ref)
        if classes is None:
            return generate_two_gaussians(cfg, seed=seed)
        return generate_two_gaussians(cfg, seed=seed, classes=classes)

    if ref.startswith(("http://", "https://")):
        name = Path(urlsplit(ref).path).stem or "dataset"
        if cache_dir:
            return load_csv(_fetch(ref, Path(cache_dir)), label_column, classes, name=name)
        # no cache: the download lives only as long as this call
        with tempfile.TemporaryDirectory(prefix="lsselflearn-") as scratch:
            return load_csv(_fetch(ref, Path(scratch)), label_column, classes, name=name)

    return load_csv(Path(ref), label_column, classes)
