"""Loading IFS configurations: built-in corpus entries or JSON/TOML files."""
from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

from .maps import IfsSystem

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

CORPUS = (
    "psi_interval",
    "phi_interval",
    "circle_ns_rot",
    "circle_quasisym",
    "shift2",
    "shift2_inverse",
    "rotation_golden",
    "contraction_f1",
)


class ConfigError(ValueError):
    pass


class UnknownSystemError(ConfigError):
    pass


def corpus_config(name: str) -> dict:
    if name not in CORPUS:
        raise UnknownSystemError(f"unknown corpus system {name!r}; choose from {', '.join(CORPUS)}")
    text = resources.files("hyperifs").joinpath("corpus", f"{name}.json").read_text()
    return json.loads(text)


def read_config(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        if path.suffix == ".toml":
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None


def config_for(system: str) -> dict:
    """Config dict for a corpus name or a path to a .json/.toml file."""
    if system in CORPUS:
        return corpus_config(system)
    if Path(system).suffix in (".json", ".toml") or Path(system).exists():
        return read_config(system)
    raise UnknownSystemError(f"unknown corpus system {system!r}; choose from {', '.join(CORPUS)}")


def build_system(config: dict, resolution: int | None = None) -> IfsSystem:
    try:
        sys = IfsSystem.from_config(config)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system config: {exc}") from None
    return sys if resolution is None else sys.with_resolution(resolution)


def load_system(system: str, resolution: int | None = None) -> IfsSystem:
    return build_system(config_for(system), resolution)


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
