"""Benchmark configuration: JSON schema, validation, seed overrides.

Schema (all keys at the top level unless noted):

    config_id     str, used in output filenames and the summary CSV
    out_dir       str, directory for JSONL/CSV/checkpoint outputs
    timing        "wall" (default) or "logical" (deterministic elapsed_s)
    seeds         [int, ...]; overridden by env DRIFTBENCH_SEED when set
    batch_size    int >= 1
    dataset       {"kind": "synthetic", "spec": {...SyntheticSpec...},
                   "seed": int, "test_count": int}
                  or {"kind": "cifar10", "train_files": [...],
                      "test_file": str}
    embedding     {"kind": "projection", "dim": int, "seed": int}
                  or {"kind": "file", "train": path, "test": path}
                  (consumed by the embedding methods HT/ARF)
    val_mode      "reservoir" (default) or "holdout"
    val_fraction  float in (0,1), used when val_mode == "holdout"
    methods       {"HT": {...}, "ARF": {...}, "RBC": {...}, "DBC": {...}}
                  (each value holds that method's hyperparameters; only
                  listed methods run)
"""

import json
import os
from dataclasses import dataclass, field

from ..errors import ConfigError

METHOD_IDS = ("HT", "ARF", "RBC", "DBC")


@dataclass
class BenchConfig:
    config_id: str
    out_dir: str
    dataset: dict
    methods: dict
    batch_size: int = 32
    seeds: list = field(default_factory=lambda: [0])
    timing: str = "wall"
    embedding: dict = field(default_factory=lambda: {"kind": "projection", "dim": 64, "seed": 0})
    val_mode: str = "reservoir"
    val_fraction: float = 0.1


def canonical_method(method_id):
    m = str(method_id).upper()
    if m not in METHOD_IDS:
        raise ConfigError(f"unknown method id {method_id!r} (choose from {', '.join(METHOD_IDS)})")
    return m


def load_config(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return parse_config(obj, source=path)


def parse_config(obj, source="<config>"):
    for key in ("config_id", "out_dir", "dataset", "methods"):
        if key not in obj:
            raise ConfigError(f"{source}: missing required key {key!r}")
    known = set(BenchConfig.__dataclass_fields__)
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    cfg = BenchConfig(**obj)

    if cfg.batch_size < 1:
        raise ConfigError(f"{source}: batch_size must be >= 1")
    if cfg.timing not in ("wall", "logical"):
        raise ConfigError(f"{source}: timing must be 'wall' or 'logical'")
    if cfg.val_mode not in ("reservoir", "holdout"):
        raise ConfigError(f"{source}: val_mode must be 'reservoir' or 'holdout'")
    if not isinstance(cfg.seeds, list) or not all(isinstance(s, int) for s in cfg.seeds):
        raise ConfigError(f"{source}: seeds must be a list of integers")

    kind = cfg.dataset.get("kind")
    if kind == "synthetic":
        if "spec" not in cfg.dataset:
            raise ConfigError(f"{source}: synthetic dataset needs a 'spec' object")
    elif kind == "cifar10":
        if not cfg.dataset.get("train_files") or not cfg.dataset.get("test_file"):
            raise ConfigError(f"{source}: cifar10 dataset needs train_files and test_file")
    else:
        raise ConfigError(f"{source}: dataset kind must be 'synthetic' or 'cifar10'")

    ekind = cfg.embedding.get("kind")
    if ekind not in ("projection", "file"):
        raise ConfigError(f"{source}: embedding kind must be 'projection' or 'file'")
    if ekind == "file" and (not cfg.embedding.get("train") or not cfg.embedding.get("test")):
        raise ConfigError(f"{source}: file embedding needs 'train' and 'test' paths")

    cfg.methods = {canonical_method(k): dict(v or {}) for k, v in cfg.methods.items()}
    if not cfg.methods:
        raise ConfigError(f"{source}: methods is empty")

    env_seed = os.environ.get("DRIFTBENCH_SEED")
    if env_seed is not None:
        try:
            cfg.seeds = [int(env_seed)]
        except ValueError:
            raise ConfigError(f"DRIFTBENCH_SEED must be an integer, got {env_seed!r}")
    return cfg
