"""Execution of one (method, seed) run and of whole benchmark configs.

The embedding methods (HT, ARF) consume feature vectors — either a
seeded random projection or a precomputed embedding file — and report
prequential accuracy per batch. The image methods (RBC, DBC) consume
raw images through their own run loops. All four emit the same event
stream contract.
"""

import dataclasses
import os

import numpy as np

from ..data import (
    ImageDataset,
    LookupEmbedder,
    RandomProjectionEmbedder,
    concat_datasets,
    load_cifar10_binary,
    load_embeddings,
    stream_batches,
)
from ..dbc import DbcConfig, run_dbc
from ..errors import ConfigError
from ..forest import AdaptiveRandomForestClassifier
from ..hoeffding import HoeffdingTreeClassifier
from ..metrics import RunMetrics, make_clock, write_events_jsonl
from ..nn.checkpoint import save_checkpoint
from ..reservoir import RbcConfig, _resolve_val_interval, run_rbc
from ..seeding import derive_seed
from .config import canonical_method
from .report import write_summary
from .synth import SyntheticSpec, make_synthetic_stream


def prepare_data(cfg):
    """(train dataset, test dataset, class count) for a bench config."""
    kind = cfg.dataset["kind"]
    if kind == "synthetic":
        spec = SyntheticSpec.from_dict(cfg.dataset["spec"])
        dseed = cfg.dataset.get("seed", 0)
        train = make_synthetic_stream(spec, derive_seed(dseed, "stream", 0))
        test_spec = dataclasses.replace(
            spec,
            count=int(cfg.dataset.get("test_count", max(1, spec.count // 5))),
            # test the concept that holds at stream end
            drift_at=0 if spec.drift_at is not None else None,
        )
        test = make_synthetic_stream(test_spec, derive_seed(dseed, "stream", 1))
        return train, test, spec.n_classes
    train = concat_datasets([load_cifar10_binary(p) for p in cfg.dataset["train_files"]])
    test = load_cifar10_binary(cfg.dataset["test_file"])
    return train, test, train.num_classes


def _slice_dataset(ds, sl):
    return ImageDataset(
        images=ds.images[sl], labels=ds.labels[sl], num_classes=ds.num_classes, ids=ds.ids[sl]
    )


def split_holdout(cfg, train):
    """(stream dataset, holdout dataset or None) per the config's val mode."""
    if cfg.val_mode != "holdout":
        return train, None
    n_val = int(len(train) * cfg.val_fraction)
    if n_val < 1 or n_val >= len(train):
        raise ConfigError(f"val_fraction {cfg.val_fraction} leaves no usable split")
    return _slice_dataset(train, slice(0, len(train) - n_val)), _slice_dataset(
        train, slice(len(train) - n_val, len(train))
    )


def make_embedder(cfg, dataset, which):
    """Embedder for `which` in {"train", "test"}; validates file embeddings."""
    e = cfg.embedding
    if e["kind"] == "projection":
        return RandomProjectionEmbedder(
            dataset.image_shape, dim=e.get("dim", 64), seed=e.get("seed", 0)
        )
    table = load_embeddings(e[which])
    if len(table) != len(dataset) or not np.array_equal(table.labels, dataset.labels):
        raise ConfigError(f"embedding file {e[which]} does not match the {which} dataset")
    return LookupEmbedder(table)


def _construct(ctor, params, method, **fixed):
    try:
        return ctor(**params, **fixed)
    except TypeError as err:
        raise ConfigError(f"bad {method} parameters: {err}") from err


def _proba_loss(proba, labels):
    p = np.clip(proba[np.arange(len(labels)), labels], 1e-12, None)
    return float(-np.log(p).mean())


def run_tree_method(
    method, clf, batches, embedder, test_vectors, test_labels, clock,
    val_interval, config_id, seed, val_vectors=None, val_labels=None,
):
    """Prequential loop for the embedding methods.

    Without a holdout set, the validate events report prequential
    accuracy over the batches since the previous validation.
    """
    clock.start()
    metrics = RunMetrics(method=method, config_id=config_id, seed=seed)
    win_hits = 0
    win_loss = 0.0
    win_n = 0
    batch_number = 0
    for batch in batches:
        batch_number += 1
        vectors = embedder.embed_batch(batch.images, batch.ids)
        if batch_number == 1:
            clf._ensure_init(vectors.shape[1])
        proba = clf.predict_proba(vectors)
        preds = clf.predict(vectors)
        hits = int((preds == batch.labels).sum())
        loss = _proba_loss(proba, batch.labels)
        clf.partial_fit(vectors, batch.labels)
        metrics.add("train", batch_number, hits / len(batch), loss, clock)
        win_hits += hits
        win_loss += loss * len(batch)
        win_n += len(batch)
        if batch_number % val_interval == 0:
            if val_vectors is not None:
                v_preds = clf.predict(val_vectors)
                v_acc = float((v_preds == val_labels).mean())
                v_loss = _proba_loss(clf.predict_proba(val_vectors), val_labels)
            else:
                v_acc = win_hits / win_n
                v_loss = win_loss / win_n
            metrics.add("validate", batch_number, v_acc, v_loss, clock)
            win_hits, win_loss, win_n = 0, 0.0, 0
    test_preds = clf.predict(test_vectors)
    test_acc = float((test_preds == test_labels).mean())
    test_loss = _proba_loss(clf.predict_proba(test_vectors), test_labels)
    metrics.add("test", batch_number, test_acc, test_loss, clock)
    metrics.attachments["classifier"] = clf
    return metrics


def run_one(cfg, method_id, seed, data=None):
    """Execute a single (method, seed) run and return its RunMetrics."""
    method = canonical_method(method_id)
    if method not in cfg.methods:
        raise ConfigError(f"method {method} is not configured in {cfg.config_id!r}")
    if data is None:
        data = prepare_data(cfg)
    train, test, n_classes = data
    stream_ds, holdout = split_holdout(cfg, train)
    batches = stream_batches(stream_ds, cfg.batch_size, derive_seed(seed, "stream"))
    clock = make_clock(cfg.timing)
    params = dict(cfg.methods[method])

    if method in ("HT", "ARF"):
        val_interval = _resolve_val_interval(params.pop("val_interval", None), len(batches))
        train_emb = make_embedder(cfg, stream_ds if holdout is None else train, "train")
        test_emb = (
            train_emb
            if cfg.embedding["kind"] == "projection"
            else make_embedder(cfg, test, "test")
        )
        test_vectors = test_emb.embed_batch(test.images, test.ids)
        val_vectors = val_labels = None
        if holdout is not None:
            val_vectors = train_emb.embed_batch(holdout.images, holdout.ids)
            val_labels = holdout.labels
        if method == "HT":
            clf = _construct(HoeffdingTreeClassifier, params, method, n_classes=n_classes)
        else:
            clf = _construct(
                AdaptiveRandomForestClassifier,
                params,
                method,
                n_classes=n_classes,
                seed=derive_seed(seed, "bagging"),
            )
        return run_tree_method(
            method, clf, batches, train_emb, test_vectors, test.labels, clock,
            val_interval, cfg.config_id, seed,
            val_vectors=val_vectors, val_labels=val_labels,
        )

    val_data = (holdout.images, holdout.labels) if holdout is not None else None
    if method == "RBC":
        rcfg = _construct(RbcConfig, params, method, seed=seed)
        return run_rbc(
            batches, n_classes, test.images, test.labels, rcfg,
            clock=clock, config_id=cfg.config_id, val_data=val_data,
        )
    dcfg = _construct(DbcConfig, params, method, seed=seed)
    return run_dbc(
        batches, n_classes, test.images, test.labels, dcfg,
        clock=clock, config_id=cfg.config_id, val_data=val_data,
    )


def run_benchmark(cfg, methods=None, seeds=None):
    """Run every (method, seed) pair; write JSONL, checkpoints, and the
    summary CSV. Returns (summary_path, rows)."""
    if methods:
        methods = [canonical_method(m) for m in methods]
        for m in methods:
            if m not in cfg.methods:
                raise ConfigError(f"method {m} is not configured in {cfg.config_id!r}")
    else:
        methods = list(cfg.methods)
    seeds = list(seeds) if seeds else list(cfg.seeds)
    os.makedirs(cfg.out_dir, exist_ok=True)
    data = prepare_data(cfg)
    rows = []
    for method in methods:
        for seed in seeds:
            metrics = run_one(cfg, method, seed, data=data)
            stem = os.path.join(cfg.out_dir, f"{cfg.config_id}_{method}_{seed}")
            write_events_jsonl(stem + ".jsonl", metrics.events)
            model = metrics.attachments.get("model")
            if model is not None:
                ckpt = metrics.attachments.get("checkpoint")
                val_acc = ckpt.val_acc if ckpt is not None else 0.0
                save_checkpoint(stem + ".ckpt", model, val_acc)
            summary = metrics.summary()
            rows.append(
                {
                    "method": method,
                    "config_id": cfg.config_id,
                    "seed": seed,
                    "best_val_acc": summary["best_val_acc"],
                    "test_acc": summary["test_acc"],
                    "train_seconds": summary["train_seconds"],
                }
            )
    summary_path = os.path.join(cfg.out_dir, f"{cfg.config_id}_summary.csv")
    write_summary(summary_path, rows)
    return summary_path, rows
