"""Experiment drivers behind the CLI: training, twin parametrization runs,
information preservation and pooling demos.

Every driver is a deterministic function of its inputs and seeds. Wall-clock
timings are kept out of the main CSV logs so reruns are byte-identical.
"""

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data as dio
from .checkpoint import save_checkpoint
from .nn import Mode, build_architecture, network_backward, network_forward, predict
from .optim import LrSchedule, OptimizerState, apply_update, schedule_lr
from .pooling import max_pool_forward, max_pool_reconstruct, spectral_approximate

log = logging.getLogger(__name__)

TRAIN_LOG_HEADER = ["schema", "epoch", "lr", "train_loss", "train_err", "test_err"]
TRAIN_LOG_SCHEMA = "train_log.v1"
SMOOTHING = 5


# -- data ------------------------------------------------------------------------

def load_splits(cfg):
    """Return normalized (train, test) datasets for an experiment config."""
    d = cfg.data
    if d["source"] == "cifar10":
        train_paths, test_paths = dio.find_cifar10(d["path"])
        if not train_paths:
            raise FileNotFoundError(f"no data_batch_*.bin files under {d['path']}")
        train = dio.load_cifar10_binary(train_paths).subset(d["n_train"])
        test = None
        if d["n_test"]:
            if not test_paths:
                raise FileNotFoundError(f"no test_batch.bin under {d['path']}")
            test = dio.load_cifar10_binary(test_paths).subset(d["n_test"])
    else:
        total = d["n_train"] + d["n_test"]
        full = dio.synth_labelled(total, classes=cfg.model["classes"], seed=d["seed"])
        train = dio.Dataset(full.images[:d["n_train"]], full.labels[:d["n_train"]], full.name)
        test = None
        if d["n_test"]:
            test = dio.Dataset(full.images[d["n_train"]:], full.labels[d["n_train"]:], full.name)
    if test is None:
        (train,), _ = dio.normalize(train)
    else:
        (train, test), _ = dio.normalize(train, test)
    return train, test


# -- training ----------------------------------------------------------------------

@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_err: float
    test_err: float
    seconds: float


def make_optimizer(optim_cfg) -> OptimizerState:
    b1, b2 = optim_cfg["betas"]
    return OptimizerState(rule=optim_cfg["rule"], lr=float(optim_cfg["lr"]),
                          weight_decay=float(optim_cfg["weight_decay"]),
                          momentum=float(optim_cfg["momentum"]),
                          beta1=float(b1), beta2=float(b2))


def error_rate(net, ds) -> float:
    if ds is None or len(ds) == 0:
        return float("nan")
    logits = predict(net, ds.images)
    return float(np.mean(logits.argmax(axis=1) != ds.labels))


def train_network(net, train, test, optim_cfg, data_seed, max_shift=0, hflip=False,
                  callback=None):
    """Minibatch training; returns one :class:`EpochRecord` per epoch.

    The batch order and augmentation draws depend only on ``data_seed`` so
    twin runs see identical data.
    """
    state = make_optimizer(optim_cfg)
    schedule = LrSchedule(float(optim_cfg["lr"]), [tuple(m) for m in optim_cfg["milestones"]])
    order_rng = np.random.default_rng(data_seed)
    aug_rng = np.random.default_rng(data_seed + 1)
    aug = dio.AugmentSpec(max_shift=max_shift, hflip=hflip, seed=data_seed + 1)
    augmenting = max_shift > 0 or hflip
    batch_size = optim_cfg["batch_size"]
    params = net.parameters()
    records = []
    for epoch in range(optim_cfg["epochs"]):
        start = time.perf_counter()
        state.lr = schedule_lr(schedule, epoch)
        net.mode = Mode.TRAIN
        perm = order_rng.permutation(len(train))
        loss_sum = 0.0
        wrong = 0
        for lo in range(0, len(perm), batch_size):
            idx = perm[lo:lo + batch_size]
            x = train.images[idx]
            if augmenting:
                x = dio.augment(x, aug, aug_rng)
            loss, pred, caches = network_forward(net, x, train.labels[idx])
            grads = network_backward(net, caches)
            apply_update(params, grads, state)
            loss_sum += loss * len(idx)
            wrong += int(np.sum(pred != train.labels[idx]))
        rec = EpochRecord(epoch + 1, state.lr, loss_sum / len(perm), wrong / len(perm),
                          error_rate(net, test), time.perf_counter() - start)
        records.append(rec)
        log.info("epoch %d loss %.4f train_err %.4f test_err %.4f (%.1fs)", rec.epoch,
                 rec.train_loss, rec.train_err, rec.test_err, rec.seconds)
        if callback is not None:
            callback(rec)
    return records


def write_train_log(records, out_dir, stem="train_log"):
    out_dir = Path(out_dir)
    rows = [[TRAIN_LOG_SCHEMA, r.epoch, r.lr, r.train_loss, r.train_err, r.test_err]
            for r in records]
    dio.write_csv(rows, TRAIN_LOG_HEADER, out_dir / f"{stem}.csv")
    dio.write_csv([[r.epoch, r.seconds] for r in records], ["epoch", "seconds"],
                  out_dir / f"{stem}_timing.csv")


def run_train(cfg):
    out_dir = Path(cfg.output["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test = load_splits(cfg)
    net = build_architecture(cfg.architecture())
    records = train_network(net, train, test, cfg.optim, cfg.data["seed"],
                            cfg.data["max_shift"], cfg.data["hflip"])
    write_train_log(records, out_dir)
    save_checkpoint(net, out_dir / "checkpoint.spck")
    return records, net


# -- twin parametrization comparison ---------------------------------------------------

def smooth(values, window=SMOOTHING):
    """Trailing mean over up to ``window`` epochs."""
    values = np.asarray(values, dtype=np.float64)
    out = np.empty_like(values)
    for i in range(len(values)):
        out[i] = values[max(0, i - window + 1):i + 1].mean()
    return out


def first_reach(curve, threshold):
    """1-based epoch of the first value <= threshold, or None."""
    hits = np.nonzero(np.asarray(curve) <= threshold)[0]
    return int(hits[0]) + 1 if hits.size else None


@dataclass
class SpeedupResult:
    threshold: float
    spatial_epochs: int
    spectral_epochs: int
    speedup: float
    lower_bound: bool


def speedup_factor(spatial_losses, spectral_losses, window=SMOOTHING) -> SpeedupResult:
    """Epochs for spatial to reach its final smoothed loss over epochs for spectral."""
    s_sp = smooth(spatial_losses, window)
    s_fr = smooth(spectral_losses, window)
    threshold = float(s_sp[-1])
    e_sp = first_reach(s_sp, threshold)
    e_fr = first_reach(s_fr, threshold)
    if e_fr is None:
        return SpeedupResult(threshold, e_sp, len(s_fr), e_sp / len(s_fr), True)
    return SpeedupResult(threshold, e_sp, e_fr, e_sp / e_fr, False)


COMPARE_HEADER = ["schema", "epoch", "spatial_loss", "spectral_loss", "spatial_smoothed",
                  "spectral_smoothed", "spatial_test_err", "spectral_test_err"]
SUMMARY_HEADER = ["schema", "family", "filter_size", "threshold", "spatial_epochs",
                  "spectral_epochs", "speedup", "lower_bound"]


def compare_parametrizations(cfg, train=None, test=None):
    """Train spatial and spectral twins from the same initialization and data order."""
    if train is None:
        train, test = load_splits(cfg)
    runs = {}
    for param in ("spatial", "spectral"):
        net = build_architecture(cfg.architecture(parametrization=param))
        runs[param] = (net, train_network(net, train, test, cfg.optim, cfg.data["seed"],
                                          cfg.data["max_shift"], cfg.data["hflip"]))
    sp_rec, fr_rec = runs["spatial"][1], runs["spectral"][1]
    result = speedup_factor([r.train_loss for r in sp_rec], [r.train_loss for r in fr_rec])
    return runs, result


def run_compare(cfg):
    out_dir = Path(cfg.output["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    runs, result = compare_parametrizations(cfg)
    sp_rec, fr_rec = runs["spatial"][1], runs["spectral"][1]
    s_sp = smooth([r.train_loss for r in sp_rec])
    s_fr = smooth([r.train_loss for r in fr_rec])
    rows = [["compare_log.v1", a.epoch, a.train_loss, b.train_loss, s_sp[i], s_fr[i],
             a.test_err, b.test_err] for i, (a, b) in enumerate(zip(sp_rec, fr_rec))]
    dio.write_csv(rows, COMPARE_HEADER, out_dir / "compare_log.csv")
    dio.write_csv([["compare_summary.v1", cfg.model["family"], cfg.model["filter_size"],
                    result.threshold, result.spatial_epochs, result.spectral_epochs,
                    result.speedup, int(result.lower_bound)]],
                  SUMMARY_HEADER, out_dir / "compare_summary.csv")
    for param, (net, records) in runs.items():
        dio.write_csv([[r.epoch, r.seconds] for r in records], ["epoch", "seconds"],
                      out_dir / f"{param}_timing.csv")
        save_checkpoint(net, out_dir / f"{param}.spck")
    return runs, result


# -- information preservation ----------------------------------------------------------

def max_pool_stride_for(fraction: float) -> int:
    """Smallest power-of-two stride whose retained fraction 1/s^2 fits in ``fraction``."""
    if fraction >= 1.0:
        return 1
    return 2 ** math.ceil(math.log2(1.0 / math.sqrt(fraction)) - 1e-12)


def spectral_size_for(fraction: float, size: int) -> int:
    return int(min(size, max(1, round(math.sqrt(fraction) * size))))


def normalized_error(x, approx) -> float:
    norm = np.linalg.norm(x)
    return float(np.linalg.norm(x - approx) / norm) if norm > 0 else 0.0


def spectral_errors(images, size_h, size_w):
    approx = spectral_approximate(images, size_h, size_w)
    return np.array([normalized_error(x, a) for x, a in zip(images, approx)])


def max_pool_errors(images, stride):
    if stride == 1:
        return np.zeros(len(images))
    pooled, cache = max_pool_forward(images, stride, stride)
    approx = max_pool_reconstruct(pooled, cache)
    return np.array([normalized_error(x, a) for x, a in zip(images, approx)])


INFO_HEADER = ["schema", "fraction", "spectral_size", "spectral_error", "maxpool_error", "stride"]


def information_preservation(images, fractions):
    """Rows of mean normalized l2 error for spectral truncation vs max pooling.

    ``images`` is ``[n, ..., M, N]``; each image's error is measured over all
    of its channels. Max pooling only reaches fractions 1/s^2, so each row
    reports the best stride that keeps at most the requested fraction.
    """
    images = np.asarray(images, dtype=np.float64)
    M, N = images.shape[-2:]
    cache_mp = {}
    rows = []
    for f in fractions:
        h = spectral_size_for(f, M)
        w = spectral_size_for(f, N)
        s_err = spectral_errors(images, h, w).mean()
        stride = max_pool_stride_for(f)
        if stride not in cache_mp:
            cache_mp[stride] = max_pool_errors(images, min(stride, M, N)).mean()
        rows.append(["info_preservation.v1", float(f), h, float(s_err), float(cache_mp[stride]),
                     stride])
    return rows


def parse_fractions(text: str):
    """``"0.02..1.0"`` (25 linear steps), ``"0.02..1.0:50"`` or a comma list."""
    if ".." in text:
        span, _, count = text.partition(":")
        lo, hi = (float(v) for v in span.split(".."))
        n = int(count) if count else 25
        if not 0 < lo <= hi <= 1 or n < 1:
            raise ValueError(f"bad fraction range {text!r}")
        return [float(v) for v in np.linspace(lo, hi, n)]
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values or any(not 0 < v <= 1 for v in values):
        raise ValueError(f"fractions must lie in (0, 1], got {text!r}")
    return values


# -- pooling demo --------------------------------------------------------------------------

DEMO_HEADER = ["schema", "size", "fraction", "spectral_error", "maxpool_error", "stride"]


def pool_demo(image, sizes, out_dir):
    """Write original | spectral | max-pool panels per size and an error CSV."""
    image = np.asarray(image, dtype=np.float64)
    M, N = image.shape
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, outputs = [], {}
    for h in sizes:
        if not 1 <= h <= min(M, N):
            raise ValueError(f"size {h} outside [1, {min(M, N)}]")
        frac = h * h / (M * N)
        spec = spectral_approximate(image, h, h)
        stride = min(max_pool_stride_for(frac), M, N)
        if stride > 1:
            pooled, cache = max_pool_forward(image, stride, stride)
            mp = max_pool_reconstruct(pooled, cache)
        else:
            mp = image.copy()
        outputs[h] = (spec, mp)
        dio.write_pgm(np.hstack([image, spec, mp]), out_dir / f"pool_{h:03d}.pgm")
        rows.append(["pool_demo.v1", h, frac, normalized_error(image, spec),
                     normalized_error(image, mp), stride])
    dio.write_csv(rows, DEMO_HEADER, out_dir / "pool_demo.csv")
    return outputs, rows
