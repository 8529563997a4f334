"""Command-line entry point.

Exit codes: 0 success, 2 usage/config error, 1 runtime error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from . import data as dio
from . import experiments as ex
from .config import ConfigError, load_config


class UsageError(Exception):
    pass


def _parse_sizes(text):
    try:
        sizes = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers, got {text!r}")
    if not sizes or any(s < 1 for s in sizes):
        raise UsageError("--sizes must be positive integers")
    return sizes


def _cifar_dir(args):
    path = args.cifar_dir or os.environ.get("CIFAR10_DIR")
    if not path:
        raise UsageError("CIFAR input needs --cifar-dir or CIFAR10_DIR")
    return path


def _load_cifar(args):
    train_paths, _ = dio.find_cifar10(_cifar_dir(args))
    if not train_paths:
        raise FileNotFoundError(f"no data_batch_*.bin files under {_cifar_dir(args)}")
    return dio.load_cifar10_binary(train_paths[:1])


def cmd_pool_demo(args):
    sizes = _parse_sizes(args.sizes)
    if args.input.lower().endswith(".pgm"):
        image = dio.read_pgm(args.input)
    else:
        try:
            index = int(args.input)
        except ValueError:
            raise UsageError("--input must be a .pgm path or a CIFAR image index")
        ds = _load_cifar(args)
        if not 0 <= index < len(ds):
            raise UsageError(f"CIFAR index {index} out of range")
        image = ds.images[index].mean(axis=0)
    if max(sizes) > min(image.shape):
        raise UsageError(f"sizes must not exceed {min(image.shape)}")
    ex.pool_demo(image, sizes, args.out)
    return 0


def cmd_info_preservation(args):
    try:
        fractions = ex.parse_fractions(args.fractions)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.data == "cifar":
        ds = _load_cifar(args)
    else:
        ds = dio.synth_power_law_images(args.n, exponent=args.exponent, seed=args.seed)
    n = args.n
    if n > len(ds):
        print(f"warning: --n {n} exceeds dataset size {len(ds)}; using {len(ds)}", file=sys.stderr)
        n = len(ds)
    rows = ex.information_preservation(ds.images[:n], fractions)
    out = Path(args.out)
    if out.parent:
        out.parent.mkdir(parents=True, exist_ok=True)
    dio.write_csv(rows, ex.INFO_HEADER, out)
    return 0


def cmd_train(args):
    cfg = load_config(args.config)
    ex.run_train(cfg)
    return 0


def cmd_compare_param(args):
    cfg = load_config(args.config)
    _, result = ex.run_compare(cfg)
    flag = " (lower bound)" if result.lower_bound else ""
    print(f"speedup {result.speedup:.3f}{flag}: spatial {result.spatial_epochs} epochs, "
          f"spectral {result.spectral_epochs} epochs to loss {result.threshold:.4f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="spectral-cnn",
                                description="Spectral pooling and spectral filter parametrization experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("pool-demo", help="spectral vs max-pool approximations of one image")
    demo.add_argument("--input", required=True, help="PGM path or CIFAR image index")
    demo.add_argument("--sizes", required=True, help="comma-separated output sizes, e.g. 4,8,16")
    demo.add_argument("--out", required=True)
    demo.add_argument("--cifar-dir")
    demo.set_defaults(func=cmd_pool_demo)

    info = sub.add_parser("info-preservation", help="normalized l2 error vs retained fraction")
    info.add_argument("--data", choices=("cifar", "synth"), default="synth")
    info.add_argument("--n", type=int, default=100)
    info.add_argument("--fractions", default="0.02..1.0")
    info.add_argument("--out", required=True, help="output CSV path")
    info.add_argument("--cifar-dir")
    info.add_argument("--seed", type=int, default=0, help="seed for synthetic images")
    info.add_argument("--exponent", type=float, default=2.0, help="1/f exponent for synthetic images")
    info.set_defaults(func=cmd_info_preservation)

    train = sub.add_parser("train", help="train one network from a JSON config")
    train.add_argument("--config", required=True)
    train.set_defaults(func=cmd_train)

    cmp_ = sub.add_parser("compare-param", help="spatial vs spectral parametrization twin runs")
    cmp_.add_argument("--config", required=True)
    cmp_.set_defaults(func=cmd_compare_param)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
