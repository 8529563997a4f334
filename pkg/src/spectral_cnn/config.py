"""Strict JSON experiment configuration."""

import json
from dataclasses import dataclass, field
from typing import Optional

from .nn import FAMILIES, ArchitectureSpec, BuildError
from .optim import RULES

SOURCES = ("cifar10", "synth")

# section -> {key: (types, required, default)}
SCHEMA = {
    "data": {
        "source": (str, True, None),
        "path": ((str, type(None)), False, None),
        "n_train": (int, False, 512),
        "n_test": (int, False, 0),
        "seed": (int, True, None),
        "max_shift": (int, False, 0),
        "hflip": (bool, False, False),
    },
    "model": {
        "family": (str, True, None),
        "gamma": ((int, float), False, 0.85),
        "depth": (int, False, 3),
        # null disables frequency dropout
        "alpha": ((int, float, type(None)), False, 0.30),
        "beta": ((int, float, type(None)), False, 0.15),
        "filter_size": (int, False, 3),
        "width_scale": ((int, float), False, 1.0),
        "parametrization": (str, False, "spatial"),
        "classes": (int, False, 10),
        "seed": (int, True, None),
    },
    "optim": {
        "rule": (str, True, None),
        "lr": ((int, float), True, None),
        "momentum": ((int, float), False, 0.9),
        "weight_decay": ((int, float), False, 0.0),
        "betas": (list, False, [0.9, 0.999]),
        "epochs": (int, True, None),
        "batch_size": (int, True, None),
        "milestones": (list, False, []),
    },
    "output": {
        "dir": (str, True, None),
    },
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    data: dict
    model: dict
    optim: dict
    output: dict
    source_text: Optional[str] = field(default=None, repr=False)

    def architecture(self, parametrization=None) -> ArchitectureSpec:
        m = self.model
        return ArchitectureSpec(
            family=m["family"], gamma=float(m["gamma"]), depth=m["depth"],
            alpha=None if m["alpha"] is None else float(m["alpha"]),
            beta=None if m["beta"] is None else float(m["beta"]),
            classes=m["classes"], filter_size=m["filter_size"],
            width_scale=float(m["width_scale"]),
            parametrization=parametrization or m["parametrization"], seed=m["seed"],
        )


def _is_type(value, types):
    types = types if isinstance(types, tuple) else (types,)
    if isinstance(value, bool) and bool not in types:
        return False
    return isinstance(value, types)


def parse_config(obj) -> ExperimentConfig:
    errors = []
    if not isinstance(obj, dict):
        raise ConfigError(["top level must be a JSON object"])
    for key in obj:
        if key not in SCHEMA:
            errors.append(f"unknown section {key!r}")
    sections = {}
    for name, fields_ in SCHEMA.items():
        raw = obj.get(name)
        if raw is None:
            errors.append(f"missing section {name!r}")
            raw = {}
        elif not isinstance(raw, dict):
            errors.append(f"section {name!r} must be an object")
            raw = {}
        for key in raw:
            if key not in fields_:
                errors.append(f"unknown key {name}.{key}")
        out = {}
        for key, (types, required, default) in fields_.items():
            if key not in raw:
                if required:
                    errors.append(f"missing required key {name}.{key}")
                out[key] = default
                continue
            if not _is_type(raw[key], types):
                errors.append(f"{name}.{key} has wrong type {type(raw[key]).__name__}")
            out[key] = raw[key]
        sections[name] = out

    d, m, o = sections["data"], sections["model"], sections["optim"]
    if d["source"] is not None and d["source"] not in SOURCES:
        errors.append(f"data.source must be one of {SOURCES}")
    if d["source"] == "cifar10" and not d["path"]:
        errors.append("data.path is required for cifar10")
    for key in ("n_train", "max_shift"):
        if isinstance(d[key], int) and d[key] < (1 if key == "n_train" else 0):
            errors.append(f"data.{key} out of range")
    if isinstance(d["n_test"], int) and d["n_test"] < 0:
        errors.append("data.n_test must be >= 0")
    if m["family"] is not None and m["family"] not in FAMILIES:
        errors.append(f"model.family must be one of {FAMILIES}")
    if o["rule"] is not None and o["rule"] not in RULES:
        errors.append(f"optim.rule must be one of {RULES}")
    if isinstance(o["epochs"], int) and o["epochs"] < 1:
        errors.append("optim.epochs must be >= 1")
    if isinstance(o["batch_size"], int) and o["batch_size"] < 1:
        errors.append("optim.batch_size must be >= 1")
    if isinstance(o["lr"], (int, float)) and not isinstance(o["lr"], bool) and o["lr"] <= 0:
        errors.append("optim.lr must be > 0")
    if isinstance(o["betas"], list) and (len(o["betas"]) != 2
                                         or not all(_is_type(b, (int, float)) for b in o["betas"])):
        errors.append("optim.betas must be [beta1, beta2]")
    if isinstance(o["milestones"], list):
        ok = all(isinstance(p, list) and len(p) == 2 and _is_type(p[0], int)
                 and _is_type(p[1], (int, float)) for p in o["milestones"])
        if not ok:
            errors.append("optim.milestones must be a list of [epoch, factor] pairs")
        elif any(b[0] <= a[0] for a, b in zip(o["milestones"], o["milestones"][1:])):
            errors.append("optim.milestones epochs must be strictly increasing")

    cfg = ExperimentConfig(d, m, o, sections["output"])
    try:
        cfg.architecture().validate()
    except BuildError as exc:
        errors.extend(f"model: {e}" for e in str(exc).split("; ") if "family" not in e)
    except (TypeError, ValueError):
        pass  # wrong-typed model keys are already reported above
    if not errors:
        return cfg
    raise ConfigError(errors)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    cfg = parse_config(obj)
    cfg.source_text = text
    return cfg
