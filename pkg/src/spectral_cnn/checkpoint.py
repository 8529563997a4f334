"""Network checkpoints: a key=value text header followed by SPFB banks.

Layout::

    SPCK 1\\n
    key=value\\n ...        (architecture spec)
    banks=<count>\\n
    \\n
    <SPFB bank> * count     (one per parametrized layer, in layer order)

Fully-connected layers are stored as spatial banks of 1x1 filters.
"""

import numpy as np

from .nn import ArchitectureSpec, Conv, FullyConnected, build_architecture
from .spectral_conv import SpatialFilterBank, read_bank, write_bank

HEADER = b"SPCK 1\n"


def _banks(net):
    for layer in net.layers:
        if isinstance(layer, Conv):
            yield layer, layer.bank
        elif isinstance(layer, FullyConnected):
            yield layer, SpatialFilterBank(layer.weight[:, :, None, None], layer.bias)


def save_checkpoint(net, path) -> None:
    if net.spec is None:
        raise ValueError("only networks built from an ArchitectureSpec can be checkpointed")
    banks = [bank for _, bank in _banks(net)]
    with open(path, "wb") as fh:
        fh.write(HEADER)
        for key, value in net.spec.to_header().items():
            fh.write(f"{key}={value}\n".encode("utf-8"))
        fh.write(f"banks={len(banks)}\n\n".encode("utf-8"))
        for bank in banks:
            write_bank(bank, fh)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.readline() != HEADER:
            raise ValueError(f"{path}: not a checkpoint file")
        items = {}
        while True:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: truncated header")
            line = line.decode("utf-8").rstrip("\n")
            if not line:
                break
            key, _, value = line.partition("=")
            items[key] = value
        count = int(items.pop("banks"))
        net = build_architecture(ArchitectureSpec.from_header(items))
        targets = list(_banks(net))
        if len(targets) != count:
            raise ValueError(f"{path}: expected {len(targets)} banks, found {count}")
        for layer, _ in targets:
            bank = read_bank(fh)
            if isinstance(layer, Conv):
                if type(bank) is not type(layer.bank) or bank.shape != layer.bank.shape:
                    raise ValueError(f"{path}: bank does not match {layer.notation}")
                layer.bank = bank
            else:
                layer.weight = np.ascontiguousarray(bank.filters[:, :, 0, 0])
                layer.bias = bank.bias
    return net
