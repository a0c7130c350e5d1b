"""Binary checkpoint format.

Layout (all integers and floats little-endian)::

    b"AFCK"  uint32 version  uint32 n_tensors
    per tensor:
        uint16 name_len  name (utf-8)  uint32 ndim  uint64 dims[ndim]  float64 data[prod(dims)]

Tensors: ``actor.W<k>``, ``actor.b<k>``, ``critic.W<k>``, ``critic.b<k>``,
``log_std``, ``norm.mean``, ``norm.var``, ``norm.count``, ``action_bound``.
Hidden layers are tanh and output layers linear, so shapes fully define the
networks.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from afc.agent.mlp import MlpParams
from afc.agent.policy import Agent, RunningNormalizer
from afc.errors import InputError

MAGIC = b"AFCK"
VERSION = 1


def _tensors(agent: Agent):
    out = []
    for prefix, net in (("actor", agent.actor), ("critic", agent.critic)):
        for k, (w, b) in enumerate(zip(net.weights, net.biases)):
            out.append((f"{prefix}.W{k}", w))
            out.append((f"{prefix}.b{k}", b))
    out += [
        ("log_std", agent.log_std),
        ("norm.mean", agent.normalizer.mean),
        ("norm.var", agent.normalizer.var),
        ("norm.count", np.array(agent.normalizer.count)),
        ("action_bound", np.array(agent.action_bound)),
    ]
    return out


def dumps(agent: Agent) -> bytes:
    tensors = _tensors(agent)
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw_name = name.encode()
        parts.append(struct.pack("<H", len(raw_name)) + raw_name)
        parts.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def loads(data: bytes) -> Agent:
    if data[:4] != MAGIC:
        raise InputError("not an afc checkpoint (bad magic)")
    version, n = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise InputError(f"unsupported checkpoint version {version}")
    pos = 12
    tensors = {}
    try:
        for _ in range(n):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos:pos + name_len].decode()
            pos += name_len
            (ndim,) = struct.unpack_from("<I", data, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}Q", data, pos)
            pos += 8 * ndim
            count = int(np.prod(shape)) if ndim else 1
            if pos + 8 * count > len(data):
                raise InputError(f"checkpoint truncated in tensor {name!r}")
            tensors[name] = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(shape).astype(float)
            pos += 8 * count
    except struct.error as exc:
        raise InputError(f"checkpoint truncated: {exc}") from None

    def net(prefix):
        weights, biases = [], []
        k = 0
        while f"{prefix}.W{k}" in tensors:
            weights.append(tensors[f"{prefix}.W{k}"])
            biases.append(tensors[f"{prefix}.b{k}"])
            k += 1
        acts = tuple(["tanh"] * (k - 1) + ["linear"])
        return MlpParams(weights, biases, acts)

    norm = RunningNormalizer(tensors["norm.mean"], tensors["norm.var"], float(tensors["norm.count"].item()))
    return Agent(net("actor"), net("critic"), tensors["log_std"], norm, float(tensors["action_bound"].item()))


def save(agent: Agent, path):
    Path(path).write_bytes(dumps(agent))


def load(path) -> Agent:
    return loads(Path(path).read_bytes())
