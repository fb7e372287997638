"""EPT1 checkpoint files.

Little-endian. ``EPT1``, version u16, config text length u32 + UTF-8 TOML,
model hash (64 ASCII hex digits), tensor count u32, then a name table
(name length u16, name, ndim u8, dims u32 each) followed by the float64
payloads in table order.
"""
import logging
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from config import RunConfig, config_from_text
from errors import CheckpointError, ConfigError
from network.params import ModelParams

logger = logging.getLogger(__name__)

MAGIC = b"EPT1"
VERSION = 1
HASH_LEN = 64


@dataclass
class Checkpoint:
    config: RunConfig
    params: ModelParams
    extra: dict = field(default_factory=dict)


def save_checkpoint(path, params, config, extra=None):
    """Write params plus optional extra named arrays; replaces ``path`` atomically."""
    tensors = dict(params.arrays)
    for name, value in (extra or {}).items():
        if name in tensors:
            raise CheckpointError(f"extra tensor {name!r} clashes with a parameter name")
        tensors[name] = np.asarray(value, dtype=np.float64)

    text = config.to_toml().encode("utf-8")
    parts = [MAGIC, struct.pack("<HI", VERSION, len(text)), text,
             config.model_hash().encode("ascii"), struct.pack("<I", len(tensors))]
    for name, value in tensors.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<HB", len(encoded), value.ndim) + encoded)
        parts.append(struct.pack(f"<{value.ndim}I", *value.shape))
    for value in tensors.values():
        parts.append(np.ascontiguousarray(value, dtype="<f8").tobytes())

    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)
    logger.info("saved checkpoint %s (%d tensors)", path, len(tensors))


class _Cursor:
    def __init__(self, data, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint (needed {n} bytes at offset {self.pos})")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path, expected=None, param_prefixes=None):
    """Read a whole checkpoint before returning anything.

    ``expected`` is a RunConfig whose model section must hash to the stored one.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from None
    cur = _Cursor(data, path)
    if cur.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not an EPT1 checkpoint")
    version, text_len = cur.unpack("<HI")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        config = config_from_text(cur.take(text_len).decode("utf-8"))
    except (UnicodeDecodeError, ConfigError) as e:
        raise CheckpointError(f"{path}: unreadable config header: {e}") from None
    stored_hash = cur.take(HASH_LEN).decode("ascii", errors="replace")
    if stored_hash != config.model_hash():
        raise CheckpointError(f"{path}: config header does not match its hash")
    if expected is not None and expected.model_hash() != stored_hash:
        raise CheckpointError(f"{path}: model config hash mismatch; the checkpoint was built for a different model")

    (count,) = cur.unpack("<I")
    table = []
    for _ in range(count):
        name_len, ndim = cur.unpack("<HB")
        name = cur.take(name_len).decode("utf-8")
        shape = cur.unpack(f"<{ndim}I") if ndim else ()
        table.append((name, tuple(shape)))
    tensors = {}
    for name, shape in table:
        size = int(np.prod(shape)) if shape else 1
        tensors[name] = np.frombuffer(cur.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    if cur.pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - cur.pos} unexpected trailing bytes")

    prefixes = param_prefixes or ("embed.", "layers.", "head.")
    params = ModelParams({k: v for k, v in tensors.items() if k.startswith(prefixes)})
    try:
        params.check_shapes(config.model)
    except ValueError as e:
        raise CheckpointError(f"{path}: {e}") from None
    extra = {k: v for k, v in tensors.items() if not k.startswith(prefixes)}
    return Checkpoint(config=config, params=params, extra=extra)
