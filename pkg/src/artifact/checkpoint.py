"""Versioned binary checkpoint container.

Layout (little-endian)::

    magic     8 bytes  b"HLRICKPT"
    major     u16
    minor     u16
    count     u32      number of sections
    table     count x (name_len u16, name utf-8, kind u8, offset u64, length u64, sha256 32B)
    payloads  concatenated section bodies
    digest    sha256 of everything above

Sections are written in sorted name order, so the same payload always
produces the same bytes. Arrays are stored as (dtype string, shape, raw C-order
bytes); everything else as canonical JSON. Loading checks the trailing digest
and every section hash before decoding anything, so any truncation or
single-bit corruption raises IntegrityError and nothing is returned.
"""
from __future__ import annotations

import hashlib
import io
import json
import os
import struct

import numpy as np

from .errors import IntegrityError, UnsupportedVersionError

__all__ = ["MAGIC", "VERSION", "save_checkpoint", "load_checkpoint", "dumps", "loads",
           "save_model", "load_model"]

MAGIC = b"HLRICKPT"
VERSION = (1, 0)
_ARRAY, _JSON = 1, 2


def _encode_array(a: np.ndarray) -> bytes:
    a = a if a.flags.c_contiguous else a.copy(order="C")   # keeps 0-d arrays 0-d
    dt = a.dtype.newbyteorder("<") if a.dtype.byteorder == ">" else a.dtype
    a = a.astype(dt, copy=False)
    ds = dt.str.encode()
    head = struct.pack("<H", len(ds)) + ds + struct.pack("<B", a.ndim)
    head += struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + a.tobytes(order="C")


def _decode_array(b: bytes) -> np.ndarray:
    (ln,) = struct.unpack_from("<H", b, 0)
    dt = np.dtype(b[2:2 + ln].decode())
    pos = 2 + ln
    (nd,) = struct.unpack_from("<B", b, pos)
    pos += 1
    shape = struct.unpack_from(f"<{nd}Q", b, pos)
    pos += 8 * nd
    count = int(np.prod(shape)) if nd else 1
    if len(b) - pos != count * dt.itemsize:
        raise IntegrityError("array section has the wrong length")
    return np.frombuffer(b, dtype=dt, count=count, offset=pos).reshape(shape).copy()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _encode_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default,
                      allow_nan=True).encode()


def dumps(payload: dict, version=VERSION) -> bytes:
    """Serialise ``{name: ndarray | json-able}`` to checkpoint bytes."""
    names = sorted(payload)
    bodies = []
    for name in names:
        v = payload[name]
        if isinstance(v, np.ndarray):
            bodies.append((_ARRAY, _encode_array(v)))
        else:
            bodies.append((_JSON, _encode_json(v)))
    enc_names = [n.encode() for n in names]
    table_len = sum(2 + len(n) + 1 + 8 + 8 + 32 for n in enc_names)
    offset = len(MAGIC) + 8 + table_len
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<HHI", version[0], version[1], len(names)))
    for n, (kind, body) in zip(enc_names, bodies):
        out.write(struct.pack("<H", len(n)) + n + struct.pack("<BQQ", kind, offset, len(body)))
        out.write(hashlib.sha256(body).digest())
        offset += len(body)
    for _, body in bodies:
        out.write(body)
    data = out.getvalue()
    return data + hashlib.sha256(data).digest()


def loads(data: bytes) -> dict:
    if len(data) < len(MAGIC) + 8 + 32 or data[:len(MAGIC)] != MAGIC:
        raise IntegrityError("not a checkpoint (bad magic or too short)")
    major, minor, count = struct.unpack_from("<HHI", data, len(MAGIC))
    if major != VERSION[0]:
        raise UnsupportedVersionError(f"checkpoint major version {major} is not supported "
                                      f"(this build reads {VERSION[0]}.x)")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise IntegrityError("checkpoint digest mismatch (truncated or corrupted)")
    pos = len(MAGIC) + 8
    entries = []
    try:
        for _ in range(count):
            (ln,) = struct.unpack_from("<H", body, pos)
            pos += 2
            name = body[pos:pos + ln].decode()
            pos += ln
            kind, off, length = struct.unpack_from("<BQQ", body, pos)
            pos += 17
            h = body[pos:pos + 32]
            pos += 32
            entries.append((name, kind, off, length, h))
    except (struct.error, UnicodeDecodeError) as exc:
        raise IntegrityError(f"corrupt section table: {exc}") from None
    out = {}
    for name, kind, off, length, h in entries:
        chunk = body[off:off + length]
        if len(chunk) != length or hashlib.sha256(chunk).digest() != h:
            raise IntegrityError(f"section {name!r} failed its hash check")
        if kind == _ARRAY:
            out[name] = _decode_array(chunk)
        elif kind == _JSON:
            out[name] = json.loads(chunk.decode())
        else:
            raise IntegrityError(f"section {name!r} has unknown kind {kind}")
    return out


def save_checkpoint(path, payload: dict, version=VERSION) -> None:
    data = dumps(payload, version)
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> dict:
    with open(path, "rb") as f:
        return loads(f.read())


# ---------------------------------------------------------------- model helpers

def model_payload(basis, params, optimizer_state: dict | None = None, config: dict | None = None) -> dict:
    from .latent_corrector import CorrectorParams  # noqa: F401  (type reference)

    p = {"basis": np.asarray(basis.columns, dtype=np.complex128)}
    for name, arr in params.numpy_arrays().items():
        p[f"weights/{name}"] = np.asarray(arr, dtype=np.float64)
    p["meta"] = {"latent_dim": params.latent_dim, "enc_layers": params.enc_layers,
                 "dec_layers": params.dec_layers, "w_max": params.w_max, "hidden": params.hidden,
                 "feature_version": params.feature_version,
                 "layer_norms": [float(x) for x in params.layer_norms]}
    for name, arr in (optimizer_state or {}).items():
        p[f"optimizer/{name}"] = np.asarray(arr)
    if config is not None:
        p["config"] = config
    return p


def save_model(path, basis, params, optimizer_state=None, config=None) -> None:
    save_checkpoint(path, model_payload(basis, params, optimizer_state, config))


def load_model(path):
    """Return (basis, params, optimizer_state, config) from a model checkpoint."""
    from .latent_corrector import CorrectorParams, TrunkBasis

    p = load_checkpoint(path)
    if "basis" not in p or "meta" not in p:
        raise IntegrityError(f"{path} is not a model checkpoint")
    m = p["meta"]
    arrays = {k.split("/", 1)[1]: v for k, v in p.items() if k.startswith("weights/")}
    params = CorrectorParams(arrays, m["latent_dim"], m["enc_layers"], m["dec_layers"], m["w_max"],
                             m["hidden"], m["feature_version"], tuple(m["layer_norms"]))
    opt = {k.split("/", 1)[1]: v for k, v in p.items() if k.startswith("optimizer/")}
    return TrunkBasis(p["basis"]), params, opt, p.get("config")
