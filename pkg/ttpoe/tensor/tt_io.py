"""
TT model file format

Binary layout (little-endian):

    offset  size        field
    0       8           magic b"TTMODEL\\0"
    8       4  uint32   format version (1)
    12      4  uint32   d
    16      8*d uint64  shape n_1..n_d
    ..      8*(d+1)     ranks r_0..r_d
    ..      ...         cores 1..d, each r_{k-1}*n_k*r_k float64 in row-major order

Text variant (debugging): a "TTMODEL-TEXT 1" line, then "d", "shape" and
"ranks" lines, then per core a "core k r0 n r1" line followed by its values
in row-major order, one per line, printed with 17 significant digits.
"""
import struct
from pathlib import Path
from typing import List, Union

import numpy as np

from ttpoe.core.exceptions import ModelFormatError
from ttpoe.tensor.tt_core import TTModel

MAGIC = b"TTMODEL\x00"
TEXT_MAGIC = "TTMODEL-TEXT"
FORMAT_VERSION = 1

PathLike = Union[str, Path]


def to_bytes(m: TTModel) -> bytes:
    """Serialize a model to the binary container"""
    header = MAGIC + struct.pack("<II", FORMAT_VERSION, m.d)
    header += struct.pack(f"<{m.d}Q", *m.shape)
    header += struct.pack(f"<{m.d + 1}Q", *m.ranks)
    body = b"".join(np.ascontiguousarray(core, dtype="<f8").tobytes() for core in m.cores)
    return header + body


def from_bytes(data: bytes) -> TTModel:
    """Parse the binary container"""
    if len(data) < 16 or data[:8] != MAGIC:
        raise ModelFormatError("not a TT model file (bad magic)")
    version, d = struct.unpack_from("<II", data, 8)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    offset = 16
    try:
        shape = struct.unpack_from(f"<{d}Q", data, offset)
        offset += 8 * d
        ranks = struct.unpack_from(f"<{d + 1}Q", data, offset)
        offset += 8 * (d + 1)
    except struct.error as e:
        raise ModelFormatError(f"truncated header: {e}") from e

    cores = []
    for k in range(d):
        count = ranks[k] * shape[k] * ranks[k + 1]
        end = offset + 8 * count
        if end > len(data):
            raise ModelFormatError(f"truncated data in core {k}")
        values = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        cores.append(values.astype(np.float64).reshape(ranks[k], shape[k], ranks[k + 1]))
        offset = end
    if offset != len(data):
        raise ModelFormatError(f"{len(data) - offset} trailing bytes after the last core")
    return TTModel(tuple(cores))


def save_model(m: TTModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(m))
    return path


def load_model(path: PathLike) -> TTModel:
    return from_bytes(Path(path).read_bytes())


def save_text(m: TTModel, path: PathLike) -> Path:
    """Write the plain-text variant"""
    lines: List[str] = [
        f"{TEXT_MAGIC} {FORMAT_VERSION}",
        f"d {m.d}",
        "shape " + " ".join(str(n) for n in m.shape),
        "ranks " + " ".join(str(r) for r in m.ranks),
    ]
    for k, core in enumerate(m.cores):
        lines.append(f"core {k} " + " ".join(str(s) for s in core.shape))
        lines.extend(f"{v:.17g}" for v in core.reshape(-1))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_text(path: PathLike) -> TTModel:
    """Read the plain-text variant"""
    lines = Path(path).read_text().split("\n")
    try:
        magic, version = lines[0].split()
        if magic != TEXT_MAGIC or int(version) != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported text header: {lines[0]!r}")
        d = int(lines[1].split()[1])
        pos = 4
        cores = []
        for k in range(d):
            fields = lines[pos].split()
            if fields[:2] != ["core", str(k)]:
                raise ModelFormatError(f"expected header of core {k}, got {lines[pos]!r}")
            r0, n, r1 = (int(v) for v in fields[2:5])
            count = r0 * n * r1
            values = np.array([float(v) for v in lines[pos + 1:pos + 1 + count]])
            if values.size != count:
                raise ModelFormatError(f"truncated data in core {k}")
            cores.append(values.reshape(r0, n, r1))
            pos += 1 + count
    except (IndexError, ValueError) as e:
        raise ModelFormatError(f"malformed text model: {e}") from e
    return TTModel(tuple(cores))
