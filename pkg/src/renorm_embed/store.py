"""Content-addressed artifact store: one file per key in a plain directory.

Each entry file is named ``<key>.bin`` and starts with a one-line header
carrying the SHA-256 of the payload, so corruption is detected on read.
Writes go to a temporary file in the same directory, are fsynced and then
renamed into place, so readers never see a partial entry.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractError, IntegrityError

ENV_VAR = "RENORM_EMBED_STORE"
HEADER = "renorm-embed store v1"
INDEX = "index.txt"
_KEY_RE = re.compile(r"^[0-9a-f]{64}$")


def cache_key(kind: str, ps=None, spec=None, caps=None, schema: str = "v1", **extra) -> str:
    """Digest of the inputs that determine an artifact; any change gives a new key."""
    doc = {
        "kind": kind,
        "params": ps.as_dict() if ps is not None else None,
        "spec": spec.as_dict() if spec is not None else None,
        "caps": caps.as_dict() if hasattr(caps, "as_dict") else caps,
        "schema": schema,
        "extra": extra,
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Receipt:
    key: str
    path: str
    size: int
    sha256: str


def default_root() -> Path:
    root = os.environ.get(ENV_VAR)
    if not root:
        raise ContractError(f"no store root: pass --store or set {ENV_VAR}")
    return Path(root)


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Store:
    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_root()
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        if not _KEY_RE.match(key):
            raise ContractError(f"store keys are 64 lowercase hex digits, got {key!r}")
        return self.root / f"{key}.bin"

    def put(self, key: str, data: bytes, label: str = "") -> Receipt:
        path = self._path(key)
        digest = hashlib.sha256(data).hexdigest()
        head = f"{HEADER} sha256={digest} size={len(data)}\n".encode("ascii")
        _atomic_write(path, head + data)
        self._update_index(key, len(data), label)
        return Receipt(key, str(path), len(data), digest)

    def get(self, key: str) -> bytes | None:
        path = self._path(key)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return None
        head, sep, data = raw.partition(b"\n")
        m = re.fullmatch(rf"{HEADER} sha256=([0-9a-f]{{64}}) size=(\d+)", head.decode("ascii", "replace"))
        if not sep or m is None:
            raise IntegrityError(key, "bad header")
        if len(data) != int(m.group(2)) or hashlib.sha256(data).hexdigest() != m.group(1):
            raise IntegrityError(key, "checksum mismatch")
        return data

    def __contains__(self, key: str) -> bool:
        return self._path(key).exists()

    def list(self) -> list:
        """Keys of all complete entries, sorted."""
        return sorted(p.stem for p in self.root.glob("*.bin") if _KEY_RE.match(p.stem))

    def index(self) -> dict:
        """The human-readable index as ``{key: (size, label)}``."""
        out = {}
        path = self.root / INDEX
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                parts = line.split("\t")
                if len(parts) == 3:
                    out[parts[0]] = (int(parts[1]), parts[2])
        return out

    def _update_index(self, key, size, label):
        idx = self.index()
        idx[key] = (size, label.replace("\t", " ").replace("\n", " "))
        text = "".join(f"{k}\t{s}\t{lab}\n" for k, (s, lab) in sorted(idx.items()))
        _atomic_write(self.root / INDEX, text.encode("utf-8"))
