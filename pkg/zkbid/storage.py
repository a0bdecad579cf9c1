"""
Local file storage used by the wallet and the persisted chain.

Whole-file writes are atomic: data goes to a temporary file in the same directory, is fsync'ed, and is then renamed
over the target.
"""
import json
import os
from pathlib import Path
from tempfile import NamedTemporaryFile
from typing import Any, BinaryIO

from .errors import MalformedEncoding


def put(path: Path, data: bytes) -> None:
    """
    Atomically replaces the contents of `path`.
    :param path: the file to write; its directory must exist.
    :param data: the new contents.
    """
    if not isinstance(data, bytes):
        raise TypeError(f"expected bytes, got {type(data).__name__}")
    path = Path(path)
    with NamedTemporaryFile("wb", dir=path.parent, prefix=f".{path.name}.", delete=False) as f:
        tmp_path = Path(f.name)
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    tmp_path.replace(path)


def get(path: Path) -> bytes:
    """Raises KeyError if `path` does not exist."""
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise KeyError(f"'{path}' not found")


def put_json(path: Path, obj: Any) -> None:
    put(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def get_json(path: Path) -> Any:
    try:
        return json.loads(get(path))
    except json.JSONDecodeError as e:
        raise MalformedEncoding(f"{path}: {e}")


def append(f: BinaryIO, data: bytes) -> None:
    """Appends to an open file and forces the bytes to disk."""
    f.write(data)
    f.flush()
    os.fsync(f.fileno())
