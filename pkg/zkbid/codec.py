"""
Canonical binary encoding: big-endian integers and u32-length-prefixed byte fields, always in a fixed order.

Used by transactions, blocks, and the proving-key / verification-key / proof files.
"""
from typing import Iterable, List

from .errors import MalformedEncoding

MAX_FIELD_LEN = 1 << 30


class Writer(object):
    def __init__(self) -> None:
        self._parts: List[bytes] = []

    def u8(self, value: int) -> "Writer":
        return self._int(value, 1)

    def u16(self, value: int) -> "Writer":
        return self._int(value, 2)

    def u32(self, value: int) -> "Writer":
        return self._int(value, 4)

    def u64(self, value: int) -> "Writer":
        return self._int(value, 8)

    def _int(self, value: int, size: int) -> "Writer":
        self._parts.append(value.to_bytes(size, "big"))
        return self

    def raw(self, data: bytes) -> "Writer":
        """Appends fixed-length bytes with no prefix."""
        self._parts.append(bytes(data))
        return self

    def blob(self, data: bytes) -> "Writer":
        """Appends a u32 length followed by the bytes."""
        self.u32(len(data))
        return self.raw(data)

    def blobs(self, items: Iterable[bytes]) -> "Writer":
        items = list(items)
        self.u32(len(items))
        for item in items:
            self.blob(item)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader(object):
    def __init__(self, data: bytes) -> None:
        self._data = bytes(data)
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise MalformedEncoding(f"truncated input: need {n} bytes at offset {self._pos}, have "
                                    f"{len(self._data) - self._pos}")
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self._take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        n = self.u32()
        if n > MAX_FIELD_LEN:
            raise MalformedEncoding(f"field length {n} too large")
        return self._take(n)

    def blobs(self) -> List[bytes]:
        count = self.u32()
        if count > MAX_FIELD_LEN:
            raise MalformedEncoding(f"list length {count} too large")
        return [self.blob() for _ in range(count)]

    def expect(self, magic: bytes) -> None:
        found = self._take(len(magic))
        if found != magic:
            raise MalformedEncoding(f"bad magic: expected {magic!r}, found {found!r}")

    def finish(self) -> None:
        """Raises MalformedEncoding if there are trailing bytes."""
        if self._pos != len(self._data):
            raise MalformedEncoding(f"{len(self._data) - self._pos} trailing bytes")
