"""Key file I/O.

Single-key files are ``port=bit`` lines with ``#`` comments; the line
order fixes bit order. Key-list files (the locker's private record of
every unlocking key) store one bitstring per line against a shared port
header, since all keys share the same ports.
"""
from __future__ import annotations

from .locking import Key


class KeyFormatError(ValueError):
    pass


def format_key(key: Key) -> str:
    lines = [f"{p}={b}" for p, b in zip(key.port_names, key.bits)]
    return "\n".join(lines) + "\n"


def parse_key(text: str, filename: str = "<string>") -> Key:
    ports: list[str] = []
    bits: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise KeyFormatError(f"{filename}:{lineno}: expected port=bit, got {line!r}")
        port, _, val = line.partition("=")
        port = port.strip()
        val = val.strip()
        if val not in ("0", "1"):
            raise KeyFormatError(f"{filename}:{lineno}: bit for {port!r} must be 0 or 1, got {val!r}")
        if port in ports:
            raise KeyFormatError(f"{filename}:{lineno}: duplicate port {port!r}")
        ports.append(port)
        bits.append(int(val))
    if not ports:
        raise KeyFormatError(f"{filename}: no key bits found")
    return Key(bits=tuple(bits), port_names=tuple(ports))


def write_key_file(key: Key, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_key(key))


def read_key_file(path) -> Key:
    with open(path) as fh:
        return parse_key(fh.read(), filename=str(path))


def format_key_list(keys: tuple[Key, ...] | list[Key]) -> str:
    if not keys:
        raise KeyFormatError("empty key list")
    ports = keys[0].port_names
    for k in keys:
        if k.port_names != ports:
            raise KeyFormatError("keys in a list must share port names")
    lines = ["# ports: " + ",".join(ports)]
    lines.extend("".join(str(b) for b in k.bits) for k in keys)
    return "\n".join(lines) + "\n"


def parse_key_list(text: str, filename: str = "<string>") -> tuple[Key, ...]:
    ports: tuple[str, ...] | None = None
    keys: list[Key] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("# ports:"):
            ports = tuple(p.strip() for p in stripped[len("# ports:"):].split(",") if p.strip())
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ports is None:
            raise KeyFormatError(f"{filename}:{lineno}: bitstring before '# ports:' header")
        if len(line) != len(ports) or any(ch not in "01" for ch in line):
            raise KeyFormatError(f"{filename}:{lineno}: expected {len(ports)}-bit string, got {line!r}")
        keys.append(Key(bits=tuple(int(ch) for ch in line), port_names=ports))
    if not keys:
        raise KeyFormatError(f"{filename}: no keys found")
    return tuple(keys)


def write_key_list_file(keys, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_key_list(keys))


def read_key_list_file(path) -> tuple[Key, ...]:
    with open(path) as fh:
        return parse_key_list(fh.read(), filename=str(path))
