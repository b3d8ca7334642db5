"""Line-oriented ``key = value`` configuration files.

One assignment per line; ``#`` starts a comment; blank lines are ignored.
Keys are lowercase identifiers.  Duplicate keys are an error so a typo
cannot silently shadow an earlier setting.
"""

from __future__ import annotations

__all__ = ["ConfigError", "read_kv_file", "parse_kv_pairs"]


class ConfigError(ValueError):
    """Malformed, unknown, or inconsistent configuration input."""


def parse_kv_pairs(lines, source="<config>"):
    """Parse an iterable of text lines into an ordered ``{key: value}`` dict."""
    out = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = text.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value in {line.strip()!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_kv_file(path):
    """Read a ``key = value`` file; see :func:`parse_kv_pairs`."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_pairs(fh, source=str(path))
