"""Shared helpers: deterministic seed derivation, hashing, CSV formatting."""

from __future__ import annotations

import hashlib
import json
import math
import numbers


def derive_seed(*parts) -> int:
    """Derive a 63-bit seed from a tuple of primitive values.

    Stable across processes and interpreter runs (unlike built-in ``hash``),
    so every randomized component of a run can be traced back to one base
    seed plus a descriptive tag tuple.
    """
    text = repr(parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def stable_hash(payload) -> str:
    """Short stable hex digest of a JSON-serializable payload."""
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def fmt(x) -> str:
    """Format a number for CSV output with round-trip precision."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, numbers.Integral):
        return str(int(x))
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    if math.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return repr(xf)


def provenance_line(config_hash: str, seed: int) -> str:
    """Leading comment line embedded in every CSV artifact."""
    return f"# config_hash={config_hash} seed={seed}\n"
