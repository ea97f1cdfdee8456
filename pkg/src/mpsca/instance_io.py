"""Instance files: one JSON document per problem instance.

Layout::

    {
      "format_version": 1,
      "n": 30, "m": 50, "power": 10.0,
      "noise_vars": [1.0, ...],
      "channels": [[[re, im], ...N pairs], ...M users],
      "generator": {...}            # free-form provenance, optional
    }

Floats are written with ``repr`` precision so a load/save round trip is
bit-exact and reruns produce byte-identical files.
"""

import json
from pathlib import Path

import numpy as np

from mpsca.problem import ProblemInstance

FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    """Malformed instance file; message carries the path and location."""


def instance_to_dict(inst, generator=None):
    return {
        "format_version": FORMAT_VERSION,
        "n": inst.n_antennas,
        "m": inst.n_users,
        "power": inst.power,
        "noise_vars": [float(v) for v in inst.noise_vars],
        "channels": [[[float(z.real), float(z.imag)] for z in row] for row in inst.channels],
        "generator": generator or {},
    }


def dumps_instance(inst, generator=None):
    return json.dumps(instance_to_dict(inst, generator), indent=1, sort_keys=True) + "\n"


def save_instance(path, inst, generator=None):
    path = Path(path)
    try:
        path.write_text(dumps_instance(inst, generator))
    except OSError as exc:
        raise OSError(f"cannot write instance file {path}: {exc.strerror}") from exc
    return path


def instance_from_dict(doc, where="<instance>"):
    def bad(msg):
        return InstanceFormatError(f"{where}: {msg}")

    if not isinstance(doc, dict):
        raise bad("top level must be an object")
    missing = [k for k in ("format_version", "n", "m", "power", "noise_vars", "channels") if k not in doc]
    if missing:
        raise bad(f"missing field(s) {', '.join(missing)}")
    if doc["format_version"] != FORMAT_VERSION:
        raise bad(f"unsupported format_version {doc['format_version']!r} (expected {FORMAT_VERSION})")
    n, m = doc["n"], doc["m"]
    try:
        h = np.asarray(doc["channels"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise bad(f"channels are not a numeric array: {exc}") from None
    if h.shape != (m, n, 2):
        raise bad(f"channels have shape {h.shape}, expected ({m}, {n}, 2)")
    noise = np.asarray(doc["noise_vars"], dtype=float)
    if noise.shape != (m,):
        raise bad(f"noise_vars has {noise.size} entries, expected {m}")
    try:
        return ProblemInstance(h[..., 0] + 1j * h[..., 1], noise, float(doc["power"]))
    except ValueError as exc:
        raise bad(str(exc)) from None


def load_instance(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read instance file {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno} (offset {exc.pos}): {exc.msg}") from None
    return instance_from_dict(doc, str(path))


def load_generator(path):
    return json.loads(Path(path).read_text()).get("generator", {})
