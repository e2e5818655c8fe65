"""Channel JSON ingestion and output.

Schema::

    {"d": 2, "rep": "kraus", "data": [K_1, K_2, ...]}
    {"d": 2, "rep": "choi" | "liouville", "data": M}
    {"rep": "named", "name": "amplitude_damping", "params": {"gamma": 0.1}}

Matrices are lists of rows; each entry is a real number or a ``[re, im]``
pair.  The Choi matrix uses the ``Tr J = 1`` normalisation with the output
system first.  Named channels and their parameters:

    amplitude_damping  gamma
    depolarizing       q, d (default 2)
    pauli              probs: list of 4^n numbers or {"XZ": p, ...}
    unitary            matrix: d x d, or d and theta for diag(e^{i theta}, 1, ..., 1)

Inputs that are not CPTP are rejected unless ``allow_nonphysical`` is set.
"""

import json

import numpy as np

from . import channels as chn
from .validation import DimensionError, PreconditionError


def _to_complex(obj, ndim, name):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"{name}: entries must be numbers or [re, im] pairs") from exc
    if arr.ndim == ndim:
        return arr.astype(complex)
    if arr.ndim == ndim + 1 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    raise DimensionError(f"{name}: expected a {ndim}-d array of numbers or [re, im] pairs, got shape {arr.shape}")


def _named(name, params):
    params = dict(params or {})
    if name == "amplitude_damping":
        return chn.amplitude_damping(float(params["gamma"]))
    if name == "depolarizing":
        return chn.depolarizing(float(params["q"]), int(params.get("d", 2)))
    if name == "pauli":
        probs = params["probs"]
        return chn.pauli_channel(probs if isinstance(probs, dict) else np.asarray(probs, dtype=float))
    if name == "unitary":
        if "matrix" in params:
            return chn.unitary_channel(_to_complex(params["matrix"], 2, "unitary matrix"))
        return chn.unitary_channel(chn.phase_unitary(int(params.get("d", 2)), float(params["theta"])))
    raise PreconditionError(f"unknown named channel {name!r}")


def channel_from_dict(obj, allow_nonphysical=False):
    """Build a :class:`Channel` from the JSON schema above."""
    if not isinstance(obj, dict) or "rep" not in obj:
        raise PreconditionError("channel JSON must be an object with a 'rep' field")
    rep = obj["rep"]
    try:
        if rep == "named":
            ch = _named(obj.get("name"), obj.get("params"))
        elif rep == "kraus":
            ch = chn.Channel(_to_complex(obj["data"], 3, "kraus"), "kraus")
        elif rep in ("choi", "liouville"):
            ch = chn.Channel(_to_complex(obj["data"], 2, rep), rep)
        else:
            raise PreconditionError(f"unknown rep {rep!r}; expected kraus, choi, liouville or named")
    except KeyError as exc:
        raise PreconditionError(f"missing field {exc.args[0]!r}") from exc
    if "d" in obj and int(obj["d"]) != ch.d:
        raise DimensionError(f"declared d = {obj['d']} but the data has d = {ch.d}")
    if not allow_nonphysical:
        chn.require_cptp(ch)
    return ch


def load_channel(path, allow_nonphysical=False):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"{path}: invalid JSON ({exc})") from exc
    return channel_from_dict(obj, allow_nonphysical)


def matrix_to_pairs(M):
    M = np.asarray(M, dtype=complex)
    return np.stack([M.real, M.imag], axis=-1).tolist()


def channel_to_dict(ch, rep="choi"):
    if rep == "kraus":
        data = [matrix_to_pairs(K) for K in ch.kraus]
    else:
        data = matrix_to_pairs(getattr(ch, rep))
    return {"d": ch.d, "rep": rep, "data": data}
