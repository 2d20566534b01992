"""Learned-parameter persistence.

A self-describing plain-text format: a version line, a ``kind`` header with
the dimensions the kind needs, then one whitespace-separated row per
parameter group.  Floats are written with ``repr`` so a save/load round
trip is bit-exact.
"""

import numpy as np

from ..codec import BoxScheme, FeatureScales, box_scheme
from ..actor_critic import AcWeights
from ..tabular import QTable
from ..vfa import VfaWeights

MAGIC = "cartpole-lab-params"
VERSION = "v1"


class ParamsError(Exception):
    """Base class for parameter-file problems."""


class VersionMismatchError(ParamsError):
    pass


class DimensionMismatchError(ParamsError):
    pass


class MalformedParamsError(ParamsError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def save_params(path, params) -> None:
    """Write a QTable, AcWeights, or VfaWeights to ``path``."""
    lines = [f"{MAGIC} {VERSION}"]
    if isinstance(params, QTable):
        n = params.values.shape[0]
        lines += [f"kind qtable", f"scheme {params.scheme}", f"box_count {n}"]
        for i in range(n):
            lines.append(f"{i} {_fmt(params.values[i, 0])} {_fmt(params.values[i, 1])}")
    elif isinstance(params, AcWeights):
        n = params.actor_w.shape[0]
        lines += [f"kind actor_critic", f"scheme {params.scheme}", f"box_count {n}"]
        for i in range(n):
            lines.append(" ".join([str(i), _fmt(params.actor_w[i]),
                                   _fmt(params.critic_w[i]),
                                   _fmt(params.actor_trace[i]),
                                   _fmt(params.critic_trace[i])]))
    elif isinstance(params, VfaWeights):
        lines += ["kind vfa", "feature_dim 4", "action_count 2",
                  f"theta_dot_scale {_fmt(params.scales.theta_dot_scale)}",
                  f"x_dot_scale {_fmt(params.scales.x_dot_scale)}"]
        for a in range(2):
            lines.append(" ".join([str(a)] + [_fmt(v) for v in params.per_action_w[a]]))
    else:
        raise TypeError(f"cannot serialize {type(params).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_header(lines, keys):
    out = {}
    for key in keys:
        if not lines:
            raise MalformedParamsError(f"missing header field {key!r}")
        parts = lines.pop(0).split()
        if len(parts) != 2 or parts[0] != key:
            raise MalformedParamsError(f"expected header field {key!r}, got {parts!r}")
        out[key] = parts[1]
    return out


def load_params(path, expected_scheme: BoxScheme | None = None):
    """Load a parameter file; returns QTable, AcWeights, or VfaWeights.

    ``expected_scheme`` (when given) must match the file's scheme and box
    count for the tabular kinds.
    """
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise MalformedParamsError("empty parameter file")
    head = lines.pop(0).split()
    if len(head) != 2 or head[0] != MAGIC:
        raise MalformedParamsError("not a cartpole-lab parameter file")
    if head[1] != VERSION:
        raise VersionMismatchError(f"unsupported format version {head[1]!r}")
    kind = _read_header(lines, ["kind"])["kind"]
    if kind in ("qtable", "actor_critic"):
        hdr = _read_header(lines, ["scheme", "box_count"])
        scheme_name = hdr["scheme"]
        try:
            count = int(hdr["box_count"])
        except ValueError:
            raise MalformedParamsError(f"bad box_count {hdr['box_count']!r}") from None
        if box_scheme(scheme_name).box_count != count:
            raise DimensionMismatchError(
                f"scheme {scheme_name} has {box_scheme(scheme_name).box_count} boxes, "
                f"file declares {count}")
        if expected_scheme is not None and (expected_scheme.name != scheme_name
                                            or expected_scheme.box_count != count):
            raise DimensionMismatchError(
                f"file is for scheme {scheme_name} ({count} boxes), "
                f"run is configured for {expected_scheme.name} "
                f"({expected_scheme.box_count})")
        ncols = 2 if kind == "qtable" else 4
        data = _read_rows(lines, count, ncols)
        if kind == "qtable":
            return QTable(data, scheme_name)
        return AcWeights(data[:, 0].copy(), data[:, 1].copy(),
                         data[:, 2].copy(), data[:, 3].copy(), scheme_name)
    if kind == "vfa":
        hdr = _read_header(lines, ["feature_dim", "action_count",
                                   "theta_dot_scale", "x_dot_scale"])
        if hdr["feature_dim"] != "4" or hdr["action_count"] != "2":
            raise DimensionMismatchError(
                f"expected 4 features x 2 actions, file declares "
                f"{hdr['feature_dim']} x {hdr['action_count']}")
        try:
            scales = FeatureScales(float(hdr["theta_dot_scale"]), float(hdr["x_dot_scale"]))
        except ValueError:
            raise MalformedParamsError("bad feature scale value") from None
        data = _read_rows(lines, 2, 4)
        return VfaWeights(data, scales)
    raise MalformedParamsError(f"unknown parameter kind {kind!r}")


def _read_rows(lines, n_rows, n_cols) -> np.ndarray:
    if len(lines) != n_rows:
        raise MalformedParamsError(f"expected {n_rows} rows, found {len(lines)}")
    data = np.empty((n_rows, n_cols))
    for i, line in enumerate(lines):
        parts = line.split()
        if len(parts) != n_cols + 1 or parts[0] != str(i):
            raise MalformedParamsError(f"malformed row {i}: {line!r}")
        try:
            data[i] = [float(v) for v in parts[1:]]
        except ValueError:
            raise MalformedParamsError(f"non-numeric value in row {i}") from None
    return data
