"""Fully connected 1-30-30-30-5 tanh network.

Two evaluation paths are provided:

* :func:`forward` records the network on a scalar :class:`~svihr_pinn.autodiff.Tape`
  (reference path, used for verification);
* :func:`batch_forward` / :func:`batch_backward` evaluate many time points
  at once with numpy, propagating the time derivative alongside the
  activations and back-propagating adjoints of both (training path).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, tanh
from .errors import ParameterCountError

__all__ = [
    "WIDTHS",
    "NetworkParams",
    "NetOutput",
    "BoundParams",
    "n_params",
    "init",
    "bind",
    "forward",
    "flatten",
    "unflatten",
    "batch_forward",
    "batch_backward",
    "save_snapshot",
    "load_snapshot",
]

WIDTHS = (1, 30, 30, 30, 5)


def n_params(widths=WIDTHS):
    return sum(i * o + o for i, o in zip(widths[:-1], widths[1:]))


@dataclass(frozen=True)
class NetworkParams:
    """Per-layer ``(weight[out, in], bias[out])`` pairs."""

    layers: tuple
    widths: tuple = WIDTHS

    def __post_init__(self):
        if len(self.layers) != len(self.widths) - 1:
            raise ParameterCountError("parameter count mismatch: wrong number of layers")
        for (W, b), i, o in zip(self.layers, self.widths[:-1], self.widths[1:]):
            if W.shape != (o, i) or b.shape != (o,):
                raise ParameterCountError(
                    f"parameter count mismatch: layer shapes {W.shape}/{b.shape}, expected ({o}, {i})/({o},)"
                )
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError("network parameters must be finite")

    @property
    def size(self):
        return n_params(self.widths)


@dataclass
class NetOutput:
    values: list
    time_derivatives: list


@dataclass
class BoundParams:
    """Network parameters recorded as leaves of one tape."""

    tape: Tape
    layers: list
    leaves: list


def init(seed, widths=WIDTHS):
    """Uniform ``(-a, a)`` weights with ``a = sqrt(6 / (fan_in + fan_out))``, zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for i, o in zip(widths[:-1], widths[1:]):
        a = np.sqrt(6.0 / (i + o))
        layers.append((rng.uniform(-a, a, size=(o, i)), np.zeros(o)))
    return NetworkParams(tuple(layers), tuple(widths))


def zeros(widths=WIDTHS):
    return unflatten(np.zeros(n_params(widths)), widths)


def flatten(params):
    """Layer-major vector: row-major weights, then biases."""
    return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in params.layers])


def unflatten(vector, widths=WIDTHS):
    vector = np.asarray(vector, dtype=float)
    expected = n_params(widths)
    if vector.ndim != 1 or vector.size != expected:
        raise ParameterCountError(f"parameter count mismatch: got {vector.size}, expected {expected}")
    layers = []
    pos = 0
    for i, o in zip(widths[:-1], widths[1:]):
        W = vector[pos:pos + i * o].reshape(o, i).copy()
        pos += i * o
        b = vector[pos:pos + o].copy()
        pos += o
        layers.append((W, b))
    return NetworkParams(tuple(layers), tuple(widths))


def bind(params, tape):
    """Record every parameter as a leaf (tangent seed 0) in flatten order."""
    layers, leaves = [], []
    for W, b in params.layers:
        Wv = [[tape.leaf(w, 0.0) for w in row] for row in W]
        bv = [tape.leaf(x, 0.0) for x in b]
        for row in Wv:
            leaves.extend(row)
        leaves.extend(bv)
        layers.append((Wv, bv))
    return BoundParams(tape, layers, leaves)


def forward(params, t, tape, time_leaf=None):
    """Evaluate the network at normalized time ``t`` on ``tape``.

    ``params`` is either :class:`NetworkParams` (bound on the fly) or the
    result of :func:`bind`. The time input is a leaf with tangent seed 1, so
    the tangents of the outputs are the time derivatives.
    """
    if isinstance(params, NetworkParams):
        params = bind(params, tape)
    elif params.tape is not tape:
        raise ValueError("bound parameters belong to a different tape")
    x = [time_leaf if time_leaf is not None else tape.leaf(t, 1.0)]
    last = len(params.layers) - 1
    for k, (W, b) in enumerate(params.layers):
        out = []
        for row, bias in zip(W, b):
            acc = bias
            for w, xi in zip(row, x):
                acc = acc + w * xi
            out.append(tanh(acc) if k < last else acc)
        x = out
    return NetOutput(values=x, time_derivatives=[v.tangent for v in x])


# -- vectorized path -----------------------------------------------------------


def batch_forward(params, t):
    """Values and time derivatives at times ``t``.

    Returns ``(y, dy, cache)`` with ``y`` and ``dy`` of shape ``(n, 5)``;
    ``cache`` feeds :func:`batch_backward`.
    """
    a = np.asarray(t, dtype=float).reshape(-1, 1)
    da = np.ones_like(a)
    inputs, dzs = [], []
    last = len(params.layers) - 1
    for k, (W, b) in enumerate(params.layers):
        inputs.append((a, da))
        z = a @ W.T + b
        dz = da @ W.T
        if k < last:
            dzs.append(dz)
            a = np.tanh(z)
            da = (1.0 - a * a) * dz
        else:
            a, da = z, dz
    return a, da, (inputs, dzs)


def batch_backward(params, cache, g_y, g_dy):
    """Flat gradient given adjoints of the outputs and of their time derivatives."""
    inputs, dzs = cache
    grads = []
    g_z, g_dz = g_y, g_dy
    for k in range(len(params.layers) - 1, -1, -1):
        W, _ = params.layers[k]
        a_in, da_in = inputs[k]
        grads.append((g_z.T @ a_in + g_dz.T @ da_in, g_z.sum(axis=0)))
        if k == 0:
            break
        g_a = g_z @ W
        g_da = g_dz @ W
        # a_in = tanh(z), da_in = (1 - a_in^2) * dz
        s = 1.0 - a_in * a_in
        g_dz = g_da * s
        g_z = (g_a - 2.0 * a_in * dzs[k - 1] * g_da) * s
    grads.reverse()
    return np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])


# -- snapshots -----------------------------------------------------------------


def save_snapshot(params, path, seed=None, alpha=None):
    """CSV snapshot: ``#`` header lines, then ``index,value`` rows."""
    flat = flatten(params)
    with open(path, "w", newline="") as fh:
        fh.write("# widths=" + ",".join(str(w) for w in params.widths) + "\n")
        fh.write(f"# seed={'' if seed is None else int(seed)}\n")
        fh.write(f"# alpha={'' if alpha is None else '%.17g' % alpha}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("index", "value"))
        for k, v in enumerate(flat):
            w.writerow((k, "%.17g" % v))


def load_snapshot(path, widths=WIDTHS):
    """Read a snapshot; returns ``(params, header dict)``.

    Raises :class:`ParameterCountError` if the stored widths or the number
    of values do not match ``widths``.
    """
    header = {}
    values = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                header[key.strip()] = val.strip()
                continue
            if line.startswith("index"):
                continue
            _, val = line.split(",")
            values.append(float(val))
    stored = tuple(int(x) for x in header.get("widths", ",".join(map(str, widths))).split(","))
    if stored != tuple(widths):
        raise ParameterCountError(f"parameter count mismatch: snapshot widths {stored}, expected {tuple(widths)}")
    meta = {
        "widths": stored,
        "seed": int(header["seed"]) if header.get("seed") else None,
        "alpha": float(header["alpha"]) if header.get("alpha") else None,
    }
    return unflatten(np.array(values), widths), meta
