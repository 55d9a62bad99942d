"""JSON network documents and atomic file output.

A network document looks like::

    {"dimension": 2,
     "nodes": [{"id": 1, "range": 2.0, "anchor": true, "coords": [0.0, 0.0]}, ...],
     "edges": [{"i": 1, "j": 2, "distance": 1.0}, ...]}

``coords`` is optional for non-anchors. Distances are stored explicitly so
a file can carry measurements without any unknown positions.
"""

import json
import math
import os
import tempfile

import numpy as np

from .network import SensorNetwork

__all__ = [
    "NetworkFormatError",
    "network_to_document",
    "document_to_network",
    "read_network",
    "write_network",
    "dumps_network",
    "atomic_write_text",
]

# relative tolerance for stored vs regenerated edge distances
EDGE_RTOL = 1e-9


class NetworkFormatError(ValueError):
    """Malformed network document; the message names the offending field."""


def network_to_document(net):
    nodes = []
    for i in net.ids:
        rec = {"id": int(i), "range": float(net.ranges[i]), "anchor": i in net.anchors}
        if i in net.coords:
            rec["coords"] = [float(v) for v in net.coords[i]]
        nodes.append(rec)
    edges = [{"i": int(i), "j": int(j), "distance": float(d)}
             for (i, j), d in sorted(net.edges.items())]
    return {"dimension": int(net.dimension), "nodes": nodes, "edges": edges}


def dumps_network(net):
    return json.dumps(network_to_document(net), indent=1) + "\n"


def _field(rec, key, where, kind):
    if not isinstance(rec, dict):
        raise NetworkFormatError(f"{where}: expected an object")
    if key not in rec:
        raise NetworkFormatError(f"{where}: missing field '{key}'")
    v = rec[key]
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise NetworkFormatError(f"{where}.{key}: expected an integer, got {v!r}")
    elif kind == "num":
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise NetworkFormatError(f"{where}.{key}: expected a finite number, got {v!r}")
        v = float(v)
    elif kind == "bool":
        if not isinstance(v, bool):
            raise NetworkFormatError(f"{where}.{key}: expected true/false, got {v!r}")
    elif kind == "list":
        if not isinstance(v, list):
            raise NetworkFormatError(f"{where}.{key}: expected a list")
    return v


def document_to_network(doc, check_edges=True):
    """Validate a parsed document and build the network.

    When every node has coordinates and ``check_edges`` is set, the edge list
    is regenerated from the range rule and must match the stored one.
    """
    n = _field(doc, "dimension", "document", "int")
    if n < 1:
        raise NetworkFormatError("document.dimension: must be positive")
    nodes = _field(doc, "nodes", "document", "list")
    edges = _field(doc, "edges", "document", "list")
    ranges, coords, anchors = {}, {}, set()
    for k, rec in enumerate(nodes):
        where = f"nodes[{k}]"
        i = _field(rec, "id", where, "int")
        if i < 1:
            raise NetworkFormatError(f"{where}.id: must be a positive integer")
        if i in ranges:
            raise NetworkFormatError(f"{where}.id: duplicate node id {i}")
        r = _field(rec, "range", where, "num")
        if r <= 0:
            raise NetworkFormatError(f"{where}.range: must be positive")
        ranges[i] = r
        if _field(rec, "anchor", where, "bool"):
            anchors.add(i)
        if rec.get("coords") is not None:
            x = _field(rec, "coords", where, "list")
            if len(x) != n or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in x
            ):
                raise NetworkFormatError(f"{where}.coords: expected {n} finite numbers")
            coords[i] = np.array(x, dtype=float)
        elif i in anchors:
            raise NetworkFormatError(f"{where}: anchor {i} has no coords")
    emap = {}
    for k, rec in enumerate(edges):
        where = f"edges[{k}]"
        i = _field(rec, "i", where, "int")
        j = _field(rec, "j", where, "int")
        d = _field(rec, "distance", where, "num")
        if not i < j:
            raise NetworkFormatError(f"{where}: need i < j, got ({i}, {j})")
        if i not in ranges or j not in ranges:
            raise NetworkFormatError(f"{where}: references unknown node id")
        if (i, j) in emap:
            raise NetworkFormatError(f"{where}: duplicate pair ({i}, {j})")
        if d < 0:
            raise NetworkFormatError(f"{where}.distance: must be non-negative")
        emap[(i, j)] = d
    ids = tuple(sorted(ranges))
    net = SensorNetwork(n, ids, ranges, frozenset(anchors), emap, coords)
    if check_edges and ids and len(coords) == len(ids):
        _check_edges(net)
    return net


def _check_edges(net):
    ids = net.ids
    X = np.array([net.coords[i] for i in ids])
    r = np.array([net.ranges[i] for i in ids])
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    ii, jj = np.nonzero(np.triu(dist <= np.minimum(r[:, None], r[None, :]), k=1))
    expected = {(ids[a], ids[b]): dist[a, b] for a, b in zip(ii, jj)}
    extra = sorted(set(net.edges) - set(expected))
    missing = sorted(set(expected) - set(net.edges))
    if extra or missing:
        raise NetworkFormatError(
            f"edges: stored list disagrees with coords and ranges "
            f"(unexpected {extra[:3]}, missing {missing[:3]})"
        )
    for key, d in net.edges.items():
        if abs(d - expected[key]) > EDGE_RTOL * max(1.0, expected[key]):
            raise NetworkFormatError(
                f"edges: distance of {key} is {d!r}, coords give {expected[key]!r}"
            )


def read_network(path, check_edges=True):
    """Load a network document; raises :class:`NetworkFormatError` on bad input."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise NetworkFormatError(f"{path}: {exc.strerror}") from None
    try:
        return document_to_network(doc, check_edges)
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"{path}: {exc}") from None
    except ValueError as exc:  # invariants enforced by SensorNetwork
        raise NetworkFormatError(f"{path}: {exc}") from None


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_network(net, path):
    atomic_write_text(path, dumps_network(net))
