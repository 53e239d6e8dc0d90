"""Newick and JSON serialization of ancestral processes."""

import csv
import io
import json
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from numpy.typing import NDArray
from treeswift import read_tree_newick

from genea.core.params import BranchingParams
from genea.defaults import SPINE_LABEL
from genea.exceptions import ParameterError
from genea.tree.ancestral import AncestralProcess

_NEWICK_RESERVED = frozenset(" \t\n();:,[]'")


def default_leaf_labels(ap: AncestralProcess) -> list[str]:
    """Spine first, then L1..Ln in position order."""
    return [SPINE_LABEL, *(f"L{k}" for k in range(1, len(ap) + 1))]


def _check_labels(ap: AncestralProcess, labels: Sequence[str]) -> list[str]:
    labels = list(labels)
    if len(labels) != len(ap) + 1:
        raise ParameterError(
            f"expected {len(ap) + 1} leaf labels (spine first), got {len(labels)}"
        )
    if len(set(labels)) != len(labels):
        raise ParameterError("leaf labels must be distinct")
    for label in labels:
        if not label or _NEWICK_RESERVED.intersection(label):
            raise ParameterError(f"leaf label {label!r} is not a plain Newick name")
    return labels


def _cartesian_tree(gaps: NDArray[np.float64]) -> tuple[list[int], list[int], int]:
    """Max-Cartesian tree over the gaps; on ties the leftmost gap is the ancestor."""
    left = [-1] * len(gaps)
    right = [-1] * len(gaps)
    stack: list[int] = []
    for i, value in enumerate(gaps):
        last = -1
        while stack and gaps[stack[-1]] < value:
            last = stack.pop()
        left[i] = last
        if stack:
            right[stack[-1]] = i
        stack.append(i)
    return left, right, stack[0]


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def to_newick(ap: AncestralProcess, leaf_labels: Sequence[str] | None = None) -> str:
    """Rooted binary Newick string of the genealogy.

    The root sits on the spine at depth zeta_max; each interval of leaves is
    split at its deepest gap, the leftmost one on ties.
    """
    if not len(ap):
        raise ParameterError("cannot export an ancestral process without atoms")
    labels = _check_labels(
        ap, default_leaf_labels(ap) if leaf_labels is None else leaf_labels
    )
    k = ap.spine_index
    leaves = [*labels[1 : k + 1], labels[0], *labels[k + 1 :]]
    # consecutive leaves are separated by exactly one atom of J, the one away
    # from the spine, so the merge heights are the depths in position order
    gaps = ap.depths
    left, right, root = _cartesian_tree(gaps)

    out: list[str] = []
    # explicit stack: chains of nested merges can be as deep as the sample
    stack: list[tuple[str, Any, float | None]] = [("node", root, None)]
    while stack:
        kind, value, parent = stack.pop()
        if kind == "text":
            out.append(value)
        elif kind == "leaf":
            out.append(f"{leaves[value]}:{_fmt(parent)}")
        else:
            height = float(gaps[value])
            first = (
                ("node", left[value], height)
                if left[value] >= 0
                else ("leaf", value, height)
            )
            second = (
                ("node", right[value], height)
                if right[value] >= 0
                else ("leaf", value + 1, height)
            )
            close = ")" if parent is None else f"):{_fmt(parent - height)}"
            stack.append(("text", close, None))
            stack.append(second)
            stack.append(("text", ",", None))
            stack.append(first)
            stack.append(("text", "(", None))
    return "".join(out) + ";"


def newick_leaf_distances(newick: str) -> dict[str, dict[str, float]]:
    """Label-keyed path lengths between the leaves of a Newick string."""
    tree = read_tree_newick(newick)
    matrix = tree.distance_matrix(leaf_labels=True)
    for label, row in matrix.items():
        row[label] = 0.0
    return matrix


def _number(value: float) -> float | None:
    return None if math.isinf(value) else value


def process_to_dict(ap: AncestralProcess, params: BranchingParams) -> dict[str, Any]:
    return {
        "beta": params.beta,
        "theta": params.theta,
        "e_g": _number(ap.e_g),
        "e_d": _number(ap.e_d),
        "atoms": [{"u": atom.u, "zeta": atom.zeta} for atom in ap.atoms],
    }


def process_to_json(ap: AncestralProcess, params: BranchingParams) -> str:
    """JSON with shortest round-trip floats; infinite boundaries become null."""
    return json.dumps(process_to_dict(ap, params), indent=2) + "\n"


def process_from_json(text: str) -> tuple[BranchingParams, AncestralProcess]:
    try:
        data = json.loads(text)
        params = BranchingParams(float(data["beta"]), float(data["theta"]))
        bounds = [
            math.inf if data[key] is None else float(data[key])
            for key in ("e_g", "e_d")
        ]
        us = [float(atom["u"]) for atom in data["atoms"]]
        zetas = [float(atom["zeta"]) for atom in data["atoms"]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed ancestral process JSON: {exc}") from exc
    return params, AncestralProcess.from_arrays(us, zetas, *bounds)


def process_to_csv(ap: AncestralProcess) -> str:
    """Atom table ``u,zeta`` in position order, floats in shortest round-trip form."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("u", "zeta"))
    for atom in ap.atoms:
        writer.writerow((repr(atom.u), repr(atom.zeta)))
    return buffer.getvalue()
