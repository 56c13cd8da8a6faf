"""Finite-alphabet probability containers and information measures.

Everything is in bits. Tables are numpy arrays that are frozen (read-only)
after validation, so the containers can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import entr

PROB_TOL = 1e-12
LN2 = np.log(2.0)

Labels = Union[str, Iterable[str]]


class ProbabilityError(ValueError):
    """A table that should be a probability law is not one."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_simplex(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ProbabilityError(f"{what}: non-finite entry")
    if arr.min(initial=0.0) < 0.0:
        raise ProbabilityError(f"{what}: negative entry {arr.min():.3g}")
    total = arr.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ProbabilityError(f"{what}: mass {total!r} is not 1 within {PROB_TOL:g}")


def entropy_bits(p: np.ndarray, axis=None) -> np.ndarray:
    """Shannon entropy (bits) of nonnegative weights, summed over ``axis``.

    The 0*log(0) = 0 convention is handled by ``scipy.special.entr``.
    No normalization is applied, so this also serves as the -sum p log p
    kernel for joint tables inside vectorized objectives.
    """
    return entr(p).sum(axis=axis) / LN2


def entropy_rows(a: np.ndarray) -> np.ndarray:
    """Entropy (bits) of each leading-axis slice of a batch of tables.

    Same 0*log(0) = 0 convention as :func:`entropy_bits`, written with
    plain log2 because it sits in the inner loop of every search.
    """
    flat = a.reshape(a.shape[0], -1)
    return -(flat * np.log2(np.where(flat > 0, flat, 1.0))).sum(axis=1)


def through(a: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Push the last (input) axis of ``a`` through transition rows p(y|x)."""
    out = a.reshape(-1, a.shape[-1]) @ rows
    return out.reshape(a.shape[:-1] + (rows.shape[1],))


@dataclass(frozen=True)
class Pmf:
    weights: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.weights)
        if arr.ndim != 1 or arr.size == 0:
            raise ProbabilityError("Pmf weights must be a non-empty vector")
        _check_simplex(arr, "Pmf")
        object.__setattr__(self, "weights", arr)

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic p(y|x); row ``x`` is the output law given input ``x``."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.rows)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ProbabilityError("transition matrix must be a non-empty 2-D table")
        for x, row in enumerate(arr):
            _check_simplex(row, f"row {x}")
        object.__setattr__(self, "rows", arr)

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def output_law(self, px) -> np.ndarray:
        return np.asarray(px, dtype=float) @ self.rows

    def noise_entropy(self) -> np.ndarray:
        """H(Y|X=x) for every input symbol x."""
        return entropy_bits(self.rows, axis=1)


@dataclass(frozen=True)
class BroadcastChannel:
    """Two-receiver channel stored through its conditional marginals.

    Every quantity evaluated here depends on p(y1,y2|x) only through
    p(y1|x) and p(y2|x), so the joint is never formed.
    """

    to_y1: TransitionMatrix
    to_y2: TransitionMatrix
    name: str = ""

    def __post_init__(self):
        if self.to_y1.input_size != self.to_y2.input_size:
            raise ProbabilityError(
                f"input sizes differ: y1 has {self.to_y1.input_size} rows, "
                f"y2 has {self.to_y2.input_size}"
            )

    @classmethod
    def from_rows(cls, y1, y2, name: str = "") -> "BroadcastChannel":
        return cls(TransitionMatrix(y1), TransitionMatrix(y2), name)

    @property
    def input_size(self) -> int:
        return self.to_y1.input_size

    def output(self, which: str) -> TransitionMatrix:
        if which in ("Y1", "y1", 1):
            return self.to_y1
        if which in ("Y2", "y2", 2):
            return self.to_y2
        raise ValueError(f"unknown output {which!r}; expected 'Y1' or 'Y2'")

    def swapped(self) -> "BroadcastChannel":
        return BroadcastChannel(self.to_y2, self.to_y1, self.name)


def _as_labels(labels: Labels) -> tuple:
    if isinstance(labels, str):
        return (labels,)
    return tuple(labels)


@dataclass(frozen=True)
class JointPmf:
    """Labeled multi-dimensional probability table.

    ``labels[k]`` names axis ``k`` of ``table``. Labels are arbitrary distinct
    strings ("U", "V", "W", "T", "X", "U*", "Y1", ...).
    """

    labels: tuple
    table: np.ndarray

    def __post_init__(self):
        labels = _as_labels(self.labels)
        arr = _frozen(self.table)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate axis labels in {labels}")
        if arr.ndim != len(labels):
            raise ValueError(f"{len(labels)} labels for a {arr.ndim}-D table")
        if any(s < 1 for s in arr.shape):
            raise ProbabilityError("every axis needs at least one symbol")
        _check_simplex(arr, "joint pmf")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "table", arr)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown variable {label!r}; axes are {self.labels}") from None

    def size(self, label: str) -> int:
        return self.table.shape[self.axis(label)]

    def entropy(self, labels: Labels = ()) -> float:
        """Joint entropy of the listed variables (0 for the empty set)."""
        keep = _as_labels(labels)
        if not keep:
            return 0.0
        idx = {self.axis(k) for k in keep}
        drop = tuple(k for k in range(self.table.ndim) if k not in idx)
        return float(entropy_bits(self.table.sum(axis=drop) if drop else self.table))


def binary_entropy(p) -> float:
    p = float(p)
    if p < -PROB_TOL or p > 1.0 + PROB_TOL:
        raise ValueError(f"binary_entropy: {p} is outside [0, 1]")
    p = min(max(p, 0.0), 1.0)
    return float((entr(p) + entr(1.0 - p)) / LN2)


def binary_entropy_array(p) -> np.ndarray:
    """Vectorized H(p); inputs are clipped to [0, 1] without checks."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    return (entr(p) + entr(1.0 - p)) / LN2


def entropy(p) -> float:
    pmf = p if isinstance(p, Pmf) else Pmf(p)
    return float(entropy_bits(pmf.weights))


def marginalize(j: JointPmf, keep: Labels) -> JointPmf:
    """Sum out every axis not in ``keep``; axes come back in ``keep`` order."""
    keep = _as_labels(keep)
    idx = [j.axis(k) for k in keep]
    if len(set(idx)) != len(idx):
        raise ValueError(f"repeated variable in {keep}")
    drop = tuple(k for k in range(j.table.ndim) if k not in idx)
    table = j.table.sum(axis=drop) if drop else j.table
    # remaining axes are in original order; permute to the requested order
    remaining = [k for k in range(j.table.ndim) if k in idx]
    table = np.transpose(table, [remaining.index(k) for k in idx])
    return JointPmf(keep, table)


def mutual_information(j: JointPmf, a: Labels, b: Labels, given: Labels = ()) -> float:
    """I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)."""
    a, b, c = _as_labels(a), _as_labels(b), _as_labels(given)
    sa, sb, sc = set(a), set(b), set(c)
    if not a or not b:
        raise ValueError("mutual_information needs non-empty variable sets")
    if sa & sb or sa & sc or sb & sc:
        raise ValueError(f"variable sets overlap: {a}, {b}, {c}")
    for lab in (*a, *b, *c):
        j.axis(lab)
    return j.entropy(a + c) + j.entropy(b + c) - j.entropy(a + b + c) - j.entropy(c)


def extend_through_channel(j: JointPmf, ch: BroadcastChannel, output: str = "Y1",
                           label: str | None = None, input_label: str = "X") -> JointPmf:
    """Append an output axis drawn from p(y|x), making it Markov through X."""
    tm = ch.output(output)
    label = label or ("Y1" if tm is ch.to_y1 else "Y2")
    if label in j.labels:
        raise ValueError(f"axis {label!r} already present")
    ax = j.axis(input_label)
    if j.table.shape[ax] != tm.input_size:
        raise ValueError(
            f"{input_label} has {j.table.shape[ax]} symbols but the channel expects {tm.input_size}"
        )
    # move X last, multiply by p(y|x), move X back
    t = np.moveaxis(j.table, ax, -1)
    ext = t[..., :, None] * tm.rows
    ext = np.moveaxis(ext, -2, ax)
    return JointPmf(j.labels + (label,), ext)


def with_outputs(j: JointPmf, ch: BroadcastChannel, input_label: str = "X") -> JointPmf:
    """Extend through both receivers (conditionally independent given X)."""
    j = extend_through_channel(j, ch, "Y1", input_label=input_label)
    return extend_through_channel(j, ch, "Y2", input_label=input_label)


def product_joint(labels: Sequence[str], *marginals) -> JointPmf:
    """Independent joint from per-variable marginals."""
    table = np.array(1.0)
    for m in marginals:
        table = np.multiply.outer(table, np.asarray(m, dtype=float))
    return JointPmf(tuple(labels), table)
