"""Distribution lifts that make auxiliaries independent or the input
deterministic, and a constructive Caratheodory support reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probcore import (
    BroadcastChannel,
    JointPmf,
    entropy_bits,
    marginalize,
    mutual_information,
    with_outputs,
)

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class LiftedTriple:
    joint: JointPmf  # axes ("U*", "V*", "W*", "X")
    m: int


@dataclass(frozen=True)
class DeterministicTriple:
    joint: JointPmf  # axes ("U*", "V*", "X*")
    l: int


def _uvx_table(src: JointPmf) -> np.ndarray:
    if set(src.labels) != {"U", "V", "X"}:
        raise ValueError(f"expected a joint over exactly U, V, X; got {src.labels}")
    return marginalize(src, ("U", "V", "X")).table


def lift_to_independent(src: JointPmf) -> LiftedTriple:
    """P(U*=u, V*=i, W*=j, X=x) = P(U=u, V=(i+j) mod m, X=x) / m with m = |V|.

    U* is then independent of V*, while (U*, W*) carries what U carried about X.
    """
    p = _uvx_table(src)
    nu, m, nx = p.shape
    i = np.arange(m)[:, None]
    j = np.arange(m)[None, :]
    shifted = (i + j) % m  # shifted[i, j] = V index feeding (V*=i, W*=j)
    lifted = p[:, shifted, :] / m  # (U, V*, W*, X)
    return LiftedTriple(JointPmf(("U*", "V*", "W*", "X"), lifted), m)


def deterministic_lift(src: JointPmf) -> DeterministicTriple:
    """U* = (u, i), V* = (v, j) with P(U*, V*) = P(U=u, V=v, X=(i-j) mod l) / l
    and X* = (i - j) mod l.

    Pairs are flattened lexicographically: U* index = u * l + i.
    """
    p = _uvx_table(src)
    nu, nv, l = p.shape
    table = np.zeros((nu, l, nv, l, l))
    for i in range(l):
        for j in range(l):
            k = (i - j) % l
            table[:, i, :, j, k] = p[:, :, k] / l
    return DeterministicTriple(JointPmf(("U*", "V*", "X*"), table.reshape(nu * l, nv * l, l)), l)


def independence_identities(src: JointPmf, lifted: LiftedTriple, ch: BroadcastChannel):
    """Both sides of the four identities the independence lift preserves.

    Returns a list of (name, source value, lifted value).
    """
    a = with_outputs(src, ch)
    b = with_outputs(lifted.joint, ch)
    mi = mutual_information
    return [
        ("I(U;Y1) = I(U*,W*;Y1)", mi(a, "U", "Y1"), mi(b, ("U*", "W*"), "Y1")),
        ("I(V;Y2) = I(V*,W*;Y2)", mi(a, "V", "Y2"), mi(b, ("V*", "W*"), "Y2")),
        ("I(U;Y1|V) = I(U*;Y1|V*,W*)", mi(a, "U", "Y1", "V"), mi(b, "U*", "Y1", ("V*", "W*"))),
        ("I(V;Y2|U) = I(V*;Y2|U*,W*)", mi(a, "V", "Y2", "U"), mi(b, "V*", "Y2", ("U*", "W*"))),
    ]


def deterministic_identities(src: JointPmf, lifted: DeterministicTriple, ch: BroadcastChannel):
    a = with_outputs(src, ch)
    b = with_outputs(lifted.joint, ch, input_label="X*")
    mi = mutual_information
    return [
        ("I(U;Y1) = I(U*;Y1)", mi(a, "U", "Y1"), mi(b, "U*", "Y1")),
        ("I(V;Y2) = I(V*;Y2)", mi(a, "V", "Y2"), mi(b, "V*", "Y2")),
        ("I(X;Y1|V) = I(U*;Y1|V*)", mi(a, "X", "Y1", "V"), mi(b, "U*", "Y1", "V*")),
        ("I(X;Y2|U) = I(V*;Y2|U*)", mi(a, "X", "Y2", "U"), mi(b, "V*", "Y2", "U*")),
    ]


def independence_residual(lifted: LiftedTriple) -> float:
    """Total-variation distance of p(u*, v*) from the product of its marginals."""
    puv = marginalize(lifted.joint, ("U*", "V*")).table
    prod = np.outer(puv.sum(1), puv.sum(0))
    return 0.5 * float(np.abs(puv - prod).sum())


def determinism_residual(lifted: DeterministicTriple) -> float:
    """Largest non-point-mass deviation over rows of p(x*|u*, v*) with mass."""
    t = lifted.joint.table
    mass = t.sum(axis=2)
    rows = t[mass > 0] / mass[mass > 0][:, None]
    if rows.size == 0:
        return 0.0
    return float(np.max(1.0 - rows.max(axis=1)))


# ---------------------------------------------------------------------------
# Caratheodory support reduction


@dataclass(frozen=True)
class ReducedSupport:
    weights: np.ndarray  # weights of the kept atoms, in ``kept`` order
    kept: np.ndarray  # indices into the original atom list
    iterations: int


def atom_functionals(conditionals: np.ndarray, ch: BroadcastChannel, side: str = "U"):
    """Per-atom values of the two functionals preserved by the reduction.

    For side "U": H(Y1 | atom) and I(X; Y2 | atom); side "V" swaps receivers.
    """
    if side == "U":
        keep_h, keep_i = ch.to_y1, ch.to_y2
    elif side == "V":
        keep_h, keep_i = ch.to_y2, ch.to_y1
    else:
        raise ValueError(f"side must be 'U' or 'V', got {side!r}")
    c = np.asarray(conditionals, dtype=float)
    h = entropy_bits(c @ keep_h.rows, axis=1)
    i = entropy_bits(c @ keep_i.rows, axis=1) - c @ keep_i.noise_entropy()
    return h, i


def reduce_support(weights, atom_conditionals, ch: BroadcastChannel, side: str = "U") -> ReducedSupport:
    """Shrink a mixture to at most |X| + 2 atoms, keeping p(X) and both
    linear functionals from :func:`atom_functionals` fixed.

    Each pivot moves the weights along a null-space direction of the
    constraint matrix until an atom's weight reaches zero; the lowest index
    leaves on ties.
    """
    w = np.array(weights, dtype=float)
    cond = np.asarray(atom_conditionals, dtype=float)
    if cond.ndim != 2 or cond.shape[0] != w.size:
        raise ValueError("need one conditional row per atom")
    if cond.shape[1] != ch.input_size:
        raise ValueError("conditional rows must live on the channel input alphabet")
    h, i = atom_functionals(cond, ch, side)
    constraints = np.vstack([cond.T, h, i])  # |X| rows already encode normalization
    limit = ch.input_size + 2

    kept = np.flatnonzero(w > 0)
    iterations = 0
    while kept.size > limit:
        a = constraints[:, kept]
        vt = np.linalg.svd(a)[2]
        d = vt[-1]
        if np.abs(a @ d).max() > 1e-9:
            raise ArithmeticError("no kernel direction found for the constraint system")
        d = d if d[np.argmax(np.abs(d))] > 0 else -d
        neg = d < 0
        ratios = np.full(d.size, np.inf)
        ratios[neg] = w[kept][neg] / -d[neg]
        leave = int(np.argmin(ratios))  # first minimum, i.e. smallest atom index
        step = ratios[leave]
        w[kept] = w[kept] + step * d
        w[kept[leave]] = 0.0
        w[w < 0] = 0.0
        kept = np.flatnonzero(w > 0)
        iterations += 1
    return ReducedSupport(w[kept], kept, iterations)


def mixture_quantities(weights, conditionals, ch: BroadcastChannel):
    """Values of p(X), I(U;Y1), I(X;Y2|U), I(V;Y2) style terms for a mixture.

    The atoms are treated as values of an auxiliary U; returned dict keys:
    ``px``, ``I_U_Y1``, ``I_X_Y2_given_U``, ``I_U_Y2``, ``I_X_Y1_given_U``.
    """
    w = np.asarray(weights, dtype=float)
    c = np.asarray(conditionals, dtype=float)
    px = w @ c
    out = {"px": px}
    for k, tm in (("1", ch.to_y1), ("2", ch.to_y2)):
        hy = float(entropy_bits(px @ tm.rows))
        hy_u = float(w @ entropy_bits(c @ tm.rows, axis=1))
        out[f"I_U_Y{k}"] = hy - hy_u
        out[f"I_X_Y{k}_given_U"] = hy_u - float(px @ tm.noise_entropy())
    return out


def binary_atoms(alphas) -> np.ndarray:
    """Conditional rows (alpha, 1 - alpha) for binary-input atoms."""
    a = np.asarray(alphas, dtype=float)
    return np.column_stack([a, 1 - a])


__all__ = [
    "LiftedTriple",
    "DeterministicTriple",
    "ReducedSupport",
    "lift_to_independent",
    "deterministic_lift",
    "independence_identities",
    "deterministic_identities",
    "independence_residual",
    "determinism_residual",
    "reduce_support",
    "atom_functionals",
    "mixture_quantities",
    "binary_atoms",
]
