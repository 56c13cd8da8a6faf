"""Evaluators for Marton's inner bound and the UV outer bound of a
two-receiver broadcast channel, plus the skew-symmetric channel analysis.

Inner-bound numbers come from nonconvex search and are lower bounds on the
true support function ("best found"). Outer-bound numbers for binary input
come from envelope evaluation on a grid and are labeled with that grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .constructions import binary_atoms, reduce_support
from .envelope import GridFunction, upper_concave_envelope
from .probcore import (
    BroadcastChannel,
    JointPmf,
    TransitionMatrix,
    entropy_bits,
    entropy_rows,
    mutual_information,
    through,
    with_outputs,
)
from .search import SearchConfig, logits_of, pattern_search, softmax_rows

log = logging.getLogger(__name__)

CHAIN_TOL = 1e-10


# ---------------------------------------------------------------------------
# channels and single-user quantities


def bssc(p: float = 0.5) -> BroadcastChannel:
    """Binary skew-symmetric channel with crossover ``p``.

    Receiver 1 sees a Z-channel: X=1 always gives Y1=1, X=0 gives Y1=1 with
    probability p. Receiver 2 sees the mirror image: X=0 always gives Y2=0,
    X=1 gives Y2=0 with probability p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover {p} outside [0, 1]")
    y1 = [[1 - p, p], [0.0, 1.0]]
    y2 = [[1.0, 0.0], [p, 1 - p]]
    return BroadcastChannel.from_rows(y1, y2, name=f"bssc:{p:g}")


def identity_channel(n: int) -> BroadcastChannel:
    eye = np.eye(n)
    return BroadcastChannel.from_rows(eye, eye, name=f"identity:{n}")


def input_information(px, tm: TransitionMatrix) -> np.ndarray:
    """I(X;Y) for a batch of input laws ``px`` (..., |X|)."""
    px = np.asarray(px, dtype=float)
    return entropy_bits(px @ tm.rows, axis=-1) - px @ tm.noise_entropy()


@dataclass(frozen=True)
class CapacityResult:
    value: float
    input_pmf: np.ndarray


def _binary_law(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    return np.stack([eta, 1 - eta], axis=-1)


def _maximize_on_unit(fn, grid: int, xatol: float = 1e-13):
    """Grid scan of a scalar function on [0, 1] followed by bounded refinement
    in the cell pair around the best grid point."""
    xs = np.linspace(0.0, 1.0, grid)
    vals = fn(xs)
    k = int(np.argmax(vals))
    best_x, best_v = xs[k], float(vals[k])
    h = 1.0 / (grid - 1)
    lo, hi = max(0.0, xs[k] - h), min(1.0, xs[k] + h)
    res = minimize_scalar(lambda t: -float(fn(np.array([t]))[0]), bounds=(lo, hi),
                          method="bounded", options={"xatol": xatol})
    if -res.fun > best_v:
        best_x, best_v = float(res.x), float(-res.fun)
    return best_x, best_v


def blahut_arimoto(rows: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> CapacityResult:
    """Capacity of a single-user channel with transition rows p(y|x)."""
    w = np.asarray(rows, dtype=float)
    n = w.shape[0]
    px = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        py = px @ w
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1) / np.where(py > 0, py, 1)), 0.0)
        d = ratio.sum(axis=1)  # D(W(.|x) || py)
        upper, lower = d.max(), float(px @ d)
        if upper - lower < tol:
            break
        px = px * np.exp2(d)
        px /= px.sum()
    return CapacityResult(lower, px)


def single_user_capacity(ch: BroadcastChannel, output: str = "Y1", grid: int = 4097) -> CapacityResult:
    """max over p(X) of I(X;Y) toward one receiver.

    Binary input: grid plus bounded scalar refinement. Larger inputs:
    Blahut-Arimoto (the objective is concave in p(X)).
    """
    tm = ch.output(output)
    if ch.input_size == 1:
        return CapacityResult(0.0, np.array([1.0]))
    if ch.input_size == 2:
        eta, val = _maximize_on_unit(lambda e: input_information(_binary_law(e), tm), grid)
        return CapacityResult(val, np.array([eta, 1 - eta]))
    return blahut_arimoto(tm.rows)


def time_division_sum_rate(ch: BroadcastChannel, grid: int = 4097) -> float:
    return max(single_user_capacity(ch, "Y1", grid).value, single_user_capacity(ch, "Y2", grid).value)


# ---------------------------------------------------------------------------
# rate polytopes


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < -1e-12 or self.r2 < -1e-12:
            raise ValueError(f"negative rate in ({self.r1}, {self.r2})")

    @property
    def sum(self) -> float:
        return self.r1 + self.r2


def polytope_weighted_max(lam, a1, a2, s):
    """Maximize lam*R1 + (1-lam)*R2 over {0 <= R1 <= a1, 0 <= R2 <= a2, R1 + R2 <= s}.

    Filling the heavier-weighted rate first lands on the optimal vertex.
    Vectorized over all arguments; returns (value, r1, r2). A negative ``s``
    (empty polytope) yields a negative value, which search treats as a penalty.
    """
    lam, a1, a2, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lam, a1, a2, s)))
    first1 = lam >= 0.5
    r1 = np.where(first1, np.minimum(a1, s), 0.0)
    r2 = np.where(first1, np.minimum(a2, s - r1), np.minimum(a2, s))
    r1 = np.where(first1, r1, np.minimum(a1, s - r2))
    return lam * r1 + (1 - lam) * r2, r1, r2


@dataclass
class BoundPoint:
    """Best weighted-sum point of a bound for one weight ``lam``."""

    lam: float
    value: float
    rates: RatePair
    witness: JointPmf
    terms: dict = field(default_factory=dict)
    label: str = ""


@dataclass
class RegionSample:
    points: list
    sum_rate: float
    method: str
    params: dict = field(default_factory=dict)

    def at(self, lam: float) -> BoundPoint:
        return min(self.points, key=lambda p: abs(p.lam - lam))


# ---------------------------------------------------------------------------
# Marton inner bound


def marton_terms(joint: JointPmf, ch: BroadcastChannel) -> dict:
    """Right-hand sides of Marton's inequalities for a joint over (U, V, W, X)."""
    j = with_outputs(joint, ch)
    mi = mutual_information
    iw1, iw2 = mi(j, "W", "Y1"), mi(j, "W", "Y2")
    s = (min(iw1, iw2) + mi(j, "U", "Y1", "W") + mi(j, "V", "Y2", "W")
         - mi(j, "U", "V", "W"))
    return {"R1_max": mi(j, ("U", "W"), "Y1"), "R2_max": mi(j, ("V", "W"), "Y2"), "sum_max": s}


def _marton_batch(p: np.ndarray, ch: BroadcastChannel):
    """(I(U,W;Y1), I(V,W;Y2), sum bound) for a batch of tables (B, U, V, W, X)."""
    w1, w2 = ch.to_y1.rows, ch.to_y2.rows
    puwx = np.einsum("buvwx->buwx", p)
    pvwx = np.einsum("buvwx->bvwx", p)
    pwx = puwx.sum(axis=1)
    px = pwx.sum(axis=1)
    h_w = entropy_rows(pwx.sum(axis=2))
    h_uw = entropy_rows(puwx.sum(axis=3))
    h_vw = entropy_rows(pvwx.sum(axis=3))
    h_uvw = entropy_rows(p.sum(axis=4))
    h_y1 = entropy_rows(px @ w1)
    h_y2 = entropy_rows(px @ w2)
    i_w_y1 = h_w + h_y1 - entropy_rows(through(pwx, w1))
    i_w_y2 = h_w + h_y2 - entropy_rows(through(pwx, w2))
    i_uw_y1 = h_uw + h_y1 - entropy_rows(through(puwx, w1))
    i_vw_y2 = h_vw + h_y2 - entropy_rows(through(pvwx, w2))
    i_u_v_w = h_uw + h_vw - h_uvw - h_w
    s = np.minimum(i_w_y1, i_w_y2) + (i_uw_y1 - i_w_y1) + (i_vw_y2 - i_w_y2) - i_u_v_w
    return i_uw_y1, i_vw_y2, s


def _marton_seeds(ch: BroadcastChannel, cu: int, cv: int, cw: int, grid: int) -> list:
    """Structured starting tables: single-user corners and, for binary
    input, the time-split construction."""
    nx = ch.input_size
    seeds = []
    for out in ("Y1", "Y2"):
        if (cu if out == "Y1" else cv) < nx:
            continue
        px = single_user_capacity(ch, out, grid).input_pmf
        t = np.zeros((cu, cv, cw, nx))
        for x in range(nx):
            if out == "Y1":
                t[x, 0, 0, x] = px[x]
            else:
                t[0, x, 0, x] = px[x]
        seeds.append(t)
    if nx == 2 and min(cu, cv, cw) >= 2:
        ts = marton_sum_rate_tsplit(ch, grid=101)
        seeds.append(tsplit_table(ts, cu, cv, cw))
    return seeds


def marton_region(ch: BroadcastChannel, lambdas: Sequence[float], cfg: SearchConfig,
                  card_w: Optional[int] = None) -> list:
    """Best-found Marton weighted maxima for every weight in ``lambdas``.

    ``card_w`` fixes |W|; otherwise |W| sweeps 1..4 (or ``cfg.card_w``) and
    the best per weight is kept, ties going to the smaller |W|.
    """
    nx = ch.input_size
    cu = cfg.card_u or nx
    cv = cfg.card_v or nx
    if card_w is not None:
        w_cards = [card_w]
    elif cfg.card_w is not None:
        w_cards = [cfg.card_w]
    else:
        w_cards = [1, 2, 3, 4]
    lambdas = np.asarray(lambdas, dtype=float)
    best: list = [None] * len(lambdas)
    for cw in w_cards:
        shape = (cu, cv, cw, nx)
        dim = int(np.prod(shape))
        seeds = [logits_of(t) for t in _marton_seeds(ch, cu, cv, cw, cfg.grid)]
        per_lam = len(seeds) + cfg.restarts
        lam_rows = np.repeat(lambdas, per_lam)

        def objective(theta, rows):
            a1, a2, s = _marton_batch(softmax_rows(theta, shape), ch)
            return polytope_weighted_max(lam_rows[rows], a1, a2, s)[0]

        rng = cfg.rng(1, cw)
        starts = []
        for _ in lambdas:
            starts.extend(seeds)
            starts.extend(rng.uniform(-2.0, 2.0, size=(cfg.restarts, dim)))
        out = pattern_search(objective, np.asarray(starts), cfg.iterations, ftol=cfg.tol)
        log.debug("marton |W|=%d: %d rows, %d sweeps", cw, len(starts), out.sweeps)
        tables = softmax_rows(out.theta, shape)
        a1, a2, s = _marton_batch(tables, ch)
        vals, r1, r2 = polytope_weighted_max(lam_rows, a1, a2, s)
        for i, lam in enumerate(lambdas):
            block = slice(i * per_lam, (i + 1) * per_lam)
            k = i * per_lam + int(np.argmax(vals[block]))
            if best[i] is None or vals[k] > best[i].value:
                best[i] = BoundPoint(
                    float(lam), float(vals[k]),
                    RatePair(max(float(r1[k]), 0.0), max(float(r2[k]), 0.0)),
                    JointPmf(("U", "V", "W", "X"), tables[k] / tables[k].sum()),
                    {"R1_max": float(a1[k]), "R2_max": float(a2[k]), "sum_max": float(s[k]),
                     "card_w": cw},
                    "best found",
                )
    return best


def marton_weighted_max(ch: BroadcastChannel, lam: float, cfg: SearchConfig,
                        card_w: Optional[int] = None) -> BoundPoint:
    return marton_region(ch, [lam], cfg, card_w)[0]


# ---------------------------------------------------------------------------
# time-split sum rate (binary input)


@dataclass(frozen=True)
class TsplitResult:
    value: float
    tau: float  # P(T=0)
    a: float  # P(X=0 | T=0)
    b: float  # P(X=0 | T=1)
    grid: int


def _binary_only(ch: BroadcastChannel, what: str) -> None:
    if ch.input_size != 2:
        raise ValueError(f"{what} needs a binary-input channel (got |X| = {ch.input_size})")


def tsplit_value(ch: BroadcastChannel, tau, a, b):
    """min{I(T;Y1), I(T;Y2)} + P(T=0) I(X;Y1|T=0) + P(T=1) I(X;Y2|T=1)
    for binary T with P(T=0)=tau, P(X=0|T=0)=a, P(X=0|T=1)=b. Vectorized."""
    _binary_only(ch, "tsplit_value")
    tau, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (tau, a, b)))
    eta = tau * a + (1 - tau) * b
    la, lb, le = _binary_law(a), _binary_law(b), _binary_law(eta)
    out = {}
    for k, tm in (("1", ch.to_y1), ("2", ch.to_y2)):
        h_a = entropy_bits(la @ tm.rows, axis=-1)
        h_b = entropy_bits(lb @ tm.rows, axis=-1)
        out["IT" + k] = entropy_bits(le @ tm.rows, axis=-1) - tau * h_a - (1 - tau) * h_b
        out["ha" + k], out["hb" + k] = h_a, h_b
    n1, n2 = ch.to_y1.noise_entropy(), ch.to_y2.noise_entropy()
    ix1_t0 = out["ha1"] - la @ n1
    ix2_t1 = out["hb2"] - lb @ n2
    return np.minimum(out["IT1"], out["IT2"]) + tau * ix1_t0 + (1 - tau) * ix2_t1


def marton_sum_rate_tsplit(ch: BroadcastChannel, grid: int = 201, symmetric: bool = False,
                           refine_rounds: int = 6) -> TsplitResult:
    """Maximize :func:`tsplit_value` on a 3-D grid, then refine coordinate-wise.

    ``symmetric`` restricts to the slice tau = 1/2, b = 1 - a.
    """
    _binary_only(ch, "marton_sum_rate_tsplit")
    g = np.linspace(0.0, 1.0, grid)
    if symmetric:
        vals = tsplit_value(ch, 0.5, g, 1 - g)
        k = int(np.argmax(vals))
        a, val = _maximize_on_unit(lambda x: tsplit_value(ch, 0.5, x, 1 - x), grid)
        return TsplitResult(max(val, float(vals[k])), 0.5, a, 1 - a, grid)

    best = (-np.inf, 0, 0, 0)
    for i, tau in enumerate(g):  # one tau slice at a time keeps memory flat
        v = tsplit_value(ch, tau, g[:, None], g[None, :])
        k = int(np.argmax(v))
        if v.flat[k] > best[0]:
            best = (float(v.flat[k]), i, *np.unravel_index(k, v.shape))
    val, i, j, k = best
    x = np.array([g[i], g[j], g[k]])
    h = 1.0 / (grid - 1)
    for _ in range(refine_rounds):
        for axis in range(3):
            lo, hi = max(0.0, x[axis] - h), min(1.0, x[axis] + h)

            def neg(t, axis=axis):
                y = x.copy()
                y[axis] = t
                return -float(tsplit_value(ch, *y))

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            if -res.fun > val:
                val = -res.fun
                x[axis] = res.x
        h /= 4
    return TsplitResult(float(val), float(x[0]), float(x[1]), float(x[2]), grid)


def tsplit_table(ts: TsplitResult, cu: int = 2, cv: int = 2, cw: int = 2) -> np.ndarray:
    """Embed the time-split construction as a table over (U, V, W, X).

    W = T; on W=0 the first receiver's auxiliary copies X and the other is
    constant, on W=1 the roles swap.
    """
    t = np.zeros((cu, cv, cw, 2))
    for x, px in enumerate((ts.a, 1 - ts.a)):
        t[x, 0, 0, x] = ts.tau * px
    for x, px in enumerate((ts.b, 1 - ts.b)):
        t[0, x, 1, x] = (1 - ts.tau) * px
    return t


# ---------------------------------------------------------------------------
# UV outer bound (computable form)


def outer_terms(joint: JointPmf, ch: BroadcastChannel) -> dict:
    """Right-hand sides of the outer bound for a joint over (U, V, X)."""
    j = with_outputs(joint, ch)
    mi = mutual_information
    a1, a2 = mi(j, "U", "Y1"), mi(j, "V", "Y2")
    first = a1 + mi(j, "X", "Y2", "U")
    second = a2 + mi(j, "X", "Y1", "V")
    return {"R1_max": a1, "R2_max": a2, "sum_u": first, "sum_v": second,
            "sum_max": min(a1 + a2, first, second)}


class _BinaryAuxFamily:
    """Best two-atom auxiliaries for binary input.

    For receivers (a, b) and weight ``nu`` it maximizes
    I(U;Ya) + nu * I(X;Yb|U) = H(Ya) + env[nu * I(X;Yb) - H(Ya)](eta)
    over auxiliaries U with P(X=0) = eta.
    """

    def __init__(self, tm_a: TransitionMatrix, tm_b: TransitionMatrix, nu: float,
                 n: int, single: bool = False):
        self.tm_a, self.tm_b, self.nu, self.single = tm_a, tm_b, nu, single
        self.env = upper_concave_envelope(GridFunction.sample(self.phi, n))
        self.hull_x = self.env.hull / (n - 1)
        self.hull_y = self.env.envelope.values[self.env.hull]

    def h_a(self, alpha):
        return entropy_bits(_binary_law(alpha) @ self.tm_a.rows, axis=-1)

    def i_b(self, alpha):
        return input_information(_binary_law(alpha), self.tm_b)

    def phi(self, alpha):
        return self.nu * self.i_b(alpha) - self.h_a(alpha)

    def atoms(self, eta):
        """(alphas, weights), each (len(eta), 2), for every eta."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        single = np.column_stack([eta, eta]), np.column_stack([np.ones_like(eta), np.zeros_like(eta)])
        if self.single:
            return single
        xs = self.hull_x
        k = np.clip(np.searchsorted(xs, eta, side="right"), 1, xs.size - 1)
        lo, hi = xs[k - 1], xs[k]
        w_lo = np.clip((hi - eta) / (hi - lo), 0.0, 1.0)
        hull_val = w_lo * self.hull_y[k - 1] + (1 - w_lo) * self.hull_y[k]
        # off-grid eta inside a contact stretch: the point itself beats the chord
        use_self = self.phi(eta) >= hull_val
        alphas = np.where(use_self[:, None], single[0], np.column_stack([lo, hi]))
        weights = np.where(use_self[:, None], single[1], np.column_stack([w_lo, 1 - w_lo]))
        return alphas, weights

    def rates(self, eta):
        """(I(U;Ya), I(U;Ya) + I(X;Yb|U)) of the best auxiliary at each eta."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        alphas, weights = self.atoms(eta)
        r = self.h_a(eta) - (weights * self.h_a(alphas)).sum(axis=1)
        c = (weights * self.i_b(alphas)).sum(axis=1)
        return r, r + c


def _uvx_from_atoms(eta, u_atoms, v_atoms) -> JointPmf:
    """Joint over (U, V, X) with U and V conditionally independent given X."""
    pux = np.array([[w * a, w * (1 - a)] for a, w in zip(*u_atoms)])
    pvx = np.array([[w * a, w * (1 - a)] for a, w in zip(*v_atoms)])
    px = pux.sum(axis=0)
    safe = np.where(px > 0, px, 1.0)
    table = pux[:, None, :] * pvx[None, :, :] / safe
    return JointPmf(("U", "V", "X"), table / table.sum())


# Piecewise-linear scores over (I(U;Y1), sum_u, I(V;Y2), sum_v): the score
# is the minimum of the rows applied to that 4-vector. Every coefficient is
# nonnegative, which is what lets each side be maximized by an envelope.
_S_PIECES = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
SUM_PIECES = _S_PIECES


def weighted_pieces(lam: float) -> np.ndarray:
    """Rows whose minimum is max lam*R1 + (1-lam)*R2 over the rate polytope
    R1 <= a1, R2 <= a2, R1 + R2 <= min{a1 + a2, sum_u, sum_v}.

    The rows come from the vertices (y1, y2, y3) of the dual polytope of that
    linear program, each combined with every piece of the sum constraint.
    """
    m = min(lam, 1.0 - lam)
    rows = [np.array([lam, 0.0, 1.0 - lam, 0.0])]
    for y1, y2, y3 in ((lam - m, 1.0 - lam - m, m), (0.0, 0.0, 1.0 - m)):
        rows.extend(np.array([y1, 0.0, y2, 0.0]) + y3 * _S_PIECES)
    return np.unique(np.round(np.array(rows), 15), axis=0)


class _BinaryOuter:
    """Outer-bound evaluation for binary input.

    At fixed P(X=0) the achievable pairs (I(U;Y1), I(U;Y1) + I(X;Y2|U)) form
    a convex set (mixing auxiliaries mixes both terms linearly). Its
    upper-right frontier is sampled by maximizing I(U;Y1) + nu * I(X;Y2|U)
    for ``directions`` values of nu in [0, 1], each an envelope problem;
    likewise for V. For a piecewise-linear score the best mixture of the
    sampled frontier points is then a small linear program.
    """

    def __init__(self, ch: BroadcastChannel, cfg: SearchConfig, directions: int = 33,
                 eta_grid: int = 257):
        self.ch, self.cfg, self.grid, self.directions = ch, cfg, cfg.grid, directions
        cu, cv = _outer_cards(ch, cfg)
        self.nus = np.linspace(0.0, 1.0, directions)
        self.etas = np.linspace(0.0, 1.0, eta_grid)
        self.single_u, self.single_v = cu < 2, cv < 2
        self.fams_u = [self.family("U", nu) for nu in self.nus]
        self.fams_v = [self.family("V", nu) for nu in self.nus]
        self.ru = np.array([f.rates(self.etas) for f in self.fams_u])  # (K, 2, n)
        self.rv = np.array([f.rates(self.etas) for f in self.fams_v])

    def family(self, side: str, nu: float) -> _BinaryAuxFamily:
        if side == "U":
            return _BinaryAuxFamily(self.ch.to_y1, self.ch.to_y2, nu, self.grid, self.single_u)
        return _BinaryAuxFamily(self.ch.to_y2, self.ch.to_y1, nu, self.grid, self.single_v)

    def vertices(self, eta: float):
        """Frontier points of every pooled direction at ``eta``: (K, 2) per side."""
        ru = np.array([np.concatenate(f.rates(eta)) for f in self.fams_u])
        rv = np.array([np.concatenate(f.rates(eta)) for f in self.fams_v])
        return ru, rv

    def _lp(self, eta: float, pieces: np.ndarray):
        ru, rv = self.vertices(eta)
        ku, kv = len(ru), len(rv)
        # variables [wu (ku), wv (kv), t]; maximize t subject to t <= row . (mixed rates)
        a_ub = np.hstack([-(ru @ pieces[:, :2].T).T, -(rv @ pieces[:, 2:].T).T, np.ones((len(pieces), 1))])
        a_eq = np.zeros((2, ku + kv + 1))
        a_eq[0, :ku] = a_eq[1, ku:ku + kv] = 1.0
        c = np.zeros(ku + kv + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=a_ub, b_ub=np.zeros(len(pieces)), A_eq=a_eq, b_eq=[1.0, 1.0],
                      bounds=[(0, None)] * (ku + kv) + [(None, None)], method="highs")
        if res.status != 0:
            raise ArithmeticError(f"frontier LP failed at eta={eta}: {res.message}")
        w = np.clip(res.x[:ku + kv], 0.0, None)
        mu = np.clip(-res.ineqlin.marginals, 0.0, None)
        return float(-res.fun), w[:ku] / w[:ku].sum(), w[ku:] / w[ku:].sum(), mu, ru, rv

    def mixture_lp(self, eta: float, pieces: np.ndarray, rounds: int = 8):
        """Best score over mixtures of frontier points: (value, wu, wv).

        Column generation: the LP duals weight the score rows, and the best
        new frontier point for those weights is one more envelope problem
        per side. New directions join the pool for later calls.
        """
        for _ in range(rounds):
            value, wu, wv, mu, ru, rv = self._lp(eta, pieces)
            added = False
            for side, fams, cols, pts in (("U", self.fams_u, slice(0, 2), ru), ("V", self.fams_v, slice(2, 4), rv)):
                coef = mu @ pieces[:, cols]
                if coef.sum() <= 1e-15:
                    continue
                fam = self.family(side, coef[1] / coef.sum())
                gain = coef @ np.concatenate(fam.rates(eta)) - (pts @ coef).max()
                if gain > 1e-13:
                    fams.append(fam)
                    added = True
            if not added:
                break
        return value, wu, wv

    def maximize(self, pieces: np.ndarray, refine: bool = True, candidates: int = 2):
        """Best (eta, wu, wv, value) for the score min(pieces @ rates)."""
        a1, su = self.ru[:, 0][:, None], self.ru[:, 1][:, None]
        a2, sv = self.rv[:, 0][None], self.rv[:, 1][None]
        vals = np.min([p[0] * a1 + p[1] * su + p[2] * a2 + p[3] * sv for p in pieces], axis=0)
        if not refine:
            ku, kv, ke = np.unravel_index(int(np.argmax(vals)), vals.shape)
            return (float(self.etas[ke]), np.eye(len(self.fams_u))[ku], np.eye(len(self.fams_v))[kv],
                    float(vals[ku, kv, ke]))
        profile = vals.max(axis=(0, 1))
        h = 1.0 / (self.etas.size - 1)

        def line_search(eta, width):
            # fixed pool here; columns are generated only at the winner
            res = minimize_scalar(lambda t: -self.mixture_lp(t, pieces, rounds=1)[0],
                                  bounds=(max(0.0, eta - width), min(1.0, eta + width)),
                                  method="bounded", options={"xatol": 1e-9})
            at_eta = self.mixture_lp(eta, pieces, rounds=1)[0]
            return (float(res.x), -res.fun) if -res.fun > at_eta else (eta, at_eta)

        # best few coarse cells; ties keep the earlier eta
        found = [line_search(float(self.etas[ke]), h)
                 for ke in np.argsort(-profile, kind="stable")[:candidates]]
        eta = max(found, key=lambda f: f[1])[0]
        self.mixture_lp(eta, pieces)
        eta = line_search(eta, h / 4)[0]
        value, wu, wv = self.mixture_lp(eta, pieces)
        return eta, wu, wv, value

    def _side_atoms(self, eta, fams, weights, side):
        alphas, mass = [], []
        for fam, w in zip(fams, weights):
            if w > 1e-12:
                a, v = fam.atoms(eta)
                alphas.extend(a[0])
                mass.extend(w * v[0])
        alphas, mass = np.array(alphas), np.array(mass)
        keep = mass > 0
        alphas, mass = alphas[keep], mass[keep] / mass[keep].sum()
        if alphas.size > 1:
            r = reduce_support(mass, binary_atoms(alphas), self.ch, side)
            alphas, mass = alphas[r.kept], r.weights
        return alphas, mass

    def witness(self, eta, wu, wv) -> JointPmf:
        u = self._side_atoms(eta, self.fams_u, wu, "U")
        v = self._side_atoms(eta, self.fams_v, wv, "V")
        return _uvx_from_atoms(eta, u, v)


@dataclass
class OuterResult:
    sum_rate: float
    input_pmf: np.ndarray
    witness: JointPmf
    terms: dict
    method: str
    params: dict = field(default_factory=dict)


def _outer_cards(ch: BroadcastChannel, cfg: SearchConfig):
    nx = ch.input_size
    return cfg.card_u or nx + 1, cfg.card_v or nx + 1


def outer_sum_rate(ch: BroadcastChannel, cfg: SearchConfig = SearchConfig(),
                   directions: int = 33, eta_grid: int = 257) -> OuterResult:
    """Maximum of min{I(U;Y1)+I(V;Y2), I(U;Y1)+I(X;Y2|U), I(V;Y2)+I(X;Y1|V)}.

    The two auxiliaries interact only through p(X), so for binary input each
    side is described exactly by envelopes at every P(X=0) and the search is
    over P(X=0) and one frontier direction per side. Larger inputs use
    multi-start search.
    """
    if ch.input_size != 2:
        return outer_sum_rate_search(ch, cfg)
    return _binary_sum_rate(_BinaryOuter(ch, cfg, directions, eta_grid))


def _binary_sum_rate(outer: "_BinaryOuter") -> OuterResult:
    ch, cfg, directions, eta_grid = outer.ch, outer.cfg, outer.directions, outer.etas.size
    eta, wu, wv, val = outer.maximize(SUM_PIECES)
    witness = outer.witness(eta, wu, wv)
    params = {"grid": cfg.grid, "directions": directions, "eta_grid": eta_grid}
    return OuterResult(float(val), np.array([eta, 1 - eta]), witness, outer_terms(witness, ch),
                       "envelope", params)


def _outer_batch(theta, ch: BroadcastChannel, cu: int, cv: int):
    """(I(U;Y1), I(V;Y2), sum_u, sum_v) for logits [p(x) | p(u|x) | p(v|x)]."""
    nx = ch.input_size
    px = softmax_rows(theta[:, :nx], (nx,))
    pu_x = softmax_rows(theta[:, nx:nx + nx * cu].reshape(-1, cu), (cu,)).reshape(-1, nx, cu)
    pv_x = softmax_rows(theta[:, nx + nx * cu:].reshape(-1, cv), (cv,)).reshape(-1, nx, cv)
    out = []
    for p_aux_x, tm_a, tm_b in ((pu_x, ch.to_y1, ch.to_y2), (pv_x, ch.to_y2, ch.to_y1)):
        pax = np.swapaxes(p_aux_x * px[:, :, None], 1, 2)  # (B, A, X)
        h_aux = entropy_rows(pax.sum(axis=2))
        h_ya_aux = entropy_rows(through(pax, tm_a.rows)) - h_aux
        h_yb_aux = entropy_rows(through(pax, tm_b.rows)) - h_aux
        rate = entropy_rows(px @ tm_a.rows) - h_ya_aux
        out.append((rate, rate + h_yb_aux - px @ tm_b.noise_entropy()))
    (a1, su), (a2, sv) = out
    return a1, a2, su, sv


def _outer_theta_to_joint(theta, ch, cu, cv) -> JointPmf:
    nx = ch.input_size
    px = softmax_rows(theta[None, :nx], (nx,))[0]
    pu_x = softmax_rows(theta[nx:nx + nx * cu].reshape(-1, cu), (cu,))
    pv_x = softmax_rows(theta[nx + nx * cu:].reshape(-1, cv), (cv,))
    table = np.einsum("x,xu,xv->uvx", px, pu_x, pv_x)
    return JointPmf(("U", "V", "X"), table / table.sum())


def _outer_seeds(ch: BroadcastChannel, cu: int, cv: int, grid: int) -> list:
    """U = V = X at each single-user capacity-achieving input."""
    nx = ch.input_size
    if min(cu, cv) < nx:
        return []
    seeds = []
    for out in ("Y1", "Y2"):
        px = single_user_capacity(ch, out, grid).input_pmf
        cond_u = np.full((nx, cu), 0.0)
        cond_u[np.arange(nx), np.arange(nx)] = 1.0
        cond_v = np.full((nx, cv), 0.0)
        cond_v[np.arange(nx), np.arange(nx)] = 1.0
        seeds.append(np.concatenate([logits_of(px), logits_of(cond_u), logits_of(cond_v)]))
    return seeds


def _outer_search(ch: BroadcastChannel, lambdas, cfg: SearchConfig, sum_only: bool):
    nx = ch.input_size
    cu, cv = _outer_cards(ch, cfg)
    dim = nx + nx * cu + nx * cv
    seeds = _outer_seeds(ch, cu, cv, cfg.grid)
    per = len(seeds) + cfg.restarts
    lam_rows = np.repeat(np.asarray(lambdas, dtype=float), per)

    def score(theta, rows):
        a1, a2, su, sv = _outer_batch(theta, ch, cu, cv)
        s = np.minimum(np.minimum(a1 + a2, su), sv)
        if sum_only:
            return s
        return polytope_weighted_max(lam_rows[rows], a1, a2, s)[0]

    rng = cfg.rng(2, cu, cv)
    starts = []
    for _ in lambdas:
        starts.extend(seeds)
        starts.extend(rng.uniform(-2.0, 2.0, size=(cfg.restarts, dim)))
    out = pattern_search(score, np.asarray(starts), cfg.iterations, ftol=cfg.tol)
    return out, per, lam_rows, (cu, cv)


def outer_sum_rate_search(ch: BroadcastChannel, cfg: SearchConfig = SearchConfig()) -> OuterResult:
    """Multi-start search version of :func:`outer_sum_rate` (any input size)."""
    out, _, _, (cu, cv) = _outer_search(ch, [0.5], cfg, sum_only=True)
    k = out.best
    witness = _outer_theta_to_joint(out.theta[k], ch, cu, cv)
    px = witness.table.sum(axis=(0, 1))
    return OuterResult(float(out.values[k]), px, witness, outer_terms(witness, ch),
                       "search (best found)", {"restarts": cfg.restarts, "card_u": cu, "card_v": cv})


def outer_region(ch: BroadcastChannel, lambdas: Sequence[float], cfg: SearchConfig = SearchConfig(),
                 directions: int = 33, eta_grid: int = 257, refine: bool = True) -> RegionSample:
    """Weighted maxima lam*R1 + (1-lam)*R2 of the outer bound.

    Binary input: the Pareto frontier of (I(U;Y1), I(U;Y1)+I(X;Y2|U)) at each
    P(X=0) is traced by ``directions`` envelope scalarizations (likewise for
    V); the rate polytope of every frontier pair is solved exactly, and the
    best P(X=0) and directions are refined continuously. Larger inputs use
    search.
    """
    lambdas = [float(l) for l in lambdas]
    if ch.input_size != 2:
        total = outer_sum_rate_search(ch, cfg)
        out, per, lam_rows, (cu, cv) = _outer_search(ch, lambdas, cfg, sum_only=False)
        points = []
        for i, lam in enumerate(lambdas):
            k = i * per + int(np.argmax(out.values[i * per:(i + 1) * per]))
            witness = _outer_theta_to_joint(out.theta[k], ch, cu, cv)
            terms = outer_terms(witness, ch)
            val, r1, r2 = polytope_weighted_max(lam, terms["R1_max"], terms["R2_max"], terms["sum_max"])
            points.append(BoundPoint(lam, float(val), RatePair(float(r1), float(r2)), witness, terms,
                                     "search (best found)"))
        return RegionSample(points, total.sum_rate, "search", {"restarts": cfg.restarts})

    outer = _BinaryOuter(ch, cfg, directions, eta_grid)
    total = _binary_sum_rate(outer)
    points = []
    for lam in lambdas:
        eta, wu, wv, _ = outer.maximize(weighted_pieces(lam), refine=refine)
        witness = outer.witness(eta, wu, wv)
        terms = outer_terms(witness, ch)
        val, r1, r2 = polytope_weighted_max(lam, terms["R1_max"], terms["R2_max"], terms["sum_max"])
        points.append(BoundPoint(lam, float(val), RatePair(max(float(r1), 0.0), max(float(r2), 0.0)),
                                 witness, terms, "envelope"))
    params = {"grid": cfg.grid, "directions": directions, "eta_grid": eta_grid, "refine": refine}
    return RegionSample(points, total.sum_rate, "envelope", params)


# ---------------------------------------------------------------------------
# conjecture gap search and the inequality chain


def conjecture_terms(joint: JointPmf, ch: BroadcastChannel) -> dict:
    j = with_outputs(joint, ch)
    mi = mutual_information
    lhs = mi(j, "U", "Y1") + mi(j, "V", "Y2") - mi(j, "U", "V")
    rhs = max(mi(j, "X", "Y1"), mi(j, "X", "Y2"))
    return {"lhs": lhs, "rhs": rhs, "gap": lhs - rhs}


def _gap_batch(p: np.ndarray, ch: BroadcastChannel) -> np.ndarray:
    """I(U;Y1) + I(V;Y2) - I(U;V) - max{I(X;Y1), I(X;Y2)} for tables (B, U, V, X)."""
    w1, w2 = ch.to_y1.rows, ch.to_y2.rows
    pux = p.sum(axis=2)
    pvx = p.sum(axis=1)
    px = pux.sum(axis=1)
    h_u = entropy_rows(pux.sum(axis=2))
    h_v = entropy_rows(pvx.sum(axis=2))
    h_uv = entropy_rows(p.sum(axis=3))
    h_y1 = entropy_rows(px @ w1)
    h_y2 = entropy_rows(px @ w2)
    i_u_y1 = h_u + h_y1 - entropy_rows(through(pux, w1))
    i_v_y2 = h_v + h_y2 - entropy_rows(through(pvx, w2))
    i_x_y1 = h_y1 - px @ ch.to_y1.noise_entropy()
    i_x_y2 = h_y2 - px @ ch.to_y2.noise_entropy()
    return i_u_y1 + i_v_y2 - (h_u + h_v - h_uv) - np.maximum(i_x_y1, i_x_y2)


@dataclass
class GapResult:
    gap: float
    witness: JointPmf
    terms: dict
    restarts: int
    params: dict = field(default_factory=dict)

    @property
    def counterexample(self) -> bool:
        return self.gap > 1e-6


def _gap_tables(theta, nx, cu, cv, eta_band=None, mirror=False):
    if eta_band is None:
        px = softmax_rows(theta[:, :nx], (nx,))
    else:
        eta = eta_band / (1.0 + np.exp(-theta[:, 0]))
        eta = 1.0 - eta if mirror else eta
        px = np.column_stack([eta, 1.0 - eta])
    q = softmax_rows(theta[:, nx:].reshape(-1, cu * cv), (cu * cv,)).reshape(-1, nx, cu, cv)
    return np.moveaxis(q, 1, 3) * px[:, None, None, :]


def conjecture_gap_search(ch: BroadcastChannel, cfg: SearchConfig = SearchConfig(),
                          eta_band: Optional[float] = None, screen_sweeps: int = 3,
                          polish: int = 256, chunk: int = 8192) -> GapResult:
    """Largest found value of I(U;Y1) + I(V;Y2) - I(U;V) - max{I(X;Y1), I(X;Y2)}.

    Every one of ``cfg.restarts`` random starts gets ``screen_sweeps`` pattern
    sweeps; the best ``polish`` of them are then refined for
    ``cfg.iterations`` sweeps. ``eta_band`` (binary input only) confines
    P(X=0) to [0, eta_band] or [1 - eta_band, 1], half the restarts each.
    """
    nx = ch.input_size
    cu, cv = cfg.card_u or 4, cfg.card_v or 4
    if eta_band is not None:
        _binary_only(ch, "eta_band")
    dim = nx + nx * cu * cv
    rng = cfg.rng(3, cu, cv)
    starts = rng.uniform(-3.0, 3.0, size=(cfg.restarts, dim))
    mirror = np.zeros(cfg.restarts, dtype=bool)
    if eta_band is not None:
        mirror[1::2] = True

    def make_objective(mirror_rows):
        def objective(theta, rows):
            m = mirror_rows[rows]
            out = np.empty(theta.shape[0])
            for flag in (False, True):
                sel = m == flag
                if sel.any():
                    tables = _gap_tables(theta[sel], nx, cu, cv, eta_band, flag)
                    out[sel] = _gap_batch(tables, ch)
            return out
        return objective

    screened = np.empty(cfg.restarts)
    thetas = np.empty_like(starts)
    for lo in range(0, cfg.restarts, chunk):
        sl = slice(lo, min(lo + chunk, cfg.restarts))
        res = pattern_search(make_objective(mirror[sl]), starts[sl], screen_sweeps, ftol=cfg.tol)
        screened[sl], thetas[sl] = res.values, res.theta
    top = np.sort(np.argsort(-screened, kind="stable")[:polish])
    res = pattern_search(make_objective(mirror[top]), thetas[top], cfg.iterations, ftol=cfg.tol)
    k = res.best
    table = _gap_tables(res.theta[k:k + 1], nx, cu, cv, eta_band, bool(mirror[top][k]))[0]
    witness = JointPmf(("U", "V", "X"), table / table.sum())
    params = {"restarts": cfg.restarts, "polished": int(top.size), "card_u": cu, "card_v": cv,
              "screen_sweeps": screen_sweeps, "eta_band": eta_band}
    return GapResult(float(res.values[k]), witness, conjecture_terms(witness, ch), cfg.restarts, params)


class ChainViolation(ArithmeticError):
    """An inequality in the sum-rate chain failed: an information measure is wrong."""


def lemma_chain_check(joint: JointPmf, ch: BroadcastChannel, tol: float = CHAIN_TOL) -> tuple:
    """Evaluate the four-term chain
    I(U;Y1)+I(V;Y2)-I(U;V) <= I(V;Y2)+I(U;Y1|V) <= I(V;Y2)+I(X;Y1|V)
    = I(X;Y1)+I(V;Y2)-I(V;Y1) and raise if any link fails by more than ``tol``.
    """
    j = with_outputs(joint, ch)
    mi = mutual_information
    i_v_y2 = mi(j, "V", "Y2")
    terms = (
        mi(j, "U", "Y1") + i_v_y2 - mi(j, "U", "V"),
        i_v_y2 + mi(j, "U", "Y1", "V"),
        i_v_y2 + mi(j, "X", "Y1", "V"),
        mi(j, "X", "Y1") + i_v_y2 - mi(j, "V", "Y1"),
    )
    for k in range(3):
        if terms[k] > terms[k + 1] + tol:
            raise ChainViolation(f"chain link {k + 1}: {terms[k]!r} > {terms[k + 1]!r}")
    return terms
