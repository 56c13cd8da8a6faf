"""Batch checks behind the ``bssc-suite`` and ``verify-constructions`` commands."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bounds, constructions, envelope
from .probcore import BroadcastChannel, JointPmf
from .search import SearchConfig

TARGET_INNER_SUM = 0.3616
TARGET_OUTER_SUM = 0.3711
TARGET_SUM_TOL = 5e-4


@dataclass
class Check:
    name: str
    value: float
    target: Optional[float]
    tolerance: Optional[float]
    passed: bool
    proved: bool  # backed by a theorem (failure means a bug), not a reported number
    note: str = ""


def random_channel(rng: np.random.Generator, nx: int, max_out: int = 3) -> BroadcastChannel:
    ny1, ny2 = rng.integers(2, max_out + 1, size=2)
    return BroadcastChannel.from_rows(rng.dirichlet(np.ones(ny1), nx), rng.dirichlet(np.ones(ny2), nx))


def random_uvx(rng: np.random.Generator, cu: int, cv: int, nx: int) -> JointPmf:
    t = rng.dirichlet(np.ones(cu * cv * nx)).reshape(cu, cv, nx)
    return JointPmf(("U", "V", "X"), t)


def skew_curves(grid: int):
    """f, g, the envelope of f, contact flags and the line 2*eta - 1 on the grid."""
    fn = envelope.GridFunction.sample(envelope.f_skew, grid)
    env = envelope.upper_concave_envelope(fn)
    etas = fn.etas
    return {
        "eta": etas,
        "f": fn.values,
        "g": envelope.g_function(etas),
        "envelope": env.envelope.values,
        "contact": env.contact,
        "line": 2 * etas - 1,
    }


def run_bssc_suite(grid: int = 4097, grid3d: int = 201, restarts: int = 64, seed: int = 0,
                   gap_restarts: int = 100_000, chain_trials: int = 1000):
    ch = bounds.bssc(0.5)
    checks = []
    h = 1.0 / (grid - 1)

    eta0 = envelope.solve_eta0()
    checks.append(Check("eta0", eta0, 0.2, 1e-9, abs(eta0 - 0.2) <= 1e-9, True))

    curves = skew_curves(grid)
    sup = float(np.max(np.abs(curves["envelope"] - curves["g"])))
    checks.append(Check("envelope_vs_g_supnorm", sup, 0.0, 2e-4, sup <= 2e-4, True))
    # contact set is [0, eta0] plus the endpoint eta = 1 where the chord lands
    etas, contact = curves["eta"], curves["contact"]
    interior = etas < 1
    right = float(etas[contact & interior].max())
    complete = bool(np.all(contact[etas <= eta0 - h]))
    checks.append(Check("contact_boundary", right, eta0, h, abs(right - eta0) <= h + 1e-12 and complete,
                        True, "rightmost interior contact point"))

    d2 = np.diff(curves["f"], 2)
    mid = (grid - 1) // 2
    concave_left = float(d2[: mid - 1].max())
    convex_right = float(d2[mid:].min())
    checks.append(Check("f_concave_on_left_half", concave_left, 0.0, 1e-12, concave_left <= 1e-12, False,
                        "max second difference on [0, 1/2]"))
    checks.append(Check("f_convex_on_right_half", convex_right, 0.0, 1e-12, convex_right >= -1e-12, False,
                        "min second difference on [1/2, 1]"))

    low = curves["eta"] <= eta0
    low_gap = float(np.max(curves["envelope"][low] - curves["f"][low]))
    checks.append(Check("envelope_gap_below_eta0", low_gap, 0.0, 1e-6, low_gap <= 1e-6, True))

    rng = np.random.default_rng([seed, 7])
    worst_chain = -np.inf
    for _ in range(chain_trials):
        cu, cv = rng.integers(1, 5, size=2)
        try:
            t = bounds.lemma_chain_check(random_uvx(rng, cu, cv, 2), ch)
        except bounds.ChainViolation:
            worst_chain = np.inf
            break
        worst_chain = max(worst_chain, max(t[k] - t[k + 1] for k in range(3)))
    checks.append(Check("chain_max_violation", float(worst_chain), 0.0, bounds.CHAIN_TOL,
                        worst_chain <= bounds.CHAIN_TOL, True))

    cfg = SearchConfig(restarts=restarts, seed=seed, grid=grid, grid3d=grid3d)
    ts = bounds.marton_sum_rate_tsplit(ch, grid3d)
    checks.append(Check("tsplit_sum_rate", ts.value, TARGET_INNER_SUM, TARGET_SUM_TOL,
                        abs(ts.value - TARGET_INNER_SUM) <= TARGET_SUM_TOL, False,
                        f"tau={ts.tau:.9g} a={ts.a:.9g} b={ts.b:.9g}"))
    outer = bounds.outer_sum_rate(ch, cfg)
    checks.append(Check("outer_sum_rate", outer.sum_rate, TARGET_OUTER_SUM, TARGET_SUM_TOL,
                        abs(outer.sum_rate - TARGET_OUTER_SUM) <= TARGET_SUM_TOL, False,
                        f"envelope method, grid={grid}, eta={outer.input_pmf[0]:.9g}"))
    diff = outer.sum_rate - ts.value
    checks.append(Check("outer_minus_inner", diff, None, None, diff >= 0.008, False,
                        "required >= 0.008"))

    gcfg = SearchConfig(restarts=gap_restarts, seed=seed, card_u=4, card_v=4)
    gap = bounds.conjecture_gap_search(ch, gcfg)
    checks.append(Check("conjecture_gap", gap.gap, 0.0, 1e-6, gap.gap <= 1e-6, False,
                        "positive gap would be a counterexample"))
    band = bounds.conjecture_gap_search(ch, gcfg, eta_band=0.2)
    checks.append(Check("gap_restricted_band", band.gap, 0.0, 1e-6, band.gap <= 1e-6, True,
                        "P(X=0) in [0, 0.2] or [0.8, 1]"))
    witnesses = {"conjecture_gap": gap.witness, "gap_restricted_band": band.witness}
    return checks, curves, witnesses


@dataclass
class HarnessReport:
    trials: int
    channels: int
    max_residual: dict  # identity name -> worst |lhs - rhs|
    independence: float
    determinism: float
    reduction_residual: float
    reduction_max_atoms: int

    @property
    def worst(self) -> float:
        return max([*self.max_residual.values(), self.independence, self.determinism,
                    self.reduction_residual])


def run_construction_harness(trials: int = 1000, seed: int = 0, max_card: int = 4,
                             channels: int = 10, max_input: int = 3,
                             reduction_trials: Optional[int] = None) -> HarnessReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng([seed, 11])
    chans = {nx: [random_channel(rng, nx) for _ in range(channels)] for nx in range(2, max_input + 1)}
    resid: dict = {}
    indep = determ = 0.0
    for _ in range(trials):
        nx = int(rng.integers(2, max_input + 1))
        cu, cv = (int(c) for c in rng.integers(1, max_card + 1, size=2))
        src = random_uvx(rng, cu, cv, nx)
        lifted = constructions.lift_to_independent(src)
        det = constructions.deterministic_lift(src)
        indep = max(indep, constructions.independence_residual(lifted))
        determ = max(determ, constructions.determinism_residual(det))
        for ch in chans[nx]:
            rows = (constructions.independence_identities(src, lifted, ch)
                    + constructions.deterministic_identities(src, det, ch))
            for name, a, b in rows:
                resid[name] = max(resid.get(name, 0.0), abs(a - b))

    red_worst, red_atoms = 0.0, 0
    for _ in range(reduction_trials if reduction_trials is not None else max(trials // 5, 1)):
        ch = random_channel(rng, 2)
        w = rng.dirichlet(np.ones(8))
        cond = constructions.binary_atoms(rng.random(8))
        for side in ("U", "V"):
            r = constructions.reduce_support(w, cond, ch, side)
            h0, i0 = constructions.atom_functionals(cond, ch, side)
            px0, px1 = w @ cond, r.weights @ cond[r.kept]
            red_worst = max(red_worst, float(np.abs(px0 - px1).max()),
                            abs(float(w @ h0 - r.weights @ h0[r.kept])),
                            abs(float(w @ i0 - r.weights @ i0[r.kept])))
            red_atoms = max(red_atoms, int(r.kept.size))
    return HarnessReport(trials, channels, resid, indep, determ, red_worst, red_atoms)
