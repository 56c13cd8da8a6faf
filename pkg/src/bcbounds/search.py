"""Seeded multi-start local search over probability tables.

Tables are parametrized by unconstrained logits pushed through a softmax,
so every point visited is a valid distribution. Local refinement is a
batched coordinate pattern search: all restarts advance together as rows
of one array, which keeps runs deterministic for a given seed regardless
of how the work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

ZERO_LOGIT = -700.0  # softmax of this against O(1) logits underflows to 0


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 64
    iterations: int = 200
    seed: int = 0
    card_u: Optional[int] = None
    card_v: Optional[int] = None
    card_w: Optional[int] = None
    tol: float = 1e-9
    grid: int = 4097
    grid3d: int = 201

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        for name in ("card_u", "card_v", "card_w"):
            c = getattr(self, name)
            if c is not None and c < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.grid < 2 or self.grid3d < 2:
            raise ValueError("grid resolutions must be >= 2")

    def with_(self, **changes) -> "SearchConfig":
        return replace(self, **changes)

    def rng(self, *stream) -> np.random.Generator:
        """Independent generator for a named sub-run, fixed by the seed."""
        return np.random.default_rng([self.seed, *stream])


def softmax_rows(theta: np.ndarray, shape: tuple) -> np.ndarray:
    """Batch of logits (B, prod(shape)) -> batch of tables (B, *shape) summing to 1."""
    z = theta - theta.max(axis=1, keepdims=True)
    e = np.exp(z)
    e /= e.sum(axis=1, keepdims=True)
    return e.reshape((theta.shape[0],) + tuple(shape))


def logits_of(p: np.ndarray) -> np.ndarray:
    """Inverse of the softmax up to a constant; exact zeros map to ZERO_LOGIT."""
    p = np.asarray(p, dtype=float).ravel()
    out = np.full(p.shape, ZERO_LOGIT)
    pos = p > 0
    out[pos] = np.log(p[pos])
    return out


@dataclass
class SearchOutcome:
    theta: np.ndarray  # (B, d) final parameters per restart
    values: np.ndarray  # (B,) objective per restart
    sweeps: int

    @property
    def best(self) -> int:
        # argmax returns the first maximum: ties go to the lowest restart index
        return int(np.argmax(self.values))


def pattern_search(objective: Callable[[np.ndarray, np.ndarray], np.ndarray], theta0: np.ndarray,
                   iterations: int, step0: float = 1.0, min_step: float = 1e-7,
                   ftol: float = 1e-9, patience: int = 8, expand: float = 1.5, max_step: float = 8.0) -> SearchOutcome:
    """Maximize ``objective`` from every row of ``theta0`` at once.

    ``objective(theta, rows)`` scores a stack of parameter rows; ``rows``
    gives their positions in the full batch so per-row data (such as a rate
    weight) can be looked up.

    A sweep tries +step and then -step along each coordinate, keeping a move
    only on strict improvement, then tries one extrapolated step along the
    sweep's total displacement (Hooke-Jeeves pattern move). Rows that improved in a sweep enlarge their
    step, the rest halve it. A row stops once its step falls below
    ``min_step`` or ``patience`` consecutive sweeps each improve it by no
    more than ``ftol``.
    """
    theta = np.array(theta0, dtype=float)
    n, d = theta.shape
    f = objective(theta, np.arange(n))
    step = np.full(n, step0)
    done = np.zeros(n, dtype=bool)
    stall = np.zeros(n, dtype=int)
    sweeps = 0
    for sweeps in range(1, iterations + 1):
        active = np.flatnonzero(~done & (step >= min_step))
        if active.size == 0:
            break
        f_start = f[active].copy()
        theta_start = theta[active].copy()
        improved = np.zeros(n, dtype=bool)
        for k in range(d):
            for sign in (1.0, -1.0):
                rows = active if sign > 0 else active[~improved[active]]
                if rows.size == 0:
                    continue
                trial = theta[rows]
                trial[:, k] += sign * step[rows]
                ft = objective(trial, rows)
                better = ft > f[rows]
                if better.any():
                    idx = rows[better]
                    theta[idx] = trial[better]
                    f[idx] = ft[better]
                    improved[idx] = True
        # pattern move: extrapolate along the sweep's net displacement
        moved = active[improved[active]]
        if moved.size:
            trial = 2.0 * theta[moved] - theta_start[improved[active]]
            ft = objective(trial, moved)
            better = ft > f[moved]
            theta[moved[better]] = trial[better]
            f[moved[better]] = ft[better]
        step[active] = np.where(improved[active],
                                np.minimum(step[active] * expand, max_step),
                                step[active] * 0.5)
        stall[active] = np.where(f[active] - f_start <= ftol, stall[active] + 1, 0)
        done[active] = stall[active] >= patience
    return SearchOutcome(theta, f, sweeps)


def multistart(objective: Callable[[np.ndarray, np.ndarray], np.ndarray], dim: int, cfg: SearchConfig,
               stream: tuple = (), seeds: Optional[np.ndarray] = None,
               scale: float = 2.0) -> SearchOutcome:
    """``cfg.restarts`` uniform-random starts in [-scale, scale]^dim, preceded
    by any structured ``seeds`` rows, each refined by :func:`pattern_search`."""
    rng = cfg.rng(*stream)
    starts = rng.uniform(-scale, scale, size=(cfg.restarts, dim))
    if seeds is not None and len(seeds):
        starts = np.vstack([np.asarray(seeds, dtype=float).reshape(-1, dim), starts])
    return pattern_search(objective, starts, cfg.iterations, ftol=cfg.tol)
