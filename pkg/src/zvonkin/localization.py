"""Ramp cutoff of the coefficients outside a ball, and first-exit bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import SDEProblem, evaluate_drift
from .errors import DomainError
from .simulation import PathSolution, euler_maruyama, sample_brownian_batch, solve_problem


def chi_R(R, s):
    """1 on ``[0, R]``, ``R + 1 - s`` on ``(R, R + 1]``, 0 beyond."""
    if not R > 0:
        raise DomainError("R must be positive")
    sa = np.asarray(s, dtype=float)
    if np.any(sa < 0):
        raise DomainError("chi_R takes s >= 0")
    out = np.where(sa <= R, 1.0, np.where(sa <= R + 1, R + 1 - sa, 0.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TruncatedProblem:
    """Coefficients multiplied by ``chi_R(|x|)``, Euclidean norm of the full state.

    Outside the ball the diffusion depends on the whole state, so this is
    not a diagonal problem in the scale-transform sense and is never fed to
    it.
    """

    base: SDEProblem
    radius: float

    @property
    def dim(self):
        return self.base.dim

    def _chi(self, x):
        return np.asarray(chi_R(self.radius, np.linalg.norm(x, axis=-1)))[..., None]

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        return evaluate_drift(self.base, x) * self._chi(x)

    def diffusion_diag(self, x):
        x = np.asarray(x, dtype=float)
        return self.base.diffusion_diag(x) * self._chi(x)


def truncate_problem(p: SDEProblem, R) -> TruncatedProblem:
    if not R > 0:
        raise DomainError("R must be positive")
    return TruncatedProblem(p, float(R))


def first_exit_index(path: PathSolution, R):
    """First step with ``|X| > R`` (``None`` if the path stays in the closed ball).

    For a batch of paths returns one entry per replication.
    """
    states = np.asarray(path.states)
    if states.shape[0] == 0:
        raise DomainError("empty path")
    outside = np.linalg.norm(states, axis=-1) > R
    if outside.ndim == 1:
        hits = np.flatnonzero(outside)
        return int(hits[0]) if len(hits) else None
    return [int(np.argmax(col)) if col.any() else None for col in outside.T]


@dataclass(frozen=True)
class AgreementRow:
    replication: int
    seed: int
    exit_index: int | None
    first_difference: int | None
    agrees_through_exit: bool


def localization_agreement(p: SDEProblem, R, T, h, replications, seed0) -> list[AgreementRow]:
    """Simulate ``p`` and its truncation with identical noise; compare bit for bit."""
    w = sample_brownian_batch(p.dim, T, h, seed0, replications)
    q = truncate_problem(p, R)
    full = solve_problem(p, w)
    cut = euler_maruyama(q.drift, q.diffusion_diag, p.x0, w)
    exits = first_exit_index(full, R)
    rows = []
    for r in range(replications):
        same = np.all(full.states[:, r] == cut.states[:, r], axis=-1)
        diff = np.flatnonzero(~same)
        first_diff = int(diff[0]) if len(diff) else None
        k = exits[r]
        upto = len(same) - 1 if k is None else k
        rows.append(AgreementRow(r, seed0 + r, k, first_diff, bool(np.all(same[: upto + 1]))))
    return rows
