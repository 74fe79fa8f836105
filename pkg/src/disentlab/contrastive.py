"""Contrastive-pair machinery over latent codes and finite distribution families.

Coupled latent pairs share one coordinate and keep all others at least a gap g
apart (or the reverse in shared-rest modes). Over a finite family of k
discrete distributions, the k-way discrimination objective has the analytic
maximum d_JS - log k where d_JS is the generalized Jensen-Shannon divergence,
attained at the normalized-density discriminator; a plain gradient ascent on
the logits verifies the identity numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleGap, NumericFailure

COUPLING_MODES = (
    "shared_noise_shared_rest",
    "shared_noise_random_rest",
    "random_noise_shared_rest",
    "random_noise_random_rest",
)
DEFAULT_MODE = "shared_noise_random_rest"

# One row of stochastic-matrix probabilities may deviate from 1 by round-off.
_ROW_SUM_TOL = 1e-12


def _check_gap(gap: float) -> float:
    gap = float(gap)
    if gap > 2.0:
        raise InfeasibleGap(f"gap {gap} exceeds the width of the latent box [-1, 1]")
    if gap < 0.0 or not math.isfinite(gap):
        raise ValueError(f"gap must lie in [0, 2], got {gap}")
    return gap


@dataclass(frozen=True)
class CouplingConfig:
    """Settings for coupled latent sampling.

    schedule holds (step_threshold, gap) pairs with ascending thresholds and
    non-increasing gaps, evaluated as a piecewise-constant function of the
    training step.
    """

    k: int
    gap: float = 0.0
    mode: str = DEFAULT_MODE
    schedule: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.mode not in COUPLING_MODES:
            raise ValueError(f"mode must be one of {COUPLING_MODES}, got {self.mode!r}")
        _check_gap(self.gap)
        sched = tuple((int(t), float(g)) for t, g in self.schedule)
        for _, g in sched:
            _check_gap(g)
        thresholds = [t for t, _ in sched]
        if thresholds != sorted(thresholds):
            raise ValueError("schedule thresholds must be ascending")
        gaps = [g for _, g in sched]
        if any(b > a for a, b in zip(gaps, gaps[1:])):
            raise ValueError("schedule gaps must be non-increasing")
        object.__setattr__(self, "schedule", sched)


@dataclass(frozen=True)
class PairedLatentBatch:
    """Coupled latent code pairs, one row per draw.

    In random-rest modes c1[n, fixed_index[n]] == c2[n, fixed_index[n]] and
    every other coordinate pair differs by at least the gap; shared-rest modes
    swap the two roles. Noise rows are present only when requested.
    """

    c1: np.ndarray
    c2: np.ndarray
    fixed_index: np.ndarray
    z1: np.ndarray | None = None
    z2: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.c1.shape[0]

    @property
    def k(self) -> int:
        return self.c1.shape[1]

    def csv_rows(self):
        """Rows in the layout I, c1_1..c1_k, c2_1..c2_k."""
        for i in range(self.size):
            yield (int(self.fixed_index[i]), *self.c1[i], *self.c2[i])


def sample_coupled_latents(
    cfg: CouplingConfig, seed, n: int = 1, noise_dim: int = 0
) -> PairedLatentBatch:
    """Draw n coupled latent pairs.

    One coordinate index I per row is drawn uniformly; its shared value is
    uniform on [-1, 1]. Every gapped coordinate pair starts as two draws from
    [-1 + g/2, 1 - g/2]; the larger is pushed up by g/2 and the smaller down
    by g/2, so the pair differs by at least g and stays inside the box.
    """
    gap = _check_gap(cfg.gap)
    rng = np.random.default_rng(seed)
    k, half = cfg.k, 0.5 * gap
    fixed = rng.integers(0, k, size=n)
    shared = rng.uniform(-1.0, 1.0, size=n)
    rows = np.arange(n)

    if cfg.mode.endswith("random_rest"):
        a = rng.uniform(-1.0 + half, 1.0 - half, size=(n, k))
        b = rng.uniform(-1.0 + half, 1.0 - half, size=(n, k))
        up = a > b
        c1 = np.where(up, a + half, a - half)
        c2 = np.where(up, b - half, b + half)
        c1[rows, fixed] = shared
        c2[rows, fixed] = shared
    else:
        base = rng.uniform(-1.0, 1.0, size=(n, k))
        c1 = base.copy()
        c2 = base.copy()
        a = rng.uniform(-1.0 + half, 1.0 - half, size=n)
        b = rng.uniform(-1.0 + half, 1.0 - half, size=n)
        up = a > b
        c1[rows, fixed] = np.where(up, a + half, a - half)
        c2[rows, fixed] = np.where(up, b - half, b + half)

    z1 = z2 = None
    if noise_dim > 0:
        z1 = rng.standard_normal((n, noise_dim))
        z2 = z1.copy() if cfg.mode.startswith("shared_noise") else rng.standard_normal(
            (n, noise_dim)
        )
    return PairedLatentBatch(c1, c2, fixed, z1, z2)


def gap_schedule(cfg: CouplingConfig, step: int) -> float:
    """Gap of the last schedule entry whose threshold is <= step.

    Steps before the first threshold use the first entry's gap.
    """
    if not cfg.schedule:
        raise ValueError("schedule is empty")
    gap = cfg.schedule[0][1]
    for threshold, g in cfg.schedule:
        if threshold <= step:
            gap = g
        else:
            break
    return gap


def scheduled_config(cfg: CouplingConfig, step: int) -> CouplingConfig:
    """Copy of cfg with the gap the schedule assigns to the given step."""
    return replace(cfg, gap=gap_schedule(cfg, step))


@dataclass(frozen=True)
class DiscreteDistributionFamily:
    """k probability distributions over a shared finite support of size m."""

    probs: np.ndarray  # (k, m), row-stochastic

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"probs must be a k x m matrix, got shape {p.shape}")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be nonnegative")
        sums = p.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _ROW_SUM_TOL):
            worst = float(np.abs(sums - 1.0).max())
            raise ValueError(f"rows must sum to 1 within {_ROW_SUM_TOL}, worst deviation {worst:.3e}")
        object.__setattr__(self, "probs", p)

    @property
    def k(self) -> int:
        return self.probs.shape[0]

    @property
    def support_size(self) -> int:
        return self.probs.shape[1]

    def to_csv(self) -> str:
        lines = [f"{self.k},{self.support_size}"]
        for row in self.probs:
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteDistributionFamily":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        k, m = (int(v) for v in lines[0].split(","))
        if len(lines) != k + 1:
            raise ValueError(f"expected {k} probability rows, got {len(lines) - 1}")
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
        p = np.asarray(rows, dtype=float)
        if p.shape != (k, m):
            raise ValueError(f"expected shape {(k, m)}, got {p.shape}")
        return cls(p)


@dataclass(frozen=True)
class SoftmaxDiscriminator:
    """k-way discriminator over a finite support, stored as logits."""

    logits: np.ndarray  # (m, k)

    def __post_init__(self):
        l = np.asarray(self.logits, dtype=float)
        if l.ndim != 2:
            raise ValueError(f"logits must be an m x k table, got shape {l.shape}")
        object.__setattr__(self, "logits", l)

    @property
    def probs(self) -> np.ndarray:
        """Row-stochastic outputs; -inf logits give exact zeros."""
        top = self.logits.max(axis=1, keepdims=True)
        safe = np.where(np.isneginf(top), 0.0, top)
        e = np.exp(self.logits - safe)
        total = e.sum(axis=1, keepdims=True)
        uniform = np.full(self.logits.shape[1], 1.0 / self.logits.shape[1])
        return np.where(total > 0.0, e / np.where(total > 0.0, total, 1.0), uniform)


def js_divergence(family: DiscreteDistributionFamily) -> float:
    """Generalized Jensen-Shannon divergence: mean KL of each row to the mixture."""
    p = family.probs
    mix = p.mean(axis=0)
    mask = p > 0.0
    ratio = np.divide(p, mix[None, :], out=np.ones_like(p), where=mask)
    terms = np.where(mask, p * np.log(ratio, out=np.zeros_like(p), where=mask), 0.0)
    return float(terms.sum() / family.k)


def optimal_discriminator(family: DiscreteDistributionFamily) -> SoftmaxDiscriminator:
    """Analytic maximizer H_i(x) = Q_i(x) / Σ_j Q_j(x) of the discrimination objective.

    Support points with zero total mass carry no objective weight; they get
    uniform rows.
    """
    p = family.probs
    z = p.sum(axis=0)
    if not np.any(z > 0.0):
        raise ValueError("family has empty effective support")
    m, k = family.support_size, family.k
    h = np.full((m, k), 1.0 / k)
    pos = z > 0.0
    h[pos] = (p[:, pos] / z[pos]).T
    logits = np.full((m, k), -np.inf)
    hot = h > 0.0
    logits[hot] = np.log(h[hot])
    return SoftmaxDiscriminator(logits)


def cross_entropy_objective(
    family: DiscreteDistributionFamily, h: SoftmaxDiscriminator
) -> float:
    """(1/k) Σ_i Σ_x Q_i(x) log H_i(x), with a -inf sentinel when mass meets a zero."""
    q = family.probs
    out = h.probs.T  # (k, m)
    if out.shape != q.shape:
        raise ValueError(f"discriminator shape {h.logits.shape} does not match family")
    mask = q > 0.0
    if np.any(out[mask] <= 0.0):
        return -math.inf
    return float(np.sum(q[mask] * np.log(out[mask])) / family.k)


def train_discriminator(
    family: DiscreteDistributionFamily,
    iters: int = 30_000,
    step: float = 0.5,
    seed=None,
) -> SoftmaxDiscriminator:
    """Full-batch gradient ascent on the logits of the discrimination objective.

    Deterministic: logits start at zero and the gradient is exact, so `seed`
    is accepted only for interface uniformity. Stops early once the gradient
    is numerically zero; raises NumericFailure if the objective decreases
    persistently (which a correct gradient cannot do at this step size).
    """
    del seed  # reserved; the ascent has no stochastic component
    q = family.probs
    k = family.k
    z = q.sum(axis=0)  # (m,)
    qt = q.T  # (m, k)
    logits = np.zeros((family.support_size, k))
    last = -math.inf
    drops = 0
    for it in range(iters):
        top = logits.max(axis=1, keepdims=True)
        e = np.exp(logits - top)
        h = e / e.sum(axis=1, keepdims=True)
        grad = (qt - z[:, None] * h) / k
        if np.abs(grad).max() < 1e-12:
            break
        logits += step * grad
        if it % 50 == 0:
            disc = SoftmaxDiscriminator(logits)
            val = cross_entropy_objective(family, disc)
            if val < last - 1e-9:
                drops += 1
                if drops >= 5:
                    raise NumericFailure(
                        f"discrimination objective diverged ({last!r} -> {val!r})"
                    )
            else:
                drops = 0
            last = val
    return SoftmaxDiscriminator(logits)
