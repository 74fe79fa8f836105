"""Unsupervised model selection over pools of (generator, encoder) pairs.

Centrality ranks each model by how well its encoder recovers the latent codes
of every other model in the pool (and vice versa, through symmetrization of
the cross-score matrix): the premise is that well-disentangled models land
close together while poor ones scatter. Pairwise-relevance baselines (Lasso
and Spearman) and a cross-metric rank-correlation analysis share the pool
plumbing.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .linalg import SymMatrix, eig_sym
from .lingauss import LinearGenerator, matched_generator, posterior
from .metrics import (
    Encoder,
    FactorVaeConfig,
    GeneratorSampler,
    LinearEncoder,
    _standardize_columns,
    factorvae_metric,
    lasso_fit,
    spearman_rho,
)

UDR_EPS = 1e-12
UDR_VARIANTS = ("lasso", "spearman")


@dataclass(frozen=True)
class ModelPool:
    """(generator, encoder, label) triples sharing one code dimension."""

    entries: tuple[tuple[LinearGenerator, Encoder, str], ...]

    def __post_init__(self):
        entries = tuple((g, e, str(label)) for g, e, label in self.entries)
        if len(entries) < 2:
            raise ValueError(f"a pool needs at least 2 models, got {len(entries)}")
        dims = {e.code_dim for _, e, _ in entries}
        if len(dims) != 1:
            raise ValueError(f"encoders must share one code dimension, got {sorted(dims)}")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, _, label in self.entries)

    def generator(self, i: int) -> LinearGenerator:
        return self.entries[i][0]

    def encoder(self, i: int) -> Encoder:
        return self.entries[i][1]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Raw cross-scores A (diagonal unused, stored 0), B = (A+Aᵀ)/2, row means s."""

    a: np.ndarray
    b: np.ndarray
    s: np.ndarray

    @classmethod
    def from_cross_scores(cls, a) -> "SimilarityMatrix":
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
            raise ValueError(f"expected an N x N matrix with N >= 2, got shape {a.shape}")
        np.fill_diagonal(a, 0.0)
        b = 0.5 * (a + a.T)
        s = b.sum(axis=1) / (a.shape[0] - 1)
        a.flags.writeable = False
        b.flags.writeable = False
        s.flags.writeable = False
        return cls(a, b, s)

    @property
    def size(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class SelectionReport:
    """Per-model scores with the argmax selection (ties go to the lowest index)."""

    method: str
    scores: np.ndarray
    selected: int
    stderr: np.ndarray | None = None
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        if scores.ndim != 1 or scores.size < 1:
            raise ValueError("scores must be a nonempty vector")
        if self.selected != int(np.argmax(scores)):
            raise ValueError(
                f"selected index {self.selected} is not the argmax of the scores"
            )
        if self.stderr is not None:
            stderr = np.asarray(self.stderr, dtype=float)
            if stderr.shape != scores.shape:
                raise ValueError("stderr must align with scores")
            object.__setattr__(self, "stderr", stderr)
        if self.labels and len(self.labels) != scores.size:
            raise ValueError("labels must align with scores")
        object.__setattr__(self, "scores", scores)


def cross_score(enc: Encoder, gen: LinearGenerator, cfg: FactorVaeConfig) -> float:
    """Vote-metric score of encoder enc against groups generated by gen.

    The generator's own latent codes act as ground-truth factors, so the value
    measures how well enc recovers the code structure of gen.
    """
    return factorvae_metric(GeneratorSampler(gen), enc, cfg).score


def _pair_seed(master: int, i: int, j: int) -> int:
    return int(np.random.SeedSequence([master, i, j]).generate_state(1)[0])


def model_centrality(
    pool: ModelPool,
    cfg: FactorVaeConfig,
    metric=cross_score,
    threads: int = 1,
) -> tuple[SimilarityMatrix, SelectionReport]:
    """Fill the cross-score matrix, symmetrize, and select the argmax row mean.

    Each (i, j) evaluation runs under its own seed derived from (cfg.seed, i,
    j), so results are identical for any evaluation order or thread count.
    """
    n = pool.size
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]

    def run(pair):
        i, j = pair
        pair_cfg = replace(cfg, seed=_pair_seed(cfg.seed, i, j))
        return i, j, float(metric(pool.encoder(i), pool.generator(j), pair_cfg))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            results = list(pool_exec.map(run, pairs))
    else:
        results = [run(pair) for pair in pairs]
    a = np.zeros((n, n))
    for i, j, value in results:
        a[i, j] = value
    sim = SimilarityMatrix.from_cross_scores(a)
    report = SelectionReport(
        "model_centrality", sim.s.copy(), int(np.argmax(sim.s)), None, pool.labels
    )
    return sim, report


def _subsampled_row_means(
    scores: np.ndarray, fraction: float, trials: int, seed
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of off-diagonal row means over random subsets.

    Subset indices are sorted before summing, so fraction=1.0 walks each row
    in the same order as the full row mean and reproduces it bitwise; the
    all-trials-identical case is reported as exactly zero standard error.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    n = scores.shape[0]
    m = math.ceil(fraction * (n - 1))
    if m < 1:
        raise ValueError("subset size is zero")
    rng = np.random.default_rng(seed)
    per_trial = np.empty((trials, n))
    others = [np.array([j for j in range(n) if j != i]) for i in range(n)]
    for t in range(trials):
        for i in range(n):
            subset = np.sort(rng.choice(others[i], size=m, replace=False))
            per_trial[t, i] = scores[i, subset].sum() / m
    identical = np.all(per_trial == per_trial[0], axis=0)
    means = np.where(identical, per_trial[0], per_trial.mean(axis=0))
    stderr = np.where(identical, 0.0, per_trial.std(axis=0) / math.sqrt(trials))
    return means, stderr


def subsampled_centrality(
    pool: ModelPool,
    fraction: float = 0.8,
    trials: int = 100,
    seed=0,
    cfg: FactorVaeConfig | None = None,
    metric=cross_score,
    sim: SimilarityMatrix | None = None,
    threads: int = 1,
) -> SelectionReport:
    """Centrality scores where each row mean uses a random subset of the others.

    Cross-scores are computed once (or taken from a precomputed similarity
    matrix); only the averaging is resampled, per model and per trial.
    """
    if sim is None:
        sim, _ = model_centrality(pool, cfg if cfg is not None else FactorVaeConfig(), metric, threads)
    means, stderr = _subsampled_row_means(sim.b, fraction, trials, seed)
    return SelectionReport(
        "model_centrality", means, int(np.argmax(means)), stderr, pool.labels
    )


# ---------------------------------------------------------------------------
# pairwise-relevance baselines


def udr_relevance(
    q_i: Encoder,
    q_j: Encoder,
    samples: np.ndarray,
    variant: str = "lasso",
    lasso_lambda: float = 0.01,
) -> np.ndarray:
    """k×k nonnegative relevance of q_j's codes for predicting q_i's codes.

    The lasso variant regresses each (standardized) code of q_i on all
    (standardized) codes of q_j; the spearman variant takes absolute rank
    correlations. Zero-variance codes produce zero rows/columns with a
    warning.
    """
    if variant not in UDR_VARIANTS:
        raise ValueError(f"variant must be one of {UDR_VARIANTS}, got {variant!r}")
    x = np.asarray(samples, dtype=float)
    ci = q_i.encode(x)
    cj = q_j.encode(x)
    if ci.shape[1] != cj.shape[1]:
        raise ValueError(f"encoders disagree on code dimension: {ci.shape[1]} vs {cj.shape[1]}")
    k = ci.shape[1]
    if x.shape[0] < 10 * k:
        raise ValueError(f"need at least {10 * k} samples for {k} codes, got {x.shape[0]}")
    dead = [a for a in range(k) if np.ptp(ci[:, a]) == 0.0 or np.ptp(cj[:, a]) == 0.0]
    if dead:
        warnings.warn(f"zero-variance codes {dead}; their relevance rows/columns are zeroed")
    relevance = np.zeros((k, k))
    if variant == "lasso":
        zi = _standardize_columns(ci)
        zj = _standardize_columns(cj)
        for a in range(k):
            relevance[a] = np.abs(lasso_fit(zj, zi[:, a], lasso_lambda))
    else:
        for a in range(k):
            for b in range(k):
                rho = spearman_rho(ci[:, a], cj[:, b])
                relevance[a, b] = 0.0 if math.isnan(rho) else abs(rho)
    return relevance


def udr_score(relevance) -> float:
    """Row/column peakedness of a nonnegative k×k relevance matrix, in [0, 1]."""
    r = np.asarray(relevance, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {r.shape}")
    if np.any(r < 0.0):
        raise ValueError("relevance entries must be nonnegative")
    rows = (r.max(axis=1) / (r.sum(axis=1) + UDR_EPS)).mean()
    cols = (r.max(axis=0) / (r.sum(axis=0) + UDR_EPS)).mean()
    return float(0.5 * (rows + cols))


def udr_pair_scores(
    pool: ModelPool,
    samples: np.ndarray,
    variant: str = "lasso",
    lasso_lambda: float = 0.01,
) -> np.ndarray:
    """All-pairs relevance scores; entry (i, j) scores encoder i probed by j."""
    n = pool.size
    pair_scores = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            relevance = udr_relevance(
                pool.encoder(i), pool.encoder(j), samples, variant, lasso_lambda
            )
            pair_scores[i, j] = udr_score(relevance)
    return pair_scores


def udr_select(
    pool: ModelPool,
    samples: np.ndarray,
    variant: str = "lasso",
    lasso_lambda: float = 0.01,
    fraction: float = 1.0,
    trials: int = 1,
    seed=0,
    pair_scores: np.ndarray | None = None,
) -> SelectionReport:
    """Rank pool models by their mean pairwise relevance score against the rest.

    A precomputed `pair_scores` matrix skips the all-pairs evaluation; the
    averaging (and any subsampling) still runs on top of it.
    """
    if pair_scores is None:
        pair_scores = udr_pair_scores(pool, samples, variant, lasso_lambda)
    means, stderr = _subsampled_row_means(pair_scores, fraction, trials, seed)
    return SelectionReport(
        f"udr_{variant}", means, int(np.argmax(means)), stderr, pool.labels
    )


def rank_correlation_analysis(metric_vectors) -> SymMatrix:
    """Pairwise rank correlation of named score vectors; NaN marks undefined cells."""
    vectors = [np.asarray(values, dtype=float) for _, values in metric_vectors]
    if len(vectors) < 1:
        raise ValueError("need at least one metric vector")
    lengths = {v.shape for v in vectors}
    if len(lengths) != 1 or vectors[0].ndim != 1:
        raise ValueError(f"metric vectors must share one length, got {lengths}")
    n = len(vectors)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = spearman_rho(vectors[i], vectors[j])
    return SymMatrix(out)


def noisy_linear_pool(
    sigma: SymMatrix, r: int, noise_levels, seed=0, noise_scale=1.0
) -> ModelPool:
    """Pool sharing one exact top-r generator, with encoder noise per model.

    The generator's code map is the closed-form optimum (top-r eigenvectors
    scaled by their eigenvalues); model m's encoder perturbs the exact
    posterior-mean map W by noise_level·noise_scale·(‖W‖_F/√W.size)·G with
    G standard normal under a per-model seed.  At noise_scale=1 a unit level
    matches the root-mean-square entry of W; majority-vote metrics barely
    react until the perturbation is a few times that, so pools meant to span
    a metric's dynamic range should raise noise_scale rather than stretch
    the level grid.
    """
    noise_scale = float(noise_scale)
    if noise_scale < 0.0:
        raise ValueError(f"noise_scale must be nonnegative, got {noise_scale}")
    w, v = eig_sym(sigma)
    code_map = v[:, :r] * np.sqrt(w[:r])
    gen = matched_generator(sigma, code_map)
    base = posterior(gen).mean_map
    scale = noise_scale * float(np.linalg.norm(base)) / math.sqrt(base.size)
    entries = []
    for m, level in enumerate(noise_levels):
        level = float(level)
        if level < 0.0:
            raise ValueError(f"noise levels must be nonnegative, got {level}")
        noise_rng = np.random.default_rng(np.random.SeedSequence([seed, m]))
        weight = base + level * scale * noise_rng.standard_normal(base.shape)
        entries.append((gen, LinearEncoder(weight), f"noise_{level:g}"))
    return ModelPool(tuple(entries))
