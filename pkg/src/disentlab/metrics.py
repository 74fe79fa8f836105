"""Disentanglement and sample-quality metrics over encoded factor datasets.

The vote-based factor metric, Lasso-importance disentanglement (DCI), the
kernel independence score dHSIC, inception score, and reverse KL all operate
on plain arrays plus a small Encoder interface, so closed-form linear models
and table fixtures exercise the same code paths. Spearman rank correlation
and a dense coordinate-descent Lasso solver are shared statistical kernels.
"""
from __future__ import annotations

import csv
import hashlib
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateEncoder, NumericFailure
from .lingauss import LinearGenerator, posterior

LASSO_TOL = 1e-10
LASSO_MAX_ITERS = 100_000
_ZERO_STD_TOL = 1e-15
_ROW_SUM_TOL = 1e-9


# ---------------------------------------------------------------------------
# datasets and encoders


@dataclass(frozen=True)
class FactorDataset:
    """Samples paired row-by-row with ground-truth factor values.

    factor_cardinalities lists the number of distinct grid values per factor;
    0 marks a continuous factor.
    """

    samples: np.ndarray  # (n, p)
    factors: np.ndarray  # (n, k_hat)
    factor_cardinalities: tuple[int, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        f = np.asarray(self.factors, dtype=float)
        if s.ndim != 2 or f.ndim != 2:
            raise ValueError("samples and factors must be 2-d arrays")
        if s.shape[0] != f.shape[0] or s.shape[0] < 1:
            raise ValueError(
                f"need equal, positive row counts, got {s.shape[0]} and {f.shape[0]}"
            )
        cards = tuple(int(c) for c in self.factor_cardinalities)
        if not cards:
            cards = (0,) * f.shape[1]
        if len(cards) != f.shape[1]:
            raise ValueError(
                f"expected {f.shape[1]} cardinalities, got {len(cards)}"
            )
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "factors", f)
        object.__setattr__(self, "factor_cardinalities", cards)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def sample_dim(self) -> int:
        return self.samples.shape[1]

    @property
    def n_factors(self) -> int:
        return self.factors.shape[1]

    def save(self, directory) -> None:
        """Write samples.csv and factors.csv with aligned row indices."""
        directory = Path(directory)
        _write_matrix_csv(directory / "samples.csv", "x", self.samples)
        _write_matrix_csv(directory / "factors.csv", "c", self.factors)

    @classmethod
    def load(cls, directory) -> "FactorDataset":
        directory = Path(directory)
        samples = _read_matrix_csv(directory / "samples.csv")
        factors = _read_matrix_csv(directory / "factors.csv")
        return cls(samples, factors)


def _write_matrix_csv(path: Path, prefix: str, m: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"{prefix}{j}" for j in range(m.shape[1])])
        for row in m:
            writer.writerow([f"{v:.17g}" for v in row])


def _read_matrix_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.asarray([[float(v) for v in row] for row in rows[1:]], dtype=float)


class Encoder:
    """Deterministic map from sample vectors to code vectors."""

    @property
    def code_dim(self) -> int:
        raise NotImplementedError

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Encode a batch of samples, one row per sample."""
        raise NotImplementedError


@dataclass(frozen=True)
class LinearEncoder(Encoder):
    """Codes are weight @ sample; rows of weight define the code dimensions."""

    weight: np.ndarray  # (k, p)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        if w.ndim != 2:
            raise ValueError(f"weight must be a k x p matrix, got shape {w.shape}")
        object.__setattr__(self, "weight", w)

    @classmethod
    def from_generator(cls, gen: LinearGenerator) -> "LinearEncoder":
        """The generator's own posterior-mean map x -> Bᵀ Σ⁻¹ x."""
        return cls(posterior(gen).mean_map)

    @property
    def code_dim(self) -> int:
        return self.weight.shape[0]

    def encode(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.weight.T


@dataclass(frozen=True)
class FunctionEncoder(Encoder):
    """Wraps an arbitrary batch map, e.g. a table lookup over test fixtures."""

    fn: object  # callable (n, p) -> (n, k)
    dim: int

    @property
    def code_dim(self) -> int:
        return self.dim

    def encode(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
        if out.ndim != 2 or out.shape[1] != self.dim:
            raise ValueError(f"encoder map returned shape {out.shape}, expected (n, {self.dim})")
        return out


@dataclass(frozen=True)
class PseudoNoiseEncoder(Encoder):
    """Codes that depend on the sample bytes only through a hash.

    Deterministic across runs yet statistically unrelated to any factor: the
    chance-level fixture for vote-based metrics.
    """

    dim: int
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.dim <= 8:
            raise ValueError(f"code dimension must be in 1..8, got {self.dim}")

    @property
    def code_dim(self) -> int:
        return self.dim

    def encode(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(np.asarray(x, dtype=float))
        key = str(self.seed).encode()
        out = np.empty((x.shape[0], self.dim))
        for i in range(x.shape[0]):
            digest = hashlib.blake2b(
                x[i].tobytes(), digest_size=8 * self.dim, key=key
            ).digest()
            out[i] = np.frombuffer(digest, dtype="<u8") / 2.0**64
        return out


@dataclass(frozen=True)
class TransformedEncoder(Encoder):
    """Base encoder with its codes permuted and rescaled."""

    base: Encoder
    permutation: tuple[int, ...]
    scales: tuple[float, ...]

    def __post_init__(self):
        k = self.base.code_dim
        if sorted(self.permutation) != list(range(k)):
            raise ValueError(f"permutation must rearrange 0..{k - 1}")
        if len(self.scales) != k:
            raise ValueError(f"expected {k} scales, got {len(self.scales)}")

    @property
    def code_dim(self) -> int:
        return self.base.code_dim

    def encode(self, x: np.ndarray) -> np.ndarray:
        codes = self.base.encode(x)
        return codes[:, self.permutation] * np.asarray(self.scales)


# ---------------------------------------------------------------------------
# group samplers for the vote-based metric


class GroupSampler:
    """Sampling interface producing reference batches and fixed-factor groups."""

    @property
    def n_factors(self) -> int:
        raise NotImplementedError

    def sample_reference(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n unconstrained samples, one row each."""
        raise NotImplementedError

    def sample_group(self, factor: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """A group of samples sharing one value of the given factor."""
        raise NotImplementedError


@dataclass(frozen=True)
class GeneratorSampler(GroupSampler):
    """Groups drawn from a linear generator, its latent codes as ground truth."""

    gen: LinearGenerator

    @property
    def n_factors(self) -> int:
        return self.gen.r

    def _push(self, c: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((c.shape[0], self.gen.d))
        return c @ self.gen.B.T + z @ self.gen.A.T

    def sample_reference(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._push(rng.standard_normal((n, self.gen.r)), rng)

    def sample_group(self, factor: int, size: int, rng: np.random.Generator) -> np.ndarray:
        c = rng.standard_normal((size, self.gen.r))
        c[:, factor] = rng.standard_normal()
        return self._push(c, rng)


@dataclass(frozen=True)
class SyntheticFactorSampler(GroupSampler):
    """Uniform factors on [-1, 1] pushed through an arbitrary map (default: identity)."""

    k: int
    transform: object = None  # callable (n, k) -> (n, p)

    @property
    def n_factors(self) -> int:
        return self.k

    def _push(self, f: np.ndarray) -> np.ndarray:
        if self.transform is None:
            return f
        return np.asarray(self.transform(f), dtype=float)

    def sample_reference(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._push(rng.uniform(-1.0, 1.0, size=(n, self.k)))

    def sample_group(self, factor: int, size: int, rng: np.random.Generator) -> np.ndarray:
        f = rng.uniform(-1.0, 1.0, size=(size, self.k))
        f[:, factor] = rng.uniform(-1.0, 1.0)
        return self._push(f)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class MetricReport:
    """Named scalar score with optional per-dimension breakdown and pair matrix."""

    name: str
    score: float
    detail: tuple[tuple[str, float], ...] = ()
    matrix: np.ndarray | None = None

    def to_csv(self) -> str:
        lines = ["metric,score,detail_key,detail_value"]
        if self.detail:
            for key, value in self.detail:
                lines.append(f"{self.name},{self.score:.12g},{key},{value:.12g}")
        else:
            lines.append(f"{self.name},{self.score:.12g},,")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# vote-based factor metric


@dataclass(frozen=True)
class FactorVaeConfig:
    """Sample counts for the vote-based metric evaluation."""

    groups_per_factor: int = 100
    group_size: int = 100
    reference_samples: int = 10_000
    variance_floor: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        for name in ("groups_per_factor", "group_size", "reference_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.variance_floor > 0.0:
            raise ValueError("variance_floor must be positive")


def factorvae_metric(
    sampler: GroupSampler, enc: Encoder, cfg: FactorVaeConfig
) -> MetricReport:
    """Majority-vote factor classification accuracy from argmin-variance votes.

    Per group (one factor fixed), every member is encoded, each code dimension
    is normalized by its reference-batch variance, and the group votes for the
    dimension with the smallest normalized variance. A majority classifier
    maps each vote to the factor it most frequently co-occurs with; the score
    is that classifier's accuracy. Dimensions whose reference variance falls
    below the floor are excluded from voting.
    """
    k_hat = sampler.n_factors
    k = enc.code_dim
    if k < k_hat:
        raise ValueError(f"encoder has {k} codes but {k_hat} factors need votes")
    rng = np.random.default_rng(cfg.seed)
    ref_codes = enc.encode(sampler.sample_reference(cfg.reference_samples, rng))
    ref_var = ref_codes.var(axis=0)
    active = ref_var >= cfg.variance_floor
    if not np.any(active):
        raise DegenerateEncoder(
            f"all {k} code dimensions fall below the variance floor {cfg.variance_floor}"
        )
    votes = np.zeros((k, k_hat))
    for factor in range(k_hat):
        for _ in range(cfg.groups_per_factor):
            group = enc.encode(sampler.sample_group(factor, cfg.group_size, rng))
            ratio = np.full(k, np.inf)
            ratio[active] = group.var(axis=0)[active] / ref_var[active]
            votes[int(np.argmin(ratio)), factor] += 1.0
    score = float(votes.max(axis=1).sum() / votes.sum())
    majority = votes.argmax(axis=1)
    per_factor = np.zeros(k_hat)
    for j in range(k):
        per_factor[majority[j]] += votes[j, majority[j]]
    detail = tuple(
        (f"factor_{i}_accuracy", float(per_factor[i] / cfg.groups_per_factor))
        for i in range(k_hat)
    )
    return MetricReport("factorvae", score, detail, votes)


def metric_matrix_reduction(m: np.ndarray, normalized: bool = True) -> float:
    """Sum of the top k̂ row maxima of a k×k̂ score matrix, optionally / k̂."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    k, k_hat = m.shape
    if k < k_hat:
        raise ValueError(f"need at least as many codes as factors, got {k} < {k_hat}")
    row_max = np.sort(m.max(axis=1))[::-1]
    total = float(row_max[:k_hat].sum())
    return total / k_hat if normalized else total


# ---------------------------------------------------------------------------
# Lasso-importance disentanglement


def _standardize_columns(m: np.ndarray) -> np.ndarray:
    centered = m - m.mean(axis=0)
    std = centered.std(axis=0)
    out = np.zeros_like(centered)
    live = std > _ZERO_STD_TOL
    out[:, live] = centered[:, live] / std[live]
    return out


def dci_disentanglement(
    ds: FactorDataset, enc: Encoder, lasso_lambda: float = 0.01
) -> MetricReport:
    """Disentanglement from Lasso relevance: D_i = 1 - H(W_i), H in base k̂.

    R[i, j] is the absolute Lasso coefficient of code i when regressing
    (standardized) factor j on all (standardized) codes; W normalizes each
    code's row. Codes with an all-zero relevance row carry no information and
    are excluded from the average with a warning.
    """
    k_hat = ds.n_factors
    if k_hat < 2:
        raise ValueError("need at least 2 factors for a meaningful entropy base")
    codes = enc.encode(ds.samples)
    k = codes.shape[1]
    if ds.n < 10 * k:
        raise ValueError(f"need at least {10 * k} rows to regress {k} codes, got {ds.n}")
    x = _standardize_columns(codes)
    y = _standardize_columns(ds.factors)
    relevance = np.empty((k, k_hat))
    for j in range(k_hat):
        relevance[:, j] = np.abs(lasso_fit(x, y[:, j], lasso_lambda))
    row_sum = relevance.sum(axis=1)
    live = row_sum > 0.0
    if not np.any(live):
        raise DegenerateEncoder("every code has zero relevance to every factor")
    if not np.all(live):
        dead = [i for i in range(k) if not live[i]]
        warnings.warn(f"codes {dead} have all-zero relevance rows and are excluded")
    w = relevance[live] / row_sum[live, None]
    entropy = np.where(w > 0.0, -w * np.log(np.where(w > 0.0, w, 1.0)), 0.0).sum(axis=1)
    per_code = 1.0 - entropy / math.log(k_hat)
    score = float(per_code.mean())
    live_idx = [i for i in range(k) if live[i]]
    detail = tuple(
        (f"code_{i}_disentanglement", float(d)) for i, d in zip(live_idx, per_code)
    )
    return MetricReport("dci", score, detail, relevance)


# ---------------------------------------------------------------------------
# independence and sample-quality scores


def dhsic(samples: np.ndarray) -> float:
    """Kernel independence score of the columns of an n×k sample matrix.

    Per coordinate the kernel is exp(-|xᵢ - xⱼ| / h²) with h the median of
    the pairwise distances of that coordinate; a zero median falls back to
    bandwidth 1.0 with a warning. Returns the three-term estimator
    (1/n²)ΣᵢⱼΠ K + (1/n^{2k})Π Σᵢⱼ K - (2/n^{k+1})Σᵢ Π Σⱼ K.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError(f"need an n x k matrix with n >= 2, k >= 2, got shape {x.shape}")
    n, k = x.shape
    upper = np.triu_indices(n, 1)
    joint = np.ones((n, n))
    product_term = 1.0
    row_products = np.ones(n)
    for col in range(k):
        dist = np.abs(x[:, col, None] - x[None, :, col])
        h = float(np.median(dist[upper]))
        if h == 0.0:
            warnings.warn(f"coordinate {col} has zero median distance; bandwidth set to 1.0")
            h = 1.0
        kernel = np.exp(-dist / (h * h))
        joint *= kernel
        product_term *= kernel.sum() / (n * n)
        row_products *= kernel.sum(axis=1) / n
    t1 = joint.sum() / (n * n)
    t3 = 2.0 * row_products.mean()
    return float(t1 + product_term - t3)


def inception_score(p: np.ndarray) -> float:
    """exp(mean KL(row ‖ column mean)) of an n×L row-stochastic matrix."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValueError(f"expected an n x L matrix, got shape {p.shape}")
    if np.any(p < 0.0) or np.any(np.abs(p.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
        raise ValueError("rows must be probability vectors")
    marginal = p.mean(axis=0)
    mask = p > 0.0
    ratio = np.divide(p, marginal[None, :], out=np.ones_like(p), where=mask)
    kl_rows = np.where(mask, p * np.log(ratio, out=np.zeros_like(p), where=mask), 0.0).sum(axis=1)
    return float(np.exp(kl_rows.mean()))


def reverse_kl(gen_counts, true_counts, smoothing: float = 1e-9) -> float:
    """KL(generated label law ‖ true label law) after additive count smoothing."""
    g = np.asarray(gen_counts, dtype=float)
    t = np.asarray(true_counts, dtype=float)
    if g.shape != t.shape or g.ndim != 1:
        raise ValueError("count vectors must share one length")
    if np.any(g < 0.0) or np.any(t < 0.0) or g.sum() <= 0.0 or t.sum() <= 0.0:
        raise ValueError("counts must be nonnegative with a positive total each")
    g = g + smoothing
    t = t + smoothing
    g /= g.sum()
    t /= t.sum()
    return float(np.sum(g * np.log(g / t)))


# ---------------------------------------------------------------------------
# statistical kernels


def _fractional_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts
    average = starts + (counts + 1) / 2.0
    return average[inverse]


def spearman_rho(a, b) -> float:
    """Pearson correlation of fractional ranks; NaN when either side is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length vectors of size >= 2")
    ra = _fractional_ranks(a)
    rb = _fractional_ranks(b)
    da = ra - ra.mean()
    db = rb - rb.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        return math.nan
    return float(da @ db) / denom


def _soft_threshold(value: float, level: float) -> float:
    if value > level:
        return value - level
    if value < -level:
        return value + level
    return 0.0


def lasso_fit(
    x: np.ndarray,
    y: np.ndarray,
    lam: float,
    max_iters: int = LASSO_MAX_ITERS,
    tol: float = LASSO_TOL,
) -> np.ndarray:
    """Coordinate-descent minimizer of (1/2n)‖y - Xw‖² + λ‖w‖₁.

    Columns are used exactly as given — no internal standardization — so the
    univariate closed form w = soft(xᵀy/n, λ)/(xᵀx/n) holds verbatim.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0] or x.shape[0] < 1:
        raise ValueError(f"incompatible shapes {x.shape} and {y.shape}")
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    n, q = x.shape
    col_sq = (x * x).sum(axis=0) / n
    w = np.zeros(q)
    residual = y.copy()
    for _ in range(max_iters):
        worst = 0.0
        for j in range(q):
            if col_sq[j] == 0.0:
                continue
            rho = float(x[:, j] @ residual) / n + col_sq[j] * w[j]
            new = _soft_threshold(rho, lam) / col_sq[j]
            delta = new - w[j]
            if delta != 0.0:
                residual -= delta * x[:, j]
                w[j] = new
                worst = max(worst, abs(delta))
        if worst < tol:
            return w
    raise NumericFailure(f"coordinate descent did not converge in {max_iters} sweeps")
