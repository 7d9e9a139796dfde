"""Two-component generative mixture over similarity vectors, fitted by EM.

Each feature is modeled independently per component (matched vs unmatched)
with a configurable family: Gaussian, Exponential, or a binned Multinomial.
The E-step computes the posterior responsibility that a pair is matched; the
M-step applies responsibility-weighted maximum-likelihood updates.  Scores are
log posterior odds computed in log space.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .network import VertexId
from .similarity import (
    N_FEATURES,
    SimilarityContext,
    SimilarityVector,
    UnscorablePair,
    similarity_vector,
)

LOG_2PI = math.log(2.0 * math.pi)
MIN_VARIANCE = 1e-6
EXP_SHIFT = 1e-9
MULTINOMIAL_SMOOTHING = 1e-3
SCORE_CLAMP = 700.0
# Re-initialization schedule when a component collapses: fraction of vectors
# seeded into the matched component, largest L1 norms first.
INIT_TOP_FRACTIONS = (0.1, 0.2, 0.3)

# Zero-inflated columns (the structural kernel, the triangle ratio, and the
# venue-rarity overlap) degenerate under Gaussian or Exponential fits: one
# component collapses onto the point mass at zero and the likelihood ratio
# turns into a hard rule.  Binned multinomials keep those ratios bounded.
DEFAULT_FAMILIES = (
    "multinomial",
    "multinomial",
    "gaussian",
    "exponential",
    "exponential",
    "multinomial",
)


class FittingError(RuntimeError):
    """Raised when the mixture cannot be fitted on the given training set."""


# -- feature families -------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    mean: float
    var: float

    def log_density(self, x: float) -> float:
        return -0.5 * (LOG_2PI + math.log(self.var)) - (x - self.mean) ** 2 / (2.0 * self.var)


@dataclass(frozen=True)
class Exponential:
    rate: float

    def log_density(self, x: float) -> float:
        # Exact zeros carry a point mass in practice; evaluate at a small
        # shift instead so likelihood ratios stay finite.
        return math.log(self.rate) - self.rate * max(x, EXP_SHIFT)


@dataclass(frozen=True)
class Multinomial:
    edges: tuple[float, ...]
    probs: tuple[float, ...]

    def bin_of(self, x: float) -> int:
        i = bisect_right(self.edges, x) - 1
        return min(max(i, 0), len(self.probs) - 1)

    def log_density(self, x: float) -> float:
        i = self.bin_of(x)
        width = self.edges[i + 1] - self.edges[i]
        return math.log(self.probs[i]) - math.log(width)


FeatureFamily = Gaussian | Exponential | Multinomial

FAMILY_TAGS = ("gaussian", "exponential", "multinomial")


@dataclass(frozen=True)
class ModelParams:
    """Mixture prior plus per-feature families for both components."""

    prior: float
    families: tuple[str, ...]
    matched: tuple[FeatureFamily, ...]
    unmatched: tuple[FeatureFamily, ...]

    def __post_init__(self) -> None:
        if not (0.0 < self.prior < 1.0):
            raise ValueError("prior must lie strictly inside (0, 1)")
        if not (len(self.families) == len(self.matched) == len(self.unmatched)):
            raise ValueError("families and component lists must align")
        for tag, m, u in zip(self.families, self.matched, self.unmatched):
            expected = {"gaussian": Gaussian, "exponential": Exponential, "multinomial": Multinomial}[tag]
            if not isinstance(m, expected) or not isinstance(u, expected):
                raise ValueError(f"component families do not match tag {tag!r}")

    @property
    def n_features(self) -> int:
        return len(self.families)


@dataclass
class TrainingSet:
    """Feature matrix (NaN marks a missing feature) plus per-row provenance."""

    features: np.ndarray
    pairs: list[tuple[VertexId, VertexId]]
    synthetic: np.ndarray

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if len(self.pairs) != self.features.shape[0] or len(self.synthetic) != len(self.pairs):
            raise ValueError("provenance length must match the matrix")

    @property
    def n(self) -> int:
        return self.features.shape[0]


@dataclass
class FitResult:
    params: ModelParams
    log_likelihoods: list[float]
    iterations: int
    converged: bool
    restarts: int


def vectors_to_matrix(vectors: list[SimilarityVector]) -> np.ndarray:
    if not vectors:
        return np.empty((0, N_FEATURES))
    return np.vstack([v.as_array() for v in vectors])


# -- training pair sampling ---------------------------------------------------


def _vector_rows(
    ctx: SimilarityContext, pairs: list[tuple[VertexId, VertexId]]
) -> list[SimilarityVector | None]:
    rows: list[SimilarityVector | None] = []
    for u, v in pairs:
        try:
            rows.append(similarity_vector(ctx, u, v))
        except UnscorablePair:
            rows.append(None)
    return rows


def _vector_rows_parallel(
    ctx: SimilarityContext, pairs: list[tuple[VertexId, VertexId]], workers: int
) -> list[SimilarityVector | None]:
    from concurrent.futures import ProcessPoolExecutor

    chunk = math.ceil(len(pairs) / workers)
    chunks = [pairs[i : i + chunk] for i in range(0, len(pairs), chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_vector_rows, [ctx] * len(chunks), chunks))
    return [row for part in parts for row in part]


def sample_training_pairs(
    ctx: SimilarityContext,
    rate: float,
    seed: int,
    min_split: int = 5,
    workers: int = 1,
) -> TrainingSet:
    """Sample same-name vertex pairs and add synthetic split positives.

    A seeded uniform sample of ceil(rate * count) candidate pairs keeps the
    fitting cost bounded.  Because true matched pairs are rare, every vertex
    with at least ``2 * min_split`` papers is additionally bipartitioned at
    random into two pseudo-vertices whose pair enriches the matched component.
    The sample and the resulting matrix depend only on the inputs and seed,
    also with ``workers`` > 1.
    """
    if not (0.0 < rate <= 1.0):
        raise ValueError("rate must lie in (0, 1]")
    net = ctx.network
    rng = random.Random(seed)

    candidates: list[tuple[VertexId, VertexId]] = []
    for name in net.names():
        vids = net.vertices_named(name)
        for i, u in enumerate(vids):
            for v in vids[i + 1 :]:
                candidates.append((u, v))
    k = math.ceil(rate * len(candidates))
    sampled = sorted(rng.sample(candidates, k)) if candidates else []

    if workers > 1 and len(sampled) >= 4 * workers:
        rows = _vector_rows_parallel(ctx, sampled, workers)
    else:
        rows = _vector_rows(ctx, sampled)

    vectors: list[SimilarityVector] = []
    pairs: list[tuple[VertexId, VertexId]] = []
    synthetic: list[bool] = []
    for (u, v), row in zip(sampled, rows):
        if row is None:
            continue
        vectors.append(row)
        pairs.append((u, v))
        synthetic.append(False)

    for vid in sorted(net.vertices):
        papers = sorted(net.vertices[vid].papers)
        if len(papers) < 2 * min_split:
            continue
        rng.shuffle(papers)
        half = len(papers) // 2
        side_a, side_b = set(papers[:half]), set(papers[half:])
        split_net = net.copy()
        va, vb = split_net.split_vertex(vid, side_a, side_b)
        try:
            vectors.append(similarity_vector(ctx.with_network(split_net), va, vb))
        except UnscorablePair:
            continue
        pairs.append((vid, vid))
        synthetic.append(True)

    if not vectors:
        raise FittingError("no same-name pairs and no splittable vertices to train on")
    return TrainingSet(vectors_to_matrix(vectors), pairs, np.array(synthetic, dtype=bool))


# -- EM fitting ---------------------------------------------------------------


def _weighted_family(
    tag: str, x: np.ndarray, w: np.ndarray, previous: FeatureFamily
) -> FeatureFamily:
    """Responsibility-weighted MLE for one feature of one component."""
    total = float(w.sum())
    if total < 1e-12:
        return previous
    if tag == "gaussian":
        mean = float((w * x).sum() / total)
        var = float((w * (x - mean) ** 2).sum() / total)
        return Gaussian(mean, max(var, MIN_VARIANCE))
    if tag == "exponential":
        # Shift exact zeros exactly as the density does, so this update is the
        # true argmax of the weighted log-likelihood.
        shifted = np.maximum(x, EXP_SHIFT)
        return Exponential(float(total / (w * shifted).sum()))
    if tag == "multinomial":
        assert isinstance(previous, Multinomial)
        edges = previous.edges
        n_bins = len(previous.probs)
        counts = np.zeros(n_bins)
        for value, weight in zip(x, w):
            counts[previous.bin_of(float(value))] += weight
        smoothed = counts + MULTINOMIAL_SMOOTHING
        probs = smoothed / smoothed.sum()
        return Multinomial(edges, tuple(float(p) for p in probs))
    raise ValueError(f"unknown family tag {tag!r}")


def _m_step(
    X: np.ndarray, resp: np.ndarray, families: tuple[str, ...], previous: ModelParams
) -> ModelParams:
    matched = []
    unmatched = []
    for i, tag in enumerate(families):
        col = X[:, i]
        observed = ~np.isnan(col)
        x = col[observed]
        matched.append(_weighted_family(tag, x, resp[observed], previous.matched[i]))
        unmatched.append(_weighted_family(tag, x, 1.0 - resp[observed], previous.unmatched[i]))
    prior = float(np.clip(resp.mean(), 1e-9, 1.0 - 1e-9))
    return ModelParams(prior, families, tuple(matched), tuple(unmatched))


def _multinomial_edges(x: np.ndarray, n_bins: int = 10) -> tuple[float, ...]:
    lo = float(np.nanmin(x)) if x.size else 0.0
    hi = float(np.nanmax(x)) if x.size else 1.0
    if hi <= lo:
        hi = lo + 1e-9
    return tuple(float(e) for e in np.linspace(lo, hi, n_bins + 1))


def _initial_params(
    X: np.ndarray, families: tuple[str, ...], top_fraction: float
) -> ModelParams:
    """Deterministic symmetry-breaking init: largest-L1 vectors seed 'matched'."""
    n = X.shape[0]
    norms = np.nansum(np.abs(X), axis=1)
    order = np.argsort(-norms, kind="stable")
    n_top = min(max(1, math.ceil(top_fraction * n)), n - 1)
    resp = np.zeros(n)
    resp[order[:n_top]] = 1.0

    matched = []
    unmatched = []
    for i, tag in enumerate(families):
        col = X[:, i]
        observed = ~np.isnan(col)
        x = col[observed]
        if tag == "multinomial":
            edges = _multinomial_edges(x)
            seed_family: FeatureFamily = Multinomial(edges, tuple([1.0 / 10] * 10))
        elif tag == "gaussian":
            seed_family = Gaussian(0.0, 1.0)
        else:
            seed_family = Exponential(1.0)
        matched.append(_weighted_family(tag, x, resp[observed], seed_family))
        unmatched.append(_weighted_family(tag, x, 1.0 - resp[observed], seed_family))
    return ModelParams(0.1, families, tuple(matched), tuple(unmatched))


def _component_log_likelihood(
    X: np.ndarray, component: tuple[FeatureFamily, ...]
) -> np.ndarray:
    """Row-wise log density under one component; missing features drop out."""
    n = X.shape[0]
    out = np.zeros(n)
    for i, family in enumerate(component):
        col = X[:, i]
        observed = ~np.isnan(col)
        out[observed] += np.array([family.log_density(float(v)) for v in col[observed]])
    return out


def _posterior_terms(X: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    lm = math.log(params.prior) + _component_log_likelihood(X, params.matched)
    lu = math.log1p(-params.prior) + _component_log_likelihood(X, params.unmatched)
    return lm, lu


def observed_log_likelihood(X: np.ndarray, params: ModelParams) -> float:
    lm, lu = _posterior_terms(X, params)
    return float(np.logaddexp(lm, lu).sum())


def em_fit(
    training: TrainingSet,
    families: tuple[str, ...] | None = None,
    init: ModelParams | None = None,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> FitResult:
    """Fit the mixture by expectation-maximization.

    Stops when the observed-data log-likelihood improves by less than ``tol``
    relative or after ``max_iter`` M-steps.  If one component collapses (all
    responsibility mass on one side), fitting restarts from progressively
    coarser initial splits before giving up.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    X = training.features
    if X.shape[0] < 2:
        raise FittingError("need at least 2 training vectors")
    if families is None:
        families = DEFAULT_FAMILIES if X.shape[1] == N_FEATURES else None
    if families is None or len(families) != X.shape[1]:
        raise ValueError("families must name one distribution per feature")
    for tag in families:
        if tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family tag {tag!r}")

    inits = ([init] if init is not None else []) + [
        _initial_params(X, families, f) for f in INIT_TOP_FRACTIONS
    ]
    for restart, params in enumerate(inits):
        trace: list[float] = []
        prev_ll = -math.inf
        iterations = 0
        converged = False
        degenerate = False
        for _ in range(max_iter):
            lm, lu = _posterior_terms(X, params)
            ll = float(np.logaddexp(lm, lu).sum())
            trace.append(ll)
            if ll - prev_ll < tol * (1.0 + abs(prev_ll)):
                converged = True
                break
            prev_ll = ll
            with np.errstate(over="ignore"):
                resp = 1.0 / (1.0 + np.exp(lu - lm))
            mass = float(resp.sum())
            if min(mass, X.shape[0] - mass) < 1e-3:
                degenerate = True
                break
            params = _m_step(X, resp, families, params)
            iterations += 1
        if not degenerate:
            if not converged:
                trace.append(observed_log_likelihood(X, params))
            return FitResult(params, trace, iterations, converged, restart)
    raise FittingError(f"EM collapsed to one component in {len(inits)} initializations")


# -- scoring ------------------------------------------------------------------


def _pair_terms(gamma, params: ModelParams) -> tuple[float, float]:
    x = gamma.as_array() if isinstance(gamma, SimilarityVector) else np.asarray(gamma, dtype=float)
    if x.shape != (params.n_features,):
        raise ValueError(f"expected {params.n_features} features, got {x.shape}")
    lm = math.log(params.prior)
    lu = math.log1p(-params.prior)
    for i in range(params.n_features):
        if math.isnan(x[i]):
            continue
        lm += params.matched[i].log_density(float(x[i]))
        lu += params.unmatched[i].log_density(float(x[i]))
    return lm, lu


def posterior_match(gamma, params: ModelParams, diagnostics: dict | None = None) -> float:
    """Posterior probability that the pair is matched, computed in log space.

    Missing features drop their factor from both components.  If both
    densities underflow to zero the prior is returned and flagged.
    """
    lm, lu = _pair_terms(gamma, params)
    if math.isinf(lm) and math.isinf(lu) and lm < 0 and lu < 0:
        if diagnostics is not None:
            diagnostics["degenerate"] = True
        return params.prior
    return math.exp(lm - np.logaddexp(lm, lu))


def matching_score(gamma, params: ModelParams, diagnostics: dict | None = None) -> float:
    """Log posterior odds of being matched; merge-worthy when >= the threshold."""
    lm, lu = _pair_terms(gamma, params)
    if math.isinf(lm) and math.isinf(lu) and lm < 0 and lu < 0:
        if diagnostics is not None:
            diagnostics["degenerate"] = True
        score = math.log(params.prior) - math.log1p(-params.prior)
    else:
        score = lm - lu
    return min(SCORE_CLAMP, max(-SCORE_CLAMP, score))


# -- serialization ------------------------------------------------------------

MODEL_HEADER = "collabnet-model v1"


def _format_family(family: FeatureFamily) -> str:
    if isinstance(family, Gaussian):
        return f"gaussian mean={family.mean!r} var={family.var!r}"
    if isinstance(family, Exponential):
        return f"exponential rate={family.rate!r}"
    edges = ",".join(repr(e) for e in family.edges)
    probs = ",".join(repr(p) for p in family.probs)
    return f"multinomial edges={edges} probs={probs}"


def _parse_family(text: str) -> FeatureFamily:
    tag, *fields = text.split()
    values = dict(f.split("=", 1) for f in fields)
    if tag == "gaussian":
        return Gaussian(float(values["mean"]), float(values["var"]))
    if tag == "exponential":
        return Exponential(float(values["rate"]))
    if tag == "multinomial":
        edges = tuple(float(v) for v in values["edges"].split(","))
        probs = tuple(float(v) for v in values["probs"].split(","))
        return Multinomial(edges, probs)
    raise ValueError(f"unknown family {tag!r}")


def save_model(params: ModelParams, path) -> None:
    lines = [MODEL_HEADER, f"prior {params.prior!r}", "families " + " ".join(params.families)]
    for i in range(params.n_features):
        lines.append(f"matched {i} {_format_family(params.matched[i])}")
        lines.append(f"unmatched {i} {_format_family(params.unmatched[i])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != MODEL_HEADER:
        raise ValueError("not a collabnet model file")
    prior = float(lines[1].split(" ", 1)[1])
    families = tuple(lines[2].split()[1:])
    matched: dict[int, FeatureFamily] = {}
    unmatched: dict[int, FeatureFamily] = {}
    for line in lines[3:]:
        side, idx, rest = line.split(" ", 2)
        target = matched if side == "matched" else unmatched
        target[int(idx)] = _parse_family(rest)
    m = len(families)
    return ModelParams(
        prior,
        families,
        tuple(matched[i] for i in range(m)),
        tuple(unmatched[i] for i in range(m)),
    )
