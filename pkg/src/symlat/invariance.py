"""Hypothesis tests for "the regression function is G-invariant".

Two tests are provided.  The exceedance test needs a fully known variation
bound on the function class and a concentration bound on the noise: it counts
how often ``|Y_i - Y_j| - V(g . X_i, X_j)`` (with ``X_j`` the nearest
neighbour of the transformed point) exceeds each threshold in a grid, and
bounds the p-value with an exact binomial tail, taking the minimum over the
grid.  The permutation test only needs the variation bound's order: it
compares a quantile of the ratios ``|Y_i - Y_j| / V(g . X_i, X_j)`` over
uniformly drawn pairs against the same quantile with ``g`` fixed at the
identity, approximating the p-value by the proportion of transform replicates
whose quantile falls at or below the identity one.

Batch variants share one sampled stream across several subgroups and filter
it per node by membership, so testing a lattice level costs one draw.  With a
single node equal to the sampler's whole group the filter keeps everything
and the batch outcome is bit-identical to the direct test under the same
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, fsum
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import NeighborIndex, RegressionDataset
from .errors import DegenerateMetricError, SymlatError
from .groups import (
    GroupAction,
    GroupDescriptor,
    GroupElement,
    SamplerSpec,
    apply_elements,
    sample_elements,
)

ACCEPT = 1
REJECT = -1

_EXACT_TAIL_LIMIT = 500


# ---------------------------------------------------------------------------
# Numeric primitives
# ---------------------------------------------------------------------------

def binom_tail(m: int, k: int, p: float) -> float:
    """Upper binomial tail P(Binom(m, p) >= k).

    Small ``m`` sums exact integer binomial coefficients with compensated
    float summation; large ``m`` (up to ~1e6) switches to log-space terms
    combined with log-sum-exp.
    """
    if not 0 <= k <= m:
        raise SymlatError(f"need 0 <= k <= m, got k={k}, m={m}")
    if not 0.0 <= p <= 1.0:
        raise SymlatError(f"probability must lie in [0, 1], got {p}")
    if k == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    # direct summation is exact to a few ulp, but individual powers underflow
    # once m log p drops past the subnormal range; use log-space there
    if m <= _EXACT_TAIL_LIMIT and m * math.log(min(p, 1.0 - p)) > -700.0:
        terms = [comb(m, j) * p ** j * (1.0 - p) ** (m - j) for j in range(k, m + 1)]
        return min(1.0, fsum(terms))
    js = np.arange(k, m + 1, dtype=np.float64)
    logs = (gammaln(m + 1.0) - gammaln(js + 1.0) - gammaln(m - js + 1.0)
            + js * math.log(p) + (m - js) * math.log1p(-p))
    return float(min(1.0, math.exp(logsumexp(logs))))


def quantile(values: Sequence[float], q: float) -> float:
    """Linear-interpolation (type-7) sample quantile: h = (n-1) q."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise SymlatError("quantile of an empty sample")
    if not 0.0 < q <= 1.0:
        raise SymlatError(f"quantile level must lie in (0, 1], got {q}")
    return float(np.quantile(values, q))


# ---------------------------------------------------------------------------
# Variation bounds and noise models
# ---------------------------------------------------------------------------

KNOWN = "known"
ORDER_ONLY = "order-only"
CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class VariationBound:
    """Bound on |f(x) - f(y)| over the assumed function class.

    ``known``: L * ||x - y||^alpha with known scale L.  ``order-only``: the
    same shape with unknown scale (usable by the permutation test, where
    constants cancel).  ``custom``: caller-supplied symmetric non-negative
    row-wise function.
    """

    kind: str
    scale: float = 1.0
    exponent: float = 1.0
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in (KNOWN, ORDER_ONLY, CUSTOM):
            raise SymlatError(f"unknown bound kind {self.kind!r}")
        if self.kind == KNOWN and not self.scale > 0:
            raise SymlatError("known bound needs scale > 0")
        if self.kind in (KNOWN, ORDER_ONLY) and not 0.0 < self.exponent <= 1.0:
            raise SymlatError("bound exponent must lie in (0, 1]")
        if self.kind == CUSTOM and self.func is None:
            raise SymlatError("custom bound needs a function")

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.kind == CUSTOM:
            out = np.asarray(self.func(a, b), dtype=float)
            if out.shape != (a.shape[0],):
                raise SymlatError("custom bound must return one value per row")
            if np.any(out < 0):
                raise SymlatError("variation bound must be non-negative")
            return out
        dist = np.linalg.norm(a - b, axis=1)
        if self.exponent != 1.0:
            dist = dist ** self.exponent
        if self.kind == KNOWN:
            dist = self.scale * dist
        return dist


def known_bound(scale: float, exponent: float = 1.0) -> VariationBound:
    return VariationBound(KNOWN, scale=scale, exponent=exponent)


def order_bound(exponent: float = 1.0) -> VariationBound:
    return VariationBound(ORDER_ONLY, exponent=exponent)


def custom_bound(func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> VariationBound:
    return VariationBound(CUSTOM, func=func)


GAUSSIAN = "gaussian"
TABLE = "table"

_TINY_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Concentration bound p_t >= P(|eps_i - eps_j| > t) for the noise.

    ``gaussian``: p_t = min(1, (2 sigma / t) exp(-t^2 / (4 sigma^2)) / sqrt(2 pi)),
    and identically zero for t > 0 when sigma = 0.  ``table``: explicit
    (t, p_t) knots, evaluated conservatively at the largest knot <= t.
    """

    kind: str
    sigma: float = 0.0
    ts: np.ndarray | None = None
    ps: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == GAUSSIAN:
            if self.sigma < 0:
                raise SymlatError("noise sigma must be >= 0")
        elif self.kind == TABLE:
            ts = np.asarray(self.ts, dtype=float)
            ps = np.asarray(self.ps, dtype=float)
            if ts.ndim != 1 or ts.shape != ps.shape or ts.size == 0:
                raise SymlatError("noise table needs matching non-empty t and p arrays")
            if np.any(np.diff(ts) <= 0) or np.any(ts <= 0):
                raise SymlatError("noise-table thresholds must be positive and increasing")
            if np.any(ps < 0) or np.any(ps > 1) or np.any(np.diff(ps) > 0):
                raise SymlatError("noise-table probabilities must be non-increasing in [0, 1]")
            object.__setattr__(self, "ts", ts)
            object.__setattr__(self, "ps", ps)
        else:
            raise SymlatError(f"unknown noise kind {self.kind!r}")

    def p_exceed(self, t: float) -> float:
        if t <= 0:
            return 1.0
        if self.kind == GAUSSIAN:
            if self.sigma == 0.0:
                return 0.0
            raw = (2.0 * self.sigma / t) * math.exp(-t * t / (4.0 * self.sigma ** 2)) \
                / math.sqrt(2.0 * math.pi)
            return min(1.0, raw)
        idx = np.searchsorted(self.ts, t, side="right") - 1
        if idx < 0:
            return 1.0
        return float(self.ps[idx])

    def _uncapped(self, t: float) -> float:
        return (2.0 * self.sigma / t) * math.exp(-t * t / (4.0 * self.sigma ** 2)) \
            / math.sqrt(2.0 * math.pi)

    def threshold_for(self, target: float) -> float:
        """Invert the (uncapped) gaussian bound: the t with p_t = target."""
        if self.kind != GAUSSIAN or self.sigma == 0.0:
            raise SymlatError("threshold inversion needs a gaussian noise model with sigma > 0")
        if not 0.0 < target < 1.0:
            raise SymlatError("target probability must lie in (0, 1)")
        lo = self.sigma * 1e-8
        hi = self.sigma
        while self._uncapped(hi) > target:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._uncapped(mid) > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def default_thresholds(self, count: int = 20) -> np.ndarray:
        """Threshold grid whose p_t values spread evenly across (0.01, 0.99).

        With sigma = 0 every positive threshold has p_t = 0, so a single tiny
        threshold suffices (it counts any strictly positive excess).
        """
        if self.kind == TABLE:
            return self.ts.copy()
        if self.sigma == 0.0:
            return np.array([_TINY_THRESHOLD])
        targets = np.linspace(0.01, 0.99, count)
        ts = sorted(self.threshold_for(float(p)) for p in targets)
        return np.asarray(ts)


def gaussian_noise(sigma: float) -> NoiseModel:
    return NoiseModel(GAUSSIAN, sigma=sigma)


def table_noise(ts: Sequence[float], ps: Sequence[float]) -> NoiseModel:
    return NoiseModel(TABLE, ts=np.asarray(ts, dtype=float), ps=np.asarray(ps, dtype=float))


# ---------------------------------------------------------------------------
# Test outcomes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestOutcome:
    """Result of one invariance test with its diagnostics."""

    __test__ = False  # not a pytest class, despite the name

    p_value: float
    decision: int
    alpha: float
    effective_m: int
    statistics: np.ndarray
    thresholds: np.ndarray | None = None
    exceed_counts: np.ndarray | None = None
    threshold_p: np.ndarray | None = None
    replicate_quantiles: np.ndarray | None = None
    replicate_m: np.ndarray | None = None
    baseline_quantile: float | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        expected = REJECT if self.p_value <= self.alpha else ACCEPT
        if self.decision != expected:
            raise SymlatError("decision must be reject iff p_value <= alpha")

    @property
    def rejected(self) -> bool:
        return self.decision == REJECT


def _finish(p_value: float, alpha: float, **kw) -> TestOutcome:
    p_value = float(min(1.0, max(0.0, p_value)))
    decision = REJECT if p_value <= alpha else ACCEPT
    return TestOutcome(p_value=p_value, decision=decision, alpha=alpha, **kw)


def write_diagnostics(outcome: TestOutcome, path) -> None:
    """CSV with columns (replicate, t_or_k, statistic, count).

    Exceedance tests emit one row per threshold (replicate 0, the threshold,
    its binomial-tail p-value, and the exceedance count); permutation tests
    emit the baseline quantile as replicate 0 and one row per replicate k
    with its quantile and kept-sample count.
    """
    lines = ["replicate,t_or_k,statistic,count"]
    if outcome.thresholds is not None:
        for t, p, c in zip(outcome.thresholds, outcome.threshold_p, outcome.exceed_counts):
            lines.append(f"0,{t!r},{p!r},{int(c)}")
    if outcome.replicate_quantiles is not None:
        lines.append(f"0,0,{outcome.baseline_quantile!r},{outcome.effective_m}")
        for k, (a, mk) in enumerate(zip(outcome.replicate_quantiles, outcome.replicate_m), start=1):
            lines.append(f"{k},{k},{a!r},{int(mk)}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Exceedance test (known variation bound + noise concentration)
# ---------------------------------------------------------------------------

def _validate_thresholds(thresholds) -> np.ndarray:
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.size == 0:
        raise SymlatError("threshold grid must be non-empty")
    if np.any(thresholds <= 0) or np.any(np.diff(thresholds) <= 0):
        raise SymlatError("thresholds must be positive and strictly increasing")
    return thresholds


def _draw_excesses(data: RegressionDataset, index: NeighborIndex, action: GroupAction,
                   sampler: SamplerSpec, bound: VariationBound, m: int,
                   rng: np.random.Generator) -> tuple[list[GroupElement], np.ndarray]:
    elements = sample_elements(sampler, rng, m)
    picks = rng.integers(0, data.n, size=m)
    gx = apply_elements(action, elements, data.X[picks])
    nbrs = index.query_many(gx)
    excess = np.abs(data.Y[picks] - data.Y[nbrs]) - bound(gx, data.X[nbrs])
    return elements, excess


def _exceedance_outcome(excess: np.ndarray, thresholds: np.ndarray,
                        noise: NoiseModel, alpha: float,
                        extra_warnings: tuple[str, ...] = ()) -> TestOutcome:
    m_eff = excess.size
    warnings = tuple(extra_warnings)
    if m_eff == 0:
        return _finish(1.0, alpha, effective_m=0, statistics=excess,
                       thresholds=thresholds,
                       exceed_counts=np.zeros(len(thresholds), dtype=np.int64),
                       threshold_p=np.ones(len(thresholds)),
                       warnings=warnings + ("insufficient-sample",))
    pts = np.array([noise.p_exceed(float(t)) for t in thresholds])
    counts = np.array([(excess >= t).sum() for t in thresholds], dtype=np.int64)
    pvals = np.array([binom_tail(m_eff, int(c), float(p))
                      for c, p in zip(counts, pts)])
    if np.all(pts >= 1.0):
        warnings = warnings + ("all-thresholds-vacuous",)
    return _finish(float(pvals.min()), alpha, effective_m=m_eff, statistics=excess,
                   thresholds=thresholds, exceed_counts=counts, threshold_p=pts,
                   warnings=warnings)


def exceedance_test(data: RegressionDataset, action: GroupAction, sampler: SamplerSpec,
                    bound: VariationBound, noise: NoiseModel,
                    rng: np.random.Generator, m: int, alpha: float = 0.05,
                    thresholds=None, index: NeighborIndex | None = None) -> TestOutcome:
    """Invariance test from a known variation bound.

    Draws ``m`` transform/index pairs, pairs each transformed point with its
    nearest data neighbour, and compares the per-threshold exceedance counts
    of ``|Y_i - Y_j| - V(g . X_i, X_j)`` to a binomial tail under the noise
    concentration bound; the reported p-value is the minimum over the grid.
    """
    if m < 1:
        raise SymlatError("sample count m must be >= 1")
    if bound.kind == ORDER_ONLY:
        raise SymlatError("the exceedance test needs a fully known bound")
    thresholds = _validate_thresholds(
        noise.default_thresholds() if thresholds is None else thresholds)
    if index is None:
        index = NeighborIndex.from_dataset(data)
    _, excess = _draw_excesses(data, index, action, sampler, bound, m, rng)
    return _exceedance_outcome(excess, thresholds, noise, alpha)


def batch_exceedance_test(data: RegressionDataset, action: GroupAction,
                          nodes: Sequence[tuple[int, GroupDescriptor]],
                          sampler: SamplerSpec, bound: VariationBound,
                          noise: NoiseModel, rng: np.random.Generator, m: int,
                          alpha: float = 0.05, thresholds=None,
                          index: NeighborIndex | None = None) -> dict[int, TestOutcome]:
    """One shared sampled stream, filtered per node by group membership."""
    if m < 1:
        raise SymlatError("sample count m must be >= 1")
    thresholds = _validate_thresholds(
        noise.default_thresholds() if thresholds is None else thresholds)
    if index is None:
        index = NeighborIndex.from_dataset(data)
    elements, excess = _draw_excesses(data, index, action, sampler, bound, m, rng)
    out = {}
    for key, group in nodes:
        mask = np.fromiter((group.contains(g, action=action) for g in elements),
                           dtype=bool, count=m)
        out[key] = _exceedance_outcome(excess[mask], thresholds, noise, alpha)
    return out


# ---------------------------------------------------------------------------
# Permutation test (order-only bound)
# ---------------------------------------------------------------------------

def _draw_ratio_block(data: RegressionDataset, action: GroupAction,
                      sampler: SamplerSpec | None, bound: VariationBound, m: int,
                      rng: np.random.Generator, max_redraws: int
                      ) -> tuple[list[GroupElement] | None, np.ndarray]:
    """Draw m ratio statistics; pairs with a zero bound are redrawn.

    ``sampler=None`` is the identity block (no transform sampling).
    """
    if sampler is not None:
        elements = sample_elements(sampler, rng, m)
        i_idx = rng.integers(0, data.n, size=m)
        j_idx = rng.integers(0, data.n, size=m)
        gx = apply_elements(action, elements, data.X[i_idx])
    else:
        elements = None
        i_idx = rng.integers(0, data.n, size=m)
        j_idx = rng.integers(0, data.n, size=m)
        gx = data.X[i_idx]
    denom = bound(gx, data.X[j_idx])
    bad = denom == 0.0
    attempts = 0
    while bad.any():
        if attempts >= max_redraws:
            raise DegenerateMetricError(
                f"variation bound stayed zero after {max_redraws} redraws")
        nbad = int(bad.sum())
        if sampler is not None:
            new_els = sample_elements(sampler, rng, nbad)
            new_i = rng.integers(0, data.n, size=nbad)
            new_j = rng.integers(0, data.n, size=nbad)
            new_gx = apply_elements(action, new_els, data.X[new_i])
            bad_pos = np.flatnonzero(bad)
            for slot, pos in enumerate(bad_pos):
                elements[pos] = new_els[slot]
        else:
            new_i = rng.integers(0, data.n, size=nbad)
            new_j = rng.integers(0, data.n, size=nbad)
            new_gx = data.X[new_i]
        i_idx[bad] = new_i
        j_idx[bad] = new_j
        gx[bad] = new_gx
        denom = bound(gx, data.X[j_idx])
        bad = denom == 0.0
        attempts += 1
    ratios = np.abs(data.Y[i_idx] - data.Y[j_idx]) / denom
    return elements, ratios


def _perm_outcome(rep_quantiles: np.ndarray, rep_m: np.ndarray, baseline: float,
                  alpha: float, m_eff: int) -> TestOutcome:
    valid = rep_m > 0
    warnings: tuple[str, ...] = ()
    if not valid.any():
        return _finish(1.0, alpha, effective_m=0,
                       statistics=rep_quantiles, replicate_quantiles=rep_quantiles,
                       replicate_m=rep_m, baseline_quantile=baseline,
                       warnings=("insufficient-sample",))
    if not valid.all():
        warnings = ("insufficient-sample-replicates",)
    p = float(np.sum(rep_quantiles[valid] <= baseline)) / float(valid.sum())
    return _finish(p, alpha, effective_m=m_eff, statistics=rep_quantiles,
                   replicate_quantiles=rep_quantiles, replicate_m=rep_m,
                   baseline_quantile=baseline, warnings=warnings)


def ratio_permutation_test(data: RegressionDataset, action: GroupAction,
                           sampler: SamplerSpec, bound: VariationBound,
                           rng: np.random.Generator, m: int, B: int,
                           q: float = 0.95, alpha: float = 0.05) -> TestOutcome:
    """Invariance test needing only the variation bound's order.

    For each of ``B`` replicates, draws ``m`` uniform index pairs and sampled
    transforms and takes the q-quantile of the ratios; the p-value is the
    proportion of replicate quantiles at or below the identity-transform
    quantile computed the same way.
    """
    outcomes = batch_ratio_permutation_test(
        data, action, [(0, None)], sampler, bound, rng, m, B, q=q, alpha=alpha)
    return outcomes[0]


def batch_ratio_permutation_test(data: RegressionDataset, action: GroupAction,
                                 nodes: Sequence[tuple[int, GroupDescriptor | None]],
                                 sampler: SamplerSpec, bound: VariationBound,
                                 rng: np.random.Generator, m: int, B: int,
                                 q: float = 0.95, alpha: float = 0.05
                                 ) -> dict[int, TestOutcome]:
    """Shared-stream permutation test over several nodes.

    A ``None`` group keeps every draw (the whole sampled group).  Replicates
    in which a node receives no kept samples are dropped from that node's
    proportion; a node with no valid replicates accepts with a warning.
    """
    if m < 1 or B < 1:
        raise SymlatError("need m >= 1 and B >= 1")
    if not 0.0 < q <= 1.0:
        raise SymlatError("quantile level q must lie in (0, 1]")
    keys = [key for key, _ in nodes]
    rep_quantiles = {key: np.empty(B) for key in keys}
    rep_m = {key: np.zeros(B, dtype=np.int64) for key in keys}
    for k in range(B):
        elements, ratios = _draw_ratio_block(data, action, sampler, bound, m, rng, B)
        masks = {}
        for key, group in nodes:
            if group is None:
                mask = np.ones(m, dtype=bool)
            else:
                mask = np.fromiter((group.contains(g, action=action) for g in elements),
                                   dtype=bool, count=m)
            masks[key] = mask
        for key in keys:
            kept = ratios[masks[key]]
            rep_m[key][k] = kept.size
            rep_quantiles[key][k] = quantile(kept, q) if kept.size else np.nan
    _, base_ratios = _draw_ratio_block(data, action, None, bound, m, rng, B)
    baseline = quantile(base_ratios, q)
    return {key: _perm_outcome(rep_quantiles[key], rep_m[key], baseline, alpha, m)
            for key in keys}
