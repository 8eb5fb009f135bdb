"""Random systems: validated map families with probabilities, orbits, statistics.

A RandomSystem bundles a finite family of validated interval maps sharing
one turning point with a positive probability vector.  Words are sampled
i.i.d. from a counter-based generator (Philox keyed through SeedSequence),
so every run is reproducible from (seed, stream key) alone and independent
streams for parallel workers come from hashing the seed with the worker id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from rimlab import stepper
from rimlab.maps import MapDescriptor, MapKind, validate_map

__all__ = [
    "RandomSystem",
    "SystemValidationError",
    "OrbitTrace",
    "OccupationStats",
    "make_system",
    "make_rng",
    "theta",
    "expanding_average",
    "sample_word",
    "iterate",
    "orbit_statistics",
    "occupancy_scan",
    "orbit_histogram",
    "delta_neighborhood",
]

WORD_CHUNK = 1 << 20


class SystemValidationError(ValueError):
    """A map in the family failed its class validation."""


@dataclass(frozen=True)
class RandomSystem:
    """Immutable family {T_j} with probability vector p and shared c."""

    maps: tuple[MapDescriptor, ...]
    p: tuple[float, ...]
    c: float
    sigma_g: tuple[int, ...]
    sigma_b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "_kernel", None)

    @property
    def kernel(self) -> stepper.SystemKernel:
        k = getattr(self, "_kernel")
        if k is None:
            k = stepper.pack_system(self)
            object.__setattr__(self, "_kernel", k)
        return k

    def orders(self) -> np.ndarray:
        return np.array([m.order for m in self.maps])

    def describe(self) -> str:
        rows = []
        for j, m in enumerate(self.maps):
            tag = "good" if j in self.sigma_g else "bad"
            rows.append(f"  [{j}] {m.name} ({tag}, order {m.order:g}, p = {self.p[j]:g})")
        return "\n".join([f"random system with c = {self.c:g}, theta = {theta(self):g}"] + rows)


def make_system(maps_: Sequence[MapDescriptor], p: Sequence[float],
                validate_grid: int = 512) -> RandomSystem:
    """Assemble and validate a random system.

    Requires a positive probability vector summing to 1, at least one good
    and one bad map, a shared turning point, and every map passing
    validate_map at ``validate_grid`` points.
    """
    maps_ = tuple(maps_)
    p_arr = np.asarray(p, dtype=float)
    if len(maps_) != p_arr.size:
        raise ValueError("maps and probabilities must have equal length")
    if np.any(p_arr <= 0.0):
        raise ValueError("probability vector must be strictly positive")
    if abs(p_arr.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p_arr.sum()!r}, not 1")
    cs = {m.c for m in maps_}
    if len(cs) != 1:
        raise ValueError(f"maps must share one turning point, got {sorted(cs)}")
    sigma_g = tuple(j for j, m in enumerate(maps_) if m.kind is MapKind.GOOD)
    sigma_b = tuple(j for j, m in enumerate(maps_) if m.kind is MapKind.BAD)
    if not sigma_g or not sigma_b:
        raise ValueError("need at least one good and one bad map")
    for m in maps_:
        report = validate_map(m, validate_grid)
        if not report.passed:
            raise SystemValidationError(str(report))
    return RandomSystem(maps_, tuple(float(v) for v in p_arr), maps_[0].c, sigma_g, sigma_b)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for (seed, key...); distinct keys give independent streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key))))


# ---------------------------------------------------------------------------
# scalar summaries
# ---------------------------------------------------------------------------

def theta(system: RandomSystem) -> float:
    """Sum of p_b * order_b over the bad maps: the finiteness threshold."""
    return float(sum(system.p[b] * system.maps[b].order for b in system.sigma_b))


def expanding_average(system: RandomSystem) -> float:
    """Sum of p_b / |DT_b(c)| over bad maps; +inf if any bad order exceeds 1."""
    total = 0.0
    for b in system.sigma_b:
        m = system.maps[b]
        if m.order > 1.0:
            return math.inf
        d = abs(m.branches[0].form.derivs(m.c)[1])
        total += system.p[b] / d
    return total


def delta_neighborhood(system: RandomSystem) -> float:
    """Largest symmetric radius around c on which all bad maps contract.

    Bisects |DT_b(c +/- d)| = 1 per side and map; on the returned radius
    every bad map satisfies |DT| < 1, hence moves points towards c.
    """
    def slope(m, x):
        return abs(m.branch_for(x).form.derivs(x)[1])

    best = math.inf
    c = system.c
    for b in system.sigma_b:
        m = system.maps[b]
        for sgn, limit in ((-1.0, c), (1.0, 1.0 - c)):
            lo, hi = 0.0, limit
            if slope(m, c + sgn * hi * (1 - 1e-12)) < 1.0:
                best = min(best, hi)
                continue
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if slope(m, c + sgn * mid) < 1.0:
                    lo = mid
                else:
                    hi = mid
            best = min(best, lo)
    return best * (1.0 - 1e-9)


# ---------------------------------------------------------------------------
# words and orbits
# ---------------------------------------------------------------------------

def sample_word(system: RandomSystem, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. map indices drawn from p; deterministic given the generator state."""
    if n < 0:
        raise ValueError("word length must be >= 0")
    cum = system.kernel.cum_p
    out = np.empty(n, dtype=np.int64)
    done = 0
    while done < n:
        m = min(WORD_CHUNK, n - done)
        u = rng.random(m)
        out[done:done + m] = np.searchsorted(cum, u, side="right")
        done += m
    return out


@dataclass(frozen=True)
class OrbitTrace:
    """A finite random orbit: points[k+1] is maps[word[k]] applied to points[k]."""

    x0: float
    word: np.ndarray
    points: np.ndarray
    seed: Optional[int] = None
    log_deriv: Optional[float] = None     # log |D(T_word)(x0)|, if accumulated
    deriv_sign: Optional[float] = None

    @property
    def absorbed_at(self) -> Optional[int]:
        """Index of the first orbit point equal to 0.0 or 1.0, if any."""
        hits = np.flatnonzero((self.points == 0.0) | (self.points == 1.0))
        return int(hits[0]) if hits.size else None

    @property
    def absorbed(self) -> bool:
        return self.absorbed_at is not None


def iterate(system: RandomSystem, x0: float, word: Iterable[int] | np.ndarray,
            seed: Optional[int] = None, with_derivative: bool = False) -> OrbitTrace:
    """Apply the word left to right starting from x0; exact float stepping."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0,1]")
    word = np.asarray(word, dtype=np.int64)
    if word.size and (word.min() < 0 or word.max() >= len(system.maps)):
        raise ValueError("word contains indices outside the map family")
    k = system.kernel
    points = np.empty(word.size + 1)
    stepper.run_trace(k.c, k.branch, k.at_0, k.at_c, k.at_1, word, float(x0), points)
    log_d = sign = None
    if with_derivative:
        from rimlab.maps import eval3

        log_d, sign = 0.0, 1.0
        for j, x in zip(word, points[:-1]):
            d = eval3(system.maps[int(j)], float(x))[1]
            if d == 0.0:
                log_d, sign = -math.inf, 0.0
                break
            log_d += math.log(abs(d))
            sign *= math.copysign(1.0, d)
    return OrbitTrace(float(x0), word, points, seed, log_d, sign)


# ---------------------------------------------------------------------------
# occupation statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OccupationStats:
    """Visit fractions per region (overall and per window) and laminar phases."""

    regions: tuple[tuple[float, float], ...]
    overall: np.ndarray                     # fraction per region
    window_fractions: np.ndarray            # (n_windows, n_regions)
    phase_lengths: tuple[np.ndarray, ...]   # per region: lengths of maximal runs
    phase_counts: tuple[np.ndarray, ...]    # per region: multiplicity of each length

    def n_phases(self, r: int) -> int:
        return int(self.phase_counts[r].sum())


def orbit_statistics(trace: OrbitTrace, regions: Sequence[tuple[float, float]],
                     n_windows: int = 1) -> OccupationStats:
    """Per-region visit fractions over time windows plus run-length histograms."""
    pts = trace.points
    regions = tuple((float(lo), float(hi)) for lo, hi in regions)
    for lo, hi in regions:
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError(f"region ({lo}, {hi}) is not a subinterval of [0,1]")
    overall = np.empty(len(regions))
    windows = np.array_split(np.arange(pts.size), max(1, n_windows))
    window_fractions = np.empty((len(windows), len(regions)))
    lengths, counts = [], []
    for r, (lo, hi) in enumerate(regions):
        inside = (pts >= lo) & (pts <= hi)
        overall[r] = inside.mean()
        for wi, idx in enumerate(windows):
            window_fractions[wi, r] = inside[idx].mean() if idx.size else 0.0
        runs = _run_lengths(inside)
        ls, cs = np.unique(runs, return_counts=True) if runs.size else (np.empty(0, dtype=np.int64),) * 2
        lengths.append(ls.astype(np.int64))
        counts.append(cs.astype(np.int64) if runs.size else np.empty(0, dtype=np.int64))
    return OccupationStats(regions, overall, window_fractions, tuple(lengths), tuple(counts))


def _run_lengths(mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        return np.empty(0, dtype=np.int64)
    padded = np.diff(np.concatenate(([0], mask.view(np.int8), [0])))
    starts = np.flatnonzero(padded == 1)
    ends = np.flatnonzero(padded == -1)
    return ends - starts


# ---------------------------------------------------------------------------
# streaming long-run statistics (log-space hybrid stepping)
# ---------------------------------------------------------------------------

def occupancy_scan(system: RandomSystem, x0: float, n_steps: int,
                   regions: Sequence[tuple[float, float]], seed: int,
                   checkpoints: Sequence[int] = ()) -> dict[int, np.ndarray]:
    """Visit fractions of regions along one long random orbit.

    Runs the hybrid log-space stepper so arbitrarily deep excursions near
    {0, c, 1} are followed faithfully.  Returns {N: fractions} for each
    requested checkpoint (and always for n_steps); a checkpointed prefix is
    bit-identical to a shorter run with the same seed.
    """
    k = system.kernel
    reg_lo = np.array([lo for lo, _ in regions])
    reg_hi = np.array([hi for _, hi in regions])
    counts = np.zeros(reg_lo.size, dtype=np.int64)
    rng = make_rng(seed)
    marks = sorted(set(int(m) for m in checkpoints) | {int(n_steps)})
    out: dict[int, np.ndarray] = {}
    mode, x, logd, acode = 0, float(x0), 0.0, 0
    done = 0
    for mark in marks:
        while done < mark:
            m = min(WORD_CHUNK, mark - done)
            syms = sample_word(system, m, rng)
            mode, x, logd, acode = stepper.run_occupancy(
                k.c, k.switch_d, k.branch, k.at_0, k.at_c, k.at_1, k.anext, k.log_aff,
                syms, reg_lo, reg_hi, counts, mode, x, logd, acode)
            done += m
        out[mark] = counts / float(mark)
    return out


def orbit_histogram(system: RandomSystem, x0: float, n_steps: int,
                    n_bins: int, seed: int) -> np.ndarray:
    """Normalized cell-mass histogram of one long random orbit."""
    k = system.kernel
    hist = np.zeros(n_bins, dtype=np.int64)
    rng = make_rng(seed)
    mode, x, logd, acode = 0, float(x0), 0.0, 0
    done = 0
    while done < n_steps:
        m = min(WORD_CHUNK, n_steps - done)
        syms = sample_word(system, m, rng)
        mode, x, logd, acode = stepper.run_histogram(
            k.c, k.switch_d, k.branch, k.at_0, k.at_c, k.at_1, k.anext, k.log_aff,
            syms, hist, mode, x, logd, acode)
        done += m
    return hist / float(n_steps)
