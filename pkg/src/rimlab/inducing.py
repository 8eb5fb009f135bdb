"""Inducing regions and first-return-time sampling.

The inducing region is a product of a word-prefix cylinder (kappa copies of
a chosen good index followed by one other index) with a union of two
intervals J0, J1 bracketing the turning point from outside: J0 between the
extreme branch-partition points of the kappa-th iterate of the good map in
(0,c), and symmetrically J1 in (c,1).  First returns to that region feed a
Kac-style finiteness diagnostic: the return-time integral over the region
equals the total measure mass, so diverging sample means flag an infinite
stationary measure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rimlab import stepper
from rimlab.maps import branch_inverse, evaluate
from rimlab.system import RandomSystem, make_rng

__all__ = [
    "DepthError",
    "InvalidKappa",
    "CriticalQuadruple",
    "ConditionFlag",
    "InducingScheme",
    "ReturnTimeSample",
    "KacDiagnostic",
    "critical_points_iterate",
    "build_inducing_domain",
    "find_kappa",
    "sample_return_time",
    "collect_return_times",
    "kac_estimate",
    "diagnose_returns",
]

PREIMAGE_BUDGET = 1 << 22
SAMPLE_CHUNK = 256          # fixed chunk size keeps results thread-count independent


class DepthError(RuntimeError):
    """Preimage tree exceeded the memory budget."""


class InvalidKappa(ValueError):
    """The requested kappa fails the inducing-domain conditions."""


@dataclass(frozen=True)
class CriticalQuadruple:
    """Extreme branch-partition points of the k-th good-map iterate.

    x and x_prime are the points in (0,c) closest to 0 and to c; y_prime
    and y the points in (c,1) closest to c and to 1.  k = 1 has no interior
    partition point, which is reported as degenerate.
    """

    k: int
    x: Optional[float]
    x_prime: Optional[float]
    y_prime: Optional[float]
    y: Optional[float]

    @property
    def degenerate(self) -> bool:
        return self.x is None


def critical_points_iterate(g_map, k: int, budget: int = PREIMAGE_BUDGET) -> CriticalQuadruple:
    """Quadruple for the k-th iterate via breadth-first preimages of c.

    The partition points of the k-th iterate are the points sent to c by
    some earlier iterate; they are gathered by expanding c through the
    monotone branch inverses level by level.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    c = g_map.c
    level = [c]
    points: list[float] = [c]
    for _ in range(k - 1):
        nxt = []
        for y in level:
            for br in g_map.branches:
                lo, hi = br.range_
                if lo < y < hi:
                    nxt.append(branch_inverse(g_map, br, y))
        level = nxt
        points.extend(level)
        if len(points) > budget:
            raise DepthError(f"preimage tree exceeded {budget} points at k = {k}")
    left = sorted(p for p in points if 0.0 < p < c)
    right = sorted(p for p in points if c < p < 1.0)
    if not left or not right:
        return CriticalQuadruple(k, None, None, None, None)
    return CriticalQuadruple(k, left[0], left[-1], right[0], right[-1])


@dataclass(frozen=True)
class ConditionFlag:
    name: str
    passed: bool
    margin: float
    note: str = ""


@dataclass(frozen=True)
class InducingScheme:
    """Prefix cylinder (g repeated kappa times, then t) crossed with J0 u J1."""

    g: int
    t: int
    kappa: int
    j0: tuple[float, float]
    j1: tuple[float, float]
    conditions: tuple[ConditionFlag, ...]
    valid: bool
    expansion_d: float          # uniform expansion constant outside [x_k, y_k]

    @property
    def prefix(self) -> tuple[int, ...]:
        # t < 0 with kappa = 0 marks the degenerate whole-space cylinder,
        # useful for sanity checks (every first return then takes one step)
        if self.kappa == 0 and self.t < 0:
            return ()
        return (self.g,) * self.kappa + (self.t,)

    def j_lengths(self) -> tuple[float, float]:
        return (self.j0[1] - self.j0[0], self.j1[1] - self.j1[0])

    def to_dict(self) -> dict:
        return {
            "g": self.g, "t": self.t, "kappa": self.kappa,
            "j0": list(self.j0), "j1": list(self.j1),
            "valid": self.valid, "expansion_d": self.expansion_d,
            "conditions": [
                {"name": f.name, "passed": f.passed, "margin": f.margin, "note": f.note}
                for f in self.conditions],
        }


def build_inducing_domain(system: RandomSystem, g: int, t: int, kappa: int,
                          grid_points: int = 2048) -> InducingScheme:
    """Evaluate the inducing-domain conditions for a given kappa.

    Checks: the images of the inner partition points x_k', y_k' under the
    chosen good map leave the gap (x_k', y_k'); every map sends
    [0, x_k] u [y_k, 1] into [0, x_k') u (y_k', 1]; and every map expands by
    a uniform d > 1 outside [x_k, y_k].  Raises InvalidKappa if any fails.
    """
    if g not in system.sigma_g:
        raise ValueError(f"index {g} is not a good map")
    if t == g:
        raise ValueError("the prefix terminator t must differ from g")
    if not 0 <= t < len(system.maps):
        raise ValueError(f"index {t} out of range")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    quad = critical_points_iterate(system.maps[g], kappa)
    flags: list[ConditionFlag] = []
    if quad.degenerate or quad.x == quad.x_prime or quad.y == quad.y_prime:
        flags.append(ConditionFlag("nonempty-J", False, -1.0,
                                   f"iterate {kappa} has no interior gap"))
        raise InvalidKappa(_fail_text(kappa, flags))
    xk, xk_p, yk_p, yk = quad.x, quad.x_prime, quad.y_prime, quad.y
    flags.append(ConditionFlag("nonempty-J", True, min(xk_p - xk, yk - yk_p)))

    gm = system.maps[g]
    for name, pt in (("image-of-x-prime", xk_p), ("image-of-y-prime", yk_p)):
        img = evaluate(gm, pt)
        margin = max(xk_p - img, img - yk_p)
        flags.append(ConditionFlag(name, margin >= 0.0, margin,
                                   f"T_g({pt:.6g}) = {img:.6g} must leave ({xk_p:.6g}, {yk_p:.6g})"))

    # every map sends the outer pieces into [0, x_k') u (y_k', 1]
    for j, m in enumerate(system.maps):
        worst = math.inf
        for lo, hi in ((0.0, xk), (yk, 1.0)):
            ends = (evaluate(m, lo), evaluate(m, hi))
            a, b = min(ends), max(ends)
            inside_left = xk_p - b if a <= xk_p else math.inf
            inside_right = a - yk_p if b >= yk_p else math.inf
            margin = max(inside_left, inside_right)
            if a < xk_p < b or a < yk_p < b or (a < xk_p and b > yk_p):
                margin = -max(b - xk_p, yk_p - a)
            worst = min(worst, margin)
        flags.append(ConditionFlag(f"outer-image-map-{j}", worst >= 0.0, worst))

    # uniform expansion outside [x_k, y_k]
    d_min = math.inf
    for j, m in enumerate(system.maps):
        for lo, hi in ((0.0, xk), (yk, 1.0)):
            xs = np.linspace(lo, hi, grid_points)
            for x in xs:
                from rimlab.maps import eval3
                d_min = min(d_min, abs(eval3(m, float(x))[1]))
    d_est = d_min * 0.99
    flags.append(ConditionFlag("uniform-expansion", d_est > 1.0, d_est - 1.0,
                               f"grid min |DT| = {d_min:.6g}"))

    valid = all(f.passed for f in flags)
    scheme = InducingScheme(g, t, kappa, (xk, xk_p), (yk_p, yk), tuple(flags),
                            valid, d_est)
    if not valid:
        raise InvalidKappa(_fail_text(kappa, flags))
    return scheme


def _fail_text(kappa: int, flags: list[ConditionFlag]) -> str:
    bad = ", ".join(f.name for f in flags if not f.passed)
    return f"kappa = {kappa} rejected ({bad}); increase kappa"


def find_kappa(system: RandomSystem, g: Optional[int] = None, t: Optional[int] = None,
               kappa_max: int = 16) -> InducingScheme:
    """Smallest kappa accepted by build_inducing_domain."""
    if g is None:
        g = system.sigma_g[0]
    if t is None:
        t = next(j for j in system.sigma_b if j != g)
    last = None
    for kappa in range(1, kappa_max + 1):
        try:
            return build_inducing_domain(system, g, t, kappa)
        except InvalidKappa as err:
            last = err
    raise InvalidKappa(f"no valid kappa <= {kappa_max}: {last}")


# ---------------------------------------------------------------------------
# return-time sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReturnTimeSample:
    """First-return times to the inducing region, in sample order.

    raw holds one entry per draw, -1 marking samples that hit the cap;
    times is the uncapped subset (what means and medians are taken over).
    """

    raw: np.ndarray              # int64, -1 = capped
    cap: int
    block_checks: tuple          # optional per-sample escape-bound records

    @property
    def times(self) -> np.ndarray:
        return self.raw[self.raw > 0]

    @property
    def n_capped(self) -> int:
        return int((self.raw < 0).sum())

    @property
    def n_samples(self) -> int:
        return self.raw.size

    @property
    def capped_fraction(self) -> float:
        return self.n_capped / self.raw.size if self.raw.size else 0.0


def _draw_starts(scheme: InducingScheme, rng, n: int) -> np.ndarray:
    w0, w1 = scheme.j_lengths()
    side_is_j0 = rng.random(n) * (w0 + w1) < w0
    pos = rng.random(n)
    lo = np.where(side_is_j0, scheme.j0[0], scheme.j1[0])
    width = np.where(side_is_j0, w0, w1)
    return lo + pos * width


def _run_chunk(scheme: InducingScheme, system: RandomSystem, rng, n: int,
               cap: int, keep_words: bool):
    """n first-return samples from one generator, batched through the kernel.

    Returns (times, x_kappa, x_return, words-or-None); words are the
    sample-local symbol sequences (prefix included), only kept on request.
    """
    k = system.kernel
    kappa = scheme.kappa
    pattern = np.array(scheme.prefix, dtype=np.int64)
    starts = _draw_starts(scheme, rng, n)
    times = np.zeros(n, dtype=np.int64)
    x_kappa = starts.copy()
    x_return = np.full(n, np.nan)
    word_start = np.zeros(n, dtype=np.int64)
    istate = np.zeros(5, dtype=np.int64)
    fstate = np.array([starts[0], 0.0])
    cum = k.cum_p
    stream = np.searchsorted(cum, rng.random(1 << 16), side="right")
    while True:
        rc = stepper.run_return_batch(
            k.c, k.switch_d, k.branch, k.at_0, k.at_c, k.at_1, k.anext,
            k.log_aff, pattern, kappa,
            scheme.j0[0], scheme.j0[1], scheme.j1[0], scheme.j1[1], cap,
            stream, starts, istate, fstate,
            times, x_kappa, x_return, word_start)
        if rc == stepper.CHUNK_DONE:
            break
        fresh = np.searchsorted(cum, rng.random(max(stream.size, 1 << 16)),
                                side="right")
        if keep_words:
            stream = np.concatenate([stream, fresh])
        else:
            # the kernel's cursor is pinned at the active sample's word start,
            # so everything before it is fully consumed and can be trimmed
            keep_from = int(istate[2])
            stream = np.concatenate([stream[keep_from:], fresh])
            istate[2] = 0
    words = None
    if keep_words:
        words = []
        for si in range(n):
            t = int(times[si])
            used = (t if t > 0 else cap) + kappa + 1 - pattern.size
            s0 = int(word_start[si])
            words.append(np.concatenate([pattern, stream[s0:s0 + used]]))
    return times, x_kappa, x_return, words


def sample_return_time(scheme: InducingScheme, system: RandomSystem, rng,
                       cap: int = 10 ** 6) -> Optional[int]:
    """One first-return time, or None when the cap is hit (a capped sample).

    Draws a word beginning with the scheme prefix and a start point uniform
    in J, then iterates the hybrid stepper until the shifted word matches
    the prefix again while the point lies in J.
    """
    times, _, _, _ = _run_chunk(scheme, system, rng, 1, cap, keep_words=False)
    t = int(times[0])
    return t if t > 0 else None


def collect_return_times(scheme: InducingScheme, system: RandomSystem,
                         n_samples: int, cap: int = 10 ** 6, seed: int = 0,
                         threads: int = 1,
                         check_blocks: bool = False) -> ReturnTimeSample:
    """n_samples independent first-return draws with per-chunk streams.

    Sample i belongs to chunk i // SAMPLE_CHUNK, which draws everything from
    its own stream hashed from (seed, chunk); results are reproducible and
    independent of the thread count.
    """
    n_chunks = (n_samples + SAMPLE_CHUNK - 1) // SAMPLE_CHUNK

    def run_chunk(ci: int):
        rng = make_rng(seed, ci)
        lo = ci * SAMPLE_CHUNK
        hi = min(lo + SAMPLE_CHUNK, n_samples)
        times, x_kappa, x_return, words = _run_chunk(
            scheme, system, rng, hi - lo, cap, keep_words=check_blocks)
        blocks = []
        if check_blocks:
            for t, xk, w in zip(times, x_kappa, words):
                if t > 0:
                    blocks.append(_block_record(scheme, system, int(t),
                                                float(xk), w))
        return times, blocks

    chunk_results = [None] * n_chunks
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for ci, res in zip(range(n_chunks), pool.map(run_chunk, range(n_chunks))):
                chunk_results[ci] = res
    else:
        for ci in range(n_chunks):
            chunk_results[ci] = run_chunk(ci)

    all_times, all_blocks = [], []
    for times, blocks in chunk_results:
        all_times.extend(int(t) for t in times)
        all_blocks.extend(blocks)
    arr = np.array(all_times, dtype=np.int64)
    return ReturnTimeSample(raw=arr, cap=cap, block_checks=tuple(all_blocks))


@dataclass(frozen=True)
class BlockCheck:
    """Escape-time lower-bound record for one sampled return.

    When the word right after the prefix is a maximal all-bad block with
    order product big_l, entered within gamma of c, the return cannot occur
    before kappa + n_block + 1 + k1 + k2*big_l steps.
    """

    return_time: int
    block_len: int
    big_l: float
    x_kappa: float
    applicable: bool
    lower_bound: float

    @property
    def satisfied(self) -> bool:
        return (not self.applicable) or self.return_time >= self.lower_bound - 1e-9


def _block_record(scheme: InducingScheme, system: RandomSystem, t: int,
                  x_kappa: float, syms: np.ndarray) -> BlockCheck:
    from rimlab.bounds import escape_constants, envelope_constants

    kappa = scheme.kappa
    bad = set(system.sigma_b)
    n_block, big_l = 0, 1.0
    i = kappa
    while i < min(t, syms.size) and int(syms[i]) in bad:
        big_l *= system.maps[int(syms[i])].order
        n_block += 1
        i += 1
    followed_by_good = i < syms.size and int(syms[i]) in set(system.sigma_g) and n_block >= 1
    env = envelope_constants(system)
    gamma = min(env.delta, 0.5 / env.m_tilde) if env.m_tilde else env.delta
    applicable = followed_by_good and abs(x_kappa - system.c) <= gamma
    bound = 0.0
    if applicable:
        dist = min(scheme.j0[0], 1.0 - scheme.j1[1])
        k1, k2, _ = escape_constants(system, scheme.g, dist)
        bound = kappa + n_block + 1 + k1 + k2 * big_l
    return BlockCheck(t, n_block, big_l, x_kappa, applicable, bound)


# ---------------------------------------------------------------------------
# Kac diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KacDiagnostic:
    """Return-time summary with a mean-stabilization verdict.

    The verdict compares the mean over the first tenth of the samples with
    the mean over all of them: a finite stationary measure gives a
    stabilizing mean, an infinite one a drifting mean.
    """

    n_samples: int
    cap: int
    mean: float
    median: float
    prefix_mean: float          # mean over the first n_samples/10 draws
    relative_change: float
    stable: bool
    capped_fraction: float
    tail_bins: np.ndarray       # log2 histogram edges
    tail_counts: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples, "cap": self.cap,
            "mean": self.mean, "median": self.median,
            "prefix_mean": self.prefix_mean,
            "relative_change": self.relative_change, "stable": self.stable,
            "capped_fraction": self.capped_fraction,
            "tail_bins": self.tail_bins.tolist(),
            "tail_counts": self.tail_counts.tolist(),
        }


def diagnose_returns(raw: np.ndarray, cap: int,
                     stability_threshold: float = 0.1) -> KacDiagnostic:
    """Build the diagnostic from an ordered raw sample array (-1 = capped)."""
    times = raw[raw > 0]
    if times.size == 0:
        raise RuntimeError("all samples capped; increase cap")
    prefix = times[: max(1, times.size // 10)]
    mean = float(times.mean())
    prefix_mean = float(prefix.mean())
    rel = abs(mean - prefix_mean) / prefix_mean
    max_pow = max(1, int(math.ceil(math.log2(max(cap, 2)))))
    edges = 2.0 ** np.arange(0, max_pow + 1)
    counts, _ = np.histogram(times, bins=edges)
    capped = int((raw < 0).sum())
    return KacDiagnostic(
        n_samples=int(raw.size), cap=cap, mean=mean, median=float(np.median(times)),
        prefix_mean=prefix_mean, relative_change=float(rel),
        stable=rel < stability_threshold,
        capped_fraction=capped / raw.size if raw.size else 0.0,
        tail_bins=edges, tail_counts=counts)


def kac_estimate(scheme: InducingScheme, system: RandomSystem, n_samples: int,
                 cap: int = 10 ** 6, seed: int = 0, threads: int = 1,
                 stability_threshold: float = 0.1) -> KacDiagnostic:
    """Mean/median/tail of first-return times plus the stabilization verdict."""
    sample = collect_return_times(scheme, system, n_samples, cap, seed, threads)
    return diagnose_returns(sample.raw, cap, stability_threshold)
