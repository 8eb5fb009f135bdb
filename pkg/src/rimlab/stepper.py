"""Compiled orbit kernels with log-space tracking near 0, c and 1.

Random orbits of these systems spend most of their time superexponentially
close to the turning point c or to the endpoint fixed points.  In plain
float64 a bad-map run squares the distance to c every step, underflows in a
handful of iterations, and the orbit lands exactly on c (then on 0 or 1)
and is absorbed -- which silently truncates exactly the excursions that
carry the interesting statistics.  The kernels here therefore switch to an
exact log-distance representation whenever an orbit comes within
``ENTER_D`` of an anchor point, stepping log|x - anchor| with closed-form
per-branch formulas (stable via log1p/expm1), and switch back once the
orbit re-emerges.

State encoding: ``(mode, x, logd, acode)`` with mode 0 = plain x, mode 1 =
log-distance ``logd`` from the anchor selected by ``acode`` (0: above 0,
1: below 1, 2: left of c, 3: right of c).

``_step`` is the reference implementation of one hybrid step.  The hot
drivers are generated from ``_STEP_BODY`` -- the same logic pasted into the
loop body -- because an out-of-line step call costs ~80 ns/step while the
fused loops run at 5-20 ns/step; a test pins the two code paths to
bit-identical states.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

# Distance below which a state is represented in log space.
ENTER_D = 1e-9
LOG_EXIT = math.log(ENTER_D)
# Pre-step distance below which the exact log-space formula is used for the
# step even in plain mode (the formulas are exact for any in-branch x).
SWITCH_D_CAP = 1e-5
# log-distance assigned when a plain step lands exactly on an anchor
LOG_FLOOR = -745.0
# below this log-distance the correction term of a log step is < 1e-11 and
# is dropped (the affine part is kept exactly)
LOG_SKIP_CORR = math.log(1e-12)

FORM_POWER = 0.0
FORM_MOEBIUS = 1.0

NEED_MORE_STREAM = 1
CHUNK_DONE = 0


class SystemKernel(NamedTuple):
    """Packed per-map arrays consumed by the njit kernels."""

    c: float
    switch_d: float
    cum_p: np.ndarray          # float64[n_maps], cumulative probabilities
    branch: np.ndarray         # float64[n_maps, 2, 6]
    at_0: np.ndarray           # float64[n_maps], image of 0
    at_c: np.ndarray           # float64[n_maps], image of c
    at_1: np.ndarray           # float64[n_maps], image of 1
    anext: np.ndarray          # int64[n_maps, 4], anchor transitions
    log_aff: np.ndarray        # float64[n_maps, 4, 3]: aff0, aff1, needs_corr


def _pack_branch(form) -> np.ndarray:
    from rimlab.maps import MoebiusForm, PowerForm

    row = np.zeros(6)
    if isinstance(form, PowerForm):
        row[:] = (FORM_POWER, form.a, form.b, form.x0, form.w, form.k)
    elif isinstance(form, MoebiusForm):
        row[:] = (FORM_MOEBIUS, form.p, form.q, form.r, form.s, 0.0)
    else:  # pragma: no cover - new form kinds must be packed explicitly
        raise TypeError(f"cannot pack branch form {form!r}")
    return row


def pack_system(system) -> SystemKernel:
    """Flatten a RandomSystem into the arrays the kernels iterate over."""
    maps_ = system.maps
    n = len(maps_)
    c = system.c
    branch = np.zeros((n, 2, 6))
    at_0 = np.zeros(n)
    at_c = np.zeros(n)
    at_1 = np.zeros(n)
    anext = np.zeros((n, 4), dtype=np.int64)
    for j, m in enumerate(maps_):
        branch[j, 0] = _pack_branch(m.branches[0].form)
        branch[j, 1] = _pack_branch(m.branches[1].form)
        at_0[j], at_c[j], at_1[j] = m.value_at_0, m.value_at_c, m.value_at_1
        for a in range(4):
            z_val = (0.0, 1.0, c, c)[a]
            sigma = (1.0, -1.0, -1.0, 1.0)[a]
            br = m.branches[(0, 1, 0, 1)[a]]
            # the relevant image of the anchor is the branch's one-sided
            # limit there (maps may jump at c), i.e. the range endpoint the
            # branch attains at that domain endpoint
            increasing = br.monotonicity > 0
            at_domain_lo = z_val == br.domain[0]
            tz = br.range_[0 if at_domain_lo == increasing else 1]
            direction = float(br.monotonicity) * sigma
            if tz == 0.0:
                if direction < 0:
                    raise ValueError(f"{m.name}: image of anchor {z_val} exits [0,1]")
                anext[j, a] = 0
            elif tz == 1.0:
                if direction > 0:
                    raise ValueError(f"{m.name}: image of anchor {z_val} exits [0,1]")
                anext[j, a] = 1
            elif tz == c:
                anext[j, a] = 3 if direction > 0 else 2
            else:  # pragma: no cover - guarded by system validation
                raise ValueError(f"{m.name}: anchor {z_val} maps to non-anchor {tz}")
    # affine deep-step table: the log step is aff0 + aff1 * logd up to a
    # correction that is exactly zero for power branches anchored at their
    # own power point and O(d) otherwise (dropped below LOG_SKIP_CORR)
    log_aff = np.zeros((n, 4, 3))
    for j, m in enumerate(maps_):
        for a in range(4):
            z = (0.0, 1.0, c, c)[a]
            row = branch[j, (0, 1, 0, 1)[a]]
            if row[0] == FORM_POWER:
                b_, x0, w, kk = row[2], row[3], row[4], row[5]
                u_z = (z - x0) / w
                if u_z == 0.0:
                    log_aff[j, a] = (math.log(abs(b_)) - kk * math.log(abs(w)), kk, 0.0)
                else:
                    base = math.log(abs(b_ * kk / w)) + (kk - 1.0) * math.log(u_z)
                    log_aff[j, a] = (base, 1.0, 1.0)
            else:
                p_, q_, r_, s_ = row[1], row[2], row[3], row[4]
                den_z = r_ * z + s_
                log_aff[j, a] = (math.log(abs(p_ * s_ - q_ * r_))
                                 - 2.0 * math.log(abs(den_z)), 1.0, 1.0)
    cum_p = np.cumsum(np.asarray(system.p, dtype=np.float64))
    cum_p[-1] = 1.0
    switch_d = min(SWITCH_D_CAP, min(c, 1.0 - c) / 4.0)
    return SystemKernel(c, switch_d, cum_p, branch, at_0, at_c, at_1, anext, log_aff)


# ---------------------------------------------------------------------------
# reference single step
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _step(c, switch_d, branch, at_0, at_c, at_1, anext, log_aff,
          j, mode, x, logd, acode):
    """Apply map j to a hybrid state; returns the new (mode, x, logd, acode).

    Reference implementation; the generated drivers inline the identical
    logic (see _STEP_BODY) for speed.
    """
    if mode == 0:
        if x == 0.0:
            return 0, at_0[j], 0.0, 0
        if x == 1.0:
            return 0, at_1[j], 0.0, 0
        if x == c:
            return 0, at_c[j], 0.0, 0
        if x < switch_d:
            mode, logd, acode = 1, math.log(x), 0
        elif 1.0 - x < switch_d:
            mode, logd, acode = 1, math.log(1.0 - x), 1
        elif x - c < switch_d and c - x < switch_d:
            mode = 1
            if x < c:
                logd, acode = math.log(c - x), 2
            else:
                logd, acode = math.log(x - c), 3
        else:
            bi = 0 if x < c else 1
            if branch[j, bi, 0] == FORM_POWER:
                u = (x - branch[j, bi, 3]) / branch[j, bi, 4]
                k = branch[j, bi, 5]
                if k == 1.0:
                    v = u
                elif k == 2.0:
                    v = u * u
                elif k == 3.0:
                    v = u * u * u
                else:
                    v = u ** k
                xn = branch[j, bi, 1] + branch[j, bi, 2] * v
            else:
                xn = (branch[j, bi, 1] * x + branch[j, bi, 2]) / \
                     (branch[j, bi, 3] * x + branch[j, bi, 4])
            if xn < ENTER_D:
                return 1, 0.0, (math.log(xn) if xn > 0.0 else LOG_FLOOR), 0
            if 1.0 - xn < ENTER_D:
                return 1, 0.0, (math.log(1.0 - xn) if xn < 1.0 else LOG_FLOOR), 1
            dc = xn - c
            if dc < ENTER_D and -dc < ENTER_D:
                if dc == 0.0:
                    return 1, 0.0, LOG_FLOOR, 2
                if dc < 0.0:
                    return 1, 0.0, math.log(-dc), 2
                return 1, 0.0, math.log(dc), 3
            return 0, xn, 0.0, 0
    # log-space step
    nlogd = log_aff[j, acode, 0] + log_aff[j, acode, 1] * logd
    if log_aff[j, acode, 2] != 0.0 and logd >= LOG_SKIP_CORR:
        bi = 1 if (acode == 1 or acode == 3) else 0
        z = 0.0
        sg = 1.0
        if acode == 1:
            z, sg = 1.0, -1.0
        elif acode == 2:
            z, sg = c, -1.0
        elif acode == 3:
            z, sg = c, 1.0
        d = math.exp(logd)
        if branch[j, bi, 0] == FORM_POWER:
            u_z = (z - branch[j, bi, 3]) / branch[j, bi, 4]
            h = sg * d / (branch[j, bi, 4] * u_z)
            kk = branch[j, bi, 5]
            nlogd += math.log(abs(math.expm1(kk * math.log1p(h)) / (kk * h)))
        else:
            nlogd -= math.log(abs(1.0 + branch[j, bi, 3] * sg * d /
                                  (branch[j, bi, 3] * z + branch[j, bi, 4])))
    logd = nlogd
    acode = anext[j, acode]
    if logd > LOG_EXIT:
        if acode == 0:
            return 0, math.exp(logd), 0.0, 0
        if acode == 1:
            return 0, 1.0 - math.exp(logd), 0.0, 0
        if acode == 2:
            return 0, c - math.exp(logd), 0.0, 0
        return 0, c + math.exp(logd), 0.0, 0
    return 1, 0.0, logd, acode


@njit(cache=True, nogil=True)
def _position(c, mode, x, acode):
    if mode == 0:
        return x
    if acode == 0:
        return 0.0
    if acode == 1:
        return 1.0
    return c


# ---------------------------------------------------------------------------
# fused drivers, generated from one step-body template
# ---------------------------------------------------------------------------

# Identical logic to _step, updating (mode, x, logd, acode) in place inside
# the caller's loop after `j` is set; a test pins it to _step bit for bit.
_STEP_BODY = """
        if mode == 0:
            if x == 0.0:
                x = at_0[j]
            elif x == 1.0:
                x = at_1[j]
            elif x == c:
                x = at_c[j]
            else:
                stepped = False
                if x < switch_d:
                    mode, logd, acode = 1, math.log(x), 0
                elif 1.0 - x < switch_d:
                    mode, logd, acode = 1, math.log(1.0 - x), 1
                elif x - c < switch_d and c - x < switch_d:
                    mode = 1
                    if x < c:
                        logd, acode = math.log(c - x), 2
                    else:
                        logd, acode = math.log(x - c), 3
                else:
                    stepped = True
                    bi = 0 if x < c else 1
                    if branch[j, bi, 0] == 0.0:
                        u = (x - branch[j, bi, 3]) / branch[j, bi, 4]
                        k = branch[j, bi, 5]
                        if k == 1.0:
                            v = u
                        elif k == 2.0:
                            v = u * u
                        elif k == 3.0:
                            v = u * u * u
                        else:
                            v = u ** k
                        xn = branch[j, bi, 1] + branch[j, bi, 2] * v
                    else:
                        xn = (branch[j, bi, 1] * x + branch[j, bi, 2]) / \\
                             (branch[j, bi, 3] * x + branch[j, bi, 4])
                    if xn < ENTER_D:
                        mode, x, acode = 1, 0.0, 0
                        logd = math.log(xn) if xn > 0.0 else LOG_FLOOR
                    elif 1.0 - xn < ENTER_D:
                        mode, x, acode = 1, 0.0, 1
                        logd = math.log(1.0 - xn) if xn < 1.0 else LOG_FLOOR
                    else:
                        dc = xn - c
                        if dc < ENTER_D and -dc < ENTER_D:
                            mode, x = 1, 0.0
                            if dc == 0.0:
                                logd, acode = LOG_FLOOR, 2
                            elif dc < 0.0:
                                logd, acode = math.log(-dc), 2
                            else:
                                logd, acode = math.log(dc), 3
                        else:
                            x = xn
                if mode == 1 and not stepped:
                    # entered log space from the pre-step point: apply the map
                    nlogd = log_aff[j, acode, 0] + log_aff[j, acode, 1] * logd
                    if log_aff[j, acode, 2] != 0.0 and logd >= LOG_SKIP_CORR:
                        bi = 1 if (acode == 1 or acode == 3) else 0
                        z = 0.0
                        sg = 1.0
                        if acode == 1:
                            z, sg = 1.0, -1.0
                        elif acode == 2:
                            z, sg = c, -1.0
                        elif acode == 3:
                            z, sg = c, 1.0
                        d = math.exp(logd)
                        if branch[j, bi, 0] == 0.0:
                            u_z = (z - branch[j, bi, 3]) / branch[j, bi, 4]
                            h = sg * d / (branch[j, bi, 4] * u_z)
                            kk = branch[j, bi, 5]
                            nlogd += math.log(abs(math.expm1(kk * math.log1p(h)) / (kk * h)))
                        else:
                            nlogd -= math.log(abs(1.0 + branch[j, bi, 3] * sg * d /
                                                  (branch[j, bi, 3] * z + branch[j, bi, 4])))
                    logd = nlogd
                    acode = anext[j, acode]
                    if logd > LOG_EXIT:
                        mode = 0
                        if acode == 0:
                            x = math.exp(logd)
                        elif acode == 1:
                            x = 1.0 - math.exp(logd)
                        elif acode == 2:
                            x = c - math.exp(logd)
                        else:
                            x = c + math.exp(logd)
        else:
            nlogd = log_aff[j, acode, 0] + log_aff[j, acode, 1] * logd
            if log_aff[j, acode, 2] != 0.0 and logd >= LOG_SKIP_CORR:
                bi = 1 if (acode == 1 or acode == 3) else 0
                z = 0.0
                sg = 1.0
                if acode == 1:
                    z, sg = 1.0, -1.0
                elif acode == 2:
                    z, sg = c, -1.0
                elif acode == 3:
                    z, sg = c, 1.0
                d = math.exp(logd)
                if branch[j, bi, 0] == 0.0:
                    u_z = (z - branch[j, bi, 3]) / branch[j, bi, 4]
                    h = sg * d / (branch[j, bi, 4] * u_z)
                    kk = branch[j, bi, 5]
                    nlogd += math.log(abs(math.expm1(kk * math.log1p(h)) / (kk * h)))
                else:
                    nlogd -= math.log(abs(1.0 + branch[j, bi, 3] * sg * d /
                                          (branch[j, bi, 3] * z + branch[j, bi, 4])))
            logd = nlogd
            acode = anext[j, acode]
            if logd > LOG_EXIT:
                mode = 0
                if acode == 0:
                    x = math.exp(logd)
                elif acode == 1:
                    x = 1.0 - math.exp(logd)
                elif acode == 2:
                    x = c - math.exp(logd)
                else:
                    x = c + math.exp(logd)
"""

_POSITION_BODY = """
        if mode == 0:
            pos = x
        elif acode == 0:
            pos = 0.0
        elif acode == 1:
            pos = 1.0
        else:
            pos = c
"""

# the return kernel nests the step body one level deeper
_STEP_BODY_DEEP = _STEP_BODY.replace("\n        ", "\n            ")

_DRIVERS_SRC = f"""
def run_occupancy(c, switch_d, branch, at_0, at_c, at_1, anext, log_aff,
                  syms, reg_lo, reg_hi, counts, mode, x, logd, acode):
    nr = reg_lo.size
    for i in range(syms.size):
        j = syms[i]
{_STEP_BODY}
{_POSITION_BODY}
        for r in range(nr):
            if reg_lo[r] <= pos <= reg_hi[r]:
                counts[r] += 1
    return mode, x, logd, acode


def run_histogram(c, switch_d, branch, at_0, at_c, at_1, anext, log_aff,
                  syms, hist, mode, x, logd, acode):
    nbins = hist.size
    for i in range(syms.size):
        j = syms[i]
{_STEP_BODY}
{_POSITION_BODY}
        b = int(pos * nbins)
        if b >= nbins:
            b = nbins - 1
        if b < 0:
            b = 0
        hist[b] += 1
    return mode, x, logd, acode


def run_return_batch(c, switch_d, branch, at_0, at_c, at_1, anext, log_aff,
                     pattern, kappa, j0_lo, j0_hi, j1_lo, j1_hi, cap,
                     stream, starts, istate, fstate,
                     out_times, out_x_kappa, out_x_return, out_word_start):
    n_samples = starts.size
    plen = pattern.size
    si, i, cursor = istate[0], istate[1], istate[2]
    mode, acode = istate[3], istate[4]
    x, logd = fstate[0], fstate[1]
    while si < n_samples:
        if i == 0:
            out_word_start[si] = cursor
        done = False
        while not done:
            if i + 1 >= plen and cursor + i + kappa + 2 - plen > stream.size:
                istate[0], istate[1], istate[2] = si, i, cursor
                istate[3], istate[4] = mode, acode
                fstate[0], fstate[1] = x, logd
                return NEED_MORE_STREAM
            j = pattern[i] if i < plen else stream[cursor + i - plen]
{_STEP_BODY_DEEP}
            n = i + 1
            if n == kappa:
                out_x_kappa[si] = x if mode == 0 else \\
                    (0.0 if acode == 0 else (1.0 if acode == 1 else c))
            if n > kappa and mode == 0 and \\
                    ((j0_lo < x < j0_hi) or (j1_lo < x < j1_hi)):
                ok = True
                for q in range(plen):
                    if stream[cursor + n - plen + q] != pattern[q]:
                        ok = False
                        break
                if ok:
                    out_times[si] = n
                    out_x_return[si] = x
                    cursor += n + kappa + 1 - plen
                    done = True
            if not done:
                i = n
                if i >= cap:
                    out_times[si] = -1
                    cursor += cap + kappa + 1 - plen
                    done = True
        si += 1
        i = 0
        mode, acode, logd = 0, 0, 0.0
        x = starts[si] if si < n_samples else 0.0
    istate[0], istate[1], istate[2] = si, 0, cursor
    istate[3], istate[4] = mode, acode
    fstate[0], fstate[1] = x, logd
    return CHUNK_DONE
"""

_namespace = {
    "math": math,
    "ENTER_D": ENTER_D,
    "LOG_EXIT": LOG_EXIT,
    "LOG_FLOOR": LOG_FLOOR,
    "LOG_SKIP_CORR": LOG_SKIP_CORR,
    "NEED_MORE_STREAM": NEED_MORE_STREAM,
    "CHUNK_DONE": CHUNK_DONE,
}
exec(compile(_DRIVERS_SRC, __file__ + "/<drivers>", "exec"), _namespace)

run_occupancy = njit(cache=False, nogil=True)(_namespace["run_occupancy"])
run_histogram = njit(cache=False, nogil=True)(_namespace["run_histogram"])
run_return_batch = njit(cache=False, nogil=True)(_namespace["run_return_batch"])


@njit(cache=True, nogil=True)
def run_trace(c, branch, at_0, at_c, at_1, word, x0, out):
    """Plain float64 stepping; out[n+1] is exactly the map applied to out[n]."""
    x = x0
    out[0] = x
    for i in range(word.size):
        j = word[i]
        if x == 0.0:
            x = at_0[j]
        elif x == 1.0:
            x = at_1[j]
        elif x == c:
            x = at_c[j]
        else:
            bi = 0 if x < c else 1
            if branch[j, bi, 0] == FORM_POWER:
                u = (x - branch[j, bi, 3]) / branch[j, bi, 4]
                k = branch[j, bi, 5]
                if k == 1.0:
                    v = u
                elif k == 2.0:
                    v = u * u
                elif k == 3.0:
                    v = u * u * u
                else:
                    v = u ** k
                x = branch[j, bi, 1] + branch[j, bi, 2] * v
            else:
                x = (branch[j, bi, 1] * x + branch[j, bi, 2]) / \
                    (branch[j, bi, 3] * x + branch[j, bi, 4])
        out[i + 1] = x
    return x


@njit(cache=True, nogil=True)
def step_many(c, switch_d, branch, at_0, at_c, at_1, anext, log_aff,
              syms, mode, x, logd, acode, positions):
    """Reference-path stepping, recording positions; pins the generated
    drivers to _step in the tests."""
    for i in range(syms.size):
        mode, x, logd, acode = _step(c, switch_d, branch, at_0, at_c, at_1,
                                     anext, log_aff, syms[i], mode, x, logd, acode)
        positions[i] = _position(c, mode, x, acode)
    return mode, x, logd, acode
