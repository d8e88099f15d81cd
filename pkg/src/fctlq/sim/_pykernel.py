"""Pure-python simulation kernels.

Every kernel consumes pre-drawn integer arrays and adds into integer
aggregate arrays, so the compiled twins in ``_kernel`` produce
bit-identical results from the same inputs.  All randomness lives in the
driver.

The compiled kernels walk the queue slot by slot.  Here the green phase
is collapsed per cycle instead: while the queue is busy it moves by
a_k - 1 each slot and can only step down by one, so it empties exactly
when the running prefix minimum of (arrivals - 1) reaches -s0, and once
empty it stays empty for the rest of the green (arrivals pass).  That
leaves one scalar recursion per cycle, with everything else vectorized.

scal layout: [overflow sum, overflow square sum, passed, delayed, arrivals].
"""

from __future__ import annotations

import numpy as np


def _overflow_chain(state, thr, net, red):
    """Per-cycle overflow recursion.

    thr[i] is the absorption threshold for cycle i: starting the green
    phase at s <= thr[i] (or at 0) empties the queue before the green
    ends, giving overflow 0; otherwise the overflow is s + net[i].
    red[i] is added after the green phase to start the next cycle.
    Returns (start-of-green states, overflows, final state).
    """
    n = len(thr)
    s0 = np.empty(n, dtype=np.int64)
    xg = np.empty(n, dtype=np.int64)
    s = int(state)
    thr_l = thr.tolist()
    net_l = net.tolist()
    red_l = red.tolist()
    for i in range(n):
        s0[i] = s
        if s == 0 or s <= thr_l[i]:
            x = 0
        else:
            x = s + net_l[i]
        xg[i] = x
        s = x + red_l[i]
    return s0, xg, s


def _hist_add(hist, values):
    cap = hist.shape[0] - 1
    hist += np.bincount(np.minimum(values, cap), minlength=cap + 1)


def standard_batch(state, arr, g, r, over_hist, sog_hist, green_hist,
                   delay_hist, slot_sums, scal):
    """Standard cycles: g greens (slots 1..g) then r reds (g+1..c).

    arr: (cycles, c) arrivals.  Histograms clip into their last bin.
    Returns the carried queue state.
    """
    n_cyc, c = arr.shape
    greens = arr[:, :g]
    prefix = np.cumsum(greens, axis=1) - np.arange(1, g + 1, dtype=np.int64)
    runmin = np.minimum.accumulate(prefix, axis=1)
    red_part = arr[:, g:]
    red_tot = red_part.sum(axis=1) if r > 0 else np.zeros(n_cyc, dtype=np.int64)

    s0, xg, s_end = _overflow_chain(state, -runmin[:, -1], prefix[:, -1], red_tot)

    # queue after green slot k+1: the prefix walk until first absorption, 0 after
    s0col = s0[:, None]
    alive = (s0col > 0) & (s0col + runmin > 0)
    after = np.where(alive, s0col + prefix, 0)
    green_starts = np.concatenate([s0col, after[:, : g - 1]], axis=1)

    _hist_add(over_hist, xg)
    _hist_add(sog_hist, s0)
    green_hist += np.bincount(
        (green_starts > 0).sum(axis=1), minlength=green_hist.shape[0]
    )[: green_hist.shape[0]]

    for k in range(g):
        slot_sums[k] += green_starts[:, k].sum()
    if r > 0:
        red_cum = np.cumsum(red_part, axis=1)
        slot_sums[g] += xg.sum()
        for j in range(1, r):
            slot_sums[g + j] += (xg + red_cum[:, j - 1]).sum()

    dcap = delay_hist.shape[1] - 1
    amax = int(arr.max()) if arr.size else 0
    passed = 0
    for k in range(1, g + 1):
        nstart = green_starts[:, k - 1]
        a = arr[:, k - 1]
        empty = nstart == 0
        if empty.any():
            cnt = int(a[empty].sum())
            delay_hist[k - 1, 0] += cnt
            passed += cnt
        busy = ~empty
        srel = g - k
        for u in range(amax):
            m = busy & (a > u)
            if not m.any():
                continue
            j = nstart[m] + u
            over = j - srel
            wraps = np.where(over > 0, (over + g - 1) // g, 0)
            d = np.minimum(j + r * wraps, dcap)
            np.add.at(delay_hist[k - 1], d, 1)
    for k in range(g + 1, c + 1):
        if (k - g - 1) == 0:
            nstart = xg
        else:
            nstart = xg + red_cum[:, k - g - 2]
        a = arr[:, k - 1]
        for u in range(amax):
            m = a > u
            if not m.any():
                continue
            j = nstart[m] + u + 1
            wraps = (j + g - 1) // g
            d = np.minimum((c - k) + j + (wraps - 1) * r, dcap)
            np.add.at(delay_hist[k - 1], d, 1)

    atot = int(arr.sum())
    scal[0] += int(xg.sum())
    scal[1] += int((xg * xg).sum())
    scal[2] += passed
    scal[3] += atot - passed
    scal[4] += atot
    return s_end


def right_turn_batch(state, arr, g, r, over_hist, scal):
    """Green slots always serve one head vehicle: s' = max(s + a - 1, 0).

    A Lindley walk, so the end-of-green state has the closed form
    max(s0 + T_g, T_g - min_j T_j) with T the prefix sums of a - 1.
    """
    n_cyc = arr.shape[0]
    t = np.cumsum(arr[:, :g] - 1, axis=1)
    tg = t[:, -1]
    floor = tg - np.minimum.accumulate(t, axis=1)[:, -1]
    red_tot = arr[:, g:].sum(axis=1) if r > 0 else np.zeros(n_cyc, dtype=np.int64)

    xg = np.empty(n_cyc, dtype=np.int64)
    s = int(state)
    tg_l = tg.tolist()
    fl_l = floor.tolist()
    red_l = red_tot.tolist()
    for i in range(n_cyc):
        x = s + tg_l[i]
        if x < fl_l[i]:
            x = fl_l[i]
        xg[i] = x
        s = x + red_l[i]

    _hist_add(over_hist, xg)
    scal[0] += int(xg.sum())
    scal[1] += int((xg * xg).sum())
    scal[4] += int(arr.sum())
    return s


def hesitation_batch(state, arr, hes, g, r, over_hist, scal):
    """Busy green slots lose their departure with the pre-drawn flag.

    hes: (cycles, g) 0/1, 1 meaning the head vehicle stays.  Empty
    greens still pass all arrivals, so the absorption argument from the
    standard kernel applies with net increments a + h - 1.
    """
    n_cyc = arr.shape[0]
    prefix = np.cumsum(arr[:, :g] + hes - 1, axis=1)
    runmin = np.minimum.accumulate(prefix, axis=1)
    red_tot = arr[:, g:].sum(axis=1) if r > 0 else np.zeros(n_cyc, dtype=np.int64)

    _, xg, s_end = _overflow_chain(state, -runmin[:, -1], prefix[:, -1], red_tot)

    _hist_add(over_hist, xg)
    scal[0] += int(xg.sum())
    scal[1] += int((xg * xg).sum())
    scal[4] += int(arr.sum())
    return s_end


def interrupted_batch(state, arr, reds, greens, over_hist, scal):
    """Per-cycle phase lengths: reds[i] red slots then greens[i] greens.

    arr is (cycles, width) with width >= max(reds + greens); each cycle
    consumes its first reds[i] + greens[i] entries and ignores the rest,
    which keeps the draw layout identical across kernels.
    """
    rows = arr.tolist()
    red_l = reds.tolist()
    grn_l = greens.tolist()
    s = int(state)
    xs = []
    xsum = 0
    x2 = 0
    atot = 0
    for i, row in enumerate(rows):
        ri = red_l[i]
        n_used = ri + grn_l[i]
        for k in range(ri):
            s += row[k]
        for k in range(ri, n_used):
            a = row[k]
            if s > 0:
                s += a - 1
        atot += sum(row[:n_used])
        xs.append(s)
        xsum += s
        x2 += s * s
    _hist_add(over_hist, np.asarray(xs, dtype=np.int64))
    scal[0] += xsum
    scal[1] += x2
    scal[4] += atot
    return s


def dependent_red_batch(state, arr, red_tot, g, over_hist, scal):
    """Standard greens, one pre-drawn total for the whole red period.

    arr: (cycles, g) green arrivals; red_tot[i] joins after cycle i's
    green phase.
    """
    prefix = np.cumsum(arr - 1, axis=1)
    runmin = np.minimum.accumulate(prefix, axis=1)

    _, xg, s_end = _overflow_chain(state, -runmin[:, -1], prefix[:, -1], red_tot)

    _hist_add(over_hist, xg)
    scal[0] += int(xg.sum())
    scal[1] += int((xg * xg).sum())
    scal[4] += int(arr.sum()) + int(red_tot.sum())
    return s_end
