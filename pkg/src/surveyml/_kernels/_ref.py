"""Pure NumPy reference kernels.

These mirror the compiled kernels in ``_core.pyx`` operation-for-operation:
every accumulation is a sequential left-to-right sum (``np.cumsum``) so the
two backends produce bit-identical floats. Inputs must already be sorted
ascending by score / feature value; sorting stays outside the kernel so both
backends see the same order.
"""

import numpy as np

BACKEND = "python"


def ht_concordance(scores, y, w):
    """Concordance mass for the pair-weighted AUROC.

    Arguments are aligned arrays sorted ascending by score. Returns
    ``(conc, wpos, wneg)`` where ``conc`` is the sum over (positive,
    negative) pairs of ``w_i * w_j`` (ties counted half) and ``wpos`` /
    ``wneg`` are the total positive / negative weights.
    """
    n = scores.shape[0]
    if n == 0:
        return 0.0, 0.0, 0.0
    wy = w * y
    wn = w - wy
    cpos = np.cumsum(wy)
    cneg = np.cumsum(wn)
    starts = np.flatnonzero(np.r_[True, scores[1:] != scores[:-1]])
    ends = np.r_[starts[1:], n]
    gpos = cpos[ends - 1] - np.where(starts > 0, cpos[starts - 1], 0.0)
    gneg = cneg[ends - 1] - np.where(starts > 0, cneg[starts - 1], 0.0)
    below = np.where(starts > 0, cneg[starts - 1], 0.0)
    terms = gpos * (below + 0.5 * gneg)
    conc = np.cumsum(terms)[-1]
    return float(conc), float(cpos[-1]), float(cneg[-1])


def tie_group_sums(scores, y, w):
    """Per-unique-score positive/negative weight sums.

    Inputs sorted ascending by score. Returns ``(thresholds, gpos, gneg)``
    with thresholds ascending; group sums are cumulative-sum differences so
    they match the compiled kernel bitwise.
    """
    n = scores.shape[0]
    if n == 0:
        empty = np.empty(0)
        return empty, empty.copy(), empty.copy()
    wy = w * y
    wn = w - wy
    cpos = np.cumsum(wy)
    cneg = np.cumsum(wn)
    starts = np.flatnonzero(np.r_[True, scores[1:] != scores[:-1]])
    ends = np.r_[starts[1:], n]
    gpos = cpos[ends - 1] - np.where(starts > 0, cpos[starts - 1], 0.0)
    gneg = cneg[ends - 1] - np.where(starts > 0, cneg[starts - 1], 0.0)
    return scores[starts].copy(), gpos, gneg


def best_split(xs, g, h, lam, min_leaf_h):
    """Best axis split for a boosting tree node.

    ``xs`` is the node's feature column sorted ascending, ``g``/``h`` the
    aligned gradient/hessian arrays. Returns ``(gain, split_index)`` where
    the left child is ``[:split_index]``; ``split_index == 0`` means no
    valid split. Gain is relative to the unsplit node, with L2 penalty
    ``lam`` on leaf values and a minimum hessian mass per child.
    """
    n = xs.shape[0]
    if n < 2:
        return 0.0, 0
    cg = np.cumsum(g)
    ch = np.cumsum(h)
    gtot = cg[-1]
    htot = ch[-1]
    parent = gtot * gtot / (htot + lam)
    gl = cg[:-1]
    hl = ch[:-1]
    gr = gtot - gl
    hr = htot - hl
    gains = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
    valid = (xs[1:] != xs[:-1]) & (hl >= min_leaf_h) & (hr >= min_leaf_h)
    if not valid.any():
        return 0.0, 0
    gains = np.where(valid, gains, -np.inf)
    k = int(np.argmax(gains))
    best = float(gains[k])
    if best <= 0.0:
        return 0.0, 0
    return best, k + 1
