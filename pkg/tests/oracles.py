"""Slow, loop-based reference implementations used to cross-check the library."""

import math


def reference_wdr(w, t0, passes):
    """Per-pass (symbol text, refinement bit text) and the decoded values.

    Written from the textbook description: scan for magnitudes at or above
    the threshold, emit the sign followed by the binary gap with its leading
    one removed, then refine earlier coefficients by interval halving.
    """
    w = [float(x) for x in w]
    approx = {}
    order = []
    out = []
    T = t0
    for p in range(1, passes + 1):
        T = t0 / 2**p
        refine = ""
        for i in order:
            if abs(w[i]) >= approx[i] + T:
                approx[i] += T
                refine += "1"
            else:
                refine += "0"
        sig = ""
        last = 0
        for i, x in enumerate(w):
            if i in approx or abs(x) < T:
                continue
            gap = i + 1 - last
            last = i + 1
            sig += ("+" if x >= 0 else "-") + bin(gap)[3:]
            # in later passes |x| < 2T, so the first value is T; pass one may see larger multiples
            approx[i] = math.floor(abs(x) / T) * T if p == 1 else T
            order.append(i)
        out.append((sig, refine))
    values = [0.0] * len(w)
    for i, a in approx.items():
        values[i] = math.copysign(a, w[i])
    return out, values
