"""Independent reference implementations used as test oracles.

Everything here is deliberately naive: explicit Python loops, float64
accumulation, coordinate sets.  None of it shares code with the package,
so agreement is meaningful.
"""

import numpy as np


def conv2d_reference(x, weights, bias):
    """Six nested loops, zero same-padding, stride 1, float64 accumulation."""
    n, c, h, w = x.shape
    oc, ic, kh, kw = weights.shape
    assert c == ic
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    out = np.zeros((n, oc, h, w), dtype=np.float64)
    for b in range(n):
        for o in range(oc):
            for y in range(h):
                for xx in range(w):
                    acc = float(bias[o])
                    for ch in range(ic):
                        for u in range(kh):
                            for v in range(kw):
                                yy = y + u - ph
                                xv = xx + v - pw
                                if 0 <= yy < h and 0 <= xv < w:
                                    acc += float(x[b, ch, yy, xv]) * float(weights[o, ch, u, v])
                    out[b, o, y, xx] = acc
    return out


def upconv2_reference(x, weights, bias):
    """Scatter every input pixel into its 2x2 output block."""
    n, ic, h, w = x.shape
    ic2, oc, kh, kw = weights.shape
    assert ic == ic2 and (kh, kw) == (2, 2)
    out = np.zeros((n, oc, 2 * h, 2 * w), dtype=np.float64)
    for b in range(n):
        for o in range(oc):
            for y in range(h):
                for xx in range(w):
                    for ch in range(ic):
                        for u in range(2):
                            for v in range(2):
                                out[b, o, 2 * y + u, 2 * xx + v] += (
                                    float(x[b, ch, y, xx]) * float(weights[ch, o, u, v]))
    out += np.asarray(bias, dtype=np.float64)[None, :, None, None]
    return out


def maxpool2_reference(x):
    """Enumerate every 2x2 window; first maximum in row-major scan wins."""
    n, c, h, w = x.shape
    out = np.zeros((n, c, h // 2, w // 2), dtype=np.float64)
    idx = np.zeros((n, c, h // 2, w // 2), dtype=np.int64)
    for b in range(n):
        for ch in range(c):
            for y in range(h // 2):
                for xx in range(w // 2):
                    values = [float(x[b, ch, 2 * y + u, 2 * xx + v])
                              for u in range(2) for v in range(2)]
                    best = 0
                    for i in range(1, 4):
                        if values[i] > values[best]:
                            best = i
                    out[b, ch, y, xx] = values[best]
                    idx[b, ch, y, xx] = best
    return out, idx


def confusion_reference(pred, truth):
    """Per-pixel enumeration into (tp, fp, fn, tn)."""
    tp = fp = fn = tn = 0
    for p, t in zip(pred.ravel().tolist(), truth.ravel().tolist()):
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif not p and t:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def iou_reference(pred, truth):
    """Jaccard index over foreground coordinate sets."""
    p = {(y, x) for y, x in zip(*np.nonzero(pred))}
    t = {(y, x) for y, x in zip(*np.nonzero(truth))}
    union = p | t
    if not union:
        return 1.0
    return len(p & t) / len(union)


def pixel_accuracy_reference(pred, truth):
    same = sum(1 for p, t in zip(pred.ravel().tolist(), truth.ravel().tolist()) if p == t)
    return same / pred.size


def adam_reference(theta, grad, m, v, t, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update on plain Python floats."""
    t = t + 1
    m = beta1 * m + (1 - beta1) * grad
    v = beta2 * v + (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    theta = theta - lr * m_hat / (v_hat ** 0.5 + eps)
    return theta, m, v, t


def unet_parameter_count_reference(depth, base, in_channels=1, out_channels=1):
    """Count parameters from the channel plan, independently of the package.

    conv(c_in -> c_out, k): c_out*c_in*k*k + c_out
    upconv(c_in -> c_out): c_in*c_out*4 + c_out
    """
    def conv(ci, co, k):
        return co * ci * k * k + co

    total = 0
    prev = in_channels
    for i in range(depth):
        c = base * 2 ** i
        total += conv(prev, c, 3) + conv(c, c, 3)
        prev = c
    c = base * 2 ** depth
    total += conv(prev, c, 3) + conv(c, c, 3)
    prev = c
    for i in reversed(range(depth)):
        c = base * 2 ** i
        total += prev * c * 4 + c          # transposed conv
        total += conv(2 * c, c, 3) + conv(c, c, 3)
        prev = c
    total += conv(base, out_channels, 1)
    return total
