"""Independent reference evaluators used by the tests.

Everything here is written directly from the defining formulas with plain
Python loops, and deliberately shares no code with the package.
"""

import itertools
import math


def interval_index(p, M):
    """Index m (0-based) with p in [m/M, (m+1)/M), the last interval closed."""
    for m in range(M):
        lo, hi = m / M, (m + 1) / M
        if lo <= p < hi or (m == M - 1 and lo <= p <= hi):
            return m
    raise ValueError(p)


def _argmax(row):
    best = 0
    for j in range(1, len(row)):
        if row[j] > row[best]:
            best = j
    return best


def _binned_gap_terms(conf, hits, M):
    n = len(conf)
    bins = [[] for _ in range(M)]
    for i in range(n):
        bins[interval_index(conf[i], M)].append(i)
    terms = []
    for members in bins:
        if not members:
            continue
        acc = sum(hits[i] for i in members) / len(members)
        c = sum(conf[i] for i in members) / len(members)
        terms.append((len(members) / n, abs(acc - c)))
    return terms


def ece(probs, labels, M):
    conf = [max(r) for r in probs]
    hits = [1.0 if _argmax(r) == y else 0.0 for r, y in zip(probs, labels)]
    return sum(w * g for w, g in _binned_gap_terms(conf, hits, M))


def mce(probs, labels, M):
    conf = [max(r) for r in probs]
    hits = [1.0 if _argmax(r) == y else 0.0 for r, y in zip(probs, labels)]
    return max(g for _, g in _binned_gap_terms(conf, hits, M))


def cwece(probs, labels, M):
    K = len(probs[0])
    total = 0.0
    for j in range(K):
        conf = [r[j] for r in probs]
        hits = [1.0 if y == j else 0.0 for y in labels]
        total += sum(w * g for w, g in _binned_gap_terms(conf, hits, M))
    return total / K


def nll(probs, labels):
    return -sum(math.log(max(r[y], 1e-12)) for r, y in zip(probs, labels)) / len(probs)


def brier(probs, labels):
    total = 0.0
    for r, y in zip(probs, labels):
        total += sum((a - (1.0 if j == y else 0.0)) ** 2 for j, a in enumerate(r))
    return total / len(probs)


def isotonic_brute_force(values, weights=None):
    """Exhaustive search over contiguous block partitions.

    The isotonic least-squares solution is constant on blocks, equal to each
    block's weighted mean, with nondecreasing block means. Among partitions
    whose block means are nondecreasing, take the one with smallest loss.
    """
    m = len(values)
    w = [1.0] * m if weights is None else list(weights)
    best, best_loss = None, math.inf
    for cuts in itertools.product((False, True), repeat=m - 1):
        blocks, start = [], 0
        for i, cut in enumerate(cuts, start=1):
            if cut:
                blocks.append((start, i))
                start = i
        blocks.append((start, m))
        fitted, means = [], []
        for s, e in blocks:
            ws = sum(w[s:e])
            mean = sum(w[i] * values[i] for i in range(s, e)) / ws
            means.append(mean)
            fitted += [mean] * (e - s)
        if any(means[k] > means[k + 1] + 1e-15 for k in range(len(means) - 1)):
            continue
        loss = sum(w[i] * (fitted[i] - values[i]) ** 2 for i in range(m))
        if loss < best_loss - 1e-15:
            best, best_loss = fitted, loss
    return best


def central_difference(f, x, h=1e-5):
    grad = []
    for k in range(len(x)):
        xp = list(x)
        xm = list(x)
        xp[k] += h
        xm[k] -= h
        grad.append((f(xp) - f(xm)) / (2 * h))
    return grad


def softmax_nll(u_rows, labels):
    total = 0.0
    for u, y in zip(u_rows, labels):
        mx = max(u)
        lse = mx + math.log(sum(math.exp(v - mx) for v in u))
        total += lse - u[y]
    return total / len(labels)


def linear_logits(params, z_rows, mode):
    """Apply a linear-in-logit map written out elementwise."""
    K = len(z_rows[0])
    out = []
    for z in z_rows:
        if mode == "temperature":
            T = math.exp(params[0])
            out.append([v / T for v in z])
        elif mode == "vector":
            out.append([params[j] * z[j] for j in range(K)])
        elif mode == "vector-bias":
            out.append([params[j] * z[j] + params[K + j] for j in range(K)])
        else:
            W = [params[r * K:(r + 1) * K] for r in range(K)]
            b = params[K * K:]
            out.append([sum(W[r][c] * z[c] for c in range(K)) + b[r] for r in range(K)])
    return out
