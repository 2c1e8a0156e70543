"""Log-domain singular values of a matrix product, without forming the product.

The product ``A[k-1] @ ... @ A[0]`` is reduced to a triangular product by a
QR chain (``A[q] @ Q[q] = Q[q+1] @ R[q]``), so that the product equals
``Q[k] @ R[k-1] @ ... @ R[0]`` and shares its singular values with the
triangular part. The triangular part is accumulated as

    T = diag(exp(logscale)) @ W

with the row scales kept as logarithms and every stored number bounded,
so nothing overflows however long the chain. Because the factors are upper
triangular, row i of T only collects contributions from rows k >= i of the
previous partial product, which keeps small singular values accurate
relative to their own size rather than to the largest one.

The singular values of T are then read off by a one-sided (Hestenes)
Jacobi iteration on its rows, carried out on the scaled representation:
each rotation is rewritten so that only ``exp(-(logscale[i] - logscale[k]))``
with the larger scale in front ever appears, which is bounded by one.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

_EPS = np.finfo(np.float64).eps


def _row_pow2_scale(a):
    """Split ``a`` into rows rescaled by exact powers of two and their log scales.

    Scaling by 2**k is exact even for subnormal entries, so tiny rows keep
    every bit they had.
    """
    m = np.max(np.abs(a), axis=1) if a.size else np.zeros(a.shape[0])
    _, e = np.frexp(np.where(m > 0, m, 1.0))
    e = np.where(m > 0, e, 0)
    return np.ldexp(a, -e[:, None]), e * math.log(2.0)


def _normalise_rows(logscale, W):
    norms = np.linalg.norm(W, axis=1)
    ok = np.isfinite(logscale) & (norms > 0)
    W[ok] /= norms[ok, None]
    W[~ok] = 0.0
    with np.errstate(divide="ignore"):
        logscale = np.where(ok, logscale + np.log(np.where(ok, norms, 1.0)), -np.inf)
    return logscale, W


def scaled_qr(logscale, A):
    """Householder QR of ``diag(exp(logscale)) @ A`` without leaving scaled form.

    Rows are pivoted by the size of their entry in the current column and
    every update is carried out in the units of the row it changes, so rows
    far below the largest one keep their relative accuracy and nothing
    underflows. Returns ``(Q, logr, Rw)`` with ``diag(exp(logr)) @ Rw``
    upper triangular and equal to ``Q.T @ diag(exp(logscale)) @ A``.
    """
    ell, W = _normalise_rows(np.array(logscale, dtype=np.float64), np.array(A, dtype=np.float64))
    m, n = W.shape
    live = np.isfinite(ell)
    if live.all() and np.ptp(ell) < _PLAIN_QR_RANGE:
        return _sorted_qr(ell, W)
    M = np.eye(m)
    for c in range(min(m, n)):
        with np.errstate(divide="ignore"):
            size = ell[c:] + np.log(np.abs(W[c:, c]))
        p = c + int(np.argmax(size))
        if not np.isfinite(size[p - c]):
            continue
        if p != c:
            ell[[c, p]] = ell[[p, c]]
            W[[c, p]] = W[[p, c]]
            M[[c, p]] = M[[p, c]]
        L = size[p - c]
        # reflector in units of exp(L); entries of far smaller rows may underflow
        xh = np.exp(ell[c:] - L) * W[c:, c]
        alpha = -np.copysign(np.linalg.norm(xh), xh[0])
        vh = xh.copy()
        vh[0] -= alpha
        vv = vh @ vh
        s = (vh * np.exp(ell[c:] - L)) @ W[c:]
        # v_i * exp(L - ell_i) is W[i, c] below the pivot, exactly
        coef = W[c:, c].copy()
        coef[0] = vh[0] * np.exp(L - ell[c])
        W[c:] -= (2.0 / vv) * coef[:, None] * s[None, :]
        W[c + 1 :, c] = 0.0
        M[c:] -= (2.0 / vv) * np.outer(vh, vh @ M[c:])
        ell[c:], W[c:] = _normalise_rows(ell[c:], W[c:])
    W[np.tril_indices(m, -1, n)] = 0.0
    return M.T, ell, W


# row-scale spread (in nats) below which the rows can be formed in plain floats
_PLAIN_QR_RANGE = 500.0


def _sorted_qr(ell, W):
    """LAPACK QR of the formed matrix with rows sorted by decreasing size."""
    top = ell.max()
    order = np.argsort(-ell, kind="stable")
    Qs, R = np.linalg.qr(np.exp(ell[order] - top)[:, None] * W[order], mode="complete")
    Q = np.empty_like(Qs)
    Q[order] = Qs
    logr, R = _normalise_rows(np.full(R.shape[0], top), R)
    return Q, logr, R


def _scaled_step(logscale, W, R, row_log=None):
    """Left-multiply ``diag(exp(logscale)) @ W`` by ``diag(exp(row_log)) @ R``."""
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(R))
    terms = logabs + logscale[None, :]
    new_scale = np.max(terms, axis=1)
    live = np.isfinite(new_scale)
    B = np.zeros_like(R)
    if np.any(live):
        # all exponents are <= 0 by construction
        ratio = np.exp(terms[live] - new_scale[live, None])
        B[live] = np.sign(R[live]) * ratio
    if row_log is not None:
        new_scale = new_scale + row_log
    W = B @ W
    return _normalise_rows(np.where(live, new_scale, -np.inf), W)


def triangular_chain(factors):
    """QR-chain reduction of the product of ``factors`` (applied in order).

    Returns ``(logscale, W)`` with ``diag(exp(logscale)) @ W`` having the
    same singular values as the product. Rows of ``W`` have unit norm or are
    zero (with ``logscale`` = -inf).
    """
    factors = [np.asarray(f, dtype=np.float64) for f in factors]
    if not factors:
        raise ValueError("empty chain")
    d0 = factors[0].shape[1]
    Q = np.eye(d0)
    logscale = np.zeros(d0)
    W = np.eye(d0)
    for f in factors:
        f, rowlog = _row_pow2_scale(f)
        Q, logr, R = scaled_qr(rowlog, f @ Q)
        R = R[: min(R.shape)]
        logr = logr[: R.shape[0]]
        logscale, W = _scaled_step(logscale, W, R, logr)
        Q = Q[:, : R.shape[0]]
    return logscale, W


def _round_robin(n):
    """Pairings of a round-robin tournament: n-1 rounds of disjoint pairs."""
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        rounds.append([(a, b) for a, b in pairs if a < n and b < n])
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_PRECONDITION_RANGE = 600.0


def _rows_of_r(ell, w, pivoting):
    G = w.T * np.exp(ell - ell.max())[None, :]
    R = scipy.linalg.qr(G, mode="r", pivoting=pivoting)[0][: w.shape[0]]
    nrm = np.linalg.norm(R, axis=1)
    ok = nrm > 0
    new_ell = np.full(R.shape[0], -np.inf)
    new_ell[ok] = ell.max() + np.log(nrm[ok])
    R[ok] /= nrm[ok, None]
    return new_ell[ok], R[ok]


def _precondition(ell, w):
    """Swap the rows for those of a triangular factor with the same singular values.

    A column-pivoted QR of the transpose followed by a plain QR of the
    result's transpose leaves a nearly diagonal matrix, on which Jacobi
    converges in a few sweeps. Pivoted QR is insensitive to column scaling,
    so the rescaled transpose may be formed as long as the scale range stays
    inside the float exponent range. Zero rows are dropped.
    """
    ell, w = _rows_of_r(ell, w, pivoting=True)
    if ell.size > 1:
        ell, w = _rows_of_r(ell, w, pivoting=False)
    return ell, w


def scaled_jacobi_log_singular_values(logscale, W, tol=None, max_sweeps=80):
    """Log singular values of ``diag(exp(logscale)) @ W`` by one-sided Jacobi.

    Rows are rotated in pairs until mutually orthogonal; the singular values
    are then the row norms. Returns log singular values, one per row of W,
    sorted descending (zero rows give -inf).
    """
    logscale = np.array(logscale, dtype=np.float64)
    W = np.array(W, dtype=np.float64)
    live = np.flatnonzero(np.isfinite(logscale) & (np.linalg.norm(W, axis=1) > 0))
    out = np.full(W.shape[0], -np.inf)
    n = live.size
    if n == 0:
        return out
    ell = logscale[live]
    w = W[live].copy()
    nrm = np.linalg.norm(w, axis=1)
    w /= nrm[:, None]
    ell = ell + np.log(nrm)
    if n > 1 and np.ptp(ell) < _PRECONDITION_RANGE:
        ell, w = _precondition(ell, w)
        n = ell.size
    if tol is None:
        tol = max(w.shape) * _EPS
    rounds = [(np.array([p[0] for p in r]), np.array([p[1] for p in r])) for r in _round_robin(n) if r]
    with np.errstate(invalid="ignore", divide="ignore"):
        ell = _jacobi_sweeps(ell, w, rounds, tol, max_sweeps)
    out[:n] = ell
    return _sort_desc(out)


def _jacobi_sweeps(ell, w, rounds, tol, max_sweeps):
    for _ in range(max_sweeps):
        rotated = False
        for I, K in rounds:
            # order each pair so that row I carries the larger scale
            swap = ell[I] < ell[K]
            I, K = np.where(swap, K, I), np.where(swap, I, K)
            a = np.einsum("ij,ij->i", w[I], w[I])
            b = np.einsum("ij,ij->i", w[K], w[K])
            d = np.einsum("ij,ij->i", w[I], w[K])
            delta = ell[I] - ell[K]
            E = np.exp(-delta)
            # the cosine between the true rows does not depend on the scales
            active = np.abs(d) > tol * np.sqrt(a * b)
            if not np.any(active):
                continue
            rotated = True
            I, K, a, b, d, E = I[active], K[active], a[active], b[active], d[active], E[active]
            zeta_e = (E * E * b - a) / (2.0 * d)
            sgn = np.where(zeta_e >= 0, 1.0, -1.0)
            tau = sgn / (np.abs(zeta_e) + np.sqrt(E * E + zeta_e * zeta_e))
            c = 1.0 / np.sqrt(1.0 + (tau * E) ** 2)
            wi, wk = w[I], w[K]
            new_i = c[:, None] * (wi - (tau * E * E)[:, None] * wk)
            new_k = c[:, None] * (tau[:, None] * wi + wk)
            ni = np.linalg.norm(new_i, axis=1)
            nk = np.linalg.norm(new_k, axis=1)
            ell[I] = ell[I] + np.log(ni)
            ell[K] = ell[K] + np.log(nk)
            w[I] = new_i / np.where(ni > 0, ni, 1.0)[:, None]
            w[K] = new_k / np.where(nk > 0, nk, 1.0)[:, None]
        if not rotated:
            break
    return ell


def _sort_desc(values):
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(-values, kind="stable")
    return values[order]


def log_singular_values(factors, pad_to=None):
    """Log singular values of ``factors[-1] @ ... @ factors[0]``, descending.

    ``pad_to`` extends the result with -inf entries (rank lost to a narrow
    intermediate layer).
    """
    logscale, W = triangular_chain(factors)
    out = scaled_jacobi_log_singular_values(logscale, W)
    if pad_to is not None and pad_to > out.size:
        out = np.concatenate([out, np.full(pad_to - out.size, -np.inf)])
    return out
