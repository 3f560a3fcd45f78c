"""Numeric kernels with a numba fast path and a pure-numpy fallback.

Every kernel exists twice: a vectorized numpy implementation (``_np_*``)
and a loop implementation compiled with ``numba.njit``. The public names
are bound to one backend at import time. Set ``MINSM_DISABLE_NUMBA=1`` to
force the numpy fallback; the fallback is also selected automatically when
numba is not importable. ``minsm bench --backends`` compares the two.

Both backends compute the same formulas; results agree to float rounding
(summation order may differ between them, so cross-backend equality is
close, not bitwise).
"""

import math
import os
import warnings

import numpy as np

_LN_2PI = math.log(2.0 * math.pi)

# Weighted-minhash sample identifiers pack (coordinate, level) into one
# int64: coordinate * 2^40 + level + 2^39. Levels stay far below 2^39 for
# any realistic weight/seed combination.
_K_SHIFT = np.int64(1) << np.int64(40)
_T_OFFSET = np.int64(1) << np.int64(39)


def _env_disabled() -> bool:
    return os.environ.get("MINSM_DISABLE_NUMBA", "0").strip().lower() not in (
        "0",
        "",
        "false",
    )


try:
    if _env_disabled():
        raise ImportError("numba disabled via MINSM_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False
    if not _env_disabled():
        warnings.warn("numba unavailable, falling back to pure numpy kernels")

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------


def _np_icws_code(w, r, lnc, beta):
    idx = np.nonzero(w > 0.0)[0]
    ri = r[idx]
    bi = beta[idx]
    t = np.floor(np.log(w[idx]) / ri + bi)
    ln_y = ri * (t - bi)
    ln_a = lnc[idx] - ln_y - ri
    j = int(np.argmin(ln_a))
    return np.int64(idx[j]) * _K_SHIFT + np.int64(t[j]) + _T_OFFSET


def _np_icws_codes(W, r, lnc, beta):
    out = np.empty(W.shape[0], dtype=np.int64)
    for i in range(W.shape[0]):
        out[i] = _np_icws_code(W[i], r, lnc, beta)
    return out


def _np_icws_codes_over_seeds(w, r, lnc, beta):
    # r, lnc, beta have shape (seeds, dims); one code per seed.
    idx = np.nonzero(w > 0.0)[0]
    lnw = np.log(w[idx])
    ri = r[:, idx]
    bi = beta[:, idx]
    t = np.floor(lnw[None, :] / ri + bi)
    ln_a = lnc[:, idx] - ri * (t - bi) - ri
    j = np.argmin(ln_a, axis=1)
    rows = np.arange(r.shape[0])
    return idx[j].astype(np.int64) * _K_SHIFT + t[rows, j].astype(np.int64) + _T_OFFSET


def _np_srp_code(v, planes):
    proj = planes @ v
    bits = (proj >= 0.0).astype(np.int64)
    return np.int64((bits << np.arange(planes.shape[0], dtype=np.int64)).sum())


def _np_srp_codes(X, planes):
    bits = (X @ planes.T >= 0.0).astype(np.int64)
    weights = np.int64(1) << np.arange(planes.shape[0], dtype=np.int64)
    return bits @ weights


def _np_collide_avoid_ratio(colliders, avoiders):
    cmin = colliders.min(axis=0)
    union = colliders.max(axis=0)
    if avoiders.shape[0] > 0:
        amax = avoiders.max(axis=0)
        union = np.maximum(union, amax)
        cmin = cmin - amax
    num = float(np.maximum(cmin, 0.0).sum())
    den = float(union.sum())
    if den <= 0.0:
        return math.nan
    return num / den


def _np_weighted_jaccard(x, y):
    den = float(np.maximum(x, y).sum())
    if den <= 0.0:
        return math.nan
    return float(np.minimum(x, y).sum()) / den


def _np_gaussian_log_marginal(count, s, q, mu0, kappa0, alpha0, beta0):
    n = float(count)
    d = s.shape[0]
    kn = kappa0 + n
    an = alpha0 + 0.5 * n
    mean = s / n
    ss = np.maximum(q - s * s / n, 0.0)
    bn = beta0 + 0.5 * ss + 0.5 * kappa0 * n * (mean - mu0) ** 2 / kn
    const = -0.5 * n * _LN_2PI + 0.5 * (math.log(kappa0) - math.log(kn))
    const += math.lgamma(an) - math.lgamma(alpha0)
    return float(d * const + (alpha0 * np.log(beta0) - an * np.log(bn)).sum())


def _np_cosine_collision_matrix(U, V):
    un = U / np.linalg.norm(U, axis=1, keepdims=True)
    vn = V / np.linalg.norm(V, axis=1, keepdims=True)
    cos = np.clip(un @ vn.T, -1.0, 1.0)
    return 1.0 - np.arccos(cos) / math.pi


def _np_weighted_pair_sum(P, frac, k_hashes, n_tables):
    w = 1.0 - (1.0 - P**k_hashes) ** n_tables
    return float(w.sum(axis=1) @ frac)


def _np_anchored_pair_total(Q, V, frac, k_hashes, n_tables):
    # row blocks keep the collision matrix slice small for large inputs
    qn = Q / np.linalg.norm(Q, axis=1, keepdims=True)
    vn = V / np.linalg.norm(V, axis=1, keepdims=True)
    total = 0.0
    block = max(1, (1 << 22) // max(vn.shape[0], 1))
    for start in range(0, qn.shape[0], block):
        stop = min(start + block, qn.shape[0])
        p = 1.0 - np.arccos(np.clip(qn[start:stop] @ vn.T, -1.0, 1.0)) / math.pi
        w = 1.0 - (1.0 - p**k_hashes) ** n_tables
        total += float(w.sum(axis=1) @ frac[start:stop])
    return total


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:

    @njit(cache=True)
    def _jit_icws_code(w, r, lnc, beta):
        best = np.inf
        best_k = -1
        best_t = 0.0
        for k in range(w.shape[0]):
            if w[k] <= 0.0:
                continue
            t = math.floor(math.log(w[k]) / r[k] + beta[k])
            ln_a = lnc[k] - r[k] * (t - beta[k]) - r[k]
            if ln_a < best:
                best = ln_a
                best_k = k
                best_t = t
        return np.int64(best_k) * _K_SHIFT + np.int64(best_t) + _T_OFFSET

    @njit(cache=True)
    def _jit_icws_codes(W, r, lnc, beta):
        out = np.empty(W.shape[0], dtype=np.int64)
        for i in range(W.shape[0]):
            out[i] = _jit_icws_code(W[i], r, lnc, beta)
        return out

    @njit(cache=True)
    def _jit_icws_codes_over_seeds(w, r, lnc, beta):
        out = np.empty(r.shape[0], dtype=np.int64)
        for i in range(r.shape[0]):
            out[i] = _jit_icws_code(w, r[i], lnc[i], beta[i])
        return out

    @njit(cache=True)
    def _jit_srp_code(v, planes):
        code = np.int64(0)
        for i in range(planes.shape[0]):
            proj = 0.0
            for j in range(planes.shape[1]):
                proj += planes[i, j] * v[j]
            if proj >= 0.0:
                code |= np.int64(1) << np.int64(i)
        return code

    @njit(cache=True)
    def _jit_srp_codes(X, planes):
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            out[i] = _jit_srp_code(X[i], planes)
        return out

    @njit(cache=True)
    def _jit_collide_avoid_ratio(colliders, avoiders):
        dims = colliders.shape[1]
        num = 0.0
        den = 0.0
        for j in range(dims):
            cmin = colliders[0, j]
            call = colliders[0, j]
            for i in range(1, colliders.shape[0]):
                v = colliders[i, j]
                if v < cmin:
                    cmin = v
                if v > call:
                    call = v
            amax = 0.0
            for i in range(avoiders.shape[0]):
                v = avoiders[i, j]
                if v > amax:
                    amax = v
            union = call if call > amax else amax
            gap = cmin - amax if avoiders.shape[0] > 0 else cmin
            if gap > 0.0:
                num += gap
            den += union
        if den <= 0.0:
            return math.nan
        return num / den

    @njit(cache=True)
    def _jit_weighted_jaccard(x, y):
        num = 0.0
        den = 0.0
        for j in range(x.shape[0]):
            if x[j] < y[j]:
                num += x[j]
                den += y[j]
            else:
                num += y[j]
                den += x[j]
        if den <= 0.0:
            return math.nan
        return num / den

    @njit(cache=True)
    def _jit_gaussian_log_marginal(count, s, q, mu0, kappa0, alpha0, beta0):
        n = float(count)
        d = s.shape[0]
        kn = kappa0 + n
        an = alpha0 + 0.5 * n
        total = d * (
            -0.5 * n * _LN_2PI
            + 0.5 * (math.log(kappa0) - math.log(kn))
            + math.lgamma(an)
            - math.lgamma(alpha0)
        )
        for j in range(d):
            mean = s[j] / n
            ss = q[j] - s[j] * s[j] / n
            if ss < 0.0:
                ss = 0.0
            bn = beta0[j] + 0.5 * ss + 0.5 * kappa0 * n * (mean - mu0[j]) ** 2 / kn
            total += alpha0 * math.log(beta0[j]) - an * math.log(bn)
        return total

    @njit(cache=True)
    def _jit_cosine_collision_matrix(U, V):
        out = np.empty((U.shape[0], V.shape[0]))
        d = U.shape[1]
        un = np.empty(U.shape[0])
        vn = np.empty(V.shape[0])
        for i in range(U.shape[0]):
            acc = 0.0
            for j in range(d):
                acc += U[i, j] * U[i, j]
            un[i] = math.sqrt(acc)
        for i in range(V.shape[0]):
            acc = 0.0
            for j in range(d):
                acc += V[i, j] * V[i, j]
            vn[i] = math.sqrt(acc)
        for a in range(U.shape[0]):
            for b in range(V.shape[0]):
                dot = 0.0
                for j in range(d):
                    dot += U[a, j] * V[b, j]
                cos = dot / (un[a] * vn[b])
                if cos > 1.0:
                    cos = 1.0
                elif cos < -1.0:
                    cos = -1.0
                out[a, b] = 1.0 - math.acos(cos) / math.pi
        return out

    @njit(cache=True)
    def _jit_weighted_pair_sum(P, frac, k_hashes, n_tables):
        total = 0.0
        for a in range(P.shape[0]):
            row = 0.0
            for b in range(P.shape[1]):
                row += 1.0 - (1.0 - P[a, b] ** k_hashes) ** n_tables
            total += row * frac[a]
        return total

    @njit(cache=True)
    def _jit_anchored_pair_total(Q, V, frac, k_hashes, n_tables):
        d = Q.shape[1]
        qn = np.empty(Q.shape[0])
        vn = np.empty(V.shape[0])
        for i in range(Q.shape[0]):
            acc = 0.0
            for j in range(d):
                acc += Q[i, j] * Q[i, j]
            qn[i] = math.sqrt(acc)
        for i in range(V.shape[0]):
            acc = 0.0
            for j in range(d):
                acc += V[i, j] * V[i, j]
            vn[i] = math.sqrt(acc)
        total = 0.0
        for a in range(Q.shape[0]):
            row = 0.0
            for b in range(V.shape[0]):
                dot = 0.0
                for j in range(d):
                    dot += Q[a, j] * V[b, j]
                cos = dot / (qn[a] * vn[b])
                if cos > 1.0:
                    cos = 1.0
                elif cos < -1.0:
                    cos = -1.0
                p = 1.0 - math.acos(cos) / math.pi
                row += 1.0 - (1.0 - p**k_hashes) ** n_tables
            total += row * frac[a]
        return total


_NUMPY_BACKEND = {
    "icws_code": _np_icws_code,
    "icws_codes": _np_icws_codes,
    "icws_codes_over_seeds": _np_icws_codes_over_seeds,
    "srp_code": _np_srp_code,
    "srp_codes": _np_srp_codes,
    "collide_avoid_ratio": _np_collide_avoid_ratio,
    "weighted_jaccard": _np_weighted_jaccard,
    "gaussian_log_marginal": _np_gaussian_log_marginal,
    "cosine_collision_matrix": _np_cosine_collision_matrix,
    "weighted_pair_sum": _np_weighted_pair_sum,
    "anchored_pair_total": _np_anchored_pair_total,
}

if NUMBA_ENABLED:
    _NUMBA_BACKEND = {
        "icws_code": _jit_icws_code,
        "icws_codes": _jit_icws_codes,
        "icws_codes_over_seeds": _jit_icws_codes_over_seeds,
        "srp_code": _jit_srp_code,
        "srp_codes": _jit_srp_codes,
        "collide_avoid_ratio": _jit_collide_avoid_ratio,
        "weighted_jaccard": _jit_weighted_jaccard,
        "gaussian_log_marginal": _jit_gaussian_log_marginal,
        "cosine_collision_matrix": _jit_cosine_collision_matrix,
        "weighted_pair_sum": _jit_weighted_pair_sum,
        "anchored_pair_total": _jit_anchored_pair_total,
    }
    _ACTIVE = _NUMBA_BACKEND
else:
    _NUMBA_BACKEND = None
    _ACTIVE = _NUMPY_BACKEND

BACKEND_NAME = "numba" if NUMBA_ENABLED else "numpy"


def available_backends():
    out = {"numpy": _NUMPY_BACKEND}
    if _NUMBA_BACKEND is not None:
        out["numba"] = _NUMBA_BACKEND
    return out


icws_code = _ACTIVE["icws_code"]
icws_codes = _ACTIVE["icws_codes"]
icws_codes_over_seeds = _ACTIVE["icws_codes_over_seeds"]
srp_code = _ACTIVE["srp_code"]
srp_codes = _ACTIVE["srp_codes"]
collide_avoid_ratio = _ACTIVE["collide_avoid_ratio"]
weighted_jaccard = _ACTIVE["weighted_jaccard"]
gaussian_log_marginal = _ACTIVE["gaussian_log_marginal"]
cosine_collision_matrix = _ACTIVE["cosine_collision_matrix"]
weighted_pair_sum = _ACTIVE["weighted_pair_sum"]
anchored_pair_total = _ACTIVE["anchored_pair_total"]
