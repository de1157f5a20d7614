"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

Everything here operates on plain float64 arrays; the object-level API lives
in the sibling modules. Two interchangeable implementations are provided for
each kernel:

* ``*_nb`` -- loop-style code compiled with ``numba.njit`` (used by default),
* ``*_np`` -- vectorized numpy (used when numba is unavailable or when the
  environment variable ``RANKMIX_NO_NUMBA`` is set to a truthy value).

The public, unsuffixed names (``ranking_loglik``, ``mh_chain``, ...) are bound
to one backend at import time; ``BACKEND`` records which one.

Conventions:

* A ranking is represented by its feature rows in ranked order (best first),
  shape ``(K, d)``.
* Mixture parameters are ``weights (M, d)`` and ``mixing (M,)``; likelihood
  kernels take ``log_mixing`` so that zero coefficients enter as ``-inf`` and
  drop out of the log-sum-exp.
* Observation sets are stacked: ``flat (total, d)`` rows in ranked order with
  ``offsets (T+1,)`` delimiting observations.
* Stochastic kernels take pre-drawn uniforms so that both backends consume an
  identical, counter-derived stream (see ``derived_uniforms``).
"""

from __future__ import annotations

import math
import os

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


_numba_requested = not _env_flag("RANKMIX_NO_NUMBA")
try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and _numba_requested
BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# Counter-based uniform stream (SplitMix64). Both backends share these exact
# draws, which is what makes acquisition objectives deterministic functions of
# (seed, query) regardless of backend.
# ---------------------------------------------------------------------------

def mix64(x: int) -> int:
    """SplitMix64 finalizer on a python int, masked to 64 bits."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def combine_keys(*keys: int) -> int:
    """Fold integer keys into a single 64-bit stream key."""
    h = 0x8BADF00D5EEDC0DE
    for k in keys:
        h = mix64(h ^ mix64((k & _MASK64) * _GOLDEN & _MASK64))
    return h


def stable_str_hash(s: str) -> int:
    """Process-independent 64-bit hash of a string (FNV-1a then mixed)."""
    h = 0xCBF29CE484222325
    for b in s.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return mix64(h)


def derived_uniforms(seed: int, key: int, n: int) -> np.ndarray:
    """``n`` uniforms in [0, 1) determined entirely by ``(seed, key)``."""
    base = combine_keys(seed, key)
    ctr = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
    x = ctr + np.uint64(base)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


def log_mixing(mixing: np.ndarray) -> np.ndarray:
    """log(alpha) with zero entries mapped to -inf without warnings."""
    out = np.full(mixing.shape, -np.inf)
    pos = mixing > 0
    out[pos] = np.log(mixing[pos])
    return out


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _suffix_lse_np(r: np.ndarray) -> np.ndarray:
    """Along axis 0: out[k] = log sum_{j>=k} exp(r[j])."""
    return np.logaddexp.accumulate(r[::-1], axis=0)[::-1]


def ranking_loglik_np(weights: np.ndarray, log_mix: np.ndarray,
                      feats: np.ndarray) -> float:
    """log Pr(ranking | params) for feature rows in ranked order."""
    r = feats @ weights.T                      # (K, M)
    per_mode = (r - _suffix_lse_np(r)).sum(axis=0)
    v = log_mix + per_mode
    mx = v.max()
    if mx == -np.inf:
        return -np.inf
    return float(mx + np.log(np.exp(v - mx).sum()))


def ranking_loglik_many_np(W: np.ndarray, logA: np.ndarray,
                           feats: np.ndarray) -> np.ndarray:
    """log Pr(ranking | theta_i) for every sample i. W: (N,M,d), logA: (N,M)."""
    r = np.tensordot(feats, W, axes=([1], [2]))     # (K, N, M)
    per_mode = (r - _suffix_lse_np(r)).sum(axis=0)  # (N, M)
    v = logA + per_mode
    mx = v.max(axis=1)
    out = np.full(mx.shape, -np.inf)
    ok = mx > -np.inf
    with np.errstate(invalid="ignore"):
        out[ok] = mx[ok] + np.log(np.exp(v[ok] - mx[ok, None]).sum(axis=1))
    return out


def dataset_loglik_np(weights: np.ndarray, log_mix: np.ndarray,
                      flat: np.ndarray, offsets: np.ndarray) -> float:
    total = 0.0
    for t in range(offsets.shape[0] - 1):
        total += ranking_loglik_np(weights, log_mix, flat[offsets[t]:offsets[t + 1]])
    return total


def _softmax_np(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def _mh_target_np(w, a, flat, offsets, sample_mixing):
    lp = -0.5 * float((w * w).sum())
    la = log_mixing(a)
    if sample_mixing:
        jac = la.sum()
        if jac == -np.inf:
            return -np.inf
        lp += jac
    return lp + dataset_loglik_np(w, la, flat, offsets)


def mh_chain_np(w0, a0, flat, offsets, noise_w, noise_z, log_u, sample_mixing):
    """One Metropolis-Hastings chain; returns (weights, mixing, n_accepted).

    ``noise_w``/``noise_z`` are pre-scaled Gaussian steps, ``log_u`` the log
    of the acceptance uniforms; the walk on the mixing coefficients happens in
    log-space (softmax re-normalized), with the simplex Jacobian folded into
    the target.
    """
    w = w0.copy()
    a = a0.copy()
    z = np.log(a) if sample_mixing else np.zeros_like(a)
    lp = _mh_target_np(w, a, flat, offsets, sample_mixing)
    accepted = 0
    for h in range(log_u.shape[0]):
        wp = w + noise_w[h]
        if sample_mixing:
            zp = z + noise_z[h]
            ap = _softmax_np(zp)
        else:
            zp, ap = z, a
        lpp = _mh_target_np(wp, ap, flat, offsets, sample_mixing)
        if lpp > -1e12 and not math.isnan(lpp) and log_u[h] < lpp - lp:
            w, a, z, lp = wp, ap, zp, lpp
            accepted += 1
    return w, a, accepted


def sample_ranking_np(rewards: np.ndarray, alpha: np.ndarray,
                      u: np.ndarray) -> np.ndarray:
    """Draw one ranking. rewards: (M,K); u: (K,) uniforms, u[0] picks the mode."""
    M, K = rewards.shape
    mode = M - 1
    acc = 0.0
    for m in range(M):
        acc += alpha[m]
        if acc > u[0]:
            mode = m
            break
    r = rewards[mode]
    remaining = list(range(K))
    order = np.empty(K, dtype=np.int64)
    for pos in range(K - 1):
        rr = r[remaining]
        p = np.exp(rr - rr.max())
        target = u[pos + 1] * p.sum()
        run = 0.0
        pick = len(remaining) - 1
        for j in range(len(remaining)):
            run += p[j]
            if run > target:
                pick = j
                break
        order[pos] = remaining.pop(pick)
    order[K - 1] = remaining[0]
    return order


def ig_loss_np(qfeats, W, logA, alpha, u):
    """Information-gain loss for one candidate query (lower is better)."""
    N, M, _ = W.shape
    K = qfeats.shape[0]
    R = np.einsum("nmd,kd->nmk", W, qfeats)
    orders = np.empty((N, K), dtype=np.int64)
    for i in range(N):
        orders[i] = sample_ranking_np(R[i], alpha[i], u[i])
    # ll[i, j] = log Pr(x_i | theta_j)
    perm = R[:, :, orders]                       # (Nj, M, Ni, K)
    denom = np.logaddexp.accumulate(perm[..., ::-1], axis=-1)[..., ::-1]
    per_mode = (perm - denom).sum(axis=-1)       # (Nj, M, Ni)
    v = per_mode + logA[:, :, None]
    mx = v.max(axis=1)
    ll = (mx + np.log(np.exp(v - mx[:, None, :]).sum(axis=1))).T  # (Ni, Nj)
    row_mx = ll.max(axis=1)
    lse = row_mx + np.log(np.exp(ll - row_mx[:, None]).sum(axis=1))
    return float((lse - np.diag(ll)).sum())


def vr_objective_np(qfeats, W, logA, alpha, u):
    """Expected unnormalized-posterior volume removed (higher is better)."""
    N, M, _ = W.shape
    K = qfeats.shape[0]
    R = np.einsum("nmd,kd->nmk", W, qfeats)
    total = 0.0
    for i in range(N):
        order = sample_ranking_np(R[i], alpha[i], u[i])
        ll = ranking_loglik_np(W[i], logA[i], qfeats[order])
        total += 1.0 - math.exp(ll)
    return total


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @_njit(cache=True, nogil=True)
    def _lse2(a, b):
        if a == -np.inf:
            return b
        if b == -np.inf:
            return a
        if a < b:
            a, b = b, a
        return a + math.log1p(math.exp(b - a))

    @_njit(cache=True, nogil=True)
    def _ranking_loglik_rewards_nb(rewards, log_mix, order):
        """log Pr of the ranking ``order`` given per-mode rewards (M, K)."""
        M, K = rewards.shape
        mx = -np.inf
        llm = np.empty(M)
        for m in range(M):
            run = -np.inf
            s = 0.0
            for k in range(K - 1, -1, -1):
                rk = rewards[m, order[k]]
                run = _lse2(run, rk)
                s += rk - run
            llm[m] = s + log_mix[m]
            if llm[m] > mx:
                mx = llm[m]
        if mx == -np.inf:
            return -np.inf
        acc = 0.0
        for m in range(M):
            acc += math.exp(llm[m] - mx)
        return mx + math.log(acc)

    @_njit(cache=True, nogil=True)
    def ranking_loglik_nb(weights, log_mix, feats):
        M, d = weights.shape
        K = feats.shape[0]
        rewards = np.empty((M, K))
        for m in range(M):
            for k in range(K):
                acc = 0.0
                for j in range(d):
                    acc += weights[m, j] * feats[k, j]
                rewards[m, k] = acc
        order = np.arange(K)
        return _ranking_loglik_rewards_nb(rewards, log_mix, order)

    @_njit(cache=True, nogil=True)
    def ranking_loglik_many_nb(W, logA, feats):
        N = W.shape[0]
        out = np.empty(N)
        for i in range(N):
            out[i] = ranking_loglik_nb(W[i], logA[i], feats)
        return out

    @_njit(cache=True, nogil=True)
    def dataset_loglik_nb(weights, log_mix, flat, offsets):
        total = 0.0
        for t in range(offsets.shape[0] - 1):
            total += ranking_loglik_nb(weights, log_mix, flat[offsets[t]:offsets[t + 1]])
        return total

    @_njit(cache=True, nogil=True)
    def _softmax_nb(z):
        mx = z.max()
        e = np.exp(z - mx)
        return e / e.sum()

    @_njit(cache=True, nogil=True)
    def _mh_target_nb(w, a, flat, offsets, sample_mixing):
        lp = 0.0
        M, d = w.shape
        for m in range(M):
            for j in range(d):
                lp -= 0.5 * w[m, j] * w[m, j]
        la = np.log(a)
        if sample_mixing:
            for m in range(M):
                lp += la[m]
            if lp == -np.inf:
                return -np.inf
        return lp + dataset_loglik_nb(w, la, flat, offsets)

    @_njit(cache=True, nogil=True)
    def mh_chain_nb(w0, a0, flat, offsets, noise_w, noise_z, log_u, sample_mixing):
        w = w0.copy()
        a = a0.copy()
        z = np.log(a) if sample_mixing else np.zeros_like(a)
        lp = _mh_target_nb(w, a, flat, offsets, sample_mixing)
        accepted = 0
        for h in range(log_u.shape[0]):
            wp = w + noise_w[h]
            if sample_mixing:
                zp = z + noise_z[h]
                ap = _softmax_nb(zp)
            else:
                zp, ap = z, a
            lpp = _mh_target_nb(wp, ap, flat, offsets, sample_mixing)
            if lpp > -1e12 and not math.isnan(lpp) and log_u[h] < lpp - lp:
                w, a, z, lp = wp, ap, zp, lpp
                accepted += 1
        return w, a, accepted

    @_njit(cache=True, nogil=True)
    def sample_ranking_nb(rewards, alpha, u):
        M, K = rewards.shape
        mode = M - 1
        acc = 0.0
        for m in range(M):
            acc += alpha[m]
            if acc > u[0]:
                mode = m
                break
        remaining = np.arange(K)
        n_rem = K
        order = np.empty(K, dtype=np.int64)
        for pos in range(K - 1):
            mx = -np.inf
            for j in range(n_rem):
                rj = rewards[mode, remaining[j]]
                if rj > mx:
                    mx = rj
            tot = 0.0
            for j in range(n_rem):
                tot += math.exp(rewards[mode, remaining[j]] - mx)
            target = u[pos + 1] * tot
            run = 0.0
            pick = n_rem - 1
            for j in range(n_rem):
                run += math.exp(rewards[mode, remaining[j]] - mx)
                if run > target:
                    pick = j
                    break
            order[pos] = remaining[pick]
            for j in range(pick, n_rem - 1):
                remaining[j] = remaining[j + 1]
            n_rem -= 1
        order[K - 1] = remaining[0]
        return order

    @_njit(cache=True, nogil=True)
    def ig_loss_nb(qfeats, W, logA, alpha, u):
        N, M, d = W.shape
        K = qfeats.shape[0]
        R = np.empty((N, M, K))
        for n in range(N):
            for m in range(M):
                for k in range(K):
                    acc = 0.0
                    for j in range(d):
                        acc += W[n, m, j] * qfeats[k, j]
                    R[n, m, k] = acc
        orders = np.empty((N, K), dtype=np.int64)
        codes = np.empty(N, dtype=np.int64)
        for i in range(N):
            orders[i] = sample_ranking_nb(R[i], alpha[i], u[i])
            c = 0
            for k in range(K):
                c = c * K + orders[i, k]
            codes[i] = c
        # deduplicate identical sampled rankings before the N x N pass
        sort_idx = np.argsort(codes)
        uniq_rep = np.empty(N, dtype=np.int64)
        inv = np.empty(N, dtype=np.int64)
        n_uniq = 0
        prev = np.int64(-1)
        for s in range(N):
            i = sort_idx[s]
            if s == 0 or codes[i] != prev:
                uniq_rep[n_uniq] = i
                n_uniq += 1
                prev = codes[i]
            inv[i] = n_uniq - 1
        llmat = np.empty((n_uniq, N))
        for uu in range(n_uniq):
            order = orders[uniq_rep[uu]]
            for j in range(N):
                llmat[uu, j] = _ranking_loglik_rewards_nb(R[j], logA[j], order)
        total = 0.0
        for i in range(N):
            row = llmat[inv[i]]
            mx = -np.inf
            for j in range(N):
                if row[j] > mx:
                    mx = row[j]
            s = 0.0
            for j in range(N):
                s += math.exp(row[j] - mx)
            total += mx + math.log(s) - row[i]
        return total

    @_njit(cache=True, nogil=True)
    def vr_objective_nb(qfeats, W, logA, alpha, u):
        N, M, d = W.shape
        K = qfeats.shape[0]
        total = 0.0
        R = np.empty((M, K))
        for i in range(N):
            for m in range(M):
                for k in range(K):
                    acc = 0.0
                    for j in range(d):
                        acc += W[i, m, j] * qfeats[k, j]
                    R[m, k] = acc
            order = sample_ranking_nb(R, alpha[i], u[i])
            total += 1.0 - math.exp(_ranking_loglik_rewards_nb(R, logA[i], order))
        return total


if NUMBA_ENABLED:
    ranking_loglik = ranking_loglik_nb
    ranking_loglik_many = ranking_loglik_many_nb
    dataset_loglik = dataset_loglik_nb
    mh_chain = mh_chain_nb
    sample_ranking = sample_ranking_nb
    ig_loss = ig_loss_nb
    vr_objective = vr_objective_nb
else:
    ranking_loglik = ranking_loglik_np
    ranking_loglik_many = ranking_loglik_many_np
    dataset_loglik = dataset_loglik_np
    mh_chain = mh_chain_np
    sample_ranking = sample_ranking_np
    ig_loss = ig_loss_np
    vr_objective = vr_objective_np
