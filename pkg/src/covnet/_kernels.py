"""Hot numeric kernels: block coordinate descent and proximal gradient.

Both solvers operate on the Gram form of a penalized quadratic,

    minimize  0.5 * beta' G beta - b' beta + lam * sum_k ||beta_k||_2,

over uniform blocks of size d (a boolean mask marks which blocks are
penalized). The BCD solver updates one block at a time with a majorization
step iterated to the blockwise fixed point; the ISTA solver takes monotone
proximal-gradient steps with backtracking.

The numba-compiled kernels are the default. Setting the environment
variable ``COVNET_NUMBA=0`` before import selects the pure-numpy fallback
implementations (same semantics, vectorized instead of compiled); see
``benchmarks/bench_kernels.py`` for a timing comparison.
"""

from __future__ import annotations

import os

import numpy as np

_env = os.environ.get("COVNET_NUMBA", "1").strip().lower()
_want_numba = _env not in {"0", "false", "off", "no"}

if _want_numba:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

_INNER_CAP = 200  # fixed-point iterations per block update


# ---------------------------------------------------------------------------
# loop kernels (compiled when numba is enabled)
# ---------------------------------------------------------------------------

def _make_bcd(inner_cap):
    def bcd(G, b, d, lam, pen, L, alpha, tol, max_sweeps, inner_tol, obj_out):
        m = G.shape[0]
        K = m // d
        q = G @ alpha
        sweeps = 0
        converged = False
        for sweep in range(max_sweeps):
            max_change = 0.0
            for k in range(K):
                s0 = k * d
                Lk = L[k]
                old = alpha[s0 : s0 + d].copy()
                ak = old.copy()
                # partial residual correlation: z = b_k - q_k + G_kk a_k
                z = np.empty(d)
                for c in range(d):
                    acc = b[s0 + c] - q[s0 + c]
                    for e in range(d):
                        acc += G[s0 + c, s0 + e] * old[e]
                    z[c] = acc
                for _ in range(inner_cap):
                    # gradient of the block objective at ak
                    step_max = 0.0
                    u = np.empty(d)
                    for c in range(d):
                        g = -z[c]
                        for e in range(d):
                            g += G[s0 + c, s0 + e] * ak[e]
                        u[c] = ak[c] - g / Lk
                    if pen[k]:
                        nrm = 0.0
                        for c in range(d):
                            nrm += u[c] * u[c]
                        nrm = np.sqrt(nrm)
                        thr = lam / Lk
                        if nrm <= thr:
                            for c in range(d):
                                step_max = max(step_max, abs(ak[c]))
                                ak[c] = 0.0
                        else:
                            shrink = 1.0 - thr / nrm
                            for c in range(d):
                                nv = shrink * u[c]
                                step_max = max(step_max, abs(nv - ak[c]))
                                ak[c] = nv
                    else:
                        for c in range(d):
                            step_max = max(step_max, abs(u[c] - ak[c]))
                            ak[c] = u[c]
                    if step_max <= inner_tol:
                        break
                moved = 0.0
                for c in range(d):
                    delta = ak[c] - old[c]
                    if delta != 0.0:
                        moved = max(moved, abs(delta))
                if moved > 0.0:
                    for c in range(d):
                        delta = ak[c] - old[c]
                        if delta != 0.0:
                            for r in range(m):
                                q[r] += G[r, s0 + c] * delta
                        alpha[s0 + c] = ak[c]
                    max_change = max(max_change, moved)
            # objective after the sweep: 0.5 a'q - b'a + lam * sum ||a_k||
            quad = 0.0
            for r in range(m):
                quad += alpha[r] * (0.5 * q[r] - b[r])
            pensum = 0.0
            for k in range(K):
                if pen[k]:
                    s0 = k * d
                    nrm = 0.0
                    for c in range(d):
                        nrm += alpha[s0 + c] * alpha[s0 + c]
                    pensum += np.sqrt(nrm)
            obj_out[sweep] = quad + lam * pensum
            sweeps = sweep + 1
            if max_change < tol:
                converged = True
                break
        return sweeps, converged

    return bcd


def _make_path(bcd):
    def path(G, b, d, lams, pen, L, tol, max_sweeps, inner_tol):
        m = G.shape[0]
        nlam = lams.shape[0]
        alphas = np.zeros((nlam, m))
        sweeps = np.zeros(nlam, np.int64)
        conv = np.zeros(nlam, np.bool_)
        alpha = np.zeros(m)
        obj = np.empty(max_sweeps)
        for i in range(nlam):
            s, c = bcd(G, b, d, lams[i], pen, L, alpha, tol, max_sweeps, inner_tol, obj)
            sweeps[i] = s
            conv[i] = c
            for r in range(m):
                alphas[i, r] = alpha[r]
        return alphas, sweeps, conv

    return path


def _make_ista():
    def ista(G, c, d, lam, pen, L0, beta, tol, max_iter, obj_out):
        m = G.shape[0]
        K = m // d
        t = 1.0 / L0
        iters = 0
        converged = False
        grad = G @ beta + c
        f0 = 0.0
        for r in range(m):
            f0 += beta[r] * (0.5 * (grad[r] - c[r]) + c[r])
        for it in range(max_iter):
            accepted = False
            cand = np.empty(m)
            gc = np.empty(m)
            fc = 0.0
            for _ in range(60):  # backtracking
                for r in range(m):
                    cand[r] = beta[r] - t * grad[r]
                for k in range(K):
                    if pen[k]:
                        s0 = k * d
                        nrm = 0.0
                        for e in range(d):
                            nrm += cand[s0 + e] * cand[s0 + e]
                        nrm = np.sqrt(nrm)
                        thr = t * lam
                        if nrm <= thr:
                            for e in range(d):
                                cand[s0 + e] = 0.0
                        else:
                            shrink = 1.0 - thr / nrm
                            for e in range(d):
                                cand[s0 + e] *= shrink
                gc = G @ cand
                fc = 0.0
                for r in range(m):
                    fc += cand[r] * (0.5 * gc[r] + c[r])
                bound = f0
                ss = 0.0
                for r in range(m):
                    diff = cand[r] - beta[r]
                    bound += grad[r] * diff
                    ss += diff * diff
                bound += 0.5 * ss / t
                if fc <= bound + 1e-12 * (1.0 + abs(bound)):
                    accepted = True
                    break
                t *= 0.5
            max_change = 0.0
            for r in range(m):
                max_change = max(max_change, abs(cand[r] - beta[r]))
                beta[r] = cand[r]
            grad = gc + c
            f0 = fc
            pensum = 0.0
            for k in range(K):
                if pen[k]:
                    s0 = k * d
                    nrm = 0.0
                    for e in range(d):
                        nrm += beta[s0 + e] * beta[s0 + e]
                    pensum += np.sqrt(nrm)
            obj_out[it] = f0 + lam * pensum
            iters = it + 1
            if not accepted:
                break
            if max_change < tol:
                converged = True
                break
        return iters, converged

    return ista


_bcd_py = _make_bcd(_INNER_CAP)
_ista_py = _make_ista()

if NUMBA_ENABLED:
    _bcd_impl = _njit(cache=True)(_bcd_py)
    _path_impl = _njit(cache=True)(_make_path(_bcd_impl))
    _ista_impl = _njit(cache=True)(_ista_py)
else:
    _bcd_impl = None
    _path_impl = None
    _ista_impl = None


# ---------------------------------------------------------------------------
# numpy fallback (vectorized; same semantics as the compiled kernels)
# ---------------------------------------------------------------------------

def _group_prox_np(u, thr, pen, d):
    """Group soft-threshold of the stacked vector u, skipping unpenalized blocks."""
    blocks = u.reshape(-1, d)
    norms = np.linalg.norm(blocks, axis=1)
    scale = np.ones_like(norms)
    np.divide(thr, norms, out=scale, where=norms > 0)
    factor = np.maximum(0.0, 1.0 - scale)
    factor[~pen] = 1.0
    return (blocks * factor[:, None]).ravel()


def _penalty_np(beta, pen, d):
    norms = np.linalg.norm(beta.reshape(-1, d), axis=1)
    return float(norms[pen].sum())


def _bcd_numpy(G, b, d, lam, pen, L, alpha, tol, max_sweeps, inner_tol, obj_out):
    m = G.shape[0]
    K = m // d
    q = G @ alpha
    sweeps = 0
    converged = False
    for sweep in range(max_sweeps):
        max_change = 0.0
        for k in range(K):
            blk = slice(k * d, (k + 1) * d)
            Gkk = G[blk, blk]
            old = alpha[blk].copy()
            z = b[blk] - q[blk] + Gkk @ old
            ak = old.copy()
            for _ in range(_INNER_CAP):
                u = ak - (Gkk @ ak - z) / L[k]
                if pen[k]:
                    nrm = np.linalg.norm(u)
                    thr = lam / L[k]
                    new = np.zeros(d) if nrm <= thr else (1.0 - thr / nrm) * u
                else:
                    new = u
                step = np.abs(new - ak).max()
                ak = new
                if step <= inner_tol:
                    break
            delta = ak - old
            moved = np.abs(delta).max()
            if moved > 0.0:
                q += G[:, blk] @ delta
                alpha[blk] = ak
                max_change = max(max_change, moved)
        obj_out[sweep] = float(alpha @ (0.5 * q - b)) + lam * _penalty_np(alpha, pen, d)
        sweeps = sweep + 1
        if max_change < tol:
            converged = True
            break
    return sweeps, converged


def _path_numpy(G, b, d, lams, pen, L, tol, max_sweeps, inner_tol):
    m = G.shape[0]
    nlam = len(lams)
    alphas = np.zeros((nlam, m))
    sweeps = np.zeros(nlam, np.int64)
    conv = np.zeros(nlam, bool)
    alpha = np.zeros(m)
    obj = np.empty(max_sweeps)
    for i in range(nlam):
        s, c = _bcd_numpy(G, b, d, lams[i], pen, L, alpha, tol, max_sweeps, inner_tol, obj)
        sweeps[i] = s
        conv[i] = c
        alphas[i] = alpha
    return alphas, sweeps, conv


def _ista_numpy(G, c, d, lam, pen, L0, beta, tol, max_iter, obj_out):
    t = 1.0 / L0
    iters = 0
    converged = False
    grad = G @ beta + c
    f0 = float(beta @ (0.5 * (grad - c) + c))
    for it in range(max_iter):
        accepted = False
        for _ in range(60):
            cand = _group_prox_np(beta - t * grad, t * lam, pen, d)
            gc = G @ cand
            fc = float(cand @ (0.5 * gc + c))
            diff = cand - beta
            bound = f0 + float(grad @ diff) + 0.5 * float(diff @ diff) / t
            if fc <= bound + 1e-12 * (1.0 + abs(bound)):
                accepted = True
                break
            t *= 0.5
        max_change = float(np.abs(cand - beta).max()) if cand is not beta else 0.0
        beta[:] = cand
        grad = gc + c
        f0 = fc
        obj_out[it] = f0 + lam * _penalty_np(beta, pen, d)
        iters = it + 1
        if not accepted:
            break
        if max_change < tol:
            converged = True
            break
    return iters, converged


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------

def _as_pen(pen, K):
    if pen is None:
        return np.ones(K, dtype=bool)
    pen = np.asarray(pen, dtype=bool)
    if pen.shape != (K,):
        raise ValueError(f"penalty mask has shape {pen.shape}, expected ({K},)")
    return pen


def block_lipschitz(G: np.ndarray, d: int) -> np.ndarray:
    """Largest eigenvalue of each diagonal d x d block of G."""
    m = G.shape[0]
    K = m // d
    L = np.empty(K)
    for k in range(K):
        blk = slice(k * d, (k + 1) * d)
        L[k] = np.linalg.eigvalsh(G[blk, blk])[-1] if d > 1 else G[blk, blk][0, 0]
    return np.maximum(L, 1e-12)


def power_method_lmax(G: np.ndarray, iters: int = 100, seed: int = 0) -> float:
    """Power-method estimate of the largest eigenvalue of symmetric PSD G."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lmax = 1.0
    for _ in range(iters):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 1e-12
        lmax = nw
        v = w / nw
    return float(max(lmax, 1e-12))


def bcd_group_lasso(G, b, d, lam, pen=None, alpha0=None, tol=1e-7, max_sweeps=10000):
    """Solve the Gram-form group lasso by block coordinate descent.

    Returns (alpha, sweeps, converged, objective_trace) where the trace holds
    the penalized objective after each sweep.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    m = G.shape[0]
    K = m // d
    pen = _as_pen(pen, K)
    L = block_lipschitz(G, d)
    alpha = np.zeros(m) if alpha0 is None else np.array(alpha0, dtype=np.float64)
    obj = np.empty(max_sweeps)
    inner_tol = max(tol * 1e-2, 1e-15)
    if NUMBA_ENABLED:
        sweeps, conv = _bcd_impl(G, b, d, lam, pen, L, alpha, tol, max_sweeps, inner_tol, obj)
    else:
        sweeps, conv = _bcd_numpy(G, b, d, lam, pen, L, alpha, tol, max_sweeps, inner_tol, obj)
    return alpha, int(sweeps), bool(conv), obj[:sweeps].copy()


def bcd_path(G, b, d, lams, pen=None, tol=1e-7, max_sweeps=10000):
    """Warm-started BCD solutions along a descending lambda grid.

    Returns (alphas, sweeps, converged) with one row per lambda.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    lams = np.ascontiguousarray(lams, dtype=np.float64)
    K = G.shape[0] // d
    pen = _as_pen(pen, K)
    L = block_lipschitz(G, d)
    inner_tol = max(tol * 1e-2, 1e-15)
    if NUMBA_ENABLED:
        return _path_impl(G, b, d, lams, pen, L, tol, max_sweeps, inner_tol)
    return _path_numpy(G, b, d, lams, pen, L, tol, max_sweeps, inner_tol)


def ista_group_quadratic(G, c, d, lam, pen=None, beta0=None, tol=1e-8, max_iter=20000):
    """Monotone proximal gradient for 0.5 b'Gb + c'b + lam * sum ||b_k||.

    The step starts at 1/L with L from a power-method estimate and backtracks
    until the majorization holds, so the objective trace is non-increasing.
    Returns (beta, iterations, converged, objective_trace).
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    m = G.shape[0]
    K = m // d
    pen = _as_pen(pen, K)
    beta = np.zeros(m) if beta0 is None else np.array(beta0, dtype=np.float64)
    L0 = power_method_lmax(G) * 1.01
    obj = np.empty(max_iter)
    if NUMBA_ENABLED:
        iters, conv = _ista_impl(G, c, d, lam, pen, L0, beta, tol, max_iter, obj)
    else:
        iters, conv = _ista_numpy(G, c, d, lam, pen, L0, beta, tol, max_iter, obj)
    return beta, int(iters), bool(conv), obj[:iters].copy()


def kkt_residual(G, b, d, lam, beta, pen=None) -> float:
    """Worst-block KKT residual of the Gram-form group lasso at beta.

    Active blocks must satisfy grad_k + lam * beta_k/||beta_k|| = 0; inactive
    blocks must satisfy ||grad_k|| <= lam; unpenalized blocks need grad_k = 0.
    """
    m = G.shape[0]
    K = m // d
    pen = _as_pen(pen, K)
    grad = G @ beta - b
    worst = 0.0
    for k in range(K):
        blk = slice(k * d, (k + 1) * d)
        gk = grad[blk]
        ak = beta[blk]
        if not pen[k]:
            worst = max(worst, np.linalg.norm(gk))
        elif np.linalg.norm(ak) > 0:
            worst = max(worst, np.linalg.norm(gk + lam * ak / np.linalg.norm(ak)))
        else:
            worst = max(worst, max(0.0, np.linalg.norm(gk) - lam))
    return float(worst)
