"""Compiled inner loops for the simplex-product solvers (tiny dense arrays)."""
import math

import numpy as np
from numba import njit

INV_LN2 = 1.0 / math.log(2.0)


@njit(cache=True, nogil=True)
def softmax_rows(z, out):
    """out[s] = exp(z[s]) / sum exp(z[s]); returns sum_s-indexed log normalizers."""
    S, K = z.shape
    lz = np.empty(S)
    for s in range(S):
        m = -np.inf
        for k in range(K):
            if z[s, k] > m:
                m = z[s, k]
        tot = 0.0
        for k in range(K):
            if z[s, k] == -np.inf:
                out[s, k] = 0.0
            else:
                e = math.exp(z[s, k] - m)
                out[s, k] = e
                tot += e
        if not (tot > 0.0) or not math.isfinite(m):
            # empty or overflowed row: caller sees an infinite normalizer
            for k in range(K):
                out[s, k] = 0.0
            lz[s] = np.inf
            continue
        for k in range(K):
            out[s, k] /= tot
        lz[s] = m + math.log(tot)
    return lz


@njit(cache=True, nogil=True)
def eg_step(w, g, eta):
    S, K = w.shape
    z = np.empty((S, K))
    for s in range(S):
        for k in range(K):
            z[s, k] = math.log(w[s, k]) - eta * g[s, k] if w[s, k] > 0 else -np.inf
    out = np.empty((S, K))
    softmax_rows(z, out)
    return out


@njit(cache=True, nogil=True)
def _dual_state(logw, weight, c1, c2, l1, l2, b1, b2, t):
    S, K = logw.shape
    z = np.empty((S, K))
    for s in range(S):
        for k in range(K):
            z[s, k] = logw[s, k] - l1 * c1[s, k] - l2 * c2[s, k]
    lz = softmax_rows(z, t)
    phi = l1 * b1 + l2 * b2
    e1 = e2 = h11 = h22 = h12 = 0.0
    for s in range(S):
        if weight[s] == 0.0:
            continue
        m1 = m2 = q11 = q22 = q12 = 0.0
        for k in range(K):
            tk = t[s, k]
            m1 += tk * c1[s, k]
            m2 += tk * c2[s, k]
            q11 += tk * c1[s, k] * c1[s, k]
            q22 += tk * c2[s, k] * c2[s, k]
            q12 += tk * c1[s, k] * c2[s, k]
        ws = weight[s]
        phi += ws * lz[s]
        e1 += ws * m1
        e2 += ws * m2
        h11 += ws * (q11 - m1 * m1)
        h22 += ws * (q22 - m2 * m2)
        h12 += ws * (q12 - m1 * m2)
    return phi, e1, e2, h11, h22, h12


@njit(cache=True, nogil=True)
def kl_newton2(logw, weight, c1, c2, b1, b2, out):
    """Projected Newton on the dual of the two-constraint I-projection. Writes the tilted rows to out."""
    S, K = logw.shape
    l1 = 0.0
    l2 = 0.0
    t = np.empty((S, K))
    phi, e1, e2, h11, h22, h12 = _dual_state(logw, weight, c1, c2, l1, l2, b1, b2, t)
    for _ in range(200):
        g1 = b1 - e1
        g2 = b2 - e2
        f1 = l1 > 0.0 or g1 < 0.0
        f2 = l2 > 0.0 or g2 < 0.0
        if not f1 and not f2:
            break
        d1 = 0.0
        d2 = 0.0
        if f1 and f2:
            a11 = h11 + 1e-14
            a22 = h22 + 1e-14
            det = a11 * a22 - h12 * h12
            if det > 1e-300:
                d1 = -(a22 * g1 - h12 * g2) / det
                d2 = -(a11 * g2 - h12 * g1) / det
            else:
                d1 = -g1 / a11
                d2 = -g2 / a22
        elif f1:
            d1 = -g1 / (h11 + 1e-14)
        else:
            d2 = -g2 / (h22 + 1e-14)
        # a flat dual (cost constant on the support) must not fling the multipliers to infinity
        cap = 1e6 * (1.0 + l1 + l2)
        if abs(d1) > cap:
            d1 = cap if d1 > 0 else -cap
        if abs(d2) > cap:
            d2 = cap if d2 > 0 else -cap
        step = 1.0
        moved = False
        n1 = l1
        n2 = l2
        for _ in range(60):
            n1 = max(l1 + step * d1, 0.0)
            n2 = max(l2 + step * d2, 0.0)
            phi2, ee1, ee2, hh11, hh22, hh12 = _dual_state(logw, weight, c1, c2, n1, n2, b1, b2, t)
            if math.isfinite(phi2) and phi2 <= phi + 1e-4 * (g1 * (n1 - l1) + g2 * (n2 - l2)) + 1e-15 * (1.0 + abs(phi)):
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        small = abs(n1 - l1) <= 1e-13 * max(1.0, l1) and abs(n2 - l2) <= 1e-13 * max(1.0, l2)
        l1, l2 = n1, n2
        phi, e1, e2, h11, h22, h12 = phi2, ee1, ee2, hh11, hh22, hh12
        if small:
            break
    _dual_state(logw, weight, c1, c2, l1, l2, b1, b2, out)
    return l1, l2


@njit(cache=True, nogil=True)
def _ent(m):
    h = 0.0
    for v in m.ravel():
        if v > 0.0:
            h -= v * math.log(v)
    return h * INV_LN2


@njit(cache=True, nogil=True)
def _lg(v):
    return math.log(v) * INV_LN2 if v > 0.0 else 0.0


@njit(cache=True, nogil=True)
def outer_eval(w, p, nx, ny, hxy, hx, hy, mu0, mu1, beta, grad):
    """Scalarized vertex value + beta * Markov gap on the kernel w[s, k]; natural gradient into grad.

    Returns (objective, a, b, c, gap) with a = I(X;W|Y), b = I(Y;W|X), c = I(XY;W).
    """
    S, K = w.shape
    q = np.empty((nx, ny, K))
    qxw = np.zeros((nx, K))
    qyw = np.zeros((ny, K))
    qw = np.zeros(K)
    for x in range(nx):
        for y in range(ny):
            s = x * ny + y
            for k in range(K):
                v = p[s] * w[s, k]
                q[x, y, k] = v
                qxw[x, k] += v
                qyw[y, k] += v
                qw[k] += v
    h_xyw = _ent(q)
    h_xw = _ent(qxw)
    h_yw = _ent(qyw)
    h_w = _ent(qw)
    a = hxy - hy - h_xyw + h_yw
    b = hxy - hx - h_xyw + h_xw
    c = hxy + h_w - h_xyw
    gap = h_xw + h_yw - h_xyw - h_w
    val1 = mu0 * a + mu1 * max(b, c - a)
    val2 = mu0 * max(a, c - b) + mu1 * b
    # coefficients of (da, db, dc) in the active piece
    if val1 <= val2:
        val = val1
        if b >= c - a:
            ca, cb, cc = mu0, mu1, 0.0
        else:
            ca, cb, cc = mu0 - mu1, 0.0, mu1
    else:
        val = val2
        if a >= c - b:
            ca, cb, cc = mu0, mu1, 0.0
        else:
            ca, cb, cc = 0.0, mu1 - mu0, mu0
    for x in range(nx):
        for y in range(ny):
            s = x * ny + y
            if p[s] == 0.0:
                for k in range(K):
                    grad[s, k] = 0.0
                continue
            for k in range(K):
                lxyw = _lg(q[x, y, k])
                lxw = _lg(qxw[x, k])
                lyw = _lg(qyw[y, k])
                lw = _lg(qw[k])
                da = lxyw - lyw
                db = lxyw - lxw
                dc = lxyw - lw
                dgap = lxyw + lw - lxw - lyw
                grad[s, k] = ca * da + cb * db + cc * dc + beta * dgap
    return val + beta * max(gap, 0.0), a, b, c, gap


@njit(cache=True, nogil=True)
def best_maps(q, d1, d2, g1, g2):
    """Per (u, v) cell, the lowest-index reconstruction minimizing expected distortion; q is p(x,y,u,v)."""
    nx, ny, nu, nv = q.shape
    na = d1.shape[1]
    nb = d2.shape[1]
    e1 = 0.0
    e2 = 0.0
    for u in range(nu):
        for v in range(nv):
            best = np.inf
            arg = 0
            for a in range(na):
                t = 0.0
                for x in range(nx):
                    for y in range(ny):
                        t += q[x, y, u, v] * d1[x, a]
                if t < best:
                    best = t
                    arg = a
            g1[u, v] = arg
            e1 += best
            best = np.inf
            arg = 0
            for b in range(nb):
                t = 0.0
                for x in range(nx):
                    for y in range(ny):
                        t += q[x, y, u, v] * d2[y, b]
                if t < best:
                    best = t
                    arg = b
            g2[u, v] = arg
            e2 += best
    return e1, e2


@njit(cache=True, nogil=True)
def inner_eval(W, pxy, nu, nv, d1, d2, mu0, mu1, D1, D2, tau1, tau2, grad):
    """Scalarized rate support of the test channels packed in W plus a log barrier on distortion slack.

    Rows 0..nx-1 of W hold p(u|x), rows nx.. hold p(v|y). Returns
    (objective, a, b, c, e1, e2); objective is inf when a target is exceeded.
    """
    nx, ny = pxy.shape
    px = np.zeros(nx)
    py = np.zeros(ny)
    for x in range(nx):
        for y in range(ny):
            px[x] += pxy[x, y]
            py[y] += pxy[x, y]
    q = np.zeros((nx, ny, nu, nv))
    quv = np.zeros((nu, nv))
    for x in range(nx):
        for y in range(ny):
            for u in range(nu):
                for v in range(nv):
                    t = pxy[x, y] * W[x, u] * W[nx + y, v]
                    q[x, y, u, v] = t
                    quv[u, v] += t
    qu = np.zeros(nu)
    qv = np.zeros(nv)
    for u in range(nu):
        for v in range(nv):
            qu[u] += quv[u, v]
            qv[v] += quv[u, v]
    g1 = np.zeros((nu, nv), dtype=np.int64)
    g2 = np.zeros((nu, nv), dtype=np.int64)
    e1, e2 = best_maps(q, d1, d2, g1, g2)
    h_uv = _ent(quv)
    h_u = _ent(qu)
    h_v = _ent(qv)
    h_ux = 0.0
    for x in range(nx):
        for u in range(nu):
            if W[x, u] > 0.0:
                h_ux -= px[x] * W[x, u] * math.log(W[x, u])
    h_vy = 0.0
    for y in range(ny):
        for v in range(nv):
            if W[nx + y, v] > 0.0:
                h_vy -= py[y] * W[nx + y, v] * math.log(W[nx + y, v])
    h_ux *= INV_LN2
    h_vy *= INV_LN2
    a = h_uv - h_v - h_ux
    b = h_uv - h_u - h_vy
    c = h_uv - h_ux - h_vy
    if e1 > D1 + 1e-12 or e2 > D2 + 1e-12:
        return np.inf, a, b, c, e1, e2
    val1 = mu0 * a + mu1 * max(b, c - a)
    val2 = mu0 * max(a, c - b) + mu1 * b
    if val1 <= val2:
        val = val1
        if b >= c - a:
            ca, cb, cc = mu0, mu1, 0.0
        else:
            ca, cb, cc = mu0 - mu1, 0.0, mu1
    else:
        val = val2
        if a >= c - b:
            ca, cb, cc = mu0, mu1, 0.0
        else:
            ca, cb, cc = 0.0, mu1 - mu0, mu0
    s1 = D1 - e1
    s2 = D2 - e2
    obj = val
    k1 = 0.0
    k2 = 0.0
    if tau1 > 0.0:
        if s1 <= 0.0:
            return np.inf, a, b, c, e1, e2
        obj -= tau1 * math.log(s1)
        k1 = tau1 / s1
    if tau2 > 0.0:
        if s2 <= 0.0:
            return np.inf, a, b, c, e1, e2
        obj -= tau2 * math.log(s2)
        k2 = tau2 / s2
    for x in range(nx):
        for u in range(nu):
            gs = 0.0
            ds = 0.0
            for y in range(ny):
                for v in range(nv):
                    w = pxy[x, y] * W[nx + y, v]
                    gs += w * _lg(quv[u, v])
                    ds += w * (k1 * d1[x, g1[u, v]] + k2 * d2[y, g2[u, v]])
            if px[x] == 0.0:
                grad[x, u] = 0.0
                continue
            la = _lg(W[x, u])
            lu = _lg(qu[u])
            gs /= px[x]
            grad[x, u] = ca * (la - gs) + cb * (lu - gs) + cc * (la - gs) + ds / px[x]
        for u in range(nu, W.shape[1]):
            grad[x, u] = 0.0
    for y in range(ny):
        for v in range(nv):
            gs = 0.0
            ds = 0.0
            for x in range(nx):
                for u in range(nu):
                    w = pxy[x, y] * W[x, u]
                    gs += w * _lg(quv[u, v])
                    ds += w * (k1 * d1[x, g1[u, v]] + k2 * d2[y, g2[u, v]])
            if py[y] == 0.0:
                grad[nx + y, v] = 0.0
                continue
            lb = _lg(W[nx + y, v])
            lv = _lg(qv[v])
            gs /= py[y]
            grad[nx + y, v] = ca * (lv - gs) + cb * (lb - gs) + cc * (lb - gs) + ds / py[y]
        for v in range(nv, W.shape[1]):
            grad[nx + y, v] = 0.0
    return obj, a, b, c, e1, e2


@njit(cache=True, nogil=True)
def ba_iterate(px, logits, d, tol, max_iter):
    """Blahut-Arimoto alternating updates from a uniform output law. Returns (rate bits, distortion, Q)."""
    nx, nr = logits.shape
    logq = np.full(nr, -math.log(nr))
    z = np.empty((nx, nr))
    Q = np.empty((nx, nr))
    rate_prev = np.inf
    rate = 0.0
    for _ in range(max_iter):
        for x in range(nx):
            for r in range(nr):
                z[x, r] = logits[x, r] + logq[r]
        lz = softmax_rows(z, Q)
        rate = 0.0
        for x in range(nx):
            if px[x] > 0.0:
                # sum_r Q log(Q/q) = sum_r Q (logits - lz)
                acc = 0.0
                for r in range(nr):
                    if Q[x, r] > 0.0:
                        acc += Q[x, r] * (logits[x, r] - lz[x])
                rate += px[x] * acc
        rate *= INV_LN2
        for r in range(nr):
            q = 0.0
            for x in range(nx):
                q += px[x] * Q[x, r]
            logq[r] = math.log(q) if q > 0.0 else -np.inf
        if abs(rate - rate_prev) < tol:
            break
        rate_prev = rate
    dist = 0.0
    for x in range(nx):
        for r in range(nr):
            dist += px[x] * Q[x, r] * d[x, r]
    return max(rate, 0.0), dist, Q
