"""Numba-compiled inner loops: full-system RK4, quotient RK4 and the
variational/QR co-integration used for transverse Lyapunov exponents.

All kernels are deterministic given identical inputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# HR parameter vector layout: [a, b, c, d, s, t, I, r]


@njit(cache=True)
def _hr_into(v, p, out):
    a, b, c, d, s, t, I, r = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]
    for i in range(v.shape[0]):
        x = v[i, 0]
        w = v[i, 1]
        z = v[i, 2]
        out[i, 0] = w - a * x * x * x + b * x * x - z + I
        out[i, 1] = c - d * x * x - w
        out[i, 2] = r * (s * (x - t) - z)


@njit(cache=True)
def _duplex_rhs(x, y, a, lap, kappa, p_top, p_bot, d, alpha, beta, sig, dx, dy):
    n = x.shape[0]
    _hr_into(x, p_top, dx)
    _hr_into(y, p_bot, dy)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += a[i, j] * x[j, 0]
        dx[i, 0] += alpha * acc
        acc = 0.0
        for j in range(n):
            acc += lap[i, j] * y[j, 0]
        dy[i, 0] -= beta * acc
    if sig != 0.0:
        for i in range(n):
            if kappa[i] != 0.0:
                for p in range(3):
                    acc = 0.0
                    for q in range(3):
                        acc += d[p, q] * (x[i, q] - y[i, q])
                    dy[i, p] += sig * kappa[i] * acc


@njit(cache=True)
def integrate_duplex(a, lap, kappa, p_top, p_bot, d, alpha, beta, sigma,
                     switch_step, x0, y0, dt, n_steps, record_start, stride):
    n = x0.shape[0]
    n_rec = (n_steps - record_start) // stride + 1
    times = np.empty(n_rec)
    xs = np.empty((n_rec, n, 3))
    ys = np.empty((n_rec, n, 3))
    x = x0.copy()
    y = y0.copy()
    k1x = np.empty((n, 3)); k1y = np.empty((n, 3))
    k2x = np.empty((n, 3)); k2y = np.empty((n, 3))
    k3x = np.empty((n, 3)); k3y = np.empty((n, 3))
    k4x = np.empty((n, 3)); k4y = np.empty((n, 3))
    rec = 0
    for step in range(n_steps + 1):
        if step >= record_start and (step - record_start) % stride == 0 and rec < n_rec:
            times[rec] = step * dt
            xs[rec] = x
            ys[rec] = y
            rec += 1
        if step == n_steps:
            break
        sig = sigma if step >= switch_step else 0.0
        _duplex_rhs(x, y, a, lap, kappa, p_top, p_bot, d, alpha, beta, sig, k1x, k1y)
        _duplex_rhs(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, a, lap, kappa,
                    p_top, p_bot, d, alpha, beta, sig, k2x, k2y)
        _duplex_rhs(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, a, lap, kappa,
                    p_top, p_bot, d, alpha, beta, sig, k3x, k3y)
        _duplex_rhs(x + dt * k3x, y + dt * k3y, a, lap, kappa,
                    p_top, p_bot, d, alpha, beta, sig, k4x, k4y)
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        if step % 1000 == 0 or step == n_steps - 1:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                return times[:rec], xs[:rec], ys[:rec], step + 1
    return times, xs, ys, -1


@njit(cache=True)
def _quotient_rhs(r, s, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sig, dr, ds):
    kt = r.shape[0]
    kb = s.shape[0]
    _hr_into(r, p_top, dr)
    _hr_into(s, p_bot, ds)
    for i in range(kt):
        acc = 0.0
        for j in range(kt):
            acc += a_r[i, j] * r[j, 0]
        dr[i, 0] += alpha * acc
    for i in range(kb):
        acc = 0.0
        for j in range(kb):
            acc += l_s[i, j] * s[j, 0]
        ds[i, 0] -= beta * acc
    if sig != 0.0:
        for i in range(kb):
            for p in range(3):
                acc = 0.0
                for j in range(kt):
                    for q in range(3):
                        acc += k_r[i, j] * d[p, q] * r[j, q]
                for j in range(kb):
                    for q in range(3):
                        acc -= k_s[i, j] * d[p, q] * s[j, q]
                ds[i, p] += sig * acc


@njit(cache=True)
def integrate_quotient(a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma,
                       switch_step, r0, s0, dt, n_steps, record_start, stride):
    kt = r0.shape[0]
    kb = s0.shape[0]
    n_rec = (n_steps - record_start) // stride + 1
    times = np.empty(n_rec)
    rs = np.empty((n_rec, kt, 3))
    ss = np.empty((n_rec, kb, 3))
    r = r0.copy()
    s = s0.copy()
    k1r = np.empty((kt, 3)); k1s = np.empty((kb, 3))
    k2r = np.empty((kt, 3)); k2s = np.empty((kb, 3))
    k3r = np.empty((kt, 3)); k3s = np.empty((kb, 3))
    k4r = np.empty((kt, 3)); k4s = np.empty((kb, 3))
    rec = 0
    for step in range(n_steps + 1):
        if step >= record_start and (step - record_start) % stride == 0 and rec < n_rec:
            times[rec] = step * dt
            rs[rec] = r
            ss[rec] = s
            rec += 1
        if step == n_steps:
            break
        sig = sigma if step >= switch_step else 0.0
        _quotient_rhs(r, s, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sig, k1r, k1s)
        _quotient_rhs(r + 0.5 * dt * k1r, s + 0.5 * dt * k1s, a_r, l_s, k_r, k_s,
                      p_top, p_bot, d, alpha, beta, sig, k2r, k2s)
        _quotient_rhs(r + 0.5 * dt * k2r, s + 0.5 * dt * k2s, a_r, l_s, k_r, k_s,
                      p_top, p_bot, d, alpha, beta, sig, k3r, k3s)
        _quotient_rhs(r + dt * k3r, s + dt * k3s, a_r, l_s, k_r, k_s,
                      p_top, p_bot, d, alpha, beta, sig, k4r, k4s)
        r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        s = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        if step % 1000 == 0:
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(s))):
                return times[:rec], rs[:rec], ss[:rec], step + 1
    return times, rs, ss, -1


@njit(cache=True)
def _block_jacobian(states, dir_cluster, p, coupling, coef, damp, d, jmat):
    """Variational operator of one transverse block.

    Direction a feels the node Jacobian at its cluster's state, the
    first-component intra coupling coef*coupling[a, b], and a per-direction
    multiple of the inter-layer matrix d on its own diagonal block.
    """
    m = dir_cluster.shape[0]
    pa, pb, pc, pd, ps, pt, pI, pr = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7]
    jmat[:, :] = 0.0
    for ai in range(m):
        x = states[dir_cluster[ai], 0]
        i0 = 3 * ai
        jmat[i0, i0] = -3.0 * pa * x * x + 2.0 * pb * x
        jmat[i0, i0 + 1] = 1.0
        jmat[i0, i0 + 2] = -1.0
        jmat[i0 + 1, i0] = -2.0 * pd * x
        jmat[i0 + 1, i0 + 1] = -1.0
        jmat[i0 + 2, i0] = pr * ps
        jmat[i0 + 2, i0 + 2] = -pr
        for bi in range(m):
            jmat[i0, 3 * bi] += coef * coupling[ai, bi]
        if damp[ai] != 0.0:
            for pp in range(3):
                for qq in range(3):
                    jmat[i0 + pp, i0 + qq] += damp[ai] * d[pp, qq]


@njit(cache=True)
def lyap_block(a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma,
               r0, s0, is_top_block, coupling, dir_cluster, damp,
               dt, transient_steps, n_steps, renorm_every):
    """Benettin QR co-integration of the quotient flow and one transverse block.

    Returns the cumulative log-stretching sums after each renormalization,
    shape (n_renorms, 3m); exponents are sums[-1] / total_time.
    """
    kt = r0.shape[0]
    kb = s0.shape[0]
    m = dir_cluster.shape[0]
    dim = 3 * m
    coef = alpha if is_top_block else -beta
    p_node = p_top if is_top_block else p_bot

    r = r0.copy()
    s = s0.copy()
    k1r = np.empty((kt, 3)); k1s = np.empty((kb, 3))
    k2r = np.empty((kt, 3)); k2s = np.empty((kb, 3))
    k3r = np.empty((kt, 3)); k3s = np.empty((kb, 3))
    k4r = np.empty((kt, 3)); k4s = np.empty((kb, 3))

    for _ in range(transient_steps):
        _quotient_rhs(r, s, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma, k1r, k1s)
        _quotient_rhs(r + 0.5 * dt * k1r, s + 0.5 * dt * k1s, a_r, l_s, k_r, k_s,
                      p_top, p_bot, d, alpha, beta, sigma, k2r, k2s)
        _quotient_rhs(r + 0.5 * dt * k2r, s + 0.5 * dt * k2s, a_r, l_s, k_r, k_s,
                      p_top, p_bot, d, alpha, beta, sigma, k3r, k3s)
        _quotient_rhs(r + dt * k3r, s + dt * k3s, a_r, l_s, k_r, k_s,
                      p_top, p_bot, d, alpha, beta, sigma, k4r, k4s)
        r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        s = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)

    q = np.eye(dim)
    jmat = np.empty((dim, dim))
    n_renorms = n_steps // renorm_every
    logs = np.zeros((n_renorms, dim))
    acc = np.zeros(dim)
    ridx = 0

    for step in range(n_steps):
        # quotient RK4 stages
        _quotient_rhs(r, s, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma, k1r, k1s)
        r2 = r + 0.5 * dt * k1r; s2 = s + 0.5 * dt * k1s
        _quotient_rhs(r2, s2, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma, k2r, k2s)
        r3 = r + 0.5 * dt * k2r; s3 = s + 0.5 * dt * k2s
        _quotient_rhs(r3, s3, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma, k3r, k3s)
        r4 = r + dt * k3r; s4 = s + dt * k3s
        _quotient_rhs(r4, s4, a_r, l_s, k_r, k_s, p_top, p_bot, d, alpha, beta, sigma, k4r, k4s)

        # variational RK4 along the same stages
        st1 = r if is_top_block else s
        _block_jacobian(st1, dir_cluster, p_node, coupling, coef, damp, d, jmat)
        g1 = jmat @ q
        st2 = r2 if is_top_block else s2
        _block_jacobian(st2, dir_cluster, p_node, coupling, coef, damp, d, jmat)
        g2 = jmat @ (q + 0.5 * dt * g1)
        st3 = r3 if is_top_block else s3
        _block_jacobian(st3, dir_cluster, p_node, coupling, coef, damp, d, jmat)
        g3 = jmat @ (q + 0.5 * dt * g2)
        st4 = r4 if is_top_block else s4
        _block_jacobian(st4, dir_cluster, p_node, coupling, coef, damp, d, jmat)
        g4 = jmat @ (q + dt * g3)

        r = r + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        s = s + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        q = q + (dt / 6.0) * (g1 + 2.0 * g2 + 2.0 * g3 + g4)

        if (step + 1) % renorm_every == 0:
            qq, rr = np.linalg.qr(q)
            qq = np.ascontiguousarray(qq)
            for i in range(dim):
                diag = rr[i, i]
                if diag < 0.0:
                    for j in range(dim):
                        qq[j, i] = -qq[j, i]
                    diag = -diag
                acc[i] += np.log(diag)
            q = qq
            if ridx < n_renorms:
                logs[ridx] = acc
                ridx += 1
    return logs
