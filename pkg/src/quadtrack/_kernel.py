"""Compiled closed-loop kernel. Mirrors the pure-python engine in harness.py
step for step; the equivalence is covered by tests. Keep the two in sync when
touching either."""

import numpy as np
from numba import njit


@njit(cache=True)
def _hat(v):
    H = np.zeros((3, 3))
    H[0, 1] = -v[2]
    H[0, 2] = v[1]
    H[1, 0] = v[2]
    H[1, 2] = -v[0]
    H[2, 0] = -v[1]
    H[2, 1] = v[0]
    return H


@njit(cache=True)
def _so3_exp(v):
    theta2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    theta = np.sqrt(theta2)
    V = _hat(v)
    if theta < 1e-6:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * V + b * (V @ V)


@njit(cache=True)
def _project_so3(M):
    U, _, Vt = np.linalg.svd(M)
    D = np.eye(3)
    D[2, 2] = np.linalg.det(U @ Vt)
    return U @ D @ Vt


@njit(cache=True)
def _norm(v):
    return np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _traj(t, is_lemniscate, ax, ay, alt, period):
    x_d = np.zeros(3)
    xdot = np.zeros(3)
    xddot = np.zeros(3)
    if is_lemniscate:
        w = 2.0 * np.pi / period
        x_d[0] = ax * np.cos(w * t)
        x_d[1] = 0.5 * ay * np.sin(2.0 * w * t)
        x_d[2] = alt
        xdot[0] = -ax * w * np.sin(w * t)
        xdot[1] = ay * w * np.cos(2.0 * w * t)
        xddot[0] = -ax * w * w * np.cos(w * t)
        xddot[1] = -2.0 * ay * w * w * np.sin(2.0 * w * t)
    else:
        x_d[2] = alt
    return x_d, xdot, xddot


@njit(cache=True)
def _sin_dist(amp, freq, phase, t):
    out = np.empty(3)
    for j in range(3):
        out[j] = amp[j] * np.sin(2.0 * np.pi * freq[j] * t + phase[j])
    return out


@njit(cache=True)
def run_kernel(n, dt, m, g, inertia, inertia_inv, ctrl_M,
               k, k_x, K_f, K_c, lambda_c, alpha1, alpha2,
               Lambda, gamma_f, ref_vectors, weights, bias,
               nx, nv, nw, nvec, has_vec_noise,
               is_lemniscate, ax, ay, alt, period, psi_d,
               velocity_free, eta_mass_factor, apparent_accel,
               f_amp, f_freq, f_phase, t_amp, t_freq, t_phase,
               varpi0, c, f_lo, f_hi):
    nrefs = ref_vectors.shape[0]
    data = np.empty((n + 1, 18))
    ez = np.zeros(3)
    ez[2] = 1.0

    x = np.zeros(3)
    v = np.zeros(3)
    R = np.eye(3)
    omega = np.zeros(3)
    e_f = np.zeros(3)
    pvec = np.zeros(3)
    b_bar = np.zeros(3)
    v_f = np.zeros((nrefs, 3))
    th1 = np.zeros(3)
    th2 = np.zeros(3)
    R_d_prev = np.eye(3)
    have_prev = False
    prev_vdot = np.zeros(3)
    f_obs_max = 0.0
    norm_g_max = 0.0
    eps_v_max = 0.0
    decay = np.exp(-gamma_f * dt)

    for i in range(n + 1):
        t = i * dt
        r_eff = ref_vectors.copy()
        if apparent_accel == 1:
            u = g * ez + prev_vdot
            r_eff[0] = u / _norm(u)
        v_true = np.empty((nrefs, 3))
        vec_m = np.empty((nrefs, 3))
        for s in range(nrefs):
            for j in range(3):
                acc = 0.0
                for q in range(3):
                    acc += r_eff[s, q] * R[q, j]
                v_true[s, j] = acc
            for j in range(3):
                vec_m[s, j] = v_true[s, j] + nvec[i, s, j]
            if has_vec_noise == 1:
                nn = _norm(vec_m[s])
                for j in range(3):
                    vec_m[s, j] /= nn
        x_m = x + nx[i]
        v_m = v + nv[i]
        omega_g = omega + bias + nw[i]

        if i == 0:
            v_f = vec_m.copy()

        # advance the stiff vector filters to the current sample first
        # (gamma_f dt = 10) so the bias correction cancels per-sample noise
        lag0 = np.empty((nrefs, 3))
        for s in range(nrefs):
            for j in range(3):
                lag0[s, j] = v_f[s, j] - vec_m[s, j]
                v_f[s, j] = vec_m[s, j] + lag0[s, j] * decay

        # bias estimate b_hat = b_bar - sum k_i (v_f ^)^T Lambda v
        corr = np.zeros(3)
        for s in range(nrefs):
            corr += weights[s] * _cross(Lambda @ vec_m[s], v_f[s])
        b_hat = b_bar - corr
        omega_hat = omega_g - b_hat

        x_d, xdot_d, xddot_d = _traj(t, is_lemniscate, ax, ay, alt, period)
        x_t_m = x_m - x_d
        if velocity_free == 1:
            if i == 0:
                pvec = k * x_t_m
            y = pvec - k * x_t_m
            v_t_m = np.zeros(3)
        else:
            v_t_m = v_m - xdot_d
            y = np.tanh(e_f)
        T = m * g * ez + m * xddot_d + m * ((k + k_x) * y + K_f @ y)
        f = _norm(T)

        c3 = T / f
        cd = np.zeros(3)
        cd[0] = np.cos(psi_d)
        cd[1] = np.sin(psi_d)
        c2 = _cross(c3, cd)
        c2 /= _norm(c2)
        c1 = _cross(c2, c3)
        R_d = np.empty((3, 3))
        for j in range(3):
            R_d[j, 0] = c1[j]
            R_d[j, 1] = c2[j]
            R_d[j, 2] = c3[j]

        omega_d_raw = np.zeros(3)
        if have_prev:
            D = (R_d_prev.T @ R_d - np.eye(3)) / dt
            S = 0.5 * (D - D.T)
            omega_d_raw[0] = S[2, 1]
            omega_d_raw[1] = S[0, 2]
            omega_d_raw[2] = S[1, 0]
        else:
            th1 = omega_d_raw.copy()
        # controllers consume the filtered rate; raw differencing of R_d
        # amplifies measurement noise by 1/dt
        omega_d = th1.copy()
        omega_dot_d = th2.copy()

        # alignment errors against v_des = R_d^T r_eff
        v_des = np.empty((nrefs, 3))
        for s in range(nrefs):
            for j in range(3):
                acc = 0.0
                for q in range(3):
                    acc += r_eff[s, q] * R_d[q, j]
                v_des[s, j] = acc
        eps = 0.0
        z = np.zeros(3)
        J = np.zeros((3, 3))
        wdots = 0.0
        for s in range(nrefs):
            d = vec_m[s, 0] * v_des[s, 0] + vec_m[s, 1] * v_des[s, 1] \
                + vec_m[s, 2] * v_des[s, 2]
            eps += weights[s] * (1.0 - d)
            z += weights[s] * _cross(vec_m[s], v_des[s])
            wdots += weights[s] * d
            for a_ in range(3):
                for b_ in range(3):
                    J[a_, b_] -= weights[s] * vec_m[s, a_] * v_des[s, b_]
        for j in range(3):
            J[j, j] += wdots

        om_r = -lambda_c * z + omega_d
        wr_rate = -lambda_c * (J @ (omega_hat - omega_d)) \
            - lambda_c * _cross(z, omega_d) + omega_dot_d
        tau = ctrl_M @ wr_rate - _cross(ctrl_M @ omega_hat, om_r) \
            - K_c @ (omega_hat - om_r) - (alpha1 * z + alpha2 * (J.T @ z))

        # truth-referenced telemetry
        x_t = x - x_d
        v_t = v - xdot_d
        eta_t = v_t + k_x * x_t + y
        eps_t = 0.0
        z_t = np.zeros(3)
        for s in range(nrefs):
            d = v_true[s, 0] * v_des[s, 0] + v_true[s, 1] * v_des[s, 1] \
                + v_true[s, 2] * v_des[s, 2]
            eps_t += weights[s] * (1.0 - d)
            z_t += weights[s] * _cross(v_true[s], v_des[s])
        om_t = omega - om_r
        b_t = b_hat - bias
        if apparent_accel == 1:
            W_bar = np.zeros((3, 3))
            for s in range(nrefs):
                for a_ in range(3):
                    for b_ in range(3):
                        W_bar[a_, b_] += weights[s] * r_eff[s, a_] \
                            * r_eff[s, b_]
            Wi = np.linalg.inv(W_bar)
            varpi = Wi[0, 0] + Wi[1, 1] + Wi[2, 2]
        else:
            varpi = varpi0
        tr_rel = 0.0
        for a_ in range(3):
            for b_ in range(3):
                tr_rel += R[a_, b_] * R_d[a_, b_]
        cos_th = 0.5 * (tr_rel - 1.0)
        if cos_th > 1.0:
            cos_th = 1.0
        if cos_th < -1.0:
            cos_th = -1.0
        gap = 2.0 * np.sin(0.5 * np.arccos(cos_th))
        v1 = 0.5 * (m * (eta_t @ eta_t) + k_x * k_x * (x_t @ x_t) + y @ y)
        v2 = 0.5 * (om_t @ (inertia @ om_t)) + 0.5 * (b_t @ b_t) \
            + 0.5 * alpha2 * (z_t @ z_t) + alpha1 * eps_t
        two_ev = 2.0 * eps_t * varpi
        if two_ev < 0.0:
            two_ev = 0.0
        data[i, 0] = t
        data[i, 1] = 0.5 * (3.0 - tr_rel)
        data[i, 2] = _norm(z_t)
        data[i, 3] = _norm(om_t)
        data[i, 4] = _norm(b_t)
        data[i, 5] = _norm(x_t)
        data[i, 6] = _norm(eta_t)
        data[i, 7] = _norm(y)
        data[i, 8] = f
        data[i, 9] = tau[0]
        data[i, 10] = tau[1]
        data[i, 11] = tau[2]
        data[i, 12] = v1
        data[i, 13] = v2
        data[i, 14] = c * v1 + v2
        data[i, 15] = np.sqrt(two_ev) - gap
        data[i, 16] = f - f_lo
        data[i, 17] = f_hi - f
        ok = True
        for j in range(18):
            if not np.isfinite(data[i, j]):
                ok = False
        for a_ in range(3):
            for b_ in range(3):
                if not np.isfinite(R[a_, b_]):
                    ok = False
        if not ok:
            return data, 1, i, f_obs_max, norm_g_max, eps_v_max

        if f > f_obs_max:
            f_obs_max = f
        G = K_c - _hat(om_r) @ ctrl_M + lambda_c * (ctrl_M @ J)
        gn = 0.0
        for a_ in range(3):
            for b_ in range(3):
                gn += G[a_, b_] * G[a_, b_]
        gn = np.sqrt(gn)
        if gn > norm_g_max:
            norm_g_max = gn
        for s in range(nrefs):
            lag = _norm(lag0[s])
            if lag > eps_v_max:
                eps_v_max = lag

        if i == n:
            break

        # position memory
        if velocity_free == 1:
            p0 = pvec
            kk1 = _p_rate(p0, x_t_m, k, k_x, K_f, m)
            kk2 = _p_rate(p0 + 0.5 * dt * kk1, x_t_m, k, k_x, K_f, m)
            kk3 = _p_rate(p0 + 0.5 * dt * kk2, x_t_m, k, k_x, K_f, m)
            kk4 = _p_rate(p0 + dt * kk3, x_t_m, k, k_x, K_f, m)
            pvec = p0 + dt / 6.0 * (kk1 + 2.0 * kk2 + 2.0 * kk3 + kk4)
        else:
            # advance the well-conditioned image y = tanh(e_f) and map back
            eta_m = v_t_m + k_x * x_t_m + y
            ke = k * m if eta_mass_factor == 1 else k
            drive = k_x * k_x * (1.0 - 1.0 / m) * x_t_m - ke * eta_m
            y0 = np.tanh(e_f)
            kk1 = -(K_f @ y0) + drive
            kk2 = -(K_f @ (y0 + 0.5 * dt * kk1)) + drive
            kk3 = -(K_f @ (y0 + 0.5 * dt * kk2)) + drive
            kk4 = -(K_f @ (y0 + dt * kk3)) + drive
            yn = y0 + dt / 6.0 * (kk1 + 2.0 * kk2 + 2.0 * kk3 + kk4)
            for j in range(3):
                if yn[j] > 1.0 - 1e-9:
                    yn[j] = 1.0 - 1e-9
                if yn[j] < -1.0 + 1e-9:
                    yn[j] = -1.0 + 1e-9
            e_f = np.arctanh(yn)

        # b_bar integrator: exact step matched to the filter update above
        corr2 = np.zeros(3)
        K_v = np.zeros((3, 3))
        for s in range(nrefs):
            corr2 += weights[s] * _cross(Lambda @ vec_m[s], -lag0[s])
            vfa = vec_m[s] + lag0[s] * (1.0 - decay) / (gamma_f * dt)
            Lb = Lambda @ vec_m[s]
            dd = vfa[0] * Lb[0] + vfa[1] * Lb[1] + vfa[2] * Lb[2]
            for a_ in range(3):
                K_v[a_, a_] += weights[s] * dd
                for b_ in range(3):
                    K_v[a_, b_] -= weights[s] * Lb[a_] * vfa[b_]
        b_bar = b_bar + dt * (K_v @ omega_hat) + (1.0 - decay) * corr2

        # reference-rate filter (critically damped, pole at 20 rad/s)
        a1f, b1f = _f_rate(th1, th2, omega_d_raw)
        a2f, b2f = _f_rate(th1 + 0.5 * dt * a1f, th2 + 0.5 * dt * b1f,
                           omega_d_raw)
        a3f, b3f = _f_rate(th1 + 0.5 * dt * a2f, th2 + 0.5 * dt * b2f,
                           omega_d_raw)
        a4f, b4f = _f_rate(th1 + dt * a3f, th2 + dt * b3f, omega_d_raw)
        th1 = th1 + dt / 6.0 * (a1f + 2.0 * a2f + 2.0 * a3f + a4f)
        th2 = th2 + dt / 6.0 * (b1f + 2.0 * b2f + 2.0 * b3f + b4f)
        R_d_prev = R_d
        have_prev = True

        # plant step
        fd0 = _sin_dist(f_amp, f_freq, f_phase, t)
        prev_vdot = (-m * g * ez + f * np.ascontiguousarray(R[:, 2])
                     + fd0) / m
        td0 = _sin_dist(t_amp, t_freq, t_phase, t)
        tdh = _sin_dist(t_amp, t_freq, t_phase, t + 0.5 * dt)
        td1 = _sin_dist(t_amp, t_freq, t_phase, t + dt)
        w0 = omega
        o1 = _om_dot(w0, tau + td0, inertia, inertia_inv)
        o2 = _om_dot(w0 + 0.5 * dt * o1, tau + tdh, inertia, inertia_inv)
        o3 = _om_dot(w0 + 0.5 * dt * o2, tau + tdh, inertia, inertia_inv)
        o4 = _om_dot(w0 + dt * o3, tau + td1, inertia, inertia_inv)
        w1 = w0
        w2 = w0 + 0.5 * dt * o1
        w3 = w0 + 0.5 * dt * o2
        w4 = w0 + dt * o3
        omega = w0 + dt / 6.0 * (o1 + 2.0 * o2 + 2.0 * o3 + o4)
        u1 = dt * (w1 / 4.0 + w2 / 6.0 + w3 / 6.0 - w4 / 12.0)
        u2 = dt * (-w1 / 12.0 + w2 / 6.0 + w3 / 6.0 + w4 / 4.0)
        R_new = R @ _so3_exp(u1) @ _so3_exp(u2)
        R_mid = R @ _so3_exp(0.25 * dt * (w1 + 0.5 * (w2 + w3)))
        fdh = _sin_dist(f_amp, f_freq, f_phase, t + 0.5 * dt)
        fd1 = _sin_dist(f_amp, f_freq, f_phase, t + dt)
        a0 = (-m * g * ez + f * np.ascontiguousarray(R[:, 2]) + fd0) / m
        am = (-m * g * ez + f * np.ascontiguousarray(R_mid[:, 2]) + fdh) / m
        a1v = (-m * g * ez + f * np.ascontiguousarray(R_new[:, 2]) + fd1) / m
        v_mid = v + 0.25 * dt * (a0 + am)
        v_new = v + dt / 6.0 * (a0 + 4.0 * am + a1v)
        x = x + dt / 6.0 * (v + 4.0 * v_mid + v_new)
        v = v_new
        R = R_new
        if (i + 1) % 100 == 0:
            R = _project_so3(R)

    return data, 0, n + 1, f_obs_max, norm_g_max, eps_v_max


@njit(cache=True)
def _p_rate(p, x_t, k, k_x, K_f, m):
    y = p - k * x_t
    return -k * (k_x * x_t + y) - K_f @ y + k_x * k_x * (1.0 - 1.0 / m) * x_t


@njit(cache=True)
def _f_rate(t1, t2, omega_d):
    return t2, -40.0 * t2 - 400.0 * (t1 - omega_d)


@njit(cache=True)
def _om_dot(om, tau_t, inertia, inertia_inv):
    Mw = inertia @ om
    return inertia_inv @ (_cross(Mw, om) + tau_t)
