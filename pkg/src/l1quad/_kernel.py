"""JIT-compiled inner loop of the plant integrator.

The simulation spends nearly all of its time stepping the plant at 1 kHz,
so the RK4 stages live in a numba kernel operating on a flat state vector

    state = [p(3), v(3), R(9, row-major), omega(3)]

Uncertainty signals arrive as a (n_terms, 5) float array with rows

    [channel, kind, amplitude, frequency, state_factor]

where channel indexes [sigma_m(0:4), sigma_um(4:6), beta deviation(6:10),
inertial force F0(10:13), body moment M0(13:16)], kind is 0=sin, 1=ramp,
2=const, and state_factor != 0 multiplies the term by p_x^2. The kernel is
compiled without fastmath so results are bit-reproducible.
"""

import math

import numpy as np
from numba import njit

# channel layout of the compiled signal table
CH_SIGMA_M = 0
CH_SIGMA_UM = 4
CH_BETA = 6
CH_FORCE = 10
CH_MOMENT = 13
N_CHANNELS = 16

KIND_SIN = 0
KIND_RAMP = 1
KIND_CONST = 2

STATUS_OK = 0
STATUS_DIVERGED = 1


@njit(cache=True)
def eval_channels(terms, tau, p1sq, out):
    """Accumulate every signal term at window time tau into out[16]."""
    for i in range(N_CHANNELS):
        out[i] = 0.0
    for k in range(terms.shape[0]):
        ch = int(terms[k, 0])
        kind = int(terms[k, 1])
        amp = terms[k, 2]
        if kind == KIND_SIN:
            v = amp * math.sin(terms[k, 3] * tau)
        elif kind == KIND_RAMP:
            v = amp * tau
        else:
            v = amp
        if terms[k, 4] != 0.0:
            v *= p1sq
        out[ch] += v


@njit(cache=True)
def rk4_advance(state, u_nom, u_mix, use_mix, terms, t_on, t_off,
                m, g, jmat, jinv, t, dt, substeps, limit):
    """Advance the uncertain rigid-body dynamics in place; returns a status code.

    Classical RK4 on (p, v, omega) with the rotation advanced
    multiplicatively, R <- R exp(theta), where theta integrates the
    dexpinv-corrected body rate (Munthe-Kaas RK4). One Newton-Schulz pass
    per step repairs orthonormality drift. Control u is held for the whole
    call (zero-order hold); u_mix replaces u_nom inside the uncertainty
    window when use_mix is set (motor-effectiveness case). Uncertainty
    signals are evaluated at the RK4 stage times.
    """
    px, py, pz = state[0], state[1], state[2]
    vx, vy, vz = state[3], state[4], state[5]
    r00, r01, r02 = state[6], state[7], state[8]
    r10, r11, r12 = state[9], state[10], state[11]
    r20, r21, r22 = state[12], state[13], state[14]
    ox, oy, oz = state[15], state[16], state[17]

    j00, j01, j02 = jmat[0, 0], jmat[0, 1], jmat[0, 2]
    j10, j11, j12 = jmat[1, 0], jmat[1, 1], jmat[1, 2]
    j20, j21, j22 = jmat[2, 0], jmat[2, 1], jmat[2, 2]
    i00, i01, i02 = jinv[0, 0], jinv[0, 1], jinv[0, 2]
    i10, i11, i12 = jinv[1, 0], jinv[1, 1], jinv[1, 2]
    i20, i21, i22 = jinv[2, 0], jinv[2, 1], jinv[2, 2]

    f_nom, mx_nom, my_nom, mz_nom = u_nom[0], u_nom[1], u_nom[2], u_nom[3]
    f_mix, mx_mix, my_mix, mz_mix = u_mix[0], u_mix[1], u_mix[2], u_mix[3]

    has_terms = terms.shape[0] > 0
    sig = np.zeros(N_CHANNELS)

    half = 0.5 * dt
    sixth = dt / 6.0

    d_px = d_py = d_pz = 0.0
    d_vx = d_vy = d_vz = 0.0
    d_tx = d_ty = d_tz = 0.0
    d_ox = d_oy = d_oz = 0.0

    for i_sub in range(substeps):
        t0 = t + i_sub * dt

        a_px = a_py = a_pz = a_vx = a_vy = a_vz = 0.0
        a_tx = a_ty = a_tz = a_ox = a_oy = a_oz = 0.0

        for i_stage in range(4):
            if i_stage == 0:
                h = 0.0
                w = 1.0
                ts = t0
            elif i_stage == 3:
                h = dt
                w = 1.0
                ts = t0 + dt
            else:
                h = half
                w = 2.0
                ts = t0 + half

            s_px = px + h * d_px
            s_vx, s_vy, s_vz = vx + h * d_vx, vy + h * d_vy, vz + h * d_vz
            s_tx, s_ty, s_tz = h * d_tx, h * d_ty, h * d_tz
            s_ox, s_oy, s_oz = ox + h * d_ox, oy + h * d_oy, oz + h * d_oz

            # R_s = R exp_so3(theta); stage 1 has theta = 0 exactly
            th2 = s_tx * s_tx + s_ty * s_ty + s_tz * s_tz
            if th2 == 0.0:
                s00, s01, s02 = r00, r01, r02
                s10, s11, s12 = r10, r11, r12
                s20, s21, s22 = r20, r21, r22
            else:
                if th2 < 1e-16:
                    a_c = 1.0
                    b_c = 0.5
                else:
                    th = math.sqrt(th2)
                    a_c = math.sin(th) / th
                    b_c = (1.0 - math.cos(th)) / th2
                e00 = 1.0 + b_c * (-s_ty * s_ty - s_tz * s_tz)
                e01 = -a_c * s_tz + b_c * s_tx * s_ty
                e02 = a_c * s_ty + b_c * s_tx * s_tz
                e10 = a_c * s_tz + b_c * s_tx * s_ty
                e11 = 1.0 + b_c * (-s_tx * s_tx - s_tz * s_tz)
                e12 = -a_c * s_tx + b_c * s_ty * s_tz
                e20 = -a_c * s_ty + b_c * s_tx * s_tz
                e21 = a_c * s_tx + b_c * s_ty * s_tz
                e22 = 1.0 + b_c * (-s_tx * s_tx - s_ty * s_ty)
                s00 = r00 * e00 + r01 * e10 + r02 * e20
                s01 = r00 * e01 + r01 * e11 + r02 * e21
                s02 = r00 * e02 + r01 * e12 + r02 * e22
                s10 = r10 * e00 + r11 * e10 + r12 * e20
                s11 = r10 * e01 + r11 * e11 + r12 * e21
                s12 = r10 * e02 + r11 * e12 + r12 * e22
                s20 = r20 * e00 + r21 * e10 + r22 * e20
                s21 = r20 * e01 + r21 * e11 + r22 * e21
                s22 = r20 * e02 + r21 * e12 + r22 * e22

            sm1 = sm2 = sm3 = sm4 = su1 = su2 = 0.0
            b1 = b2 = b3 = b4 = 1.0
            f_u, mx_u, my_u, mz_u = f_nom, mx_nom, my_nom, mz_nom
            if t_on <= ts <= t_off:
                if use_mix:
                    f_u, mx_u, my_u, mz_u = f_mix, mx_mix, my_mix, mz_mix
                if has_terms:
                    eval_channels(terms, ts - t_on, s_px * s_px, sig)
                    sm1 = sig[0]
                    sm2 = sig[1] + sig[13]
                    sm3 = sig[2] + sig[14]
                    sm4 = sig[3] + sig[15]
                    su1 = sig[4]
                    su2 = sig[5]
                    b1 += sig[6]
                    b2 += sig[7]
                    b3 += sig[8]
                    b4 += sig[9]
                    f0x, f0y, f0z = sig[10], sig[11], sig[12]
                    if f0x != 0.0 or f0y != 0.0 or f0z != 0.0:
                        sm1 -= f0x * s02 + f0y * s12 + f0z * s22
                        su1 += f0x * s00 + f0y * s10 + f0z * s20
                        su2 += f0x * s01 + f0y * s11 + f0z * s21

            thrust = (b1 * f_u + sm1) / m
            k_vx = -thrust * s02 + (su1 * s00 + su2 * s01) / m
            k_vy = -thrust * s12 + (su1 * s10 + su2 * s11) / m
            k_vz = g - thrust * s22 + (su1 * s20 + su2 * s21) / m

            jox = j00 * s_ox + j01 * s_oy + j02 * s_oz
            joy = j10 * s_ox + j11 * s_oy + j12 * s_oz
            joz = j20 * s_ox + j21 * s_oy + j22 * s_oz
            tqx = b2 * mx_u + sm2 - (s_oy * joz - s_oz * joy)
            tqy = b3 * my_u + sm3 - (s_oz * jox - s_ox * joz)
            tqz = b4 * mz_u + sm4 - (s_ox * joy - s_oy * jox)
            k_ox = i00 * tqx + i01 * tqy + i02 * tqz
            k_oy = i10 * tqx + i11 * tqy + i12 * tqz
            k_oz = i20 * tqx + i21 * tqy + i22 * tqz

            # theta' = dexpinv(-theta, omega) = omega + theta x omega/2
            #          + theta x (theta x omega)/12   (right increments, body rate)
            if th2 == 0.0:
                k_tx, k_ty, k_tz = s_ox, s_oy, s_oz
            else:
                c1x = s_ty * s_oz - s_tz * s_oy
                c1y = s_tz * s_ox - s_tx * s_oz
                c1z = s_tx * s_oy - s_ty * s_ox
                k_tx = s_ox + 0.5 * c1x + (s_ty * c1z - s_tz * c1y) / 12.0
                k_ty = s_oy + 0.5 * c1y + (s_tz * c1x - s_tx * c1z) / 12.0
                k_tz = s_oz + 0.5 * c1z + (s_tx * c1y - s_ty * c1x) / 12.0

            d_px, d_py, d_pz = s_vx, s_vy, s_vz
            d_vx, d_vy, d_vz = k_vx, k_vy, k_vz
            d_tx, d_ty, d_tz = k_tx, k_ty, k_tz
            d_ox, d_oy, d_oz = k_ox, k_oy, k_oz

            a_px += w * s_vx
            a_py += w * s_vy
            a_pz += w * s_vz
            a_vx += w * k_vx
            a_vy += w * k_vy
            a_vz += w * k_vz
            a_tx += w * k_tx
            a_ty += w * k_ty
            a_tz += w * k_tz
            a_ox += w * k_ox
            a_oy += w * k_oy
            a_oz += w * k_oz

        px += sixth * a_px
        py += sixth * a_py
        pz += sixth * a_pz
        vx += sixth * a_vx
        vy += sixth * a_vy
        vz += sixth * a_vz
        thx = sixth * a_tx
        thy = sixth * a_ty
        thz = sixth * a_tz
        ox += sixth * a_ox
        oy += sixth * a_oy
        oz += sixth * a_oz

        # R <- R exp_so3(theta)
        th2 = thx * thx + thy * thy + thz * thz
        if th2 < 1e-16:
            a_c = 1.0
            b_c = 0.5
        else:
            th = math.sqrt(th2)
            a_c = math.sin(th) / th
            b_c = (1.0 - math.cos(th)) / th2
        e00 = 1.0 + b_c * (-thy * thy - thz * thz)
        e01 = -a_c * thz + b_c * thx * thy
        e02 = a_c * thy + b_c * thx * thz
        e10 = a_c * thz + b_c * thx * thy
        e11 = 1.0 + b_c * (-thx * thx - thz * thz)
        e12 = -a_c * thx + b_c * thy * thz
        e20 = -a_c * thy + b_c * thx * thz
        e21 = a_c * thx + b_c * thy * thz
        e22 = 1.0 + b_c * (-thx * thx - thy * thy)
        n00 = r00 * e00 + r01 * e10 + r02 * e20
        n01 = r00 * e01 + r01 * e11 + r02 * e21
        n02 = r00 * e02 + r01 * e12 + r02 * e22
        n10 = r10 * e00 + r11 * e10 + r12 * e20
        n11 = r10 * e01 + r11 * e11 + r12 * e21
        n12 = r10 * e02 + r11 * e12 + r12 * e22
        n20 = r20 * e00 + r21 * e10 + r22 * e20
        n21 = r20 * e01 + r21 * e11 + r22 * e21
        n22 = r20 * e02 + r21 * e12 + r22 * e22

        # single Newton-Schulz pass: N (3I - N^T N)/2
        g00 = n00 * n00 + n10 * n10 + n20 * n20
        g01 = n00 * n01 + n10 * n11 + n20 * n21
        g02 = n00 * n02 + n10 * n12 + n20 * n22
        g11 = n01 * n01 + n11 * n11 + n21 * n21
        g12 = n01 * n02 + n11 * n12 + n21 * n22
        g22 = n02 * n02 + n12 * n12 + n22 * n22
        h00 = 1.5 - 0.5 * g00
        h01 = -0.5 * g01
        h02 = -0.5 * g02
        h11 = 1.5 - 0.5 * g11
        h12 = -0.5 * g12
        h22 = 1.5 - 0.5 * g22
        r00 = n00 * h00 + n01 * h01 + n02 * h02
        r01 = n00 * h01 + n01 * h11 + n02 * h12
        r02 = n00 * h02 + n01 * h12 + n02 * h22
        r10 = n10 * h00 + n11 * h01 + n12 * h02
        r11 = n10 * h01 + n11 * h11 + n12 * h12
        r12 = n10 * h02 + n11 * h12 + n12 * h22
        r20 = n20 * h00 + n21 * h01 + n22 * h02
        r21 = n20 * h01 + n21 * h11 + n22 * h12
        r22 = n20 * h02 + n21 * h12 + n22 * h22

        mag = max(abs(px), abs(py), abs(pz), abs(vx), abs(vy), abs(vz),
                  abs(ox), abs(oy), abs(oz))
        if not mag <= limit:  # also catches NaN
            return STATUS_DIVERGED

    state[0], state[1], state[2] = px, py, pz
    state[3], state[4], state[5] = vx, vy, vz
    state[6], state[7], state[8] = r00, r01, r02
    state[9], state[10], state[11] = r10, r11, r12
    state[12], state[13], state[14] = r20, r21, r22
    state[15], state[16], state[17] = ox, oy, oz
    return STATUS_OK


# ---------------------------------------------------------------------------
# full-run kernel: controller + L1 + saturation + plant, one call per run
# ---------------------------------------------------------------------------

RUN_COMPLETED = 0
RUN_CRASHED = 1
RUN_CONTROLLER_ERROR = 2

TRAJ_HOVER = 0
TRAJ_FIGURE8 = 1
TRAJ_TILTED = 2

EPS_FORCE = 1e-6
EPS_YAW = 1e-6
FEEDFORWARD_MARGIN = 0.1


@njit(cache=True)
def run_loop(
    n_ticks, period, plant_dt, plant_substeps, l1_substeps,
    traj_kind, center, amp_x, amp_y, amp_z, traj_period, yaw_d,
    kp, kv, kr, ko,
    m, g, jmat, jinv,
    l1_enabled, a_s, t_s, exp_as, phi, alpha_f, alpha_m1, alpha_m2,
    f_min, f_max, m_max,
    terms, t_on, t_off, use_mix, lam, mix_fwd, mix_inv,
    state, z_hat, filt, crash_distance, limit, table,
):
    """Simulate the full closed loop, filling `table` row-per-tick.

    table columns follow the CSV layout: t, p, v, euler, omega, p_d, f, M,
    u_ad, sigma_hat(6), z_tilde(6), sigma_true_m(4), sigma_true_um(2).
    `state` is the 18-entry plant state (modified in place), `z_hat` the L1
    predictor state, `filt` the 7 filter memories [thrust, m1(3), m2(3)].
    Returns (status, rows_filled).
    """
    w_traj = 2.0 * math.pi / traj_period
    cos_yaw = math.cos(yaw_d)
    sin_yaw = math.sin(yaw_d)

    sig = np.zeros(N_CHANNELS)
    u4 = np.zeros(4)
    u_mix4 = np.zeros(4)
    thrusts = np.zeros(4)

    sigma_hat = np.zeros(6)
    z_tilde = np.zeros(6)
    u_ad = np.zeros(4)

    for i in range(n_ticks):
        t = i * period

        # ----- trajectory sample (flat outputs through snap) -----
        if traj_kind == TRAJ_HOVER:
            pdx, pdy, pdz = center[0], center[1], center[2]
            vdx = vdy = vdz = 0.0
            adx = ady = adz = 0.0
            jdx = jdy = jdz = 0.0
            sdx = sdy = sdz = 0.0
        else:
            az_amp = amp_z if traj_kind == TRAJ_TILTED else 0.0
            sx = math.sin(w_traj * t)
            cx = math.cos(w_traj * t)
            s2 = math.sin(2.0 * w_traj * t)
            c2 = math.cos(2.0 * w_traj * t)
            w2 = w_traj * w_traj
            w3 = w2 * w_traj
            w4 = w3 * w_traj
            pdx = center[0] + amp_x * sx
            pdy = center[1] + amp_y * s2
            pdz = center[2] + az_amp * s2
            vdx = amp_x * w_traj * cx
            vdy = 2.0 * amp_y * w_traj * c2
            vdz = 2.0 * az_amp * w_traj * c2
            adx = -amp_x * w2 * sx
            ady = -4.0 * amp_y * w2 * s2
            adz = -4.0 * az_amp * w2 * s2
            jdx = -amp_x * w3 * cx
            jdy = -8.0 * amp_y * w3 * c2
            jdz = -8.0 * az_amp * w3 * c2
            sdx = amp_x * w4 * sx
            sdy = 16.0 * amp_y * w4 * s2
            sdz = 16.0 * az_amp * w4 * s2

        px, py, pz = state[0], state[1], state[2]
        vx, vy, vz = state[3], state[4], state[5]
        r00, r01, r02 = state[6], state[7], state[8]
        r10, r11, r12 = state[9], state[10], state[11]
        r20, r21, r22 = state[12], state[13], state[14]
        ox, oy, oz = state[15], state[16], state[17]

        # ----- baseline geometric controller -----
        epx, epy, epz = px - pdx, py - pdy, pz - pdz
        evx, evy, evz = vx - vdx, vy - vdy, vz - vdz
        fdx = -kp[0] * epx - kv[0] * evx + m * adx
        fdy = -kp[1] * epy - kv[1] * evy + m * ady
        fdz = -kp[2] * epz - kv[2] * evz + m * adz - m * g
        f_cmd = -(fdx * r02 + fdy * r12 + fdz * r22)

        norm_f = math.sqrt(fdx * fdx + fdy * fdy + fdz * fdz)
        if norm_f < EPS_FORCE:
            return RUN_CONTROLLER_ERROR, i
        b3x, b3y, b3z = -fdx / norm_f, -fdy / norm_f, -fdz / norm_f
        # b2 = b3 x b_int / ||.||, b_int = [cos yaw, sin yaw, 0]
        cxv = b3y * 0.0 - b3z * sin_yaw
        cyv = b3z * cos_yaw - b3x * 0.0
        czv = b3x * sin_yaw - b3y * cos_yaw
        norm_c = math.sqrt(cxv * cxv + cyv * cyv + czv * czv)
        if norm_c < EPS_YAW:
            return RUN_CONTROLLER_ERROR, i
        b2x, b2y, b2z = cxv / norm_c, cyv / norm_c, czv / norm_c
        b1x = b2y * b3z - b2z * b3y
        b1y = b2z * b3x - b2x * b3z
        b1z = b2x * b3y - b2y * b3x

        denom = math.sqrt(adx * adx + ady * ady + (adz + g) * (adz + g))
        if denom < FEEDFORWARD_MARGIN * g:
            return RUN_CONTROLLER_ERROR, i
        b3j = b3x * jdx + b3y * jdy + b3z * jdz
        hx = (jdx - b3j * b3x) / denom
        hy = (jdy - b3j * b3y) / denom
        hz = (jdz - b3j * b3z) / denom
        od1 = hx * b2x + hy * b2y + hz * b2z
        od2 = -(hx * b1x + hy * b1y + hz * b1z)
        od3 = 0.0  # constant desired yaw

        # h' (printed form, measured omega in the -omega x b3 terms)
        odb3x = od2 * b3z - od3 * b3y
        odb3y = od3 * b3x - od1 * b3z
        odb3z = od1 * b3y - od2 * b3x
        proj = odb3x * adx + odb3y * ady + odb3z * adz \
            + b3x * sdx + b3y * sdy + b3z * sdz
        omb3x = oy * b3z - oz * b3y
        omb3y = oz * b3x - ox * b3z
        omb3z = ox * b3y - oy * b3x
        hdx = (sdx - proj * b3x + b3j * omb3x) / denom
        hdy = (sdy - proj * b3y + b3j * omb3y) / denom
        hdz = (sdz - proj * b3z + b3j * omb3z) / denom
        oxb_x = oy * omb3z - oz * omb3y
        oxb_y = oz * omb3x - ox * omb3z
        oxb_z = ox * omb3y - oy * omb3x
        hdx += -omb3x - oxb_x
        hdy += -omb3y - oxb_y
        hdz += -omb3z - oxb_z
        dod1 = hdx * b2x + hdy * b2y + hdz * b2z
        dod2 = -(hdx * b1x + hdy * b1y + hdz * b1z)
        dod3 = 0.0

        # q = R_d^T R
        q00 = b1x * r00 + b1y * r10 + b1z * r20
        q01 = b1x * r01 + b1y * r11 + b1z * r21
        q02 = b1x * r02 + b1y * r12 + b1z * r22
        q10 = b2x * r00 + b2y * r10 + b2z * r20
        q11 = b2x * r01 + b2y * r11 + b2z * r21
        q12 = b2x * r02 + b2y * r12 + b2z * r22
        q20 = b3x * r00 + b3y * r10 + b3z * r20
        q21 = b3x * r01 + b3y * r11 + b3z * r21
        q22 = b3x * r02 + b3y * r12 + b3z * r22
        erx = 0.5 * (q21 - q12)
        ery = 0.5 * (q02 - q20)
        erz = 0.5 * (q10 - q01)
        # R^T R_d omega_d = q^T omega_d
        rtod_x = q00 * od1 + q10 * od2 + q20 * od3
        rtod_y = q01 * od1 + q11 * od2 + q21 * od3
        rtod_z = q02 * od1 + q12 * od2 + q22 * od3
        eox = ox - rtod_x
        eoy = oy - rtod_y
        eoz = oz - rtod_z
        # hat(omega) q^T omega_d - q^T domega_d
        rtdod_x = q00 * dod1 + q10 * dod2 + q20 * dod3
        rtdod_y = q01 * dod1 + q11 * dod2 + q21 * dod3
        rtdod_z = q02 * dod1 + q12 * dod2 + q22 * dod3
        wx = (oy * rtod_z - oz * rtod_y) - rtdod_x
        wy = (oz * rtod_x - ox * rtod_z) - rtdod_y
        wz = (ox * rtod_y - oy * rtod_x) - rtdod_z
        jox = jmat[0, 0] * ox + jmat[0, 1] * oy + jmat[0, 2] * oz
        joy = jmat[1, 0] * ox + jmat[1, 1] * oy + jmat[1, 2] * oz
        joz = jmat[2, 0] * ox + jmat[2, 1] * oy + jmat[2, 2] * oz
        mx_cmd = -kr[0] * erx - ko[0] * eox + (oy * joz - oz * joy) \
            - (jmat[0, 0] * wx + jmat[0, 1] * wy + jmat[0, 2] * wz)
        my_cmd = -kr[1] * ery - ko[1] * eoy + (oz * jox - ox * joz) \
            - (jmat[1, 0] * wx + jmat[1, 1] * wy + jmat[1, 2] * wz)
        mz_cmd = -kr[2] * erz - ko[2] * eoz + (ox * joy - oy * jox) \
            - (jmat[2, 0] * wx + jmat[2, 1] * wy + jmat[2, 2] * wz)

        # ----- L1 augmentation -----
        if l1_enabled:
            for _ in range(l1_substeps):
                zt0 = z_hat[0] - vx
                zt1 = z_hat[1] - vy
                zt2 = z_hat[2] - vz
                zt3 = z_hat[3] - ox
                zt4 = z_hat[4] - oy
                zt5 = z_hat[5] - oz
                z_tilde[0], z_tilde[1], z_tilde[2] = zt0, zt1, zt2
                z_tilde[3], z_tilde[4], z_tilde[5] = zt3, zt4, zt5

                w0 = exp_as[0] * zt0 / phi[0]
                w1 = exp_as[1] * zt1 / phi[1]
                w2 = exp_as[2] * zt2 / phi[2]
                w3 = exp_as[3] * zt3 / phi[3]
                w4w = exp_as[4] * zt4 / phi[4]
                w5 = exp_as[5] * zt5 / phi[5]
                # sigma_hat = -Bbar^-1 w (closed form)
                sigma_hat[0] = m * (r02 * w0 + r12 * w1 + r22 * w2)
                sigma_hat[1] = -(jmat[0, 0] * w3 + jmat[0, 1] * w4w + jmat[0, 2] * w5)
                sigma_hat[2] = -(jmat[1, 0] * w3 + jmat[1, 1] * w4w + jmat[1, 2] * w5)
                sigma_hat[3] = -(jmat[2, 0] * w3 + jmat[2, 1] * w4w + jmat[2, 2] * w5)
                sigma_hat[4] = -m * (r00 * w0 + r10 * w1 + r20 * w2)
                sigma_hat[5] = -m * (r01 * w0 + r11 * w1 + r21 * w2)

                # low-pass filter, exact pole discretization
                filt[0] = alpha_f * filt[0] + (1.0 - alpha_f) * sigma_hat[0]
                filt[1] = alpha_m1 * filt[1] + (1.0 - alpha_m1) * sigma_hat[1]
                filt[2] = alpha_m1 * filt[2] + (1.0 - alpha_m1) * sigma_hat[2]
                filt[3] = alpha_m1 * filt[3] + (1.0 - alpha_m1) * sigma_hat[3]
                filt[4] = alpha_m2 * filt[4] + (1.0 - alpha_m2) * filt[1]
                filt[5] = alpha_m2 * filt[5] + (1.0 - alpha_m2) * filt[2]
                filt[6] = alpha_m2 * filt[6] + (1.0 - alpha_m2) * filt[3]
                u_ad[0] = -filt[0]
                u_ad[1] = -filt[4]
                u_ad[2] = -filt[5]
                u_ad[3] = -filt[6]

                # predictor sees the saturated total command
                ut0 = min(max(f_cmd + u_ad[0], f_min), f_max)
                ut1 = min(max(mx_cmd + u_ad[1], -m_max), m_max)
                ut2 = min(max(my_cmd + u_ad[2], -m_max), m_max)
                ut3 = min(max(mz_cmd + u_ad[3], -m_max), m_max)

                c0 = -(ut0 + sigma_hat[0]) / m * r02 \
                    + (sigma_hat[4] * r00 + sigma_hat[5] * r01) / m
                c1 = -(ut0 + sigma_hat[0]) / m * r12 \
                    + (sigma_hat[4] * r10 + sigma_hat[5] * r11) / m
                c2 = g - (ut0 + sigma_hat[0]) / m * r22 \
                    + (sigma_hat[4] * r20 + sigma_hat[5] * r21) / m
                tq0 = ut1 + sigma_hat[1] - (oy * joz - oz * joy)
                tq1 = ut2 + sigma_hat[2] - (oz * jox - ox * joz)
                tq2 = ut3 + sigma_hat[3] - (ox * joy - oy * jox)
                c3 = jinv[0, 0] * tq0 + jinv[0, 1] * tq1 + jinv[0, 2] * tq2
                c4 = jinv[1, 0] * tq0 + jinv[1, 1] * tq1 + jinv[1, 2] * tq2
                c5 = jinv[2, 0] * tq0 + jinv[2, 1] * tq1 + jinv[2, 2] * tq2

                # RK4 on z_hat' = c + a_s (z_hat - z), held inputs
                h_ts = t_s
                zm0, zm1, zm2, zm3, zm4, zm5 = vx, vy, vz, ox, oy, oz
                y0, y1, y2 = z_hat[0], z_hat[1], z_hat[2]
                y3, y4, y5 = z_hat[3], z_hat[4], z_hat[5]
                k10 = c0 + a_s[0] * (y0 - zm0)
                k11 = c1 + a_s[1] * (y1 - zm1)
                k12 = c2 + a_s[2] * (y2 - zm2)
                k13 = c3 + a_s[3] * (y3 - zm3)
                k14 = c4 + a_s[4] * (y4 - zm4)
                k15 = c5 + a_s[5] * (y5 - zm5)
                k20 = c0 + a_s[0] * (y0 + 0.5 * h_ts * k10 - zm0)
                k21 = c1 + a_s[1] * (y1 + 0.5 * h_ts * k11 - zm1)
                k22 = c2 + a_s[2] * (y2 + 0.5 * h_ts * k12 - zm2)
                k23 = c3 + a_s[3] * (y3 + 0.5 * h_ts * k13 - zm3)
                k24 = c4 + a_s[4] * (y4 + 0.5 * h_ts * k14 - zm4)
                k25 = c5 + a_s[5] * (y5 + 0.5 * h_ts * k15 - zm5)
                k30 = c0 + a_s[0] * (y0 + 0.5 * h_ts * k20 - zm0)
                k31 = c1 + a_s[1] * (y1 + 0.5 * h_ts * k21 - zm1)
                k32 = c2 + a_s[2] * (y2 + 0.5 * h_ts * k22 - zm2)
                k33 = c3 + a_s[3] * (y3 + 0.5 * h_ts * k23 - zm3)
                k34 = c4 + a_s[4] * (y4 + 0.5 * h_ts * k24 - zm4)
                k35 = c5 + a_s[5] * (y5 + 0.5 * h_ts * k25 - zm5)
                k40 = c0 + a_s[0] * (y0 + h_ts * k30 - zm0)
                k41 = c1 + a_s[1] * (y1 + h_ts * k31 - zm1)
                k42 = c2 + a_s[2] * (y2 + h_ts * k32 - zm2)
                k43 = c3 + a_s[3] * (y3 + h_ts * k33 - zm3)
                k44 = c4 + a_s[4] * (y4 + h_ts * k34 - zm4)
                k45 = c5 + a_s[5] * (y5 + h_ts * k35 - zm5)
                s6 = h_ts / 6.0
                z_hat[0] = y0 + s6 * (k10 + 2.0 * (k20 + k30) + k40)
                z_hat[1] = y1 + s6 * (k11 + 2.0 * (k21 + k31) + k41)
                z_hat[2] = y2 + s6 * (k12 + 2.0 * (k22 + k32) + k42)
                z_hat[3] = y3 + s6 * (k13 + 2.0 * (k23 + k33) + k43)
                z_hat[4] = y4 + s6 * (k14 + 2.0 * (k24 + k34) + k44)
                z_hat[5] = y5 + s6 * (k15 + 2.0 * (k25 + k35) + k45)
            if not math.isfinite(z_hat[0] + z_hat[1] + z_hat[2]
                                  + z_hat[3] + z_hat[4] + z_hat[5]):
                return RUN_CRASHED, i

        # ----- saturation of the applied command -----
        u4[0] = min(max(f_cmd + u_ad[0], f_min), f_max)
        u4[1] = min(max(mx_cmd + u_ad[1], -m_max), m_max)
        u4[2] = min(max(my_cmd + u_ad[2], -m_max), m_max)
        u4[3] = min(max(mz_cmd + u_ad[3], -m_max), m_max)

        # ----- true injected uncertainty at the tick (for the log) -----
        st_m0 = st_m1 = st_m2 = st_m3 = 0.0
        st_u0 = st_u1 = 0.0
        if terms.shape[0] > 0 and t_on <= t <= t_off:
            eval_channels(terms, t - t_on, px * px, sig)
            st_m0 = sig[0]
            st_m1 = sig[1] + sig[13]
            st_m2 = sig[2] + sig[14]
            st_m3 = sig[3] + sig[15]
            st_u0 = sig[4]
            st_u1 = sig[5]
            f0x, f0y, f0z = sig[10], sig[11], sig[12]
            if f0x != 0.0 or f0y != 0.0 or f0z != 0.0:
                st_m0 -= f0x * r02 + f0y * r12 + f0z * r22
                st_u0 += f0x * r00 + f0y * r10 + f0z * r20
                st_u1 += f0x * r01 + f0y * r11 + f0z * r21

        # ----- log row -----
        row = table[i]
        row[0] = t
        row[1], row[2], row[3] = px, py, pz
        row[4], row[5], row[6] = vx, vy, vz
        row[7] = math.atan2(r10, r00)
        sp = -r20
        if sp > 1.0:
            sp = 1.0
        elif sp < -1.0:
            sp = -1.0
        row[8] = math.asin(sp)
        row[9] = math.atan2(r21, r22)
        row[10], row[11], row[12] = ox, oy, oz
        row[13], row[14], row[15] = pdx, pdy, pdz
        row[16] = u4[0]
        row[17], row[18], row[19] = u4[1], u4[2], u4[3]
        row[20], row[21], row[22], row[23] = u_ad[0], u_ad[1], u_ad[2], u_ad[3]
        for k in range(6):
            row[24 + k] = sigma_hat[k] if l1_enabled else 0.0
            row[30 + k] = z_tilde[k] if l1_enabled else 0.0
        row[36], row[37], row[38], row[39] = st_m0, st_m1, st_m2, st_m3
        row[40], row[41] = st_u0, st_u1

        # ----- crash detection on tracking deviation -----
        dx, dy, dz = px - pdx, py - pdy, pz - pdz
        if dx * dx + dy * dy + dz * dz > crash_distance * crash_distance:
            return RUN_CRASHED, i + 1

        # ----- effectiveness mixing of the held command -----
        if use_mix:
            for k in range(4):
                acc = 0.0
                for kk in range(4):
                    acc += mix_inv[k, kk] * u4[kk]
                thrusts[k] = lam[k] * acc
            for k in range(4):
                acc = 0.0
                for kk in range(4):
                    acc += mix_fwd[k, kk] * thrusts[kk]
                u_mix4[k] = acc
        else:
            u_mix4[0], u_mix4[1], u_mix4[2], u_mix4[3] = u4[0], u4[1], u4[2], u4[3]

        # ----- plant advance over the control period -----
        status = rk4_advance(
            state, u4, u_mix4, use_mix, terms, t_on, t_off,
            m, g, jmat, jinv, t, plant_dt, plant_substeps, limit,
        )
        if status != STATUS_OK:
            return RUN_CRASHED, i + 1

    return RUN_COMPLETED, n_ticks
