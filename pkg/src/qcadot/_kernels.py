"""Compiled inner loops: Dormand-Prince 5(4) integration of the Bloch ODE.

Everything in this module works in internal units (hbar = gamma = 1, so
T_gamma = pi); `dynamics` converts to and from T_gamma units at the
boundary. The ODE is

    ds/dt = 2 b x s + D(s),   b = (-gamma, 0, (delta - lam*z)/2)

where the dissipator D is the Bloch-space image of the thermal Lindblad
channels built on the instantaneous eigenbasis: relaxation along the
field axis n = b/|b| toward -tanh(|b|/kT)*n at rate (g1+g2), transverse
decay at (g1+g2)/2, with g1 = 1/T_d and g2 = g1*exp(-2|b|/kT) (detailed
balance). The eigen-decomposition is closed form, so each right-hand
side costs a few dozen flops and sweeps of 10^6..10^7 steps are cheap.

Status codes: 0 = reached the end of the waveform, 1 = step size
underflow (stiffness tripwire), 2 = early exit because |ds/dt| fell
below `quiet_tol` (used by relax-to-equilibrium).
"""

import math

import numpy as np
from numba import njit

# record column layout (internal units)
REC_COLS = 12
(
    COL_T,
    COL_DELTA,
    COL_X,
    COL_Y,
    COL_Z,
    COL_E,
    COL_E1,
    COL_E2,
    COL_PWORK,
    COL_PSWITCH,
    COL_P3,
    COL_P4,
) = range(REC_COLS)

STATUS_OK = 0
STATUS_STIFF = 1
STATUS_QUIET = 2

BLOCH_CLIP_TOL = 1e-9


@njit(cache=True)
def bloch_rhs(delta, x, y, z, gamma, lam, inv_td, k_t):
    """Time derivative of the Bloch vector, internal units."""
    bx = -gamma
    bz = 0.5 * (delta - lam * z)
    dx = -2.0 * bz * y
    dy = 2.0 * (bz * x - bx * z)
    dz = 2.0 * bx * y
    if inv_td > 0.0:
        r = math.hypot(bx, bz)
        nx = bx / r
        nz = bz / r
        g1 = inv_td
        if k_t > 0.0:
            g2 = inv_td * math.exp(-2.0 * r / k_t)
        else:
            g2 = 0.0
        gs = g1 + g2
        sp = x * nx + z * nz
        cpar = -(g1 - g2) - gs * sp
        half_gs = 0.5 * gs
        dx += cpar * nx - half_gs * (x - sp * nx)
        dz += cpar * nz - half_gs * (z - sp * nz)
        dy += -half_gs * y
    return dx, dy, dz


@njit(cache=True)
def _integrate(
    s0,
    seg_t0,
    seg_t1,
    seg_d0,
    seg_slope,
    seg_dtmax,
    gamma,
    lam,
    inv_td,
    k_t,
    rel_tol,
    abs_tol,
    stride,
    quiet_tol,
    h_floor,
):
    """Adaptive RK45 over a chain of linear bias segments.

    Records every ``stride``-th accepted node plus all segment
    boundaries; trapezoid accumulators for the switching power and total
    power run over every accepted step regardless of stride.

    Returns (rec[:nrec], status, t, x, y, z, n_accept, n_reject, n_clip,
    e_switch_int, p_total_int).
    """
    nseg = seg_t1.shape[0]
    cap = 4096
    rec = np.empty((cap, REC_COLS))
    nrec = 0

    x, y, z = s0[0], s0[1], s0[2]
    t = seg_t0[0]
    n_accept = 0
    n_reject = 0
    n_clip = 0
    e_switch_int = 0.0
    p_total_int = 0.0
    status = STATUS_OK

    # previous-node powers for the trapezoid accumulators
    prev_psw = 0.0
    prev_ptot = 0.0

    for seg in range(nseg):
        t0 = seg_t0[seg]
        t1 = seg_t1[seg]
        d0 = seg_d0[seg]
        slope = seg_slope[seg]
        dtmax = seg_dtmax[seg]

        delta = d0 + slope * (t - t0)
        fx, fy, fz = bloch_rhs(delta, x, y, z, gamma, lam, inv_td, k_t)

        # node observables at the segment start (right-hand slope)
        bx = -gamma
        bz = 0.5 * (delta - lam * z)
        r = math.hypot(bx, bz)
        a = 0.5 * delta + 0.25 * lam * z * z
        p_work = 0.5 * slope * (1.0 + z)
        ux, uy, uz = bloch_rhs(delta, x, y, z, gamma, lam, 0.0, k_t)
        p_switch = -((fx - ux) * bx + (fz - uz) * bz)
        q34 = 0.5 * lam * z * fz
        prev_psw = p_switch
        prev_ptot = p_work - p_switch

        if seg == 0:
            rec[nrec, COL_T] = t
            rec[nrec, COL_DELTA] = delta
            rec[nrec, COL_X] = x
            rec[nrec, COL_Y] = y
            rec[nrec, COL_Z] = z
            rec[nrec, COL_E] = a + bx * x + bz * z
            rec[nrec, COL_E1] = a - r
            rec[nrec, COL_E2] = a + r
            rec[nrec, COL_PWORK] = p_work
            rec[nrec, COL_PSWITCH] = p_switch
            rec[nrec, COL_P3] = -q34
            rec[nrec, COL_P4] = q34
            nrec += 1

        h = dtmax / 125.0
        while t < t1:
            if h < h_floor:
                status = STATUS_STIFF
                break
            if h > dtmax:
                h = dtmax
            last = False
            if t + h >= t1:
                h = t1 - t
                last = True

            # Dormand-Prince stages; delta varies linearly inside the segment
            k1x, k1y, k1z = fx, fy, fz

            dlt = d0 + slope * (t + 0.2 * h - t0)
            k2x, k2y, k2z = bloch_rhs(
                dlt,
                x + h * 0.2 * k1x,
                y + h * 0.2 * k1y,
                z + h * 0.2 * k1z,
                gamma, lam, inv_td, k_t,
            )
            dlt = d0 + slope * (t + 0.3 * h - t0)
            k3x, k3y, k3z = bloch_rhs(
                dlt,
                x + h * (0.075 * k1x + 0.225 * k2x),
                y + h * (0.075 * k1y + 0.225 * k2y),
                z + h * (0.075 * k1z + 0.225 * k2z),
                gamma, lam, inv_td, k_t,
            )
            dlt = d0 + slope * (t + 0.8 * h - t0)
            k4x, k4y, k4z = bloch_rhs(
                dlt,
                x + h * (0.9777777777777777 * k1x - 3.7333333333333334 * k2x + 3.5555555555555554 * k3x),
                y + h * (0.9777777777777777 * k1y - 3.7333333333333334 * k2y + 3.5555555555555554 * k3y),
                z + h * (0.9777777777777777 * k1z - 3.7333333333333334 * k2z + 3.5555555555555554 * k3z),
                gamma, lam, inv_td, k_t,
            )
            dlt = d0 + slope * (t + 0.8888888888888888 * h - t0)
            k5x, k5y, k5z = bloch_rhs(
                dlt,
                x + h * (2.9525986892242035 * k1x - 11.595793324188385 * k2x + 9.822892851699436 * k3x - 0.2908093278463649 * k4x),
                y + h * (2.9525986892242035 * k1y - 11.595793324188385 * k2y + 9.822892851699436 * k3y - 0.2908093278463649 * k4y),
                z + h * (2.9525986892242035 * k1z - 11.595793324188385 * k2z + 9.822892851699436 * k3z - 0.2908093278463649 * k4z),
                gamma, lam, inv_td, k_t,
            )
            dlt = d0 + slope * (t + h - t0)
            k6x, k6y, k6z = bloch_rhs(
                dlt,
                x + h * (2.8462752525252526 * k1x - 10.757575757575758 * k2x + 8.906422717743473 * k3x + 0.2784090909090909 * k4x - 0.2735313036020583 * k5x),
                y + h * (2.8462752525252526 * k1y - 10.757575757575758 * k2y + 8.906422717743473 * k3y + 0.2784090909090909 * k4y - 0.2735313036020583 * k5y),
                z + h * (2.8462752525252526 * k1z - 10.757575757575758 * k2z + 8.906422717743473 * k3z + 0.2784090909090909 * k4z - 0.2735313036020583 * k5z),
                gamma, lam, inv_td, k_t,
            )
            # 5th order solution (b7 = 0)
            nx_ = x + h * (0.09114583333333333 * k1x + 0.44923629829290207 * k3x + 0.6510416666666666 * k4x - 0.322376179245283 * k5x + 0.13095238095238096 * k6x)
            ny_ = y + h * (0.09114583333333333 * k1y + 0.44923629829290207 * k3y + 0.6510416666666666 * k4y - 0.322376179245283 * k5y + 0.13095238095238096 * k6y)
            nz_ = z + h * (0.09114583333333333 * k1z + 0.44923629829290207 * k3z + 0.6510416666666666 * k4z - 0.322376179245283 * k5z + 0.13095238095238096 * k6z)
            k7x, k7y, k7z = bloch_rhs(dlt, nx_, ny_, nz_, gamma, lam, inv_td, k_t)

            # embedded error estimate (b - bhat)
            ex = h * (0.0012326388888888888 * k1x - 0.0042527702905061394 * k3x + 0.036979166666666667 * k4x - 0.05086379716981132 * k5x + 0.041904761904761904 * k6x - 0.025 * k7x)
            ey = h * (0.0012326388888888888 * k1y - 0.0042527702905061394 * k3y + 0.036979166666666667 * k4y - 0.05086379716981132 * k5y + 0.041904761904761904 * k6y - 0.025 * k7y)
            ez = h * (0.0012326388888888888 * k1z - 0.0042527702905061394 * k3z + 0.036979166666666667 * k4z - 0.05086379716981132 * k5z + 0.041904761904761904 * k6z - 0.025 * k7z)

            scx = abs_tol + rel_tol * max(abs(x), abs(nx_))
            scy = abs_tol + rel_tol * max(abs(y), abs(ny_))
            scz = abs_tol + rel_tol * max(abs(z), abs(nz_))
            err = math.sqrt(((ex / scx) ** 2 + (ey / scy) ** 2 + (ez / scz) ** 2) / 3.0)

            if err <= 1.0:
                t = t1 if last else t + h
                x, y, z = nx_, ny_, nz_
                n_accept += 1

                nrm = math.sqrt(x * x + y * y + z * z)
                if nrm > 1.0 + BLOCH_CLIP_TOL:
                    inv = 1.0 / nrm
                    x *= inv
                    y *= inv
                    z *= inv
                    n_clip += 1
                    fx, fy, fz = bloch_rhs(
                        d0 + slope * (t - t0), x, y, z, gamma, lam, inv_td, k_t
                    )
                else:
                    fx, fy, fz = k7x, k7y, k7z  # FSAL

                delta = d0 + slope * (t - t0)
                bx = -gamma
                bz = 0.5 * (delta - lam * z)
                r = math.hypot(bx, bz)
                a = 0.5 * delta + 0.25 * lam * z * z
                p_work = 0.5 * slope * (1.0 + z)
                ux, uy, uz = bloch_rhs(delta, x, y, z, gamma, lam, 0.0, k_t)
                p_switch = -((fx - ux) * bx + (fz - uz) * bz)
                q34 = 0.5 * lam * z * fz
                p_tot = p_work - p_switch
                e_switch_int += 0.5 * (prev_psw + p_switch) * h
                p_total_int += 0.5 * (prev_ptot + p_tot) * h
                prev_psw = p_switch
                prev_ptot = p_tot

                fnorm = math.sqrt(fx * fx + fy * fy + fz * fz)
                record = last or (n_accept % stride == 0)
                if quiet_tol > 0.0 and fnorm < quiet_tol:
                    status = STATUS_QUIET
                    record = True
                if record:
                    if nrec == cap:
                        cap *= 2
                        grown = np.empty((cap, REC_COLS))
                        grown[:nrec] = rec[:nrec]
                        rec = grown
                    rec[nrec, COL_T] = t
                    rec[nrec, COL_DELTA] = delta
                    rec[nrec, COL_X] = x
                    rec[nrec, COL_Y] = y
                    rec[nrec, COL_Z] = z
                    rec[nrec, COL_E] = a + bx * x + bz * z
                    rec[nrec, COL_E1] = a - r
                    rec[nrec, COL_E2] = a + r
                    rec[nrec, COL_PWORK] = p_work
                    rec[nrec, COL_PSWITCH] = p_switch
                    rec[nrec, COL_P3] = -q34
                    rec[nrec, COL_P4] = q34
                    nrec += 1
                if status == STATUS_QUIET:
                    break

                if err < 1e-300:
                    fac = 5.0
                else:
                    fac = 0.9 * err ** -0.2
                    if fac > 5.0:
                        fac = 5.0
                    elif fac < 0.2:
                        fac = 0.2
                h *= fac
            else:
                fac = 0.9 * err ** -0.2
                if fac < 0.2:
                    fac = 0.2
                h *= fac
                n_reject += 1

        if status != STATUS_OK:
            break
        # crossing into the next segment: the slope changes, so reseed the
        # work-power trapezoid with the right-hand slope at the same node
        if seg + 1 < nseg:
            p_work_next = 0.5 * seg_slope[seg + 1] * (1.0 + z)
            prev_ptot = p_work_next - prev_psw

    return (
        rec[:nrec],
        status,
        t,
        x,
        y,
        z,
        n_accept,
        n_reject,
        n_clip,
        e_switch_int,
        p_total_int,
    )
