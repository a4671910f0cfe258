# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled node-level attention kernel; mirrors node_kernel_py exactly."""

from libc.math cimport exp, expm1

import numpy as np


def node_forward(double[::1] h_i, double[:, ::1] H, double[:, ::1] W,
                 double[::1] a, double slope=0.2):
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t D = H.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, ai, smax, ssum, v

    alpha_arr = np.empty(n)
    e_arr = np.empty(n)
    m_arr = np.empty(D)
    z_arr = np.empty(D)
    ui_arr = np.empty(D)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] e = e_arr
    cdef double[::1] m = m_arr
    cdef double[::1] z = z_arr
    cdef double[::1] u_i = ui_arr

    for i in range(D):
        acc = 0.0
        for k in range(D):
            acc += W[i, k] * h_i[k]
        u_i[i] = acc
    ai = 0.0
    for i in range(D):
        ai += a[i] * u_i[i]

    for j in range(n):
        acc = ai
        for i in range(D):
            v = 0.0
            for k in range(D):
                v += W[i, k] * H[j, k]
            acc += a[D + i] * v
        e[j] = acc

    smax = -1e308
    for j in range(n):
        v = e[j] if e[j] > 0 else slope * e[j]
        alpha[j] = v
        if v > smax:
            smax = v
    ssum = 0.0
    for j in range(n):
        alpha[j] = exp(alpha[j] - smax)
        ssum += alpha[j]
    for j in range(n):
        alpha[j] /= ssum

    for i in range(D):
        acc = 0.0
        for j in range(n):
            acc += alpha[j] * H[j, i]
        m[i] = acc
        z[i] = acc if acc > 0 else expm1(acc)
    return alpha_arr, e_arr, m_arr, z_arr


def node_backward(double[::1] h_i, double[:, ::1] H, double[:, ::1] W,
                  double[::1] a, double[::1] alpha, double[::1] e,
                  double[::1] m, double[::1] dz, double slope=0.2):
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t D = H.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, dot, sum_de, v

    dW_arr = np.zeros((D, D))
    da_arr = np.zeros(2 * D)
    dhi_arr = np.zeros(D)
    dH_arr = np.zeros((n, D))
    dm_arr = np.empty(D)
    de_arr = np.empty(n)
    dui_arr = np.empty(D)
    wta2_arr = np.empty(D)
    ui_arr = np.empty(D)
    cdef double[:, ::1] dW = dW_arr
    cdef double[::1] da = da_arr
    cdef double[::1] dh_i = dhi_arr
    cdef double[:, ::1] dH = dH_arr
    cdef double[::1] dm = dm_arr
    cdef double[::1] de = de_arr
    cdef double[::1] du_i = dui_arr
    cdef double[::1] wta2 = wta2_arr
    cdef double[::1] u_i = ui_arr

    for i in range(D):
        dm[i] = dz[i] * (1.0 if m[i] > 0 else exp(m[i]))

    # softmax + leaky-relu backward over the logits
    dot = 0.0
    for j in range(n):
        acc = 0.0
        for i in range(D):
            acc += H[j, i] * dm[i]
        de[j] = acc  # reuse as dalpha for now
        dot += alpha[j] * acc
    sum_de = 0.0
    for j in range(n):
        v = alpha[j] * (de[j] - dot)
        de[j] = v * (1.0 if e[j] > 0 else slope)
        sum_de += de[j]

    for i in range(D):
        acc = 0.0
        for k in range(D):
            acc += W[i, k] * h_i[k]
        u_i[i] = acc
        da[i] = sum_de * acc
        du_i[i] = sum_de * a[i]
        acc = 0.0
        for k in range(D):
            acc += W[k, i] * a[D + k]
        wta2[i] = acc

    for j in range(n):
        for i in range(D):
            v = 0.0
            for k in range(D):
                v += W[i, k] * H[j, k]
            da[D + i] += de[j] * v
        for i in range(D):
            dH[j, i] = alpha[j] * dm[i] + de[j] * wta2[i]

    for i in range(D):
        for k in range(D):
            acc = du_i[i] * h_i[k]
            for j in range(n):
                acc += de[j] * a[D + i] * H[j, k]
            dW[i, k] = acc
        acc = 0.0
        for k in range(D):
            acc += W[k, i] * du_i[k]
        dh_i[i] = acc
    return dW_arr, da_arr, dhi_arr, dH_arr
