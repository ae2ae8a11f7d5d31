# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grouped attention kernels.

Same contract as ``attention_numpy``: queries ``(G, Sq, Dh)``, keys and
values ``(G, Sk, Dh)``, scores scaled by ``1/sqrt(Dh)`` with max-subtracted
softmax. float64 only; inputs are made C-contiguous on entry.
"""

import numpy as np

from libc.math cimport exp, sqrt

NAME = "cython"


cdef void _forward_impl(double[:, :, ::1] q, double[:, :, ::1] k,
                        double[:, :, ::1] v, double[:, :, ::1] out,
                        double[:, :, ::1] attn) noexcept nogil:
    cdef Py_ssize_t G = q.shape[0], Sq = q.shape[1], Dh = q.shape[2]
    cdef Py_ssize_t Sk = k.shape[1]
    cdef Py_ssize_t g, i, j, d
    cdef double scale = 1.0 / sqrt(<double> Dh)
    cdef double s, m, z, acc
    for g in range(G):
        for i in range(Sq):
            m = -1e308
            for j in range(Sk):
                s = 0.0
                for d in range(Dh):
                    s += q[g, i, d] * k[g, j, d]
                s *= scale
                attn[g, i, j] = s
                if s > m:
                    m = s
            z = 0.0
            for j in range(Sk):
                s = exp(attn[g, i, j] - m)
                attn[g, i, j] = s
                z += s
            for j in range(Sk):
                attn[g, i, j] /= z
            for d in range(Dh):
                acc = 0.0
                for j in range(Sk):
                    acc += attn[g, i, j] * v[g, j, d]
                out[g, i, d] = acc


cdef void _backward_impl(double[:, :, ::1] d_out, double[:, :, ::1] attn,
                         double[:, :, ::1] q, double[:, :, ::1] k,
                         double[:, :, ::1] v, double[:, :, ::1] dq,
                         double[:, :, ::1] dk, double[:, :, ::1] dv,
                         double[:, ::1] d_scores) noexcept nogil:
    cdef Py_ssize_t G = q.shape[0], Sq = q.shape[1], Dh = q.shape[2]
    cdef Py_ssize_t Sk = k.shape[1]
    cdef Py_ssize_t g, i, j, d
    cdef double scale = 1.0 / sqrt(<double> Dh)
    cdef double da, row_dot, acc
    for g in range(G):
        for i in range(Sq):
            # dA = d_out @ V^T, then softmax backward into d_scores
            row_dot = 0.0
            for j in range(Sk):
                da = 0.0
                for d in range(Dh):
                    da += d_out[g, i, d] * v[g, j, d]
                d_scores[i, j] = da
                row_dot += da * attn[g, i, j]
            for j in range(Sk):
                d_scores[i, j] = attn[g, i, j] * (d_scores[i, j] - row_dot)
        for i in range(Sq):
            for d in range(Dh):
                acc = 0.0
                for j in range(Sk):
                    acc += d_scores[i, j] * k[g, j, d]
                dq[g, i, d] = acc * scale
        for j in range(Sk):
            for d in range(Dh):
                acc = 0.0
                for i in range(Sq):
                    acc += d_scores[i, j] * q[g, i, d]
                dk[g, j, d] = acc * scale
                acc = 0.0
                for i in range(Sq):
                    acc += attn[g, i, j] * d_out[g, i, d]
                dv[g, j, d] = acc


def attn_forward(q, k, v):
    """Scaled dot-product attention; returns (out, attn_weights)."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    G, Sq, Dh = q.shape
    Sk = k.shape[1]
    out = np.empty((G, Sq, Dh))
    attn = np.empty((G, Sq, Sk))
    _forward_impl(q, k, v, out, attn)
    return out, attn


def attn_backward(d_out, attn, q, k, v):
    """Gradients of attn_forward; returns (dq, dk, dv)."""
    d_out = np.ascontiguousarray(d_out, dtype=np.float64)
    attn = np.ascontiguousarray(attn, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    G, Sq, Dh = q.shape
    Sk = k.shape[1]
    dq = np.empty((G, Sq, Dh))
    dk = np.empty((G, Sk, Dh))
    dv = np.empty((G, Sk, Dh))
    scratch = np.empty((Sq, Sk))
    _backward_impl(d_out, attn, q, k, v, dq, dk, dv, scratch)
    return dq, dk, dv
