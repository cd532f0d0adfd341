# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``."""
from libc.math cimport fabs, hypot, pow


cdef int _clip(double[:, ::1] src, int n, double[:, ::1] dst, int axis, double bound, bint keep_greater) nogil:
    cdef int i, m = 0
    cdef double pv, qv, t
    cdef bint p_in, q_in
    for i in range(n):
        pv = src[i, axis]
        qv = src[(i + 1) % n, axis]
        if keep_greater:
            p_in = pv >= bound
            q_in = qv >= bound
        else:
            p_in = pv <= bound
            q_in = qv <= bound
        if p_in:
            dst[m, 0] = src[i, 0]
            dst[m, 1] = src[i, 1]
            m += 1
        if p_in != q_in:
            t = (bound - pv) / (qv - pv)
            if axis == 0:
                dst[m, 0] = bound
                dst[m, 1] = src[i, 1] + t * (src[(i + 1) % n, 1] - src[i, 1])
            else:
                dst[m, 0] = src[i, 0] + t * (src[(i + 1) % n, 0] - src[i, 0])
                dst[m, 1] = bound
            m += 1
    return m


def bump_gradient_integrals(const double[:, :, ::1] tris, const double[::1] box, int degree,
                            const double[::1] nodes, const double[::1] weights, double[:, ::1] out):
    cdef double a1 = box[0], b1 = box[1], a2 = box[2], b2 = box[3]
    cdef double r1 = 0.25 * (b1 - a1) * (b1 - a1)
    cdef double r2 = 0.25 * (b2 - a2) * (b2 - a2)
    cdef int d = degree, m = nodes.shape[0]
    cdef double bufa[16][2]
    cdef double bufb[16][2]
    cdef double[:, ::1] pa = bufa
    cdef double[:, ::1] pb = bufb
    cdef Py_ssize_t k
    cdef int n, j, iu, iv
    cdef double x0, y0, e1x, e1y, e2x, e2y, jac, u, v, wu, w, x, y, t1, t2, q1, q2, dq1, dq2, gx, gy
    with nogil:
        for k in range(tris.shape[0]):
            for j in range(3):
                pa[j, 0] = tris[k, j, 0]
                pa[j, 1] = tris[k, j, 1]
            n = _clip(pa, 3, pb, 0, a1, True)
            if n >= 3:
                n = _clip(pb, n, pa, 0, b1, False)
                if n >= 3:
                    n = _clip(pa, n, pb, 1, a2, True)
                    if n >= 3:
                        n = _clip(pb, n, pa, 1, b2, False)
            gx = 0.0
            gy = 0.0
            if n >= 3:
                x0 = pa[0, 0]
                y0 = pa[0, 1]
                for j in range(1, n - 1):
                    e1x = pa[j, 0] - x0
                    e1y = pa[j, 1] - y0
                    e2x = pa[j + 1, 0] - pa[j, 0]
                    e2y = pa[j + 1, 1] - pa[j, 1]
                    jac = fabs(e1x * e2y - e1y * e2x)
                    if jac == 0.0:
                        continue
                    for iu in range(m):
                        u = nodes[iu]
                        wu = weights[iu] * u * jac
                        for iv in range(m):
                            v = nodes[iv]
                            x = x0 + u * (e1x + v * e2x)
                            y = y0 + u * (e1y + v * e2y)
                            t1 = (x - a1) * (b1 - x) / r1
                            t2 = (y - a2) * (b2 - y) / r2
                            q1 = pow(t1, d)
                            q2 = pow(t2, d)
                            dq1 = d * pow(t1, d - 1) * (a1 + b1 - 2.0 * x) / r1
                            dq2 = d * pow(t2, d - 1) * (a2 + b2 - 2.0 * y) / r2
                            w = wu * weights[iv]
                            gx += w * dq1 * q2
                            gy += w * q1 * dq2
            out[k, 0] = gx
            out[k, 1] = gy


def singular_values_2x2(const double[:, :, ::1] grads, double[:, ::1] out):
    cdef Py_ssize_t k
    cdef double a, b, c, d, p, q
    with nogil:
        for k in range(grads.shape[0]):
            a = grads[k, 0, 0]
            b = grads[k, 0, 1]
            c = grads[k, 1, 0]
            d = grads[k, 1, 1]
            p = 0.5 * hypot(a + d, c - b)
            q = 0.5 * hypot(a - d, b + c)
            out[k, 0] = p + q
            out[k, 1] = fabs(p - q)
