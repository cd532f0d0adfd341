"""Pure-Python reference implementation of the hot loops.

Mirrors ``_ckernels.pyx`` statement for statement so the two can be
compared for parity and speed.  Callers allocate ``out``.
"""
import math

MAX_POLY = 16


def _clip(poly, axis, bound, keep_greater):
    res = []
    m = len(poly)
    for i in range(m):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % m]
        pv = px if axis == 0 else py
        qv = qx if axis == 0 else qy
        p_in = pv >= bound if keep_greater else pv <= bound
        q_in = qv >= bound if keep_greater else qv <= bound
        if p_in:
            res.append((px, py))
        if p_in != q_in:
            t = (bound - pv) / (qv - pv)
            if axis == 0:
                res.append((bound, py + t * (qy - py)))
            else:
                res.append((px + t * (qx - px), bound))
    return res


def bump_gradient_integrals(tris, box, degree, nodes, weights, out):
    """out[k] = integral over tris[k] of the gradient of the bump on ``box``.

    The bump is prod_i ((x_i - a_i)(b_i - x_i) / r_i^2)^degree inside
    box = (a1, b1, a2, b2) and zero outside.  Each triangle is clipped to
    the box and integrated with a collapsed tensor Gauss rule on [0, 1].
    """
    a1, b1, a2, b2 = box[0], box[1], box[2], box[3]
    r1 = 0.25 * (b1 - a1) ** 2
    r2 = 0.25 * (b2 - a2) ** 2
    d = degree
    m = len(nodes)
    for k in range(len(tris)):
        poly = [(tris[k][0][0], tris[k][0][1]), (tris[k][1][0], tris[k][1][1]), (tris[k][2][0], tris[k][2][1])]
        poly = _clip(poly, 0, a1, True)
        if len(poly) >= 3:
            poly = _clip(poly, 0, b1, False)
        if len(poly) >= 3:
            poly = _clip(poly, 1, a2, True)
        if len(poly) >= 3:
            poly = _clip(poly, 1, b2, False)
        gx = 0.0
        gy = 0.0
        if len(poly) >= 3:
            x0, y0 = poly[0]
            for j in range(1, len(poly) - 1):
                e1x = poly[j][0] - x0
                e1y = poly[j][1] - y0
                e2x = poly[j + 1][0] - poly[j][0]
                e2y = poly[j + 1][1] - poly[j][1]
                jac = abs(e1x * e2y - e1y * e2x)
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
                        q1 = t1**d
                        q2 = t2**d
                        dq1 = d * t1 ** (d - 1) * (a1 + b1 - 2.0 * x) / r1
                        dq2 = d * t2 ** (d - 1) * (a2 + b2 - 2.0 * y) / r2
                        w = wu * weights[iv]
                        gx += w * dq1 * q2
                        gy += w * q1 * dq2
        out[k][0] = gx
        out[k][1] = gy


def singular_values_2x2(grads, out):
    """Singular values (descending) of each 2x2 matrix via its conformal split."""
    for k in range(len(grads)):
        a = grads[k][0][0]
        b = grads[k][0][1]
        c = grads[k][1][0]
        d = grads[k][1][1]
        p = 0.5 * math.hypot(a + d, c - b)
        q = 0.5 * math.hypot(a - d, b + c)
        out[k][0] = p + q
        out[k][1] = abs(p - q)
