"""Adaptive Gauss-Legendre quadrature of y^(k-2) |f(x+iy)|^2.

The region between the unit-circle arc and the horizontal line y = Y
splits into a lens (arc <= y <= 1, parameterized by x so the boundary
stays smooth) and a rectangle (1 <= y <= Y, pre-split on a geometric
y-ladder).  Both are covered by tensor panels integrated at a base order
and at the doubled order; the difference is the error estimate, and
panels are split dyadically until the summed estimates certify the
requested relative tolerance.

Series evaluations share work along the tensor direction that keeps one
coordinate fixed: rectangle rows reuse the exponential decay factors at
fixed y, lens rows reuse the cosine/sine recurrences at fixed x.  The
x-mirror symmetry of |f|^2 halves the domain.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import QuadratureStall

_QUAD_GUARD = 40
# Relative floor (in bits) below which series terms are dropped inside the
# quadrature; fixed independently of the working precision so runs at
# different precisions evaluate identical sums.
TERM_CUT_BITS = 96

_gl_cache = {}


def gauss_legendre(n: int, prec: int):
    """Nodes and weights on [-1, 1] by Newton iteration on P_n."""
    key = (n, prec)
    if key in _gl_cache:
        return _gl_cache[key]
    with mp.workprec(prec + 24):
        half_nodes = []
        half_weights = []
        tol = mpf(2) ** (-(prec + 8))
        for i in range((n + 1) // 2):
            x = mp.cos(mp.pi * (i + mpf(3) / 4) / (n + mpf(1) / 2))
            for _ in range(100):
                p0, p1 = mpf(1), x
                for j in range(2, n + 1):
                    p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < tol:
                    break
            p0, p1 = mpf(1), x
            for j in range(2, n + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            dp = n * (x * p1 - p0) / (x * x - 1)
            w = 2 / ((1 - x * x) * dp * dp)
            half_nodes.append(x)
            half_weights.append(w)
        xs, ws = [], []
        for i in range(len(half_nodes) - 1, -1, -1):
            xs.append(-half_nodes[i])
            ws.append(half_weights[i])
        if n % 2:
            xs.pop()
            ws.pop()
        for i in range(len(half_nodes)):
            xs.append(half_nodes[i])
            ws.append(half_weights[i])
    result = (tuple(xs), tuple(ws))
    _gl_cache[key] = result
    return result


@dataclass
class QuadOutcome:
    value: object
    error_estimate: object
    panels: int
    evaluations: int
    passes: int


class _Evals:
    def __init__(self):
        self.count = 0


def _trim_terms(a_coeffs, y_floor):
    """Largest index still relevant at the lowest row of the region."""
    decay = mp.exp(-2 * mp.pi * y_floor)
    power = mpf(1)
    mags = []
    tmax = mpf(0)
    for a in a_coeffs:
        power *= decay
        t = abs(a) * power
        mags.append(t)
        if t > tmax:
            tmax = t
    if tmax == 0:
        return 1
    cutoff = tmax * mpf(2) ** (-TERM_CUT_BITS)
    nkeep = len(mags)
    while nkeep > 1 and mags[nkeep - 1] < cutoff:
        nkeep -= 1
    return nkeep


def _eval_rect_panel(a, k, panel, ny, nx, prec, evals):
    """Tensor rule on a y >= 1 panel: y rows share the decay factors."""
    _, y0, y1, t0, t1 = panel
    ynodes, yweights = gauss_legendre(ny, prec)
    xnodes, xweights = gauss_legendre(nx, prec)
    hy, cy = (y1 - y0) / 2, (y0 + y1) / 2
    ht, ct = (t1 - t0) / 2, (t0 + t1) / 2
    total = mpf(0)
    nterms = len(a)
    for yi, wy in zip(ynodes, yweights):
        y = cy + hy * yi
        decay = mp.exp(-2 * mp.pi * y)
        terms = []
        power = mpf(1)
        tmax = mpf(0)
        for n in range(nterms):
            power *= decay
            t = a[n] * power
            terms.append(t)
            if abs(t) > tmax:
                tmax = abs(t)
        if tmax == 0:
            continue
        cutoff = tmax * mpf(2) ** (-TERM_CUT_BITS)
        nkeep = len(terms)
        while nkeep > 1 and abs(terms[nkeep - 1]) < cutoff:
            nkeep -= 1
        scaled = [t / tmax for t in terms[:nkeep]]
        logpref = 2 * mp.log(tmax) + (k - 2) * mp.log(y)
        pref = mp.exp(logpref)
        acc = mpf(0)
        for xi, wx in zip(xnodes, xweights):
            x = (ct + ht * xi) / 2  # t in [0,1] maps to x in [0, 1/2]
            c1 = mp.cos(2 * mp.pi * x)
            s1 = mp.sin(2 * mp.pi * x)
            two_c1 = 2 * c1
            re = scaled[0] * c1
            im = scaled[0] * s1
            cprev, cc = mpf(1), c1
            sprev, ss = mpf(0), s1
            for t in scaled[1:]:
                cprev, cc = cc, two_c1 * cc - cprev
                sprev, ss = ss, two_c1 * ss - sprev
                if t:
                    re += t * cc
                    im += t * ss
            acc += wx * (re * re + im * im)
            evals.count += 1
        total += wy * acc * pref
    # hy for y, ht/2 for x = t/2, times 2 for the x-mirror symmetry
    return total * hy * ht


def _eval_lens_panel(a, k, panel, ny, nx, prec, evals):
    """Tensor rule on the arc <= y <= 1 lens: x rows share cos/sin tables."""
    _, u0, u1, t0, t1 = panel
    unodes, uweights = gauss_legendre(ny, prec)
    xnodes, xweights = gauss_legendre(nx, prec)
    hu, cu = (u1 - u0) / 2, (u0 + u1) / 2
    ht, ct = (t1 - t0) / 2, (t0 + t1) / 2
    total = mpf(0)
    nterms = len(a)
    for xi, wx in zip(xnodes, xweights):
        x = (ct + ht * xi) / 2  # x in [0, 1/2]
        ylo = mp.sqrt(1 - x * x)
        span = 1 - ylo
        if span <= 0:
            continue
        c1 = mp.cos(2 * mp.pi * x)
        s1 = mp.sin(2 * mp.pi * x)
        two_c1 = 2 * c1
        cos_t = [c1]
        sin_t = [s1]
        cprev, cc = mpf(1), c1
        sprev, ss = mpf(0), s1
        for _ in range(1, nterms):
            cprev, cc = cc, two_c1 * cc - cprev
            sprev, ss = ss, two_c1 * ss - sprev
            cos_t.append(cc)
            sin_t.append(ss)
        acc = mpf(0)
        for ui, wu in zip(unodes, uweights):
            u = cu + hu * ui
            y = ylo + span * u
            decay = mp.exp(-2 * mp.pi * y)
            power = mpf(1)
            re = mpf(0)
            im = mpf(0)
            for n in range(nterms):
                power *= decay
                t = a[n] * power
                if t:
                    re += t * cos_t[n]
                    im += t * sin_t[n]
            acc += wu * (re * re + im * im) * y ** (k - 2)
            evals.count += 1
        total += wx * acc * span
    # hu for u, ht/2 for x, times 2 for the x-mirror symmetry
    return total * hu * ht


def slab_norm_quadrature(k, a_coeffs, y_top, quad_tol, prec):
    """Integral of y^(k-2)|f|^2 over the slab arc <= y <= y_top, |x| <= 1/2."""
    wp = prec + _QUAD_GUARD
    with mp.workprec(wp):
        y_top = mpf(y_top)
        arc = mp.sqrt(3) / 2
        nglob = _trim_terms([mpf(c) for c in a_coeffs], arc)
        a = [mpf(c) for c in a_coeffs[:nglob]]
        evals = _Evals()

        panels = [("lens", mpf(0), mpf(1), mpf(0), mpf(1))]
        if y_top > 1:
            lo = mpf(1)
            width = mpf(1) / 4
            while lo < y_top:
                hi = min(lo + width, y_top)
                panels.append(("rect", lo, hi, mpf(0), mpf(1)))
                lo = hi
                width *= 2

        ny, nx = 8, 16
        results = {}

        def evaluate(panel):
            if panel[0] == "lens":
                lo_v = _eval_lens_panel(a, k, panel, ny, nx, wp, evals)
                hi_v = _eval_lens_panel(a, k, panel, 2 * ny, 2 * nx, wp, evals)
            else:
                lo_v = _eval_rect_panel(a, k, panel, ny, nx, wp, evals)
                hi_v = _eval_rect_panel(a, k, panel, 2 * ny, 2 * nx, wp, evals)
            results[panel] = (hi_v, abs(hi_v - lo_v))

        for p in panels:
            evaluate(p)

        max_passes = 12
        max_panels = 512
        last_err = None
        stuck = 0
        for pass_no in range(max_passes + 1):
            total = mpf(0)
            err = mpf(0)
            for p in panels:
                total += results[p][0]
                err += results[p][1]
            if err <= abs(total) * mpf(quad_tol):
                return QuadOutcome(total, err, len(panels), evals.count, pass_no)
            if pass_no == max_passes or len(panels) > max_panels:
                break
            if last_err is not None:
                stuck = stuck + 1 if err > last_err / 2 else 0
                if stuck >= 3:
                    raise QuadratureStall(
                        f"estimate stuck near {mp.nstr(err, 5)} after {pass_no} passes"
                    )
            last_err = err
            budget = abs(total) * mpf(quad_tol) / (4 * len(panels))
            new_panels = []
            for p in panels:
                if results[p][1] > budget:
                    kind, y0, y1, t0, t1 = p
                    ym, tm = (y0 + y1) / 2, (t0 + t1) / 2
                    children = [
                        (kind, y0, ym, t0, tm),
                        (kind, y0, ym, tm, t1),
                        (kind, ym, y1, t0, tm),
                        (kind, ym, y1, tm, t1),
                    ]
                    del results[p]
                    for c in children:
                        evaluate(c)
                        new_panels.append(c)
                else:
                    new_panels.append(p)
            panels = new_panels
        raise QuadratureStall(
            f"quadrature failed to certify {quad_tol} after {max_passes} passes"
        )
