"""Numpy implementations of the compiled kernels, used when the extension is unavailable."""
import numpy as np

AI0 = 0.355028053887817239260
AIP0 = 0.258819403792806798405
SERIES_LO = -7.0
SERIES_HI = 5.0


def _series(x):
    x3 = x**3
    t = np.ones_like(x)
    s = x.copy()
    p = x * x / 2.0
    q = np.ones_like(x)
    f, g, fp, gp = t.copy(), s.copy(), p.copy(), q.copy()
    for k in range(1, 200):
        t = t * x3 / ((3.0 * k - 1.0) * (3.0 * k))
        s = s * x3 / ((3.0 * k) * (3.0 * k + 1.0))
        q = q * x3 / ((3.0 * k) * (3.0 * k - 2.0))
        f += t
        g += s
        gp += q
        if k >= 2:
            p = p * x3 / ((3.0 * k - 3.0) * (3.0 * k - 1.0))
            fp += p
        small = np.abs(t) + np.abs(s) + np.abs(q) + np.abs(p) < 1e-18 * (np.abs(f) + np.abs(g) + 1e-300)
        if np.all(small):
            break
    return AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp


def _coefficients(zeta, nmax=60):
    """Asymptotic u_k, v_k divided by zeta^k, truncated at the smallest term."""
    u = 1.0
    terms_u, terms_v = [np.ones_like(zeta)], [np.ones_like(zeta)]
    zp = np.ones_like(zeta)
    alive = np.ones(zeta.shape, dtype=bool)
    last = np.full(zeta.shape, np.inf)
    for k in range(1, nmax):
        u = u * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k)
        v = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u
        zp = zp * zeta
        term = np.abs(u / zp)
        alive &= (term <= last) & (term >= 1e-17)
        last = term
        terms_u.append(np.where(alive, u / zp, 0.0))
        terms_v.append(np.where(alive, v / zp, 0.0))
        if not alive.any():
            break
    return terms_u, terms_v


def _asym_pos(x):
    zeta = 2.0 / 3.0 * x**1.5
    tu, tv = _coefficients(zeta)
    sgn = np.array([(-1.0) ** k for k in range(len(tu))])
    su = sum(s * t for s, t in zip(sgn, tu))
    sv = sum(s * t for s, t in zip(sgn, tv))
    e = np.exp(-zeta)
    x4 = x**0.25
    return e / (2.0 * np.sqrt(np.pi) * x4) * su, -x4 * e / (2.0 * np.sqrt(np.pi)) * sv


def _asym_neg(x):
    y = -x
    zeta = 2.0 / 3.0 * y**1.5
    tu, tv = _coefficients(zeta)
    pu = np.zeros_like(y)
    qu = np.zeros_like(y)
    pv = np.zeros_like(y)
    qv = np.zeros_like(y)
    for k, (a, b) in enumerate(zip(tu, tv)):
        sgn = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2 == 0:
            pu += sgn * a
            pv += sgn * b
        else:
            qu += sgn * a
            qv += sgn * b
    ph = zeta + np.pi / 4.0
    y4 = y**0.25
    ai = (np.sin(ph) * pu - np.cos(ph) * qu) / (np.sqrt(np.pi) * y4)
    aip = -y4 * (np.cos(ph) * pv + np.sin(ph) * qv) / np.sqrt(np.pi)
    return ai, aip


def airy_ai(x):
    """Return (Ai(x), Ai'(x)) for a real array."""
    xa = np.asarray(x, dtype=float)
    flat = xa.ravel()
    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    for mask, fn in (
        (flat > SERIES_HI, _asym_pos),
        (flat < SERIES_LO, _asym_neg),
        ((flat >= SERIES_LO) & (flat <= SERIES_HI), _series),
    ):
        if mask.any():
            ai[mask], aip[mask] = fn(flat[mask])
    return ai.reshape(xa.shape), aip.reshape(xa.shape)


def causal_convolve(w, h):
    """out[n] = sum_{j<=n} w[j] h[n-j] for n < len(h)."""
    h = np.asarray(h, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.convolve(w, h)[: h.shape[0]]
