"""Concave maximization of ``H(p) - S(sum_n p_n |psi_n><psi_n|)`` over the simplex.

The objective only sees the Gram matrix ``G`` of the states ``psi_n``.  It is
concave on the simplex, so any stationary point is the global optimum and the
Frank-Wolfe duality gap certifies suboptimality.

Strategy: exponentiated-gradient (mirror) ascent, whose multiplicative update
keeps every weight positive, with the energy cap ``sum_n n p_n <= N`` enforced
by a KL projection whose multiplier is found by a bracketing root search.
Once the iterate is near the optimum a Newton step on the active affine set
finishes the job; mirror ascent alone converges only linearly on the flat
large-noise landscapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

LN2 = math.log(2.0)
P_FLOOR = 1e-300
LOG_STEP_MAX = 4.0
STALL_WINDOW = 200
P_DROP = 1e-30


def _xlog2x(lam: np.ndarray) -> np.ndarray:
    pos = lam > 0
    out = np.zeros_like(lam)
    out[pos] = lam[pos] * np.log2(lam[pos])
    return out


def orthant_objective(p, G) -> float:
    """``-sum p log2 p + Tr M log2 M`` with ``M = sqrt(p) G sqrt(p)``, for any ``p >= 0``.

    On the simplex this is the capacity objective; off it, it is the smooth
    extension whose partial derivatives :func:`objective_gradient` returns.
    """
    p = np.asarray(p, dtype=float)
    s = np.sqrt(p)
    M = s[:, None] * G * s[None, :]
    lam = np.linalg.eigvalsh(M)
    return float(-np.sum(_xlog2x(p)) + np.sum(_xlog2x(lam)))


def _mixture_gradient(p: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``<psi_n| log2 rho |psi_n> = (M log2 M)_nn / p_n``."""
    s = np.sqrt(p)
    M = s[:, None] * G * s[None, :]
    lam, V = np.linalg.eigh(M)
    diag = (np.abs(V) ** 2) @ _xlog2x(lam)
    return diag / p


def objective_gradient(p, G) -> np.ndarray:
    """Partial derivatives of :func:`orthant_objective`: ``-log2 p_n + <psi_n|log2 rho|psi_n>``."""
    p = np.maximum(np.asarray(p, dtype=float), P_FLOOR)
    return -np.log2(p) + _mixture_gradient(p, G)


def richardson_gradient(f, p, h: float = 1e-6) -> np.ndarray:
    """Central differences at steps ``h`` and ``h/2`` combined by Richardson extrapolation."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = 1.0
        d1 = (f(p + h * e) - f(p - h * e)) / (2 * h)
        d2 = (f(p + 0.5 * h * e) - f(p - 0.5 * h * e)) / h
        out[i] = (4 * d2 - d1) / 3
    return out


def _divided_kernel(lam: np.ndarray) -> np.ndarray:
    """``l_i l_j (ln l_i - ln l_j) / (l_i - l_j)``, equal to ``l_i`` on the diagonal."""
    lam = np.clip(lam, 0.0, None)
    li, lj = lam[:, None], lam[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = li / lj - 1.0
        ratio = np.where(np.abs(x) < 1e-8, 1.0 + 0.5 * x, (1.0 + x) * np.log1p(x) / x)
        K = lj * ratio
    K[(li == 0) | (lj == 0)] = 0.0
    return np.nan_to_num(K, nan=0.0, posinf=0.0, neginf=0.0)


def scaled_hessian(p, G) -> np.ndarray:
    """``sqrt(p_m p_n) d^2 f / dp_m dp_n`` from divided differences of the log.

    The scaling keeps the entries bounded when some weights are tiny.
    """
    p = np.maximum(np.asarray(p, dtype=float), P_FLOOR)
    s = np.sqrt(p)
    M = s[:, None] * G * s[None, :]
    lam, V = np.linalg.eigh(M)
    K = _divided_kernel(lam)
    # B[m, n, i] = V[m, i] conj(V[n, i])
    B = V[:, None, :] * V.conj()[None, :, :]
    H = np.einsum("mni,ij,mnj->mn", B, K, B.conj()).real / np.outer(s, s)
    H[np.diag_indices(p.size)] -= 1.0
    return H / LN2


def objective_hessian(p, G) -> np.ndarray:
    """Hessian of :func:`orthant_objective` (unscaled)."""
    s = np.sqrt(np.maximum(np.asarray(p, dtype=float), P_FLOOR))
    return scaled_hessian(p, G) / np.outer(s, s)


def frank_wolfe_gap(g: np.ndarray, p: np.ndarray, energy_cap: float | None, levels=None) -> float:
    """``max_q g.(q - p)`` over the feasible set; bounds ``f* - f(p)`` for concave ``f``.

    ``levels`` are the photon numbers of the coordinates (default ``0 .. d-1``).
    """
    base = float(g @ p)
    if energy_cap is None:
        return float(g.max()) - base
    n = np.arange(g.size, dtype=float) if levels is None else np.asarray(levels, dtype=float)
    below = n <= energy_cap
    best = float(g[below].max()) if below.any() else -np.inf
    lo = np.flatnonzero(n < energy_cap)
    hi = np.flatnonzero(n > energy_cap)
    if lo.size and hi.size:
        # vertices on the face sum n q_n = N mix one level below N with one above it
        w = (n[hi][None, :] - energy_cap) / (n[hi][None, :] - n[lo][:, None])
        vals = w * g[lo][:, None] + (1 - w) * g[hi][None, :]
        best = max(best, float(vals.max()))
    return best - base


def energy_projection(q: np.ndarray, energy_cap: float | None, levels=None) -> tuple[np.ndarray, float]:
    """KL projection of ``q`` onto ``{sum n p_n <= N}``: ``p ∝ q exp(-mu n)``.

    Returns the projected weights and the multiplier ``mu >= 0``.
    """
    q = np.asarray(q, dtype=float)
    q = q / q.sum()
    n = np.arange(q.size, dtype=float) if levels is None else np.asarray(levels, dtype=float)
    if energy_cap is None or n @ q <= energy_cap:
        return q, 0.0
    if n.min() > energy_cap:
        raise ValueError(f"no level satisfies the energy cap {energy_cap}")
    logq = np.log(np.maximum(q, P_FLOOR))

    def tilt(mu):
        w = logq - mu * n
        w = np.exp(w - w.max())
        return w / w.sum()

    def excess(mu):
        return float(n @ tilt(mu)) - energy_cap

    if excess(0.0) <= 0:
        return tilt(0.0), 0.0
    hi = 1.0
    while excess(hi) > 0 and hi < 1e6:
        hi *= 2.0
    mu = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return tilt(mu), mu


@dataclass
class SimplexOptimum:
    """Result of :func:`maximize` for the best start.

    ``support`` counts the levels kept in the working set; levels whose weight
    fell below ``P_DROP`` are reported with weight zero.
    """

    p: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool
    energy: float
    energy_multiplier: float
    constraint_active: bool
    newton_steps: int = 0
    support: int = 0
    start_values: list = field(default_factory=list)
    start_converged: list = field(default_factory=list)

    @property
    def multistart_spread(self) -> float:
        vals = [v for v, c in zip(self.start_values, self.start_converged) if c]
        return max(vals) - min(vals) if len(vals) > 1 else 0.0


class _Problem:
    """The objective restricted to a subset of levels."""

    def __init__(self, G: np.ndarray, energy_cap: float | None, levels=None):
        self.G = np.asarray(G)
        self.d = self.G.shape[0]
        self.n = np.arange(self.d, dtype=float) if levels is None else np.asarray(levels, dtype=float)
        if energy_cap is not None and energy_cap >= self.n.max():
            energy_cap = None
        self.cap = energy_cap

    def restrict(self, keep: np.ndarray) -> _Problem:
        return _Problem(self.G[np.ix_(keep, keep)], self.cap, self.n[keep])

    def f(self, p):
        return orthant_objective(p, self.G)

    def grad(self, p):
        return objective_gradient(p, self.G)

    def gap(self, g, p):
        return frank_wolfe_gap(g, p, self.cap, self.n)

    def project(self, q):
        return energy_projection(q, self.cap, self.n)[0]

    def active(self, p) -> bool:
        return self.cap is not None and self.n @ p >= self.cap - 1e-12

    def multiplier(self, g, p) -> float:
        """Least-squares ``beta`` in ``g ≈ mu + beta n`` (zero when the cap is slack)."""
        if not self.active(p):
            return 0.0
        A = np.stack([np.ones(self.d), self.n], axis=1)
        w = np.sqrt(p)
        coef, *_ = np.linalg.lstsq(A * w[:, None], g * w, rcond=None)
        return float(coef[1])


def _mirror_step(prob: _Problem, p, f, g, t):
    """One Armijo-accepted exponentiated-gradient step; returns (p, f, t, ok)."""
    # tilt by the current multiplier so the projection only corrects a small residual
    gt = g - prob.multiplier(g, p) * prob.n
    while t > 1e-14:
        # the log-space move is clipped so weights too small to affect f cannot jump wildly
        step = np.clip(t * (gt - gt @ p), -LOG_STEP_MAX, LOG_STEP_MAX)
        logq = np.log(np.maximum(p, P_FLOOR)) + step
        q = prob.project(np.exp(logq - logq.max()))
        fq = prob.f(q)
        if fq >= f + 1e-4 * float(g @ (q - p)) - 1e-15 * max(1.0, abs(f)):
            return q, fq, min(4.0 * t, 1e12), True
        t *= 0.5
    return p, f, t, False


def _newton_step(prob: _Problem, p, f, g):
    """Newton step on the active affine set in ``sqrt(p)``-scaled coordinates; returns (p, f, ok)."""
    d = prob.d
    s = np.sqrt(p)
    H = scaled_hessian(p, prob.G)
    cap_active = prob.active(p)
    C = np.ones((1, d))
    if cap_active:
        C = np.vstack([C, prob.n])
    # orthonormal basis of {y : C diag(s) y = 0}
    _, _, Vt = np.linalg.svd(C * s[None, :])
    Z = Vt[C.shape[0]:].T
    if Z.shape[1] == 0:
        return p, f, False
    Hr = Z.T @ H @ Z
    gr = Z.T @ (s * g)
    lam = np.linalg.eigvalsh(Hr)
    scale = max(1.0, float(np.max(np.abs(lam))))
    shift = max(0.0, float(lam[-1])) + 1e-12 * scale
    y = np.linalg.solve(Hr - shift * np.eye(Hr.shape[0]), -gr)
    delta = s * (Z @ y)
    neg = delta < 0
    t = 1.0
    if neg.any():
        t = min(1.0, 0.9 * float(np.min(p[neg] / -delta[neg])))
    if prob.cap is not None and not cap_active:
        de = float(prob.n @ delta)
        room = prob.cap - float(prob.n @ p)
        if de > 0 and t * de > room:
            t = room / de
    predicted = float(g @ delta)
    while t > 1e-10:
        q = np.maximum(p + t * delta, P_FLOOR)
        q = q / q.sum()
        fq = prob.f(q)
        if fq >= f - 1e-14 * max(1.0, abs(f)) or t * predicted < 1e-14:
            if prob.cap is not None and prob.n @ q > prob.cap:
                q = prob.project(q)
                fq = prob.f(q)
            return q, fq, True
        t *= 0.5
    return p, f, False


def _single_start(prob: _Problem, p0, max_iters: int, tol: float) -> SimplexOptimum:
    full = prob
    keep = np.arange(full.d)
    target = min(tol * 1e-3, 1e-12)
    p = prob.project(np.maximum(p0, 1e-12))
    f = prob.f(p)
    g = prob.grad(p)
    gap = prob.gap(g, p)
    t = 1.0
    newton_steps = 0
    newton_ok = True
    stalls = 0
    best_gap, best_it = gap, 0
    it = 0
    for it in range(1, max_iters + 1):
        if gap <= target:
            break
        if gap < 0.5 * best_gap:
            best_gap, best_it = gap, it
        elif it - best_it > STALL_WINDOW:
            break
        moved = False
        if newton_ok and (gap < 1e-3 or it > 50):
            q, fq, ok = _newton_step(prob, p, f, g)
            if ok:
                gq = prob.grad(q)
                gap_q = prob.gap(gq, q)
                if gap_q < gap or fq > f + 1e-15:
                    # a Newton step that does not halve the gap is followed by a mirror step
                    moved = gap_q < 0.5 * gap
                    p, f, g, gap = q, fq, gq, gap_q
                    newton_steps += 1
                else:
                    newton_ok = False
            else:
                newton_ok = False
        if not moved:
            p, f, t, ok = _mirror_step(prob, p, f, g, t)
            g = prob.grad(p)
            new_gap = prob.gap(g, p)
            if not newton_ok and new_gap < 0.5 * gap:
                newton_ok = True
            gap = new_gap
            if not ok:
                stalls += 1
                if stalls > 3:
                    break
                t = 1.0
        small = p < P_DROP
        if small.any() and not small.all():
            # below this the gradient is lost in eigensolver roundoff and the level
            # contributes under 1e-27 bits; drop it
            live = ~small
            keep = keep[live]
            prob = prob.restrict(live)
            p = p[live] / p[live].sum()
            f = prob.f(p)
            g = prob.grad(p)
            gap = prob.gap(g, p)
            best_gap, best_it = gap, it
            newton_ok = True
    p_full = np.zeros(full.d)
    p_full[keep] = p
    return SimplexOptimum(
        p=p_full,
        value=f,
        gap=gap,
        iterations=it,
        converged=gap <= tol,
        energy=float(full.n @ p_full),
        energy_multiplier=prob.multiplier(g, p),
        constraint_active=prob.active(p),
        newton_steps=newton_steps,
        support=int(keep.size),
    )


def maximize(
    G,
    energy_cap: float | None = None,
    *,
    max_iters: int = 10000,
    tol: float = 1e-9,
    multistarts: int = 8,
    rng: np.random.Generator | None = None,
) -> SimplexOptimum:
    """Maximize ``H(p) - S(sum_n p_n |psi_n><psi_n|)`` given the Gram matrix of the ``psi_n``.

    The first start is the uniform distribution; the others are Dirichlet draws
    from ``rng``.  The best start is returned with every start's value attached.
    """
    G = np.asarray(G)
    d = G.shape[0]
    if energy_cap is not None:
        if energy_cap < 0:
            raise ValueError(f"energy cap must be >= 0, got {energy_cap}")
        if energy_cap == 0:
            p = np.zeros(d)
            p[0] = 1.0
            return SimplexOptimum(p, 0.0, 0.0, 0, True, 0.0, 0.0, True, 0, 1, [0.0], [True])
    if d == 1:
        return SimplexOptimum(np.ones(1), 0.0, 0.0, 0, True, 0.0, 0.0, False, 0, 1, [0.0], [True])
    rng = rng if rng is not None else np.random.default_rng(0)
    prob = _Problem(G, energy_cap)
    starts = [np.full(d, 1.0 / d)]
    starts += [rng.dirichlet(np.ones(d)) for _ in range(max(0, multistarts - 1))]
    best = None
    values, flags = [], []
    for p0 in starts:
        res = _single_start(prob, p0, max_iters, tol)
        values.append(res.value)
        flags.append(res.converged)
        if best is None or res.value > best.value:
            best = res
    best.start_values = values
    best.start_converged = flags
    return best
