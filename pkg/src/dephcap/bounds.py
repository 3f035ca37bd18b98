"""Lower and upper bounds on the LOCC-assisted quantum capacity of bosonic dephasing.

Lower bound: the diagonal-input coherent information ``Q(gamma)``.  Upper
bound: squashed entanglement with a 50/50 beamsplitter squashing map, which
reduces to ``Q(gamma / 2)``.  For ``d = 2`` the symmetric qubit squashing
families give an alternative upper bound.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .channels import (
    FAMILIES,
    QubitSquashParams,
    beamsplitter_coherent,
    beamsplitter_kraus,
    complementary_from_kraus,
    dephasing_kraus,
    dephasing_kraus_terms,
    gram_schmidt_embed,
    qubit_kraus_arrays,
    symmetric_qubit_kraus,
)
from .entropy import (
    CQState,
    DensityMatrix,
    binary_entropy,
    entropy_from_spectrum,
    entropy_of_pure_mixture,
    holevo_information,
    shannon_entropy,
    von_neumann_entropy,
)
from .fock import (
    ProbabilityDistribution,
    coherent_vector,
    dephasing_amplitudes,
    dephasing_gram,
    env_dim,
    gram_matrix,
    poisson_tail,
)
from .optimize import SimplexOptimum, maximize

log = logging.getLogger(__name__)

BS_ETA = 1.0 / math.sqrt(2.0)
# Kraus terms kept in the reverse-coherent-information path: the dropped tail is far below roundoff
RCI_TAIL = 1e-30
QUBIT_THETA_POINTS = 181
QUBIT_PHI_POINTS = 120
QUBIT_PARAM_TOL = 1e-8
ROW_TOL = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 10000
    objective_tol: float = 1e-9
    multistarts: int = 8
    energy_cap: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.multistarts < 1:
            raise ValueError("max_iters and multistarts must be positive")
        if not self.objective_tol > 0:
            raise ValueError("objective_tol must be positive")
        cap = self.energy_cap
        if cap is not None:
            cap = float(cap)
            if math.isnan(cap) or cap < 0:
                raise ValueError(f"energy cap must be >= 0 or unbounded, got {cap}")
            object.__setattr__(self, "energy_cap", None if math.isinf(cap) else cap)

    def rng(self, gamma: float, d: int) -> np.random.Generator:
        """Multistart generator keyed by (seed, d, gamma), independent of evaluation order."""
        return np.random.default_rng([self.seed, d, int(round(gamma * 1e9))])


@dataclass(frozen=True)
class CapacityResult:
    p: np.ndarray
    bits: float
    gap: float
    iterations: int
    converged: bool
    energy: float
    energy_multiplier: float
    constraint_active: bool
    multistart_spread: float
    support: int

    @classmethod
    def from_optimum(cls, opt: SimplexOptimum) -> CapacityResult:
        return cls(
            p=opt.p,
            bits=max(opt.value, 0.0),
            gap=opt.gap,
            iterations=opt.iterations,
            converged=opt.converged,
            energy=opt.energy,
            energy_multiplier=opt.energy_multiplier,
            constraint_active=opt.constraint_active,
            multistart_spread=opt.multistart_spread,
            support=opt.support,
        )

    @property
    def kkt_residual(self) -> float:
        """Frank-Wolfe duality gap at the returned point (an upper bound on suboptimality)."""
        return self.gap


@dataclass(frozen=True)
class BoundsRow:
    gamma: float
    dim: int
    energy_cap: float
    lower_bits: float
    upper_bits: float
    gap_bits: float
    iterations: int
    converged: bool
    error: str | None = None

    def __post_init__(self):
        if self.error is not None:
            return
        if self.gap_bits < -ROW_TOL:
            raise ValueError(f"upper bound below lower bound by {-self.gap_bits:.3e} at gamma={self.gamma}")
        if self.lower_bits < -ROW_TOL or self.upper_bits > math.log2(self.dim) + ROW_TOL:
            raise ValueError(f"bounds ({self.lower_bits}, {self.upper_bits}) outside [0, log2 d]")

    @classmethod
    def failed(cls, gamma: float, dim: int, energy_cap: float, error: str) -> BoundsRow:
        nan = float("nan")
        return cls(gamma, dim, energy_cap, nan, nan, nan, 0, False, error)


def _check(gamma: float, d: int) -> float:
    gamma = float(gamma)
    if not gamma >= 0:
        raise ValueError(f"dephasing parameter gamma must be >= 0, got {gamma}")
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return gamma


def _probs(p, d: int) -> np.ndarray:
    p = p.p if isinstance(p, ProbabilityDistribution) else ProbabilityDistribution(p).p
    if p.size != d:
        raise ValueError(f"distribution has {p.size} entries, expected {d}")
    return p


def capacity_objective(p, gamma: float, d: int) -> float:
    """``H(p) - S(sum_n p_n |sqrt(gamma) n><sqrt(gamma) n|)`` in bits, via the Gram matrix."""
    gamma = _check(gamma, d)
    p = _probs(p, d)
    return shannon_entropy(p) - entropy_of_pure_mixture(p, dephasing_gram(gamma, d))


def beamsplitter_objective(p, gamma: float, d: int) -> float:
    """``S(sigma_S) - S(sigma_E')`` with the environment passed through a 50/50 beamsplitter.

    The beamsplitter acts on the coherent environment states analytically.
    """
    gamma = _check(gamma, d)
    p = _probs(p, d)
    amps = beamsplitter_coherent(dephasing_amplitudes(gamma, d), BS_ETA)
    return shannon_entropy(p) - entropy_of_pure_mixture(p, gram_matrix(amps))


def _complementary_spectrum(p: np.ndarray, gamma: float) -> np.ndarray:
    d = p.size
    mu = gamma * (d - 1) ** 2
    n_terms = max(1, int(math.ceil(mu)))
    while poisson_tail(mu, n_terms) > RCI_TAIL:
        n_terms += max(1, n_terms // 8)
    X = dephasing_kraus_terms(gamma, d, n_terms) * np.sqrt(p)[None, :]
    # complementary output is X X^dag; its spectrum is that of the small factor
    return np.linalg.svd(X, compute_uv=False) ** 2


def reverse_coherent_information(rho, gamma: float, d: int) -> float:
    """``S(rho) - S(N^c(rho))`` in bits, with ``N^c`` built from the Kraus operators.

    ``rho`` is a distribution (diagonal input) or a :class:`DensityMatrix`.  The
    complementary output only sees the diagonal of ``rho``.
    """
    gamma = _check(gamma, d)
    if isinstance(rho, DensityMatrix):
        if rho.dim != d:
            raise ValueError(f"input of dimension {rho.dim}, expected {d}")
        s_in = von_neumann_entropy(rho)
        p = np.clip(np.real(np.diag(rho.entries)), 0.0, None)
    else:
        p = _probs(rho, d)
        s_in = shannon_entropy(p)
    if gamma == 0:
        return s_in
    return s_in - entropy_from_spectrum(_complementary_spectrum(p, gamma))


def squashed_environment(rho, gamma: float) -> DensityMatrix:
    """Environment state after the complementary channel and a 50/50 beamsplitter.

    Built from truncated Kraus operators of both maps; this is the slow
    verification path, not the one used for bounds.
    """
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    ch = dephasing_kraus(gamma, rho.dim)
    env = complementary_from_kraus(ch, rho)
    if len(ch) == 1:
        return env
    bs = beamsplitter_kraus(BS_ETA, env.dim)
    out = bs.apply(env)
    return DensityMatrix(out / np.trace(out).real)


def optimize_capacity(gamma: float, d: int, cfg: OptimizerConfig | None = None) -> CapacityResult:
    """Maximize :func:`capacity_objective` over distributions with ``sum n p_n <= N``."""
    cfg = cfg or OptimizerConfig()
    gamma = _check(gamma, d)
    opt = maximize(
        dephasing_gram(gamma, d),
        cfg.energy_cap,
        max_iters=cfg.max_iters,
        tol=cfg.objective_tol,
        multistarts=cfg.multistarts,
        rng=cfg.rng(gamma, d),
    )
    return CapacityResult.from_optimum(opt)


def beamsplitter_bound_via_pipeline(gamma: float, d: int, cfg: OptimizerConfig | None = None) -> CapacityResult:
    """Supremum of :func:`beamsplitter_objective`, optimized on its own Gram matrix."""
    cfg = cfg or OptimizerConfig()
    gamma = _check(gamma, d)
    amps = beamsplitter_coherent(dephasing_amplitudes(gamma, d), BS_ETA)
    opt = maximize(
        gram_matrix(amps).entries,
        cfg.energy_cap,
        max_iters=cfg.max_iters,
        tol=cfg.objective_tol,
        multistarts=cfg.multistarts,
        rng=cfg.rng(gamma, d),
    )
    return CapacityResult.from_optimum(opt)


def _cap_value(cfg: OptimizerConfig) -> float:
    return math.inf if cfg.energy_cap is None else cfg.energy_cap


def locc_bounds(gamma: float, d: int, cfg: OptimizerConfig | None = None) -> BoundsRow:
    """``Q(gamma) <= Q_LOCC <= Q(gamma / 2)``, each side optimized independently."""
    cfg = cfg or OptimizerConfig()
    gamma = _check(gamma, d)
    lo = optimize_capacity(gamma, d, cfg)
    hi = optimize_capacity(gamma / 2, d, cfg)
    return BoundsRow(
        gamma=gamma,
        dim=d,
        energy_cap=_cap_value(cfg),
        lower_bits=lo.bits,
        upper_bits=hi.bits,
        gap_bits=hi.bits - lo.bits,
        iterations=lo.iterations + hi.iterations,
        converged=lo.converged and hi.converged,
    )


def worker_count(n_tasks: int) -> int:
    """Thread count from ``DEPHCAP_THREADS`` (default: CPU count), at most ``n_tasks``."""
    raw = os.environ.get("DEPHCAP_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"DEPHCAP_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"DEPHCAP_THREADS must be >= 1, got {n}")
    else:
        n = os.cpu_count() or 1
    return max(1, min(n, n_tasks))


def _safe_row(gamma: float, d: int, cfg: OptimizerConfig) -> BoundsRow:
    try:
        return locc_bounds(gamma, d, cfg)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("bounds failed at gamma=%g, d=%d: %s", gamma, d, exc)
        return BoundsRow.failed(float(gamma), d, _cap_value(cfg), str(exc))


def gap_sweep(gamma_grid, d: int, cfg: OptimizerConfig | None = None) -> list[BoundsRow]:
    """One :class:`BoundsRow` per grid point, in grid order.

    Rows are evaluated concurrently; a failing row is reported with NaN bounds
    and its error message while the others proceed.
    """
    cfg = cfg or OptimizerConfig()
    grid = [float(g) for g in gamma_grid]
    if not grid:
        raise ValueError("gamma grid is empty")
    with ThreadPoolExecutor(max_workers=worker_count(len(grid))) as pool:
        return list(pool.map(lambda g: _safe_row(g, d, cfg), grid))


@dataclass(frozen=True)
class SaturationRow:
    dim: int
    lower_bits: float
    upper_bits: float
    lower_change: float
    upper_change: float
    converged: bool


def dimension_saturation(gamma: float, d_list, cfg: OptimizerConfig | None = None) -> list[SaturationRow]:
    """Bounds at fixed ``gamma`` for each truncation in ``d_list`` and their change from the previous one."""
    cfg = cfg or OptimizerConfig()
    dims = [int(d) for d in d_list]
    if not dims or any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError(f"dimension list must be nonempty and increasing, got {dims}")
    with ThreadPoolExecutor(max_workers=worker_count(len(dims))) as pool:
        rows = list(pool.map(lambda d: locc_bounds(gamma, d, cfg), dims))
    out = []
    prev = None
    for r in rows:
        nan = float("nan")
        out.append(
            SaturationRow(
                dim=r.dim,
                lower_bits=r.lower_bits,
                upper_bits=r.upper_bits,
                lower_change=abs(r.lower_bits - prev.lower_bits) if prev else nan,
                upper_change=abs(r.upper_bits - prev.upper_bits) if prev else nan,
                converged=r.converged,
            )
        )
        prev = r
    return out


# ---- symmetric qubit squashing (d = 2) ----


def _entropy_2x2(rho: np.ndarray) -> np.ndarray:
    """Entropies of a stack of 2x2 Hermitian unit-trace matrices."""
    a = rho[..., 0, 0].real
    b = rho[..., 1, 1].real
    c = np.abs(rho[..., 0, 1])
    half = 0.5 * (a + b)
    disc = np.sqrt(0.25 * (a - b) ** 2 + c**2)
    lam = np.stack([half + disc, half - disc], axis=-1)
    lam = np.clip(lam, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, -lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return terms.sum(axis=-1)


def _apply_pure(K1, K2, psi):
    out = 0
    for K in (K1, K2):
        v = K @ psi
        out = out + v[..., :, None] * v[..., None, :].conj()
    return out


def qubit_environment_coords(gamma: float) -> np.ndarray:
    """Coordinates (columns) of ``|0>`` and ``|-i sqrt(gamma)>`` in their Gram-Schmidt basis."""
    gamma = float(gamma)
    if not gamma >= 0:
        raise ValueError(f"dephasing parameter gamma must be >= 0, got {gamma}")
    s = math.exp(-gamma / 2)
    if 1.0 - s * s <= 1e-12:
        # the two states coincide to working precision
        return np.array([[1.0, s], [0.0, math.sqrt(max(0.0, 1.0 - s * s))]], dtype=complex)
    de = env_dim(gamma, 2)
    emb = gram_schmidt_embed([coherent_vector(0.0, de), coherent_vector(-1j * math.sqrt(gamma), de)])
    return emb.coords


def _squashed_holevo(p1, coords, family, theta, phi):
    K1, K2 = qubit_kraus_arrays(family, theta, phi)
    r0 = _apply_pure(K1, K2, coords[:, 0])
    r1 = _apply_pure(K1, K2, coords[:, 1])
    avg = (1 - p1) * r0 + p1 * r1
    return _entropy_2x2(avg) - (1 - p1) * _entropy_2x2(r0) - p1 * _entropy_2x2(r1)


_THETA = np.linspace(0.0, math.pi, QUBIT_THETA_POINTS)
_PHI = np.linspace(0.0, 2 * math.pi, QUBIT_PHI_POINTS, endpoint=False)
_TH, _PH = np.meshgrid(_THETA, _PHI, indexing="ij")


def _fold(theta: float, phi: float) -> tuple[float, float]:
    return float(np.clip(theta, 0.0, math.pi)), float(np.mod(phi, 2 * math.pi))


def best_qubit_squash(p1: float, coords: np.ndarray) -> tuple[float, QubitSquashParams]:
    """``sup`` over both families and ``(theta, phi)`` of ``I(S;E')``: grid search, then Nelder-Mead."""
    best_val, best = -np.inf, None
    for fam in FAMILIES:
        vals = _squashed_holevo(p1, coords, fam, _TH, _PH)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        x0 = np.array([_THETA[i], _PHI[j]])

        def neg(x, fam=fam):
            th, ph = _fold(*x)
            return -float(_squashed_holevo(p1, coords, fam, th, ph))

        res = minimize(
            neg, x0, method="Nelder-Mead",
            options={"xatol": QUBIT_PARAM_TOL, "fatol": 1e-15, "maxiter": 4000,
                     "initial_simplex": [x0, x0 + [0.02, 0], x0 + [0, 0.05]]},
        )
        val, x = -res.fun, res.x
        if float(vals[i, j]) > val:
            val, x = float(vals[i, j]), x0
        if val > best_val:
            best_val, best = val, QubitSquashParams(fam, *_fold(*x))
    return max(best_val, 0.0), best


@dataclass(frozen=True)
class QubitSquashResult:
    bits: float
    params: QubitSquashParams
    p1: float
    squashed_information: float
    crosscheck_residual: float = field(default=0.0)


def qubit_squash_bound(gamma: float, cfg: OptimizerConfig | None = None) -> QubitSquashResult:
    """``sup_p [H(p) - sup_{family, theta, phi} I(S;E')]`` for a qubit input (``d = 2``).

    The inner supremum is recomputed for every ``p``, as the nested formula is
    written; the outer one is a bounded scalar search over ``p_1``.
    """
    cfg = cfg or OptimizerConfig()
    coords = qubit_environment_coords(gamma)

    def neg_bound(p1):
        return -(binary_entropy(p1) - best_qubit_squash(p1, coords)[0])

    res = minimize_scalar(neg_bound, bounds=(0.0, 1.0), method="bounded", options={"xatol": QUBIT_PARAM_TOL})
    p1 = float(res.x)
    bits = -float(res.fun)
    if -neg_bound(0.5) > bits:
        # the bounded search never evaluates the midpoint exactly
        p1 = 0.5
    info, params = best_qubit_squash(p1, coords)
    bits = binary_entropy(p1) - info
    # independent evaluation through the generic cq-state machinery
    ch = symmetric_qubit_kraus(params)
    conds = [DensityMatrix(ch.apply(np.outer(coords[:, n], coords[:, n].conj()))) for n in range(2)]
    cq = CQState(ProbabilityDistribution.normalized([1 - p1, p1]), conds)
    residual = abs(holevo_information(cq) - info)
    return QubitSquashResult(max(bits, 0.0), params, p1, info, residual)
