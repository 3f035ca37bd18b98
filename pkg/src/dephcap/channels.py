"""Channel families used by the bounds.

The bosonic dephasing channel (closed form and truncated Kraus family), its
complementary channel, the pure-loss beamsplitter, and the two families of
symmetric qubit channels used as squashing maps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .entropy import CQState, DensityMatrix, as_density
from .fock import (
    FockVector,
    ProbabilityDistribution,
    coherent_vector,
    env_dim,
    poisson_tail,
)

log = logging.getLogger(__name__)

COMPLETENESS_TOL = 1e-10
FAMILIES = ("A", "B")


@dataclass(frozen=True)
class KrausChannel:
    """Ordered Kraus operators ``K_j`` of shape ``(d_out, d_in)``."""

    kraus: tuple
    d_in: int = field(init=False)
    d_out: int = field(init=False)
    completeness_residual: float = field(init=False)

    def __post_init__(self):
        ops = tuple(np.array(K, dtype=complex) for K in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shapes = {K.shape for K in ops}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2:
            raise ValueError(f"Kraus operators must share one 2-d shape, got {shapes}")
        d_out, d_in = ops[0].shape
        for K in ops:
            K.setflags(write=False)
        S = sum(K.conj().T @ K for K in ops)
        resid = float(np.max(np.abs(S - np.eye(d_in))))
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)
        object.__setattr__(self, "completeness_residual", resid)

    def __len__(self) -> int:
        return len(self.kraus)

    @property
    def is_complete(self) -> bool:
        return self.completeness_residual <= COMPLETENESS_TOL

    def apply(self, rho) -> np.ndarray:
        rho = _matrix(rho)
        if rho.shape != (self.d_in, self.d_in):
            raise ValueError(f"input of shape {rho.shape} for a channel on dimension {self.d_in}")
        return sum(K @ rho @ K.conj().T for K in self.kraus)


def _matrix(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma >= 0:
        raise ValueError(f"dephasing parameter gamma must be >= 0, got {gamma}")
    return gamma


def dephasing_apply(rho, gamma: float) -> DensityMatrix:
    """Bosonic dephasing: ``rho[n, m] -> rho[n, m] exp(-gamma (n - m)^2 / 2)``."""
    gamma = _check_gamma(gamma)
    rho = as_density(rho)
    n = np.arange(rho.dim)
    damp = np.exp(-0.5 * gamma * (n[:, None] - n[None, :]) ** 2)
    return DensityMatrix(rho.entries * damp, rho.psd_tolerance)


def dephasing_kraus_terms(gamma: float, d: int, n_terms: int) -> np.ndarray:
    """Diagonals of ``K_j``, ``j < n_terms``: ``exp(-gamma n^2/2) (-i sqrt(gamma) n)^j / sqrt(j!)``.

    Row ``j``, column ``n``.  Column ``n`` is exactly the truncated coherent state
    ``|-i sqrt(gamma) n>``.
    """
    gamma = _check_gamma(gamma)
    n = np.arange(d, dtype=float)
    j = np.arange(n_terms, dtype=float)[:, None]
    out = np.zeros((n_terms, d), dtype=complex)
    out[0, :] = np.exp(-0.5 * gamma * n**2)
    pos = n > 0
    if gamma > 0 and pos.any():
        x = math.sqrt(gamma) * n[pos]
        logmag = -0.5 * x**2 + j * np.log(x) - 0.5 * gammaln(j + 1.0)
        out[:, pos] = np.exp(logmag) * (-1j) ** (np.arange(n_terms) % 4)[:, None]
    return out


def dephasing_kraus(gamma: float, d: int, tail_tol: float = 1e-12) -> KrausChannel:
    """Truncated Kraus family of the dephasing channel on ``d`` Fock levels.

    The number of terms grows until the Poisson tail of the worst level,
    ``n = d - 1``, drops below ``tail_tol / 10``; the measured completeness
    residual must then be within ``tail_tol``.
    """
    gamma = _check_gamma(gamma)
    if d < 1:
        raise ValueError("d must be a positive integer")
    if gamma == 0:
        return KrausChannel((np.eye(d),))
    mu = gamma * (d - 1) ** 2
    n_terms = max(1, int(math.ceil(mu)))
    # truncate below tail_tol so summation roundoff fits inside the budget
    while poisson_tail(mu, n_terms) > 0.1 * tail_tol:
        n_terms += max(1, n_terms // 8)
    diag = dephasing_kraus_terms(gamma, d, n_terms)
    ch = KrausChannel(tuple(np.diag(row) for row in diag))
    if ch.completeness_residual > tail_tol:
        raise ValueError(
            f"completeness residual {ch.completeness_residual:.2e} cannot reach "
            f"tail_tol={tail_tol:g} at gamma*(d-1)^2={mu:g} in double precision"
        )
    return ch


def complementary_cq_output(p, gamma: float, d_env: int | None = None) -> CQState:
    """Environment side of the dephasing dilation on a diagonal input.

    Conditional ``n`` is the coherent state ``|-i sqrt(gamma) n>`` truncated to
    ``d_env`` levels (default: :func:`dephcap.fock.env_dim`).
    """
    gamma = _check_gamma(gamma)
    if not isinstance(p, ProbabilityDistribution):
        p = ProbabilityDistribution(p)
    d = p.dim
    if d_env is None:
        d_env = env_dim(gamma, d)
    conds = tuple(coherent_vector(-1j * math.sqrt(gamma) * n, d_env) for n in range(d))
    return CQState(p, conds)


def beamsplitter_kraus(eta: float, d: int, k_max: int | None = None) -> KrausChannel:
    """Pure-loss beamsplitter of amplitude transmissivity ``eta`` on ``d`` levels.

    ``B_k = sum_m sqrt(C(m+k, k)) (1-eta^2)^(k/2) eta^m |m><m+k|``.  With the
    default ``k_max = d - 1`` the family is complete on the truncation.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"transmissivity must lie in (0, 1), got {eta}")
    if k_max is None:
        k_max = d - 1
    ops = []
    log_eta, log_loss = math.log(eta), 0.5 * math.log1p(-eta * eta)
    for k in range(min(k_max, d - 1) + 1):
        B = np.zeros((d, d))
        m = np.arange(d - k)
        logc = 0.5 * (gammaln(m + k + 1.0) - gammaln(m + 1.0) - gammaln(k + 1.0))
        B[m, m + k] = np.exp(logc + k * log_loss + m * log_eta)
        ops.append(B)
    ch = KrausChannel(tuple(ops))
    if not ch.is_complete:
        log.warning(
            "beamsplitter Kraus family truncated at k_max=%d: completeness residual %.3e",
            k_max, ch.completeness_residual,
        )
    return ch


def beamsplitter_coherent(alpha, eta: float):
    """Image amplitude of a coherent state through the beamsplitter: ``alpha -> eta alpha``."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"transmissivity must lie in (0, 1), got {eta}")
    return eta * np.asarray(alpha, dtype=complex)


@dataclass(frozen=True)
class QubitSquashParams:
    family: str
    theta: float
    phi: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi <= 2 * math.pi:
            raise ValueError(f"phi must lie in [0, 2 pi], got {self.phi}")


def qubit_kraus_arrays(family: str, theta, phi):
    """Broadcast Kraus pairs ``(K1, K2)`` of a symmetric qubit family, shape ``(..., 2, 2)``."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    s, c, e = np.sin(theta), np.cos(theta), np.exp(1j * phi)
    r = 1.0 / math.sqrt(2.0)
    K1 = np.zeros(theta.shape + (2, 2), dtype=complex)
    K2 = np.zeros_like(K1)
    if family == "A":
        K1[..., 0, 0] = s
        K1[..., 1, 1] = r
        K2[..., 0, 1] = r
        K2[..., 1, 0] = e * c
    elif family == "B":
        K1[..., 0, 0] = 1.0
        K1[..., 1, 1] = r * s
        K2[..., 0, 1] = r * s
        K2[..., 1, 1] = e * c
    else:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    return K1, K2


def symmetric_qubit_kraus(params: QubitSquashParams) -> KrausChannel:
    K1, K2 = qubit_kraus_arrays(params.family, params.theta, params.phi)
    return KrausChannel((K1, K2))


def complementary_from_kraus(ch: KrausChannel, rho) -> DensityMatrix:
    """Complementary output ``[Tr(K_i rho K_j^dag)]_{ij}`` on the Kraus-index register."""
    rho = _matrix(rho)
    if rho.shape != (ch.d_in, ch.d_in):
        raise ValueError(f"input of shape {rho.shape} for a channel on dimension {ch.d_in}")
    K = np.stack(ch.kraus)
    out = np.einsum("iab,bc,jac->ij", K, rho, K.conj())
    return DensityMatrix(out)


def complementary_env_factor(ch: KrausChannel, p) -> np.ndarray:
    """Columns ``sqrt(p_n) (K_j)_{nn}`` for diagonal Kraus families on a diagonal input.

    The complementary output equals ``X X^dag``; only its factor is returned so
    large Kraus counts stay cheap.
    """
    diag = np.stack([np.diag(K) for K in ch.kraus])
    if any(np.count_nonzero(K - np.diag(np.diag(K))) for K in ch.kraus):
        raise ValueError("complementary_env_factor needs diagonal Kraus operators")
    return diag * np.sqrt(np.asarray(p, dtype=float))[None, :]


@dataclass(frozen=True)
class Embedding:
    """Orthonormal basis (columns) and upper-triangular coordinates ``vectors = basis @ coords``."""

    basis: np.ndarray
    coords: np.ndarray


def gram_schmidt_embed(vectors: Sequence, det_tol: float = 1e-12) -> Embedding:
    """Orthonormalize ``vectors`` in order, so that ``e_0`` is the first vector normalized."""
    V = np.stack(
        [v.amplitudes if isinstance(v, FockVector) else np.asarray(v, complex) for v in vectors],
        axis=1,
    )
    G = V.conj().T @ V
    scale = np.sqrt(np.real(np.diag(G)))
    det = float(np.real(np.linalg.det(G / np.outer(scale, scale))))
    if det <= det_tol:
        raise ValueError(
            f"vectors are nearly dependent (normalized Gram determinant {det:.3e}, "
            f"condition number {np.linalg.cond(G):.3e})"
        )
    n = V.shape[1]
    Q = np.zeros_like(V)
    R = np.zeros((n, n), dtype=complex)
    for j in range(n):
        w = V[:, j].copy()
        for _ in range(2):  # re-orthogonalize once for stability
            c = Q[:, :j].conj().T @ w
            w = w - Q[:, :j] @ c
            R[:j, j] += c
        R[j, j] = np.linalg.norm(w)
        Q[:, j] = w / R[j, j]
    return Embedding(Q, R)
