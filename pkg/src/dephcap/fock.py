"""Single-mode truncated Fock-space primitives.

Coherent states, their closed-form overlaps and Gram matrices, and the
probability distributions over Fock labels that parametrize diagonal inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln

NORM_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class FockVector:
    """Amplitudes of a state in a truncated Fock basis.

    ``norm_deficit`` is the probability mass that lives outside the
    truncation, so ``sum(|a|**2) + norm_deficit == 1``.
    """

    amplitudes: np.ndarray
    norm_deficit: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size == 0:
            raise ValueError("FockVector needs at least one amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        deficit = float(self.norm_deficit)
        if deficit < 0:
            raise ValueError(f"norm_deficit must be >= 0, got {deficit:g}")
        total = float(np.vdot(amps, amps).real) + deficit
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(
                f"squared norm + norm_deficit = {total!r}, expected 1 within {NORM_TOL}"
            )
        object.__setattr__(self, "norm_deficit", deficit)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> FockVector:
        """Wrap raw amplitudes, booking whatever is missing from unit norm as deficit."""
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        deficit = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
        return cls(amps, deficit)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: FockVector) -> complex:
        """``<self|other>`` over the common truncation."""
        n = min(self.dim, other.dim)
        return complex(np.vdot(self.amplitudes[:n], other.amplitudes[:n]))


@dataclass(frozen=True)
class GramMatrix:
    """Pairwise overlaps ``G[m, n] = <psi_m|psi_n>`` of unit vectors."""

    entries: np.ndarray
    min_eigenvalue: float = field(init=False, repr=False)

    def __post_init__(self):
        G = np.asarray(self.entries, dtype=complex)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise ValueError(f"Gram matrix must be square and non-empty, got {G.shape}")
        if np.max(np.abs(G - G.conj().T)) > NORM_TOL:
            raise ValueError("Gram matrix is not Hermitian")
        if np.max(np.abs(np.diag(G) - 1.0)) > NORM_TOL:
            raise ValueError("Gram matrix must have unit diagonal")
        G = 0.5 * (G + G.conj().T)
        lam_min = float(np.linalg.eigvalsh(G)[0])
        if lam_min < -PSD_TOL:
            raise ValueError(f"Gram matrix is not PSD (min eigenvalue {lam_min:.3e})")
        G.setflags(write=False)
        object.__setattr__(self, "entries", G)
        object.__setattr__(self, "min_eigenvalue", lam_min)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ProbabilityDistribution:
    """Weights over Fock labels ``n = 0 .. d-1``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("empty probability vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def normalized(cls, weights) -> ProbabilityDistribution:
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())

    @classmethod
    def uniform(cls, d: int) -> ProbabilityDistribution:
        return cls(np.full(d, 1.0 / d))

    @property
    def dim(self) -> int:
        return self.p.size

    @property
    def energy(self) -> float:
        """Mean photon number ``sum_n n p_n``."""
        return float(np.arange(self.p.size) @ self.p)

    def __len__(self) -> int:
        return self.p.size


def as_probabilities(p) -> np.ndarray:
    """Validated float array from a distribution or anything array-like."""
    if isinstance(p, ProbabilityDistribution):
        return p.p
    return ProbabilityDistribution(p).p


def env_dim(gamma: float, d: int) -> int:
    """Environment truncation for the coherent states ``|-i sqrt(gamma) n>``, n < d.

    ``ceil(mu + 10 sqrt(mu) + 20)`` with ``mu = gamma (d-1)^2`` the Poisson mean
    of the largest amplitude; the discarded tail is far below 1e-12.
    """
    mu = float(gamma) * (d - 1) ** 2
    return int(math.ceil(mu + 10.0 * math.sqrt(mu) + 20.0))


def poisson_tail(mean: float, k: int) -> float:
    """``P(X >= k)`` for ``X ~ Poisson(mean)``, accurate deep into the tail."""
    if k <= 0:
        return 1.0
    if mean == 0:
        return 0.0
    return float(gammainc(k, mean))


def coherent_amplitudes(alpha: complex, d_env: int) -> np.ndarray:
    """``exp(-|alpha|^2/2) alpha^m / sqrt(m!)`` for ``m < d_env``, evaluated in log space."""
    if d_env < 1:
        raise ValueError("d_env must be a positive integer")
    alpha = complex(alpha)
    amps = np.zeros(d_env, dtype=complex)
    r = abs(alpha)
    if r == 0.0:
        amps[0] = 1.0
        return amps
    m = np.arange(d_env)
    log_mod = -0.5 * r * r + m * math.log(r) - 0.5 * gammaln(m + 1.0)
    amps[:] = np.exp(log_mod + 1j * m * math.atan2(alpha.imag, alpha.real))
    return amps


def coherent_vector(alpha: complex, d_env: int) -> FockVector:
    """Truncated coherent state ``|alpha>`` with its exact tail mass as deficit."""
    amps = coherent_amplitudes(alpha, d_env)
    return FockVector(amps, poisson_tail(abs(complex(alpha)) ** 2, d_env))


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Closed-form ``<alpha|beta>`` for untruncated coherent states."""
    alpha, beta = complex(alpha), complex(beta)
    # -(|a|^2+|b|^2)/2 + conj(a) b, rewritten to avoid cancellation at large moduli
    exponent = -0.5 * abs(alpha - beta) ** 2 + 1j * (alpha.conjugate() * beta).imag
    return complex(np.exp(exponent))


def gram_matrix(amplitudes) -> GramMatrix:
    """Gram matrix of the coherent states with the given complex amplitudes."""
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size == 0:
        raise ValueError("need at least one amplitude")
    diff = a[None, :] - a[:, None]
    phase = (a.conj()[:, None] * a[None, :]).imag
    G = np.exp(-0.5 * np.abs(diff) ** 2 + 1j * phase)
    return GramMatrix(G)


def dephasing_amplitudes(gamma: float, d: int) -> np.ndarray:
    """Environment amplitudes ``-i sqrt(gamma) n`` of the dephasing dilation."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return -1j * math.sqrt(gamma) * np.arange(d)


def dephasing_gram(gamma: float, d: int) -> np.ndarray:
    """Real Gram matrix ``exp(-gamma (m-n)^2 / 2)`` of the dephasing environment states."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    n = np.arange(d)
    return np.exp(-0.5 * gamma * (n[:, None] - n[None, :]) ** 2)
