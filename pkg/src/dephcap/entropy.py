"""Von Neumann entropy and the information quantities built from it.

All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import entr

from .fock import FockVector, GramMatrix, ProbabilityDistribution, as_probabilities

HERMITIAN_REJECT = 1e-9
TRACE_TOL = 1e-10
LN2 = np.log(2.0)
MAX_DENSE_DIM = 4096

REGISTERS = ("S", "E", "F")


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix.

    Inputs whose Hermiticity residual is below 1e-9 are symmetrized on
    construction; anything worse is rejected.
    """

    entries: np.ndarray
    psd_tolerance: float = 1e-10
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
            raise ValueError(f"density matrix must be square and non-empty, got {rho.shape}")
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERMITIAN_REJECT:
            raise ValueError(f"matrix is not Hermitian (residual {herm:.3e})")
        rho = 0.5 * (rho + rho.conj().T)
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {tr!r}, expected 1 within {TRACE_TOL}")
        lam = np.linalg.eigvalsh(rho)
        if lam[0] < -self.psd_tolerance:
            raise ValueError(f"matrix is not PSD (min eigenvalue {lam[0]:.3e})")
        rho.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def pure(cls, vector) -> DensityMatrix:
        v = vector.amplitudes if isinstance(vector, FockVector) else np.asarray(vector, complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def diagonal(cls, p) -> DensityMatrix:
        return cls(np.diag(as_probabilities(p)).astype(complex))


DensityLike = Union[DensityMatrix, np.ndarray]


def as_density(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def entropy_from_spectrum(lam) -> float:
    """``-sum lam log2 lam`` with roundoff negatives clipped to zero."""
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, 1.0)
    return float(np.sum(entr(lam)) / LN2)


def shannon_entropy(p) -> float:
    p = p.p if isinstance(p, ProbabilityDistribution) else np.asarray(p, dtype=float)
    return entropy_from_spectrum(p)


def binary_entropy(x: float) -> float:
    return entropy_from_spectrum([x, 1.0 - x])


def von_neumann_entropy(rho: DensityLike) -> float:
    """Entropy in bits of a density matrix (validated if given as an array)."""
    rho = as_density(rho)
    lam = rho.eigenvalues
    if lam[0] < -rho.psd_tolerance:
        raise ValueError(f"negative eigenvalue {lam[0]:.3e} beyond tolerance")
    return entropy_from_spectrum(lam)


def weighted_gram(p, G) -> np.ndarray:
    """``sqrt(p_m p_n) G[m, n]``; its spectrum is the nonzero spectrum of the mixture."""
    p = np.asarray(p.p if isinstance(p, ProbabilityDistribution) else p, dtype=float)
    G = G.entries if isinstance(G, GramMatrix) else np.asarray(G)
    if G.shape != (p.size, p.size):
        raise ValueError(f"Gram matrix shape {G.shape} does not match {p.size} weights")
    s = np.sqrt(p)
    return s[:, None] * G * s[None, :]


def entropy_of_pure_mixture(p, G) -> float:
    """Entropy of ``sum_n p_n |psi_n><psi_n|`` from the Gram matrix of the ``psi_n``.

    Never forms the (possibly huge) mixture itself.
    """
    p = as_probabilities(p)
    M = weighted_gram(p, G)
    return entropy_from_spectrum(np.linalg.eigvalsh(M))


def pure_state_spectrum(vectors: np.ndarray, p) -> np.ndarray:
    """Nonzero spectrum of ``sum_n p_n |v_n><v_n|`` for columns ``v_n`` of ``vectors``.

    Uses singular values of the tall factor, so a large ambient dimension adds no
    spurious roundoff eigenvalues.
    """
    X = np.asarray(vectors) * np.sqrt(np.asarray(p, dtype=float))[None, :]
    return np.linalg.svd(X, compute_uv=False) ** 2


@dataclass(frozen=True)
class CQState:
    """Classical-quantum state ``sum_n p_n |n><n| (x) rho_n``.

    Conditionals are either all :class:`DensityMatrix` or all pure
    :class:`FockVector` (the latter keeps large environments cheap).
    """

    probs: ProbabilityDistribution
    conditionals: tuple

    def __post_init__(self):
        probs = self.probs
        if not isinstance(probs, ProbabilityDistribution):
            probs = ProbabilityDistribution(probs)
        conds = tuple(self.conditionals)
        if len(conds) != probs.dim:
            raise ValueError(f"{len(conds)} conditionals for {probs.dim} labels")
        if all(isinstance(c, FockVector) for c in conds):
            pass
        else:
            conds = tuple(as_density(c) for c in conds)
        dims = {c.dim for c in conds}
        if len(dims) != 1:
            raise ValueError(f"conditionals have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "conditionals", conds)

    @property
    def is_pure(self) -> bool:
        return isinstance(self.conditionals[0], FockVector)

    @property
    def env_dim(self) -> int:
        return self.conditionals[0].dim

    def conditional_matrix(self, n: int) -> np.ndarray:
        c = self.conditionals[n]
        if isinstance(c, FockVector):
            return np.outer(c.amplitudes, c.amplitudes.conj())
        return c.entries

    def average_entropy(self) -> float:
        """Entropy of the averaged conditional state."""
        p = self.probs.p
        if self.is_pure:
            V = np.stack([c.amplitudes for c in self.conditionals], axis=1)
            return entropy_from_spectrum(pure_state_spectrum(V, p))
        avg = sum(pn * c.entries for pn, c in zip(p, self.conditionals))
        return entropy_from_spectrum(np.linalg.eigvalsh(avg))

    def conditional_entropies(self) -> np.ndarray:
        if self.is_pure:
            return np.zeros(self.probs.dim)
        return np.array([von_neumann_entropy(c) for c in self.conditionals])

    def joint_entropy(self) -> float:
        """Block-diagonal shortcut ``H(p) + sum p_n S(rho_n)``."""
        return shannon_entropy(self.probs) + float(self.probs.p @ self.conditional_entropies())

    def to_dense(self) -> np.ndarray:
        """``sum_n p_n |n><n| (x) rho_n`` as a (d * d_env)-square matrix."""
        d, de = self.probs.dim, self.env_dim
        if d * de > MAX_DENSE_DIM:
            raise ValueError(f"dense dimension {d * de} exceeds cap {MAX_DENSE_DIM}")
        out = np.zeros((d * de, d * de), dtype=complex)
        for n, pn in enumerate(self.probs.p):
            out[n * de:(n + 1) * de, n * de:(n + 1) * de] = pn * self.conditional_matrix(n)
        return out


def holevo_information(cq: CQState) -> float:
    """``S(sum p_n rho_n) - sum p_n S(rho_n)``, i.e. ``I(S;E)`` of the cq state."""
    val = cq.average_entropy() - float(cq.probs.p @ cq.conditional_entropies())
    return max(val, 0.0)


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduce ``rho`` on ``prod(dims)`` to the factors listed in ``keep`` (in order)."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in traced:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    k = int(np.prod([dims[i] for i in keep])) if keep else 1
    return red.reshape(k, k)


def subsystem_entropy(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> float:
    if not keep:
        return 0.0
    red = partial_trace(rho, dims, keep)
    red = 0.5 * (red + red.conj().T)
    return entropy_from_spectrum(np.linalg.eigvalsh(red))


def mutual_information(rho: np.ndarray, dims: Sequence[int], a: Sequence[int], b: Sequence[int]) -> float:
    """``I(A;B) = S(A) + S(B) - S(AB)`` for groups of tensor factors ``a`` and ``b``."""
    a, b = list(a), list(b)
    return (
        subsystem_entropy(rho, dims, a)
        + subsystem_entropy(rho, dims, b)
        - subsystem_entropy(rho, dims, a + b)
    )


@dataclass(frozen=True)
class TripartiteState:
    """Density matrix on ``S (x) E' (x) F'`` with declared factor dimensions."""

    rho: DensityMatrix
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"need three positive factor dimensions, got {dims}")
        rho = as_density(self.rho)
        if int(np.prod(dims)) != rho.dim:
            raise ValueError(f"factor dimensions {dims} do not multiply to {rho.dim}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_array(cls, rho, dims) -> TripartiteState:
        return cls(DensityMatrix(rho), tuple(dims))

    def entropy(self, registers: str) -> float:
        """Entropy of the marginal on the given register labels, e.g. ``"SE"``."""
        return subsystem_entropy(self.rho.entries, self.dims, _indices(registers))

    def mutual_information(self, x: str, y: str) -> float:
        return mutual_information(self.rho.entries, self.dims, _indices(x), _indices(y))


def _indices(registers: str) -> list:
    out = []
    for r in registers:
        if r not in REGISTERS:
            raise ValueError(f"unknown register {r!r}; expected one of {REGISTERS}")
        out.append(REGISTERS.index(r))
    return out


def conditional_mutual_information(
    state: TripartiteState, given: str = "E", cap: int = MAX_DENSE_DIM
) -> float:
    """``I(X;Y|Z)`` with ``Z = given`` and ``X, Y`` the two remaining registers.

    ``given="E"`` yields ``I(S;F'|E')``, ``given="F"`` yields ``I(S;E'|F')``.
    """
    if given not in REGISTERS:
        raise ValueError(f"conditioning register must be one of {REGISTERS}, got {given!r}")
    if state.rho.dim > cap:
        raise ValueError(f"state dimension {state.rho.dim} exceeds cap {cap}")
    x, y = [r for r in REGISTERS if r != given]
    return (
        state.entropy(x + given)
        + state.entropy(y + given)
        - state.entropy(x + y + given)
        - state.entropy(given)
    )
