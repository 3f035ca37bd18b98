"""Quantum Markov chain predicates on tripartite states ``S (x) E' (x) F'``.

A state is a Markov chain in the order ``S - E' - F'`` exactly when the
conditional mutual information ``I(S;F'|E')`` vanishes.  It is symmetric when
both ``S - E' - F'`` and ``S - F' - E'`` hold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .entropy import (
    MAX_DENSE_DIM,
    REGISTERS,
    CQState,
    DensityMatrix,
    TripartiteState,
    conditional_mutual_information,
)
from .fock import FockVector, as_probabilities

QMC_TOL = 1e-9
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class MarkovOrder:
    """Register order of a chain, e.g. ``("S", "E", "F")`` for ``S - E' - F'``."""

    chain: tuple

    def __post_init__(self):
        chain = tuple(self.chain)
        if len(chain) != 3 or len(set(chain)) != 3 or not set(chain) <= set(REGISTERS):
            raise ValueError(f"order must be three distinct labels from {REGISTERS}, got {chain}")
        object.__setattr__(self, "chain", chain)

    @classmethod
    def parse(cls, text: str) -> MarkovOrder:
        """``"S-E-F"`` -> ``MarkovOrder(("S", "E", "F"))``."""
        return cls(tuple(part.strip().rstrip("'") for part in text.split("-")))

    @property
    def middle(self) -> str:
        return self.chain[1]

    def __str__(self) -> str:
        return "-".join(self.chain)


S_E_F = MarkovOrder(("S", "E", "F"))
S_F_E = MarkovOrder(("S", "F", "E"))


def is_qmc(state: TripartiteState, order: MarkovOrder = S_E_F, tol: float = QMC_TOL,
           cap: int = MAX_DENSE_DIM) -> tuple[bool, float]:
    """Whether ``state`` is a Markov chain in ``order``, with the conditional mutual information."""
    cmi = conditional_mutual_information(state, given=order.middle, cap=cap)
    return cmi <= tol, cmi


def is_sqmc(state: TripartiteState, tol: float = QMC_TOL, cap: int = MAX_DENSE_DIM) -> bool:
    return is_qmc(state, S_E_F, tol, cap)[0] and is_qmc(state, S_F_E, tol, cap)[0]


def _kron3(a, b, c) -> np.ndarray:
    return np.kron(np.kron(a, b), c)


def _basis_projector(n: int, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[n, n] = 1.0
    return out


def _densities(mats) -> list:
    return [m.entries if isinstance(m, DensityMatrix) else DensityMatrix(m).entries for m in mats]


def qmc_example(p, etas) -> TripartiteState:
    """``sum_n p_n |n><n| (x) |n><n| (x) eta_n``: Markov in the order ``S - E' - F'``."""
    p = as_probabilities(p)
    etas = _densities(etas)
    k, df = p.size, etas[0].shape[0]
    rho = sum(pn * _kron3(_basis_projector(n, k), _basis_projector(n, k), eta)
              for n, (pn, eta) in enumerate(zip(p, etas)))
    return TripartiteState.from_array(rho, (k, k, df))


def qmc_example_reversed(p, xis) -> TripartiteState:
    """``sum_n p_n |n><n| (x) xi_n (x) |n><n|``: Markov in the order ``S - F' - E'``."""
    p = as_probabilities(p)
    xis = _densities(xis)
    k, de = p.size, xis[0].shape[0]
    rho = sum(pn * _kron3(_basis_projector(n, k), xi, _basis_projector(n, k))
              for n, (pn, xi) in enumerate(zip(p, xis)))
    return TripartiteState.from_array(rho, (k, de, k))


def sqmc_example(p, omegas) -> TripartiteState:
    """``sum_n p_n Omega_n (x) |n><n| (x) |n><n|``: Markov in both orders."""
    p = as_probabilities(p)
    omegas = _densities(omegas)
    k, ds = p.size, omegas[0].shape[0]
    rho = sum(pn * _kron3(om, _basis_projector(n, k), _basis_projector(n, k))
              for n, (pn, om) in enumerate(zip(p, omegas)))
    return TripartiteState.from_array(rho, (ds, k, k))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Density matrix ``A A^dag / Tr`` with Ginibre ``A`` of the given rank (Hilbert-Schmidt measure)."""
    rank = dim if rank is None else rank
    A = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    return unitary_group.rvs(dim, random_state=rng)


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random isometry ``C^d_in -> C^d_out`` (first columns of a Haar unitary)."""
    if d_out < d_in:
        raise ValueError(f"an isometry needs d_out >= d_in, got {d_in} -> {d_out}")
    return random_unitary(d_out, rng)[:, :d_in]


def apply_isometry(rho_se: np.ndarray, dims: tuple, V: np.ndarray, out_dims: tuple) -> TripartiteState:
    """``(id_S (x) V) rho_SE (id_S (x) V)^dag`` with ``V: E -> E' (x) F'``."""
    ds, de = dims
    de2, df = out_dims
    V = np.asarray(V, dtype=complex)
    if V.shape != (de2 * df, de):
        raise ValueError(f"isometry shape {V.shape} does not map {de} -> {de2}x{df}")
    resid = float(np.max(np.abs(V.conj().T @ V - np.eye(de))))
    if resid > 1e-10:
        raise ValueError(f"V is not an isometry (residual {resid:.3e})")
    W = np.kron(np.eye(ds), V)
    return TripartiteState.from_array(W @ np.asarray(rho_se) @ W.conj().T, (ds, de2, df))


def _pure_vectors(cq: CQState) -> np.ndarray:
    if cq.is_pure:
        cols = [c.amplitudes / np.linalg.norm(c.amplitudes) for c in cq.conditionals]
    else:
        cols = []
        for c in cq.conditionals:
            lam, U = np.linalg.eigh(c.entries)
            if lam[-1] < 1.0 - 1e-10:
                raise ValueError(f"conditional is mixed (largest eigenvalue {lam[-1]:.3e})")
            cols.append(U[:, -1])
    return np.stack(cols, axis=1)


def orthogonality_defect(cq: CQState) -> float:
    """Largest overlap ``|<e_m|e_n>|``, ``m != n``, among pure conditionals."""
    E = _pure_vectors(cq)
    G = np.abs(E.conj().T @ E)
    np.fill_diagonal(G, 0.0)
    return float(G.max()) if G.size > 1 else 0.0


def copying_isometry(vectors: np.ndarray) -> np.ndarray:
    """``V = sum_l |e_l, f_l><e_l|`` over an orthonormal basis that starts with ``vectors``."""
    de = vectors.shape[0]
    # complete the given orthonormal columns to a basis of E
    Q, _ = np.linalg.qr(np.hstack([vectors, np.eye(de, dtype=complex)]))
    basis = np.hstack([vectors, Q[:, vectors.shape[1]:de]])
    V = np.zeros((de * de, de), dtype=complex)
    for l in range(de):
        f = np.zeros(de)
        f[l] = 1.0
        V += np.outer(np.kron(basis[:, l], f), basis[:, l].conj())
    return V


def sqmci_example_isometry(sigma_se: CQState, tol: float = ORTHO_TOL) -> TripartiteState:
    """Apply the copying isometry to a cq state whose conditionals are orthogonal pure states.

    The result is ``sum_n p_n |n><n| (x) |e_n><e_n| (x) |f_n><f_n|``.
    """
    defect = orthogonality_defect(sigma_se)
    if defect > tol:
        raise ValueError(
            f"conditionals are not orthogonal (largest overlap {defect:.3e}); "
            "the copying isometry does not produce a symmetric Markov chain"
        )
    E = _pure_vectors(sigma_se)
    V = copying_isometry(E)
    de = E.shape[0]
    return apply_isometry(sigma_se.to_dense(), (sigma_se.probs.dim, de), V, (de, de))


@dataclass(frozen=True)
class HalvingReport:
    i_se: float
    i_sf: float
    residual: float
    holds: bool

    @property
    def half_sum(self) -> float:
        return 0.5 * (self.i_se + self.i_sf)


def sqmci_halving_check(state: TripartiteState, tol: float = QMC_TOL) -> HalvingReport:
    """For a symmetric Markov chain, ``(I(S;E') + I(S;F')) / 2 == I(S;E')``."""
    if not is_sqmc(state, tol):
        raise ValueError("state is not a symmetric quantum Markov chain")
    i_se = state.mutual_information("S", "E")
    i_sf = state.mutual_information("S", "F")
    residual = abs(0.5 * (i_se + i_sf) - i_se)
    return HalvingReport(i_se, i_sf, residual, residual <= tol)


def squashed_information_sum(state: TripartiteState) -> float:
    """``I(S;E') + I(S;F')``, the quantity a squashing isometry is judged by."""
    return state.mutual_information("S", "E") + state.mutual_information("S", "F")


def pure_cq(p, vectors) -> CQState:
    """cq state with pure conditionals given as columns of ``vectors``."""
    vectors = np.asarray(vectors, dtype=complex)
    conds = tuple(FockVector(v / np.linalg.norm(v)) for v in vectors.T)
    return CQState(p, conds)
