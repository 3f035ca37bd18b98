"""Invariant suites run by ``dephcap verify``.

Each suite evaluates one family of identities on random or fixed inputs and
reports the worst residual against its tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import (
    OptimizerConfig,
    beamsplitter_bound_via_pipeline,
    capacity_objective,
    optimize_capacity,
    reverse_coherent_information,
)
from .channels import (
    FAMILIES,
    QubitSquashParams,
    beamsplitter_kraus,
    complementary_from_kraus,
    dephasing_apply,
    dephasing_kraus,
    symmetric_qubit_kraus,
)
from .entropy import (
    TripartiteState,
    conditional_mutual_information,
    entropy_of_pure_mixture,
    von_neumann_entropy,
)
from .fock import coherent_vector, dephasing_gram, env_dim
from .markov import (
    S_E_F,
    S_F_E,
    is_qmc,
    pure_cq,
    qmc_example,
    qmc_example_reversed,
    random_density,
    sqmc_example,
    sqmci_example_isometry,
    sqmci_halving_check,
)

DEFAULT_GAMMAS = (0.0, 0.5, 2.0, 6.0, 12.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<14} worst={self.worst:.3e}  tol={self.tolerance:.1e}  {self.detail}".rstrip()


def _suite(name: str, tol: float, fn: Callable[[], tuple[float, str]]) -> SuiteResult:
    try:
        worst, detail = fn()
    except ValueError as exc:
        return SuiteResult(name, False, math.nan, tol, f"precondition failed: {exc}")
    return SuiteResult(name, bool(worst <= tol), worst, tol, detail)


def kraus_suite(gammas, d: int = 8) -> tuple[float, str]:
    """Completeness of every Kraus family and closed-form vs Kraus-sum dephasing."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for g in gammas:
        ch = dephasing_kraus(g, d)
        worst = max(worst, ch.completeness_residual)
        rho = random_density(d, rng)
        worst = max(worst, float(np.max(np.abs(dephasing_apply(rho, g).entries - ch.apply(rho)))))
    for fam in FAMILIES:
        for th, ph in rng.uniform([0, 0], [math.pi, 2 * math.pi], size=(20, 2)):
            worst = max(worst, symmetric_qubit_kraus(QubitSquashParams(fam, th, ph)).completeness_residual)
    worst = max(worst, beamsplitter_kraus(1 / math.sqrt(2), 12).completeness_residual)
    return worst, f"{len(gammas)} dephasing settings, 40 qubit channels, 1 beamsplitter"


def ssa_suite(samples: int = 500) -> tuple[float, str]:
    """Strong subadditivity: ``I(S;F'|E') >= 0`` on random 2x2x2 states; reports ``-min CMI``."""
    rng = np.random.default_rng(12)
    cmis = [conditional_mutual_information(TripartiteState.from_array(random_density(8, rng), (2, 2, 2)))
            for _ in range(samples)]
    return max(0.0, -min(cmis)), f"min CMI {min(cmis):.3e} over {samples} states"


def markov_suite() -> tuple[float, str]:
    rng = np.random.default_rng(13)
    p = rng.dirichlet(np.ones(3))
    vals = [
        is_qmc(qmc_example(p, [random_density(2, rng) for _ in p]), S_E_F)[1],
        is_qmc(qmc_example_reversed(p, [random_density(2, rng) for _ in p]), S_F_E)[1],
    ]
    sq = sqmc_example(p, [random_density(2, rng) for _ in p])
    vals += [is_qmc(sq, S_E_F)[1], is_qmc(sq, S_F_E)[1], sqmci_halving_check(sq).residual]
    copied = sqmci_example_isometry(pure_cq(p, np.eye(3)))
    vals += [is_qmc(copied, S_E_F)[1], is_qmc(copied, S_F_E)[1], sqmci_halving_check(copied).residual]
    return max(abs(v) for v in vals), "example chains and halving identity"


def dual_path_suite(gammas) -> tuple[float, str]:
    """RCI vs Gram objective, Gram vs dense entropy, beamsplitter pipeline vs ``Q(gamma/2)``."""
    rng = np.random.default_rng(14)
    worst = 0.0
    for g in gammas:
        d = int(rng.integers(2, 7))
        p = rng.dirichlet(np.ones(d))
        worst = max(worst, abs(reverse_coherent_information(p, g, d) - capacity_objective(p, g, d)))
        de = env_dim(g, d)
        V = np.stack([coherent_vector(-1j * math.sqrt(g) * n, de).amplitudes for n in range(d)], axis=1)
        dense = (V * p) @ V.conj().T
        worst = max(worst, abs(entropy_of_pure_mixture(p, dephasing_gram(g, d)) - von_neumann_entropy(dense / np.trace(dense).real)))
    cfg = OptimizerConfig(multistarts=2)
    for g in gammas[:3]:
        a = beamsplitter_bound_via_pipeline(g, 4, cfg).bits
        b = optimize_capacity(g / 2, 4, cfg).bits
        worst = max(worst, abs(a - b))
    return worst, "three independent evaluation paths"


def concavity_suite(pairs: int = 200) -> tuple[float, str]:
    """``f(l p + (1-l) q) >= l f(p) + (1-l) f(q)``; reports the worst violation."""
    rng = np.random.default_rng(15)
    worst = 0.0
    for _ in range(pairs):
        d = int(rng.integers(2, 9))
        g = float(rng.uniform(0, 12))
        p, q = rng.dirichlet(np.ones(d), size=2)
        for lam in (0.25, 0.5, 0.75):
            mid = capacity_objective(lam * p + (1 - lam) * q, g, d)
            chord = lam * capacity_objective(p, g, d) + (1 - lam) * capacity_objective(q, g, d)
            worst = max(worst, chord - mid)
    return max(worst, 0.0), f"{pairs} pairs x 3 weights"


def complementary_suite(gammas) -> tuple[float, str]:
    """Complementary output depends only on the input diagonal."""
    rng = np.random.default_rng(16)
    worst = 0.0
    for g in gammas:
        ch = dephasing_kraus(g, 4)
        rho = random_density(4, rng)
        a = complementary_from_kraus(ch, rho).entries
        b = complementary_from_kraus(ch, np.diag(np.diag(rho))).entries
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst, "random inputs vs their diagonals"


def run_suites(gammas=DEFAULT_GAMMAS) -> list[SuiteResult]:
    gammas = tuple(float(g) for g in gammas)
    return [
        _suite("kraus", 1e-10, lambda: kraus_suite(gammas)),
        _suite("ssa", 1e-9, ssa_suite),
        _suite("markov", 1e-10, markov_suite),
        _suite("dual-path", 1e-9, lambda: dual_path_suite(gammas)),
        _suite("concavity", 1e-9, concavity_suite),
        _suite("complementary", 1e-10, lambda: complementary_suite(gammas)),
    ]
