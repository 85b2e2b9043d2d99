"""Cumulant-truncated mean-field dynamics for two- and three-domain chains.

The closed ODE systems evolve expectation values of the collective
operators: the inversions ⟨Jz_i⟩, the reservoir-pair exchange moments

    A = J+_1 J-_2 + J-_1 J+_2,   B = J+_2 J-_3 + J-_2 J+_3,
    C = J+_1 J-_3 + J-_1 J+_3,

the Jz cross-correlators, and (for three domains) the mixed triple moments
⟨Jz_1 B⟩, ⟨Jz_3 A⟩, ⟨Jz_2 C⟩ and ⟨Jz_1 Jz_2 Jz_3⟩ — thirteen real variables
in total, four in two-domain mode.  Higher moments are factorized
(⟨Jz_i^2⟩ → ⟨Jz_i⟩², ⟨Jz_i^2 Jz_j⟩ → ⟨Jz_i⟩⟨Jz_i Jz_j⟩, pair moments times
spectator Jz into products, ⟨AB⟩ → ⟨A⟩⟨B⟩), which closes the hierarchy and
makes domain sizes up to ~1e8 spins tractable.

The equations below were re-derived from the Lindblad adjoint with the
factorization set above and cross-checked against the exact engine: at any
product of Dicke states the factorizations are exact equalities, so every
right-hand side must (and does) match the exact time derivative there.

Variables are stored raw (unnormalized); magnitudes reach ~N1^2 ~ 1e16, so
right-hand sides use exactly factored inversion terms
(N/2 + u)(N/2 + 1 - u) and compensated summation to avoid catastrophic
cancellation near the fixed points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .lindblad import DomainChain, Trajectory

__all__ = [
    "MeanFieldState",
    "MeanFieldOverflow",
    "THREE_DOMAIN_LABELS",
    "TWO_DOMAIN_LABELS",
    "mf_init",
    "mf_rhs",
    "mf_evolve",
]

THREE_DOMAIN_LABELS = (
    "jz1", "jz2", "jz3", "a", "b", "c",
    "jz1jz2", "jz2jz3", "jz1jz3",
    "jz1_b", "jz3_a", "jz2_c", "jz1jz2jz3",
)
TWO_DOMAIN_LABELS = ("jz1", "jz2", "a", "jz1jz2")


@dataclass
class MeanFieldState:
    """Cumulant variables of a two- or three-domain chain.

    ``values`` is ordered per :data:`THREE_DOMAIN_LABELS` (13 entries) or
    :data:`TWO_DOMAIN_LABELS` (4 entries).
    """

    sizes: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        self.sizes = tuple(int(n) for n in self.sizes)
        self.values = np.asarray(self.values, dtype=float)
        expected = 13 if len(self.sizes) == 3 else 4
        if len(self.sizes) not in (2, 3):
            raise ValueError(f"mean-field mode supports 2 or 3 domains, got {len(self.sizes)}")
        if self.values.shape != (expected,):
            raise ValueError(
                f"{len(self.sizes)}-domain state needs {expected} values, "
                f"got shape {self.values.shape}"
            )

    @property
    def labels(self) -> tuple[str, ...]:
        return THREE_DOMAIN_LABELS if len(self.sizes) == 3 else TWO_DOMAIN_LABELS

    @property
    def nbar(self) -> tuple[float, ...]:
        """Per-domain Casimir constants (N/2)(N/2 + 1)."""
        return tuple((n / 2) * (n / 2 + 1) for n in self.sizes)

    @property
    def jz(self) -> np.ndarray:
        return self.values[: len(self.sizes)]

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.values))


def _check_chain(chain: DomainChain) -> float:
    """Validate a chain for mean-field use; returns the uniform rate."""
    if chain.n_domains not in (2, 3):
        raise ValueError(
            f"no closed mean-field system for {chain.n_domains} domains "
            "(supported: 2 or 3)"
        )
    g = chain.gammas[0]
    if any(abs(gi - g) > 1e-12 * abs(g) for gi in chain.gammas):
        raise ValueError(
            f"mean-field equations assume one uniform coupling rate, got {chain.gammas}"
        )
    if any(t != 0 for t in chain.temperatures):
        raise ValueError("mean-field backend supports zero-temperature reservoirs only")
    return g


def mf_init(chain: DomainChain, initial_relative_inversions) -> MeanFieldState:
    """State with ⟨Jz_i⟩ = x_i N_i and no initial cross-domain correlations.

    Pair moments A, B, C and the mixed triples start at zero; Jz products
    start as products of the means.
    """
    _check_chain(chain)
    xs = tuple(float(x) for x in initial_relative_inversions)
    if len(xs) != chain.n_domains:
        raise ValueError(f"need {chain.n_domains} inversions, got {len(xs)}")
    if any(abs(x) > 0.5 + 1e-12 for x in xs):
        raise ValueError(f"relative inversions must lie in [-1/2, 1/2], got {xs}")
    jz = [x * n for x, n in zip(xs, chain.sizes)]
    if chain.n_domains == 2:
        values = [jz[0], jz[1], 0.0, jz[0] * jz[1]]
    else:
        values = [
            jz[0], jz[1], jz[2],
            0.0, 0.0, 0.0,
            jz[0] * jz[1], jz[1] * jz[2], jz[0] * jz[2],
            0.0, 0.0, 0.0,
            jz[0] * jz[1] * jz[2],
        ]
    return MeanFieldState(chain.sizes, np.array(values))


def _decay_term(j, u):
    # <J+ J-> under the closure: Nbar - <Jz>^2 + <Jz> = (j + u)(j + 1 - u),
    # the factored form is exact at the ground state where both forms vanish.
    return (j + u) * (j + 1.0 - u)


def _rhs2(y, g, j1, j2, nb1, nb2):
    jz1, jz2, a, z12 = y
    t1 = _decay_term(j1, jz1)
    t2 = _decay_term(j2, jz2)
    da = g * math.fsum(
        (jz1 * a, 2 * jz1 * nb2, -2 * jz1 * z12, -a,
         jz2 * a, 2 * jz2 * nb1, -2 * jz2 * z12, 4 * z12)
    )
    return np.array([-g * (t1 + a / 2), -g * (t2 + a / 2), da, -da / 2])


def _rhs3(y, g, j1, j2, j3, nb1, nb2, nb3):
    jz1, jz2, jz3, a, b, c, z12, z23, z13, z1b, z3a, z2c, z123 = y
    t1 = _decay_term(j1, jz1)
    t2 = _decay_term(j2, jz2)
    t3 = _decay_term(j3, jz3)
    d = np.empty(13)
    d[0] = -g * (t1 + a / 2)
    d[1] = -g * (2 * t2 + a / 2 + b / 2)
    d[2] = -g * (t3 + b / 2)
    d[3] = g * math.fsum(
        (jz1 * a, 2 * jz1 * nb2, -2 * jz1 * z12,
         2 * jz2 * a, 2 * jz2 * nb1, -2 * jz2 * z12,
         4 * z12, z2c, -1.5 * a)
    )
    d[4] = g * math.fsum(
        (2 * jz2 * b, 2 * jz2 * nb3, -2 * jz2 * z23,
         jz3 * b, 2 * jz3 * nb2, -2 * jz3 * z23,
         4 * z23, z2c, -1.5 * b)
    )
    d[5] = g * math.fsum((jz1 * c, z1b, jz3 * c, z3a, -c))
    d[6] = g * math.fsum(
        (-0.5 * a * (jz1 + jz2 - 1), -nb1 * jz2, -2 * nb2 * jz1,
         z12 * jz1, 2 * z12 * jz2, -3 * z12, -0.5 * z1b)
    )
    d[7] = g * math.fsum(
        (-0.5 * b * (jz2 + jz3 - 1), -nb3 * jz2, -2 * nb2 * jz3,
         2 * z23 * jz2, z23 * jz3, -3 * z23, -0.5 * z3a)
    )
    d[8] = g * math.fsum(
        (-nb1 * jz3, z13 * jz1, -nb3 * jz1, z13 * jz3,
         -2 * z13, -0.5 * z3a, -0.5 * z1b)
    )
    d[9] = g * math.fsum(
        (-nb1 * b, -0.5 * a * b,
         z1b * (jz1 + 2 * jz2 + jz3 - 2.5),
         z2c * (jz1 - 1),
         2 * z123 * (2 - jz2 - jz3), 2 * z12 * nb3, 2 * z13 * nb2)
    )
    d[10] = g * math.fsum(
        (-nb3 * a, -0.5 * a * b,
         z3a * (jz3 + 2 * jz2 + jz1 - 2.5),
         z2c * (jz3 - 1),
         2 * z123 * (2 - jz1 - jz2), 2 * z23 * nb1, 2 * z13 * nb2)
    )
    d[11] = g * math.fsum(
        (z2c * (jz1 + 2 * jz2 + jz3 - 3),
         (z1b + z3a) * (jz2 - 1),
         -2 * c * nb2, -0.5 * c * a, -0.5 * c * b)
    )
    d[12] = g * math.fsum(
        (-nb1 * z23, -2 * nb2 * z13, -nb3 * z12,
         z123 * (jz1 + 2 * jz2 + jz3 - 4),
         -0.5 * z1b * (jz2 + jz3 - 1), -0.5 * z3a * (jz1 + jz2 - 1))
    )
    return d


def mf_rhs(state: MeanFieldState, chain: DomainChain) -> np.ndarray:
    """Time derivative of every cumulant variable, ordered as the state."""
    g = _check_chain(chain)
    if state.sizes != chain.sizes:
        raise ValueError(f"state sizes {state.sizes} do not match chain {chain.sizes}")
    js = [n / 2 for n in chain.sizes]
    nb = state.nbar
    if chain.n_domains == 2:
        return _rhs2(state.values, g, js[0], js[1], nb[0], nb[1])
    return _rhs3(state.values, g, js[0], js[1], js[2], *nb)


def _component_scales(sizes) -> np.ndarray:
    """Magnitude bounds per variable, for absolute-tolerance scaling."""
    ns = [float(n) for n in sizes]
    nb = [(n / 2) * (n / 2 + 1) for n in ns]
    if len(ns) == 2:
        return np.array([ns[0], ns[1], math.sqrt(nb[0] * nb[1]), ns[0] * ns[1]])
    return np.array(
        [
            ns[0], ns[1], ns[2],
            math.sqrt(nb[0] * nb[1]), math.sqrt(nb[1] * nb[2]), math.sqrt(nb[0] * nb[2]),
            ns[0] * ns[1], ns[1] * ns[2], ns[0] * ns[2],
            ns[0] * math.sqrt(nb[1] * nb[2]),
            ns[2] * math.sqrt(nb[0] * nb[1]),
            ns[1] * math.sqrt(nb[0] * nb[2]),
            ns[0] * ns[1] * ns[2],
        ]
    )


class MeanFieldOverflow(RuntimeError):
    """Cross-moments left the validity regime (non-finite values)."""


def mf_evolve(
    state0: MeanFieldState,
    chain: DomainChain,
    t_samples,
    rtol: float = 1e-10,
    atol_scale: float = 1e-8,
) -> Trajectory:
    """Integrate the closed moment system and sample it on ``t_samples``.

    Uses a stiff-capable adaptive solver (LSODA): the relaxation rates span
    a factor ~N1/N3, far beyond what an explicit method can track over the
    full migration cascade.  Per-component absolute tolerances scale with
    each variable's magnitude bound.
    """
    g = _check_chain(chain)
    if state0.sizes != chain.sizes:
        raise ValueError(f"state sizes {state0.sizes} do not match chain {chain.sizes}")
    t_samples = np.asarray(t_samples, dtype=float)
    if t_samples.ndim != 1 or t_samples.size == 0:
        raise ValueError("t_samples must be a non-empty 1-D grid")
    if np.any(np.diff(t_samples) <= 0) or t_samples[0] < 0:
        raise ValueError("t_samples must be non-negative and strictly increasing")

    js = [n / 2 for n in chain.sizes]
    nb = state0.nbar
    if chain.n_domains == 2:
        fun = lambda _t, y: _rhs2(y, g, js[0], js[1], nb[0], nb[1])
    else:
        fun = lambda _t, y: _rhs3(y, g, js[0], js[1], js[2], *nb)

    sol = solve_ivp(
        fun,
        (0.0, float(t_samples[-1])),
        state0.values,
        method="LSODA",
        t_eval=t_samples,
        rtol=rtol,
        atol=atol_scale * _component_scales(chain.sizes),
    )
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise MeanFieldOverflow(
            f"mean-field integration failed at t = {sol.t[-1] if sol.t.size else 0}: "
            f"{sol.message}"
        )

    m = chain.n_domains
    n_t = sol.t.size
    jz = sol.y[:m].T.copy()
    j2 = np.tile(np.asarray(nb), (n_t, 1))
    return Trajectory(
        times=sol.t.copy(),
        sizes=chain.sizes,
        jz=jz,
        trace_error=np.zeros(n_t),
        purity=np.full(n_t, np.nan),
        j2=j2,
    )
