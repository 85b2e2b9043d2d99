"""Exact master-equation dynamics of a dissipatively coupled domain chain.

The generator is

    drho/dt = -i w0 sum_i [Jz_i, rho]
              + sum_i (g_i/2) (nbar_i + 1) D[J-_i + J-_{i+1}] rho
              + sum_i (g_i/2)  nbar_i      D[J+_i + J+_{i+1}] rho

with D[O]rho = 2 O rho O† - O†O rho - rho O†O and nbar_i the Bose-Einstein
occupation of reservoir i at the transition frequency.  Each of the M-1
reservoirs couples one pair of neighboring domains through a shared
collective jump operator, which is what makes excitation migrate between
domains even at zero temperature.

The Liouvillian is applied matrix-free: the density matrix stays a dense
(dim x dim) array and the bidiagonal collective operators act on it as
sparse factors; no superoperator matrix is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.constants as const
import scipy.sparse as sparse

from .integrate import solve_dopri5
from .spin_algebra import (
    DensityState,
    collective_jz,
    collective_lowering,
    dicke_product_density,
    embed_operator,
)

__all__ = [
    "DomainChain",
    "Trajectory",
    "Observables",
    "ConvergenceError",
    "thermal_occupation",
    "liouvillian_apply",
    "evolve",
    "steady_state",
    "observables",
    "initial_state",
]


class ConvergenceError(RuntimeError):
    """Steady-state search hit its time cap before the residual dropped."""

    def __init__(self, time_reached: float, residual: float, eps: float):
        self.time_reached = time_reached
        self.residual = residual
        self.eps = eps
        super().__init__(
            f"no steady state by t = {time_reached:g}: "
            f"residual {residual:.3e} above threshold {eps:.3e}"
        )


@dataclass(frozen=True)
class DomainChain:
    """Physical configuration of the chain.

    ``sizes`` are the spin counts N_1..N_M; reservoir i couples domains i and
    i+1 with rate ``gammas[i]`` and temperature ``temperatures[i]`` (kelvin).
    ``omega0`` is the spin transition angular frequency; it only enters the
    dynamics through the coherent term (off by default, see
    ``include_hamiltonian``) and through the thermal occupations.
    """

    sizes: tuple[int, ...]
    gammas: tuple[float, ...]
    omega0: float = 1.0
    temperatures: tuple[float, ...] | None = None
    include_hamiltonian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if self.temperatures is None:
            object.__setattr__(self, "temperatures", (0.0,) * self.n_reservoirs)
        else:
            object.__setattr__(
                self, "temperatures", tuple(float(t) for t in self.temperatures)
            )
        if len(self.sizes) < 2:
            raise ValueError("a chain needs at least two domains")
        if any(n < 1 for n in self.sizes):
            raise ValueError(f"every domain needs at least one spin, got {self.sizes}")
        if len(self.gammas) != self.n_reservoirs:
            raise ValueError(
                f"{len(self.sizes)} domains require {self.n_reservoirs} coupling "
                f"rates, got {len(self.gammas)}"
            )
        if any(g <= 0 for g in self.gammas):
            raise ValueError(f"coupling rates must be positive, got {self.gammas}")
        if len(self.temperatures) != self.n_reservoirs:
            raise ValueError(
                f"{self.n_reservoirs} reservoirs require as many temperatures, "
                f"got {len(self.temperatures)}"
            )
        if any(t < 0 for t in self.temperatures):
            raise ValueError(f"temperatures must be >= 0, got {self.temperatures}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")

    @property
    def n_domains(self) -> int:
        return len(self.sizes)

    @property
    def n_reservoirs(self) -> int:
        return len(self.sizes) - 1

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.sizes)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def occupations(self) -> tuple[float, ...]:
        """Bose-Einstein occupation of each reservoir at omega0."""
        return tuple(thermal_occupation(self.omega0, t) for t in self.temperatures)


@dataclass
class Observables:
    """Per-domain expectations plus global state diagnostics."""

    jz: np.ndarray      # ⟨Jz_i⟩
    j2: np.ndarray      # ⟨J_i^2⟩
    purity: float
    trace: float


@dataclass
class Trajectory:
    """Time-stamped per-domain observables along one evolution."""

    times: np.ndarray
    sizes: tuple[int, ...]
    jz: np.ndarray                 # (n_times, M) raw ⟨Jz_i⟩
    trace_error: np.ndarray        # (n_times,) |tr(rho) - 1|
    purity: np.ndarray             # (n_times,) tr(rho^2); NaN for moment backends
    j2: np.ndarray | None = None   # (n_times, M) ⟨J_i^2⟩ when available

    @property
    def jz_norm(self) -> np.ndarray:
        """Normalized inversion ⟨Jz_i⟩ / N_i, in [-1/2, 1/2]."""
        return self.jz / np.asarray(self.sizes, dtype=float)

    def validate(self, slack: float = 1e-9) -> None:
        """Check monotone times and |⟨Jz_i⟩/N_i| <= 1/2 + slack.

        The default slack suits the exact engine; cumulant trajectories may
        overshoot the physical bound by the truncation error and should be
        checked with a looser slack.
        """
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        worst = float(np.max(np.abs(self.jz_norm)))
        if worst > 0.5 + slack:
            raise ValueError(
                f"normalized inversion escaped [-1/2, 1/2] by {worst - 0.5:.3e}"
            )


def thermal_occupation(omega0: float, temperature: float) -> float:
    """Bose-Einstein occupation 1/(exp(hbar*omega0/(kB*T)) - 1); 0 at T = 0.

    ``omega0`` is an angular frequency in rad/s when ``temperature`` is a
    physical kelvin value.
    """
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if omega0 <= 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    if temperature == 0:
        return 0.0
    x = const.hbar * omega0 / (const.k * temperature)
    return 1.0 / math.expm1(x)


class _ChainOperators:
    """Operators of one chain, prebuilt once and shared by all evolutions."""

    def __init__(self, chain: DomainChain):
        dims = chain.dims
        self.dims = dims
        self.dim = chain.dim
        self.jz_diag = []  # per-domain product-space Jz diagonals (real)
        for i, n in enumerate(chain.sizes):
            jz = embed_operator(collective_jz(n), i, dims)
            self.jz_diag.append(jz.matrix.diagonal().real)
        self.j_squared = [n / 2 * (n / 2 + 1) for n in chain.sizes]

        # Per reservoir: collective jump operator L = J-_i + J-_{i+1} and the
        # pieces needed for both the lowering and raising channels.  Small
        # product spaces apply operators as dense BLAS products; the sparse
        # path wins above a few dozen states (bidiagonal Kronecker factors).
        dense = self.dim <= 48
        self.lowering = []
        self.raising = []
        self.ldag_l = []
        self.l_ldag = []
        for i in range(chain.n_reservoirs):
            low = (
                embed_operator(collective_lowering(chain.sizes[i]), i, dims).matrix
                + embed_operator(
                    collective_lowering(chain.sizes[i + 1]), i + 1, dims
                ).matrix
            ).tocsr()
            parts = (low, low.conj().T.tocsr(),
                     (low.conj().T @ low).tocsr(), (low @ low.conj().T).tocsr())
            if dense:
                parts = tuple(p.toarray() for p in parts)
            self.lowering.append(parts[0])
            self.raising.append(parts[1])
            self.ldag_l.append(parts[2])
            self.l_ldag.append(parts[3])

        hz = sum(d for d in self.jz_diag) * chain.omega0
        # The diagonal Hamiltonian makes the commutator an elementwise phase.
        self.ham_phase = -1j * (hz[:, None] - hz[None, :])

        self.rates_down = []
        self.rates_up = []
        for g, nbar in zip(chain.gammas, chain.occupations()):
            self.rates_down.append(0.5 * g * (nbar + 1.0))
            self.rates_up.append(0.5 * g * nbar)


@lru_cache(maxsize=64)
def _chain_operators(chain: DomainChain) -> _ChainOperators:
    return _ChainOperators(chain)


def _as_rho(rho, chain: DomainChain) -> np.ndarray:
    if isinstance(rho, DensityState):
        if tuple(rho.dims) != chain.dims:
            raise ValueError(
                f"state dims {rho.dims} do not match chain dims {chain.dims}"
            )
        return rho.rho
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (chain.dim, chain.dim):
        raise ValueError(
            f"rho shape {rho.shape} does not match chain dimension {chain.dim}"
        )
    return rho


def _dissipator_apply(out, op, op_dag, op_dag_op, rho, rate):
    # rate * (2 O rho O† - O†O rho - rho O†O), accumulated into out
    a = op @ rho
    out += (2.0 * rate) * (a @ op_dag)
    b = op_dag_op @ rho
    out -= rate * b
    out -= rate * b.conj().T


def liouvillian_apply(rho, chain: DomainChain) -> np.ndarray:
    """Right-hand side drho/dt of the master equation, evaluated matrix-free."""
    rho = _as_rho(rho, chain)
    ops = _chain_operators(chain)
    out = np.zeros_like(rho)
    if chain.include_hamiltonian:
        out += ops.ham_phase * rho
    for i in range(chain.n_reservoirs):
        _dissipator_apply(
            out, ops.lowering[i], ops.raising[i], ops.ldag_l[i], rho, ops.rates_down[i]
        )
        if ops.rates_up[i] > 0:
            _dissipator_apply(
                out, ops.raising[i], ops.lowering[i], ops.l_ldag[i], rho, ops.rates_up[i]
            )
    return out


def observables(rho, chain: DomainChain) -> Observables:
    """Expectation values ⟨Jz_i⟩ and ⟨J_i^2⟩ plus purity and trace."""
    rho = _as_rho(rho, chain)
    ops = _chain_operators(chain)
    diag = rho.diagonal().real
    trace = float(diag.sum())
    jz = np.array([float(d @ diag) for d in ops.jz_diag])
    j2 = np.array([jsq * trace for jsq in ops.j_squared])
    purity = float(np.sum(np.abs(rho) ** 2))
    return Observables(jz=jz, j2=j2, purity=purity, trace=trace)


def initial_state(chain: DomainChain, excitations) -> DensityState:
    """Product of per-domain Dicke states with the given excitation counts."""
    if len(excitations) != chain.n_domains:
        raise ValueError(
            f"need {chain.n_domains} excitation counts, got {len(excitations)}"
        )
    return dicke_product_density(chain.sizes, excitations)


def _resymmetrize(_t, rho):
    np.add(rho, rho.conj().T, out=rho)
    rho *= 0.5
    return rho


def evolve(
    rho0,
    chain: DomainChain,
    t_samples,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> Trajectory:
    """Integrate the master equation and sample observables on ``t_samples``.

    Integration runs from t = 0 (where ``rho0`` is defined) to
    ``t_samples[-1]`` with adaptive embedded Runge-Kutta steps; the state is
    re-symmetrized after every accepted step and observables are taken from
    the dense-output interpolant at the requested times.
    """
    rho = _as_rho(rho0, chain).copy()
    t_samples = np.asarray(t_samples, dtype=float)
    if t_samples.ndim != 1 or t_samples.size == 0:
        raise ValueError("t_samples must be a non-empty 1-D grid")
    if np.any(np.diff(t_samples) <= 0):
        raise ValueError("t_samples must be strictly increasing")
    if t_samples[0] < 0:
        raise ValueError("t_samples must be non-negative")

    times, jz, terr, pur, j2 = [], [], [], [], []

    def record(t, state):
        obs = observables(state, chain)
        times.append(t)
        jz.append(obs.jz)
        j2.append(obs.j2)
        terr.append(abs(obs.trace - 1.0))
        pur.append(obs.purity)

    solve_dopri5(
        lambda _t, y: liouvillian_apply(y, chain),
        0.0,
        rho,
        float(t_samples[-1]),
        rtol=rtol,
        atol=atol,
        t_samples=t_samples,
        on_sample=record,
        postprocess=_resymmetrize,
        postprocess_commutes=True,  # the generator maps rho† to (drho/dt)†
    )
    return Trajectory(
        times=np.array(times),
        sizes=chain.sizes,
        jz=np.array(jz),
        trace_error=np.array(terr),
        purity=np.array(pur),
        j2=np.array(j2),
    )


def steady_state(
    rho0,
    chain: DomainChain,
    eps: float = 1e-9,
    t_max: float | None = None,
    rtol: float | None = None,
    atol: float | None = None,
) -> DensityState:
    """Integrate until the entrywise 1-norm of drho/dt falls below eps*‖rho‖₁.

    The Liouvillian has a degenerate kernel (dark-state manifold), so the
    reached state depends on ``rho0``; long-time integration follows the
    physical relaxation path instead of picking an arbitrary kernel element.
    Raises :class:`ConvergenceError` if the residual has not dropped by
    ``t_max`` (default 1e3 / gamma_1).

    Integrator tolerances default to a decade below ``eps``: looser steps
    leave a noise floor of re-excited fast modes that keeps the residual from
    ever reaching a tighter threshold.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if t_max is None:
        t_max = 1e3 / chain.gammas[0]
    if rtol is None:
        rtol = min(1e-8, max(0.1 * eps, 1e-13))
    if atol is None:
        atol = 0.01 * rtol
    rho = _as_rho(rho0, chain).copy()

    last = {"residual": np.inf}

    def stationary(_t, y, dydt):
        res = float(np.sum(np.abs(dydt)))
        last["residual"] = res
        return res < eps * float(np.sum(np.abs(y)))

    result = solve_dopri5(
        lambda _t, y: liouvillian_apply(y, chain),
        0.0,
        rho,
        float(t_max),
        rtol=rtol,
        atol=atol,
        postprocess=_resymmetrize,
        postprocess_commutes=True,
        stop_when=stationary,
    )
    if not result.stopped_early:
        raise ConvergenceError(result.t, last["residual"], eps)
    return DensityState(chain.dims, result.y)
