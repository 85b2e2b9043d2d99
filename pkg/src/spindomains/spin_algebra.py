"""Collective angular-momentum operators and Dicke states for spin domains.

Each domain of N spin-1/2 particles is represented in its maximal
angular-momentum sector j = N/2, spanned by the Dicke states |j, m⟩ with
m = j, j-1, ..., -j.  Basis states are ordered by m *descending*, so index 0
is the fully excited state.  Product spaces over a chain of domains are
ordered domain-1-major (Kronecker order).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

__all__ = [
    "SpinSector",
    "CollectiveOperator",
    "DensityState",
    "collective_lowering",
    "collective_raising",
    "collective_jz",
    "embed_operator",
    "dicke_density",
    "dicke_product_density",
]


@dataclass(frozen=True)
class SpinSector:
    """Maximal angular-momentum sector of a domain of ``n_spins`` spin-1/2."""

    n_spins: int

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError(f"domain needs at least one spin, got {self.n_spins}")

    @property
    def j(self) -> float:
        """Total angular momentum of the sector, j = N/2."""
        return self.n_spins / 2

    @property
    def dim(self) -> int:
        """Sector dimension, 2j + 1 = N + 1."""
        return self.n_spins + 1

    def m_values(self) -> np.ndarray:
        """Jz eigenvalues in basis order (m descending from +j)."""
        return self.j - np.arange(self.dim)


@dataclass(frozen=True)
class CollectiveOperator:
    """A collective spin operator over one sector or a chain product space.

    ``matrix`` is sparse CSR over the product of ``sector_dims`` in
    domain-1-major order.
    """

    sector_dims: tuple[int, ...]
    matrix: sparse.csr_matrix

    def __post_init__(self):
        dim = int(np.prod(self.sector_dims))
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"product dimension {dim} of sectors {self.sector_dims}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "CollectiveOperator":
        return CollectiveOperator(self.sector_dims, self.matrix.conj().T.tocsr())

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class DensityState:
    """Density matrix over the product of per-domain maximal-j sectors."""

    dims: tuple[int, ...]
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        dim = int(np.prod(self.dims))
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (dim, dim):
            raise ValueError(
                f"rho shape {self.rho.shape} does not match product dimension {dim}"
            )

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def purity(self) -> float:
        # tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        return float(np.sum(np.abs(self.rho) ** 2))

    def validate(self, check_positivity: bool = False) -> None:
        """Raise if trace, Hermiticity or (optionally) positivity are violated."""
        tr = self.trace()
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"trace {tr} deviates from 1 by more than 1e-9")
        herm_err = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm_err > 1e-12:
            raise ValueError(f"Hermiticity violated by {herm_err:.3e}")
        if check_positivity:
            lo = float(np.linalg.eigvalsh(self.rho).min())
            if lo < -1e-8:
                raise ValueError(f"minimum eigenvalue {lo:.3e} below -1e-8")


def collective_lowering(n_spins: int) -> CollectiveOperator:
    """Collective lowering operator J- of one domain.

    Matrix elements J-|j,m⟩ = sqrt(j(j+1) - m(m-1)) |j,m-1⟩; with the
    m-descending basis the nonzeros sit on the first subdiagonal.
    """
    sector = SpinSector(n_spins)
    j = sector.j
    m = sector.m_values()[:-1]  # source levels m = j ... -j+1
    amp = np.sqrt(j * (j + 1) - m * (m - 1))
    mat = sparse.diags(amp, offsets=-1, shape=(sector.dim, sector.dim), dtype=complex)
    return CollectiveOperator((sector.dim,), mat.tocsr())


def collective_raising(n_spins: int) -> CollectiveOperator:
    """Collective raising operator J+ = (J-)†."""
    return collective_lowering(n_spins).dagger()


def collective_jz(n_spins: int) -> CollectiveOperator:
    """Collective inversion operator Jz, diagonal with entries j, j-1, ..., -j."""
    sector = SpinSector(n_spins)
    mat = sparse.diags(sector.m_values().astype(complex), offsets=0)
    return CollectiveOperator((sector.dim,), mat.tocsr())


def embed_operator(
    op: CollectiveOperator, domain_index: int, chain_dims: tuple[int, ...] | list[int]
) -> CollectiveOperator:
    """Embed a single-sector operator into the chain product space.

    Returns identity ⊗ ... ⊗ op ⊗ ... ⊗ identity with ``op`` at position
    ``domain_index`` (0-based), domain-1-major ordering.
    """
    chain_dims = tuple(int(d) for d in chain_dims)
    if not 0 <= domain_index < len(chain_dims):
        raise IndexError(
            f"domain_index {domain_index} out of range for {len(chain_dims)} domains"
        )
    if op.dim != chain_dims[domain_index]:
        raise ValueError(
            f"operator dimension {op.dim} does not match "
            f"chain_dims[{domain_index}] = {chain_dims[domain_index]}"
        )
    left = int(np.prod(chain_dims[:domain_index], dtype=np.int64))
    right = int(np.prod(chain_dims[domain_index + 1 :], dtype=np.int64))
    mat = op.matrix
    if left > 1:
        mat = sparse.kron(sparse.identity(left, dtype=complex), mat)
    if right > 1:
        mat = sparse.kron(mat, sparse.identity(right, dtype=complex))
    return CollectiveOperator(chain_dims, mat.tocsr())


def dicke_density(n_spins: int, n_excited: int) -> DensityState:
    """Pure Dicke state |j = N/2, m = n_excited - N/2⟩ as a density matrix."""
    sector = SpinSector(n_spins)
    if not 0 <= n_excited <= n_spins:
        raise ValueError(
            f"n_excited must lie in [0, {n_spins}], got {n_excited}"
        )
    rho = np.zeros((sector.dim, sector.dim), dtype=complex)
    rho[n_spins - n_excited, n_spins - n_excited] = 1.0
    return DensityState((sector.dim,), rho)


def dicke_product_density(
    sizes: tuple[int, ...] | list[int], excitations: tuple[int, ...] | list[int]
) -> DensityState:
    """Product of per-domain Dicke states over a chain."""
    if len(sizes) != len(excitations):
        raise ValueError(
            f"got {len(sizes)} domain sizes but {len(excitations)} excitation counts"
        )
    rho = None
    dims = []
    for n_spins, n_exc in zip(sizes, excitations):
        part = dicke_density(n_spins, n_exc)
        dims.append(part.dim)
        rho = part.rho if rho is None else np.kron(rho, part.rho)
    return DensityState(tuple(dims), rho)
