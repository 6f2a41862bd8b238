"""Two-photon source amplitude and the conditioning that collapses it.

The crystal emits a photon pair described by a joint transverse amplitude
``B[i, j] ~ beta(x_i, x'_j)`` (arm-1 coordinate first).  Conditioning on a
reverse-propagated arm-1 profile projects the pair state onto a one-photon
arm-2 state; the single complex conjugation of the arm-1 profile happens
here, which is what makes the conjugated transfer function appear in the
conditioned state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError
from .grid import Field, TransverseGrid, _readonly

__all__ = ["BiphotonField", "make_biphoton_delta_correlated", "condition"]


@dataclass(frozen=True, eq=False)
class BiphotonField:
    """Complex two-photon amplitude on ``grid x grid`` (arm 1 first)."""

    grid: TransverseGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        n = self.grid.n
        if v.shape != (n, n):
            raise GridError(f"values must have shape ({n}, {n}), got {v.shape}")
        if not np.all(np.isfinite(v.view(np.float64))):
            raise GridError("biphoton values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def norm_sq(self) -> float:
        """``sum |B|^2 * dx**2``."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx**2)


def make_biphoton_delta_correlated(
    g: TransverseGrid, kappa: float
) -> BiphotonField:
    """Position-correlated pair amplitude from a Gaussian pump.

    ``B[i, j] = delta_ij / dx * sqrt(pi) * exp(-x_j**2 * kappa**2 / 2)``:
    both photons are born at the same transverse point, weighted by the
    pump spot of 1/e half-width ``1/kappa`` (``kappa`` is the pump's
    transverse wavevector spread).  The discrete delta carries ``1/dx`` so
    grid sums reproduce continuum sifting.

    The spot must be resolvable and must fit the window:
    ``2*dx <= 1/kappa <= extent/2``.
    """
    if not np.isfinite(kappa) or kappa <= 0:
        raise ValueError("kappa must be positive and finite")
    width = 1.0 / kappa
    if width < 2 * g.dx - 1e-12:
        raise ValueError(
            f"pump spot width 1/kappa = {width:g} unresolvable: "
            f"minimum is 2*dx = {2 * g.dx:g}"
        )
    if width > g.extent / 2 + 1e-12:
        raise ValueError(
            f"pump spot width 1/kappa = {width:g} exceeds the window: "
            f"maximum is extent/2 = {g.extent / 2:g}"
        )
    diag = np.sqrt(np.pi) / g.dx * np.exp(-(g.x**2) * kappa**2 / 2.0)
    return BiphotonField(g, np.diag(diag.astype(np.complex128)))


def condition(B: BiphotonField, alpha3: Field) -> Field:
    """Project the pair state onto a reverse-propagated arm-1 profile.

    Returns ``beta1[j] = dx * sum_i conj(alpha3[i]) * B[i, j]``.  The
    result is intentionally not normalized; probabilities are normalized
    once, at the end of a pipeline.
    """
    if B.grid != alpha3.grid:
        raise GridError("biphoton field and profile live on different grids")
    out = B.grid.dx * (np.conj(alpha3.values) @ B.values)
    return Field(B.grid, out)
