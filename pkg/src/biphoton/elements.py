"""Optical elements with forward (time-forward) and backward actions.

Every element acts linearly on a :class:`~biphoton.grid.Field`.  The
*forward* action is the physical photon-order evolution; the *backward*
action is the reverse traversal used when a detected state is followed
back through the apparatus.  For the unitary elements the backward action
is the operator adjoint of the forward one.  The mask is the deliberate
exception: both directions multiply by ``t(x)`` and the single complex
conjugation of the whole arm profile is applied later, at the conditioning
step (see :func:`biphoton.source.condition`), so the conjugated transfer
function emerges there rather than being inserted per element.

Conventions
-----------
* ``Propagate(z, k_z)`` multiplies the wavevector representation by
  ``exp(-1j * k**2 * z / k_z)`` going forward and by the conjugate phase
  going backward.  With ``half_factor=True`` the exponent carries the
  conventional extra factor 1/2.  The constant phase ``exp(1j*z*k_z)`` is
  dropped everywhere: it cancels in every modulus and every normalized
  conditional.
* ``FourierLens`` maps wavevector content onto the transverse axis: its
  forward action is the unitary transform with kernel ``exp(+1j*k*x)``
  (the centred inverse-DFT machinery applied to the sample vector), and
  its backward action is the inverse of that.  On a self-conjugate window
  (``extent**2 == 2*pi*n``, so ``dk == dx``) the lens is an exact
  unit-scale Fourier transformer.
* A ``FourierLens`` adjacent to a ``Propagate`` in a chain composes with
  it into the closed focal-plane map: the propagation supplies the
  spectral phase and the lens supplies the return to the transverse axis.
  Chain application fuses such pairs (in either order) into a single
  spectral-phase propagation, which reproduces the analytic focal-plane
  profile of a Gaussian detector exactly.  A lone ``FourierLens`` keeps
  its standalone transform action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, SamplingGuardError
from .grid import Field, TransverseGrid, _dft_values, _idft_values

__all__ = [
    "Element",
    "Propagate",
    "FourierLens",
    "QuadraticPhase",
    "Mask",
    "DetectorProfile",
    "materialize_detector",
    "apply_forward",
    "apply_backward",
    "apply_chain_forward",
    "apply_chain_backward",
    "compile_chain",
]


class Element:
    """Marker base class for optical elements."""

    __slots__ = ()


@dataclass(frozen=True)
class Propagate(Element):
    """Free propagation over a distance ``z`` at axial wavevector ``k_z``."""

    z: float
    k_z: float
    half_factor: bool = False

    def __post_init__(self):
        if not np.isfinite(self.z):
            raise ValueError("propagation distance must be finite")
        if not np.isfinite(self.k_z) or self.k_z <= 0:
            raise ValueError("k_z must be positive and finite")

    def phase_distance(self) -> float:
        """Distance entering the quadratic phase (honours the 1/2 switch)."""
        return self.z * (0.5 if self.half_factor else 1.0)


@dataclass(frozen=True)
class FourierLens(Element):
    """Ideal lens in a focal-plane arrangement: exact Fourier transformer."""


@dataclass(frozen=True)
class QuadraticPhase(Element):
    """Thin-lens phase factor ``exp(-1j * k_z * x**2 / (2*f))``."""

    f: float
    k_z: float

    def __post_init__(self):
        if not np.isfinite(self.f) or self.f == 0:
            raise ValueError("focal length must be nonzero and finite")
        if not np.isfinite(self.k_z) or self.k_z <= 0:
            raise ValueError("k_z must be positive and finite")


@dataclass(frozen=True, eq=False)
class Mask(Element):
    """Complex transfer function ``t(x)`` with ``|t| <= 1`` everywhere."""

    t: Field

    def __post_init__(self):
        if np.max(np.abs(self.t.values)) > 1.0 + 1e-12:
            raise ValueError("mask transfer function must satisfy |t| <= 1")


@dataclass(frozen=True)
class DetectorProfile:
    """Detector resolution function: Gaussian, top-hat, or single point.

    ``shape`` is one of ``"gaussian"`` (width ``sigma``), ``"tophat"``
    (full width ``width``) or ``"point"``; ``center`` is the nominal
    detection position x1.
    """

    shape: str
    center: float = 0.0
    sigma: float | None = None
    width: float | None = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "tophat", "point"):
            raise ValueError(f"unknown detector shape {self.shape!r}")
        if self.shape == "gaussian" and (self.sigma is None or self.sigma <= 0):
            raise ValueError("gaussian detector needs sigma > 0")
        if self.shape == "tophat" and (self.width is None or self.width <= 0):
            raise ValueError("tophat detector needs width > 0")


def materialize_detector(d: DetectorProfile, g: TransverseGrid) -> Field:
    """Sample a detector profile on the grid as an L2-normalized field.

    The Gaussian case follows
    ``(1/(pi*sigma**2))**0.25 * exp(-(x-x1)**2 / (2*sigma**2))`` at the
    grid points, renormalized numerically so ``sum |a|^2 dx == 1`` holds
    exactly even when the window clips the tails.  A point detector is the
    grid-native delta: a single sample of height ``1/sqrt(dx)`` at the
    nearest grid point.
    """
    if d.shape == "gaussian":
        if d.sigma < 2 * g.dx:
            raise ValueError(
                f"gaussian detector sigma={d.sigma:g} unresolvable: "
                f"minimum is 2*dx = {2 * g.dx:g}"
            )
        v = (1.0 / (np.pi * d.sigma**2)) ** 0.25 * np.exp(
            -((g.x - d.center) ** 2) / (2.0 * d.sigma**2)
        )
    elif d.shape == "tophat":
        if d.width < 2 * g.dx:
            raise ValueError(
                f"tophat detector width={d.width:g} unresolvable: "
                f"minimum is 2*dx = {2 * g.dx:g}"
            )
        v = (np.abs(g.x - d.center) < d.width / 2.0).astype(float)
        if not np.any(v):
            raise ValueError("tophat detector covers no grid point")
    else:  # point
        v = np.zeros(g.n)
        v[g.index_of(d.center)] = 1.0
    v = v.astype(np.complex128)
    v /= np.sqrt(np.sum(np.abs(v) ** 2) * g.dx)
    return Field(g, v)


# ---------------------------------------------------------------------------
# compiled per-element operations


def _guard_propagation(e: Propagate, g: TransverseGrid) -> None:
    """Reject propagation whose quadratic phase is undersampled.

    The guard bounds the mean change of the quadratic phase per wavevector
    sample across the band: ``k_max**2 * |z_p| / (k_z * n) < pi`` with
    ``k_max = pi/dx``.  At fixed sample spacing the bound improves with n
    (a wider window), so the error names the minimum point count.
    """
    zp = abs(e.phase_distance())
    if zp == 0.0:
        return
    k_max = np.pi / g.dx
    q = k_max**2 * zp / (e.k_z * g.n)
    if q >= np.pi:
        n_min = int(np.ceil(k_max**2 * zp / (e.k_z * np.pi)))
        required = 1 << max(3, int(np.ceil(np.log2(n_min))))
        raise SamplingGuardError(
            f"propagation over z={e.z:g} is undersampled on n={g.n} "
            f"(mean quadratic-phase step {q:.3g} rad >= pi); at this "
            f"sample spacing at least n={required} points are needed",
            required_n=required,
        )


class _Op:
    """One compiled chain stage acting on sample arrays along an axis."""

    def forward(self, v: np.ndarray, g: TransverseGrid, axis: int = -1):
        raise NotImplementedError

    def backward(self, v: np.ndarray, g: TransverseGrid, axis: int = -1):
        raise NotImplementedError

    def backward_adjoint(self, v: np.ndarray, g: TransverseGrid, axis: int = -1):
        """Operator adjoint of :meth:`backward` (used by the oracle)."""
        raise NotImplementedError


def _axis_broadcast(arr: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = arr.shape[0]
    return arr.reshape(shape)


class _SpectralPhaseOp(_Op):
    """Propagation applied as a phase in wavevector space (closed form).

    Also represents a fused propagation + lens pair: the closed map is the
    same spectral phase, with the lens contributing the return leg of the
    transform.
    """

    def __init__(self, element: Propagate):
        self.element = element

    def _phase(self, g: TransverseGrid, sign: float, ndim: int, axis: int):
        e = self.element
        _guard_propagation(e, g)
        ph = np.exp(sign * -1j * g.k**2 * e.phase_distance() / e.k_z)
        return _axis_broadcast(ph, ndim, axis)

    def forward(self, v, g, axis=-1):
        if self.element.z == 0.0:
            return v.copy()
        ph = self._phase(g, +1.0, v.ndim, axis)
        return _idft_values(ph * _dft_values(v, axis), axis)

    def backward(self, v, g, axis=-1):
        if self.element.z == 0.0:
            return v.copy()
        ph = self._phase(g, -1.0, v.ndim, axis)
        return _idft_values(ph * _dft_values(v, axis), axis)

    backward_adjoint = forward


class _LensOp(_Op):
    """Standalone Fourier lens: unitary k-content -> position transform."""

    def forward(self, v, g, axis=-1):
        return _idft_values(np.fft.ifftshift(v, axes=axis), axis)

    def backward(self, v, g, axis=-1):
        return np.fft.fftshift(_dft_values(v, axis), axes=axis)

    backward_adjoint = forward


class _QuadraticPhaseOp(_Op):
    def __init__(self, element: QuadraticPhase):
        self.element = element

    def _chirp(self, g: TransverseGrid, ndim: int, axis: int):
        e = self.element
        ph = np.exp(-1j * e.k_z * g.x**2 / (2.0 * e.f))
        return _axis_broadcast(ph, ndim, axis)

    def forward(self, v, g, axis=-1):
        return self._chirp(g, v.ndim, axis) * v

    def backward(self, v, g, axis=-1):
        return np.conj(self._chirp(g, v.ndim, axis)) * v

    backward_adjoint = forward


class _MaskOp(_Op):
    """Transfer function; backward is deliberately not conjugated."""

    def __init__(self, element: Mask):
        self.element = element

    def _t(self, g: TransverseGrid, ndim: int, axis: int):
        if self.element.t.grid != g:
            raise GridError("mask is sampled on a different grid")
        return _axis_broadcast(self.element.t.values, ndim, axis)

    def forward(self, v, g, axis=-1):
        return self._t(g, v.ndim, axis) * v

    backward = forward

    def backward_adjoint(self, v, g, axis=-1):
        return np.conj(self._t(g, v.ndim, axis)) * v


def compile_chain(elements) -> list[_Op]:
    """Compile an element sequence into ops, fusing lens/propagation pairs.

    Adjacent ``{Propagate, FourierLens}`` pairs (in either order) merge
    into one spectral-phase propagation; the scan is greedy left to right.
    """
    ops: list[_Op] = []
    es = list(elements)
    i = 0
    while i < len(es):
        e = es[i]
        nxt = es[i + 1] if i + 1 < len(es) else None
        if isinstance(e, Propagate) and isinstance(nxt, FourierLens):
            ops.append(_SpectralPhaseOp(e))
            i += 2
        elif isinstance(e, FourierLens) and isinstance(nxt, Propagate):
            ops.append(_SpectralPhaseOp(nxt))
            i += 2
        elif isinstance(e, Propagate):
            ops.append(_SpectralPhaseOp(e))
            i += 1
        elif isinstance(e, FourierLens):
            ops.append(_LensOp())
            i += 1
        elif isinstance(e, QuadraticPhase):
            ops.append(_QuadraticPhaseOp(e))
            i += 1
        elif isinstance(e, Mask):
            ops.append(_MaskOp(e))
            i += 1
        else:
            raise TypeError(f"unknown element {e!r}")
    return ops


def apply_forward(e: Element, f: Field) -> Field:
    """Apply one element in the physical (time-forward) direction."""
    (op,) = compile_chain([e])
    return Field(f.grid, op.forward(f.values, f.grid))


def apply_backward(e: Element, f: Field) -> Field:
    """Apply one element in the reverse-traversal direction.

    For the unitary elements this is the adjoint of :func:`apply_forward`;
    for :class:`Mask` it is the same multiplication by ``t(x)`` (the
    conditioning step conjugates the whole arm profile once).
    """
    (op,) = compile_chain([e])
    return Field(f.grid, op.backward(f.values, f.grid))


def apply_chain_forward(elements, f: Field) -> Field:
    """Left-to-right forward composition (first element acts first)."""
    v = f.values
    for op in compile_chain(elements):
        v = op.forward(v, f.grid)
    return Field(f.grid, v)


def apply_chain_backward(elements, f: Field) -> Field:
    """Reverse traversal of a forward-ordered chain.

    Applies the per-element backward actions in reversed order, i.e. the
    adjoint of :func:`apply_chain_forward` up to the mask's deliberate
    unconjugated backward action.
    """
    v = f.values
    for op in reversed(compile_chain(elements)):
        v = op.backward(v, f.grid)
    return Field(f.grid, v)
