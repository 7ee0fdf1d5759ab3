"""Divergence-free Fourier eigenbasis of the Stokes operator on the torus.

The domain is the periodic box [0, 2*pi)^d with d in {2, 3}.  Every basis
function is a single real trigonometric mode

    w(x) = sqrt(2) / (2*pi)^(d/2) * {cos|sin}(xi . x) * pol,

where xi is a nonzero integer wavevector taken from a canonical half-space
(one representative per {xi, -xi} pair) and pol is a unit polarization
vector orthogonal to xi.  These modes are exactly divergence-free,
L2-orthonormal, and eigenfunctions of the Stokes operator with eigenvalue
|xi|^2.  The zero wavevector is excluded, so all representable velocity
fields have zero spatial mean.

Fields are sampled on a uniform collocation grid with M points per axis;
inner products are trapezoidal sums, which are exact for trigonometric
polynomials resolved by the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


def _is_canonical(xi: tuple[int, ...]) -> bool:
    """One representative per {xi, -xi}: first nonzero component positive."""
    for c in xi:
        if c != 0:
            return c > 0
    return False


def _polarizations(xi: tuple[int, ...]) -> list[tuple[float, ...]]:
    """Unit vectors orthogonal to xi, deterministically oriented.

    d=2: the counterclockwise rotation of xi.  d=3: cross products with the
    coordinate axis least aligned with xi, then the completing vector.
    """
    v = np.asarray(xi, dtype=float)
    if len(xi) == 2:
        perp = np.array([-v[1], v[0]]) / np.linalg.norm(v)
        return [tuple(perp)]
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(v)))] = 1.0
    p1 = np.cross(v, axis)
    p1 /= np.linalg.norm(p1)
    p2 = np.cross(v, p1)
    p2 /= np.linalg.norm(p2)
    return [tuple(p1), tuple(p2)]


@dataclass(frozen=True)
class WaveMode:
    """A single real divergence-free Fourier mode."""

    xi: tuple[int, ...]
    parity: str  # "cos" or "sin"
    pol: tuple[float, ...]
    pol_index: int = 0

    def __post_init__(self):
        if all(c == 0 for c in self.xi):
            raise ValueError("wavevector must be nonzero")
        if self.parity not in ("cos", "sin"):
            raise ValueError(f"unknown parity {self.parity!r}")
        dot = sum(p * c for p, c in zip(self.pol, self.xi))
        if abs(dot) > 1e-12:
            raise ValueError("polarization not orthogonal to wavevector")
        norm = sum(p * p for p in self.pol)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("polarization not unit length")

    @property
    def eigenvalue(self) -> float:
        """Stokes eigenvalue, |xi|^2 on the torus."""
        return float(sum(c * c for c in self.xi))


@dataclass(frozen=True)
class GridField:
    """Vector field sampled on the uniform collocation grid.

    values has shape (M^d, d); points are ordered like
    np.ndindex((M,)*d) (C order).
    """

    values: np.ndarray
    domain_measure: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid field contains non-finite entries")


def _enumerate_modes(d: int, count: int) -> list[WaveMode]:
    """The first `count` modes in (eigenvalue, xi, parity, pol) order."""
    modes: list[WaveMode] = []
    radius = 1
    while True:
        modes.clear()
        rng = range(-radius, radius + 1)
        for xi in np.ndindex(*([2 * radius + 1] * d)):
            vec = tuple(int(c) - radius for c in xi)
            if not _is_canonical(vec):
                continue
            if sum(c * c for c in vec) > radius * radius:
                continue
            for parity in ("cos", "sin"):
                for i, pol in enumerate(_polarizations(vec)):
                    modes.append(WaveMode(vec, parity, pol, i))
        if len(modes) >= count:
            break
        radius += 1
    modes.sort(key=lambda m: (m.eigenvalue, m.xi, m.parity, m.pol_index))
    return modes[:count]


@dataclass(frozen=True)
class GalerkinSpace:
    """Immutable span of the first N Stokes eigenmodes plus its grid.

    Precomputes mode samples, gradients and symmetric gradients on the
    collocation grid so that all transforms are dense linear algebra.
    """

    d: int
    N: int
    M: int
    modes: tuple[WaveMode, ...]
    points: np.ndarray = field(repr=False)       # (M^d, d)
    mode_fields: np.ndarray = field(repr=False)  # (N, M^d, d)
    mode_grads: np.ndarray = field(repr=False)   # (N, M^d, d, d); [..., i, j] = d_j w_i
    quad_weight: float

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    @cached_property
    def mode_eps(self) -> np.ndarray:
        """Symmetric gradients of all modes, shape (N, M^d, d, d)."""
        return 0.5 * (self.mode_grads + np.swapaxes(self.mode_grads, -1, -2))

    @property
    def domain_measure(self) -> float:
        return TWO_PI ** self.d

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.M,) * self.d

    def max_wavenumber(self) -> int:
        return max(max(abs(c) for c in m.xi) for m in self.modes)


def build_space(d: int, N: int, M: int) -> GalerkinSpace:
    """Construct the Galerkin space with N modes on an M^d grid.

    M must satisfy the oversampling bound M >= 2*kmax + 1 with kmax the
    largest wavevector component among the retained modes, so that all
    quadratic products of modes are integrated exactly.
    """
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if N < 1:
        raise ValueError("need at least one mode")
    modes = _enumerate_modes(d, N)
    kmax = max(max(abs(c) for c in m.xi) for m in modes)
    if M < 2 * kmax + 1:
        raise ValueError(
            f"grid resolution M={M} below oversampling bound {2 * kmax + 1} "
            f"for max wavevector component {kmax}"
        )

    axis = TWO_PI * np.arange(M) / M
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)  # (M^d, d)

    amp = np.sqrt(2.0) / TWO_PI ** (d / 2.0)
    n_pts = points.shape[0]
    fields = np.empty((N, n_pts, d))
    grads = np.empty((N, n_pts, d, d))
    for n, mode in enumerate(modes):
        xi = np.asarray(mode.xi, dtype=float)
        pol = np.asarray(mode.pol)
        phase = points @ xi
        if mode.parity == "cos":
            val, dval = np.cos(phase), -np.sin(phase)
        else:
            val, dval = np.sin(phase), np.cos(phase)
        fields[n] = amp * val[:, None] * pol[None, :]
        grads[n] = amp * dval[:, None, None] * pol[None, :, None] * xi[None, None, :]

    return GalerkinSpace(
        d=d, N=N, M=M, modes=tuple(modes),
        points=points, mode_fields=fields, mode_grads=grads,
        quad_weight=(TWO_PI / M) ** d,
    )


def suggest_grid(d: int, N: int, factor: int = 3) -> int:
    """Grid resolution resolving products of `factor` modes exactly."""
    kmax = max(max(abs(c) for c in m.xi) for m in _enumerate_modes(d, N))
    return factor * kmax + 1


def synthesize(space: GalerkinSpace, coeffs: np.ndarray) -> GridField:
    """Sample sum_k c_k w_k on the collocation grid."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (space.N,):
        raise ValueError(f"expected {space.N} coefficients, got shape {coeffs.shape}")
    values = np.einsum("n,nxd->xd", coeffs, space.mode_fields)
    return GridField(values=values, domain_measure=space.domain_measure)


def analyze(space: GalerkinSpace, fld: GridField) -> np.ndarray:
    """L2 projections <field, w_k> by trapezoidal quadrature."""
    values = fld.values if isinstance(fld, GridField) else np.asarray(fld)
    if values.shape != (space.M ** space.d, space.d):
        raise ValueError(f"field shape {values.shape} inconsistent with space")
    return space.quad_weight * np.einsum("xd,nxd->n", values, space.mode_fields)


def velocity_gradient(space: GalerkinSpace, coeffs: np.ndarray) -> np.ndarray:
    """Full gradient of the synthesized field, shape (M^d, d, d)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (space.N,):
        raise ValueError(f"expected {space.N} coefficients, got shape {coeffs.shape}")
    return np.einsum("n,nxij->xij", coeffs, space.mode_grads)


def symmetric_gradient(space: GalerkinSpace, coeffs: np.ndarray) -> np.ndarray:
    """Shear-rate tensor eps(v) at every grid point, shape (M^d, d, d)."""
    grad = velocity_gradient(space, coeffs)
    return 0.5 * (grad + np.swapaxes(grad, -1, -2))


def l2_norm(space: GalerkinSpace, fld: GridField) -> float:
    values = fld.values if isinstance(fld, GridField) else np.asarray(fld)
    return float(np.sqrt(space.quad_weight * np.sum(values ** 2)))
