"""Discrete exterior calculus on flat periodic grids.

Differential forms are stored by components on a GridMesh and
differentiated spectrally, so all identities (d o d = 0, Hodge
orthogonality, exactness of quadrature on trig polynomials) hold to
round-off for band-limited fields.

Sign conventions: the codifferential is delta = -div o sharp, so that
delta(dF) is the Laplacian with non-negative spectrum.  Harmonic 1-forms
on the flat torus are exactly the constant-component forms, so the
harmonic part of a Hodge split is componentwise mean extraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .interpolate import PeriodicInterpolator
from .mesh import GridMesh

#: Relative tolerance scale for closedness and Hodge residuals; spectral
#: differentiation leaves only round-off on smooth fields.
TOL_SCALE = 1e-8


class NonClosedFormError(ValueError):
    """Raised when an operation requires a closed form and the residual is
    above tolerance, i.e. the caller passed a non-cohomological object."""


def tol_closed(alpha: "OneForm") -> float:
    return TOL_SCALE * (1.0 + sup_norm(alpha))


def tol_hodge(alpha: "OneForm") -> float:
    return TOL_SCALE * (1.0 + l2_norm(alpha))


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite values in field data")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A 0-form: real values on the grid."""

    mesh: GridMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.mesh.shape:
            raise ValueError(f"field shape {v.shape} != mesh shape {self.mesh.shape}")
        _check_finite(v)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, mesh: GridMesh, c: float) -> "ScalarField":
        return cls(mesh, np.full(mesh.shape, float(c)))

    @classmethod
    def from_function(cls, mesh: GridMesh, fn) -> "ScalarField":
        X, Y = mesh.points
        return cls(mesh, np.asarray(fn(X, Y), dtype=float))

    @cached_property
    def _interp(self) -> PeriodicInterpolator:
        return PeriodicInterpolator(self.values, self.mesh)

    def at(self, points: np.ndarray) -> np.ndarray:
        """Interpolated values at physical coordinates, shape (2, ...)."""
        return self._interp(np.asarray(points, dtype=float))

    def mean(self) -> float:
        return self.mesh.mean(self.values)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.mesh, self.values + other.values)
        return ScalarField(self.mesh, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.mesh, self.values - other.values)
        return ScalarField(self.mesh, self.values - other)

    def __mul__(self, c):
        return ScalarField(self.mesh, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.mesh, -self.values)


@dataclass(frozen=True, eq=False)
class OneForm:
    """A 1-form a_x dx + a_y dy with component grids (ax, ay)."""

    mesh: GridMesh
    ax: np.ndarray
    ay: np.ndarray

    def __post_init__(self):
        ax = np.asarray(self.ax, dtype=float)
        ay = np.asarray(self.ay, dtype=float)
        if ax.shape != self.mesh.shape or ay.shape != self.mesh.shape:
            raise ValueError("component shape does not match mesh")
        _check_finite(ax, ay)
        object.__setattr__(self, "ax", ax)
        object.__setattr__(self, "ay", ay)

    @classmethod
    def constant(cls, mesh: GridMesh, cx: float, cy: float) -> "OneForm":
        return cls(mesh, np.full(mesh.shape, float(cx)), np.full(mesh.shape, float(cy)))

    @classmethod
    def from_functions(cls, mesh: GridMesh, fx, fy) -> "OneForm":
        X, Y = mesh.points
        return cls(mesh, np.asarray(fx(X, Y), dtype=float),
                   np.asarray(fy(X, Y), dtype=float))

    @property
    def components(self) -> np.ndarray:
        return np.stack([self.ax, self.ay])

    @cached_property
    def closedness_residual(self) -> float:
        """Cached sup norm of the exterior derivative."""
        return sup_norm(exterior_derivative(self))

    def is_closed(self, tol: float | None = None) -> bool:
        return self.closedness_residual <= (tol if tol is not None else tol_closed(self))

    def require_closed(self, tol: float | None = None, what: str = "operation"):
        t = tol if tol is not None else tol_closed(self)
        if self.closedness_residual > t:
            raise NonClosedFormError(
                f"{what} requires a closed 1-form: d-residual "
                f"{self.closedness_residual:.3e} exceeds {t:.3e}")

    @cached_property
    def _interp(self):
        return (PeriodicInterpolator(self.ax, self.mesh),
                PeriodicInterpolator(self.ay, self.mesh))

    def at(self, points: np.ndarray) -> np.ndarray:
        """Interpolated components at physical coordinates; shape (2, ...)."""
        pts = np.asarray(points, dtype=float)
        return np.stack([self._interp[0](pts), self._interp[1](pts)])

    def is_zero(self) -> bool:
        return not (np.any(self.ax) or np.any(self.ay))

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.mesh, self.ax + other.ax, self.ay + other.ay)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.mesh, self.ax - other.ax, self.ay - other.ay)

    def __mul__(self, c) -> "OneForm":
        return OneForm(self.mesh, self.ax * c, self.ay * c)

    __rmul__ = __mul__

    def __neg__(self) -> "OneForm":
        return OneForm(self.mesh, -self.ax, -self.ay)


@dataclass(frozen=True, eq=False)
class TwoForm:
    """A 2-form rho dx ^ dy stored by its density rho."""

    mesh: GridMesh
    density: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float)
        if d.shape != self.mesh.shape:
            raise ValueError("density shape does not match mesh")
        _check_finite(d)
        object.__setattr__(self, "density", d)

    @classmethod
    def standard(cls, mesh: GridMesh) -> "TwoForm":
        """The area form dx ^ dy (density identically 1)."""
        return cls(mesh, np.ones(mesh.shape))

    def total(self) -> float:
        return self.mesh.integrate(self.density)

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm(self.mesh, self.density - other.density)


@dataclass(frozen=True)
class CohomologyClass1:
    """Period vector of a closed 1-form over the two generator loops."""

    periods: tuple[float, float]

    def __iter__(self):
        return iter(self.periods)

    def __getitem__(self, k):
        return self.periods[k]

    def max_abs(self) -> float:
        return max(abs(self.periods[0]), abs(self.periods[1]))


@dataclass(frozen=True, eq=False)
class HodgeSplit:
    """Orthogonal splitting alpha = dF + delta(beta) + h on the flat torus."""

    exact: OneForm
    potential: ScalarField  # F with dF = exact, mean zero
    coexact: OneForm
    harmonic: OneForm       # constant components

    def reconstruct(self) -> OneForm:
        return self.exact + self.coexact + self.harmonic


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def exterior_derivative(obj):
    """d on 0-forms and 1-forms (spectral).

    ScalarField -> OneForm (f_x, f_y); OneForm -> TwoForm with density
    d(a dx + b dy) = (b_x - a_y) dx ^ dy.
    """
    mesh = obj.mesh
    if isinstance(obj, ScalarField):
        return OneForm(mesh, mesh.derivative(obj.values, 0),
                       mesh.derivative(obj.values, 1))
    if isinstance(obj, OneForm):
        return TwoForm(mesh, mesh.derivative(obj.ay, 0) - mesh.derivative(obj.ax, 1))
    raise TypeError(f"cannot apply d to {type(obj).__name__}")


def codifferential(alpha: OneForm) -> ScalarField:
    """delta(alpha) = -(d/dx a_x + d/dy a_y); delta(dF) has spectrum |k|^2 >= 0."""
    mesh = alpha.mesh
    return ScalarField(mesh, -(mesh.derivative(alpha.ax, 0) +
                               mesh.derivative(alpha.ay, 1)))


def sup_norm(obj) -> float:
    """Uniform norm: pointwise flat-metric length for 1-forms, max |value|
    for scalars and densities."""
    if isinstance(obj, OneForm):
        return float(np.sqrt(obj.ax ** 2 + obj.ay ** 2).max())
    if isinstance(obj, ScalarField):
        return float(np.abs(obj.values).max())
    if isinstance(obj, TwoForm):
        return float(np.abs(obj.density).max())
    raise TypeError(f"no sup norm for {type(obj).__name__}")


def l2_norm(obj) -> float:
    """L2 norm by cell-average quadrature."""
    mesh = obj.mesh
    if isinstance(obj, OneForm):
        return float(np.sqrt(mesh.integrate(obj.ax ** 2 + obj.ay ** 2)))
    if isinstance(obj, ScalarField):
        return float(np.sqrt(mesh.integrate(obj.values ** 2)))
    raise TypeError(f"no L2 norm for {type(obj).__name__}")


def l2_inner(a: OneForm, b: OneForm) -> float:
    return a.mesh.integrate(a.ax * b.ax + a.ay * b.ay)


def wedge_integral(a: OneForm, b: OneForm) -> float:
    """Integral of a ^ b over the torus (orientation dx ^ dy positive)."""
    return a.mesh.integrate(a.ax * b.ay - a.ay * b.ax)


def _exact_potential_fft(ax: np.ndarray, ay: np.ndarray, mesh: GridMesh) -> np.ndarray:
    """Mean-zero potential of the exact part: F with dF = P_exact(alpha)."""
    K0, K1 = mesh.wavenumbers
    ah = np.fft.fft2(ax)
    bh = np.fft.fft2(ay)
    Fh = (K0 * ah + K1 * bh) / (1j * mesh._k2_safe)
    Fh[0, 0] = 0.0
    return np.fft.ifft2(Fh).real


def hodge_decompose(alpha: OneForm) -> HodgeSplit:
    """Split alpha = dF + coexact + harmonic (L2-orthogonal).

    The harmonic part is the componentwise mean, F solves the Poisson
    problem for the curl-free part in Fourier space, and the coexact part
    is the remainder.  For closed alpha the coexact part vanishes to
    round-off.
    """
    mesh = alpha.mesh
    F = _exact_potential_fft(alpha.ax, alpha.ay, mesh)
    exact = OneForm(mesh, mesh.derivative(F, 0), mesh.derivative(F, 1))
    harmonic = OneForm.constant(mesh, float(alpha.ax.mean()), float(alpha.ay.mean()))
    coexact = OneForm(mesh,
                      alpha.ax - exact.ax - harmonic.ax,
                      alpha.ay - exact.ay - harmonic.ay)
    return HodgeSplit(exact=exact, potential=ScalarField(mesh, F),
                      coexact=coexact, harmonic=harmonic)


def exact_potential(alpha: OneForm, check: bool = True) -> ScalarField:
    """Mean-zero F with dF = exact part of alpha; errors if alpha is not
    closed (so that dF would miss a coexact remainder)."""
    if check:
        alpha.require_closed(what="potential extraction")
    return ScalarField(alpha.mesh, _exact_potential_fft(alpha.ax, alpha.ay, alpha.mesh))


def periods(alpha: OneForm, tol: float | None = None) -> CohomologyClass1:
    """Periods over the two generator loops of a closed 1-form.

    Equals the componentwise mean times the period length; loop quadrature
    and the harmonic representative agree for closed forms.  Rejects
    non-closed input.
    """
    alpha.require_closed(tol=tol, what="periods")
    return CohomologyClass1((float(alpha.ax.mean()) * alpha.mesh.L[0],
                             float(alpha.ay.mean()) * alpha.mesh.L[1]))


def harmonic_representative(mesh: GridMesh, cls: CohomologyClass1) -> OneForm:
    """The constant-component form with the given periods."""
    return OneForm.constant(mesh, cls.periods[0] / mesh.L[0],
                            cls.periods[1] / mesh.L[1])


def oscillation(f: ScalarField) -> float:
    """osc(f) = max f - min f over the grid."""
    return float(f.values.max() - f.values.min())
