"""Diffeomorphisms of the flat torus as periodic displacement fields.

A map is stored as x -> x + u(x) mod L with u a smooth periodic
displacement sampled on the grid, plus its Jacobian field.  Closed-form
constructions (see `catalog`) supply analytic Jacobians and inverses;
otherwise Jacobians come from spectral differentiation and inverses from
a damped Newton iteration on the lift.

Maps are immutable after construction; interpolators and inverses are
cached lazily, so sharing across threads is safe once built.
"""

from __future__ import annotations

import numpy as np

from .forms import OneForm, TwoForm, sup_norm
from .interpolate import PeriodicInterpolator
from .mesh import GridMesh

#: Volume-preserving flag threshold on sup |det J - 1|.
TOL_VP = 1e-8

#: Newton inversion: residual target is TOL_INV_SCALE * max(L), at most
#: MAX_NEWTON_ITER iterations, step halving on overshoot.
TOL_INV_SCALE = 1e-10
MAX_NEWTON_ITER = 50


class DiffeomorphismError(ValueError):
    """The displacement field does not define an orientation-preserving
    diffeomorphism (det J <= 0 somewhere)."""


class InversionError(RuntimeError):
    """Newton iteration for the inverse map failed to converge."""


def _lattice_normalize(disp: np.ndarray, L) -> np.ndarray:
    """Shift each component by the integer multiple of the period that puts
    its midrange into (-L/2, L/2] (ties toward +L/2).

    A constant lattice shift keeps the field smooth; wrapping pointwise
    would tear it along level sets.
    """
    out = disp.copy()
    for k in range(2):
        mid = 0.5 * (out[k].max() + out[k].min())
        out[k] -= L[k] * np.ceil(mid / L[k] - 0.5)
    return out


class TorusMap:
    """A diffeomorphism x -> x + u(x) mod L of the flat torus.

    The Jacobian field is supplied analytically by closed-form builders or
    computed spectrally on first access; `check=False` skips the
    determinant validation for maps whose invertibility is guaranteed by
    construction (e.g. converged Newton inverses).
    """

    def __init__(self, mesh: GridMesh, disp: np.ndarray, jac: np.ndarray | None = None,
                 quality: float = 0.0, provenance: dict | None = None,
                 normalize: bool = False, check: bool = True):
        disp = np.array(disp, dtype=float)
        if disp.shape != (2, mesh.N, mesh.N):
            raise ValueError(f"displacement shape {disp.shape} != (2, N, N)")
        if not np.all(np.isfinite(disp)):
            raise ValueError("non-finite displacement")
        if normalize:
            disp = _lattice_normalize(disp, mesh.L)
        self.mesh = mesh
        self.disp = disp
        self.disp.setflags(write=False)
        if jac is not None:
            jac = np.array(jac, dtype=float)
            if jac.shape != (2, 2, mesh.N, mesh.N):
                raise ValueError("jacobian shape must be (2, 2, N, N)")
            jac.setflags(write=False)
        self._jac = jac
        self._det = None
        self.quality = float(quality)  # accumulated resampling steps
        self.provenance = dict(provenance or {})
        self._interp: dict[str, object] = {}
        self._inverse: TorusMap | None = None
        self._analytic_inverse = None  # callable producing the inverse map
        if check:
            self._validate()

    @property
    def jac(self) -> np.ndarray:
        if self._jac is None:
            jac = np.empty((2, 2, self.mesh.N, self.mesh.N))
            for k in range(2):
                jac[k] = self.mesh.gradient(self.disp[k])
                jac[k, k] += 1.0
            jac.setflags(write=False)
            self._jac = jac
        return self._jac

    @property
    def det(self) -> np.ndarray:
        if self._det is None:
            J = self.jac
            self._det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        return self._det

    def _validate(self):
        if self.det.min() <= 0.0:
            i, j = np.unravel_index(np.argmin(self.det), self.det.shape)
            raise DiffeomorphismError(
                f"det J = {self.det.min():.3e} <= 0 at grid point "
                f"({self.mesh.axes[0][i]:.4f}, {self.mesh.axes[1][j]:.4f})")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def identity(cls, mesh: GridMesh) -> "TorusMap":
        eye = np.zeros((2, 2, mesh.N, mesh.N))
        eye[0, 0] = eye[1, 1] = 1.0
        m = cls(mesh, np.zeros((2, mesh.N, mesh.N)), jac=eye,
                provenance={"kind": "identity"})
        m._inverse = m
        return m

    # -- cached interpolators --------------------------------------------------

    def _get_interp(self, key: str, values: np.ndarray) -> PeriodicInterpolator:
        ip = self._interp.get(key)
        if ip is None:
            ip = PeriodicInterpolator(values, self.mesh)
            self._interp[key] = ip
        return ip

    def interp_disp(self, points: np.ndarray) -> np.ndarray:
        return np.stack([self._get_interp("u0", self.disp[0])(points),
                         self._get_interp("u1", self.disp[1])(points)])

    def interp_jac(self, points: np.ndarray) -> np.ndarray:
        return np.stack([
            np.stack([self._get_interp(f"j{k}{l}", self.jac[k, l])(points)
                      for l in range(2)])
            for k in range(2)])

    def interp_jac_rough(self, points: np.ndarray) -> np.ndarray:
        """Bilinear Jacobian lookup; enough to steer Newton steps."""
        from scipy import ndimage
        idx = np.stack([points[0] * (self.mesh.N / self.mesh.L[0]),
                        points[1] * (self.mesh.N / self.mesh.L[1])])
        J = self.jac
        return np.stack([
            np.stack([ndimage.map_coordinates(J[k, l], idx, order=1,
                                              mode="grid-wrap", prefilter=False)
                      for l in range(2)])
            for k in range(2)])

    # -- evaluation --------------------------------------------------------------

    @property
    def position(self) -> np.ndarray:
        """Image of the grid on the lift: grid + u, shape (2, N, N)."""
        return self.mesh.points + self.disp

    @property
    def flat_position(self) -> np.ndarray:
        return self.position.reshape(2, -1)

    def is_identity(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.disp).max() <= tol)

    def sup_displacement(self) -> float:
        return float(np.sqrt(self.disp[0] ** 2 + self.disp[1] ** 2).max())

    @property
    def volume_preserving(self) -> bool:
        """Valid iff sup |det J - 1| <= TOL_VP."""
        return bool(np.abs(self.det - 1.0).max() <= TOL_VP)

    def set_analytic_inverse(self, build) -> None:
        """Register a closed-form inverse constructor (used by the catalog)."""
        self._analytic_inverse = build

    def inverse(self) -> "TorusMap":
        inv = self._inverse
        if inv is None:
            if self._analytic_inverse is not None:
                inv = self._analytic_inverse()
            else:
                inv = _newton_inverse(self)
            inv._inverse = self
            self._inverse = inv
        return inv


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def evaluate(phi: TorusMap, x) -> np.ndarray:
    """phi(x) reduced to the fundamental domain; x is (2,) or (2, ...)."""
    pts = np.asarray(x, dtype=float)
    out = pts + phi.interp_disp(pts)
    return phi.mesh.wrap_point(out)


def evaluate_lift(phi: TorusMap, x) -> np.ndarray:
    """phi on the lift: x + u(x), no reduction mod L."""
    pts = np.asarray(x, dtype=float)
    return pts + phi.interp_disp(pts)


def compose(phi: TorusMap, psi: TorusMap, normalize: bool = True,
            chain_jac: bool = True, check: bool = True) -> TorusMap:
    """Grid-sampled phi o psi.

    The composite displacement is lifted to the branch with minimal
    midrange (nearest lift); a failed diffeomorphism check raises rather
    than silently accepting the composite.  The Jacobian is chained
    through interpolation by default (exact determinant algebra for
    closed-form factors); `chain_jac=False` defers to lazy spectral
    differentiation of the composite displacement, which is cheaper and
    just as accurate for well-resolved maps.
    """
    if not phi.mesh.same_grid(psi.mesh):
        raise ValueError("maps live on different meshes")
    if psi.is_identity():
        return phi
    if phi.is_identity():
        return psi
    pts = psi.flat_position
    u = psi.disp + phi.interp_disp(pts).reshape(2, *psi.mesh.shape)
    jac = None
    if chain_jac:
        A = phi.interp_jac(pts).reshape(2, 2, *psi.mesh.shape)
        B = psi.jac
        jac = np.einsum("km...,ml...->kl...", A, B)
    return TorusMap(phi.mesh, u, jac=jac, normalize=normalize,
                    quality=phi.quality + psi.quality + 1.0, check=check)


def inverse(phi: TorusMap) -> TorusMap:
    """The inverse diffeomorphism (cached on the map)."""
    return phi.inverse()


def _newton_inverse(phi: TorusMap, start: np.ndarray | None = None) -> TorusMap:
    """Solve phi(y) = x per grid point by damped Newton on the lift."""
    mesh = phi.mesh
    tol = TOL_INV_SCALE * max(mesh.L)
    x = mesh.flat_points
    y = (x - phi.disp.reshape(2, -1)) if start is None else start.reshape(2, -1).copy()

    def residual(yy):
        r = yy + phi.interp_disp(yy) - x
        return r, np.abs(r).max(axis=0)

    r, rn = residual(y)
    for _ in range(MAX_NEWTON_ITER):
        if rn.max() <= tol:
            # the spectral Jacobian of the (smooth) inverse displacement is
            # computed lazily; Newton convergence certifies invertibility
            return TorusMap(mesh, (y - x).reshape(2, *mesh.shape),
                            quality=phi.quality + 1.0, check=False)
        J = phi.interp_jac_rough(y)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        dy = np.stack([(J[1, 1] * r[0] - J[0, 1] * r[1]) / det,
                       (-J[1, 0] * r[0] + J[0, 0] * r[1]) / det])
        step = np.ones_like(rn)
        for _ in range(8):
            y_try = y - step * dy
            r_try, rn_try = residual(y_try)
            worse = rn_try > rn
            if not worse.any():
                break
            step = np.where(worse, step * 0.5, step)
        y, r, rn = y_try, r_try, rn_try
    i = int(np.argmax(rn))
    raise InversionError(
        f"Newton inversion stalled at x = ({x[0, i]:.4f}, {x[1, i]:.4f}) "
        f"with residual {rn[i]:.3e} (target {tol:.1e})")


def pullback_oneform(phi: TorusMap, alpha: OneForm) -> OneForm:
    """(phi^* alpha)_x = alpha_{phi(x)} o d(phi)_x, sampled on the grid."""
    pts = phi.flat_position
    a = alpha.at(pts).reshape(2, *phi.mesh.shape)
    J = phi.jac
    return OneForm(phi.mesh,
                   a[0] * J[0, 0] + a[1] * J[1, 0],
                   a[0] * J[0, 1] + a[1] * J[1, 1])


def pullback_scalar(phi: TorusMap, f) -> np.ndarray:
    """phi^* f = f o phi for a ScalarField or raw grid array."""
    values = f.values if hasattr(f, "values") else np.asarray(f, dtype=float)
    ip = PeriodicInterpolator(values, phi.mesh)
    return ip(phi.flat_position).reshape(phi.mesh.shape)


def max_singular_value(phi: TorusMap) -> float:
    """sup over the grid of the largest singular value of d(phi)."""
    J = phi.jac
    t = J[0, 0] ** 2 + J[0, 1] ** 2 + J[1, 0] ** 2 + J[1, 1] ** 2
    disc = np.clip(t * t - 4.0 * phi.det ** 2, 0.0, None)
    smax2 = 0.5 * (t + np.sqrt(disc))
    return float(np.sqrt(smax2.max()))


def pullback_bound_constant(phi: TorusMap) -> float:
    """The constant C with ||phi^* alpha||_L2 <= C ||alpha||_L2.

    C = (sup of the largest squared singular value of d(phi))^{1/2} times
    (sup of the density of (phi^{-1})^* dVol)^{1/2}; the second factor is
    1 / min det J, evaluated without needing the inverse map.
    """
    return max_singular_value(phi) / float(np.sqrt(phi.det.min()))


def pushforward_vector(phi: TorusMap, X: np.ndarray) -> np.ndarray:
    """(phi_* X)_y = d(phi)_{phi^{-1}(y)} X_{phi^{-1}(y)} on the grid.

    d(phi) at phi^{-1}(y) is the pointwise inverse of the inverse map's
    Jacobian, so only X itself is interpolated.
    """
    mesh = phi.mesh
    X = np.asarray(X, dtype=float)
    inv = phi.inverse()
    pts = inv.flat_position
    Xi = np.stack([PeriodicInterpolator(X[0], mesh)(pts),
                   PeriodicInterpolator(X[1], mesh)(pts)]).reshape(2, *mesh.shape)
    Ji = inv.jac
    det = inv.det
    # (J_inv)^{-1} = d(phi) at phi^{-1}(y)
    out = np.empty_like(Xi)
    out[0] = (Ji[1, 1] * Xi[0] - Ji[0, 1] * Xi[1]) / det
    out[1] = (-Ji[1, 0] * Xi[0] + Ji[0, 0] * Xi[1]) / det
    return out


def c0_distance(phi: TorusMap, psi: TorusMap) -> float:
    """Uniform distance max(sup d(phi, psi), sup d(phi^{-1}, psi^{-1}))."""
    mesh = phi.mesh
    d1 = mesh.torus_distance(phi.position, psi.position).max()
    d2 = mesh.torus_distance(phi.inverse().position, psi.inverse().position).max()
    return float(max(d1, d2))


def interior_product(X: np.ndarray, omega: TwoForm) -> OneForm:
    """i_X omega for omega = rho dx ^ dy: components (-rho X_y, rho X_x)."""
    rho = omega.density
    return OneForm(omega.mesh, -rho * X[1], rho * X[0])


def divergence(X: np.ndarray, mesh: GridMesh) -> np.ndarray:
    return mesh.derivative(X[0], 0) + mesh.derivative(X[1], 1)


def volume_defect(phi: TorusMap, Y: np.ndarray, omega: TwoForm | None = None) -> float:
    """sup norm of i_{phi_* Y} Omega - (phi^{-1})^*(i_Y Omega).

    Vanishes for every conservative (divergence-free) Y exactly when phi
    preserves Omega; a nonzero value witnesses the volume defect.  Rejects
    Y with divergence above tolerance.
    """
    mesh = phi.mesh
    omega = omega or TwoForm.standard(mesh)
    Y = np.asarray(Y, dtype=float)
    div = divergence(Y, mesh)
    ymax = float(np.abs(Y).max())
    if np.abs(div).max() > 1e-8 * (1.0 + ymax):
        raise ValueError(
            f"vector field is not conservative: |div Y| = {np.abs(div).max():.3e}")
    lhs = interior_product(pushforward_vector(phi, Y), omega)
    rhs = pullback_oneform(phi.inverse(), interior_product(Y, omega))
    return sup_norm(lhs - rhs)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

class Region:
    """An open subset of the torus: a periodic axis-aligned rectangle or a
    metric ball."""

    def __init__(self, kind: str, **params):
        self.kind = kind
        self.params = params
        if kind == "rect":
            lo, hi = params["lo"], params["hi"]
            self.lo = (float(lo[0]), float(lo[1]))
            self.width = (float(hi[0]) - float(lo[0]), float(hi[1]) - float(lo[1]))
            if min(self.width) <= 0:
                raise ValueError("empty rectangle")
        elif kind == "ball":
            self.center = (float(params["center"][0]), float(params["center"][1]))
            self.radius = float(params["radius"])
            if self.radius <= 0:
                raise ValueError("empty ball")
        else:
            raise ValueError(f"unknown region kind {kind!r}")

    @classmethod
    def rectangle(cls, lo, hi) -> "Region":
        return cls("rect", lo=lo, hi=hi)

    @classmethod
    def ball(cls, center, radius) -> "Region":
        return cls("ball", center=center, radius=radius)

    def distance(self, points: np.ndarray, mesh: GridMesh) -> np.ndarray:
        """Flat-torus distance from points (2, ...) to the region (0 inside)."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "ball":
            d = mesh.torus_distance(pts, np.asarray(self.center).reshape(2, *([1] * (pts.ndim - 1))))
            return np.clip(d - self.radius, 0.0, None)
        d2 = np.zeros(pts.shape[1:])
        for k in range(2):
            c = np.mod(pts[k] - self.lo[k], mesh.L[k])
            ax = np.where(c <= self.width[k], 0.0,
                          np.minimum(c - self.width[k], mesh.L[k] - c))
            d2 += ax ** 2
        return np.sqrt(d2)

    def contains(self, points: np.ndarray, mesh: GridMesh, pad: float = 0.0) -> np.ndarray:
        """Membership test, optionally padded outward by `pad`."""
        if pad == 0.0:
            if self.kind == "ball":
                pts = np.asarray(points, dtype=float)
                c = np.asarray(self.center).reshape(2, *([1] * (pts.ndim - 1)))
                return mesh.torus_distance(pts, c) < self.radius
            pts = np.asarray(points, dtype=float)
            ok = np.ones(pts.shape[1:], dtype=bool)
            for k in range(2):
                c = np.mod(pts[k] - self.lo[k], mesh.L[k])
                ok &= c < self.width[k]
            return ok
        return self.distance(points, mesh) < pad

    def grid_points(self, mesh: GridMesh, pad: float = 0.0) -> np.ndarray:
        """Grid points inside the region (padded), shape (2, M)."""
        mask = self.contains(mesh.points, mesh, pad=pad).ravel()
        return mesh.flat_points[:, mask]

    def measure(self, mesh: GridMesh) -> float:
        return float(self.contains(mesh.points, mesh).sum()) * mesh.cell_volume

    def __repr__(self):
        if self.kind == "rect":
            hi = (self.lo[0] + self.width[0], self.lo[1] + self.width[1])
            return f"Region.rectangle({self.lo}, {hi})"
        return f"Region.ball({self.center}, {self.radius})"
