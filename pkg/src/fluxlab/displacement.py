"""Displacement calculus for volume-preserving torus maps.

The central objects: the displacement potential of a closed 1-form under a
map isotopic to the identity, its volume average (the invariant Delta),
the norm obtained by maximizing over the unit sphere of closed forms, and
the displacement-energy machinery built from supported commutators.

The sup over the unit sphere is truncated to the span of the harmonic
forms and the exact forms with potentials in the Fourier band |k| <= m.
On that subspace the objective is linear in the form, so the exact
maximizer has a closed form: the table of random sphere samples is
reported together with the exact subspace maximizer, and the estimate is
a certified lower bound for the full norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .forms import (OneForm, ScalarField, TwoForm,
                    harmonic_representative, hodge_decompose, l2_norm,
                    sup_norm, wedge_integral)
from .isotopy import Isotopy, orbit_integral, volume_flux
from .maps import (Region, TorusMap, c0_distance, compose,
                   max_singular_value, pullback_bound_constant,
                   pullback_oneform)
from .mesh import GridMesh

TWO_PI = 2.0 * np.pi

#: Maps are accepted as isotopic to the identity for a given form when the
#: periods of (psi^* alpha - alpha) fall below this.
TOL_PERIODS = 1e-6


class NotIsotopicError(ValueError):
    """psi^* alpha - alpha has nonzero periods: the map is not accepted as
    isotopic to the identity for this form."""


# ---------------------------------------------------------------------------
# the displacement potential and Delta
# ---------------------------------------------------------------------------

def _displacement_potential(psi: TorusMap, alpha: OneForm) -> ScalarField:
    """Mean-zero potential of psi^* alpha - alpha (exact by path
    independence once the periods vanish); cached per (map, form) pair."""
    cache = getattr(psi, "_potential_cache", None)
    if cache is None:
        cache = {}
        psi._potential_cache = cache
    hit = cache.get(id(alpha))
    if hit is not None and hit[0] is alpha:
        return hit[1]
    diff = pullback_oneform(psi, alpha) - alpha
    pm = max(abs(float(diff.ax.mean()) * psi.mesh.L[0]),
             abs(float(diff.ay.mean()) * psi.mesh.L[1]))
    if pm > TOL_PERIODS * (1.0 + sup_norm(alpha)):
        raise NotIsotopicError(
            f"periods of psi^*alpha - alpha are {pm:.3e}; map rejected as "
            "isotopic to the identity for this form")
    P = hodge_decompose(diff).potential
    if len(cache) < 64:
        cache[id(alpha)] = (alpha, P)  # keep the form alive so ids stay unique
    return P


def nu_function(psi: TorusMap, alpha: OneForm, p,
                closed_tol: float | None = None) -> ScalarField:
    """The displacement potential normalized to vanish at the base point:
    nu(z) = integral from p to z of (psi^* alpha - alpha).

    Computed through the Hodge potential, which equals the geodesic line
    integral by path independence and avoids cut-locus ties.  `closed_tol`
    loosens the closedness gate for forms that already carry numerical
    noise (e.g. pull-backs); the potential extraction projects that noise
    out either way.
    """
    alpha.require_closed(tol=closed_tol, what="nu_function")
    P = _displacement_potential(psi, alpha)
    return P - float(P.at(np.asarray(p, dtype=float)))


def delta(psi: TorusMap, alpha: OneForm, p, omega: TwoForm | None = None,
          closed_tol: float | None = None) -> float:
    """Volume average of nu over the torus, normalized by ||alpha||_L2;
    identically 0 for alpha = 0."""
    if alpha.is_zero():
        return 0.0
    omega = omega or TwoForm.standard(psi.mesh)
    nu = nu_function(psi, alpha, p, closed_tol)
    return psi.mesh.integrate(nu.values * omega.density) / l2_norm(alpha)


def delta_tilde(psi: TorusMap, alpha: OneForm, p,
                omega: TwoForm | None = None,
                closed_tol: float | None = None) -> float:
    """The unnormalized invariant ||alpha|| * delta."""
    if alpha.is_zero():
        return 0.0
    omega = omega or TwoForm.standard(psi.mesh)
    nu = nu_function(psi, alpha, p, closed_tol)
    return psi.mesh.integrate(nu.values * omega.density)


def delta_via_flux(psi: TorusMap, alpha: OneForm, x, phi_path: Isotopy,
                   omega: TwoForm | None = None) -> float:
    """Independent route to delta: cohomology pairing with the flux of an
    isotopy ending at psi, minus the volume-weighted orbit integral.

    The value does not depend on the choice of the isotopy.
    """
    mesh = psi.mesh
    omega = omega or TwoForm.standard(mesh)
    gap = mesh.torus_distance(phi_path.end_map.position, psi.position).max()
    if gap > 1e-6:
        raise ValueError(
            f"isotopy endpoint differs from psi by {gap:.3e} > 1e-6")
    alpha.require_closed(what="delta_via_flux")
    if alpha.is_zero():
        return 0.0
    flux = volume_flux(phi_path, omega)
    sigma = harmonic_representative(mesh, flux)
    pairing = wedge_integral(alpha, sigma)
    orbit = orbit_integral(phi_path, x, alpha)
    vol = omega.total()
    return (pairing - vol * orbit) / l2_norm(alpha)


# ---------------------------------------------------------------------------
# the unit sphere sampler and the norm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitSphereSampler:
    """Random draws from the L2 unit sphere of a closed-form subspace:
    harmonic directions plus exact directions dG with G in the Fourier band
    |k|_inf <= max_mode."""

    mesh: GridMesh
    max_mode: int = 8
    count: int = 64
    refine: int = 1
    seed: int = 0

    @cached_property
    def wavevectors(self) -> list[tuple[int, int]]:
        """Half lattice (one representative per +-k pair)."""
        out = []
        m = self.max_mode
        for k1 in range(0, m + 1):
            for k2 in range(-m, m + 1):
                if k1 == 0 and k2 <= 0:
                    continue
                out.append((k1, k2))
        return out

    @property
    def dimension(self) -> int:
        return 2 + 2 * len(self.wavevectors)

    def coefficient_index(self, k1: int, k2: int, trig: str = "cos") -> int:
        """Position of the (k1, k2) cosine/sine exact direction in the
        coefficient vector (harmonic dx, dy occupy slots 0 and 1)."""
        if (k1, k2) not in self._wave_index:
            raise KeyError(f"wavevector {(k1, k2)} outside the sampled band")
        return 2 + 2 * self._wave_index[(k1, k2)] + (0 if trig == "cos" else 1)

    @cached_property
    def _wave_index(self) -> dict:
        return {k: i for i, k in enumerate(self.wavevectors)}

    def _omega(self, k: tuple[int, int]) -> tuple[float, float]:
        return (TWO_PI * k[0] / self.mesh.L[0], TWO_PI * k[1] / self.mesh.L[1])

    def _amp(self, k: tuple[int, int]) -> float:
        w = self._omega(k)
        return math.sqrt(2.0 / self.mesh.volume) / math.hypot(*w)

    def draw_coefficients(self, rng: np.random.Generator) -> np.ndarray:
        c = rng.standard_normal(self.dimension)
        return c / np.linalg.norm(c)

    def materialize(self, coeffs: np.ndarray) -> OneForm:
        """The closed unit form with the given basis coefficients."""
        mesh = self.mesh
        X, Y = mesh.points
        root_vol = math.sqrt(mesh.volume)
        ax = np.full(mesh.shape, coeffs[0] / root_vol)
        ay = np.full(mesh.shape, coeffs[1] / root_vol)
        for i, k in enumerate(self.wavevectors):
            w = self._omega(k)
            a = self._amp(k)
            phase = w[0] * X + w[1] * Y
            c_cos, c_sin = coeffs[2 + 2 * i], coeffs[3 + 2 * i]
            # d(a cos) = -a sin(w.x) w ; d(a sin) = a cos(w.x) w
            s, c = np.sin(phase), np.cos(phase)
            val = -c_cos * a * s + c_sin * a * c
            ax += val * w[0]
            ay += val * w[1]
        return OneForm(mesh, ax, ay)


def _basis_potentials(psi: TorusMap, sampler: UnitSphereSampler):
    """Displacement potentials of every basis form under psi.

    Fourier basis forms are evaluated exactly at the image points through
    power ladders of exp(2 pi i psi(x) / L), so the pull-backs carry no
    interpolation error; potentials are extracted by a batched spectral
    solve.  Returns (P, periods_residual) with P of shape (D, N*N).
    """
    mesh = psi.mesh
    N = mesh.N
    D = sampler.dimension
    P = np.empty((D, N * N))
    root_vol = math.sqrt(mesh.volume)

    # harmonic directions: psi^* dx - dx = d(u_x), exactly
    for k in range(2):
        u = psi.disp[k]
        P[k] = ((u - u.mean()) / root_vol).ravel()

    kvecs = sampler.wavevectors
    if not kvecs:
        return P, 0.0

    pos = psi.position
    m = sampler.max_mode
    E1 = np.exp(2j * np.pi * pos[0] / mesh.L[0])
    E2 = np.exp(2j * np.pi * pos[1] / mesh.L[1])
    G1 = np.exp(2j * np.pi * mesh.points[0] / mesh.L[0])
    G2 = np.exp(2j * np.pi * mesh.points[1] / mesh.L[1])

    def ladder(base):
        out = [np.ones_like(base)]
        for _ in range(m):
            out.append(out[-1] * base)
        return out

    lad_E1, lad_E2 = ladder(E1), ladder(E2)
    lad_G1, lad_G2 = ladder(G1), ladder(G2)
    J = psi.jac

    comps = np.empty((len(kvecs), 2, 2, N, N))  # (k, {cos,sin}, component)
    for i, (k1, k2) in enumerate(kvecs):
        w0, w1 = sampler._omega((k1, k2))
        a = sampler._amp((k1, k2))
        W = lad_E1[k1] * (lad_E2[k2] if k2 >= 0 else np.conj(lad_E2[-k2]))
        Wg = lad_G1[k1] * (lad_G2[k2] if k2 >= 0 else np.conj(lad_G2[-k2]))
        # (psi^* dG)_l = val(psi(x)) (w . J_l), minus the same at the identity
        c0 = w0 * J[0, 0] + w1 * J[1, 0]
        c1 = w0 * J[0, 1] + w1 * J[1, 1]
        s_p, c_p = W.imag, W.real
        s_g, c_g = Wg.imag, Wg.real
        comps[i, 0, 0] = -a * (s_p * c0 - s_g * w0)
        comps[i, 0, 1] = -a * (s_p * c1 - s_g * w1)
        comps[i, 1, 0] = a * (c_p * c0 - c_g * w0)
        comps[i, 1, 1] = a * (c_p * c1 - c_g * w1)

    flat = comps.reshape(-1, 2, N, N)
    pr = max(float(np.abs(flat[:, 0].mean(axis=(1, 2))).max()) * mesh.L[0],
             float(np.abs(flat[:, 1].mean(axis=(1, 2))).max()) * mesh.L[1])

    spec = np.fft.rfft2(flat, axes=(-2, -1))
    K0, K1 = mesh._rfft_wavenumbers
    k2_safe = K0 * K0 + K1 * K1
    k2_safe[0, 0] = 1.0
    Fh = (K0 * spec[:, 0] + K1 * spec[:, 1]) / (1j * k2_safe)
    Fh[:, 0, 0] = 0.0
    P[2:] = np.fft.irfft2(Fh, s=mesh.shape, axes=(-2, -1)).reshape(len(flat), -1)
    return P, pr


@dataclass
class DisplacementReport:
    """Outcome of the sup-norm estimation for one map."""

    norm_lower_bound: float
    witness_coeffs: np.ndarray
    witness_point: tuple[float, float]
    table: list[dict]
    sampler_meta: dict
    map_provenance: dict

    def witness_form(self, sampler: UnitSphereSampler) -> OneForm:
        return sampler.materialize(self.witness_coeffs)

    def witness_periods(self, sampler: UnitSphereSampler) -> tuple[float, float]:
        mesh = sampler.mesh
        root_vol = math.sqrt(mesh.volume)
        return (self.witness_coeffs[0] / root_vol * mesh.L[0],
                self.witness_coeffs[1] / root_vol * mesh.L[1])

    def write_table(self, path) -> str:
        """Dump the per-sample table to CSV; returns the path."""
        lines = ["sample,value,point_x,point_y"]
        for r in self.table:
            lines.append(f"{r['sample']},{r['value']!r},"
                         f"{r['point'][0]!r},{r['point'][1]!r}")
        from pathlib import Path
        Path(path).write_text("\n".join(lines) + "\n")
        return str(path)

    def to_json(self, sampler: UnitSphereSampler | None = None,
                table_path=None) -> dict:
        out = {
            "norm_lower_bound": self.norm_lower_bound,
            "witness_point": list(self.witness_point),
            "sampler": self.sampler_meta,
            "map": self.map_provenance,
        }
        if table_path is not None:
            out["table_path"] = self.write_table(table_path)
        else:
            out["table"] = [dict(r, point=list(r["point"])) for r in self.table]
        if sampler is not None:
            out["witness_form_periods"] = list(self.witness_periods(sampler))
        return out


def psi_norm(psi: TorusMap, sampler: UnitSphereSampler) -> DisplacementReport:
    """Certified lower bound of the displacement norm of psi.

    Evaluates sup_z |Delta-tilde(psi, alpha)_z| = Vol * sup |P_alpha| on
    `count` random unit forms, then appends the exact maximizer over the
    sampled subspace (the potential map is linear in alpha, so for each
    point the optimal coefficients are the normalized potential vector and
    the subspace sup is max_x ||P(:, x)||_2).  The reported value is the
    table maximum, hence monotone in the sample budget.
    """
    if sampler.count <= 0 and not sampler.refine:
        raise ValueError("sampler budget is zero: nothing to estimate")
    cache = getattr(psi, "_norm_cache", None)
    if cache is None:
        cache = {}
        psi._norm_cache = cache
    key = (sampler.max_mode, sampler.count, sampler.refine, sampler.seed)
    hit = cache.get(key)
    if hit is not None:
        return hit

    mesh = psi.mesh
    P, periods_resid = _basis_potentials(psi, sampler)
    if periods_resid > TOL_PERIODS:
        raise NotIsotopicError(
            f"basis pull-backs have periods residual {periods_resid:.3e}; "
            "map rejected as isotopic to the identity")
    vol = mesh.volume
    rng = np.random.default_rng(sampler.seed)
    rows = []
    best = (-1.0, None, 0)
    coeffs = [sampler.draw_coefficients(rng) for _ in range(sampler.count)]
    if coeffs:
        vals = np.asarray(coeffs) @ P  # (count, N*N)
        amax = np.abs(vals).argmax(axis=1)
        for s in range(sampler.count):
            v = vol * abs(vals[s, amax[s]])
            pt = mesh.flat_points[:, amax[s]]
            rows.append({"sample": f"draw-{s:03d}", "value": float(v),
                         "point": (float(pt[0]), float(pt[1]))})
            if v > best[0]:
                best = (v, coeffs[s], amax[s])
    if sampler.refine:
        G = np.sqrt(np.einsum("dx,dx->x", P, P))
        idx = int(G.argmax())
        gmax = G[idx]
        if gmax > 0:
            c_star = P[:, idx] / gmax
        else:
            c_star = np.zeros(sampler.dimension)
            c_star[0] = 1.0
        v = vol * float(gmax)
        pt = mesh.flat_points[:, idx]
        rows.append({"sample": "subspace-max", "value": v,
                     "point": (float(pt[0]), float(pt[1]))})
        if v >= best[0]:
            best = (v, c_star, idx)

    pt = mesh.flat_points[:, best[2]]
    report = DisplacementReport(
        norm_lower_bound=float(best[0]),
        witness_coeffs=np.asarray(best[1], dtype=float),
        witness_point=(float(pt[0]), float(pt[1])),
        table=rows,
        sampler_meta={"m": sampler.max_mode, "count": sampler.count,
                      "seed": sampler.seed, "refine": sampler.refine},
        map_provenance=dict(psi.provenance),
    )
    cache[key] = report
    return report


# ---------------------------------------------------------------------------
# norm axioms, conjugation
# ---------------------------------------------------------------------------

@dataclass
class AxiomViolation:
    axiom: str
    detail: str
    excess: float


@dataclass
class NormAxiomReport:
    norms: list[float]
    violations: list[AxiomViolation]
    checked: dict

    @property
    def passed(self) -> bool:
        return not self.violations


def norm_axiom_report(maps: list[TorusMap], sampler: UnitSphereSampler,
                      slack: float = 0.05, sep_dist: float = 0.05,
                      sep_norm: float = 1e-3) -> NormAxiomReport:
    """Check positivity, the triangle inequality, duality, and separation
    on sampled norm estimates; returns violations with witnesses."""
    norms = [psi_norm(m, sampler).norm_lower_bound for m in maps]
    violations = []
    checked = {"positivity": len(maps), "triangle": 0, "duality": 0,
               "separation": 0}
    for i, n in enumerate(norms):
        if n < 0:
            violations.append(AxiomViolation("positivity", f"map {i}", -n))
    for i, a in enumerate(maps):
        for j, b in enumerate(maps):
            if i == j:
                continue
            checked["triangle"] += 1
            n_ab = psi_norm(compose(a, b), sampler).norm_lower_bound
            bound = norms[i] + norms[j]
            if n_ab > bound + slack * max(bound, 1e-30):
                violations.append(AxiomViolation(
                    "triangle", f"maps ({i}, {j})", n_ab - bound))
    for i, a in enumerate(maps):
        checked["duality"] += 1
        n_inv = psi_norm(a.inverse(), sampler).norm_lower_bound
        gap = abs(n_inv - norms[i])
        if gap > slack * max(norms[i], n_inv, 1e-30):
            violations.append(AxiomViolation("duality", f"map {i}", gap))
    ident = TorusMap.identity(maps[0].mesh) if maps else None
    for i, a in enumerate(maps):
        if c0_distance(a, ident) > sep_dist:
            checked["separation"] += 1
            if norms[i] <= sep_norm:
                violations.append(AxiomViolation(
                    "separation", f"map {i}", sep_norm - norms[i]))
    return NormAxiomReport(norms=norms, violations=violations, checked=checked)


@dataclass
class ConjugationReport:
    identity_residual: float
    lhs: float
    rhs: float
    sandwich_ok: bool
    norm_h: float
    norm_conj: float
    c_phi: float
    c_phi_inv: float

    def passed(self, tol: float = 1e-4) -> bool:
        return self.identity_residual <= tol and self.sandwich_ok


def _require_vanishing_flux(phi: TorusMap):
    fp = phi.provenance.get("flux_periods")
    if fp is None:
        raise ValueError(
            "phi carries no vanishing-flux certificate (build it from a "
            "Hamiltonian generator in the catalog)")
    if max(abs(fp[0]), abs(fp[1])) > 1e-6:
        raise ValueError(f"phi has nonzero flux {fp}; not Hamiltonian-class")


def conjugation_check(h: TorusMap, phi: TorusMap, x, alpha: OneForm,
                      sampler: UnitSphereSampler, slack: float = 0.05,
                      omega: TwoForm | None = None) -> ConjugationReport:
    """The conjugation identity for the unnormalized invariant:
    Delta~(phi h phi^{-1}, alpha) at phi(x) equals Delta~(h, phi^* alpha)
    at x, for vanishing-flux phi; plus the two-sided norm equivalence
    through the pull-back constants of phi.

    The normalized invariant transforms with the extra factor
    ||phi^* alpha|| / ||alpha||, which the unnormalized form absorbs.
    """
    _require_vanishing_flux(phi)
    from .maps import evaluate_lift
    conj = compose(compose(phi, h), phi.inverse())
    x = np.asarray(x, dtype=float)
    beta = pullback_oneform(phi, alpha)
    # pulled-back forms carry interpolation-level d-residuals; closed in
    # exact arithmetic, so the gate only needs to reject genuine non-closedness
    loose = 1e-4 * (1.0 + max(sup_norm(alpha), sup_norm(beta)))
    lhs = delta_tilde(conj, alpha, evaluate_lift(phi, x), omega, closed_tol=loose)
    rhs = delta_tilde(h, beta, x, omega, closed_tol=loose)
    n_h = psi_norm(h, sampler).norm_lower_bound
    n_c = psi_norm(conj, sampler).norm_lower_bound
    c_phi = pullback_bound_constant(phi)
    c_phi_inv = pullback_bound_constant(phi.inverse())
    ok = (n_h / c_phi_inv <= n_c + slack * max(n_h, 1e-30)
          and n_c <= c_phi * n_h + slack * max(n_h, 1e-30))
    return ConjugationReport(identity_residual=abs(lhs - rhs), lhs=lhs,
                             rhs=rhs, sandwich_ok=ok, norm_h=n_h,
                             norm_conj=n_c, c_phi=c_phi, c_phi_inv=c_phi_inv)


# ---------------------------------------------------------------------------
# displacement and displacement energy
# ---------------------------------------------------------------------------

@dataclass
class DisplacementCheck:
    displaced: bool
    marginal: bool
    min_distance: float
    margin: float

    def __bool__(self) -> bool:
        return self.displaced


def displaces(psi: TorusMap, region: Region,
              margin: float | None = None) -> DisplacementCheck:
    """True iff the image of a dense grid sample of the region stays away
    from the region by more than the interpolation safety margin.

    Near-boundary outcomes within the margin come back as false with the
    marginal flag set, never as a silent true.
    """
    mesh = psi.mesh
    pts = region.grid_points(mesh)
    if pts.shape[1] == 0:
        raise ValueError("region contains no grid points at this resolution")
    if margin is None:
        h_diag = math.hypot(*mesh.spacing)
        margin = h_diag * (1.0 + max_singular_value(psi))
    images = pts + psi.interp_disp(pts)
    dmin = float(region.distance(images, mesh).min())
    return DisplacementCheck(displaced=dmin > margin,
                             marginal=(0.0 < dmin <= margin),
                             min_distance=dmin, margin=margin)


def displacement_energy_upper(region: Region, candidates: list[TorusMap],
                              sampler: UnitSphereSampler) -> float:
    """Smallest sampled norm among the candidates that displace the region;
    +inf when none does."""
    best = math.inf
    for psi in candidates:
        if displaces(psi, region):
            best = min(best, psi_norm(psi, sampler).norm_lower_bound)
    return best


def _pair_geometry(region: Region, mesh: GridMesh):
    """Centers and support radius for two overlapping bumps inside the
    region; rectangles place the bumps along their long axis."""
    if region.kind == "ball":
        c, r = region.center, region.radius
        rho, off = 0.55 * r, 0.35 * r
        gap = r - (off + rho)
        c1 = (c[0] - off, c[1])
        c2 = (c[0] + off, c[1])
        return c1, c2, rho, gap
    lo, w = region.lo, region.width
    c = (lo[0] + w[0] / 2.0, lo[1] + w[1] / 2.0)
    short = min(w) / 2.0
    axis = 0 if w[0] >= w[1] else 1
    rho = 0.85 * short
    off = 0.6 * rho
    gap = min(short - rho, max(w) / 2.0 - (off + rho))
    d = np.zeros(2)
    d[axis] = off
    return (c[0] - d[0], c[1] - d[1]), (c[0] + d[0], c[1] + d[1]), rho, gap


def supported_commutator_pair(region: Region, mesh: GridMesh,
                              angle: float = 0.5) -> tuple[TorusMap, TorusMap]:
    """Two Hamiltonian time-1 maps supported inside the region with
    partially overlapping supports and a commutator far from the identity.

    Both are bump rotations: identity outside the region to round-off,
    volume preserving with vanishing flux by construction.  The default
    rotation angle keeps the bump Jacobians resolved on the grid so that
    composition chains stay well conditioned.
    """
    from .catalog import bump_rotation
    if region.measure(mesh) < 4.0 * mesh.cell_volume:
        raise ValueError("region smaller than 4 grid cells at this resolution")
    c1, c2, rho, gap = _pair_geometry(region, mesh)
    if gap < max(mesh.spacing):
        raise ValueError(
            f"region too small at N = {mesh.N}: support margin {gap:.4f} "
            f"is under one grid cell")
    phi = bump_rotation(mesh, c1, rho, angle)
    psi = bump_rotation(mesh, c2, rho, angle)
    for m in (phi, psi):
        outside = ~region.contains(mesh.points, mesh)
        worst = float(np.abs(m.disp[:, outside]).max()) if outside.any() else 0.0
        if worst > 1e-12:
            raise AssertionError(f"support leaked outside the region: {worst:.2e}")
        m.provenance["supported_in"] = repr(region)
    comm = map_commutator(phi, psi)
    d0 = c0_distance(comm, TorusMap.identity(mesh))
    if d0 <= 1e-3:
        raise AssertionError(
            f"commutator of the supported pair is too close to the identity "
            f"(d0 = {d0:.2e}); increase the rotation angle")
    return phi, psi


def map_commutator(a: TorusMap, b: TorusMap) -> TorusMap:
    """[a, b] = b^{-1} a^{-1} b a.

    The composite Jacobian is differentiated spectrally from the sampled
    displacement: for marginally resolved factors this keeps positions and
    Jacobian mutually consistent, which the pull-back period checks need.
    """
    c = compose(compose(compose(b.inverse(), a.inverse(), chain_jac=False),
                        b, chain_jac=False), a, chain_jac=False)
    return c


def commutator_collapse_check(f: TorusMap, phi: TorusMap, psi: TorusMap,
                              region: Region) -> float:
    """Uniform distance between [[f, phi^{-1}], psi] and [phi, psi] for
    phi, psi supported in the region and f displacing it; the two sides
    agree up to the composition error budget.

    Raises when f does not displace the region (a precondition, not a
    residual).
    """
    mesh = f.mesh
    outside = ~region.contains(mesh.points, mesh)
    for name, m in (("phi", phi), ("psi", psi)):
        worst = float(np.abs(m.disp[:, outside]).max()) if outside.any() else 0.0
        if worst > 1e-10:
            raise ValueError(f"{name} is not supported in the region "
                             f"(displacement {worst:.2e} outside)")
    if not displaces(f, region):
        raise ValueError("f does not displace the region")
    # [f, phi^{-1}] = phi f^{-1} phi^{-1} f, inverted by reversing factors
    def cc(a, b):
        return compose(a, b, chain_jac=False)

    c = cc(cc(cc(phi, f.inverse()), phi.inverse()), f)
    c_inv = cc(cc(cc(f.inverse(), phi), f), phi.inverse())
    c._inverse, c_inv._inverse = c_inv, c
    lhs = cc(cc(cc(psi.inverse(), c_inv), psi), c)
    rhs = map_commutator(phi, psi)
    return float(mesh.torus_distance(lhs.position, rhs.position).max())


@dataclass
class EnergyChainReport:
    lower_bound: float
    chain_ok: bool
    norm_commutator: float
    norm_f: float
    c_phi: float
    c_psi_inv: float
    collapse_residual: float

    @property
    def passed(self) -> bool:
        return self.chain_ok and self.lower_bound > 0.0


def energy_chain_check(region: Region, f: TorusMap,
                       sampler: UnitSphereSampler,
                       slack: float = 0.05) -> EnergyChainReport:
    """The positivity chain for the displacement energy of the region.

    Builds a supported commutator pair, verifies the collapse identity and
    the inequality  ||[phi, psi]|| <= (C_{psi^{-1}} + 1)(C_phi + 1) ||f||
    on sampled estimates, and reports the implied positive lower bound
    ||[phi, psi]|| / ((C_{psi^{-1}} + 1)(C_phi + 1)) for the energy.
    """
    check = displaces(f, region)
    if not check:
        raise ValueError("f does not displace the region (precondition)")
    mesh = f.mesh
    phi, psi = supported_commutator_pair(region, mesh)
    collapse = commutator_collapse_check(f, phi, psi, region)
    comm = map_commutator(phi, psi)
    n_comm = psi_norm(comm, sampler).norm_lower_bound
    n_f = psi_norm(f, sampler).norm_lower_bound
    c_phi = pullback_bound_constant(phi)
    c_psi_inv = pullback_bound_constant(psi.inverse())
    const = (c_psi_inv + 1.0) * (c_phi + 1.0)
    chain_ok = n_comm <= const * n_f * (1.0 + slack)
    return EnergyChainReport(lower_bound=n_comm / const, chain_ok=chain_ok,
                             norm_commutator=n_comm, norm_f=n_f,
                             c_phi=c_phi, c_psi_inv=c_psi_inv,
                             collapse_residual=collapse)


# ---------------------------------------------------------------------------
# rigidity pattern
# ---------------------------------------------------------------------------

@dataclass
class RigidityReport:
    distances: list[float]
    norm_premises: list[float]
    final_distance: float
    pattern_violated: bool
    premise_threshold: float
    distance_threshold: float

    @property
    def passed(self) -> bool:
        return not self.pattern_violated


def rigidity_limit_check(sequence: list[TorusMap], phi: TorusMap,
                         sampler: UnitSphereSampler,
                         premise_threshold: float = 1e-3,
                         distance_threshold: float = 5e-2) -> RigidityReport:
    """Track the two premises of the uniform-limit rigidity statement along
    a sequence: d0(phi_i, phi) and the sampled norm of phi_i o phi^{-1}.

    The forbidden pattern is premises below threshold while the final
    distance stays large; the report records whether it ever occurs.
    """
    phi_inv = phi.inverse()
    distances, premises = [], []
    for m in sequence:
        distances.append(c0_distance(m, phi))
        # the same object composes with its inverse to the identity exactly
        g = TorusMap.identity(phi.mesh) if m is phi else compose(m, phi_inv)
        premises.append(psi_norm(g, sampler).norm_lower_bound)
    final_distance = distances[-1] if distances else 0.0
    violated = (premises and premises[-1] < premise_threshold
                and final_distance > distance_threshold)
    return RigidityReport(distances=distances, norm_premises=premises,
                          final_distance=final_distance,
                          pattern_violated=bool(violated),
                          premise_threshold=premise_threshold,
                          distance_threshold=distance_threshold)
