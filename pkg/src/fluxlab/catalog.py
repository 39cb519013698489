"""Named map and flow generators with closed-form data.

Every builder here supplies analytic displacement, Jacobian, and (where a
closed form exists) the inverse map, so determinants and pull-back data
are exact to round-off rather than limited by spectral differentiation of
barely resolved fields.  Flow builders attach the exact generating vector
field to the isotopies they produce.

Specs are addressable from experiment configs by name + parameters via
`build_map` / `build_flow` / `build_region`.
"""

from __future__ import annotations

import numpy as np

from .isotopy import Isotopy, TimeField, integrate_flow
from .maps import Region, TorusMap
from .mesh import GridMesh

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# elementary closed-form maps
# ---------------------------------------------------------------------------

def identity_map(mesh: GridMesh) -> TorusMap:
    return TorusMap.identity(mesh)


def translation(mesh: GridMesh, c: float, d: float) -> TorusMap:
    """x -> x + (c, d); an isometry with J = I."""
    N = mesh.N
    disp = np.empty((2, N, N))
    disp[0] = c
    disp[1] = d
    jac = np.zeros((2, 2, N, N))
    jac[0, 0] = jac[1, 1] = 1.0
    m = TorusMap(mesh, disp, jac=jac,
                 provenance={"kind": "translation", "c": c, "d": d})
    m.set_analytic_inverse(lambda: translation(mesh, -c, -d))
    return m


def shear(mesh: GridMesh, eps: float, axis: int = 0, mode: int = 1,
          phase: float = 0.0) -> TorusMap:
    """Shear along `axis` with a sinusoidal profile of the other coordinate.

    axis=0: (x, y) -> (x + eps sin(2 pi m y / L1 + phase), y).  The time-1
    map of a Hamiltonian flow, so volume preserving with vanishing flux.
    """
    N = mesh.N
    X, Y = mesh.points
    w = TWO_PI * mode / mesh.L[1 - axis]
    coord = Y if axis == 0 else X
    disp = np.zeros((2, N, N))
    disp[axis] = eps * np.sin(w * coord + phase)
    jac = np.zeros((2, 2, N, N))
    jac[0, 0] = jac[1, 1] = 1.0
    jac[axis, 1 - axis] = eps * w * np.cos(w * coord + phase)
    m = TorusMap(mesh, disp, jac=jac,
                 provenance={"kind": "shear", "eps": eps, "axis": axis,
                             "mode": mode, "flux_periods": (0.0, 0.0)})
    m.set_analytic_inverse(lambda: shear(mesh, -eps, axis, mode, phase))
    return m


def _twist_data(mesh: GridMesh, e1: float, e2: float, m1: int, m2: int,
                first_axis: int):
    """Displacement and Jacobian of a composite of two transverse shears.

    first_axis = 0: apply the x-shear first, then the y-shear.
    """
    X, Y = mesh.points
    w1 = TWO_PI * m1 / mesh.L[1]
    w2 = TWO_PI * m2 / mesh.L[0]
    N = mesh.N
    disp = np.empty((2, N, N))
    jac = np.zeros((2, 2, N, N))
    if first_axis == 0:
        u1 = e1 * np.sin(w1 * Y)
        u2 = e2 * np.sin(w2 * (X + u1))
        a = e1 * w1 * np.cos(w1 * Y)
        b = e2 * w2 * np.cos(w2 * (X + u1))
        disp[0], disp[1] = u1, u2
        jac[0, 0] = 1.0
        jac[0, 1] = a
        jac[1, 0] = b
        jac[1, 1] = 1.0 + a * b
    else:
        u2 = e2 * np.sin(w2 * X)
        u1 = e1 * np.sin(w1 * (Y + u2))
        b = e2 * w2 * np.cos(w2 * X)
        a = e1 * w1 * np.cos(w1 * (Y + u2))
        disp[0], disp[1] = u1, u2
        jac[0, 0] = 1.0 + a * b
        jac[0, 1] = a
        jac[1, 0] = b
        jac[1, 1] = 1.0
    return disp, jac


def twist(mesh: GridMesh, e1: float, e2: float, m1: int = 1, m2: int = 1,
          first_axis: int = 0) -> TorusMap:
    """Composite of an x-shear and a y-shear; det J = 1 exactly.

    A product of two Hamiltonian time-1 maps, hence volume preserving with
    vanishing flux.
    """
    disp, jac = _twist_data(mesh, e1, e2, m1, m2, first_axis)
    m = TorusMap(mesh, disp, jac=jac,
                 provenance={"kind": "twist", "e1": e1, "e2": e2,
                             "m1": m1, "m2": m2,
                             "flux_periods": (0.0, 0.0)})
    m.set_analytic_inverse(
        lambda: twist(mesh, -e1, -e2, m1, m2, first_axis=1 - first_axis))
    return m


def _bump_chi(s: np.ndarray):
    """chi(s) = exp(1 - 1/(1-s)) on [0, 1), identically 0 for s >= 1;
    returns (chi, dchi/ds)."""
    s = np.asarray(s, dtype=float)
    inside = s < 1.0
    chi = np.zeros_like(s)
    dchi = np.zeros_like(s)
    si = s[inside]
    with np.errstate(over="ignore", under="ignore"):
        c = np.exp(1.0 - 1.0 / (1.0 - si))
    chi[inside] = c
    dchi[inside] = -c / (1.0 - si) ** 2
    return chi, dchi


def bump_rotation(mesh: GridMesh, center, radius: float, angle: float) -> TorusMap:
    """Rotate each circle r = const about `center` by angle(r) =
    angle * chi((r/radius)^2); identity outside the radius.

    The time-1 map of a compactly supported Hamiltonian flow: each circle
    is rotated rigidly, so areas are preserved (det J = 1 analytically)
    and the flux vanishes.
    """
    if radius >= mesh.injectivity_radius:
        raise ValueError("support radius must be below the injectivity radius")
    v = mesh.wrap_delta(mesh.points - np.asarray(center, dtype=float).reshape(2, 1, 1))
    s = (v[0] ** 2 + v[1] ** 2) / radius ** 2
    chi, dchi = _bump_chi(s)
    theta = angle * chi
    ct, st = np.cos(theta), np.sin(theta)
    disp = np.stack([ct * v[0] - st * v[1] - v[0],
                     st * v[0] + ct * v[1] - v[1]])
    # J = R(theta) + (R'(theta) v) (grad theta)^T, grad theta = angle chi' 2v/r^2
    g0 = angle * dchi * (2.0 / radius ** 2) * v[0]
    g1 = angle * dchi * (2.0 / radius ** 2) * v[1]
    rp0 = -st * v[0] - ct * v[1]
    rp1 = ct * v[0] - st * v[1]
    jac = np.empty((2, 2, mesh.N, mesh.N))
    jac[0, 0] = ct + rp0 * g0
    jac[0, 1] = -st + rp0 * g1
    jac[1, 0] = st + rp1 * g0
    jac[1, 1] = ct + rp1 * g1
    m = TorusMap(mesh, disp, jac=jac,
                 provenance={"kind": "bump_rotation", "center": tuple(center),
                             "radius": radius, "angle": angle,
                             "flux_periods": (float(np.mean(-angle * chi * v[1])),
                                              float(np.mean(angle * chi * v[0])))})
    m.set_analytic_inverse(lambda: bump_rotation(mesh, center, radius, -angle))
    return m


def non_volume_preserving(mesh: GridMesh, eps: float = 0.1, mode: int = 1) -> TorusMap:
    """(x, y) -> (x, y + eps sin(2 pi m y / L1)): det J = 1 + eps w cos != 1."""
    X, Y = mesh.points
    w = TWO_PI * mode / mesh.L[1]
    disp = np.zeros((2, mesh.N, mesh.N))
    disp[1] = eps * np.sin(w * Y)
    jac = np.zeros((2, 2, mesh.N, mesh.N))
    jac[0, 0] = 1.0
    jac[1, 1] = 1.0 + eps * w * np.cos(w * Y)
    return TorusMap(mesh, disp, jac=jac,
                    provenance={"kind": "non_volume_preserving", "eps": eps})


# ---------------------------------------------------------------------------
# closed-form flows
# ---------------------------------------------------------------------------

def translation_flow(mesh: GridMesh, c: float, d: float, K: int = 64) -> Isotopy:
    gen = np.empty((2, mesh.N, mesh.N))
    gen[0], gen[1] = c, d
    return Isotopy.from_time_function(
        mesh, lambda t: translation(mesh, t * c, t * d), K,
        generator=TimeField(lambda t: gen, mesh, autonomous=True,
                            certified_symplectic=True),
        provenance={"kind": "translation_flow", "c": c, "d": d})


def shear_flow(mesh: GridMesh, eps: float, axis: int = 0, mode: int = 1,
               K: int = 64) -> Isotopy:
    """Hamiltonian flow whose time-1 map is shear(eps, axis, mode)."""
    X, Y = mesh.points
    w = TWO_PI * mode / mesh.L[1 - axis]
    coord = Y if axis == 0 else X
    gen = np.zeros((2, mesh.N, mesh.N))
    gen[axis] = eps * np.sin(w * coord)
    return Isotopy.from_time_function(
        mesh, lambda t: shear(mesh, t * eps, axis, mode), K,
        generator=TimeField(lambda t: gen, mesh, autonomous=True,
                            certified_symplectic=True),
        provenance={"kind": "shear_flow", "eps": eps, "axis": axis})


def translation_shear_flow(mesh: GridMesh, c: float, d: float, eps: float,
                           mode: int = 1, K: int = 64) -> Isotopy:
    """Phi_t = T_{(tc, td)} o S_{t eps}: a volume-preserving flow with
    nonzero flux and a genuinely time-dependent generator."""
    X, Y = mesh.points
    w = TWO_PI * mode / mesh.L[1]

    def map_at(t: float) -> TorusMap:
        disp = np.empty((2, mesh.N, mesh.N))
        disp[0] = t * c + t * eps * np.sin(w * Y)
        disp[1] = t * d
        jac = np.zeros((2, 2, mesh.N, mesh.N))
        jac[0, 0] = jac[1, 1] = 1.0
        jac[0, 1] = t * eps * w * np.cos(w * Y)
        m = TorusMap(mesh, disp, jac=jac)

        def inv():
            dinv = np.empty((2, mesh.N, mesh.N))
            dinv[0] = -t * c - t * eps * np.sin(w * (Y - t * d))
            dinv[1] = -t * d
            jinv = np.zeros((2, 2, mesh.N, mesh.N))
            jinv[0, 0] = jinv[1, 1] = 1.0
            jinv[0, 1] = -t * eps * w * np.cos(w * (Y - t * d))
            return TorusMap(mesh, dinv, jac=jinv)

        m.set_analytic_inverse(inv)
        return m

    def gen_at(t: float) -> np.ndarray:
        out = np.empty((2, mesh.N, mesh.N))
        out[0] = c + eps * np.sin(w * (Y - t * d))
        out[1] = d
        return out

    return Isotopy.from_time_function(
        mesh, map_at, K,
        generator=TimeField(gen_at, mesh, certified_symplectic=True),
        provenance={"kind": "translation_shear_flow", "c": c, "d": d, "eps": eps})


def rotation_flow(mesh: GridMesh, center, radius: float, angle: float,
                  K: int = 64) -> Isotopy:
    """Compactly supported Hamiltonian flow of rigid circle rotations."""
    v = mesh.wrap_delta(mesh.points - np.asarray(center, dtype=float).reshape(2, 1, 1))
    chi, _ = _bump_chi((v[0] ** 2 + v[1] ** 2) / radius ** 2)
    gen = np.stack([-angle * chi * v[1], angle * chi * v[0]])
    return Isotopy.from_time_function(
        mesh, lambda t: bump_rotation(mesh, center, radius, t * angle), K,
        generator=TimeField(lambda t: gen, mesh, autonomous=True,
                            certified_symplectic=True),
        provenance={"kind": "rotation_flow", "center": tuple(center),
                    "radius": radius, "angle": angle})


# named smooth potentials for generic Hamiltonian flows (unit amplitudes);
# X_H = (dH/dy, -dH/dx) so that i_{X_H} omega = dH for omega = dx ^ dy
POTENTIALS = {
    "cos_x_cos_y": (
        lambda X, Y: np.cos(TWO_PI * X) * np.cos(TWO_PI * Y) / TWO_PI,
        lambda X, Y: -np.sin(TWO_PI * X) * np.cos(TWO_PI * Y),   # dH/dx
        lambda X, Y: -np.cos(TWO_PI * X) * np.sin(TWO_PI * Y),   # dH/dy
    ),
    "sin_x_plus_sin_y": (
        lambda X, Y: (np.sin(TWO_PI * X) + np.sin(TWO_PI * Y)) / TWO_PI,
        lambda X, Y: np.cos(TWO_PI * X),
        lambda X, Y: np.cos(TWO_PI * Y),
    ),
    "mix_mode2": (
        lambda X, Y: (np.cos(TWO_PI * X) * np.cos(TWO_PI * Y)
                      + 0.5 * np.sin(2 * TWO_PI * X) * np.cos(TWO_PI * Y)) / TWO_PI,
        lambda X, Y: (-np.sin(TWO_PI * X) * np.cos(TWO_PI * Y)
                      + np.cos(2 * TWO_PI * X) * np.cos(TWO_PI * Y)),
        lambda X, Y: (-np.cos(TWO_PI * X) * np.sin(TWO_PI * Y)
                      - 0.5 * np.sin(2 * TWO_PI * X) * np.sin(TWO_PI * Y)),
    ),
}


def hamiltonian_potential(mesh: GridMesh, name: str, amp: float = 1.0):
    """Grid samples of a named potential, scaled by amp."""
    from .forms import ScalarField
    if name not in POTENTIALS:
        raise KeyError(f"unknown potential {name!r}; have {sorted(POTENTIALS)}")
    H, _, _ = POTENTIALS[name]
    X, Y = mesh.points
    return ScalarField(mesh, amp * H(X, Y))


def hamiltonian_field(mesh: GridMesh, name: str, amp: float = 1.0) -> np.ndarray:
    """X_H sampled on the grid from the analytic gradient of the potential."""
    if name not in POTENTIALS:
        raise KeyError(f"unknown potential {name!r}; have {sorted(POTENTIALS)}")
    _, dHx, dHy = POTENTIALS[name]
    X, Y = mesh.points
    return np.stack([amp * dHy(X, Y), -amp * dHx(X, Y)])


def hamiltonian_flow(mesh: GridMesh, name: str, amp: float = 1.0,
                     K: int = 64) -> Isotopy:
    iso = integrate_flow(hamiltonian_field(mesh, name, amp), K, mesh,
                         provenance={"kind": "hamiltonian_flow",
                                     "potential": name, "amp": amp})
    return iso


def hamiltonian_time1(mesh: GridMesh, name: str, amp: float = 1.0,
                      K: int = 64) -> TorusMap:
    """Time-1 map of a named Hamiltonian flow, tagged with its vanishing
    flux certificate."""
    from .isotopy import symplectic_flux
    iso = hamiltonian_flow(mesh, name, amp, K)
    p = symplectic_flux(iso)
    m = iso.end_map
    m.provenance.update({"kind": "hamiltonian_time1", "potential": name,
                         "amp": amp, "flux_periods": tuple(p.periods)})
    return m


def perturbation_map(mesh: GridMesh, amplitude: float,
                     base_eps: tuple[float, float] = (1.0, 1.0),
                     modes: tuple[int, int] = (1, 1)) -> TorusMap:
    """The standard perturbation: a twist with both shear strengths scaled
    by `amplitude`.  A product of Hamiltonian time-1 maps, so volume
    preserving with vanishing flux; the uniform distance to the identity is
    proportional to `amplitude`."""
    if amplitude == 0.0:
        return TorusMap.identity(mesh)
    m = twist(mesh, amplitude * base_eps[0], amplitude * base_eps[1],
              m1=modes[0], m2=modes[1])
    m.provenance["kind"] = "perturbation"
    m.provenance["amplitude"] = amplitude
    return m


# ---------------------------------------------------------------------------
# config-addressable builders
# ---------------------------------------------------------------------------

def build_map(mesh: GridMesh, spec: dict) -> TorusMap:
    """Build a named map from a config spec {"type": name, ...params}."""
    spec = dict(spec)
    kind = spec.pop("type")
    builders = {
        "identity": lambda: identity_map(mesh),
        "translation": lambda: translation(mesh, spec.get("c", 0.0), spec.get("d", 0.0)),
        "shear": lambda: shear(mesh, spec.get("eps", 0.1), spec.get("axis", 0),
                               spec.get("mode", 1), spec.get("phase", 0.0)),
        "twist": lambda: twist(mesh, spec.get("e1", 0.1), spec.get("e2", 0.1),
                               spec.get("m1", 1), spec.get("m2", 1)),
        "bump_rotation": lambda: bump_rotation(mesh, spec.get("center", (0.5, 0.5)),
                                               spec.get("radius", 0.2),
                                               spec.get("angle", 1.0)),
        "hamiltonian_time1": lambda: hamiltonian_time1(mesh, spec.get("potential", "cos_x_cos_y"),
                                                       spec.get("amp", 0.05),
                                                       spec.get("K", 64)),
        "non_volume_preserving": lambda: non_volume_preserving(mesh, spec.get("eps", 0.1)),
    }
    if kind not in builders:
        raise KeyError(f"unknown map type {kind!r}; have {sorted(builders)}")
    return builders[kind]()


def build_flow(mesh: GridMesh, spec: dict, K: int = 64) -> Isotopy:
    """Build a named isotopy from a config spec {"type": name, ...params}."""
    spec = dict(spec)
    kind = spec.pop("type")
    K = int(spec.pop("K", K))
    if kind == "translation_flow":
        return translation_flow(mesh, spec.get("c", 0.0), spec.get("d", 0.0), K)
    if kind == "shear_flow":
        return shear_flow(mesh, spec.get("eps", 0.1), spec.get("axis", 0),
                          spec.get("mode", 1), K)
    if kind == "translation_shear_flow":
        return translation_shear_flow(mesh, spec.get("c", 0.0), spec.get("d", 0.0),
                                      spec.get("eps", 0.1), spec.get("mode", 1), K)
    if kind == "rotation_flow":
        return rotation_flow(mesh, spec.get("center", (0.5, 0.5)),
                             spec.get("radius", 0.2), spec.get("angle", 1.0), K)
    if kind == "hamiltonian":
        return hamiltonian_flow(mesh, spec.get("potential", "cos_x_cos_y"),
                                spec.get("amp", 0.05), K)
    if kind == "commutator":
        from .isotopy import commutator_generator
        sub = spec.get("of")
        theta, _ = commutator_generator(build_flow(mesh, sub[0], K),
                                        build_flow(mesh, sub[1], K))
        return theta
    raise KeyError(f"unknown flow type {kind!r}")


def build_region(mesh: GridMesh, spec: dict) -> Region:
    spec = dict(spec)
    kind = spec.pop("type")
    if kind == "rect":
        return Region.rectangle(spec["lo"], spec["hi"])
    if kind == "ball":
        return Region.ball(spec["center"], spec["radius"])
    raise KeyError(f"unknown region type {kind!r}")
