"""NURBS volumetric patches, face restrictions, and benchmark geometries.

Patches map the unit cube into physical space through weighted B-spline
control nets.  Multipatch containers record which faces are glued
conformally inside each subdomain and which face pairs form the
non-conforming coupling interfaces between subdomains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .splines import KnotVector, TensorBasis, eval_basis_grid

__all__ = [
    "NurbsPatch",
    "SurfaceMap",
    "ConformingInterface",
    "CouplingPiece",
    "CouplingInterface",
    "MultipatchGeometry",
    "make_cube_single",
    "make_cube_two_patches",
    "make_cube_four_patches_nonconforming",
    "make_pillbox",
    "export_text",
]

# Side encoding: side = 2*axis + end, axis in {0,1,2}, end in {0,1}.
SIDES_3D = tuple(range(6))

# Half-width of the square core of the 5-patch disc, as a fraction of the
# radius.  Any value giving a positive Jacobian works; fixed for determinism.
DISC_CORE_FACTOR = 0.4


def side_axis_end(side):
    return side // 2, side % 2


def face_tangent_axes(axis):
    """The two surviving parametric axes of a face, in ascending order."""
    return tuple(a for a in range(3) if a != axis)


def _basis_matrix(kv, xs, der=0):
    """Dense (npts, n) univariate collocation matrix of the der-th derivative."""
    firsts, ders = eval_basis_grid(kv, xs, der=der)
    out = np.zeros((len(xs), kv.n))
    p = kv.degree
    for i, f in enumerate(firsts):
        out[i, f: f + p + 1] = ders[i, der]
    return out


class NurbsPatch:
    """A volumetric NURBS patch F: [0,1]^3 -> R^3.

    The geometric basis is independent of any analysis space built on
    the patch later.  Immutable after construction.
    """

    def __init__(self, basis: TensorBasis, control, weights=None):
        control = np.asarray(control, dtype=float)
        if control.shape != basis.shape + (3,):
            raise ValueError(
                f"control net shape {control.shape} does not match basis {basis.shape}"
            )
        if weights is None:
            weights = np.ones(basis.shape)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != basis.shape:
            raise ValueError("weights shape does not match basis")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        self.basis = basis
        self.control = control
        self.weights = weights
        # homogeneous control net (w*P, w)
        self._hw = np.concatenate(
            [weights[..., None] * control, weights[..., None]], axis=-1
        )
        self.control.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def diameter(self):
        pts = self.control.reshape(-1, 3)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def _contract(self, mats):
        """Contract homogeneous control net with per-direction matrices."""
        t = np.tensordot(mats[0], self._hw, axes=(1, 0))
        t = np.einsum("bj,ajkm->abkm", mats[1], t)
        t = np.einsum("ck,abkm->abcm", mats[2], t)
        return t

    def eval_grid(self, us, vs, ws):
        """Evaluate F and its Jacobian on a tensor grid of parameters.

        Returns (x, DF) with shapes (nu, nv, nw, 3) and (nu, nv, nw, 3, 3).
        """
        us, vs, ws = (np.atleast_1d(np.asarray(a, float)) for a in (us, vs, ws))
        V = [_basis_matrix(kv, xs, 0) for kv, xs in zip(self.basis.kvs, (us, vs, ws))]
        D = [_basis_matrix(kv, xs, 1) for kv, xs in zip(self.basis.kvs, (us, vs, ws))]
        A = self._contract(V)
        w = A[..., 3]
        x = A[..., :3] / w[..., None]
        DF = np.empty(x.shape + (3,))
        for d in range(3):
            mats = list(V)
            mats[d] = D[d]
            Ad = self._contract(mats)
            DF[..., d] = (Ad[..., :3] - x * Ad[..., 3:4]) / w[..., None]
        return x, DF

    def eval_point(self, xi):
        x, DF = self.eval_grid([xi[0]], [xi[1]], [xi[2]])
        return x[0, 0, 0], DF[0, 0, 0]

    def corner(self, iu, iv, iw):
        x, _ = self.eval_point((float(iu), float(iv), float(iw)))
        return x

    def face(self, side):
        return SurfaceMap(self, side)


# Sign of cross(F_t1, F_t2) . F_axis for tangent axes in ascending order:
# axis 0 -> columns (1,2,0) even permutation, axis 1 -> odd, axis 2 -> even.
_FACE_PARITY = (1.0, -1.0, 1.0)


class SurfaceMap:
    """Restriction of a patch mapping to one of its six faces.

    Face coordinates (u, v) are the two surviving parametric axes in
    ascending order.  The unit normal is oriented outward from the patch.
    """

    def __init__(self, patch: NurbsPatch, side):
        self.patch = patch
        self.side = side
        self.axis, self.end = side_axis_end(side)
        self.tangent_axes = face_tangent_axes(self.axis)
        self.orientation_sign = _FACE_PARITY[self.axis] * (1.0 if self.end == 1 else -1.0)

    @property
    def knot_vectors(self):
        t1, t2 = self.tangent_axes
        return self.patch.basis.kvs[t1], self.patch.basis.kvs[t2]

    def _volume_params(self, us, vs):
        fixed = np.array([float(self.end)])
        params = [None, None, None]
        params[self.axis] = fixed
        params[self.tangent_axes[0]] = np.atleast_1d(np.asarray(us, float))
        params[self.tangent_axes[1]] = np.atleast_1d(np.asarray(vs, float))
        return params

    def eval_grid(self, us, vs):
        """Evaluate on a tensor grid of face coordinates.

        Returns a dict with x (nu, nv, 3), jac (nu, nv, 3, 2), metric,
        normal (unit, outward), and pinv (nu, nv, 2, 3).
        """
        params = self._volume_params(us, vs)
        x, DF = self.patch.eval_grid(*params)
        # drop the singleton axis of the fixed direction
        x = np.squeeze(x, axis=self.axis)
        DF = np.squeeze(DF, axis=self.axis)
        J = DF[..., list(self.tangent_axes)]
        gram = np.einsum("...ki,...kj->...ij", J, J)
        det = gram[..., 0, 0] * gram[..., 1, 1] - gram[..., 0, 1] * gram[..., 1, 0]
        if np.any(det <= 0):
            raise ValueError("degenerate surface metric")
        metric = np.sqrt(det)
        inv = np.empty_like(gram)
        inv[..., 0, 0] = gram[..., 1, 1]
        inv[..., 1, 1] = gram[..., 0, 0]
        inv[..., 0, 1] = -gram[..., 0, 1]
        inv[..., 1, 0] = -gram[..., 1, 0]
        inv /= det[..., None, None]
        pinv = np.einsum("...ij,...kj->...ik", inv, J)
        normal = np.cross(J[..., 0], J[..., 1]) * self.orientation_sign
        normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
        return {"x": x, "jac": J, "metric": metric, "normal": normal, "pinv": pinv}

    def corner(self, iu, iv):
        r = self.eval_grid([float(iu)], [float(iv)])
        return r["x"][0, 0]


@dataclass(frozen=True)
class ConformingInterface:
    """A glued face pair: coords on face b are Q @ uv_a + t (dihedral map)."""

    patch_a: int
    side_a: int
    patch_b: int
    side_b: int
    Q: tuple  # 2x2 entries in {-1, 0, 1}
    t: tuple

    def apply(self, uv):
        Q = np.asarray(self.Q, float)
        return Q @ np.asarray(uv, float) + np.asarray(self.t, float)


@dataclass(frozen=True)
class CouplingPiece:
    """One slave-face/master-face pairing of a coupling interface.

    Master face coordinates are the affine image A @ uv_slave + t of the
    slave face coordinates; the slave face is always fully covered.
    """

    slave_patch: int
    slave_side: int
    master_patch: int
    master_side: int
    A: tuple
    t: tuple

    def map_to_master(self, uv):
        return np.asarray(self.A, float) @ np.asarray(uv, float) + np.asarray(self.t, float)


@dataclass(frozen=True)
class CouplingInterface:
    """A non-conforming subdomain interface handled by mortar or modal coupling."""

    slave_subdomain: int
    master_subdomain: int
    pieces: tuple
    # In-plane frame for planar interfaces (origin, ex, ey); required by
    # the modal coupling, unused by mortar.
    plane: tuple | None = None


class MultipatchGeometry:
    """A collection of patches grouped into subdomains.

    Conforming interfaces inside each subdomain are detected
    automatically by face-corner matching; coupling interfaces between
    subdomains are provided explicitly by the generators.
    """

    def __init__(self, patches, subdomain_ids, couplings=(), check=True):
        self.patches = list(patches)
        self.subdomain_ids = list(subdomain_ids)
        if len(self.subdomain_ids) != len(self.patches):
            raise ValueError("one subdomain id per patch required")
        self.couplings = tuple(couplings)
        self.n_subdomains = max(self.subdomain_ids) + 1 if self.patches else 0
        self.conforming = self._detect_conforming()
        if check:
            self._check_conforming()

    # -- structure queries ------------------------------------------------

    def patches_of_subdomain(self, s):
        return [i for i, sd in enumerate(self.subdomain_ids) if sd == s]

    def coupling_faces(self):
        faces = set()
        for c in self.couplings:
            for piece in c.pieces:
                faces.add((piece.slave_patch, piece.slave_side))
                faces.add((piece.master_patch, piece.master_side))
        return faces

    def conforming_faces(self):
        faces = set()
        for itf in self.conforming:
            faces.add((itf.patch_a, itf.side_a))
            faces.add((itf.patch_b, itf.side_b))
        return faces

    def boundary_faces(self, subdomain=None):
        """Faces on the outer (PEC) boundary of the domain or one subdomain."""
        taken = self.coupling_faces() | self.conforming_faces()
        out = []
        for ip, patch in enumerate(self.patches):
            if subdomain is not None and self.subdomain_ids[ip] != subdomain:
                continue
            for side in SIDES_3D:
                if (ip, side) not in taken:
                    out.append((ip, side))
        return out

    def merged(self):
        """Same patches in a single subdomain; couplings become conforming glue."""
        return MultipatchGeometry(self.patches, [0] * len(self.patches))

    # -- conforming interface detection -----------------------------------

    def _detect_conforming(self):
        found = []
        diam = max((p.diameter for p in self.patches), default=1.0)
        tol = 1e-9 * diam
        for ia in range(len(self.patches)):
            for ib in range(ia + 1, len(self.patches)):
                if self.subdomain_ids[ia] != self.subdomain_ids[ib]:
                    continue
                for sa in SIDES_3D:
                    fa = self.patches[ia].face(sa)
                    ca = {
                        (iu, iv): fa.corner(iu, iv)
                        for iu in (0, 1)
                        for iv in (0, 1)
                    }
                    for sb in SIDES_3D:
                        fb = self.patches[ib].face(sb)
                        cb = {
                            (iu, iv): fb.corner(iu, iv)
                            for iu in (0, 1)
                            for iv in (0, 1)
                        }
                        match = _match_corners(ca, cb, tol)
                        if match is None:
                            continue
                        Q, t = _orientation_from_matching(match)
                        found.append(
                            ConformingInterface(ia, sa, ib, sb, Q, t)
                        )
        return tuple(found)

    def _check_conforming(self):
        diam = max((p.diameter for p in self.patches), default=1.0)
        for itf in self.conforming:
            fa = self.patches[itf.patch_a].face(itf.side_a)
            fb = self.patches[itf.patch_b].face(itf.side_b)
            rng = np.random.default_rng(0)
            for uv in rng.uniform(0, 1, (5, 2)):
                xa = fa.eval_grid([uv[0]], [uv[1]])["x"][0, 0]
                ub, vb = itf.apply(uv)
                xb = fb.eval_grid([ub], [vb])["x"][0, 0]
                if np.linalg.norm(xa - xb) > 1e-8 * diam:
                    raise ValueError(
                        f"faces of patches {itf.patch_a}/{itf.patch_b} match at the "
                        "corners but not in the interior"
                    )


def _match_corners(ca, cb, tol):
    """Map each corner of face a to the coincident corner of face b, or None."""
    match = {}
    used = set()
    for ka, xa in ca.items():
        hit = None
        for kb, xb in cb.items():
            if kb in used:
                continue
            if np.linalg.norm(xa - xb) <= tol:
                hit = kb
                break
        if hit is None:
            return None
        match[ka] = hit
        used.add(hit)
    return match


def _orientation_from_matching(match):
    o = np.asarray(match[(0, 0)], float)
    du = np.asarray(match[(1, 0)], float) - o
    dv = np.asarray(match[(0, 1)], float) - o
    Q = np.column_stack([du, dv])
    if sorted(np.abs(Q).sum(axis=0).tolist()) != [1.0, 1.0] or sorted(
        np.abs(Q).sum(axis=1).tolist()
    ) != [1.0, 1.0]:
        raise ValueError("matched faces are not related by a dihedral symmetry")
    return tuple(map(tuple, Q.astype(int))), tuple(o.astype(int))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def _box_patch(lo, hi):
    """Trilinear B-spline patch for an axis-aligned box."""
    kv = KnotVector(1, (0.0, 0.0, 1.0, 1.0))
    basis = TensorBasis((kv, kv, kv))
    ctrl = np.empty((2, 2, 2, 3))
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                ctrl[i, j, k] = [
                    lo[0] + i * (hi[0] - lo[0]),
                    lo[1] + j * (hi[1] - lo[1]),
                    lo[2] + k * (hi[2] - lo[2]),
                ]
    return NurbsPatch(basis, ctrl)


def _z_plane(z):
    return ((0.0, 0.0, z), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0))


def make_cube_single():
    """Unit cube as a single patch and subdomain."""
    return MultipatchGeometry([_box_patch((0, 0, 0), (1, 1, 1))], [0])


def make_cube_two_patches():
    """Unit cube split at z = 1/2; lower half is the slave subdomain."""
    p0 = _box_patch((0, 0, 0), (1, 1, 0.5))
    p1 = _box_patch((0, 0, 0.5), (1, 1, 1))
    piece = CouplingPiece(0, 5, 1, 4, ((1.0, 0.0), (0.0, 1.0)), (0.0, 0.0))
    itf = CouplingInterface(0, 1, (piece,), plane=_z_plane(0.5))
    return MultipatchGeometry([p0, p1], [0, 1], [itf])


def make_cube_four_patches_nonconforming():
    """Unit cube; lower half split into three x-slabs, upper half one patch."""
    patches = [
        _box_patch((k / 3, 0, 0), ((k + 1) / 3, 1, 0.5)) for k in range(3)
    ]
    patches.append(_box_patch((0, 0, 0.5), (1, 1, 1)))
    pieces = tuple(
        CouplingPiece(k, 5, 3, 4, ((1 / 3, 0.0), (0.0, 1.0)), (k / 3, 0.0))
        for k in range(3)
    )
    itf = CouplingInterface(0, 1, pieces, plane=_z_plane(0.5))
    return MultipatchGeometry(patches, [0, 0, 0, 1], [itf])


def _disc_nets_2d(R):
    """Control nets and weights of the 5-patch exact disc of radius R."""
    a = DISC_CORE_FACTOR * R
    c = R / np.sqrt(2.0)
    nets = []
    # core: (u, v) -> (x, y)
    xs = np.array([-a, 0.0, a])
    ctrl = np.empty((3, 3, 2))
    for i in range(3):
        for j in range(3):
            ctrl[i, j] = [xs[i], xs[j]]
    nets.append((ctrl, np.ones((3, 3))))
    # quarter template (+x): u sweeps the edge from +45 deg down to -45 deg,
    # v goes from the square edge to the arc
    inner = np.array([[a, a], [a, 0.0], [a, -a]])
    outer = np.array([[c, c], [np.sqrt(2.0) * R, 0.0], [c, -c]])
    w_in = np.array([1.0, 1.0, 1.0])
    w_out = np.array([1.0, np.sqrt(2.0) / 2.0, 1.0])
    for q in range(4):
        ang = q * np.pi / 2
        rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        pin = inner @ rot.T
        pout = outer @ rot.T
        ctrl = np.empty((3, 3, 2))
        wts = np.empty((3, 3))
        for i in range(3):
            h_in = np.append(w_in[i] * pin[i], w_in[i])
            h_out = np.append(w_out[i] * pout[i], w_out[i])
            h_mid = 0.5 * (h_in + h_out)
            for j, h in enumerate((h_in, h_mid, h_out)):
                wts[i, j] = h[2]
                ctrl[i, j] = h[:2] / h[2]
        nets.append((ctrl, wts))
    return nets


def _extrude_net(ctrl2, w2, z0, z1):
    """Extrude a 2D net to a triquadratic patch spanning [z0, z1]."""
    kv2 = KnotVector(2, (0, 0, 0, 1, 1, 1))
    basis = TensorBasis((kv2, kv2, kv2))
    zs = [z0, 0.5 * (z0 + z1), z1]
    ctrl = np.empty((3, 3, 3, 3))
    wts = np.empty((3, 3, 3))
    for k, z in enumerate(zs):
        ctrl[:, :, k, :2] = ctrl2
        ctrl[:, :, k, 2] = z
        wts[:, :, k] = w2
    return NurbsPatch(basis, ctrl, wts)


def make_pillbox(R=1.0, L=2.0):
    """Cylindrical cavity of radius R and length L as ten NURBS patches.

    Each half-length layer is a 5-patch exact-circle disc (square core
    plus four annular quarters) extruded along z; the layers are the two
    subdomains with the disc z = L/2 as the coupling interface.
    """
    if R <= 0 or L <= 0:
        raise ValueError("radius and length must be positive")
    nets = _disc_nets_2d(R)
    patches = []
    for z0, z1 in ((0.0, L / 2), (L / 2, L)):
        for ctrl2, w2 in nets:
            patches.append(_extrude_net(ctrl2, w2, z0, z1))
    subdomains = [0] * 5 + [1] * 5
    eye = ((1.0, 0.0), (0.0, 1.0))
    pieces = tuple(
        CouplingPiece(i, 5, 5 + i, 4, eye, (0.0, 0.0)) for i in range(5)
    )
    itf = CouplingInterface(0, 1, pieces, plane=((0.0, 0.0, L / 2), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)))
    return MultipatchGeometry(patches, subdomains, [itf])


def export_text(geom: MultipatchGeometry):
    """Self-describing text dump of a multipatch geometry (for debugging)."""
    lines = [f"multipatch {len(geom.patches)} patches"]
    for i, patch in enumerate(geom.patches):
        lines.append(f"patch {i} subdomain {geom.subdomain_ids[i]}")
        for d, kv in enumerate(patch.basis.kvs):
            knots = " ".join(f"{k:.17g}" for k in kv.knots)
            lines.append(f"  degree[{d}] {kv.degree} knots {knots}")
        lines.append(f"  control {patch.basis.N} points (wx wy wz w)")
        hw = patch._hw.reshape(-1, 4, order="F")
        for row in hw:
            lines.append("  " + " ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"
