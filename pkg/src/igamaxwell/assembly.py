"""Galerkin assembly of the curl-curl eigenvalue problem and its couplings.

Volume operators use Gauss quadrature per Bezier element with the exact
NURBS metric kernels; vector fields are discretized with the covariant
(curl-conforming) push-forward, so the mass kernel is
DF^{-1} DF^{-T} det(DF) and the stiffness kernel DF^T DF / det(DF)
applied to parametric curls.

The mortar pairing of covariant traces against the div-conforming
(Piola) multiplier is purely parametric, so each interface piece
contributes Kronecker products of univariate Gram matrices on a merged
quadrature grid.  The modal coupling integrates the covariant trace
against analytic interface modes side by side.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .geometry import face_tangent_axes, side_axis_end
from .spaces import DiscreteSpace, MultiplierSpace, face_layer_indices
from .splines import eval_basis_grid

__all__ = [
    "assemble_operators",
    "assemble_curl_curl",
    "assemble_mass",
    "assemble_mortar_coupling",
    "assemble_modal_coupling",
    "multiplier_norm_matrix",
    "merged_breakpoints",
]


def gauss_on_elements(breakpoints, n_q):
    """Gauss points/weights per element: arrays of shape (n_el, n_q)."""
    x, w = np.polynomial.legendre.leggauss(n_q)
    lo = np.asarray(breakpoints[:-1])[:, None]
    hi = np.asarray(breakpoints[1:])[:, None]
    pts = lo + (hi - lo) * (x[None, :] + 1) / 2
    wts = (hi - lo) * w[None, :] / 2
    return pts, wts


def _dir_tables(kv, pts):
    """Per-element univariate value/derivative tables on quadrature points.

    Returns (first, val, der) with first (n_el,), val/der (n_el, n_q, p+1).
    """
    n_el, n_q = pts.shape
    firsts, ders = eval_basis_grid(kv, pts.ravel(), der=1)
    nloc = kv.degree + 1
    val = ders[:, 0, :].reshape(n_el, n_q, nloc)
    der = ders[:, 1, :].reshape(n_el, n_q, nloc)
    first = firsts.reshape(n_el, n_q)[:, 0].astype(int)
    # within one element every quadrature point sees the same support
    if not np.all(firsts.reshape(n_el, n_q) == firsts.reshape(n_el, n_q)[:, :1]):
        raise RuntimeError("quadrature points straddle a knot")
    return first, val, der


class _PatchContext:
    """Quadrature tables and metric kernels of one patch of an H(curl) space."""

    def __init__(self, space: DiscreteSpace, patch_id):
        self.space = space
        self.patch_id = patch_id
        patch = space.geom.patches[patch_id]
        kvs = space.patch_kvs(patch_id)
        p = space.degree
        n_q = p + 1
        self.tables = []  # per dir: dict kv kind -> (first, val, der)
        pts_all, wts_all = [], []
        for d, kv in enumerate(kvs):
            pts, wts = gauss_on_elements(kv.breakpoints, n_q)
            pts_all.append(pts)
            wts_all.append(wts)
            from .splines import derived_knot_vector

            self.tables.append(
                {
                    "full": _dir_tables(kv, pts),
                    "derived": _dir_tables(derived_knot_vector(kv), pts),
                }
            )
        self.n_el = tuple(p_.shape[0] for p_ in pts_all)
        self.n_q = n_q
        self.E = int(np.prod(self.n_el))
        self.Q = n_q ** 3
        self.wts = wts_all
        # geometry on the full tensor grid of quadrature points
        flat_pts = [p_.ravel() for p_ in pts_all]
        _, DF = patch.eval_grid(*flat_pts)
        det = np.linalg.det(DF)
        if np.min(det) <= 0:
            raise ValueError(f"patch {patch_id} has a non-positive Jacobian")
        DFinv = np.linalg.inv(DF)
        self._mass_kernel = np.einsum("...ik,...jk,...->...ij", DFinv, DFinv, det)
        self._curl_kernel = np.einsum("...ki,...kj,...->...ij", DF, DF, 1.0 / det)
        Wq = (
            wts_all[0].ravel()[:, None, None]
            * wts_all[1].ravel()[None, :, None]
            * wts_all[2].ravel()[None, None, :]
        )
        self._w = Wq

    def _eq_kernel(self, K):
        """Rearrange a (P1, P2, P3, ...) point array to (E, Q, ...) blocks.

        Elements and intra-element quadrature points are both flattened
        with direction 1 fastest.
        """
        e1, e2, e3 = self.n_el
        q = self.n_q
        tail = K.shape[3:]
        K = K.reshape((e1, q, e2, q, e3, q) + tail)
        K = np.moveaxis(K, (4, 2, 0, 5, 3, 1), (0, 1, 2, 3, 4, 5))
        return K.reshape((self.E, self.Q) + tail)

    def elem_flat_indices(self, chunk):
        """Per-direction element indices of flat element ids (dir 1 fastest)."""
        e1, e2, e3 = self.n_el
        i1 = chunk % e1
        i2 = (chunk // e1) % e2
        i3 = chunk // (e1 * e2)
        return i1, i2, i3

    def basis_block(self, comp, chunk, der_dir=None):
        """Values (or one partial derivative) of component basis functions.

        Returns (B, conn) with B of shape (n_chunk, Q, J) and conn the
        matching flat indices into the component basis (n_chunk, J).
        """
        i1, i2, i3 = self.elem_flat_indices(chunk)
        idx = (i1, i2, i3)
        mats, firsts, nlocs = [], [], []
        for d in range(3):
            kind = "derived" if d == comp else "full"
            first, val, der = self.tables[d][kind]
            use = der if der_dir == d else val
            mats.append(use[idx[d]])
            firsts.append(first[idx[d]])
            nlocs.append(use.shape[2])
        B = (
            mats[2][:, :, None, None, :, None, None]
            * mats[1][:, None, :, None, None, :, None]
            * mats[0][:, None, None, :, None, None, :]
        )
        n = len(chunk)
        B = B.reshape(n, self.Q, nlocs[2] * nlocs[1] * nlocs[0])
        basis = self.space.bases[(self.patch_id, comp)]
        g = [firsts[d][:, None] + np.arange(nlocs[d])[None, :] for d in range(3)]
        conn = basis.ravel_grid(
            (
                g[0][:, None, None, :],
                g[1][:, None, :, None],
                np.broadcast_to(g[2][:, :, None, None], (n, nlocs[2], nlocs[1], nlocs[0])),
            )
        ).reshape(n, -1)
        return B, conn

    def weighted_kernel(self, which):
        K = self._mass_kernel if which == "mass" else self._curl_kernel
        return self._eq_kernel(K * self._w[..., None, None])


def _curl_blocks(ctx, comp, chunk):
    """Parametric curl of component basis fields as (B, conn, rows, signs).

    curl(N e_c) has two nonzero components: +d/d(c+2) in slot c+1 and
    -d/d(c+1) in slot c+2 (indices mod 3).
    """
    a1 = (comp + 1) % 3
    a2 = (comp + 2) % 3
    B1, conn = ctx.basis_block(comp, chunk, der_dir=a2)
    B2, _ = ctx.basis_block(comp, chunk, der_dir=a1)
    return ((B1, a1, 1.0), (B2, a2, -1.0)), conn


def _assemble_patch(ctx, which, chunk_size=256):
    """COO triplets of one patch operator in local (component-offset) indexing."""
    rows, cols, vals = [], [], []
    Kw = ctx.weighted_kernel(which)
    offs = {c: ctx.space.offsets[(ctx.patch_id, c)] for c in range(3)}
    for start in range(0, ctx.E, chunk_size):
        chunk = np.arange(start, min(start + chunk_size, ctx.E))
        Kc = Kw[chunk]
        if which == "mass":
            blocks = {c: ctx.basis_block(c, chunk) for c in range(3)}
            for c in range(3):
                Bc, conn_c = blocks[c]
                for cp in range(c, 3):
                    Bp, conn_p = blocks[cp]
                    ker = Kc[:, :, c, cp]
                    Ael = np.einsum("eqi,eq,eqj->eij", Bc, ker, Bp, optimize=True)
                    _push(rows, cols, vals, Ael, conn_c + offs[c], conn_p + offs[cp], sym=(c != cp))
        else:
            blocks = {c: _curl_blocks(ctx, c, chunk) for c in range(3)}
            for c in range(3):
                terms_c, conn_c = blocks[c]
                for cp in range(c, 3):
                    terms_p, conn_p = blocks[cp]
                    Ael = None
                    for Bc, a, sa in terms_c:
                        for Bp, b, sb in terms_p:
                            contrib = sa * sb * np.einsum(
                                "eqi,eq,eqj->eij", Bc, Kc[:, :, a, b], Bp, optimize=True
                            )
                            Ael = contrib if Ael is None else Ael + contrib
                    _push(rows, cols, vals, Ael, conn_c + offs[c], conn_p + offs[cp], sym=(c != cp))
    return rows, cols, vals


def _push(rows, cols, vals, Ael, conn_r, conn_c, sym):
    n, ni = conn_r.shape
    nj = conn_c.shape[1]
    R = np.broadcast_to(conn_r[:, :, None], (n, ni, nj)).ravel()
    C = np.broadcast_to(conn_c[:, None, :], (n, ni, nj)).ravel()
    V = Ael.ravel()
    rows.append(R)
    cols.append(C)
    vals.append(V)
    if sym:
        rows.append(C)
        cols.append(R)
        vals.append(V)


def _assemble_volume(space: DiscreteSpace, which):
    rows, cols, vals = [], [], []
    for ip in space.patch_ids:
        ctx = _PatchContext(space, ip)
        r, c, v = _assemble_patch(ctx, which)
        rows += r
        cols += c
        vals += v
    A_loc = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.n_local, space.n_local),
    ).tocsr()
    return (space.C.T @ A_loc @ space.C).tocsr()


def assemble_mass(space: DiscreteSpace):
    """Physical L^2 mass matrix of an H(curl) space (global dofs)."""
    return _assemble_volume(space, "mass")


def assemble_curl_curl(space: DiscreteSpace):
    """Physical curl-curl stiffness matrix of an H(curl) space."""
    return _assemble_volume(space, "curl")


def assemble_operators(space: DiscreteSpace):
    """(stiffness, mass) pair; shares nothing but is the common entry point."""
    return assemble_curl_curl(space), assemble_mass(space)


# ---------------------------------------------------------------------------
# mortar coupling
# ---------------------------------------------------------------------------


def merged_breakpoints(*lists, tol=1e-10):
    """Sorted union of breakpoint lists with near-duplicates collapsed."""
    allpts = np.sort(np.concatenate([np.asarray(l, float) for l in lists]))
    keep = [allpts[0]]
    for x in allpts[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    return np.asarray(keep)


def _pairing_gram_1d(kv_row, kv_col, cells, n_q, col_map=(1.0, 0.0)):
    """1D Gram G[k, j] = int mu_k(u) N_j(alpha u + beta) du over merged cells."""
    pts, wts = gauss_on_elements(cells, n_q)
    u = pts.ravel()
    w = wts.ravel()
    alpha, beta = col_map
    Vr = _dense_values(kv_row, u)
    Vc = _dense_values(kv_col, np.clip(alpha * u + beta, 0.0, 1.0))
    return (Vr * w[:, None]).T @ Vc


def _dense_values(kv, xs):
    firsts, ders = eval_basis_grid(kv, xs, der=0)
    out = np.zeros((len(xs), kv.n))
    for i, f in enumerate(firsts):
        out[i, f: f + kv.degree + 1] = ders[i, 0]
    return out


def _face_trace_scatter(space, patch_id, side, comp):
    """Map face dofs of one tangential component to local space indices."""
    axis, end = side_axis_end(side)
    basis = space.bases[(patch_id, comp)]
    flat = face_layer_indices(basis, axis, end).ravel(order="F")
    return space.offsets[(patch_id, comp)] + flat


def _piece_diag_map(piece):
    A = np.asarray(piece.A, float)
    t = np.asarray(piece.t, float)
    if abs(A[0, 1]) > 1e-14 or abs(A[1, 0]) > 1e-14 or A[0, 0] <= 0 or A[1, 1] <= 0:
        raise NotImplementedError(
            "mortar assembly supports axis-aligned, orientation-preserving "
            "piece maps only"
        )
    return (A[0, 0], t[0]), (A[1, 1], t[1])


def assemble_mortar_coupling(
    geom, coupling_index, slave_space, master_space, mult_space: MultiplierSpace
):
    """Mortar constraint matrices (B_slave, B_master).

    b(v, mu) = (jump of the tangential trace, mu) over the interface;
    the pairing of the covariant trace with the Piola multiplier reduces
    to the parametric L^2 product on the slave face, so the jump form is
    B_slave @ v_s - B_master @ v_m with purely univariate quadrature.
    """
    coupling = geom.couplings[coupling_index]
    q = mult_space.degree
    Bs = sp.lil_matrix((mult_space.n_dofs, slave_space.n_local))
    Bm = sp.lil_matrix((mult_space.n_dofs, master_space.n_local))
    for k, piece in enumerate(coupling.pieces):
        (a_u, t_u), (a_v, t_v) = _piece_diag_map(piece)
        axis_s, _ = side_axis_end(piece.slave_side)
        axis_m, _ = side_axis_end(piece.master_side)
        ts = face_tangent_axes(axis_s)
        tm = face_tangent_axes(axis_m)
        kvs_s = slave_space.patch_kvs(piece.slave_patch)
        kvs_m = master_space.patch_kvs(piece.master_patch)
        mu_space = mult_space.piece_spaces[k]
        off_piece = mult_space.offsets[k]
        n_q = max(slave_space.degree, master_space.degree) + q + 1
        maps = ((a_u, t_u), (a_v, t_v))
        cells = []
        for d in range(2):
            a, t = maps[d]
            bp_m = (np.asarray(kvs_m[tm[d]].breakpoints) - t) / a
            cells.append(
                merged_breakpoints(kvs_s[ts[d]].breakpoints, np.clip(bp_m, 0.0, 1.0))
            )
        for d in range(2):
            mu_basis = mu_space.components[d]
            off_comp = off_piece + mu_space.offsets[d]
            # slave trace: component = the volume axis behind face dir d
            comp_s = ts[d]
            comp_m = tm[d]
            g_s, g_m = [], []
            for dd in range(2):
                from .splines import derived_knot_vector

                kv_s_face = kvs_s[ts[dd]]
                kv_m_face = kvs_m[tm[dd]]
                if dd == d:
                    kv_s_face = derived_knot_vector(kv_s_face)
                    kv_m_face = derived_knot_vector(kv_m_face)
                g_s.append(
                    _pairing_gram_1d(mu_basis.kvs[dd], kv_s_face, cells[dd], n_q)
                )
                g_m.append(
                    _pairing_gram_1d(
                        mu_basis.kvs[dd], kv_m_face, cells[dd], n_q, col_map=maps[dd]
                    )
                )
            Gs = np.kron(g_s[1], g_s[0])
            Gm = np.kron(g_m[1], g_m[0]) * maps[d][0]  # covariant chain rule factor
            rows = np.arange(mu_basis.N) + off_comp
            cols_s = _face_trace_scatter(slave_space, piece.slave_patch, piece.slave_side, comp_s)
            cols_m = _face_trace_scatter(master_space, piece.master_patch, piece.master_side, comp_m)
            Bs[np.ix_(rows, cols_s)] += Gs
            Bm[np.ix_(rows, cols_m)] += Gm
    Bs = (Bs.tocsr() @ slave_space.C).tocsr()
    Bm = (Bm.tocsr() @ master_space.C).tocsr()
    return Bs, Bm


# ---------------------------------------------------------------------------
# modal (spectral) coupling
# ---------------------------------------------------------------------------


def _plane_frame(coupling):
    if coupling.plane is None:
        raise ValueError("modal coupling requires an interface plane frame")
    origin, ex, ey = (np.asarray(v, float) for v in coupling.plane)
    return origin, ex, ey


def _modal_side(space, patch_id, side, modes, origin, ex, ey, n_q):
    """Mode-against-trace integrals on one side of the interface."""
    axis, _ = side_axis_end(side)
    t1, t2 = face_tangent_axes(axis)
    kvs = space.patch_kvs(patch_id)
    face = space.geom.patches[patch_id].face(side)
    pts_u, w_u = gauss_on_elements(kvs[t1].breakpoints, n_q)
    pts_v, w_v = gauss_on_elements(kvs[t2].breakpoints, n_q)
    us, vs = pts_u.ravel(), pts_v.ravel()
    wu, wv = w_u.ravel(), w_v.ravel()
    data = face.eval_grid(us, vs)
    # in-plane coordinates of the physical quadrature points
    rel = data["x"] - origin
    pts2 = np.stack([rel @ ex, rel @ ey], axis=-1)
    # pull the modes back through the covariant trace pairing
    W = wu[:, None] * wv[None, :] * data["metric"]
    out = np.zeros((len(modes), space.n_local))
    from .splines import derived_knot_vector

    for d, comp in enumerate((t1, t2)):
        kv_u = derived_knot_vector(kvs[t1]) if d == 0 else kvs[t1]
        kv_v = derived_knot_vector(kvs[t2]) if d == 1 else kvs[t2]
        Vu = _dense_values(kv_u, us)
        Vv = _dense_values(kv_v, vs)
        cols = _face_trace_scatter(space, patch_id, side, comp)
        for kmode, mode in enumerate(modes):
            phi2 = mode.eval(pts2)
            phi3 = phi2[..., 0, None] * ex + phi2[..., 1, None] * ey
            g = np.einsum("uvdk,uvk->uvd", data["pinv"], phi3)[..., d]
            out[kmode][cols] += np.einsum(
                "uv,uv,ui,vj->ij", W, g, Vu, Vv, optimize=True
            ).ravel(order="F")
    return out


def assemble_modal_coupling(geom, coupling_index, slave_space, master_space, modes, n_extra=2):
    """Constraint matrices (B_slave, B_master) against interface modes.

    Row k enforces (jump of the tangential trace, phi_k) = 0 for the
    k-th transverse mode of the interface cross-section.  Each side is
    integrated on its own quadrature grid.
    """
    coupling = geom.couplings[coupling_index]
    origin, ex, ey = _plane_frame(coupling)
    gmax = max(m.gamma for m in modes)
    Bs = np.zeros((len(modes), slave_space.n_local))
    Bm = np.zeros((len(modes), master_space.n_local))
    for piece in coupling.pieces:
        for space, out, patch_id, side in (
            (slave_space, Bs, piece.slave_patch, piece.slave_side),
            (master_space, Bm, piece.master_patch, piece.master_side),
        ):
            diam = space.geom.patches[patch_id].diameter
            n_el = min(
                space.patch_kvs(patch_id)[d].n_elements
                for d in face_tangent_axes(side // 2)
            )
            n_q = space.degree + n_extra + int(np.ceil(gmax * diam / (2.0 * max(n_el, 1))))
            out += _modal_side(space, patch_id, side, modes, origin, ex, ey, n_q)
    Bs = sp.csr_matrix(Bs) @ slave_space.C
    Bm = sp.csr_matrix(Bm) @ master_space.C
    return Bs.tocsr(), Bm.tocsr()


# ---------------------------------------------------------------------------
# multiplier norm
# ---------------------------------------------------------------------------


def multiplier_norm_matrix(geom, coupling_index, slave_space, mult_space, h):
    """Mesh-dependent dual-norm proxy for interface multipliers.

    N = h * (Piola L^2 mass) + h * D^T (weighted scalar mass) D with D
    the surface divergence, an h-scaled H(div) norm standing in for the
    H^{-1/2}(div) norm in the discrete stability estimate.
    """
    coupling = geom.couplings[coupling_index]
    M_blocks, Mdiv_blocks = [], []
    for k, piece in enumerate(coupling.pieces):
        mu_space = mult_space.piece_spaces[k]
        face = geom.patches[piece.slave_patch].face(piece.slave_side)
        ku, kvv = mult_space.piece_kvs[k]
        n_q = mult_space.degree + 2
        pts_u, w_u = gauss_on_elements(ku.breakpoints, n_q)
        pts_v, w_v = gauss_on_elements(kvv.breakpoints, n_q)
        us, vs = pts_u.ravel(), pts_v.ravel()
        wu, wv = w_u.ravel(), w_v.ravel()
        data = face.eval_grid(us, vs)
        J = data["jac"]
        metric = data["metric"]
        G = np.einsum("...ki,...kj->...ij", J, J)
        W = wu[:, None] * wv[None, :]
        # Piola vector mass: mu^T (J^T J) mu' / |J|
        n0 = mu_space.components[0].N
        n1 = mu_space.components[1].N
        M = np.zeros((n0 + n1, n0 + n1))
        from .splines import derived_knot_vector

        comp_tabs = []
        for d in range(2):
            b = mu_space.components[d]
            comp_tabs.append((_dense_values(b.kvs[0], us), _dense_values(b.kvs[1], vs)))
        offs = (0, n0)
        for d in range(2):
            for dp in range(d, 2):
                ker = W * G[..., d, dp] / metric
                Vu, Vv = comp_tabs[d]
                Vup, Vvp = comp_tabs[dp]
                blk = np.einsum(
                    "uv,ui,vj,uk,vl->ijkl", ker, Vu, Vv, Vup, Vvp, optimize=True
                )
                blk = blk.reshape(
                    mu_space.components[d].shape + mu_space.components[dp].shape
                )
                blk2 = blk.transpose(1, 0, 3, 2).reshape(
                    mu_space.components[d].N, mu_space.components[dp].N
                )
                M[
                    offs[d]: offs[d] + blk2.shape[0],
                    offs[dp]: offs[dp] + blk2.shape[1],
                ] = blk2
                if dp != d:
                    M[
                        offs[dp]: offs[dp] + blk2.shape[1],
                        offs[d]: offs[d] + blk2.shape[0],
                    ] = blk2.T
        M_blocks.append(M)
        # scalar (divergence image) mass with the Piola weight 1/|J|
        from .spaces import surface_scalar_basis

        sb = surface_scalar_basis(derived_knot_vector(ku), derived_knot_vector(kvv))
        Vu = _dense_values(sb.kvs[0], us)
        Vv = _dense_values(sb.kvs[1], vs)
        ker = W / metric
        blk = np.einsum("uv,ui,vj,uk,vl->ijkl", ker, Vu, Vv, Vu, Vv, optimize=True)
        blk = blk.reshape(sb.shape + sb.shape).transpose(1, 0, 3, 2).reshape(sb.N, sb.N)
        Mdiv_blocks.append(blk)
    Mfull = sp.block_diag([sp.csr_matrix(b) for b in M_blocks], format="csr")
    Mdiv = sp.block_diag([sp.csr_matrix(b) for b in Mdiv_blocks], format="csr")
    D = mult_space.divergence()
    N = h * Mfull + h * (D.T @ Mdiv @ D)
    return N.tocsr()
