"""Discrete spline de Rham spaces on multipatch subdomains.

Scalar (H^1-conforming) and vector (H(curl)-conforming) tensor-product
spline spaces per patch, glued conformally across matching faces of one
subdomain, with optional elimination of boundary (PEC) traces.  Also the
surface spaces on interfaces and the interface multiplier space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import MultipatchGeometry, face_tangent_axes, side_axis_end
from .splines import (
    KnotVector,
    TensorBasis,
    derived_knot_vector,
    reduce_to_multiplier_degree,
)

__all__ = [
    "DiscreteSpace",
    "build_scalar_space",
    "build_curl_space",
    "gradient_matrix",
    "deriv_matrix_1d",
    "face_layer_indices",
    "component_basis",
    "SurfaceSpace",
    "surface_scalar_basis",
    "surface_curl_space",
    "surface_div_space",
    "surface_gradient",
    "surface_rot",
    "surface_scalar_curl",
    "surface_divergence",
    "MultiplierSpace",
    "build_multiplier_space",
]


# ---------------------------------------------------------------------------
# 1D derivative and tensor utilities
# ---------------------------------------------------------------------------


def deriv_matrix_1d(kv: KnotVector):
    """Sparse map from spline coefficients to derivative coefficients.

    The derivative of sum_i c_i N_i^p lives in the degree p-1 space on
    the derived knot vector, with coefficients
    b_i = p (c_{i+1} - c_i) / (xi_{i+p+1} - xi_{i+1}).
    """
    p = kv.degree
    if p < 1:
        raise ValueError("cannot differentiate a degree-0 space")
    arr = kv.array
    n = kv.n
    rows, cols, vals = [], [], []
    for i in range(n - 1):
        denom = arr[i + p + 1] - arr[i + 1]
        fac = p / denom
        rows += [i, i]
        cols += [i, i + 1]
        vals += [-fac, fac]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, n))


def _kron_chain(mats):
    """Kronecker product with the first direction innermost (F-order ravel)."""
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(m, out, format="csr")
    return out


def directional_derivative_matrix(basis: TensorBasis, direction):
    """Coefficient map of the partial derivative along one direction."""
    mats = []
    for d, kv in enumerate(basis.kvs):
        mats.append(deriv_matrix_1d(kv) if d == direction else sp.identity(kv.n, format="csr"))
    return _kron_chain(mats)


def component_basis(kvs, c):
    """Basis of component c of the curl-conforming space: derived in direction c."""
    return TensorBasis(
        tuple(derived_knot_vector(kv) if d == c else kv for d, kv in enumerate(kvs))
    )


def face_layer_indices(basis: TensorBasis, axis, end):
    """Flat indices of the boundary layer of control points on one face.

    Returned as an array of shape (n_t1, n_t2) over the face tangent
    axes in ascending order, in F-order face numbering.
    """
    shape = basis.shape
    t1, t2 = face_tangent_axes(axis) if len(shape) == 3 else ((0,), (1,))
    idx = [None, None, None]
    idx[axis] = np.array([0 if end == 0 else shape[axis] - 1])
    idx[t1] = np.arange(shape[t1])
    idx[t2] = np.arange(shape[t2])
    grids = np.meshgrid(idx[0], idx[1], idx[2], indexing="ij")
    flat = basis.ravel_grid(tuple(grids))
    return np.squeeze(flat, axis=axis)


# ---------------------------------------------------------------------------
# signed union-find
# ---------------------------------------------------------------------------


class _SignedUnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)
        self.sign = np.ones(n, dtype=np.int8)
        self.rank = np.zeros(n, dtype=np.int32)
        self.eliminated = np.zeros(n, dtype=bool)

    def root_sign(self, i):
        """Root of i and the sign s with coeff_i = s * coeff_root."""
        r = i
        s = 1
        while self.parent[r] != r:
            s *= self.sign[r]
            r = self.parent[r]
        return r, s

    def union(self, a, b, s_ab):
        """Impose coeff_a = s_ab * coeff_b."""
        ra, sa = self.root_sign(a)
        rb, sb = self.root_sign(b)
        if ra == rb:
            if sa != s_ab * sb:
                raise ValueError("inconsistent orientation cycle while gluing")
            return
        # coeff_ra = (s_ab * sb / sa) * coeff_rb
        srel = s_ab * sb * sa
        if self.rank[ra] < self.rank[rb]:
            self.parent[ra] = rb
            self.sign[ra] = srel
        else:
            self.parent[rb] = ra
            self.sign[rb] = srel
            if self.rank[ra] == self.rank[rb]:
                self.rank[ra] += 1
        if self.eliminated[ra] or self.eliminated[rb]:
            self.eliminated[ra] = self.eliminated[rb] = True

    def eliminate(self, i):
        r, _ = self.root_sign(i)
        self.eliminated[r] = True

    def constraint_matrix(self):
        """Sparse C with local coefficients = C @ free coefficients."""
        n = len(self.parent)
        root_id = {}
        rows, cols, vals = [], [], []
        for i in range(n):
            r, s = self.root_sign(i)
            if self.eliminated[r]:
                continue
            g = root_id.setdefault(r, len(root_id))
            rows.append(i)
            cols.append(g)
            vals.append(float(s))
        C = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(root_id)))
        return C


# ---------------------------------------------------------------------------
# volume spaces
# ---------------------------------------------------------------------------


@dataclass
class DiscreteSpace:
    """A glued spline space on one subdomain.

    Attributes
    ----------
    kind : str
        "h1" or "hcurl".
    patch_ids : tuple
        Global patch indices of the subdomain, in order.
    bases : dict
        (patch_id, comp) -> TensorBasis (comp = 0 for scalar spaces).
    offsets : dict
        (patch_id, comp) -> start of that block in the local vector.
    C : scipy.sparse.csr_matrix
        n_local x n_dofs constraint matrix with entries in {-1, 0, 1};
        local coefficients of all patch blocks are C @ (global dofs).
    """

    geom: MultipatchGeometry
    subdomain: int
    kind: str
    degree: int
    patch_ids: tuple
    bases: dict
    offsets: dict
    n_local: int
    C: sp.csr_matrix

    @property
    def n_dofs(self):
        return self.C.shape[1]

    @property
    def n_components(self):
        return 3 if self.kind == "hcurl" else 1

    def local_block(self, patch_id, comp=0):
        start = self.offsets[(patch_id, comp)]
        return start, start + self.bases[(patch_id, comp)].N

    def mesh_size(self):
        """Largest element size over all patch knot vectors (parametric)."""
        hs = []
        for ip in self.patch_ids:
            for kv in self.patch_kvs(ip):
                hs.append(kv.max_element_size)
        return max(hs)

    def patch_kvs(self, patch_id):
        if self.kind == "h1":
            return self.bases[(patch_id, 0)].kvs
        # recover the underlying scalar knot vectors from component 0
        kvs = []
        for d in range(3):
            comp = 0 if d != 0 else 1
            kvs.append(self.bases[(patch_id, comp)].kvs[d])
        return tuple(kvs)


def _per_patch_kvs(geom, subdomain, degree, n_elements, regularity):
    """Resolve the per-patch, per-direction knot vectors of a subdomain."""
    from .splines import make_open_uniform

    patch_ids = geom.patches_of_subdomain(subdomain)
    out = {}
    for ip in patch_ids:
        if isinstance(n_elements, dict):
            nel = n_elements[ip]
        else:
            nel = n_elements
        nel = (nel,) * 3 if np.isscalar(nel) else tuple(nel)
        if isinstance(regularity, dict):
            reg = regularity[ip]
        else:
            reg = regularity
        reg = (reg,) * 3 if np.isscalar(reg) else tuple(reg)
        out[ip] = tuple(
            make_open_uniform(degree, int(n), int(r)) for n, r in zip(nel, reg)
        )
    return patch_ids, out


def _glue_and_constrain(geom, subdomain, bases, offsets, n_local, glue_entries, pec_entries):
    uf = _SignedUnionFind(n_local)
    for a, b, s in glue_entries:
        uf.union(int(a), int(b), int(s))
    for i in pec_entries:
        uf.eliminate(int(i))
    return uf.constraint_matrix()


def _matched_direction(Q, da):
    """Row r and sign of the nonzero entry of column da of the face map Q."""
    col = [Q[r][da] for r in range(2)]
    for r, v in enumerate(col):
        if v != 0:
            return r, v
    raise ValueError("singular face orientation matrix")


def _map_face_index(i, n, reversed_):
    return n - 1 - i if reversed_ else i


def _check_glue_kv(kv_a, kv_b, reversed_):
    if kv_a.degree != kv_b.degree or kv_a.n != kv_b.n:
        raise ValueError("glued faces carry incompatible knot vectors")
    if not np.allclose(kv_a.array, kv_b.array, atol=1e-12):
        raise ValueError("glued faces carry incompatible knot vectors")
    if reversed_ and not kv_a.is_reversal_symmetric():
        raise ValueError("reversed gluing requires a reversal-symmetric knot vector")


def build_scalar_space(geom, subdomain, degree, n_elements, regularity=None, pec=True):
    """H^1-conforming spline space S^0 on one subdomain.

    With pec=True the trace on the outer boundary of the subdomain is
    eliminated; traces on coupling interfaces are always kept.
    """
    if regularity is None:
        regularity = degree - 1
    patch_ids, kvs = _per_patch_kvs(geom, subdomain, degree, n_elements, regularity)
    bases, offsets = {}, {}
    n_local = 0
    for ip in patch_ids:
        tb = TensorBasis(kvs[ip])
        bases[(ip, 0)] = tb
        offsets[(ip, 0)] = n_local
        n_local += tb.N

    glue = []
    for itf in geom.conforming:
        if geom.subdomain_ids[itf.patch_a] != subdomain:
            continue
        ta = face_tangent_axes(itf.side_a // 2)
        tb_axes = face_tangent_axes(itf.side_b // 2)
        axis_a, end_a = side_axis_end(itf.side_a)
        axis_b, end_b = side_axis_end(itf.side_b)
        ba = bases[(itf.patch_a, 0)]
        bb = bases[(itf.patch_b, 0)]
        dir_map = []
        for da in range(2):
            r, s = _matched_direction(itf.Q, da)
            rev = s < 0
            _check_glue_kv(ba.kvs[ta[da]], bb.kvs[tb_axes[r]], rev)
            dir_map.append((r, rev))
        na = [ba.shape[ta[0]], ba.shape[ta[1]]]
        for i0 in range(na[0]):
            for i1 in range(na[1]):
                ia = [0, 0, 0]
                ia[axis_a] = 0 if end_a == 0 else ba.shape[axis_a] - 1
                ia[ta[0]], ia[ta[1]] = i0, i1
                ib = [0, 0, 0]
                ib[axis_b] = 0 if end_b == 0 else bb.shape[axis_b] - 1
                for da, i in ((0, i0), (1, i1)):
                    r, rev = dir_map[da]
                    ax_b = tb_axes[r]
                    ib[ax_b] = _map_face_index(i, bb.shape[ax_b], rev)
                glue.append(
                    (
                        offsets[(itf.patch_a, 0)] + ba.ravel(tuple(ia)),
                        offsets[(itf.patch_b, 0)] + bb.ravel(tuple(ib)),
                        1,
                    )
                )

    pec_dofs = []
    if pec:
        for ip, side in geom.boundary_faces(subdomain):
            b = bases[(ip, 0)]
            axis, end = side_axis_end(side)
            flat = face_layer_indices(b, axis, end)
            pec_dofs.extend((offsets[(ip, 0)] + flat.ravel(order="F")).tolist())

    C = _glue_and_constrain(geom, subdomain, bases, offsets, n_local, glue, pec_dofs)
    return DiscreteSpace(
        geom, subdomain, "h1", degree, tuple(patch_ids), bases, offsets, n_local, C
    )


def build_curl_space(geom, subdomain, degree, n_elements, regularity=None, pec=True):
    """Curl-conforming spline space S^1 on one subdomain.

    Component c uses the derived (degree-reduced) knot vector in
    direction c.  Tangential components are glued across conforming
    faces with the sign of the dihedral face map; normal components stay
    independent.  With pec=True the tangential trace on the outer
    boundary is eliminated.
    """
    if regularity is None:
        regularity = degree - 1
    patch_ids, kvs = _per_patch_kvs(geom, subdomain, degree, n_elements, regularity)
    bases, offsets = {}, {}
    n_local = 0
    for ip in patch_ids:
        for c in range(3):
            tb = component_basis(kvs[ip], c)
            bases[(ip, c)] = tb
            offsets[(ip, c)] = n_local
            n_local += tb.N

    glue = []
    for itf in geom.conforming:
        if geom.subdomain_ids[itf.patch_a] != subdomain:
            continue
        axis_a, end_a = side_axis_end(itf.side_a)
        axis_b, end_b = side_axis_end(itf.side_b)
        ta = face_tangent_axes(axis_a)
        tb_axes = face_tangent_axes(axis_b)
        dir_map = []
        for da in range(2):
            r, s = _matched_direction(itf.Q, da)
            dir_map.append((r, s))
        # glue component c_a = ta[da] with component c_b = tb_axes[r]
        for da in range(2):
            r, s_comp = dir_map[da]
            c_a, c_b = ta[da], tb_axes[r]
            ba = bases[(itf.patch_a, c_a)]
            bb = bases[(itf.patch_b, c_b)]
            for db in range(2):
                rr, ss = dir_map[db]
                _check_glue_kv(ba.kvs[ta[db]], bb.kvs[tb_axes[rr]], ss < 0)
            na = [ba.shape[ta[0]], ba.shape[ta[1]]]
            for i0 in range(na[0]):
                for i1 in range(na[1]):
                    ia = [0, 0, 0]
                    ia[axis_a] = 0 if end_a == 0 else ba.shape[axis_a] - 1
                    ia[ta[0]], ia[ta[1]] = i0, i1
                    ib = [0, 0, 0]
                    ib[axis_b] = 0 if end_b == 0 else bb.shape[axis_b] - 1
                    for db, i in ((0, i0), (1, i1)):
                        rr, ss = dir_map[db]
                        ax_b = tb_axes[rr]
                        ib[ax_b] = _map_face_index(i, bb.shape[ax_b], ss < 0)
                    glue.append(
                        (
                            offsets[(itf.patch_a, c_a)] + ba.ravel(tuple(ia)),
                            offsets[(itf.patch_b, c_b)] + bb.ravel(tuple(ib)),
                            s_comp,
                        )
                    )

    pec_dofs = []
    if pec:
        for ip, side in geom.boundary_faces(subdomain):
            axis, end = side_axis_end(side)
            for c in face_tangent_axes(axis):
                b = bases[(ip, c)]
                flat = face_layer_indices(b, axis, end)
                pec_dofs.extend((offsets[(ip, c)] + flat.ravel(order="F")).tolist())

    C = _glue_and_constrain(geom, subdomain, bases, offsets, n_local, glue, pec_dofs)
    return DiscreteSpace(
        geom, subdomain, "hcurl", degree, tuple(patch_ids), bases, offsets, n_local, C
    )


def gradient_matrix(space_h1: DiscreteSpace, space_curl: DiscreteSpace):
    """Global coefficient map of the parametric gradient S^0 -> S^1.

    The two spaces must live on the same subdomain with the same knot
    vectors.  The returned G satisfies C_curl @ G = G_local @ C_h1, i.e.
    gradients of glued scalar fields are glued vector fields.
    """
    if space_h1.patch_ids != space_curl.patch_ids:
        raise ValueError("spaces live on different subdomains")
    rows, cols, vals = [], [], []
    G_loc = sp.lil_matrix((space_curl.n_local, space_h1.n_local))
    for ip in space_h1.patch_ids:
        b0 = space_h1.bases[(ip, 0)]
        o0 = space_h1.offsets[(ip, 0)]
        for c in range(3):
            D = directional_derivative_matrix(b0, c)
            oc = space_curl.offsets[(ip, c)]
            D = D.tocoo()
            for r, cc, v in zip(D.row, D.col, D.data):
                G_loc[oc + r, o0 + cc] = v
    G_loc = G_loc.tocsr()
    Cc = space_curl.C
    Ch = space_h1.C
    # project the local map onto the glued bases; exact because gradients
    # of conforming scalars are conforming vectors
    scale = np.asarray(Cc.multiply(Cc).sum(axis=0)).ravel()
    G = sp.diags(1.0 / scale) @ (Cc.T @ (G_loc @ Ch))
    resid = Cc @ G - G_loc @ Ch
    if resid.nnz and abs(resid).max() > 1e-10:
        raise ValueError("gradient is not compatible with the glued spaces")
    G.eliminate_zeros()
    return G.tocsr()


# ---------------------------------------------------------------------------
# surface spaces and incidences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceSpace:
    """A two-component vector space on a parametric face."""

    components: tuple  # of TensorBasis (2D)

    @property
    def n_dofs(self):
        return sum(b.N for b in self.components)

    @property
    def offsets(self):
        return (0, self.components[0].N)


def surface_scalar_basis(kv_u, kv_v):
    return TensorBasis((kv_u, kv_v))


def surface_curl_space(kv_u, kv_v):
    """Tangential-trace space: (S_{p-1,p}, S_{p,p-1})."""
    return SurfaceSpace(
        (
            TensorBasis((derived_knot_vector(kv_u), kv_v)),
            TensorBasis((kv_u, derived_knot_vector(kv_v))),
        )
    )


def surface_div_space(kv_u, kv_v):
    """Rotated-trace (div-conforming) space: (S_{p,p-1}, S_{p-1,p})."""
    return SurfaceSpace(
        (
            TensorBasis((kv_u, derived_knot_vector(kv_v))),
            TensorBasis((derived_knot_vector(kv_u), kv_v)),
        )
    )


def _kron2(A, B):
    """Operator acting as A along u and B along v in F-order numbering."""
    return sp.kron(B, A, format="csr")


def surface_gradient(kv_u, kv_v):
    """S_{p,p} -> (S_{p-1,p}, S_{p,p-1}): (d/du, d/dv)."""
    Du, Dv = deriv_matrix_1d(kv_u), deriv_matrix_1d(kv_v)
    Iu, Iv = sp.identity(kv_u.n), sp.identity(kv_v.n)
    return sp.vstack([_kron2(Du, Iv), _kron2(Iu, Dv)], format="csr")


def surface_rot(kv_u, kv_v):
    """S_{p,p} -> (S_{p,p-1}, S_{p-1,p}): rotated gradient (d/dv, -d/du)."""
    Du, Dv = deriv_matrix_1d(kv_u), deriv_matrix_1d(kv_v)
    Iu, Iv = sp.identity(kv_u.n), sp.identity(kv_v.n)
    return sp.vstack([_kron2(Iu, Dv), -_kron2(Du, Iv)], format="csr")


def surface_scalar_curl(kv_u, kv_v):
    """(S_{p-1,p}, S_{p,p-1}) -> S_{p-1,p-1}: d(v1)/du - d(v0)/dv."""
    Du, Dv = deriv_matrix_1d(kv_u), deriv_matrix_1d(kv_v)
    Iu1 = sp.identity(kv_u.n - 1)
    Iv1 = sp.identity(kv_v.n - 1)
    return sp.hstack([-_kron2(Iu1, Dv), _kron2(Du, Iv1)], format="csr")


def surface_divergence(kv_u, kv_v):
    """(S_{p,p-1}, S_{p-1,p}) -> S_{p-1,p-1}: d(v0)/du + d(v1)/dv."""
    Du, Dv = deriv_matrix_1d(kv_u), deriv_matrix_1d(kv_v)
    Iu1 = sp.identity(kv_u.n - 1)
    Iv1 = sp.identity(kv_v.n - 1)
    return sp.hstack([_kron2(Du, Iv1), _kron2(Iu1, Dv)], format="csr")


# ---------------------------------------------------------------------------
# interface multiplier space
# ---------------------------------------------------------------------------


@dataclass
class MultiplierSpace:
    """Div-conforming multiplier space of one coupling interface.

    One independent block per interface piece (no continuity is imposed
    between pieces).  Built from the slave-side trace knot vectors with
    the end-knot reduction to degree q.
    """

    coupling_index: int
    degree: int
    piece_spaces: tuple  # SurfaceSpace per piece
    piece_kvs: tuple  # (kv_u_q, kv_v_q) per piece
    offsets: tuple
    stable: bool

    @property
    def n_dofs(self):
        return self.offsets[-1]

    def piece_slice(self, k):
        return self.offsets[k], self.offsets[k + 1]

    def divergence(self):
        """Blockwise surface divergence into the degree q-1 scalar spaces."""
        blocks = [surface_divergence(ku, kvv) for ku, kvv in self.piece_kvs]
        return sp.block_diag(blocks, format="csr")


def build_multiplier_space(geom, coupling_index, slave_space: DiscreteSpace, q):
    """Multiplier space of one coupling interface.

    The knot vectors of the slave trace (degree p) are reduced to degree
    q by dropping p - q end-knot repetitions; the multiplier is the
    div-conforming surface space on the reduced knot vectors.  The
    pairing p - q is stable when p - q is odd.
    """
    coupling = geom.couplings[coupling_index]
    p = slave_space.degree
    if not (1 <= q < p):
        raise ValueError(f"multiplier degree must satisfy 1 <= q < p, got q={q}, p={p}")
    piece_spaces, piece_kvs, offsets = [], [], [0]
    for piece in coupling.pieces:
        axis, _ = side_axis_end(piece.slave_side)
        t1, t2 = face_tangent_axes(axis)
        kvs = slave_space.patch_kvs(piece.slave_patch)
        ku = reduce_to_multiplier_degree(kvs[t1], q)
        kvv = reduce_to_multiplier_degree(kvs[t2], q)
        space = surface_div_space(ku, kvv)
        piece_spaces.append(space)
        piece_kvs.append((ku, kvv))
        offsets.append(offsets[-1] + space.n_dofs)
    return MultiplierSpace(
        coupling_index,
        q,
        tuple(piece_spaces),
        tuple(piece_kvs),
        tuple(offsets),
        stable=((p - q) % 2 == 1),
    )
