"""Global DOF maps and pulled-back basis evaluation.

Transforms: S by composition, N covariantly (J^-T u, curl -> J curl / det),
RT by Piola (J u / det, div -> div / det), Z by 1/det.  det carries the sign of
the element map; the mesh keeps ascending vertex order, so it may be negative.
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh
from .reference import ReferenceElement, dim_formula, reference_element

_OFFSETS = ("v", "e", "f", "i")


@dataclass
class FeSpace:
    mesh: Mesh
    kind: str
    p: int
    ref: ReferenceElement = field(init=False, repr=False)
    dofmap: np.ndarray = field(init=False, repr=False)
    signs: np.ndarray = field(init=False, repr=False)
    ndof: int = field(init=False)

    def __post_init__(self):
        self.ref = reference_element(self.kind, self.p)
        m = self.mesh
        nv, ne, nf, ni = self.ref.entity_counts()
        counts = {"v": (nv, len(m.vertices)), "e": (ne, len(m.edges)),
                  "f": (nf, len(m.faces)), "i": (ni, m.n_elements)}
        off, start = {}, 0
        for t in _OFFSETS:
            off[t] = start
            start += counts[t][0] * counts[t][1]
        self.ndof = start
        self.block = {t: (off[t], counts[t][0]) for t in _OFFSETS}
        ents = {"v": m.tets, "e": m.tet_edges, "f": m.tet_faces,
                "i": np.arange(m.n_elements)[:, None]}
        cols, seen = [], {}
        for t, i in self.ref.dofs.entity:
            j = seen.get((t, i), 0)
            seen[(t, i)] = j + 1
            cols.append(off[t] + ents[t][:, i] * counts[t][0] + j)
        self.dofmap = np.stack(cols, axis=1)
        # ascending vertex order makes every functional intrinsic: no flips
        self.signs = np.ones_like(self.dofmap, dtype=np.int8)

    @property
    def dim_local(self):
        return self.ref.dim

    def entity_dofs(self, kind, ids):
        o, c = self.block[kind]
        ids = np.asarray(ids)
        return (o + ids[:, None] * c + np.arange(c)[None, :]).ravel()

    def boundary_dofs(self):
        m = self.mesh
        bf = m.faces[m.boundary_faces]
        out = [self.entity_dofs("f", m.boundary_faces)]
        if self.block["e"][1]:
            be = np.unique(np.sort(np.concatenate([bf[:, [0, 1]], bf[:, [0, 2]], bf[:, [1, 2]]])), axis=0)
            idx = {tuple(e): i for i, e in enumerate(map(tuple, m.edges))}
            out.append(self.entity_dofs("e", [idx[tuple(e)] for e in be]))
        if self.block["v"][1]:
            out.append(self.entity_dofs("v", np.unique(bf)))
        return np.unique(np.concatenate(out))


def pulled_back(space, xhat, elements=None, geometry=None):
    """Physical points, |det| and basis values/derivatives at reference points.

    Returns x (ne,nq,3), adet (ne,nq), val, der with
      S: val (ne,nq,nb), der = grad (ne,nq,nb,3)
      N: val (ne,nq,nb,3), der = curl (ne,nq,nb,3)
      RT: val (ne,nq,nb,3), der = div (ne,nq,nb)
      Z: val (ne,nq,nb), der = None
    """
    ref = space.ref
    x, J = geometry if geometry is not None else space.mesh.geometry(xhat, elements)
    det = np.linalg.det(J)
    if np.any(det == 0):
        raise FloatingPointError("singular element map")
    kind = space.kind
    if kind == "S":
        v = ref.values(xhat)[:, :, 0]
        g = ref.grad(xhat)
        Jinv = np.linalg.inv(J)
        val = np.broadcast_to(v, (len(x),) + v.shape)
        der = np.einsum("eqdc,qid->eqic", Jinv, g)
    elif kind == "N":
        Jinv = np.linalg.inv(J)
        val = np.einsum("eqdc,qid->eqic", Jinv, ref.values(xhat))
        der = np.einsum("eqcd,qid->eqic", J, ref.curl(xhat)) / det[:, :, None, None]
    elif kind == "RT":
        val = np.einsum("eqcd,qid->eqic", J, ref.values(xhat)) / det[:, :, None, None]
        der = ref.div(xhat)[None] / det[:, :, None]
    else:
        val = ref.values(xhat)[None, :, :, 0] / det[:, :, None]
        der = None
    return x, abs(det), val, der


def evaluate(space, coeffs, xhat, elements=None, derivative=True):
    """Field values (and derivative) of a global coefficient vector."""
    el = np.arange(space.mesh.n_elements) if elements is None else np.asarray(elements)
    x, adet, val, der = pulled_back(space, xhat, el)
    c = coeffs[space.dofmap[el]]
    sub = "eqi...,ei->eq..."
    out = np.einsum(sub, val, c)
    if derivative and der is not None:
        return x, out, np.einsum(sub, der, c)
    return x, out


def chunks(n, size):
    for a in range(0, n, size):
        yield np.arange(a, min(n, a + size))


def check_dimensions(p_values=(0, 1, 2, 3)):
    """{(kind, p): (dim, formula)} on the reference element."""
    return {(k, p): (reference_element(k, p).dim, dim_formula(k, p))
            for p in p_values for k in ("S", "N", "RT", "Z")}
