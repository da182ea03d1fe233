"""Skeleton-based assembly of the Trefftz DG (UWVF-type) system.

All coupling lives on mesh facets; there are no volume terms because
the basis solves the Helmholtz equation elementwise.  On an interior
facet with traces (u_A, u_B) and facet normal n out of side A, the
sesquilinear form contributes

    {u} [grad v . n] - (beta/(i k)) [grad u . n][grad v . n]
  - {grad u . n} [v] + alpha i k [u][v]

per unit area, with jumps [w] = w_A - w_B and averages {w} = (w_A +
w_B)/2 taken along n.  Robin facets use the impedance splitting with
weight delta, Dirichlet facets the penalty alpha i k; the right-hand
side mirrors the boundary terms so the scheme is consistent.  On a
material-interface facet the coefficient wavenumber is the shared
frequency supplied by the problem.

Element blocks are kept in a dict keyed by (test id, trial id) and
flattened to CSR on demand in sorted key order.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import eval_basis
from .quadrature import facet_rule

VALID_TAGS = ("robin", "dirichlet")


class AssemblyError(Exception):
    """Malformed facet data or boundary tags."""


@dataclass(frozen=True)
class PenaltyParams:
    """Flux weights of the skeleton form; 1/2 everywhere recovers the UWVF."""

    alpha: float = 0.5
    beta: float = 0.5
    delta: float = 0.5


@dataclass
class GlobalSystem:
    """Block-compressed system A x = b with a deterministic dof layout."""

    blocks: dict
    rhs: np.ndarray
    dof_map: dict
    dim: int
    _csr: object = field(default=None, repr=False)

    def to_sparse(self):
        if self._csr is None:
            rows, cols, data = [], [], []
            for (test_id, trial_id) in sorted(self.blocks):
                block = self.blocks[(test_id, trial_id)]
                r0, r1 = self.dof_map[test_id]
                c0, c1 = self.dof_map[trial_id]
                rr, cc = np.meshgrid(
                    np.arange(r0, r1), np.arange(c0, c1), indexing="ij"
                )
                rows.append(rr.ravel())
                cols.append(cc.ravel())
                data.append(block.ravel())
            self._csr = sp.csr_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.dim, self.dim),
            )
        return self._csr


def _facet_traces(element, rule, normal):
    values, grads = eval_basis(element, rule.points, order=1)
    return values, grads @ normal


def assemble_system(mesh, problem, params=PenaltyParams(), facets=None):
    """Assemble the TDG system for the mesh and problem.

    `facets` may override the mesh skeleton (used for consistency
    checks); each entry must carry side ids, a normal and a geometry
    box as produced by skeleton_facets.
    """
    if facets is None:
        facets = mesh.facets()
    dof_map = {}
    offset = 0
    for eid in mesh.element_ids():
        p = mesh.elements[eid].n_waves
        dof_map[eid] = (offset, offset + p)
        offset += p
    dim = offset
    rhs = np.zeros(dim, dtype=complex)
    blocks = {}

    def add(test_id, trial_id, mat):
        key = (test_id, trial_id)
        if key in blocks:
            blocks[key] += mat
        else:
            blocks[key] = mat

    alpha, beta, delta = params.alpha, params.beta, params.delta
    vtheta = problem.impedance_sign

    for facet in facets:
        el_a = mesh.elements[facet.side_a]
        normal = facet.normal
        if facet.is_boundary:
            tag = facet.side_b
            if tag not in VALID_TAGS:
                raise AssemblyError(f"facet carries invalid boundary tag {tag!r}")
            k = el_a.k
            rule = facet_rule(facet, k, el_a.degree)
            w = rule.weights
            values, dnorm = _facet_traces(el_a, rule, normal)
            vc, gc = values.conj(), dnorm.conj()
            wv = w[:, None] * values
            wg = w[:, None] * dnorm
            gdata = problem.boundary_data(tag, rule.points, normal)
            if tag == "robin":
                ikt = 1j * k * vtheta
                mat = (1.0 - delta) * (gc.T @ wv + ikt * (vc.T @ wv)) - delta * (
                    (1.0 / ikt) * (gc.T @ wg) + vc.T @ wg
                )
                vec = (1.0 - delta) * (vc.T @ (w * gdata)) - (delta / ikt) * (
                    gc.T @ (w * gdata)
                )
            else:
                ika = 1j * k * alpha
                mat = -(vc.T @ wg) + ika * (vc.T @ wv)
                vec = ika * (vc.T @ (w * gdata)) - gc.T @ (w * gdata)
            add(facet.side_a, facet.side_a, mat)
            r0, r1 = dof_map[facet.side_a]
            rhs[r0:r1] += vec
            continue

        el_b = mesh.elements[facet.side_b]
        k_f = problem.facet_wavenumber(el_a.k, el_b.k)
        rule = facet_rule(
            facet, max(el_a.k, el_b.k), max(el_a.degree, el_b.degree)
        )
        w = rule.weights
        va, ga = _facet_traces(el_a, rule, normal)
        vb, gb = _facet_traces(el_b, rule, normal)
        ik = 1j * k_f
        sides = (
            (facet.side_a, va, ga, 1.0),
            (facet.side_b, vb, gb, -1.0),
        )
        for test_id, vt, gt, s_t in sides:
            vtc, gtc = vt.conj().T, gt.conj().T
            for trial_id, vr, gr, s_r in sides:
                wvr = w[:, None] * vr
                wgr = w[:, None] * gr
                mat = gtc @ (0.5 * s_t * wvr - (beta / ik) * s_r * s_t * wgr)
                mat += vtc @ (-0.5 * s_t * wgr + alpha * ik * s_r * s_t * wvr)
                add(test_id, trial_id, mat)

    for eid in mesh.element_ids():
        if (eid, eid) not in blocks:
            raise AssemblyError(f"element {eid} has no facet contributions")
    return GlobalSystem(blocks=blocks, rhs=rhs, dof_map=dof_map, dim=dim)


def residual(system, coeffs):
    """Normalized residual ||A x - b||_2 / max(||b||_2, 1)."""
    vec = system.to_sparse() @ coeffs - system.rhs
    return float(np.linalg.norm(vec) / max(np.linalg.norm(system.rhs), 1.0))
