"""A posteriori error indicators and effectivity indices.

The elementwise indicator combines weighted facet residuals of the discrete
solution: the solution jump and normal-derivative jump across interior
facets, the impedance-condition residual on Robin boundary facets, and the
trace mismatch on Dirichlet facets.  Interior facets contribute to both
adjacent elements, each with its own diameter/degree weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import PenaltyParams
from .mesh import DIRICHLET, ROBIN
from .quadrature import facet_rule
from .problems import l2_errors


@dataclass
class IndicatorRecord:
    """Indicator value and its component breakdown for one element."""

    element: int
    eta: float
    jump_u: float
    jump_gradu: float
    robin: float
    dirichlet: float
    eta_pred: float = math.inf

    @property
    def components(self):
        return (self.jump_u, self.jump_gradu, self.robin, self.dirichlet)


def _facet_square_integrals(facet, mesh, solution, problem):
    """Raw squared facet integrals, before elementwise weighting.

    Returns ``(targets, jump_u_sq, jump_gradu_sq, robin_sq, dirichlet_sq)``
    where ``targets`` lists the element ids the facet contributes to.
    """
    el_a = mesh.elements[facet.side_a]
    normal = facet.normal
    if facet.is_boundary:
        rule = facet_rule(facet, el_a.k, el_a.degree)
        values, grads = solution.value_and_gradient(el_a, rule.points)
        gn = grads @ normal
        tag = facet.side_b
        data = problem.boundary_data(tag, rule.points, normal)
        if tag == ROBIN:
            residual = data - (gn + 1j * el_a.k * problem.impedance_sign * values)
            robin_sq = float(rule.weights @ np.abs(residual) ** 2)
            return [facet.side_a], 0.0, 0.0, robin_sq, 0.0
        if tag == DIRICHLET:
            residual = data - values
            diri_sq = float(rule.weights @ np.abs(residual) ** 2)
            return [facet.side_a], 0.0, 0.0, 0.0, diri_sq
        raise ValueError(f"unknown boundary tag {tag!r}")
    el_b = mesh.elements[facet.side_b]
    rule = facet_rule(facet, max(el_a.k, el_b.k), max(el_a.degree, el_b.degree))
    val_a, grad_a = solution.value_and_gradient(el_a, rule.points)
    val_b, grad_b = solution.value_and_gradient(el_b, rule.points)
    jump_u_sq = float(rule.weights @ np.abs(val_a - val_b) ** 2)
    jump_gn_sq = float(rule.weights @ np.abs((grad_a - grad_b) @ normal) ** 2)
    return [facet.side_a, facet.side_b], jump_u_sq, jump_gn_sq, 0.0, 0.0


def _records_from_sums(mesh, element_ids, raw_sums, params, predictions):
    records = []
    predictions = predictions or {}
    for eid in sorted(element_ids):
        el = mesh.elements[eid]
        ju_sq, jg_sq, ro_sq, di_sq = raw_sums[eid]
        h = el.h
        q = el.degree
        ju2 = params.alpha * (h / q) * ju_sq
        jg2 = params.beta * (h ** 3 / q ** 3) * jg_sq
        ro2 = params.delta * (h ** 3 / q ** 3) * ro_sq
        di2 = params.alpha * (h / q) * di_sq
        eta = math.sqrt(ju2 + jg2 + ro2 + di2)
        records.append(IndicatorRecord(
            element=eid,
            eta=eta,
            jump_u=math.sqrt(ju2),
            jump_gradu=math.sqrt(jg2),
            robin=math.sqrt(ro2),
            dirichlet=math.sqrt(di2),
            eta_pred=predictions.get(eid, math.inf),
        ))
    return records


def indicators(mesh, solution, problem, params=PenaltyParams(), predictions=None):
    """Indicator records for every element, ordered by element id."""
    raw_sums = {eid: [0.0, 0.0, 0.0, 0.0] for eid in mesh.elements}
    for facet in mesh.facets():
        targets, ju, jg, ro, di = _facet_square_integrals(facet, mesh, solution, problem)
        for eid in targets:
            sums = raw_sums[eid]
            sums[0] += ju
            sums[1] += jg
            sums[2] += ro
            sums[3] += di
    return _records_from_sums(mesh, mesh.elements.keys(), raw_sums, params, predictions)


def element_indicator(element, solution, problem, params=PenaltyParams()):
    """Indicator record for a single element of ``solution.mesh``."""
    mesh = solution.mesh
    raw_sums = {element.id: [0.0, 0.0, 0.0, 0.0]}
    for facet in mesh.facets_by_element()[element.id]:
        targets, ju, jg, ro, di = _facet_square_integrals(facet, mesh, solution, problem)
        if element.id in targets:
            sums = raw_sums[element.id]
            sums[0] += ju
            sums[1] += jg
            sums[2] += ro
            sums[3] += di
    return _records_from_sums(mesh, [element.id], raw_sums, params, None)[0]


def global_estimate(records, literal_square=False):
    """Combine element indicators into the global estimate.

    The default is the Euclidean combination ``(sum eta^2)^(1/2)``;
    ``literal_square`` instead returns ``(sum eta^2)^2``.
    """
    total = sum(r.eta ** 2 for r in records)
    if literal_square:
        return total ** 2
    return math.sqrt(total)


def effectivities(records, solution, problem, literal_square=False, abs_error=None):
    """(E_total, E_jump_u, E_jump_gradu, E_robin) against the exact L2 error.

    Each component effectivity is the Euclidean sum of that component over
    all elements divided by the absolute L2 error; a numerically exact
    solution yields infinite effectivities rather than a division error.
    ``abs_error`` short-circuits the error quadrature when already known.
    """
    abs_err = abs_error if abs_error is not None else l2_errors(solution, problem)[0]
    total = global_estimate(records, literal_square=literal_square)
    comp_u = math.sqrt(sum(r.jump_u ** 2 for r in records))
    comp_g = math.sqrt(sum(r.jump_gradu ** 2 for r in records))
    comp_r = math.sqrt(sum(r.robin ** 2 for r in records))
    if abs_err == 0.0:
        return math.inf, math.inf, math.inf, math.inf
    return total / abs_err, comp_u / abs_err, comp_g / abs_err, comp_r / abs_err
