"""Fixed-fraction marking and the h-versus-p refinement decision.

Each element carries a predicted indicator value from the refinement that
produced it.  A marked element whose current indicator still exceeds the
prediction failed to converge at the expected rate and is h-refined;
otherwise it is p-enriched.  Initial elements start with an infinite
prediction, so the first refinement of any element is a p-step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mesh import refine_elements

MODES = ("hp", "h_only")


@dataclass
class AdaptConfig:
    """Adaptivity controls with the reference parameter values as defaults."""

    mode: str = "hp"
    fraction: float = 0.25
    gamma_h: float = 4.0
    gamma_p: float = 0.4
    gamma_n: float = 1.0
    policy: str = "none"
    max_iters: int = 10

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in (0, 1], got {self.fraction}")


def mark_elements(records, fraction):
    """Ids of the ceil(fraction * N) elements with the largest indicators.

    Ties are broken by ascending element id so marking is deterministic.
    """
    count = math.ceil(fraction * len(records))
    ranked = sorted(records, key=lambda r: (-r.eta, r.element))
    return {r.element for r in ranked[:count]}


def plan_refinement(marks, records, config):
    """Split the marked ids into (h_set, p_set) by the prediction test."""
    by_id = {r.element: r for r in records}
    h_set = set()
    p_set = set()
    for eid in sorted(marks):
        record = by_id[eid]
        if record.eta > record.eta_pred:
            h_set.add(eid)
        else:
            p_set.add(eid)
    if config.mode == "h_only":
        h_set |= p_set
        p_set = set()
    return h_set, p_set


def decide_and_refine(mesh, marks, records, config, plan=None):
    """Apply one adaptation step and forecast the next indicators.

    Returns ``(new_mesh, predictions)`` where ``predictions`` maps every
    element id of the new mesh to its predicted indicator value.  Degree
    bumps happen before subdivision so elements p-enriched this step but
    split anyway by mesh closure pass the higher degree to their children;
    closure-split elements use the subdivision prediction formula with
    their own indicator.
    """
    by_id = {r.element: r for r in records}
    h_set, p_set = plan if plan is not None else plan_refinement(marks, records, config)
    work = mesh._copy()
    for eid in sorted(p_set):
        work.elements[eid].degree += 1
    new_mesh = refine_elements(work, h_set)
    n_children = 1 << mesh.dim
    predictions = {}
    for parent, children in new_mesh.last_refined.items():
        eta = by_id[parent].eta
        q_parent = work.elements[parent].degree
        pred_sq = (1.0 / n_children) * config.gamma_h * 0.5 ** (2 * q_parent) * eta ** 2
        for cid in children:
            predictions[cid] = math.sqrt(pred_sq)
    for eid in new_mesh.elements:
        if eid in predictions:
            continue
        if eid in p_set:
            predictions[eid] = math.sqrt(config.gamma_p) * by_id[eid].eta
        else:
            predictions[eid] = math.sqrt(config.gamma_n) * by_id[eid].eta_pred
    return new_mesh, predictions


def enforce_degree_compatibility(mesh):
    """Raise degrees until adjacent elements differ by at most one.

    Only ever raises the lower side, so p-refinement decisions are never
    undone; terminates because degrees are bounded by the current maximum.
    """
    changed = True
    while changed:
        changed = False
        for facet in mesh.facets():
            if facet.is_boundary:
                continue
            el_a = mesh.elements[facet.side_a]
            el_b = mesh.elements[facet.side_b]
            if el_a.degree - el_b.degree > 1:
                el_b.degree = el_a.degree - 1
                changed = True
            elif el_b.degree - el_a.degree > 1:
                el_a.degree = el_b.degree - 1
                changed = True
    return mesh
