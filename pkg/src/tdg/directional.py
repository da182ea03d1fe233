"""Directional adaptivity: steer each element's plane-wave fan.

The dominant local propagation direction is estimated from the Hessian of
the discrete solution at the element centroid: the principal eigenvector of
the Hessian of an oscillatory field points along the direction of most rapid
variation.  Real and imaginary parts are analysed separately and combined
only when neither clearly dominates; the resulting axis is then given a
forward/backward orientation by probing the local impedance trace.
"""

from __future__ import annotations

import math

import numpy as np

from .basis import frame_from_direction

GAP_FACTOR = 2.0
SIGN_EPS = 1e-12
SUM_EPS = 1e-8
_JACOBI_SWEEPS = 50


def _fix_sign(vector):
    """Flip so the first component larger than SIGN_EPS in magnitude is positive."""
    for c in vector:
        if abs(c) > SIGN_EPS:
            if c < 0.0:
                return -vector
            return vector
    return vector


def _eig2(matrix):
    a = matrix[0, 0]
    b = 0.5 * (matrix[0, 1] + matrix[1, 0])
    c = matrix[1, 1]
    mean = 0.5 * (a + c)
    half_gap = 0.5 * (a - c)
    radius = math.hypot(half_gap, b)
    values = np.array([mean + radius, mean - radius])
    if radius <= SIGN_EPS * max(1.0, abs(mean)):
        vectors = np.eye(2)
    else:
        # Eigenvector from the better-conditioned of the two defining rows.
        if abs(half_gap + radius) >= abs(half_gap - radius):
            v1 = np.array([half_gap + radius, b])
        else:
            v1 = np.array([b, -(half_gap - radius)])
        v1 /= np.linalg.norm(v1)
        vectors = np.column_stack([v1, [-v1[1], v1[0]]])
    return values, vectors


def _eig3(matrix):
    a = 0.5 * (matrix + matrix.T)
    v = np.eye(3)
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return np.zeros(3), v
    for _ in range(_JACOBI_SWEEPS):
        off = math.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if off <= 1e-15 * scale:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if abs(apq) <= 1e-18 * scale:
                continue
            # Classical Jacobi rotation annihilating a[p, q].
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
            cos = 1.0 / math.sqrt(1.0 + t * t)
            sin = t * cos
            rot = np.eye(3)
            rot[p, p] = cos
            rot[q, q] = cos
            rot[p, q] = sin
            rot[q, p] = -sin
            a = rot.T @ a @ rot
            v = v @ rot
    return np.diag(a).copy(), v


def symmetric_eigenpairs(matrix):
    """Eigenpairs of a real symmetric 2x2 or 3x3 matrix, |value| descending.

    Returns ``(values, vectors)`` with unit-norm eigenvector columns.  Each
    vector's sign is normalised so its first non-negligible component is
    positive, and ties in magnitude keep their algebraic order, which makes
    the output reproducible across runs.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape == (2, 2):
        values, vectors = _eig2(matrix)
    elif matrix.shape == (3, 3):
        values, vectors = _eig3(matrix)
    else:
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {matrix.shape}")
    order = np.argsort(-np.abs(values), kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        vectors[:, j] = _fix_sign(vectors[:, j])
    return values, vectors


def hessian_eigenpairs(solution, element):
    """Eigen-decompose the centroid Hessians of Re u and Im u on ``element``."""
    h_re, h_im = solution.hessians_at_centroid(element)
    lam, vecs_re = symmetric_eigenpairs(h_re)
    mu, vecs_im = symmetric_eigenpairs(h_im)
    return lam, vecs_re, mu, vecs_im


def potential_direction(lam, vecs_re, mu, vecs_im, gap=GAP_FACTOR):
    """Select a candidate dominant direction, or None when no gap stands out.

    ``lam``/``mu`` are eigenvalues of the real/imaginary Hessians sorted by
    descending magnitude with matching eigenvector columns.  A direction is
    only proposed when the leading eigenvalue dominates the second by the
    factor ``gap``; when both parts qualify but neither leads the other, the
    two principal axes are averaged.
    """
    l1, l2 = abs(lam[0]), abs(lam[1])
    m1, m2 = abs(mu[0]), abs(mu[1])
    v1 = vecs_re[:, 0]
    w1 = vecs_im[:, 0]
    if l1 >= gap * l2:
        if m1 >= gap * m2:
            if l1 >= gap * m1:
                return v1
            if m1 >= gap * l1:
                return w1
            combined = v1 + w1
            norm = np.linalg.norm(combined)
            if norm < SUM_EPS:
                return None
            return combined / norm
        if l1 >= gap * m1:
            return v1
        return None
    if m1 >= gap * m2:
        if m1 >= gap * l1:
            return w1
        return None
    return None


def orient_direction(solution, element, axis, ball_radius=0.0):
    """Give the undirected axis a forward orientation.

    For a local wave ``A exp(i k d . (x - x_K))`` the amplitude-normalised
    impedance trace ``(grad u . axis + i k u) / (i k u)`` equals exactly 2
    when ``axis`` points along the travel direction ``d`` and exactly 0 when
    it points against it, independent of the complex amplitude ``A`` and the
    probe offset; the midpoint 1 separates the two cases.  (Without the
    normalisation the forward value is ``2 Re A``, so any field with local
    amplitude below one half would always be flipped.)
    """
    k = element.k
    probe = element.centroid + ball_radius * axis
    value, gradient = solution.value_and_gradient(element, probe[np.newaxis, :])
    denom = 1j * k * value[0]
    if denom == 0.0:
        return axis
    trace = (gradient[0] @ axis + 1j * k * value[0]) / denom
    if trace.real < 1.0:
        return -axis
    return axis


def element_direction(solution, element, gap=GAP_FACTOR, ball_radius=0.0):
    """Dominant oriented propagation direction for one element, or None."""
    lam, vecs_re, mu, vecs_im = hessian_eigenpairs(solution, element)
    axis = potential_direction(lam, vecs_re, mu, vecs_im, gap=gap)
    if axis is None:
        return None
    return orient_direction(solution, element, axis, ball_radius=ball_radius)


POLICIES = ("none", "marked-p", "marked-all", "all")


def _normalise_policy(policy):
    name = str(policy).strip().lower().replace("_", "-")
    if name in ("marked-p-only", "marked-p"):
        return "marked-p"
    if name in ("marked-all", "marked"):
        return "marked-all"
    if name in ("all", "all-elements"):
        return "all"
    if name == "none":
        return "none"
    raise ValueError(f"unknown directional policy {policy!r}; expected one of {POLICIES}")


def apply_directional_adaptivity(mesh, solution, policy, h_marked=(), p_marked=(),
                                 gap=GAP_FACTOR, ball_radius=0.0):
    """Re-orient the plane-wave fans of selected elements in place.

    ``policy`` chooses the target set: ``none``, ``marked-p`` (elements about
    to be p-refined), ``marked-all`` (everything marked for refinement, with
    any h-subdivision happening afterwards so children inherit the new frame),
    or ``all``.  Elements without a clear dominant direction keep their frame.
    Returns the mapping of element id to new frame for the elements updated.
    """
    name = _normalise_policy(policy)
    if name == "none":
        selected = []
    elif name == "marked-p":
        selected = sorted(set(p_marked))
    elif name == "marked-all":
        selected = sorted(set(h_marked) | set(p_marked))
    else:
        selected = sorted(mesh.elements)
    updated = {}
    for eid in selected:
        element = mesh.elements[eid]
        direction = element_direction(solution, element, gap=gap, ball_radius=ball_radius)
        if direction is None:
            continue
        frame = frame_from_direction(direction)
        element.frame = frame
        updated[eid] = frame
    return updated
