"""Plane-wave bases: direction sets, per-element frames, evaluation.

Each element carries p plane waves exp(i k d_l . (x - x_K)) centered at
its centroid.  In 2D the p = 2q+1 directions are evenly spaced angles
rotated rigidly by the element frame angle; in 3D the p = (q+1)^2
directions come from bundled near-maximum-determinant sphere point sets
(first point at the north pole) mapped by the frame's orthogonal
matrix.  A Fibonacci-lattice fallback for missing 3D degrees can be
enabled explicitly and warns on use.
"""

import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from math import atan2, pi

import numpy as np


class UnsupportedDegreeError(Exception):
    """No direction set available for the requested basis size."""


@dataclass(frozen=True)
class DirectionFrame:
    """Rigid rotation applied to an element's canonical direction set.

    2D: rotation by `theta` (radians, in [0, 2pi)).  3D: orthogonal
    `matrix` whose third column is the frame's first direction; None
    means identity.
    """

    dim: int
    theta: float = 0.0
    matrix: np.ndarray | None = None


def canonical_frame(dim):
    return DirectionFrame(dim=dim)


_fallback_enabled = False


def set_direction_fallback(enabled):
    """Allow Fibonacci-lattice 3D directions for degrees without data files."""
    global _fallback_enabled
    _fallback_enabled = bool(enabled)


def _rotate_first_to_pole(points):
    v = points[0] / np.linalg.norm(points[0])
    s = np.hypot(v[0], v[1])
    if s >= 1e-15:
        frame = np.array(
            [
                [v[0] * v[2] / s, v[1] / s, v[0]],
                [v[1] * v[2] / s, -v[0] / s, v[1]],
                [-s, 0.0, v[2]],
            ]
        )
        points = points @ frame  # frame.T applied from the left
    points[0] = (0.0, 0.0, 1.0)
    return points


@lru_cache(maxsize=None)
def _load_sphere_points(p):
    name = f"sphere_points_p{p}.txt"
    try:
        text = resources.files("tdg.data").joinpath(name).read_text()
    except FileNotFoundError:
        return None
    rows = [
        [float(tok) for tok in line.split()]
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    pts = np.array(rows)
    if pts.shape != (p, 3):
        raise UnsupportedDegreeError(f"direction file {name} has shape {pts.shape}")
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return _rotate_first_to_pole(pts)


@lru_cache(maxsize=None)
def _fibonacci_sphere(p):
    i = np.arange(p)
    z = 1.0 - (2.0 * i + 1.0) / p
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = pi * (3.0 - np.sqrt(5.0))
    phi = golden * i
    pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    return _rotate_first_to_pole(pts)


@lru_cache(maxsize=None)
def canonical_directions(p, dim):
    """Canonical unit directions, shape (p, dim); first is (1,0)/(0,0,1)."""
    if dim == 2:
        angles = 2.0 * pi * np.arange(p) / p
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if dim == 3:
        pts = _load_sphere_points(p)
        if pts is not None:
            return pts
        if _fallback_enabled:
            warnings.warn(
                f"no bundled direction set for p={p}; using a Fibonacci "
                "lattice, which degrades the basis quality",
                stacklevel=2,
            )
            return _fibonacci_sphere(p)
        raise UnsupportedDegreeError(
            f"no bundled 3D direction set for p={p} and the fallback is disabled"
        )
    raise UnsupportedDegreeError(f"unsupported dimension {dim}")


def rotated_directions(p, frame):
    """Canonical directions mapped by the frame rotation."""
    base = canonical_directions(p, frame.dim)
    if frame.dim == 2:
        if frame.theta == 0.0:
            return base
        c, s = np.cos(frame.theta), np.sin(frame.theta)
        rot = np.array([[c, -s], [s, c]])
        return base @ rot.T
    if frame.matrix is None:
        return base
    return base @ frame.matrix.T


def frame_from_direction(direction):
    """Frame whose first direction is the given unit vector."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if d.shape[0] == 2:
        theta = atan2(d[1], d[0]) % (2.0 * pi)
        return DirectionFrame(dim=2, theta=theta)
    return DirectionFrame(dim=3, matrix=rotation_matrix_3d(d))


def rotation_matrix_3d(direction):
    """Orthogonal matrix sending (0,0,1) to `direction`.

    Identity when d_x = d_y = 0; otherwise det = -1, which is fine
    since only the mapped direction set matters.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    s = np.hypot(d[0], d[1])
    if s == 0.0:
        return np.eye(3)
    return np.array(
        [
            [d[0] * d[2] / s, d[1] / s, d[0]],
            [d[1] * d[2] / s, -d[0] / s, d[1]],
            [-s, 0.0, d[2]],
        ]
    )


def element_directions(element):
    """Direction set actually used by an element, shape (p, dim)."""
    if element.directions_override is not None:
        return element.directions_override
    return rotated_directions(element.n_waves, element.frame)


def eval_basis(element, points, order=0):
    """Evaluate the element's plane waves at physical points.

    Returns values (m, p) for order 0; adds gradients (m, p, dim) for
    order 1 and Hessians (m, p, dim, dim) for order 2.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dirs = element_directions(element)
    ikd = 1j * element.k * dirs
    phase = (pts - element.centroid) @ (1j * element.k * dirs).T
    values = np.exp(phase)
    if order == 0:
        return values
    grads = values[:, :, None] * ikd[None, :, :]
    if order == 1:
        return values, grads
    outer = ikd[:, :, None] * ikd[:, None, :]
    hessians = values[:, :, None, None] * outer[None, :, :, :]
    if order == 2:
        return values, grads, hessians
    raise ValueError(f"order must be 0, 1 or 2, got {order}")
