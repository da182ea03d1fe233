"""Generate the bundled 3D direction sets src/tdg/data/sphere_points_p*.txt.

For each degree q the solver needs p = (q+1)^2 unit vectors whose
spherical-harmonic Vandermonde matrix is well conditioned.  This script
computes approximate maximum-determinant point sets by maximizing
log|det V| over point positions with L-BFGS-B from several seeded
Fibonacci-lattice starts, then writes the best set with the north-pole
point first.  Rerunning reproduces the files bit for bit.

Usage: python scripts/generate_direction_sets.py [outdir]
"""

import sys
from math import pi
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln, lpmv

SEED = 20240811
DEGREES = range(1, 9)
RESTARTS = 6


def real_sph_basis(degree, theta, phi):
    """Orthonormal real spherical harmonics up to `degree`, shape (npts, (q+1)^2)."""
    x = np.cos(theta)
    cols = []
    for l in range(degree + 1):
        for m in range(-l, l + 1):
            am = abs(m)
            norm = np.sqrt(
                (2 * l + 1)
                / (4 * pi)
                * np.exp(gammaln(l - am + 1) - gammaln(l + am + 1))
            )
            leg = lpmv(am, l, x)
            if m == 0:
                cols.append(norm * leg)
            elif m > 0:
                cols.append(np.sqrt(2.0) * norm * leg * np.cos(am * phi))
            else:
                cols.append(np.sqrt(2.0) * norm * leg * np.sin(am * phi))
    return np.stack(cols, axis=1)


def neg_logdet(angles, degree, npts):
    theta = angles[:npts]
    phi = angles[npts:]
    mat = real_sph_basis(degree, theta, phi)
    sign, logdet = np.linalg.slogdet(mat)
    if sign == 0:
        return 1e6
    return -logdet


def fibonacci_angles(npts, rng):
    i = np.arange(npts)
    z = 1.0 - (2.0 * i + 1.0) / npts
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    golden = pi * (3.0 - np.sqrt(5.0))
    phi = golden * i
    theta = theta + 0.02 * rng.standard_normal(npts)
    phi = phi + 0.02 * rng.standard_normal(npts)
    return np.concatenate([theta, phi])


def to_xyz(angles, npts):
    theta = angles[:npts]
    phi = angles[npts:]
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)


def rotation_to_pole(v):
    """Orthogonal matrix sending unit vector v to (0, 0, 1)."""
    s = np.hypot(v[0], v[1])
    if s < 1e-15:
        return np.diag([1.0, 1.0, np.sign(v[2]) or 1.0])
    frame = np.array(
        [
            [v[0] * v[2] / s, v[1] / s, v[0]],
            [v[1] * v[2] / s, -v[0] / s, v[1]],
            [-s, 0.0, v[2]],
        ]
    )
    return frame.T


def optimize_points(degree):
    npts = (degree + 1) ** 2
    rng = np.random.default_rng(SEED + degree)
    best_val = np.inf
    best = None
    for _ in range(RESTARTS):
        x0 = fibonacci_angles(npts, rng)
        res = minimize(
            neg_logdet,
            x0,
            args=(degree, npts),
            method="L-BFGS-B",
            jac="2-point",
            options={"maxiter": 800, "ftol": 1e-14, "gtol": 1e-10},
        )
        if res.fun < best_val:
            best_val = res.fun
            best = res.x
    pts = to_xyz(best, npts)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)

    # Canonical layout: the northernmost point is rotated onto the pole and
    # listed first; the rest are ordered pole-down, then by azimuth.
    top = int(np.argmax(pts[:, 2]))
    rot = rotation_to_pole(pts[top])
    pts = pts @ rot.T
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    order = np.lexsort((np.arctan2(pts[:, 1], pts[:, 0]), -pts[:, 2]))
    pts = pts[order]

    mat = real_sph_basis(
        degree, np.arccos(np.clip(pts[:, 2], -1, 1)), np.arctan2(pts[:, 1], pts[:, 0])
    )
    _, logdet = np.linalg.slogdet(mat)
    dots = np.clip(pts @ pts.T - 2 * np.eye(npts), -1.0, 1.0)
    min_angle = np.degrees(np.arccos(np.max(dots)))
    print(
        f"q={degree} p={npts:3d}  log|det|={logdet:10.4f}  "
        f"min pairwise angle={min_angle:6.2f} deg"
    )
    return pts


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("src/tdg/data")
    outdir.mkdir(parents=True, exist_ok=True)
    for degree in DEGREES:
        pts = optimize_points(degree)
        npts = len(pts)
        path = outdir / f"sphere_points_p{npts}.txt"
        with open(path, "w") as fh:
            fh.write(f"# {npts} unit vectors, log-det optimized, seed {SEED}\n")
            for x, y, z in pts:
                fh.write(f"{x: .17e} {y: .17e} {z: .17e}\n")
        print(f"  wrote {path}")


if __name__ == "__main__":
    main()
