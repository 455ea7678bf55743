"""Fundamental solutions and conormal kernels for Laplace and plane elasticity.

Sign conventions.  The double layer kernels are normalized so that for a
point x strictly inside the domain of a closed boundary with outward
normals the Gauss integral equals +1 (or the identity matrix), and the
second-kind system reads (1/2 I + K) psi = u.  With that choice the
interior representation u(x) = sum_j dlp(x, y_j) psi_j w_j reproduces
Dirichlet data directly.

Elasticity uses the plane-strain Kelvin solution; a plane-stress variant
is obtained by the usual substitution nu -> nu / (1 + nu).

All kernels are finite for r >= R_MIN = 1e-14 and raise
`SingularEvaluationError` below that; callers integrating up to the
singular point must regularize first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularEvaluationError

__all__ = [
    "R_MIN",
    "Material",
    "material_constants",
    "laplace_slp",
    "laplace_dlp",
    "kelvin_slp_2d",
    "kelvin_dlp_2d",
    "KernelSet",
    "kernel_set",
]

R_MIN = 1e-14


def material_constants(youngs_modulus: float, poisson_ratio: float) -> tuple[float, float]:
    """Lame constants (lambda, mu) from Young's modulus and Poisson ratio."""
    e, nu = youngs_modulus, poisson_ratio
    if e <= 0.0:
        raise ValueError("Young's modulus must be positive")
    if not (-1.0 < nu < 0.5):
        raise ValueError(
            f"Poisson ratio must lie in (-1, 0.5); nu={nu} is incompressible or invalid"
        )
    lam = e * nu / ((1.0 - 2.0 * nu) * (1.0 + nu))
    mu = e / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class Material:
    """Material data for the kernels.

    ``conductivity`` feeds the Laplace kernels; the elastic constants are
    derived from ``youngs_modulus`` and ``poisson_ratio``.  With
    ``plane_stress=True`` the elastic kernels substitute nu/(1+nu).
    """

    youngs_modulus: float = 1.0
    poisson_ratio: float = 0.3
    conductivity: float = 1.0
    plane_stress: bool = False

    def __post_init__(self):
        material_constants(self.youngs_modulus, self.poisson_ratio)
        if self.conductivity <= 0.0:
            raise ValueError("conductivity must be positive")

    @property
    def lame(self) -> tuple[float, float]:
        return material_constants(self.youngs_modulus, self.poisson_ratio)

    @property
    def mu(self) -> float:
        return self.lame[1]

    @property
    def effective_poisson(self) -> float:
        nu = self.poisson_ratio
        return nu / (1.0 + nu) if self.plane_stress else nu


def _distances(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    single = y.ndim == 1
    y2 = y[None, :] if single else y
    d = y2 - x[None, :]
    r = np.sqrt((d**2).sum(axis=1))
    if np.any(r < R_MIN):
        raise SingularEvaluationError(f"kernel evaluated at r < {R_MIN}")
    return d, r, single


def laplace_slp(x, y, dim: int | None = None, conductivity: float = 1.0):
    """Laplace single layer kernel: -ln(r)/(2 pi k) in 2d, 1/(4 pi k r) in 3d.

    ``y`` may be one point or an (n, d) array of points.
    """
    d, r, single = _distances(x, y)
    dim = d.shape[1] if dim is None else dim
    if dim == 2:
        vals = -np.log(r) / (2.0 * np.pi * conductivity)
    else:
        vals = 1.0 / (4.0 * np.pi * conductivity * r)
    return float(vals[0]) if single else vals


def laplace_dlp(x, y, normal_y, dim: int | None = None, conductivity: float = 1.0):
    """Laplace double layer kernel ((y - x) . n_y) / (2 pi r^2), 3d: /(4 pi r^3).

    Sign: the Gauss integral over a closed boundary around interior x is +1.
    The value does not depend on the conductivity.
    """
    del conductivity  # the conormal scaling cancels against the kernel
    d, r, single = _distances(x, y)
    n = np.asarray(normal_y, float)
    if n.ndim == 1:
        n = n[None, :]
    rdotn = (d * n).sum(axis=1)
    dim = d.shape[1] if dim is None else dim
    if dim == 2:
        vals = rdotn / (2.0 * np.pi * r**2)
    else:
        vals = rdotn / (4.0 * np.pi * r**3)
    return float(vals[0]) if single else vals


def kelvin_slp_2d(x, y, material: Material):
    """Plane-strain Kelvin displacement kernel, a 2x2 tensor per point pair.

    U_ab = [ (3 - 4 nu) ln(1/r) d_ab + r_,a r_,b ] / (8 pi mu (1 - nu)).
    """
    d, r, single = _distances(x, y)
    nu = material.effective_poisson
    mu = material.mu
    rd = d / r[:, None]
    c = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
    out = c * (
        -(3.0 - 4.0 * nu) * np.log(r)[:, None, None] * np.eye(2)[None, :, :]
        + rd[:, :, None] * rd[:, None, :]
    )
    return out[0] if single else out


def kelvin_dlp_2d(x, y, normal_y, material: Material):
    """Plane-strain traction kernel (CPV type), 2x2 per point pair.

    Row index = collocation component, column index = density component:

    T_ab = [ dr/dn ((1-2nu) d_ab + 2 r_,a r_,b)
             - (1-2nu) (n_b r_,a - n_a r_,b) ] / (4 pi (1-nu) r)

    with r_, = (y - x)/r and n the outward normal at y.  The sign makes
    the interior Gauss integral equal the identity.
    """
    d, r, single = _distances(x, y)
    n = np.asarray(normal_y, float)
    if n.ndim == 1:
        n = n[None, :]
    nu = material.effective_poisson
    rd = d / r[:, None]
    drdn = (rd * n).sum(axis=1)
    c = 1.0 / (4.0 * np.pi * (1.0 - nu))
    sym = drdn[:, None, None] * (
        (1.0 - 2.0 * nu) * np.eye(2)[None, :, :] + 2.0 * rd[:, :, None] * rd[:, None, :]
    )
    skew = (1.0 - 2.0 * nu) * (
        n[:, None, :] * rd[:, :, None] - n[:, :, None] * rd[:, None, :]
    )
    out = c * (sym - skew) / r[:, None, None]
    return out[0] if single else out


# ---------------------------------------------------------------------------
# problem descriptors used by assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSet:
    """Single and double layer kernels of one problem, with metadata.

    ``slp(x, ys)`` and ``dlp(x, ys, normals)`` are vectorized over rows of
    ``ys``; scalar problems return (n,), elastic ones (n, 2, 2).
    ``slp_singularity`` names the self-element regularization route:
    ``"log"`` (2d weakly singular), ``"duffy"`` (3d 1/r).
    ``dlp_singularity`` is ``"rigid_body"`` in 2d (covers both the weakly
    singular Laplace and the CPV elastic case) and ``"duffy"`` in 3d.
    """

    name: str
    dim: int
    ncomp: int
    material: Material

    @property
    def slp_singularity(self) -> str:
        return "log" if self.dim == 2 else "duffy"

    @property
    def dlp_singularity(self) -> str:
        return "rigid_body" if self.dim == 2 else "duffy"

    def slp(self, x, ys):
        if self.name == "lame2d":
            return kelvin_slp_2d(x, ys, self.material)
        return laplace_slp(x, ys, self.dim, self.material.conductivity)

    def dlp(self, x, ys, normals):
        if self.name == "lame2d":
            return kelvin_dlp_2d(x, ys, normals, self.material)
        return laplace_dlp(x, ys, normals, self.dim, self.material.conductivity)

    def slp_log_split(self, x, ys, ts):
        """2d single layer split U = smooth + pure_log * ln(t).

        ``ts`` are the exact parametric offsets to the singular point.
        Returns ``(smooth, log_coefficient)`` where the full kernel equals
        ``smooth + log_coefficient * ln(ts)`` and both factors stay
        accurate for tiny ``ts`` (the ratio r/t is evaluated instead of r
        alone, all cancellation lives in the smooth bounded part).
        """
        x = np.asarray(x, float)
        ys = np.asarray(ys, float)
        d = ys - x[None, :]
        r = np.sqrt((d**2).sum(axis=1))
        ratio = r / ts
        if self.name == "laplace2d":
            k = self.material.conductivity
            smooth = -np.log(ratio) / (2.0 * np.pi * k)
            logc = np.full(r.shape, -1.0 / (2.0 * np.pi * k))
            return smooth, logc
        # Kelvin: (3-4nu) ln(1/r) delta + r_,a r_,b, scaled
        nu = self.material.effective_poisson
        mu = self.material.mu
        c = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
        rd = d / r[:, None]
        smooth = c * (
            -(3.0 - 4.0 * nu) * np.log(ratio)[:, None, None] * np.eye(2)[None, :, :]
            + rd[:, :, None] * rd[:, None, :]
        )
        logc = np.broadcast_to(
            -c * (3.0 - 4.0 * nu) * np.eye(2)[None, :, :], smooth.shape
        ).copy()
        return smooth, logc


def kernel_set(problem: str, material: Material | None = None) -> KernelSet:
    """Kernel descriptor for ``laplace2d``, ``lame2d`` or ``laplace3d``."""
    material = material or Material()
    table = {
        "laplace2d": (2, 1),
        "lame2d": (2, 2),
        "laplace3d": (3, 1),
    }
    if problem not in table:
        raise ValueError(f"unknown problem {problem!r}")
    dim, ncomp = table[problem]
    return KernelSet(name=problem, dim=dim, ncomp=ncomp, material=material)
