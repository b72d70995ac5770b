"""Manufactured problems for ``div(u (x) beta) + sigma u + grad p = f``.

All evaluators take coordinate arrays ``x, y`` of a common shape and
return arrays of that shape (scalars) or that shape plus a trailing
axis of length 2 (vectors).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class ProblemSpec:
    beta: Callable
    sigma: Callable
    sigma0: float
    f: Callable
    exact_u: Optional[Callable] = None
    exact_p: Optional[Callable] = None
    label: str = ""
    vortex_index: Optional[int] = None
    periodic_x: bool = False

    @property
    def has_exact(self):
        return self.exact_u is not None and self.exact_p is not None


def square_mean(fn, npts):
    """Tensor Gauss-Legendre mean of ``fn`` over the unit square."""
    t, w = np.polynomial.legendre.leggauss(npts)
    t, w = (t + 1) / 2, w / 2
    X, Y = np.meshgrid(t, t, indexing="ij")
    return float(w @ fn(X, Y) @ w)


def constant(value):
    return lambda x, y: np.full(np.shape(x), float(value))


def vortex_problem(n=1, sigma=100.0):
    """Stationary vortex with streamfunction ``sin(n pi x) sin(n pi y)``.

    ``beta = (d_y phi, -d_x phi)`` is an exact stationary Euler flow with
    pressure ``n^2 pi^2 (cos^2(n pi x) - sin^2(n pi y)) / 2``; taking
    ``f = sigma beta`` gives ``u = beta``.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"vortex index must be a positive integer, got {n!r}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    n = int(n)
    sigma = float(sigma)
    k = n * np.pi

    def beta(x, y):
        return np.stack([k * np.sin(k * x) * np.cos(k * y),
                         -k * np.cos(k * x) * np.sin(k * y)], axis=-1)

    def pressure_raw(x, y):
        return k**2 * (np.cos(k * x) ** 2 - np.sin(k * y) ** 2) / 2

    # the raw pressure already averages to zero; shift defensively anyway
    mean = square_mean(pressure_raw, 8 * n + 8)
    shift = mean if abs(mean) > 1e-15 else 0.0

    def pressure(x, y):
        return pressure_raw(x, y) - shift

    return ProblemSpec(
        beta=beta,
        sigma=constant(sigma),
        sigma0=sigma,
        f=lambda x, y: sigma * beta(x, y),
        exact_u=beta,
        exact_p=pressure,
        label=f"vortex(n={n}, sigma={sigma:g})",
        vortex_index=n,
    )


def shear_problem(profile, sigma=1.0, label="shear"):
    """x-independent shear flow ``beta = (profile(y), 0)`` with zero pressure.

    ``beta.n`` vanishes on ``y = 0, 1`` but not on ``x = 0, 1``; solve it on
    a mesh that is periodic in ``x``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    sigma = float(sigma)

    def beta(x, y):
        yy = np.broadcast_to(np.asarray(y, dtype=float), np.broadcast(x, y).shape)
        return np.stack([np.broadcast_to(profile(yy), yy.shape).astype(float),
                         np.zeros(yy.shape)], axis=-1)

    return ProblemSpec(
        beta=beta,
        sigma=constant(sigma),
        sigma0=sigma,
        f=lambda x, y: sigma * beta(x, y),
        exact_u=beta,
        exact_p=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        label=label,
        periodic_x=True,
    )


SHEAR_PROFILES = {
    "const": lambda y: np.ones_like(y),
    "linear": lambda y: y,
    "sin": lambda y: np.sin(np.pi * y),
}


def zero_flow_problem(sigma=1.0, forcing=None):
    """``beta = 0``: a constrained L2 projection of ``f / sigma``."""
    if forcing is None:
        def forcing(x, y):
            return np.stack([np.sin(np.pi * y) * np.cos(2 * x), x * y], axis=-1)
    return ProblemSpec(
        beta=lambda x, y: np.zeros(np.shape(x) + (2,)),
        sigma=constant(sigma),
        sigma0=float(sigma),
        f=forcing,
        label="zero-flow",
    )


def make_problem(name, n=1, sigma=None, profile="sin"):
    """Build a problem from a name and parameters (``vortex`` or ``shear``)."""
    if name == "vortex":
        return vortex_problem(n, 100.0 if sigma is None else sigma)
    if name == "shear":
        if profile not in SHEAR_PROFILES:
            raise ValueError(f"unknown shear profile {profile!r}; choose from {sorted(SHEAR_PROFILES)}")
        return shear_problem(SHEAR_PROFILES[profile], 1.0 if sigma is None else sigma,
                             label=f"shear({profile})")
    raise ValueError(f"unknown problem {name!r}")
