"""Quadrature rules on the reference triangle and on the unit interval.

Triangle rules are the fully symmetric, positive-weight Xiao-Gimbutas
rules shipped by :mod:`modepy`; interval rules are Gauss-Legendre.
Weights are normalised to sum to one, so an integral over a physical
cell ``T`` is ``|T| * sum(w * f(x_q))``.

The reference triangle has vertices ``(0, 0), (1, 0), (0, 1)`` and the
barycentric coordinate ``lam[i]`` belongs to vertex ``i``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_TRIANGLE_DEGREE = 20
MAX_EDGE_DEGREE = 39


@dataclass(frozen=True)
class QuadRuleTri:
    """Symmetric rule on the reference triangle.

    Attributes
    ----------
    points : ndarray, shape (nq, 3)
        Barycentric coordinates of the nodes.
    weights : ndarray, shape (nq,)
        Positive weights summing to one.
    exact_degree : int
        Total polynomial degree integrated exactly.
    """

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def xy(self):
        """Cartesian nodes on the reference triangle, shape (nq, 2)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class QuadRule1D:
    """Gauss-Legendre rule on ``[0, 1]`` with weights summing to one."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __len__(self):
        return len(self.weights)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def triangle_rule(exact_degree):
    """Return a symmetric positive rule exact for total degree ``exact_degree``.

    Parameters
    ----------
    exact_degree : int
        Requested exactness, ``1 <= exact_degree <= 20``.

    Raises
    ------
    ValueError
        If the degree is outside the supported range.
    """
    import modepy

    exact_degree = int(exact_degree)
    if not 1 <= exact_degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(
            f"triangle rule degree must lie in [1, {MAX_TRIANGLE_DEGREE}], "
            f"got {exact_degree}"
        )
    q = modepy.XiaoGimbutasSimplexQuadrature(exact_degree, 2)
    # modepy uses the bi-unit triangle (-1,-1), (1,-1), (-1,1)
    xy = (np.asarray(q.nodes).T + 1.0) / 2.0
    lam = np.column_stack([1.0 - xy[:, 0] - xy[:, 1], xy[:, 0], xy[:, 1]])
    lam = np.clip(lam, 0.0, 1.0)
    w = np.asarray(q.weights, dtype=float)
    return QuadRuleTri(_frozen(lam), _frozen(w / w.sum()), int(q.exact_to))


@lru_cache(maxsize=None)
def edge_rule(exact_degree):
    """Return the shortest Gauss-Legendre rule on ``[0, 1]`` of the given exactness.

    An ``n``-point rule is exact to degree ``2n - 1``.
    """
    exact_degree = int(exact_degree)
    if not 1 <= exact_degree <= MAX_EDGE_DEGREE:
        raise ValueError(
            f"edge rule degree must lie in [1, {MAX_EDGE_DEGREE}], got {exact_degree}"
        )
    npts = exact_degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npts)
    return QuadRule1D(_frozen((x + 1.0) / 2.0), _frozen(w / 2.0), 2 * npts - 1)


def default_degrees(k):
    """Volume and edge quadrature degrees used for element degree ``k``."""
    return 2 * k + 6, 2 * k + 5
