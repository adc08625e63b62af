"""Linear dilation groups and the canonical homogeneous norm.

A dilation is the one-parameter matrix group ``d(s) = e^{s G}`` generated by
an anti-Hurwitz matrix ``G``, paired with a weighted Euclidean norm
``|x| = sqrt(x' P x)``.  When the pair is strictly monotone
(``P G + G' P > 0`` and ``P > 0``) the map ``s -> |d(-s) x|`` is strictly
decreasing, so every nonzero ``x`` crosses the unit sphere along its dilation
orbit exactly once.  The crossing parameter defines the homogeneous norm
``||x||_d = e^{s_x}`` with ``|d(-s_x) x| = 1``, the scalar the feedback laws
in :mod:`homctl.control_laws` are built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg

__all__ = [
    "Dilation",
    "dilation_matrix",
    "dilate",
    "check_strict_monotonicity",
    "hom_norm",
    "hom_norm_gradient",
]

#: accepted residual | |d(-s)x| - 1 | at the root
HOM_NORM_RESIDUAL_TOL = 1e-12
#: inputs with |x| below this are treated as exactly zero
_TINY_NORM = 1e-150
#: iteration caps of the safeguarded root-find
_MAX_BISECT = 80
_MAX_NEWTON = 8
#: eigenbasis condition limit for the fast d(s)x evaluation path
_EIG_COND_LIMIT = 1e3


@dataclass(frozen=True)
class Dilation:
    """Dilation group generator ``G`` and weight ``P`` of the base norm.

    Construction validates shapes and finiteness only; whether the pair is
    actually strictly monotone (and hence defines a homogeneous norm) is a
    separate question answered by :func:`check_strict_monotonicity`.
    """

    generator: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        G = linalg.as_square(self.generator, "generator")
        P = linalg.as_square(self.weight, "weight")
        if G.shape != P.shape:
            raise ValueError(f"generator {G.shape} and weight {P.shape} differ in size")
        object.__setattr__(self, "generator", G)
        object.__setattr__(self, "weight", P)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def norm(self, x) -> float:
        """Weighted Euclidean norm ``sqrt(x' P x)`` of the base space."""
        x = np.asarray(x, dtype=float)
        q = float(x @ self.weight @ x)
        return math.sqrt(q) if q > 0.0 else 0.0

    @cached_property
    def _eig(self):
        # Diagonalization for cheap e^{sG} application.  Used only when the
        # eigenvector basis is well conditioned enough to keep evaluation
        # noise well below the root residual tolerance; otherwise fall back
        # to the matrix exponential.
        try:
            w, V = np.linalg.eig(self.generator)
            Vinv = np.linalg.inv(V)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(Vinv)) or np.linalg.cond(V) > _EIG_COND_LIMIT:
            return None
        return w, V, Vinv


def dilation_matrix(D: Dilation, s: float) -> np.ndarray:
    """The group element ``d(s) = e^{s G}`` as a matrix."""
    if not math.isfinite(s):
        raise ValueError(f"dilation parameter must be finite, got {s}")
    eig = D._eig
    if eig is None:
        return linalg.expm(s * D.generator)
    w, V, Vinv = eig
    with np.errstate(over="ignore"):
        return np.real((V * np.exp(s * w)) @ Vinv)


def dilate(D: Dilation, s: float, x) -> np.ndarray:
    """Apply the group element: ``d(s) x``."""
    if not math.isfinite(s):
        raise ValueError(f"dilation parameter must be finite, got {s}")
    x = linalg.as_vector(x, "x")
    if x.size != D.dim:
        raise ValueError(f"x has size {x.size}, expected {D.dim}")
    eig = D._eig
    if eig is None:
        return linalg.expm(s * D.generator) @ x
    w, V, Vinv = eig
    with np.errstate(over="ignore"):
        return np.real(V @ (np.exp(s * w) * (Vinv @ x)))


def check_strict_monotonicity(D: Dilation) -> bool:
    """True iff ``P > 0`` and ``P G + G' P > 0`` (Cholesky-tested).

    This is the algebraic certificate that ``|d(-s) x|`` is strictly
    decreasing in ``s``, i.e. that the homogeneous norm is well defined.
    """
    ok_p, _ = linalg.chol_pd_check(D.weight)
    if not ok_p:
        return False
    G, P = D.generator, D.weight
    ok_m, _ = linalg.chol_pd_check(P @ G + G.T @ P)
    return ok_m


def hom_norm(D: Dilation, x) -> float:
    """Canonical homogeneous norm ``||x||_d`` induced by the dilation.

    Defined by ``||x||_d = e^{s_x}`` where ``s_x`` solves
    ``|d(-s_x) x| = 1`` in the weighted base norm, and ``||0||_d = 0``.
    The root is located by outward bracketing from ``s = ln|x|`` followed by
    bisection with safeguarded Newton refinements, to residual
    ``| |d(-s)x| - 1 | <= 1e-12``.

    Raises ``RuntimeError`` when no root can be located, which for finite
    input means the supplied pair is not strictly monotone.
    """
    x = linalg.as_vector(x, "x")
    if x.size != D.dim:
        raise ValueError(f"x has size {x.size}, expected {D.dim}")
    base = D.norm(x)
    if base < _TINY_NORM:
        return 0.0

    def residual(s: float) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            return D.norm(dilate(D, -s, x)) - 1.0

    # exact root for G = I; the natural starting point in general
    s0 = math.log(base)
    g0 = residual(s0)
    if abs(g0) <= HOM_NORM_RESIDUAL_TOL:
        return math.exp(s0)

    # bracket the root by doubling outward: residual > 0 at lo, < 0 at hi
    step = 1.0
    if g0 > 0.0:
        lo, hi = s0, s0 + step
        while residual(hi) > 0.0:
            lo = hi
            step *= 2.0
            hi = s0 + step
            if step > 1e6:
                raise RuntimeError("hom_norm: no unit-sphere crossing found (dilation not strictly monotone?)")
    else:
        lo, hi = s0 - step, s0
        while residual(lo) < 0.0:
            hi = lo
            step *= 2.0
            lo = s0 - step
            if step > 1e6:
                raise RuntimeError("hom_norm: no unit-sphere crossing found (dilation not strictly monotone?)")

    # bisection with Newton refinements once the bracket is tight; the
    # analytic slope is d|z|/ds = -(z' P G z)/|z| for z = d(-s) x
    G, P = D.generator, D.weight
    newton_left = _MAX_NEWTON
    s = 0.5 * (lo + hi)
    for _ in range(_MAX_BISECT + _MAX_NEWTON):
        with np.errstate(over="ignore", invalid="ignore"):
            z = dilate(D, -s, x)
            zn = D.norm(z)
        gval = zn - 1.0
        if abs(gval) <= HOM_NORM_RESIDUAL_TOL:
            return math.exp(s)
        if gval > 0.0:
            lo = s
        else:
            hi = s
        s_next = None
        if hi - lo < 0.5 and newton_left > 0 and zn > 0.0 and np.all(np.isfinite(z)):
            with np.errstate(over="ignore", invalid="ignore"):
                slope = float(z @ P @ (G @ z)) / zn
            if math.isfinite(slope) and slope > 0.0:
                cand = s + gval / slope
                if lo < cand < hi:
                    s_next = cand
                    newton_left -= 1
        s = s_next if s_next is not None else 0.5 * (lo + hi)
    raise RuntimeError("hom_norm: root refinement did not converge (dilation not strictly monotone?)")


def hom_norm_gradient(D: Dilation, x) -> np.ndarray:
    """Gradient of the homogeneous norm at ``x != 0``.

    With ``v = ||x||_d`` and ``z = d(-ln v) x`` the gradient is

        ``v * d(-ln v)' P z / (z' P G z)``,

    the closed form obtained by implicit differentiation of
    ``|d(-ln v) x| = 1``.  Raises ``ValueError`` at the origin where the
    norm is not differentiable.
    """
    x = linalg.as_vector(x, "x")
    v = hom_norm(D, x)
    if v == 0.0:
        raise ValueError("hom_norm_gradient: undefined at the origin")
    Dm = dilation_matrix(D, -math.log(v))
    z = Dm @ x
    G, P = D.generator, D.weight
    denom = float(z @ P @ (G @ z))
    return v * (Dm.T @ (P @ z)) / denom
