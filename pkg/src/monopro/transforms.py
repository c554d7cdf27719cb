"""Operator-valued transforms and their composition laws under monotone independence.

Two computable forms are provided:

* ray series — a transform ``T: B -> B`` restricted to a formal argument
  ``g(t) = sum_p g_p t^p`` (with ``g_0 = 0``), giving a polynomial in ``t``
  with matrix coefficients.  The transforms themselves are evaluated at
  ``g(t) = t z0``; compositions ``T_X o T_Y`` evaluate ``T_X`` at the ray
  series of ``T_Y``.
* multilinear function series — ``H``, ``beta``, ``gamma``, ``K`` and ``r``
  as :class:`~monopro.mfs.Series`, tabulated from moment kernels.

The ``h`` transform is ``h_X(z) = Phi((1 - zX)^{-1} z)``; the variant with
``Phi(X)`` in place of ``X`` is :func:`h_naive`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import core, mfs
from .errors import DepthBudgetExceeded, DimensionMismatch, SingularConstantTerm
from .fock import FockElement, FockSpace, LeftMul, Product, Sum, WEAKLY_MONOTONE, gauss, random_genvec
from .mfs import Series, compositions
from .moments import ElementHandle, MomentSpec

TOL = 1e-9


# -- ray series ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RaySeries:
    """Polynomial ``sum_n coeffs[n] t^n`` with matrix coefficients, shape ``(M+1, d, d)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise DimensionMismatch(f"ray series coefficients must be (M+1, d, d), got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    def __getitem__(self, n: int) -> np.ndarray:
        return self.coeffs[n]

    @classmethod
    def ray(cls, z0: np.ndarray, order: int) -> RaySeries:
        z0 = np.asarray(z0, dtype=complex)
        c = np.zeros((order + 1,) + z0.shape, dtype=complex)
        if order >= 1:
            c[1] = z0
        return cls(c)

    @classmethod
    def constant(cls, b: np.ndarray, order: int) -> RaySeries:
        c = np.zeros((order + 1,) + b.shape, dtype=complex)
        c[0] = b
        return cls(c)

    def _order(self, other: RaySeries) -> int:
        if other.d != self.d:
            raise DimensionMismatch("ray series over different dimensions")
        return min(self.order, other.order)

    def __add__(self, other: RaySeries) -> RaySeries:
        n = self._order(other)
        return RaySeries(self.coeffs[:n + 1] + other.coeffs[:n + 1])

    def __sub__(self, other: RaySeries) -> RaySeries:
        n = self._order(other)
        return RaySeries(self.coeffs[:n + 1] - other.coeffs[:n + 1])

    def __mul__(self, other: RaySeries) -> RaySeries:
        n = self._order(other)
        out = np.zeros((n + 1, self.d, self.d), dtype=complex)
        for k in range(n + 1):
            for j in range(k + 1):
                out[k] += self.coeffs[j] @ other.coeffs[k - j]
        return RaySeries(out)

    def inverse(self) -> RaySeries:
        """Multiplicative inverse (two-sided); needs an invertible constant coefficient."""
        if np.linalg.cond(self.coeffs[0]) > 1e12:
            raise SingularConstantTerm("constant coefficient is not invertible")
        inv0 = np.linalg.inv(self.coeffs[0])
        out = np.zeros_like(self.coeffs)
        out[0] = inv0
        for n in range(1, self.order + 1):
            acc = sum(self.coeffs[k] @ out[n - k] for k in range(1, n + 1))
            out[n] = -inv0 @ acc
        return RaySeries(out)

    def residual(self, other: RaySeries) -> float:
        n = self._order(other)
        return float(np.max(np.abs(self.coeffs[:n + 1] - other.coeffs[:n + 1]), initial=0.0))


def _one(d: int, order: int) -> RaySeries:
    return RaySeries.constant(core.identity(d), order)


def _require(handle: ElementHandle, n: int) -> None:
    if n > handle.max_order:
        raise DepthBudgetExceeded(f"needs moments of order {n}, handle supports {handle.max_order}")


def _series_moments(handle: ElementHandle, g: RaySeries, shape: str) -> RaySeries:
    """``sum_k Phi(word_k)`` for ``g = sum_p g_p t^p`` substituted into a word family.

    ``shape`` is ``"h"`` for ``(gX)^k g``, ``"theta"`` for ``(gX)^k`` (k >= 1) and
    ``"varrho"`` for ``(Xg)^k`` (k >= 1).
    """
    d, order = g.d, g.order
    if np.max(np.abs(g.coeffs[0]), initial=0.0) > 1e-12:
        raise DimensionMismatch("series argument must vanish at t = 0")
    eye = core.identity(d)
    out = np.zeros((order + 1, d, d), dtype=complex)
    need = order - 1 if shape == "h" else order
    _require(handle, max(need, 0))
    for n in range(1, order + 1):
        for parts in compositions(n):
            gs = [g[p] for p in parts]
            if shape == "h":
                coeffs = gs
            elif shape == "theta":
                coeffs = gs + [eye]
            else:
                coeffs = [eye] + gs
            out[n] += handle.phi_word(coeffs)
    return RaySeries(out)


def h_at(handle: ElementHandle, g: RaySeries) -> RaySeries:
    return _series_moments(handle, g, "h")


def theta_at(handle: ElementHandle, g: RaySeries) -> RaySeries:
    return _series_moments(handle, g, "theta")


def varrho_at(handle: ElementHandle, g: RaySeries) -> RaySeries:
    return _series_moments(handle, g, "varrho")


def kappa_at(handle: ElementHandle, g: RaySeries) -> RaySeries:
    th = theta_at(handle, g)
    return (_one(g.d, g.order) + th).inverse() * th


def rho_at(handle: ElementHandle, g: RaySeries) -> RaySeries:
    vr = varrho_at(handle, g)
    return vr * (_one(g.d, g.order) + vr).inverse()


def h_series(handle: ElementHandle, z0: np.ndarray, M: int) -> RaySeries:
    """``h_X(t z0)``: the coefficient of ``t^{n+1}`` is ``Phi((z0 X)^n z0)``."""
    return h_at(handle, RaySeries.ray(z0, M))


def h_naive(handle: ElementHandle, z0: np.ndarray, M: int) -> RaySeries:
    """``(1 - z Phi(X))^{-1} z`` along ``z = t z0``."""
    d = handle.d
    m1 = handle.phi_word([core.identity(d), core.identity(d)])
    one = _one(d, M)
    z = RaySeries.ray(z0, M)
    return (one - z * RaySeries.constant(m1, M)).inverse() * z


def theta_kappa_series(handle: ElementHandle, z0: np.ndarray, M: int) -> tuple[RaySeries, RaySeries]:
    g = RaySeries.ray(z0, M)
    th = theta_at(handle, g)
    return th, (_one(handle.d, M) + th).inverse() * th


def rho_series(handle: ElementHandle, z0: np.ndarray, M: int) -> RaySeries:
    return rho_at(handle, RaySeries.ray(z0, M))


def varrho_series(handle: ElementHandle, z0: np.ndarray, M: int) -> RaySeries:
    return varrho_at(handle, RaySeries.ray(z0, M))


# -- multilinear function series ----------------------------------------------------

def _slot_left(m: np.ndarray) -> np.ndarray:
    """Kernel of ``(b, c...) -> b m(c...)`` from the kernel of ``m``."""
    d = m.shape[0]
    out = np.einsum("xa,cy...->xyca...", core.identity(d), m)
    return out.reshape((d, d, d * d) + m.shape[2:])


def _slot_right(m: np.ndarray) -> np.ndarray:
    """Kernel of ``(c..., b) -> m(c...) b``."""
    d = m.shape[0]
    out = np.einsum("cy,xa...->xy...ca", core.identity(d), m)
    return out.reshape(m.shape[:2] + m.shape[2:] + (d * d,))


def as_moment_spec(handle: ElementHandle, order: int) -> MomentSpec:
    _require(handle, order)
    if isinstance(handle, MomentSpec):
        return handle.truncate(order)
    if isinstance(handle, FockElement):
        return handle.moments(order)
    return MomentSpec.from_handle(handle, order)


def extract_H(handle: ElementHandle, N: int) -> Series:
    """``H_{X,n}(b_1..b_n) = Phi(b_1 X b_2 ... X b_n)`` with ``H_0 = 0``, ``H_1 = id``."""
    d = handle.d
    spec = as_moment_spec(handle, max(N - 1, 0))
    terms = [core.zeros(d)]
    if N >= 1:
        terms.append(mfs.identity_kernel(d))
    for n in range(2, N + 1):
        terms.append(_slot_left(_slot_right(spec.maps[n - 2])))
    return Series(d, tuple(terms))


def extract_beta_gamma(handle: ElementHandle, N: int) -> tuple[Series, Series]:
    """``beta_n(b..) = Phi(b_1 X ... b_n X)`` and ``gamma_n(b..) = Phi(X b_1 ... X b_n)``."""
    d = handle.d
    spec = as_moment_spec(handle, N)
    beta = [core.zeros(d)] + [_slot_left(spec.maps[n - 1]) for n in range(1, N + 1)]
    gamma = [core.zeros(d)] + [_slot_right(spec.maps[n - 1]) for n in range(1, N + 1)]
    return Series(d, tuple(beta)), Series(d, tuple(gamma))


def kappa_r_mfs(handle: ElementHandle, N: int) -> tuple[Series, Series]:
    """``K_X = (1 + beta)^{-1} beta`` and ``r_X = gamma (1 + gamma)^{-1}``."""
    beta, gamma = extract_beta_gamma(handle, N)
    one = mfs.one(handle.d, N)
    big_k = mfs.series_mul(mfs.series_mul_inverse(one + beta), beta)
    small_r = mfs.series_mul(gamma, mfs.series_mul_inverse(one + gamma))
    return big_k, small_r


def diagonal_series(f: Series, z0: np.ndarray) -> RaySeries:
    """``F(t z0) = sum_n F_n(z0, ..., z0) t^n``."""
    return RaySeries(f.diagonal(np.asarray(z0, dtype=complex)))


# -- composition checks ---------------------------------------------------------------

@dataclass(frozen=True)
class CompositionResult:
    """One identity check: ``name`` is the tested identity, ``residual`` its worst coefficient gap."""

    name: str
    residual: float
    tol: float = TOL

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def verify_h_composition(x: ElementHandle, y: ElementHandle, xy: ElementHandle,
                         z0: np.ndarray, M: int) -> CompositionResult:
    """``h_{X+Y} = h_X o h_Y`` along ``z = t z0``; ``xy`` is a handle for ``X + Y``."""
    lhs = h_series(xy, z0, M)
    rhs = h_at(x, h_series(y, z0, M))
    return CompositionResult("h_{X+Y} = h_X o h_Y", lhs.residual(rhs))


def verify_kappa_rho(u: ElementHandle, v: ElementHandle, vu: ElementHandle, uv: ElementHandle,
                     z0: np.ndarray, M: int) -> list[CompositionResult]:
    """Both composition orders for ``kappa_{VU}`` and ``rho_{UV}``."""
    g = RaySeries.ray(z0, M)
    k_vu = kappa_at(vu, g)
    r_uv = rho_at(uv, g)
    return [
        CompositionResult("kappa_{VU} = kappa_U o kappa_V", k_vu.residual(kappa_at(u, kappa_at(v, g)))),
        CompositionResult("kappa_{VU} = kappa_V o kappa_U", k_vu.residual(kappa_at(v, kappa_at(u, g)))),
        CompositionResult("rho_{UV} = rho_U o rho_V", r_uv.residual(rho_at(u, rho_at(v, g)))),
        CompositionResult("rho_{UV} = rho_V o rho_U", r_uv.residual(rho_at(v, rho_at(u, g)))),
    ]


def verify_H_composition(x: ElementHandle, y: ElementHandle, xy: ElementHandle, N: int) -> CompositionResult:
    lhs = extract_H(xy, N)
    rhs = mfs.series_compose(extract_H(x, N), extract_H(y, N))
    return CompositionResult("H_{X+Y} = H_X o H_Y", lhs.residual(rhs))


def verify_K_r(u: ElementHandle, v: ElementHandle, vu: ElementHandle, uv: ElementHandle,
               N: int) -> list[CompositionResult]:
    """Both composition orders for ``K_{VU}`` and ``r_{UV}``."""
    k_u, r_u = kappa_r_mfs(u, N)
    k_v, r_v = kappa_r_mfs(v, N)
    k_vu, _ = kappa_r_mfs(vu, N)
    _, r_uv = kappa_r_mfs(uv, N)
    comp = mfs.series_compose
    return [
        CompositionResult("K_{VU} = K_U o K_V", k_vu.residual(comp(k_u, k_v))),
        CompositionResult("K_{VU} = K_V o K_U", k_vu.residual(comp(k_v, k_u))),
        CompositionResult("r_{UV} = r_U o r_V", r_uv.residual(comp(r_u, r_v))),
        CompositionResult("r_{UV} = r_V o r_U", r_uv.residual(comp(r_v, r_u))),
    ]


# -- Fock-realized instances ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Instance:
    """Monotonically independent ``X`` (index 1) and ``Y`` (index 2) on one module.

    ``U = 1 + X`` and ``V = Y`` provide the multiplicative pair.
    """

    space: FockSpace
    x: FockElement
    y: FockElement

    def _elem(self, op) -> FockElement:
        return FockElement(self.space, op)

    @property
    def sum(self) -> FockElement:
        return self._elem(Sum((self.x.op, self.y.op)))

    @property
    def u(self) -> FockElement:
        return self._elem(Sum((LeftMul(core.identity(self.space.d)), self.x.op)))

    @property
    def v(self) -> FockElement:
        return self.y

    @property
    def vu(self) -> FockElement:
        return self._elem(Product((self.v.op, self.u.op)))

    @property
    def uv(self) -> FockElement:
        return self._elem(Product((self.u.op, self.v.op)))


def random_instance(d: int, seed: int, L: int = 8, scale: float = 0.7,
                    shift: bool = True, quadratic: bool = True) -> Instance:
    """Random ``X`` in the algebra of ``E_1`` and ``Y = G(f_2) + beta`` with random covariances.

    ``X = G(f_1) + c G(g_1) G(h_1) c'`` (the quadratic term gives ``Phi(X) != 0``).
    Only the higher-index element may carry a B-constant: a constant added to
    ``X`` would break the valley condition ``Phi(Y X Y) = Phi(Y) Phi(X) Phi(Y)``.
    """
    rng = np.random.default_rng(seed)
    etas = tuple(core.random_cp(d, rng, rank=2, scale=scale) for _ in range(2))
    space = FockSpace(d, 2, L, WEAKLY_MONOTONE, etas)
    x = gauss(random_genvec(1, d, rng, scale=scale))
    if quadratic:
        x = Sum((x, Product((LeftMul(core.random_matrix(d, rng, scale)),
                             gauss(random_genvec(1, d, rng, scale=scale)),
                             gauss(random_genvec(1, d, rng, scale=scale)),
                             LeftMul(core.random_matrix(d, rng, scale))))))
    y = gauss(random_genvec(2, d, rng, scale=scale))
    if shift:
        y = Sum((y, LeftMul(scale * core.random_selfadjoint(d, rng))))
    return Instance(space, FockElement(space, x), FockElement(space, y))


def tabulated(handle: ElementHandle, order: int) -> MomentSpec:
    """Cache a handle's moments up to ``order`` (exact, so checks stay independent)."""
    return as_moment_spec(handle, order)


def transform_suite(inst: Instance, z0: np.ndarray, M: int, N: int) -> list[CompositionResult]:
    """All composition identities for one instance, both orders where the order is in question."""
    order = max(M, N)
    x, y, s = (tabulated(h, order) for h in (inst.x, inst.y, inst.sum))
    u, v, vu, uv = (tabulated(h, order) for h in (inst.u, inst.v, inst.vu, inst.uv))
    out = [verify_h_composition(x, y, s, z0, M), verify_H_composition(x, y, s, N)]
    out += verify_kappa_rho(u, v, vu, uv, z0, M)
    out += verify_K_r(u, v, vu, uv, N)
    return out


__all__ = [
    "RaySeries", "h_series", "h_naive", "theta_kappa_series", "rho_series", "varrho_series",
    "h_at", "theta_at", "varrho_at", "kappa_at", "rho_at", "extract_H", "extract_beta_gamma",
    "kappa_r_mfs", "diagonal_series", "verify_h_composition", "verify_kappa_rho",
    "verify_H_composition", "verify_K_r", "CompositionResult", "Instance", "random_instance",
    "transform_suite", "as_moment_spec", "tabulated",
]
