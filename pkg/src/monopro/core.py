"""Finite-dimensional coefficient algebra B = M_d(C).

Elements of B are plain ``numpy`` complex arrays of shape ``(d, d)``.
Vectorization is column-stacking everywhere in the package::

    vec(b)[i + d*j] == b[i, j]

so that ``vec(a @ x @ c) == kron(c.T, a) @ vec(x)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonHermitian, NonPositiveInput

POS_TOL = 1e-10
HERM_RTOL = 1e-8


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def zeros(d: int) -> np.ndarray:
    return np.zeros((d, d), dtype=complex)


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def vec(b: np.ndarray) -> np.ndarray:
    return np.asarray(b).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatch(f"vector of length {v.size} is not a vectorized {d}x{d} matrix")
    return v.reshape((d, d), order="F")


def matrix_unit(d: int, i: int, j: int) -> np.ndarray:
    e = zeros(d)
    e[i, j] = 1.0
    return e


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + adjoint(a))


def is_positive(a: np.ndarray, tol: float = POS_TOL, herm_tol: float | None = None) -> bool:
    """Return True iff ``a`` is positive semidefinite up to ``tol``.

    ``a`` must be Hermitian within ``herm_tol`` (default ``max(tol, 1e-8 * ||a||)``);
    otherwise :class:`NonHermitian` is raised.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if herm_tol is None:
        herm_tol = max(tol, HERM_RTOL * np.linalg.norm(a))
    if np.linalg.norm(a - adjoint(a)) > herm_tol:
        raise NonHermitian("matrix is not Hermitian within tolerance")
    return bool(min_eigenvalue(a) >= -tol)


def min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(np.asarray(a, dtype=complex)))[0])


def random_matrix(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * g / np.sqrt(2 * d)


def random_selfadjoint(d: int, seed: int | np.random.Generator) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = random_matrix(d, rng)
    return (g + adjoint(g)) / 2


@dataclass(frozen=True, eq=False)
class CPMap:
    """Completely positive map ``b -> sum_s K_s^* b K_s`` on M_d.

    ``kraus`` is an array of shape ``(r, d, d)``.
    """

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim != 3 or k.shape[1] != k.shape[2] or k.shape[0] == 0:
            raise DimensionMismatch(f"Kraus family must have shape (r, d, d), got {k.shape}")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)

    @property
    def d(self) -> int:
        return self.kraus.shape[1]

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, b: np.ndarray) -> np.ndarray:
        return cp_apply(self, b)

    @cached_property
    def matrix(self) -> np.ndarray:
        """d^2 x d^2 matrix acting on vec(b)."""
        return sum(np.kron(k.T, k.conj().T) for k in self.kraus)

    @cached_property
    def superop(self) -> np.ndarray:
        """Tensor ``S[p, l, b, n] = eta(E_bn)[p, l]``."""
        k = self.kraus
        return np.einsum("sbp,snl->plbn", k.conj(), k)

    @cached_property
    def choi(self) -> np.ndarray:
        d = self.d
        c = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                c[i * d:(i + 1) * d, j * d:(j + 1) * d] = self(matrix_unit(d, i, j))
        return c

    def is_cp(self, tol: float = POS_TOL) -> bool:
        return min_eigenvalue(self.choi) >= -tol


def cp_from_kraus(kraus: Sequence[np.ndarray]) -> CPMap:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    if not kraus:
        raise DimensionMismatch("empty Kraus family")
    shape = kraus[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(k.shape != shape for k in kraus):
        raise DimensionMismatch("Kraus operators must all be d x d")
    return CPMap(np.stack(kraus))


def cp_apply(eta: CPMap, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b)
    if b.shape != (eta.d, eta.d):
        raise DimensionMismatch(f"map on M_{eta.d} applied to array of shape {b.shape}")
    k = eta.kraus
    return np.einsum("sji,jk,skl->il", k.conj(), b, k)


def cp_from_choi(choi: np.ndarray, tol: float = POS_TOL) -> CPMap:
    """Recover a Kraus family from a Choi matrix; raise if it is not PSD."""
    choi = np.asarray(choi, dtype=complex)
    n = choi.shape[0]
    d = int(round(np.sqrt(n)))
    if choi.shape != (n, n) or d * d != n:
        raise DimensionMismatch(f"Choi matrix must be d^2 x d^2, got {choi.shape}")
    if np.linalg.norm(choi - adjoint(choi)) > max(tol, HERM_RTOL * np.linalg.norm(choi)):
        raise NonPositiveInput("Choi matrix is not Hermitian, map is not completely positive")
    # choi[(i,k),(j,l)] = sum_s conj(K_s[i,k]) K_s[j,l]
    w, v = np.linalg.eigh(hermitian_part(choi).conj())
    if w[0] < -tol:
        raise NonPositiveInput(f"Choi matrix has eigenvalue {w[0]:.3e} < 0, map is not completely positive")
    keep = w > tol
    if not keep.any():
        return CPMap(np.zeros((1, d, d), dtype=complex))
    kraus = (v[:, keep] * np.sqrt(w[keep])).T.reshape(-1, d, d)
    return CPMap(kraus)


def identity_map(d: int) -> CPMap:
    return CPMap(identity(d)[None])


def random_cp(d: int, rng: np.random.Generator, rank: int = 2, scale: float = 1.0) -> CPMap:
    return CPMap(np.stack([random_matrix(d, rng, scale) for _ in range(rank)]))


# -- JSON encoding -----------------------------------------------------------

def mat_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"d": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def mat_from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    a = re + 1j * im
    d = int(obj.get("d", a.shape[0]))
    if a.shape != (d, d):
        raise DimensionMismatch(f"matrix declared d={d} but has shape {a.shape}")
    return a


def cp_to_json(eta: CPMap) -> dict:
    return {"kraus": [mat_to_json(k) for k in eta.kraus]}


def cp_from_json(obj: dict) -> CPMap:
    """Decode ``{"kraus": [...]}`` or ``{"choi": Mat}``; the latter is certified CP."""
    if "kraus" in obj:
        return cp_from_kraus([mat_from_json(k) for k in obj["kraus"]])
    if "choi" in obj:
        return cp_from_choi(mat_from_json(obj["choi"]))
    raise DimensionMismatch("CP map JSON needs a 'kraus' or 'choi' field")
