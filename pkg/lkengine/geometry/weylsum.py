# lkengine/geometry/weylsum.py
"""Weyl's signed coupling sums and intrinsic volumes of closed manifolds.

A coupling pairs the lower index pairs (p1 p2 | p3 p4 | ...) with an upper
arrangement q, a permutation of p. The engine sums over canonical couplings
(lower pairs ascending, columns ordered by their first entry, q free); every
canonical coupling stands for 2^(e/2) (e/2)! ordered tuples with identical
terms, and that multiplicity is folded into the normalization.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from lkengine.errors import InputError
from lkengine.geometry.quadrature import QuadratureResult, as_atlas, integrate
from lkengine.geometry.tensorcore import CurvatureBundle, curvature_bundle

logger = logging.getLogger(__name__)

# Calibrated once against V_0(S^2) = 2: each lower pair contributes 1/2.
PAIR_CALIBRATION = 0.5

TERM_BLOCK = 4096


@dataclass(frozen=True)
class Coupling:
    p: tuple
    q: tuple
    sign: int


@dataclass(frozen=True)
class LkSpec:
    n: int
    e: int

    def __post_init__(self):
        if self.e % 2 or not 0 <= self.e <= self.n:
            raise InputError(f"degree e must be even with 0 <= e <= n, got e={self.e}, n={self.n}")

    @property
    def normalization(self) -> float:
        half = self.e // 2
        return (2.0 * math.pi) ** (-half) * PAIR_CALIBRATION ** half

    @classmethod
    def for_index(cls, n: int, i: int) -> "LkSpec":
        return cls(n, n - i)


def all_pairings(items):
    """Yields all partitions of ``items`` into pairs, each pair in input order"""
    items = list(items)
    if len(items) == 0:
        yield []
        return

    first_item = items.pop(0)
    for i, item in enumerate(items):
        first_pair = (first_item, item)
        for pairing in all_pairings(items[:i] + items[i + 1:]):
            yield [first_pair] + pairing


def permutation_sign(source, target) -> int:
    """Parity of the permutation taking the sequence ``source`` to ``target``"""
    position = {value: k for k, value in enumerate(source)}
    perm = [position[value] for value in target]
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def coupling_multiplicity(e: int) -> int:
    """Ordered tuples represented by one canonical coupling"""
    half = e // 2
    return 2 ** half * math.factorial(half)


@lru_cache(maxsize=None)
def enumerate_couplings(n: int, e: int) -> tuple:
    """Canonical couplings on indices 0..n-1 with e lower indices"""
    if e % 2 or e < 0 or e > n:
        raise InputError(f"couplings need an even degree 0 <= e <= n, got e={e}, n={n}")
    couplings = []
    for subset in itertools.combinations(range(n), e):
        # all_pairings keeps pairs ascending and orders them by first entry
        for pairing in all_pairings(subset):
            p = tuple(index for pair in pairing for index in pair)
            for q in itertools.permutations(p):
                couplings.append(Coupling(p, q, permutation_sign(p, q)))
    return tuple(couplings)


def canonical_form(p, q):
    """Canonical representative of an ordered coupling, and its sign"""
    columns = []
    for k in range(0, len(p), 2):
        lower, upper = (p[k], p[k + 1]), (q[k], q[k + 1])
        if lower[0] > lower[1]:
            lower, upper = lower[::-1], upper[::-1]
        columns.append((lower, upper))
    columns.sort()
    cp = tuple(i for lower, _ in columns for i in lower)
    cq = tuple(i for _, upper in columns for i in upper)
    return cp, cq


@lru_cache(maxsize=None)
def _coupling_table(n: int, e: int):
    """Flat offsets into R^pq_rs reshaped to (n^4,), and signs"""
    couplings = enumerate_couplings(n, e)
    half = e // 2
    offsets = np.empty((len(couplings), half), dtype=np.int64)
    signs = np.empty(len(couplings))
    for t, c in enumerate(couplings):
        for k in range(half):
            q1, q2, p1, p2 = c.q[2 * k], c.q[2 * k + 1], c.p[2 * k], c.p[2 * k + 1]
            offsets[t, k] = ((q1 * n + q2) * n + p1) * n + p2
        signs[t] = c.sign
    offsets.setflags(write=False)
    signs.setflags(write=False)
    return offsets, signs


def lk_integrand(bundle: CurvatureBundle, spec: LkSpec) -> np.ndarray:
    """Unnormalized canonical coupling sum; 1 for e = 0"""
    mixed = bundle.riemann_mixed
    batch = mixed.shape[:-4]
    if spec.e == 0:
        return np.ones(batch)
    n = mixed.shape[-1]
    if n != spec.n:
        raise InputError(f"bundle has dimension {n}, degree spec expects {spec.n}")
    flat = mixed.reshape(batch + (n ** 4,))
    offsets, signs = _coupling_table(n, spec.e)
    total = np.zeros(batch)
    for start in range(0, len(signs), TERM_BLOCK):
        block = offsets[start:start + TERM_BLOCK]
        products = np.prod(flat[..., block], axis=-1)
        total = total + products @ signs[start:start + TERM_BLOCK]
    return total


def lk_density(bundle: CurvatureBundle, e: int) -> np.ndarray:
    """Normalized Lipschitz-Killing density of degree e"""
    spec = LkSpec(bundle.dim, e)
    return spec.normalization * lk_integrand(bundle, spec)


def brute_force_sum(bundle: CurvatureBundle, e: int) -> np.ndarray:
    """Raw sum over all ordered distinct tuples p and permutations q of p"""
    mixed = bundle.riemann_mixed
    n = mixed.shape[-1]
    total = np.zeros(mixed.shape[:-4]) if e else np.ones(mixed.shape[:-4])
    if e == 0:
        return total
    for p in itertools.permutations(range(n), e):
        for q in itertools.permutations(p):
            term = float(permutation_sign(p, q))
            for k in range(0, e, 2):
                term = term * mixed[..., q[k], q[k + 1], p[k], p[k + 1]]
            total = total + term
    return total


# ---------------------------------------------------------------------------
# Pfaffian oracle
# ---------------------------------------------------------------------------

def _wedge(a: dict, b: dict) -> dict:
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            if set(ka) & set(kb):
                continue
            merged = ka + kb
            sign = permutation_sign(sorted(merged), merged)
            key = tuple(sorted(merged))
            out[key] = out.get(key, 0.0) + sign * va * vb
    return out


def _add(a: dict, b: dict, sign: float = 1.0) -> dict:
    out = dict(a)
    for key, value in b.items():
        out[key] = out.get(key, 0.0) + sign * value
    return out


def _pfaffian(omega, rows):
    if not rows:
        return {(): 1.0}
    first, rest = rows[0], rows[1:]
    total = {}
    for k, j in enumerate(rest):
        minor = rest[:k] + rest[k + 1:]
        total = _add(total, _wedge(omega[first][j], _pfaffian(omega, minor)), -1.0 if k % 2 else 1.0)
    return total


def gb_density_pfaffian(bundle: CurvatureBundle, g: Optional[np.ndarray] = None) -> np.ndarray:
    """Chern-Gauss-Bonnet density (2 pi)^(-n/2) Pf(Omega) in an orthonormal frame"""
    g = bundle.g if g is None else np.asarray(g)
    n = g.shape[-1]
    if n % 2:
        raise InputError("the Pfaffian density needs an even dimension")
    frame = np.swapaxes(np.linalg.inv(np.linalg.cholesky(g)), -1, -2)
    R = np.einsum("...ijkl,...ia,...jb,...kc,...ld->...abcd", bundle.riemann_lower, frame, frame, frame, frame,
                  optimize=True)
    omega = [[{(c, d): R[..., a, b, c, d] for c in range(n) for d in range(c + 1, n)} for b in range(n)]
             for a in range(n)]
    pf = _pfaffian(omega, list(range(n)))
    top = pf.get(tuple(range(n)), np.zeros(g.shape[:-2]))
    return (2.0 * math.pi) ** (-(n // 2)) * top


# ---------------------------------------------------------------------------
# Intrinsic volumes
# ---------------------------------------------------------------------------

@dataclass
class IntrinsicVolume:
    i: int
    n: int
    value: float
    error_estimate: float
    computed: bool

    def __float__(self):
        return float(self.value)


def lk_field(spec: LkSpec):
    """Quadrature field for the normalized degree-e density"""

    def field(chart, points, mj):
        if spec.e == 0:
            return np.ones(points.shape[0])
        return spec.normalization * lk_integrand(curvature_bundle(mj), spec)

    return field


def compute_intrinsic_volume(manifold, i: int, metric_fn=None, settings=None, pool=None) -> IntrinsicVolume:
    """V_i with its quadrature error estimate; odd n - i returns exact zero"""
    atlas = as_atlas(manifold)
    n = atlas[0].dim
    if not 0 <= i <= n:
        raise InputError(f"intrinsic volume index must satisfy 0 <= i <= {n}, got {i}")
    if (n - i) % 2:
        return IntrinsicVolume(i, n, 0.0, 0.0, False)
    spec = LkSpec.for_index(n, i)
    result: QuadratureResult = integrate(atlas, lk_field(spec), metric_fn, settings, pool)
    logger.info(f"V_{i} of a {n}-manifold: {result.value:.12g} (+- {result.error_estimate:.3g})")
    return IntrinsicVolume(i, n, result.value, result.error_estimate, True)


def intrinsic_volume(manifold, i: int, metric_fn=None, settings=None, pool=None) -> float:
    return compute_intrinsic_volume(manifold, i, metric_fn, settings, pool).value


def sphere_intrinsic_volume(n: int, i: int, r: float = 1.0) -> float:
    """Closed form for the round n-sphere of radius r"""
    if (n - i) % 2 or not 0 <= i <= n:
        return 0.0
    e = n - i
    vol = 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2) * r ** n
    return vol * math.factorial(n) / (math.factorial(n - e) * math.factorial(e // 2)) * (4.0 * math.pi * r * r) ** (-(e // 2))
