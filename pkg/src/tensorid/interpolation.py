"""Multilinear interpolation over corner cells and factorized tensors.

Two equivalent forward paths exist for a factorized tensor:

* extract the 2^M corner cell around the query and interpolate it literally
  (corner enumeration, kept mainly as a test oracle), or
* fold the weights into each mode first -- a convex combination of the two
  active rows per factor -- and then run the plain rank sum (factored order,
  the one the learners use).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grid import InterpWeights
from .tensors import FactorSet, SubTensor


@dataclass(frozen=True)
class CellQuery:
    """Grid cell (1-based lower corners k_m in [1, I_m - 1]) plus per-mode
    interpolation weights."""

    k: tuple[int, ...]
    weights: tuple[InterpWeights, ...]

    def __post_init__(self):
        k = tuple(int(i) for i in self.k)
        w = tuple(self.weights)
        if len(k) != len(w) or not k:
            raise ValueError("need one lower corner and one weight pair per mode")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "weights", w)

    @property
    def order(self) -> int:
        return len(self.k)


def _check_cell(k, dims) -> tuple[int, ...]:
    k = tuple(int(i) for i in k)
    if len(k) != len(dims):
        raise ValueError(f"cell index {k} has wrong length for dims {dims}")
    for i, d in zip(k, dims):
        if not 1 <= i <= d - 1:
            raise ValueError(f"cell index {k} out of range [1, {d - 1}] for dims {dims}")
    return tuple(i - 1 for i in k)


def interp_subtensor(q: SubTensor, weights) -> float:
    """Literal corner sum: sum over labels l of q(l) * prod_m w_m[l_m]."""
    weights = tuple(weights)
    if len(weights) != q.order:
        raise ValueError(
            f"{len(weights)} weight pairs do not match subtensor order {q.order}"
        )
    total = 0.0
    for labels in itertools.product((0, 1), repeat=q.order):
        term = q.corner(labels)
        for w, l in zip(weights, labels):
            term *= w[l]
        total += term
    return total


def extract_subtensor(f: FactorSet, k) -> SubTensor:
    """Corner cell of a factorized tensor at 1-based lower corners k."""
    k0 = _check_cell(k, f.dims)
    vals = np.empty(2 ** f.order)
    for pos, labels in enumerate(itertools.product((0, 1), repeat=f.order)):
        prod = f.factors[0][k0[0] + labels[0]].copy()
        for A, base, l in zip(f.factors[1:], k0[1:], labels[1:]):
            prod *= A[base + l]
        vals[pos] = prod.sum()
    return SubTensor(vals)


def convex_rows(factors, k0, u) -> np.ndarray:
    """Per-mode convex combination of the two active factor rows.

    factors: M matrices (I_m, R); k0: 0-based lower rows (M,); u: (M,).
    Returns c of shape (M, R) with c[m] = A_m[k0_m]*(1-u_m) + A_m[k0_m+1]*u_m.
    """
    R = factors[0].shape[1]
    c = np.empty((len(factors), R))
    for m, A in enumerate(factors):
        um = u[m]
        c[m] = A[k0[m]] * (1.0 - um) + A[k0[m] + 1] * um
    return c


def interp_decomposed(f: FactorSet, query: CellQuery) -> float:
    """Interpolated value of a factorized tensor, factored evaluation order:
    sum_r prod_m [A_m(k_m, r)(1-u_m) + A_m(k_m+1, r) u_m]."""
    if query.order != f.order:
        raise ValueError(f"query order {query.order} does not match tensor order {f.order}")
    k0 = _check_cell(query.k, f.dims)
    u = np.array([w.u for w in query.weights])
    c = convex_rows(f.factors, k0, u)
    prod = c[0].copy()
    for m in range(1, c.shape[0]):
        prod *= c[m]
    return float(prod.sum())
