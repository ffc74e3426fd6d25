"""Dense tensors and rank-factorized (CP) tensors.

A dense tensor of order M is stored as a flat float64 array in generalized
row-major layout (the last index varies fastest).  A factorized tensor is a
list of M factor matrices, factor m of shape (I_m, R); entry (i_1, ..., i_M)
of the represented tensor is sum_r prod_m A_m(i_m, r).

Multi-indices and mode numbers at this API are 1-based.  All types are
value-like: fields are never rebound after construction, and nothing here
mutates array contents.  Adaptive learners that own a FactorSet update the
factor entries in place (single-owner mutation, see models.py).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Default entry cap for materializing a factorized tensor densely.
MATERIALIZE_CAP = 10_000_000


class ResourceLimitError(RuntimeError):
    """An operation would allocate past a configured cap."""


def _as_float_array(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64)


@dataclass(frozen=True)
class DenseTensor:
    """Order-M tensor: dims (I_1..I_M) plus a flat row-major value array."""

    dims: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive integers, got {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", _as_float_array(self.values).ravel())
        if self.values.size != math.prod(dims):
            raise ValueError(
                f"value count {self.values.size} does not match dims {dims}"
            )

    @classmethod
    def from_array(cls, arr) -> "DenseTensor":
        arr = _as_float_array(arr)
        return cls(arr.shape, arr.ravel())

    @property
    def order(self) -> int:
        return len(self.dims)

    def array(self) -> np.ndarray:
        """The values reshaped to dims (row-major view)."""
        return self.values.reshape(self.dims)

    def at(self, idx) -> float:
        """Entry at a 1-based multi-index."""
        idx = _check_index(idx, self.dims)
        return float(self.array()[idx])


@dataclass(frozen=True)
class FactorSet:
    """CP factor matrices: M matrices, matrix m of shape (I_m, R)."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(_as_float_array(a) for a in self.factors)
        if len(mats) < 1:
            raise ValueError("need at least one factor matrix")
        ranks = {a.shape[1] if a.ndim == 2 else -1 for a in mats}
        if -1 in ranks or len(ranks) != 1:
            raise ValueError("factors must be matrices sharing one column count")
        if mats[0].shape[1] < 1 or any(a.shape[0] < 1 for a in mats):
            raise ValueError("factor shapes must be at least 1x1")
        object.__setattr__(self, "factors", mats)

    @classmethod
    def random(cls, dims, rank, rng, scale=0.1) -> "FactorSet":
        """Factors with independent N(0, scale^2) entries, mode order draw."""
        return cls(tuple(rng.normal(0.0, scale, (d, rank)) for d in dims))

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a in self.factors)


@dataclass(frozen=True)
class SubTensor:
    """2 x ... x 2 corner cell, indexed by labels (l_1..l_M), l_m in {0, 1}.

    Corner (l_1..l_M) sits at flat position sum_m l_m * 2^(M-m), i.e. binary
    counting with l_M fastest (row-major over a (2,)*M block).
    """

    values: np.ndarray

    def __post_init__(self):
        vals = _as_float_array(self.values).ravel()
        if vals.size < 2 or vals.size & (vals.size - 1):
            raise ValueError(f"corner count must be a power of two >= 2, got {vals.size}")
        object.__setattr__(self, "values", vals)

    @property
    def order(self) -> int:
        return self.values.size.bit_length() - 1

    def corner(self, labels) -> float:
        labels = tuple(int(l) for l in labels)
        if len(labels) != self.order or any(l not in (0, 1) for l in labels):
            raise ValueError(f"corner labels must be {self.order} bits, got {labels}")
        pos = 0
        for l in labels:
            pos = (pos << 1) | l
        return float(self.values[pos])

    def array(self) -> np.ndarray:
        return self.values.reshape((2,) * self.order)


def _check_index(idx, dims) -> tuple[int, ...]:
    idx = tuple(int(i) for i in idx)
    if len(idx) != len(dims):
        raise ValueError(f"index {idx} has wrong length for dims {dims}")
    for i, d in zip(idx, dims):
        if not 1 <= i <= d:
            raise ValueError(f"index {idx} out of bounds for dims {dims}")
    return tuple(i - 1 for i in idx)


def mode_vec_product(t: DenseTensor, mode: int, v) -> DenseTensor:
    """Contract tensor t with vector v along the given mode (1-based).

    The output keeps order M with the contracted dim collapsed to 1:
    out(i_1,..,1,..,i_M) = sum_{i_m} t(i_1,..,i_M) * v(i_m).
    """
    if not 1 <= mode <= t.order:
        raise ValueError(f"mode {mode} out of range for order {t.order}")
    v = _as_float_array(v).ravel()
    if v.size != t.dims[mode - 1]:
        raise ValueError(
            f"vector length {v.size} does not match dim {t.dims[mode - 1]} of mode {mode}"
        )
    contracted = np.tensordot(t.array(), v, axes=([mode - 1], [0]))
    out = np.expand_dims(contracted, axis=mode - 1)
    return DenseTensor.from_array(out)


def cpd_evaluate(f: FactorSet, idx) -> float:
    """Entry of the factorized tensor at a 1-based multi-index:
    sum_r prod_m A_m(i_m, r)."""
    idx0 = _check_index(idx, f.dims)
    prod = f.factors[0][idx0[0]].copy()
    for A, i in zip(f.factors[1:], idx0[1:]):
        prod *= A[i]
    return float(prod.sum())


def hadamard_row_product(f: FactorSet, idx, skip_mode: int) -> np.ndarray:
    """Elementwise product of the selected factor rows over all modes except
    skip_mode (1-based); the index entry for skip_mode is ignored.

    With a single mode the product is empty and the all-ones row is returned.
    """
    if not 1 <= skip_mode <= f.order:
        raise ValueError(f"skip_mode {skip_mode} out of range for order {f.order}")
    idx = tuple(int(i) for i in idx)
    if len(idx) != f.order:
        raise ValueError(f"index {idx} has wrong length for order {f.order}")
    out = np.ones(f.rank)
    for m, (A, i) in enumerate(zip(f.factors, idx), start=1):
        if m == skip_mode:
            continue
        if not 1 <= i <= A.shape[0]:
            raise ValueError(f"row {i} out of bounds for mode {m} (size {A.shape[0]})")
        out *= A[i - 1]
    return out


def materialize(f: FactorSet, cap: int = MATERIALIZE_CAP) -> DenseTensor:
    """Expand a factorized tensor densely (test oracle; capped)."""
    n = math.prod(f.dims)
    if n > cap:
        raise ResourceLimitError(f"{n} entries exceed the cap of {cap}")
    # outer products accumulated rank by rank, einsum over mode letters
    letters = "abcdefghijklmnop"[: f.order]
    expr = ",".join(f"{c}r" for c in letters) + "->" + letters
    dense = np.einsum(expr, *f.factors)
    return DenseTensor.from_array(dense)
