"""Single-block adaptive learners.

All learners share one contract: `predict` consumes the newest sample(s) and
returns the current estimate, then `adapt` applies one normalized gradient
step using exactly the quantities retained by that predict.  The two calls
alternate strictly; instances are single-owner mutable state.

The factor-update machinery is shared between the tensor-only learner and
the cascade models (cascades.py): gradients for a whole history of grid
queries are evaluated against the current factors in one vectorized pass,
scattered into per-mode sparse row updates, and applied with one normalized
step per mode (step = mu / (delta + squared Frobenius norm of that mode's
accumulated update direction)).
"""

from __future__ import annotations

import io

import numpy as np

from .grid import Discretizer
from .tensors import FactorSet


class AdaptationOrderError(RuntimeError):
    """predict/adapt called out of order."""


# ---------------------------------------------------------------------------
# shared factor-gradient machinery


def history_rows(factors, k0, u, interpolated: bool) -> np.ndarray:
    """Active factor rows for a history of grid queries.

    factors: M matrices (I_m, R); k0: (P, M) 0-based lower rows; u: (P, M).
    Interpolated: per-mode convex combination of the two cell rows.
    Classical: the lower row alone (pure table lookup).
    Returns c of shape (M, P, R).
    """
    M = len(factors)
    P, R = k0.shape[0], factors[0].shape[1]
    c = np.empty((M, P, R))
    for m, A in enumerate(factors):
        lo = A[k0[:, m]]
        if interpolated:
            um = u[:, m][:, None]
            c[m] = lo * (1.0 - um) + A[k0[:, m] + 1] * um
        else:
            c[m] = lo
    return c


def leave_one_out(c: np.ndarray) -> np.ndarray:
    """g[m] = elementwise product of c over all modes except m.

    c, g: (M, P, R).  A single mode yields the empty product, all ones.
    """
    M = c.shape[0]
    if M == 1:
        return np.ones_like(c)
    pre = np.ones_like(c)
    pre[1:] = np.cumprod(c[:-1], axis=0)
    suf = np.ones_like(c)
    suf[:-1] = np.cumprod(c[:0:-1], axis=0)[::-1]
    return pre * suf


def scatter_updates(k0, u, g, coeffs, interpolated: bool):
    """Accumulate per-mode row updates over the query history.

    coeffs: (P,) per-history-sample scale (FIR weights for cascades, ones
    for single-sample learners).  For each mode, history term p contributes
    coeffs[p] * g[m, p] to row k0[p, m] split by the interpolation weights
    ((1-u) to the lower row, u to the upper); the classical variant puts the
    whole contribution on the lower row.

    Returns a list over modes of (rows, S): unique touched 0-based rows and
    the accumulated (len(rows), R) update block.
    """
    out = []
    M = k0.shape[1]
    for m in range(M):
        base = g[m] * coeffs[:, None]
        if interpolated:
            um = u[:, m][:, None]
            rows_all = np.concatenate([k0[:, m], k0[:, m] + 1])
            vals_all = np.concatenate([base * (1.0 - um), base * um])
        else:
            rows_all = k0[:, m]
            vals_all = base
        rows, inv = np.unique(rows_all, return_inverse=True)
        S = np.zeros((rows.size, vals_all.shape[1]))
        np.add.at(S, inv, vals_all)
        out.append((rows, S))
    return out


def mode_scatters(factors, k0, u, coeffs, interpolated: bool):
    """history_rows -> leave_one_out -> scatter_updates in one call."""
    g = leave_one_out(history_rows(factors, k0, u, interpolated))
    return scatter_updates(k0, u, g, coeffs, interpolated)


def apply_mode_updates(factors, scatters, e: float, mu: float, delta: float):
    """A_m[rows] += 2 * mu_eff * e * S_m, normalized per mode:
    mu_eff = (mu / M) / (delta + ||S_m||_F^2).

    The per-mode budget mu/M keeps the joint step contractive: each mode's
    first-order error reduction is at most 2*mu/M, so the combined factor
    over all M simultaneously updated modes stays within |1 - 2*mu| < 1 for
    mu in (0, 1), which a bare per-mode mu cannot guarantee once M > 1.
    All norms are taken before any factor is touched (simultaneous update);
    rows outside the scatter are never written.
    """
    budget = mu / len(scatters)
    alphas = []
    for rows, S in scatters:
        nsq = float((S * S).sum())
        alphas.append(2.0 * (budget / (delta + nsq)) * e)
    for A, (rows, S), alpha in zip(factors, scatters, alphas):
        A[rows] += alpha * S


def forward_value(factors, k0row, urow, interpolated: bool) -> float:
    """Tensor output at one query: rank sum of per-mode active rows."""
    prod = None
    for m, A in enumerate(factors):
        if interpolated:
            um = urow[m]
            c = A[k0row[m]] * (1.0 - um) + A[k0row[m] + 1] * um
        else:
            c = A[k0row[m]]
        prod = c.copy() if prod is None else prod * c
    return float(prod.sum())


def _as_discretizers(disc, modes: int) -> tuple[Discretizer, ...]:
    if isinstance(disc, Discretizer):
        return (disc,) * modes
    disc = tuple(disc)
    if len(disc) != modes:
        raise ValueError(f"need one discretizer per mode ({modes}), got {len(disc)}")
    return disc


def _locate_window(discs, xs) -> tuple[np.ndarray, np.ndarray]:
    k0 = np.empty(len(discs), dtype=np.intp)
    u = np.empty(len(discs))
    for m, (d, x) in enumerate(zip(discs, xs)):
        k0[m], u[m] = d.locate0(x)
    return k0, u


# ---------------------------------------------------------------------------
# plain (N)LMS


class LmsFilter:
    """FIR filter adapted by normalized LMS.

    w += 2 * mu/(delta + ||regressor||^2) * e * regressor
    """

    def __init__(self, taps, mu: float, delta: float = 1e-6):
        if np.isscalar(taps):
            self.weights = np.zeros(int(taps))
        else:
            self.weights = np.array(taps, dtype=float)
        if self.weights.ndim != 1 or self.weights.size < 1:
            raise ValueError("taps must be a positive length or a 1-d vector")
        if not 0.0 <= mu < 1.0:
            raise ValueError(f"mu must lie in [0, 1), got {mu}")
        self.mu = float(mu)
        self.delta = float(delta)

    @property
    def length(self) -> int:
        return self.weights.size

    def predict(self, window) -> float:
        """Inner product with the newest-first sample window."""
        window = np.ravel(np.asarray(window, dtype=float))
        if window.size != self.length:
            raise ValueError(f"window length {window.size} != filter length {self.length}")
        return float(np.dot(self.weights, window))

    def adapt(self, e: float, regressor) -> None:
        regressor = np.ravel(np.asarray(regressor, float))
        if regressor.size != self.length:
            raise ValueError(
                f"regressor length {regressor.size} != filter length {self.length}"
            )
        power = float(np.dot(regressor, regressor))
        self.weights += (2.0 * (self.mu / (self.delta + power)) * e) * regressor


# ---------------------------------------------------------------------------
# dense-grid interpolated learner


class BasicInterpTensor:
    """Interpolated lookup tensor with a dense grid of control points.

    predict discretizes the M inputs, reads the surrounding 2^M corner cell
    and interpolates; adapt moves only those corners by 2*mu*e times the
    corner weight product (plain unnormalized step).
    """

    def __init__(self, grid, disc, mu: float, delta: float = 1e-6):
        self.grid = np.array(grid, dtype=float)
        if self.grid.ndim < 1 or any(s < 2 for s in self.grid.shape):
            raise ValueError("grid must have extent >= 2 in every mode")
        self.discs = _as_discretizers(disc, self.grid.ndim)
        self.mu = float(mu)
        self.delta = float(delta)  # accepted for interface uniformity; unused
        self._cell = None
        self._can_adapt = False

    @property
    def order(self) -> int:
        return self.grid.ndim

    def predict(self, xs) -> float:
        xs = np.ravel(np.asarray(xs, float))
        if xs.size != self.order:
            raise ValueError(f"need {self.order} inputs, got {xs.size}")
        if not np.all(np.isfinite(xs)):
            raise ValueError("inputs must be finite")
        k0, u = _locate_window(self.discs, xs)
        weights = np.ones(1)
        for um in u:
            weights = np.multiply.outer(weights, np.array([1.0 - um, um]))
        weights = weights.reshape((2,) * self.order)
        sl = tuple(slice(k, k + 2) for k in k0)
        self._cell = (sl, weights)
        self._can_adapt = True
        return float((self.grid[sl] * weights).sum())

    def adapt(self, e: float) -> None:
        if not self._can_adapt:
            raise AdaptationOrderError("adapt called without a preceding predict")
        sl, weights = self._cell
        self.grid[sl] += (2.0 * self.mu * e) * weights
        self._can_adapt = False

    def peek_output(self) -> float:
        """Re-evaluate the last query against the current grid."""
        sl, weights = self._cell
        return float((self.grid[sl] * weights).sum())

    def loss_gradients(self, e: float):
        """dJ/d(corner) for J = e^2 over the active cell."""
        sl, weights = self._cell
        return {"cell": sl, "grid": -2.0 * e * weights, "weights": None}


# ---------------------------------------------------------------------------
# factorized learner (classical table lookup or interpolated)


class DecomposedInterpTensor:
    """Rank-R factorized lookup tensor adapted by normalized SGD.

    interpolated=True: multilinear interpolation between the 2^M cell
    corners (forward in factored order, backward moving both active rows per
    mode).  interpolated=False: pure table lookup at the discretized index,
    moving one row per mode -- the classical baseline.
    """

    def __init__(self, factors, disc, mu: float, delta: float = 1e-6,
                 interpolated: bool = True):
        if isinstance(factors, FactorSet):
            factors = factors.factors
        self.factors = [np.array(A, dtype=float) for A in factors]
        ranks = {A.shape[1] for A in self.factors}
        if len(ranks) != 1:
            raise ValueError("factors must share one rank")
        if not 0.0 <= mu < 1.0:
            raise ValueError(f"mu must lie in [0, 1), got {mu}")
        self.discs = _as_discretizers(disc, len(self.factors))
        self.mu = float(mu)
        self.delta = float(delta)
        self.interpolated = bool(interpolated)
        self._k0 = None  # (1, M) retained query
        self._u = None
        self._one = np.ones(1)
        self._can_adapt = False

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    def factor_set(self) -> FactorSet:
        return FactorSet(tuple(np.array(A) for A in self.factors))

    def predict(self, xs) -> float:
        xs = np.ravel(np.asarray(xs, float))
        if xs.size != self.order:
            raise ValueError(f"need {self.order} inputs, got {xs.size}")
        if not np.all(np.isfinite(xs)):
            raise ValueError("inputs must be finite")
        k0, u = _locate_window(self.discs, xs)
        self._k0 = k0[None, :]
        self._u = u[None, :]
        self._can_adapt = True
        return forward_value(self.factors, k0, u, self.interpolated)

    def adapt(self, e: float) -> None:
        if not self._can_adapt:
            raise AdaptationOrderError("adapt called without a preceding predict")
        scatters = mode_scatters(self.factors, self._k0, self._u, self._one,
                                 self.interpolated)
        apply_mode_updates(self.factors, scatters, e, self.mu, self.delta)
        self._can_adapt = False

    def peek_output(self) -> float:
        """Re-evaluate the last query against the current factors."""
        return forward_value(self.factors, self._k0[0], self._u[0], self.interpolated)

    def loss_gradients(self, e: float):
        """dJ/dA per mode for J = e^2: list of (rows, block)."""
        scatters = mode_scatters(self.factors, self._k0, self._u, self._one,
                                 self.interpolated)
        return {
            "factors": [(rows, -2.0 * e * S) for rows, S in scatters],
            "weights": None,
        }


# ---------------------------------------------------------------------------
# streaming adapters (one scalar sample in per step)


class LmsModel:
    """Plain NLMS on a tapped delay line of the raw input."""

    def __init__(self, length: int, mu: float, delta: float = 1e-6):
        self.filter = LmsFilter(length, mu, delta)
        self._win = np.zeros(length)
        self._can_adapt = False

    def predict(self, x: float) -> float:
        if not np.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        self._win[1:] = self._win[:-1]
        self._win[0] = x
        self._can_adapt = True
        return self.filter.predict(self._win)

    def adapt(self, e: float) -> None:
        if not self._can_adapt:
            raise AdaptationOrderError("adapt called without a preceding predict")
        self.filter.adapt(e, self._win)
        self._can_adapt = False

    def peek_output(self) -> float:
        return self.filter.predict(self._win)


class TensorOnlyModel:
    """Factorized lookup learner fed the M most recent input samples
    (mode m sees the sample m-1 steps back)."""

    def __init__(self, core: DecomposedInterpTensor):
        self.core = core
        self._win = np.zeros(core.order)

    def predict(self, x: float) -> float:
        if not np.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        self._win[1:] = self._win[:-1]
        self._win[0] = x
        return self.core.predict(self._win)

    def adapt(self, e: float) -> None:
        self.core.adapt(e)

    def peek_output(self) -> float:
        return self.core.peek_output()

    @property
    def factors(self):
        return self.core.factors


# ---------------------------------------------------------------------------
# state snapshots (text, round-trip exact)


def snapshot_state(obj) -> str:
    """Serialize learner state: factor matrices in mode order (rows in row
    order, repr floats), then FIR weights when present, then a dense grid
    when present."""
    out = io.StringIO()
    out.write("tensorid-state 1\n")
    factors = getattr(obj, "factors", None)
    if isinstance(obj, FactorSet):
        factors = obj.factors
    if factors is not None:
        out.write(f"factors {len(factors)} {factors[0].shape[1]}\n")
        for m, A in enumerate(factors, start=1):
            out.write(f"mode {m} {A.shape[0]}\n")
            for row in A:
                out.write(" ".join(repr(float(v)) for v in row) + "\n")
    weights = getattr(obj, "weights", None)
    if weights is None and hasattr(obj, "filter"):
        weights = obj.filter.weights
    if weights is not None:
        out.write(f"weights {len(weights)}\n")
        out.write(" ".join(repr(float(v)) for v in weights) + "\n")
    grid = getattr(obj, "grid", None)
    if grid is not None:
        out.write("grid " + " ".join(str(s) for s in grid.shape) + "\n")
        out.write(" ".join(repr(float(v)) for v in grid.ravel()) + "\n")
    return out.getvalue()


def _parse_floats(line: str) -> np.ndarray:
    return np.array([float(tok) for tok in line.split()])


def parse_snapshot(text: str) -> dict:
    """Inverse of snapshot_state; returns {'factors': [...] | None,
    'weights': array | None, 'grid': array | None}."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("tensorid-state"):
        raise ValueError("not a tensorid state snapshot")
    state = {"factors": None, "weights": None, "grid": None}
    i = 1
    while i < len(lines):
        head = lines[i].split()
        if head[0] == "factors":
            n_modes, rank = int(head[1]), int(head[2])
            i += 1
            factors = []
            for _ in range(n_modes):
                _, _, size = lines[i].split()
                i += 1
                rows = [_parse_floats(lines[i + r]) for r in range(int(size))]
                i += int(size)
                factors.append(np.vstack(rows).reshape(int(size), rank))
            state["factors"] = factors
        elif head[0] == "weights":
            i += 1
            state["weights"] = _parse_floats(lines[i])
            i += 1
        elif head[0] == "grid":
            shape = tuple(int(s) for s in head[1:])
            i += 1
            state["grid"] = _parse_floats(lines[i]).reshape(shape)
            i += 1
        else:
            raise ValueError(f"unknown snapshot section {head[0]!r}")
    return state
