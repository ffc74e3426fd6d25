"""Composite adaptive identifiers: tensor-then-FIR and FIR-then-tensor.

The tensor-LMS (TLMS) cascade models a static nonlinearity followed by a
linear filter: the factorized lookup tensor maps the M most recent inputs to
one value per sample, a tapped delay line gathers the P most recent tensor
outputs, and an FIR filter adapted by NLMS combines them.  Its backward pass
chains the error through the FIR weights: each mode's update direction is
the FIR-weighted sum of the per-history-sample interpolation gradients,
evaluated with the *current* factors at the *stored* cell queries.

The LMS-tensor (LMST) cascade swaps the blocks for linear-then-nonlinear
systems: an FIR filter runs on the raw input, its output is discretized,
and the tensor interpolates over the M most recent discretized filter
outputs.  Its weight update chains through the interpolation weights (the
fractional position has slope 1/dx in the filter output); the factor update
uses the current sample's query alone.

Both cascades use time-varying normalized steps, one division per mode for
the tensor part plus one for the FIR part, so each first-order error
contraction factor |1 - 2*mu_eff*||direction||^2| stays inside (-1, 1).
"""

from __future__ import annotations

import numpy as np

from .grid import Discretizer
from .models import (
    AdaptationOrderError,
    apply_mode_updates,
    forward_value,
    history_rows,
    leave_one_out,
    mode_scatters,
    scatter_updates,
    _as_discretizers,
)


def normalized_step(mu: float, delta: float, norm_sq: float) -> float:
    """Time-varying step mu / (delta + norm_sq).

    With 0 < mu < 1 and delta > 0 the resulting update satisfies
    2 * step * norm_sq < 2, keeping the first-order contraction factor
    |1 - 2 * step * norm_sq| below 1 whenever norm_sq > 0.
    """
    return mu / (delta + norm_sq)


def tlms_step_size(s_frob_sq: float, mu2: float, delta: float) -> float:
    """Normalized tensor step for the TLMS cascade (per mode)."""
    return normalized_step(mu2, delta, s_frob_sq)


def lmst_step_size(d_norm_sq: float, mu1: float, delta: float) -> float:
    """Normalized FIR step for the LMST cascade."""
    return normalized_step(mu1, delta, d_norm_sq)


class TlmsModel:
    """Tensor-LMS cascade (nonlinear-then-linear identifier)."""

    def __init__(self, factors, disc, fir_len: int, mu1: float, mu2: float,
                 delta: float = 1e-6, interpolated: bool = True,
                 fir_weights=None):
        self.factors = [np.array(A, dtype=float) for A in
                        (factors.factors if hasattr(factors, "factors") else factors)]
        self.discs = _as_discretizers(disc, len(self.factors))
        for mu, name in ((mu1, "mu1"), (mu2, "mu2")):
            if not 0.0 <= mu < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {mu}")
        self.mu1, self.mu2, self.delta = float(mu1), float(mu2), float(delta)
        self.interpolated = bool(interpolated)
        P, M = int(fir_len), len(self.factors)
        if P < 1:
            raise ValueError("FIR length must be positive")
        self.weights = (np.zeros(P) if fir_weights is None
                        else np.array(fir_weights, dtype=float))
        if self.weights.size != P:
            raise ValueError("fir_weights length must equal fir_len")
        self._xwin = np.zeros(M)
        # per-sample history, newest first; slot p holds the cell query and
        # tensor output of sample n-p; pre-start slots carry no query
        self._k0 = np.zeros((P, M), dtype=np.intp)
        self._u = np.zeros((P, M))
        self._valid = np.zeros(P, dtype=bool)
        self._yten = np.zeros(P)
        self._can_adapt = False

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def fir_len(self) -> int:
        return self.weights.size

    def predict(self, x: float) -> float:
        if not np.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        self._xwin[1:] = self._xwin[:-1]
        self._xwin[0] = x
        k0 = np.empty(self.order, dtype=np.intp)
        u = np.empty(self.order)
        for m, d in enumerate(self.discs):
            k0[m], u[m] = d.locate0(self._xwin[m])
        yten = forward_value(self.factors, k0, u, self.interpolated)
        self._k0[1:] = self._k0[:-1]
        self._u[1:] = self._u[:-1]
        self._valid[1:] = self._valid[:-1]
        self._yten[1:] = self._yten[:-1]
        self._k0[0] = k0
        self._u[0] = u
        self._valid[0] = True
        self._yten[0] = yten
        self._can_adapt = True
        return float(np.dot(self.weights, self._yten))

    def _tensor_scatters(self):
        # pre-start slots carry no grid query and contribute nothing
        valid = self._valid
        return mode_scatters(self.factors, self._k0[valid], self._u[valid],
                             self.weights[valid], self.interpolated)

    def adapt(self, e: float) -> None:
        if not self._can_adapt:
            raise AdaptationOrderError("adapt called without a preceding predict")
        scatters = self._tensor_scatters()
        window = self._yten
        power = float(np.dot(window, window))
        apply_mode_updates(self.factors, scatters, e, self.mu2, self.delta)
        self.weights += (2.0 * normalized_step(self.mu1, self.delta, power) * e) * window
        self._can_adapt = False

    def peek_output(self) -> float:
        """Cascade output for the retained queries under current parameters
        (history re-evaluated with the current factors)."""
        y = np.array(self._yten)
        for p in range(self.fir_len):
            if self._valid[p]:
                y[p] = forward_value(self.factors, self._k0[p], self._u[p],
                                     self.interpolated)
        return float(np.dot(self.weights, y))

    def loss_gradients(self, e: float):
        """dJ/dA per mode and dJ/dw for J = e^2 at the retained history."""
        scatters = self._tensor_scatters()
        return {
            "factors": [(rows, -2.0 * e * S) for rows, S in scatters],
            "weights": -2.0 * e * self._yten,
        }


class LmstModel:
    """LMS-tensor cascade (linear-then-nonlinear identifier)."""

    def __init__(self, factors, disc, fir_len: int, mu1: float, mu2: float,
                 delta: float = 1e-6, interpolated: bool = True,
                 fir_weights=None):
        self.factors = [np.array(A, dtype=float) for A in
                        (factors.factors if hasattr(factors, "factors") else factors)]
        self.discs = _as_discretizers(disc, len(self.factors))
        # queries shift from mode to mode as the filter-output stream ages,
        # so every mode must share one grid geometry
        if any(d != self.discs[0] for d in self.discs[1:]):
            raise ValueError("LMST requires identical discretizers for all modes")
        for mu, name in ((mu1, "mu1"), (mu2, "mu2")):
            if not 0.0 <= mu < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {mu}")
        self.mu1, self.mu2, self.delta = float(mu1), float(mu2), float(delta)
        self.interpolated = bool(interpolated)
        P, M = int(fir_len), len(self.factors)
        if P < 1:
            raise ValueError("FIR length must be positive")
        self.weights = (np.zeros(P) if fir_weights is None
                        else np.array(fir_weights, dtype=float))
        if self.weights.size != P:
            raise ValueError("fir_weights length must equal fir_len")
        # raw-input line long enough for the regressors of every mode lag
        self._xbuf = np.zeros(P + M - 1)
        # discretized filter-output history, newest first; pre-start filter
        # outputs are zero, hence center-cell queries
        self._k0 = np.zeros(M, dtype=np.intp)
        self._u = np.zeros(M)
        for m, d in enumerate(self.discs):
            self._k0[m], self._u[m] = d.locate0(0.0)
        self._can_adapt = False

    @property
    def order(self) -> int:
        return len(self.factors)

    @property
    def fir_len(self) -> int:
        return self.weights.size

    def predict(self, x: float) -> float:
        if not np.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        self._xbuf[1:] = self._xbuf[:-1]
        self._xbuf[0] = x
        ylms = float(np.dot(self.weights, self._xbuf[: self.fir_len]))
        self._k0[1:] = self._k0[:-1]
        self._u[1:] = self._u[:-1]
        self._k0[0], self._u[0] = self.discs[0].locate0(ylms)
        self._can_adapt = True
        return forward_value(self.factors, self._k0, self._u, self.interpolated)

    def _weight_direction(self, g: np.ndarray) -> np.ndarray:
        """Chain of the loss through the discretized filter outputs.

        g: (M, R) per-mode rank products excluding that mode.  Mode m
        contributes sum_r (A_m(k+1, r) - A_m(k, r)) * g[m, r] (divided by dx
        for the interpolated variant, where the fractional weight moves at
        slope 1/dx in the filter output) times the regressor lagged m-1.
        """
        P = self.fir_len
        d = np.zeros(P)
        for m, A in enumerate(self.factors):
            diff = A[self._k0[m] + 1] - A[self._k0[m]]
            coeff = float(np.dot(diff, g[m]))
            if self.interpolated:
                coeff /= self.discs[m].delta_x
            d += coeff * self._xbuf[m: m + P]
        return d

    def adapt(self, e: float) -> None:
        if not self._can_adapt:
            raise AdaptationOrderError("adapt called without a preceding predict")
        k0, u = self._k0[None, :], self._u[None, :]
        g = leave_one_out(history_rows(self.factors, k0, u, self.interpolated))
        scatters = scatter_updates(k0, u, g, np.ones(1), self.interpolated)
        d = self._weight_direction(g[:, 0, :])
        dsq = float(np.dot(d, d))
        apply_mode_updates(self.factors, scatters, e, self.mu2, self.delta)
        self.weights += (2.0 * normalized_step(self.mu1, self.delta, dsq) * e) * d
        self._can_adapt = False

    def peek_output(self) -> float:
        """Full re-evaluation from the retained raw inputs under current
        parameters (every mode's filter output recomputed)."""
        P = self.fir_len
        k0 = np.empty(self.order, dtype=np.intp)
        u = np.empty(self.order)
        for m, disc in enumerate(self.discs):
            ylms = float(np.dot(self.weights, self._xbuf[m: m + P]))
            k0[m], u[m] = disc.locate0(ylms)
        return forward_value(self.factors, k0, u, self.interpolated)

    def loss_gradients(self, e: float):
        """dJ/dA per mode and dJ/dw for J = e^2 at the retained state."""
        k0, u = self._k0[None, :], self._u[None, :]
        g = leave_one_out(history_rows(self.factors, k0, u, self.interpolated))
        scatters = scatter_updates(k0, u, g, np.ones(1), self.interpolated)
        d = self._weight_direction(g[:, 0, :])
        return {
            "factors": [(rows, -2.0 * e * S) for rows, S in scatters],
            "weights": -2.0 * e * d,
        }
