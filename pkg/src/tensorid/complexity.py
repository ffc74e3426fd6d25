"""Per-sample arithmetic cost: closed-form formulas and runtime counters.

`cost` evaluates the closed-form multiplication/addition/division counts per
processed sample for each algorithm, split into the estimation (forward) and
update (backward) step.  Parameters: P = FIR length, R = rank, M = tensor
order, I = grid rows per mode.  Divisions are the step-size normalizations
(one per tensor mode, plus one for an FIR stage).

`counted_forward` re-runs a model's forward path through instrumented scalar
arithmetic and reports the real multiply/add/divide counts.  For the LMS and
classical lookup paths these match the closed forms exactly.  For the
interpolated paths the closed-form forward row (2^M*M*R multiplications and
one fewer addition) corresponds to no actual evaluation order -- it prices
the query as one long multiply-accumulate chain; the implemented factored
order really costs R(3M-1) multiplications and R(M+1)-1 additions, agreeing
with the closed form exactly when M = 1.  The counters report the real
counts; see the tests for the agreement/disagreement catalog.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cascades import LmstModel, TlmsModel
from .models import DecomposedInterpTensor, LmsModel, TensorOnlyModel

ALGORITHMS = ("lms", "tensor_only", "itensor_only", "tlms", "lmst", "itlms", "ilmst")


@dataclass(frozen=True)
class OpCount:
    """Multiplications/additions/divisions, forward + backward split."""

    fwd_mult: int = 0
    fwd_add: int = 0
    fwd_div: int = 0
    bwd_mult: int = 0
    bwd_add: int = 0
    bwd_div: int = 0

    @property
    def mult(self) -> int:
        return self.fwd_mult + self.bwd_mult

    @property
    def add(self) -> int:
        return self.fwd_add + self.bwd_add

    @property
    def div(self) -> int:
        return self.fwd_div + self.bwd_div

    @property
    def forward(self) -> tuple[int, int, int]:
        return (self.fwd_mult, self.fwd_add, self.fwd_div)

    @property
    def backward(self) -> tuple[int, int, int]:
        return (self.bwd_mult, self.bwd_add, self.bwd_div)

    @property
    def totals(self) -> tuple[int, int, int]:
        return (self.mult, self.add, self.div)


def _require(kind: str, **kw) -> dict:
    missing = [k for k, v in kw.items() if v is None]
    if missing:
        raise ValueError(f"{kind} cost needs parameters {missing}")
    return {k: int(v) for k, v in kw.items()}


def cost(algorithm: str, P: int | None = None, R: int | None = None,
         M: int | None = None, I: int | None = None) -> OpCount:
    """Closed-form per-sample operation counts for one algorithm."""
    if algorithm == "lms":
        p = _require(algorithm, P=P)["P"]
        return OpCount(p, p - 1, 0, 2 * p + 1, 2 * p, 1)
    if algorithm == "tensor_only":
        v = _require(algorithm, R=R, M=M, I=I)
        R, M, I = v["R"], v["M"], v["I"]
        return OpCount((M - 1) * R, R - 1, 0,
                       M * R * (1 + R * (M - 1) + I), M * R * (1 + I), M)
    if algorithm == "itensor_only":
        v = _require(algorithm, R=R, M=M, I=I)
        R, M, I = v["R"], v["M"], v["I"]
        return OpCount(2 ** M * M * R, 2 ** M * M * R - 1, 0,
                       2 * M + R * M * (1 + 2 ** (M - 1) * (2 * M - 3) + I),
                       M * R * (2 ** (M - 1) + I), M)
    if algorithm == "tlms":
        v = _require(algorithm, P=P, R=R, M=M, I=I)
        P, R, M, I = v["P"], v["R"], v["M"], v["I"]
        return OpCount(P + R * (M - 1), P + R - 2, 0,
                       M * R * (P * (M - 1) + I) + 2 * P * (M + 1) + 1,
                       2 * P + M * R * I * (P + 1), 1 + M)
    if algorithm == "lmst":
        v = _require(algorithm, P=P, R=R, M=M, I=I)
        P, R, M, I = v["P"], v["R"], v["M"], v["I"]
        return OpCount(P + R * (M - 1), P + R - 2, 0,
                       1 + 2 * P + M * (P + 1 + R * (2 * M - 2 + I)),
                       M * (R * (3 + I) + P - 1) + P, 1 + M)
    if algorithm == "itlms":
        v = _require(algorithm, P=P, R=R, M=M, I=I)
        P, R, M, I = v["P"], v["R"], v["M"], v["I"]
        return OpCount(2 ** M * R * M + P, 2 ** M * R * M + P - 2, 0,
                       M * R * P * (3 + 2 ** (M - 1) * (2 * M - 3))
                       + I * R * (M + 1) + M * M + 2 * P,
                       I * R * (1 + M)
                       + P * (2 ** (2 * M - 1) + 2 ** (M - 1) * (1 - R) + 2) - M,
                       1 + M)
    if algorithm == "ilmst":
        v = _require(algorithm, P=P, R=R, M=M, I=I)
        P, R, M, I = v["P"], v["R"], v["M"], v["I"]
        return OpCount(2 ** M * R * M + P, 2 ** M * R * M + P - 2, 0,
                       P * (M + 2) + 2 * (M + 1)
                       + M * R * (2 + 2 ** M * (2 * M - 3) + I),
                       2 * P + M * R * (2 ** (M - 1) * 3 + I + 1) - 1,
                       1 + M)
    raise ValueError(f"unknown algorithm {algorithm!r}")


class OpCounter:
    """Instrumented scalar arithmetic: every mul/add/div is one count."""

    def __init__(self):
        self.mult = 0
        self.add = 0
        self.div = 0

    def mul(self, a: float, b: float) -> float:
        self.mult += 1
        return a * b

    def plus(self, a: float, b: float) -> float:
        self.add += 1
        return a + b

    def divide(self, a: float, b: float) -> float:
        self.div += 1
        return a / b

    def dot(self, xs, ys) -> float:
        """Inner product: n multiplications, n-1 additions."""
        total = self.mul(xs[0], ys[0])
        for a, b in zip(xs[1:], ys[1:]):
            total = self.plus(total, self.mul(a, b))
        return total

    def counts(self) -> tuple[int, int, int]:
        return (self.mult, self.add, self.div)


def _counted_lookup(factors, k0, c: OpCounter) -> float:
    """Classical rank sum at one index: per rank M-1 mults, summed R-1 adds."""
    R = factors[0].shape[1]
    total = None
    for r in range(R):
        term = factors[0][k0[0], r]
        for m in range(1, len(factors)):
            term = c.mul(term, factors[m][k0[m], r])
        total = term if total is None else c.plus(total, term)
    return total


def _counted_interp(factors, k0, u, c: OpCounter) -> float:
    """Factored interpolated rank sum: per (rank, mode) one convex
    combination (2 mults, 1 add), per rank M-1 combining mults, R-1 adds."""
    R = factors[0].shape[1]
    total = None
    for r in range(R):
        term = None
        for m, A in enumerate(factors):
            cm = c.plus(c.mul(A[k0[m], r], 1.0 - u[m]), c.mul(A[k0[m] + 1, r], u[m]))
            term = cm if term is None else c.mul(term, cm)
        total = term if total is None else c.plus(total, term)
    return total


def counted_forward(model, x) -> tuple[float, OpCount]:
    """Run one forward pass through instrumented arithmetic.

    The model's own state is read but never advanced; `x` is the newest
    sample (scalar models) or input window (tensor blocks).  Returns the
    output and the forward-only OpCount; the value matches the fast path up
    to floating-point reassociation.
    """
    c = OpCounter()
    if isinstance(model, LmsModel):
        win = np.empty_like(model._win)
        win[1:] = model._win[:-1]
        win[0] = x
        out = c.dot(model.filter.weights, win)
        return float(out), OpCount(*c.counts())
    if isinstance(model, TensorOnlyModel):
        win = np.empty_like(model._win)
        win[1:] = model._win[:-1]
        win[0] = x
        return counted_forward(model.core, win)
    if isinstance(model, DecomposedInterpTensor):
        xs = np.ravel(np.asarray(x, float))
        k0 = np.empty(model.order, dtype=np.intp)
        u = np.empty(model.order)
        for m, d in enumerate(model.discs):
            k0[m], u[m] = d.locate0(xs[m])
        if model.interpolated:
            out = _counted_interp(model.factors, k0, u, c)
        else:
            out = _counted_lookup(model.factors, k0, c)
        return float(out), OpCount(*c.counts())
    if isinstance(model, TlmsModel):
        xwin = np.empty_like(model._xwin)
        xwin[1:] = model._xwin[:-1]
        xwin[0] = x
        k0 = np.empty(model.order, dtype=np.intp)
        u = np.empty(model.order)
        for m, d in enumerate(model.discs):
            k0[m], u[m] = d.locate0(xwin[m])
        if model.interpolated:
            yten = _counted_interp(model.factors, k0, u, c)
        else:
            yten = _counted_lookup(model.factors, k0, c)
        window = np.empty_like(model._yten)
        window[1:] = model._yten[:-1]
        window[0] = yten
        out = c.dot(model.weights, window)
        return float(out), OpCount(*c.counts())
    if isinstance(model, LmstModel):
        P = model.fir_len
        xbuf = np.empty_like(model._xbuf)
        xbuf[1:] = model._xbuf[:-1]
        xbuf[0] = x
        ylms = c.dot(model.weights, xbuf[:P])
        k0 = np.empty(model.order, dtype=np.intp)
        u = np.empty(model.order)
        k0[1:] = model._k0[:-1]
        u[1:] = model._u[:-1]
        k0[0], u[0] = model.discs[0].locate0(ylms)
        if model.interpolated:
            out = _counted_interp(model.factors, k0, u, c)
        else:
            out = _counted_lookup(model.factors, k0, c)
        return float(out), OpCount(*c.counts())
    raise ValueError(f"no instrumented forward path for {type(model).__name__}")
