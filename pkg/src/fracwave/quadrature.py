"""Deterministic and Monte Carlo integration over singular power-law measures,
plus the log2 growth fit used to call divergence.
"""

import heapq
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import rng
from .errors import DegenerateInput, DomainError, NonConvergence
from .spectral_core import MollifierSpec, mollifier_ft

# 15-point Kronrod rule with its embedded 7-point Gauss rule on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


# ---------------------------------------------------------------- fixed rules

@lru_cache(maxsize=64)
def gauss_rule(q):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(q)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_rule(edges, q):
    """Composite Gauss-Legendre rule with ``q`` nodes on every panel."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_rule(q)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def geometric_edges(a, b, per_octave=2):
    """Edges from a to b (0 < a < b) with ``per_octave`` panels per doubling."""
    if b <= a:
        return np.array([a, b]) if b == a else np.array([a])
    k = max(1, int(np.ceil(per_octave * np.log2(b / a))))
    return np.geomspace(a, b, k + 1)


def graded_rule(a, b, q, beta=0.0, min_ratio=1e-8, per_octave=2):
    """Rule on [a, b] graded toward the endpoint ``a``.

    Panels shrink geometrically toward ``a`` down to ``min_ratio * (b - a)``;
    the innermost panel uses the power substitution that removes a
    ``|x - a|^(-beta)`` factor (beta < 1, either sign).
    """
    length = b - a
    if length <= 0:
        return np.empty(0), np.empty(0)
    inner = length * min_ratio
    edges = a + np.concatenate([[0.0], geometric_edges(inner, length, per_octave)])
    x, w = panel_rule(edges[1:], q)
    u, uw = gauss_rule(q)
    u = 0.5 * (u + 1.0)
    uw = 0.5 * np.asarray(uw)
    p = 1.0 / (1.0 - beta)
    x0 = a + inner * u ** p
    w0 = inner * p * u ** (p - 1.0) * uw
    return np.concatenate([x0, x]), np.concatenate([w0, w])


# ---------------------------------------------------------- adaptive cubature

@dataclass(frozen=True)
class IntegrationDomain:
    """Union of disjoint axis-aligned boxes.

    ``singular_axes`` maps an axis to the exponent beta of a ``|x|^(-beta)``
    singularity on the face ``x = 0`` (a plain set means the exponent is
    unknown). With ``graded`` set, boxes touching a singular face are mapped by
    the power substitution matching beta.
    """

    dim: int
    boxes: tuple
    singular_axes: dict = field(default_factory=dict)
    graded: bool = True

    def __post_init__(self):
        boxes = tuple(tuple((float(lo), float(hi)) for lo, hi in box) for box in self.boxes)
        for box in boxes:
            if len(box) != self.dim:
                raise DomainError("box dimension does not match the domain")
        axes = self.singular_axes
        if not isinstance(axes, dict):
            axes = {int(i): None for i in axes}
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "singular_axes", dict(axes))

    @classmethod
    def interval(cls, a, b, singular_beta=None):
        axes = {} if singular_beta is None else {0: singular_beta}
        return cls(1, (((a, b),),), axes)

    def volume(self):
        return float(sum(np.prod([hi - lo for lo, hi in box]) for box in self.boxes))


class QuadratureResult(NamedTuple):
    value: complex
    abs_error_estimate: float
    evaluations: int


class _Cell:
    __slots__ = ("box", "value", "error", "axis_errors")

    def __init__(self, box, value, error, axis_errors):
        self.box, self.value, self.error, self.axis_errors = box, value, error, axis_errors


def _split_at_zero(box, axes):
    pieces = [box]
    for ax in axes:
        nxt = []
        for b in pieces:
            lo, hi = b[ax]
            if lo < 0 < hi:
                nxt.append(b[:ax] + ((lo, 0.0),) + b[ax + 1:])
                nxt.append(b[:ax] + ((0.0, hi),) + b[ax + 1:])
            else:
                nxt.append(b)
        pieces = nxt
    return pieces


def adaptive_integrate(f, domain, tol, max_evaluations=2_000_000, rel_tol=0.0):
    """Globally adaptive tensor Gauss-Kronrod cubature.

    ``f`` is vectorized and called as ``f(x0, x1, ...)`` with one array per
    axis. Boxes touching a singular face are first mapped with
    ``x = x_face + (x_far - x_face) * u**p``, ``p = 1/(1 - beta)``, which makes a
    pure power singularity smooth; the remaining work is ordinary bisection of
    the cell with the largest error along its worst axis.
    """
    if not domain.boxes or domain.volume() == 0:
        raise DomainError("integration domain is empty")
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    dim = domain.dim
    if dim > 3:
        raise DomainError("adaptive cubature supports at most three dimensions")

    maps = []
    for box in domain.boxes:
        for piece in _split_at_zero(box, domain.singular_axes):
            maps.append(_box_map(piece, domain))

    evals = 0
    counter = itertools.count()
    heap = []
    total_value = 0.0
    total_error = 0.0

    def evaluate(mapping, ubox):
        nonlocal evals
        value, error, axis_err, n = _tensor_gk(f, mapping, ubox, dim)
        evals += n
        return _Cell(ubox, value, error, axis_err)

    for mapping in maps:
        cell = evaluate(mapping, tuple((0.0, 1.0) for _ in range(dim)))
        heapq.heappush(heap, (-cell.error, next(counter), mapping, cell))
        total_value += cell.value
        total_error += cell.error

    while total_error > max(tol, rel_tol * abs(total_value)):
        if evals >= max_evaluations:
            raise NonConvergence(
                f"adaptive cubature stopped after {evals} evaluations with error {total_error:.3g}",
                best_estimate=total_value, error_estimate=total_error,
            )
        _, _, mapping, cell = heapq.heappop(heap)
        ax = int(np.argmax(cell.axis_errors))
        lo, hi = cell.box[ax]
        mid = 0.5 * (lo + hi)
        total_value -= cell.value
        total_error -= cell.error
        for half in ((lo, mid), (mid, hi)):
            sub = cell.box[:ax] + (half,) + cell.box[ax + 1:]
            child = evaluate(mapping, sub)
            heapq.heappush(heap, (-child.error, next(counter), mapping, child))
            total_value += child.value
            total_error += child.error
        # guard against drift of the running sums
        if next(counter) % 512 == 0:
            total_value = sum(c.value for _, _, _, c in heap)
            total_error = sum(c.error for _, _, _, c in heap)

    total_value = sum(c.value for _, _, _, c in heap)
    total_error = sum(c.error for _, _, _, c in heap)
    if isinstance(total_value, complex) and total_value.imag == 0:
        total_value = total_value.real
    return QuadratureResult(total_value, float(total_error), evals)


def _box_map(box, domain):
    """Per-axis maps from the unit cube onto ``box``."""
    axes = []
    for ax, (lo, hi) in enumerate(box):
        p = 1.0
        face = None
        if domain.graded and ax in domain.singular_axes:
            beta = domain.singular_axes[ax]
            if lo == 0.0 or hi == 0.0:
                face = lo if lo == 0.0 else hi
                p = 1.0 / (1.0 - beta) if beta is not None and beta > 0 else 1.0
        if face is None:
            axes.append((lo, hi - lo, 1.0))
        else:
            far = hi if face == lo else lo
            axes.append((face, far - face, p))
    return tuple(axes)


def _tensor_gk(f, mapping, ubox, dim):
    nodes, jac = [], []
    for ax in range(dim):
        ulo, uhi = ubox[ax]
        half = 0.5 * (uhi - ulo)
        u = ulo + half * (KRONROD_NODES + 1.0)
        origin, span, p = mapping[ax]
        x = origin + span * u ** p
        j = abs(span) * p * u ** (p - 1.0) * half
        nodes.append(x)
        jac.append(j)
    grids = np.meshgrid(*nodes, indexing="ij")
    vals = np.asarray(f(*[g.ravel() for g in grids])).reshape((15,) * dim)
    for ax in range(dim):
        shape = [1] * dim
        shape[ax] = 15
        vals = vals * jac[ax].reshape(shape)
    value = _contract(vals, [KRONROD_WEIGHTS] * dim)
    axis_err = []
    for ax in range(dim):
        ws = [KRONROD_WEIGHTS] * dim
        ws[ax] = GAUSS_WEIGHTS
        axis_err.append(abs(value - _contract(vals, ws)))
    gauss_all = _contract(vals, [GAUSS_WEIGHTS] * dim)
    error = max(abs(value - gauss_all), sum(axis_err))
    return value, error, axis_err, 15 ** dim


def _contract(vals, weights):
    out = vals
    for w in weights:
        out = np.tensordot(out, w, axes=([0], [0]))
    return complex(out) if np.iscomplexobj(out) else float(out)


# ------------------------------------------------------- importance sampling

class MuSample(NamedTuple):
    points: np.ndarray   # shape (count, d + 1): (xi, eta_1, ..., eta_d)
    weights: np.ndarray  # shape (count,)

    def estimate(self, f):
        """Mean and standard error of the weighted estimator of int f dmu."""
        vals = np.asarray(f(self.points)) * self.weights * self.weights.size
        return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(vals.size))


SAMPLE_CHUNK = 1 << 16


def power_law_draw(generator, exponent, radius, size):
    """Symmetric draws with density proportional to ``|x|^(exponent - 1)`` on [-R, R]."""
    u = generator.random(size)
    sign = np.where(generator.random(size) < 0.5, -1.0, 1.0)
    return sign * radius * u ** (1.0 / exponent)


def importance_sample_mu(H, n, truncation, count, seed, mollifier=MollifierSpec(), stream_id=0):
    """Draw points from the normalized power-law density on the box [-R, R]^(d+1).

    Coordinate i uses the inverse power-law CDF with exponent ``2 - 2H_i``.
    Weights turn the weighted sum into an unbiased estimate of
    ``int_box f dmu_H^(n)``; pass ``mollifier=None`` to sample the unmollified
    measure. Draws come in fixed chunks keyed by chunk index, so the stream is
    identical however the work is split.
    """
    if count <= 0:
        raise DomainError("count must be positive")
    radii = np.broadcast_to(np.asarray(truncation, dtype=float), (H.d + 1,))
    if np.any(radii <= 0):
        raise DomainError("truncation must be positive")
    expo = 2.0 - 2.0 * H.as_array()
    if np.any(expo <= 0):
        raise DomainError("power-law exponent must stay below 1")
    norm = float(np.prod(2.0 * radii ** expo / expo))
    pts = np.empty((count, H.d + 1))
    for chunk, start in enumerate(range(0, count, SAMPLE_CHUNK)):
        size = min(SAMPLE_CHUNK, count - start)
        gen = rng.stream(seed, stream_id, chunk)
        for i in range(H.d + 1):
            pts[start:start + size, i] = power_law_draw(gen, expo[i], radii[i], size)
    weights = np.full(count, norm / count)
    if mollifier is not None:
        weights = weights * mollifier_ft(mollifier, n, pts[:, 0], pts[:, 1:]) ** 2
    return MuSample(pts, weights)


# --------------------------------------------------------------- growth fits

@dataclass(frozen=True)
class GrowthFit:
    """Least-squares line through (x, log2 value); ``slope`` is per unit x."""

    slope: float
    intercept: float
    residual: float
    n_range: tuple


def growth_fit(values):
    """Fit log2(value) = slope * n + intercept by least squares."""
    pairs = [(float(n), float(v)) for n, v in values]
    if len(pairs) < 3:
        raise DegenerateInput("growth fit needs at least three points")
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if np.any(~(y > 0)) or not np.all(np.isfinite(y)):
        raise DegenerateInput("growth fit needs finite positive values")
    ly = np.log2(y)
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - design @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return GrowthFit(float(coef[0]), float(coef[1]), rms, (x.min(), x.max()))


SLOPE_THRESHOLD = 0.05
RESIDUAL_THRESHOLD = 0.1
MARGINAL_WINDOW = 4
MARGINAL_RATIO = 0.8


def divergence_verdict(values):
    """Shared decision rule: ``(diverges, fit, reason)``.

    Divergent when the log2 slope exceeds 0.05 with RMS residual below 0.1, or
    when the successive differences over the last four points are positive and
    do not decay (smallest at least 0.8 of the largest).
    """
    pairs = sorted((float(n), float(v)) for n, v in values)
    fit = growth_fit(pairs)
    if fit.slope > SLOPE_THRESHOLD and fit.residual < RESIDUAL_THRESHOLD:
        return True, fit, "slope"
    tail = np.array([v for _, v in pairs[-MARGINAL_WINDOW:]])
    if tail.size == MARGINAL_WINDOW:
        diffs = np.diff(tail)
        if np.all(diffs > 0) and diffs.min() >= MARGINAL_RATIO * diffs.max():
            return True, fit, "marginal"
    return False, fit, "bounded"
