"""Quadrature for the singular convolution and the norms built on it.

Strategy: every integral is taken over explicit boxes, subdivided per axis
into dyadic cells graded toward the singular coordinate (u toward x, v
toward y), each cell handled by a tensor Gauss-Legendre rule or by
stratified Monte Carlo. The innermost cells around u = x (where the kernel
is a pure power) are excluded from the numeric sum and bounded analytically;
that bound goes into the reported error estimate, never into the value.
Nothing here integrates over an unbounded region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AccuracyError, PreconditionError, UsageError
from .exponents import DerivedExponents, ExponentConfig, as_rational
from .kernel import SINGULARITY_FLOOR, PointPair

Bounds = Tuple[Tuple[float, float], ...]

# Tensor-grid quadrature is allowed only up to this total dimension;
# beyond it the cost is exponential and Monte Carlo is required.
MAX_GRID_DIMENSION = 4

# Hard cap on tensor nodes per pass, to fail loudly instead of swapping.
MAX_GRID_NODES = 12_000_000

# Monte Carlo strata are merged (pairwise, per axis) down to this count.
MAX_MC_STRATA = 65_536

_RELATIVE_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """A bounded, compactly supported payload for the operator.

    kind is one of indicator-box, smooth-bump, atom, custom-sampled.
    Piecewise-constant kinds carry explicit cells (box, value); the smooth
    bump is the usual exp(1 - 1/(1-z^2)) profile per axis. support is the
    bounding box over all n+m axes (m = 0 is allowed for one-variable work).
    """

    kind: str
    n: int
    m: int
    support: Bounds
    cells: Tuple[Tuple[Bounds, float], ...] = ()
    center: Tuple[float, ...] = ()
    radius: Tuple[float, ...] = ()
    amplitude: float = 1.0
    min_cells_hint: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("indicator-box", "smooth-bump", "atom", "custom-sampled"):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")
        if len(self.support) != self.dim:
            raise ValueError("support must have n+m axis intervals")
        for lo, hi in self.support:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError("support intervals must be finite and nonempty")
        if self.kind == "smooth-bump" and (
            len(self.center) != self.dim or len(self.radius) != self.dim
        ):
            raise ValueError("smooth bump needs center and radius per axis")

    @property
    def dim(self) -> int:
        return self.n + self.m

    def support_sides(self) -> Tuple[float, ...]:
        return tuple(hi - lo for lo, hi in self.support)

    def centers(self) -> Tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.support)

    def sup_bound(self) -> float:
        if self.kind == "smooth-bump":
            return abs(self.amplitude)
        if self.kind == "indicator-box":
            return abs(self.amplitude)
        if not self.cells:
            return 0.0
        return max(abs(v) for _, v in self.cells)

    def is_nonnegative(self) -> bool:
        if self.kind in ("smooth-bump", "indicator-box"):
            return self.amplitude >= 0.0
        return all(v >= 0.0 for _, v in self.cells)

    def breakpoints(self, axis: int) -> Tuple[float, ...]:
        pts = {self.support[axis][0], self.support[axis][1]}
        for box, _ in self.cells:
            pts.add(box[axis][0])
            pts.add(box[axis][1])
        return tuple(sorted(pts))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"points must have {self.dim} columns")
        if self.kind == "indicator-box":
            mask = np.ones(pts.shape[0], dtype=bool)
            for i, (lo, hi) in enumerate(self.support):
                mask &= (pts[:, i] >= lo) & (pts[:, i] <= hi)
            return np.where(mask, self.amplitude, 0.0)
        if self.kind == "smooth-bump":
            out = np.full(pts.shape[0], self.amplitude, dtype=float)
            inside = np.ones(pts.shape[0], dtype=bool)
            arg = np.zeros(pts.shape[0], dtype=float)
            for i in range(self.dim):
                w = (pts[:, i] - self.center[i]) / self.radius[i]
                w2 = w * w
                inside &= w2 < 1.0
                with np.errstate(divide="ignore", invalid="ignore"):
                    arg = arg + np.where(w2 < 1.0, 1.0 - 1.0 / (1.0 - w2), 0.0)
            out = np.where(inside, self.amplitude * np.exp(arg), 0.0)
            return out
        # piecewise constant: half-open cells, closed against the support top
        out = np.zeros(pts.shape[0], dtype=float)
        for box, value in self.cells:
            mask = np.ones(pts.shape[0], dtype=bool)
            for i, (lo, hi) in enumerate(box):
                z = pts[:, i]
                upper = (z < hi) | ((hi == self.support[i][1]) & (z <= hi))
                mask &= (z >= lo) & upper
            out[mask] += value
        return out

    def _scaled_geometry(self, factors: Sequence[float]) -> "TestFunction":
        support = tuple(
            (lo * factors[i], hi * factors[i]) for i, (lo, hi) in enumerate(self.support)
        )
        cells = tuple(
            (
                tuple((lo * factors[i], hi * factors[i]) for i, (lo, hi) in enumerate(box)),
                v,
            )
            for box, v in self.cells
        )
        center = tuple(c * factors[i] for i, c in enumerate(self.center))
        radius = tuple(r * factors[i] for i, r in enumerate(self.radius))
        return replace(self, support=support, cells=cells, center=center, radius=radius)

    def dilate(self, delta: float, lam: float = 1.0, rho: float = 1.0) -> "TestFunction":
        """The payload u -> f(u/delta, v/(delta^rho lam)); values unchanged."""
        sx = float(delta)
        sy = float(delta) ** float(rho) * float(lam)
        if not (sx > 0 and sy > 0):
            raise ValueError("dilation factors must be positive")
        return self._scaled_geometry([sx] * self.n + [sy] * self.m)

    def translate(self, shift: Sequence[float]) -> "TestFunction":
        sh = tuple(float(s) for s in shift)
        if len(sh) != self.dim:
            raise ValueError("shift must have n+m components")
        support = tuple((lo + sh[i], hi + sh[i]) for i, (lo, hi) in enumerate(self.support))
        cells = tuple(
            (tuple((lo + sh[i], hi + sh[i]) for i, (lo, hi) in enumerate(box)), v)
            for box, v in self.cells
        )
        center = tuple(c + sh[i] for i, c in enumerate(self.center))
        return replace(self, support=support, cells=cells, center=center)

    def scale_values(self, factor: float) -> "TestFunction":
        c = float(factor)
        return replace(
            self,
            amplitude=self.amplitude * c,
            cells=tuple((box, v * c) for box, v in self.cells),
        )

    def exact_lp_mass(self, p: float) -> float:
        """Integral of |f|^p, closed form; piecewise-constant kinds only."""
        if self.kind == "smooth-bump":
            raise ValueError("no closed form for the smooth bump")
        if self.kind == "indicator-box":
            vol = 1.0
            for lo, hi in self.support:
                vol *= hi - lo
            return abs(self.amplitude) ** p * vol
        total = 0.0
        for box, v in self.cells:
            vol = 1.0
            for lo, hi in box:
                vol *= hi - lo
            total += abs(v) ** p * vol
        return total


def indicator_box(n: int, m: int, box: Bounds, value: float = 1.0) -> TestFunction:
    return TestFunction(
        kind="indicator-box", n=n, m=m, support=tuple(tuple(b) for b in box),
        amplitude=float(value),
    )


def smooth_bump(
    n: int,
    m: int,
    center: Optional[Sequence[float]] = None,
    radius: Optional[Sequence[float]] = None,
    amplitude: float = 1.0,
) -> TestFunction:
    dim = n + m
    c = tuple(float(v) for v in (center if center is not None else [0.0] * dim))
    if radius is None:
        radius = [1.0] * dim
    elif isinstance(radius, (int, float)):
        radius = [float(radius)] * dim
    r = tuple(float(v) for v in radius)
    if any(v <= 0 for v in r):
        raise ValueError("bump radii must be positive")
    support = tuple((c[i] - r[i], c[i] + r[i]) for i in range(dim))
    return TestFunction(
        kind="smooth-bump", n=n, m=m, support=support, center=c, radius=r,
        amplitude=float(amplitude), min_cells_hint=8,
    )


def _boxes_overlap(a: Bounds, b: Bounds) -> bool:
    return all(lo1 < hi2 and lo2 < hi1 for (lo1, hi1), (lo2, hi2) in zip(a, b))


def piecewise_constant(
    n: int, m: int, cells: Sequence[Tuple[Bounds, float]], kind: str = "custom-sampled"
) -> TestFunction:
    norm_cells = tuple((tuple(tuple(iv) for iv in box), float(v)) for box, v in cells)
    if not norm_cells:
        raise ValueError("need at least one cell")
    dim = n + m
    for box, _ in norm_cells:
        if len(box) != dim:
            raise ValueError("every cell box must have n+m axis intervals")
    for i, (box_i, _) in enumerate(norm_cells):
        for box_j, _ in norm_cells[i + 1:]:
            if _boxes_overlap(box_i, box_j):
                raise ValueError("payload cells must have disjoint interiors")
    support = tuple(
        (min(box[i][0] for box, _ in norm_cells), max(box[i][1] for box, _ in norm_cells))
        for i in range(dim)
    )
    return TestFunction(kind=kind, n=n, m=m, support=support, cells=norm_cells)


# ---------------------------------------------------------------------------
# quadrature spec


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the integration engine.

    inner_cutoff is a dyadic exponent: the smallest resolved distance from
    the singular coordinate is 2^inner_cutoff times the support side of the
    axis, and everything inside it is bounded analytically.
    """

    method: str = "grid"
    points_per_axis: int = 4
    samples: int = 20000
    seed: int = 0
    inner_cutoff: int = -20
    target_rel_error: float = 1e-3

    def __post_init__(self) -> None:
        if self.method not in ("grid", "monte-carlo"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.points_per_axis < 4:
            raise ValueError("points_per_axis must be >= 4")
        if self.samples <= 0:
            raise ValueError("samples must be positive")
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not (-1060 <= self.inner_cutoff <= -1):
            raise ValueError("inner_cutoff must be a negative dyadic exponent >= -1060")
        if not self.target_rel_error > 0:
            raise ValueError("target_rel_error must be positive")


def sufficient_inner_cutoff(
    alpha: float, dim: int, target_rel_error: float, margin: float = 0.25
) -> int:
    """A cutoff exponent whose analytic core bound sits below the target.

    Sized so dim 2^dim (2^e)^alpha / alpha <= margin * target_rel_error,
    i.e. assuming the integral and payload are O(1); callers with very
    small or large values should pass an adjusted target.
    """
    a = float(alpha)
    if not 0 < a:
        raise ValueError("alpha must be positive")
    rhs = margin * target_rel_error * a / (dim * 2.0 ** dim)
    e = min(-4, math.floor(math.log2(rhs) / a))
    if e < -1060:
        raise UsageError(
            f"alpha={alpha} needs cutoff 2^{e}, below float range; "
            "use monte-carlo or a looser target"
        )
    return e


# ---------------------------------------------------------------------------
# graded partitions and axis plans


@lru_cache(maxsize=64)
def _leggauss(g: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(g)
    return nodes, weights


def _graded_breakpoints(
    lo: float, hi: float, center: float, finest: float, extra: Sequence[float] = ()
) -> np.ndarray:
    """Dyadic breakpoints of [lo, hi] graded toward center.

    Radii run finest, 2*finest, ... (starting from the actual distance when
    center lies outside the interval), so cells roughly double away from the
    singular coordinate. extra points (payload edges) are merged in.
    """
    if not lo < hi:
        raise ValueError("empty interval")
    pts = {lo, hi}
    for e in extra:
        if lo < e < hi:
            pts.add(e)
    dist = max(lo - center, center - hi, 0.0)
    dmax = max(abs(center - lo), abs(center - hi))
    r = finest if dist <= finest else dist
    while r < dmax:
        for s in (center - r, center + r):
            if lo < s < hi:
                pts.add(s)
        r *= 2.0
    if dist <= finest and lo < center < hi:
        pts.add(center)
    out = np.array(sorted(pts), dtype=float)
    # drop degenerate cells from near-duplicate breakpoints
    keep = np.concatenate([[True], np.diff(out) > 1e-15 * (hi - lo)])
    return out[keep]


def _split_wide_cells(
    breaks: np.ndarray,
    max_cell: Optional[float],
    within: Optional[Tuple[float, float]] = None,
) -> np.ndarray:
    if max_cell is None or max_cell <= 0:
        return breaks
    pts = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        if within is not None and (b <= within[0] or a >= within[1]):
            pts.append(b)
            continue
        width = b - a
        parts = int(math.ceil(width / max_cell))
        if parts > 1:
            step = width / parts
            pts.extend(a + step * j for j in range(1, parts))
        pts.append(b)
    return np.array(pts, dtype=float)


@dataclass
class _AxisPlan:
    breaks: np.ndarray    # cell boundaries, sorted
    nodes: np.ndarray     # Gauss nodes over all cells
    weights: np.ndarray
    core: np.ndarray      # per-node: node lies in a cell touching the center

    @property
    def cell_count(self) -> int:
        return len(self.breaks) - 1


def _axis_plan(
    lo: float,
    hi: float,
    center: float,
    finest: float,
    extra: Sequence[float],
    g: int,
    max_cell: Optional[float] = None,
    split_within: Optional[Tuple[float, float]] = None,
) -> _AxisPlan:
    breaks = _split_wide_cells(
        _graded_breakpoints(lo, hi, center, finest, extra), max_cell, split_within
    )
    ref_nodes, ref_weights = _leggauss(g)
    a = breaks[:-1]
    b = breaks[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    # the two cells flanking the center are the analytic-core cells
    cell_dist = np.maximum(np.maximum(a - center, center - b), 0.0)
    cell_core = cell_dist < finest * (1.0 - 1e-12)
    core = np.repeat(cell_core, g)
    return _AxisPlan(breaks=breaks, nodes=nodes, weights=weights, core=core)


# ---------------------------------------------------------------------------
# analytic bounds for the excluded core and kernel tails


def _power_mass_bound(dim: int, power: float, radius: float) -> float:
    """Bound for the integral of |z|^{power-dim} over the box |z|_inf <= radius.

    Uses |z|_2 >= |z|_inf and the exact max-norm shell volume; exact for
    dim = 1, within a dimensional constant otherwise. Needs power > 0.
    """
    if radius <= 0.0:
        return 0.0
    return dim * 2.0 ** dim * radius ** power / power


def _box_tail_bound(box: Bounds, point: np.ndarray, power: float, dim: int) -> float:
    """Bound for the integral of |p - z|^{power-dim} over the box (power > 0)."""
    far = max(max(abs(p - lo), abs(p - hi)) for p, (lo, hi) in zip(point, box))
    bound = _power_mass_bound(dim, power, far)
    dist = max(max(lo - p, p - hi, 0.0) for p, (lo, hi) in zip(point, box))
    if dist > 0.0:
        vol = 1.0
        for lo, hi in box:
            vol *= hi - lo
        bound = min(bound, vol * dist ** (power - dim))
    return bound


# ---------------------------------------------------------------------------
# kernels seen by the engine


@dataclass(frozen=True)
class _KernelDesc:
    """What the engine needs to know about one convolution kernel."""

    kind: str            # flag | product | riesz
    n: int
    m: int
    u_power: float       # radial integrability exponent of the x-factor
    v_power: float = 0.0
    rho: float = 1.0
    v_singular: bool = False

    def values(self, pt: np.ndarray, points: np.ndarray) -> np.ndarray:
        s = pt[None, : self.n] - points[:, : self.n]
        sn = np.sqrt(np.sum(s * s, axis=1))
        if self.kind == "riesz":
            return sn ** (self.u_power - self.n)
        t = pt[None, self.n:] - points[:, self.n:]
        tn = np.sqrt(np.sum(t * t, axis=1))
        if self.kind == "flag":
            return sn ** (self.u_power - self.n) * (
                sn ** self.rho + tn
            ) ** (self.v_power - self.m)
        return sn ** (self.u_power - self.n) * tn ** (self.v_power - self.m)


def _flag_desc(cfg: ExponentConfig) -> _KernelDesc:
    return _KernelDesc(
        kind="flag", n=cfg.n, m=cfg.m, u_power=float(cfg.alpha),
        v_power=float(cfg.beta), rho=float(cfg.rho),
    )


def _product_desc(cfg: ExponentConfig, ab: DerivedExponents) -> _KernelDesc:
    return _KernelDesc(
        kind="product", n=cfg.n, m=cfg.m, u_power=float(ab.a),
        v_power=float(ab.b), v_singular=True,
    )


def _riesz_desc(alpha: float) -> _KernelDesc:
    return _KernelDesc(kind="riesz", n=1, m=0, u_power=float(alpha))


# ---------------------------------------------------------------------------
# the convolution engine


@dataclass
class _CoreInfo:
    active: bool = False
    eps: float = 0.0


def _build_conv_plans(
    f: TestFunction, pt: np.ndarray, spec: QuadratureSpec, g: int
) -> List[_AxisPlan]:
    plans = []
    scale = 2.0 ** spec.inner_cutoff
    max_cell = None
    for i in range(f.dim):
        lo, hi = f.support[i]
        side = hi - lo
        if f.min_cells_hint > 1:
            max_cell = side / f.min_cells_hint
        plans.append(
            _axis_plan(lo, hi, float(pt[i]), scale * side, f.breakpoints(i), g, max_cell)
        )
    return plans


def _group_core(plans: List[_AxisPlan], axes: range, spec: QuadratureSpec,
                f: TestFunction) -> _CoreInfo:
    if not all(plans[i].core.any() for i in axes):
        return _CoreInfo(active=False)
    eps = max(2.0 ** spec.inner_cutoff * (f.support[i][1] - f.support[i][0]) for i in axes)
    return _CoreInfo(active=True, eps=eps)


def _tensor_mask(per_axis: List[np.ndarray], shape: Tuple[int, ...],
                 axes: range) -> np.ndarray:
    """AND of per-axis boolean arrays broadcast over the full tensor shape."""
    out = None
    for i in axes:
        view_shape = [1] * len(shape)
        view_shape[i] = shape[i]
        arr = per_axis[i].reshape(view_shape)
        out = arr if out is None else (out & arr)
    return np.broadcast_to(out, shape)


def _grid_conv_value(
    desc: _KernelDesc,
    f: TestFunction,
    pt: np.ndarray,
    spec: QuadratureSpec,
    g: int,
) -> Tuple[float, _CoreInfo, _CoreInfo]:
    plans = _build_conv_plans(f, pt, spec, g)
    shape = tuple(len(p.nodes) for p in plans)
    total = int(np.prod([s for s in shape], dtype=np.int64))
    if total > MAX_GRID_NODES:
        raise UsageError(
            f"grid tensor would need {total} nodes; use monte-carlo or a coarser cutoff"
        )
    u_axes = range(0, desc.n)
    v_axes = range(desc.n, desc.n + desc.m)
    core_u = _group_core(plans, u_axes, spec, f)
    core_v = _group_core(plans, v_axes, spec, f) if desc.v_singular else _CoreInfo()

    mesh = np.meshgrid(*[p.nodes for p in plans], indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    weights = reduce(np.multiply.outer, [p.weights for p in plans]).ravel()

    keep = np.ones(shape, dtype=bool)
    if core_u.active:
        keep &= ~_tensor_mask([p.core for p in plans], shape, u_axes)
    if core_v.active:
        keep &= ~_tensor_mask([p.core for p in plans], shape, v_axes)
    keep = keep.ravel()

    fvals = f.evaluate(points)
    live = keep & (fvals != 0.0)
    idx = np.flatnonzero(live)
    if idx.size == 0:
        return 0.0, core_u, core_v
    kvals = desc.values(pt, points[idx])
    value = float(np.sum(weights[idx] * fvals[idx] * kvals))
    return value, core_u, core_v


def _merge_axis_cells(cell_lists: List[List[Tuple[float, float]]], cap: int) -> None:
    """Merge adjacent cells (in place) until the tensor stratum count fits cap."""
    def count() -> int:
        c = 1
        for cells in cell_lists:
            c *= len(cells)
        return c

    while count() > cap:
        widest = max(range(len(cell_lists)), key=lambda i: len(cell_lists[i]))
        cells = cell_lists[widest]
        if len(cells) <= 1:
            break
        merged = []
        for j in range(0, len(cells) - 1, 2):
            merged.append((cells[j][0], cells[j + 1][1]))
        if len(cells) % 2 == 1:
            merged.append(cells[-1])
        cell_lists[widest] = merged


def _mc_conv_value(
    desc: _KernelDesc,
    f: TestFunction,
    pt: np.ndarray,
    spec: QuadratureSpec,
    salt: Tuple[int, ...],
) -> Tuple[float, float, _CoreInfo, _CoreInfo]:
    plans = _build_conv_plans(f, pt, spec, g=spec.points_per_axis)
    u_axes = range(0, desc.n)
    v_axes = range(desc.n, desc.n + desc.m)
    core_u = _group_core(plans, u_axes, spec, f)
    core_v = _group_core(plans, v_axes, spec, f) if desc.v_singular else _CoreInfo()

    cell_lists = [
        [(float(p.breaks[j]), float(p.breaks[j + 1])) for j in range(p.cell_count)]
        for p in plans
    ]
    _merge_axis_cells(cell_lists, MAX_MC_STRATA)
    counts = [len(c) for c in cell_lists]
    n_strata = int(np.prod(counts, dtype=np.int64))
    per_stratum = max(2, spec.samples // n_strata)

    scale = 2.0 ** spec.inner_cutoff
    finest = np.array([scale * (hi - lo) for lo, hi in f.support])

    estimates: List[float] = []
    variances: List[float] = []
    for s_idx in range(n_strata):
        rem = s_idx
        los = np.empty(f.dim)
        his = np.empty(f.dim)
        for i in range(f.dim):
            j = rem % counts[i]
            rem //= counts[i]
            los[i], his[i] = cell_lists[i][j]
        seq = np.random.SeedSequence(entropy=spec.seed, spawn_key=salt + (s_idx,))
        rng = np.random.default_rng(seq)
        pts = los[None, :] + rng.random((per_stratum, f.dim)) * (his - los)[None, :]
        vol = float(np.prod(his - los))

        keep = np.ones(per_stratum, dtype=bool)
        if core_u.active:
            in_core = np.ones(per_stratum, dtype=bool)
            for i in u_axes:
                in_core &= np.abs(pts[:, i] - pt[i]) < finest[i]
            keep &= ~in_core
        if core_v.active:
            in_core = np.ones(per_stratum, dtype=bool)
            for i in v_axes:
                in_core &= np.abs(pts[:, i] - pt[i]) < finest[i]
            keep &= ~in_core

        fvals = f.evaluate(pts)
        vals = np.zeros(per_stratum)
        live = keep & (fvals != 0.0)
        if np.any(live):
            vals[live] = fvals[live] * desc.values(pt, pts[live])
        estimates.append(vol * float(np.mean(vals)))
        variances.append(vol * vol * float(np.var(vals, ddof=1)) / per_stratum)

    value = math.fsum(estimates)
    stat_err = 3.0 * math.sqrt(math.fsum(variances))
    return value, stat_err, core_u, core_v


def _core_error(
    desc: _KernelDesc,
    f: TestFunction,
    pt: np.ndarray,
    core_u: _CoreInfo,
    core_v: _CoreInfo,
) -> float:
    sup = f.sup_bound()
    err = 0.0
    if core_u.active:
        s_mass = _power_mass_bound(desc.n, desc.u_power, core_u.eps)
        if desc.m == 0:
            tail = 1.0
        else:
            v_box = f.support[desc.n:]
            tail = _box_tail_bound(v_box, pt[desc.n:], desc.v_power, desc.m)
        err += s_mass * sup * tail
    if core_v.active:
        s_mass = _power_mass_bound(desc.m, desc.v_power, core_v.eps)
        u_box = f.support[: desc.n]
        tail = _box_tail_bound(u_box, pt[: desc.n], desc.u_power, desc.n)
        err += s_mass * sup * tail
    return err


def _apply_desc(
    desc: _KernelDesc,
    f: TestFunction,
    pt: np.ndarray,
    spec: QuadratureSpec,
    salt: Tuple[int, ...] = (0,),
    check_target: bool = True,
) -> Tuple[float, float]:
    if spec.method == "grid":
        if f.dim > MAX_GRID_DIMENSION:
            raise UsageError(
                f"grid quadrature supports n+m <= {MAX_GRID_DIMENSION}; use monte-carlo"
            )
        v_hi, core_u, core_v = _grid_conv_value(desc, f, pt, spec, spec.points_per_axis)
        v_lo, _, _ = _grid_conv_value(desc, f, pt, spec, spec.points_per_axis - 1)
        rule_err = abs(v_hi - v_lo)
        value = v_hi
    else:
        value, rule_err, core_u, core_v = _mc_conv_value(desc, f, pt, spec, salt)
    core_err = _core_error(desc, f, pt, core_u, core_v)
    err = rule_err + core_err
    if (
        check_target
        and (core_u.active or core_v.active)
        and core_err > spec.target_rel_error * max(abs(value), _RELATIVE_FLOOR)
    ):
        raise AccuracyError(
            f"inner_cutoff 2^{spec.inner_cutoff} too coarse: analytic core bound "
            f"{core_err:.3e} exceeds target {spec.target_rel_error} relative to "
            f"value {value:.6e}",
            value=value,
            err=err,
        )
    return value, err


def _require_pair_dims(f: TestFunction, cfg: ExponentConfig) -> None:
    if f.n != cfg.n or f.m != cfg.m:
        raise ValueError(
            f"test function has dims ({f.n},{f.m}), config needs ({cfg.n},{cfg.m})"
        )


# ---------------------------------------------------------------------------
# public operations


def apply_operator(
    cfg: ExponentConfig, f: TestFunction, pt: PointPair, spec: QuadratureSpec
) -> Tuple[float, float]:
    """The convolution If(x, y) with an a-posteriori error estimate.

    Raises AccuracyError when the point sits inside supp f and the analytic
    bound for the unresolved core exceeds target_rel_error relative to the
    computed value (the error carries the best estimate).
    """
    _require_pair_dims(f, cfg)
    coords = pt.coords()
    return _apply_desc(_flag_desc(cfg), f, coords, spec)


def apply_dominating_operator(
    cfg: ExponentConfig,
    ab: DerivedExponents,
    f: TestFunction,
    pt: PointPair,
    spec: QuadratureSpec,
) -> Tuple[float, float]:
    """Convolution against the dominating product kernel |x|^{a-n}|y|^{b-m}."""
    _require_pair_dims(f, cfg)
    return _apply_desc(_product_desc(cfg, ab), f, pt.coords(), spec)


def apply_riesz_1d(
    alpha: Union[float, Fraction, str], f: TestFunction, x: float, spec: QuadratureSpec
) -> float:
    """One-variable fractional integral: the integral of f(u)|x-u|^{alpha-1} du."""
    a = as_rational(alpha, "alpha")
    if not (0 < a < 1):
        raise PreconditionError("apply_riesz_1d needs 0 < alpha < 1")
    if f.n != 1 or f.m != 0:
        raise ValueError("apply_riesz_1d takes a one-variable test function (n=1, m=0)")
    value, _ = _apply_desc(_riesz_desc(float(a)), f, np.array([float(x)]), spec)
    return value


def _outer_plans(
    box: Bounds, f: TestFunction, g: int
) -> List[_AxisPlan]:
    plans = []
    centers = f.centers()
    sides = f.support_sides()
    for i, (lo, hi) in enumerate(box):
        max_cell = None
        if f.min_cells_hint > 1:
            max_cell = sides[i] / f.min_cells_hint
        plans.append(
            _axis_plan(lo, hi, centers[i], 0.5 * sides[i], f.breakpoints(i), g,
                       max_cell, f.support[i])
        )
    return plans


def _outer_tensor(plans: List[_AxisPlan]) -> Tuple[np.ndarray, np.ndarray]:
    mesh = np.meshgrid(*[p.nodes for p in plans], indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    weights = reduce(np.multiply.outer, [p.weights for p in plans]).ravel()
    return points, weights


def _power_gap(v: float, e: float, q: float) -> float:
    # error of |v|^q when v is known to +-e
    return (abs(v) + e) ** q - abs(v) ** q


def _lq_mass_grid(
    desc: _KernelDesc,
    f: TestFunction,
    region,
    q: float,
    spec: QuadratureSpec,
) -> Tuple[float, float]:
    box_terms: List[float] = []
    rule_terms: List[float] = []
    prop_terms: List[float] = []
    for box, sign in region.signed_boxes():
        plans_hi = _outer_plans(box, f, spec.points_per_axis)
        pts_hi, w_hi = _outer_tensor(plans_hi)
        inner: List[Tuple[float, float]] = []
        for row in pts_hi:
            inner.append(
                _apply_desc(desc, f, row, spec, check_target=False)
            )
        v_hi = math.fsum(w * abs(v) ** q for w, (v, _) in zip(w_hi, inner))
        prop = math.fsum(w * _power_gap(v, e, q) for w, (v, e) in zip(w_hi, inner))

        plans_lo = _outer_plans(box, f, spec.points_per_axis - 1)
        pts_lo, w_lo = _outer_tensor(plans_lo)
        v_lo = math.fsum(
            w * abs(_apply_desc(desc, f, row, spec, check_target=False)[0]) ** q
            for w, row in zip(w_lo, pts_lo)
        )
        box_terms.append(sign * v_hi)
        rule_terms.append(abs(v_hi - v_lo))
        prop_terms.append(prop)
    value = math.fsum(box_terms)
    err = math.fsum(rule_terms) + math.fsum(prop_terms)
    return value, err


def _lq_mass_mc(
    desc: _KernelDesc,
    f: TestFunction,
    region,
    q: float,
    spec: QuadratureSpec,
) -> Tuple[float, float]:
    n_outer = max(32, min(512, spec.samples // 64))
    inner_spec = replace(spec, samples=max(2048, spec.samples // 8))
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=spec.seed, spawn_key=(11,))
    )
    pts = region.sample(rng, n_outer)
    vol = region.volume()
    powers = np.empty(n_outer)
    gaps = np.empty(n_outer)
    for i, row in enumerate(pts):
        v, e = _apply_desc(desc, f, row, inner_spec, salt=(12, i), check_target=False)
        powers[i] = abs(v) ** q
        gaps[i] = _power_gap(v, e, q)
    value = vol * float(np.mean(powers))
    stat = 3.0 * vol * float(np.std(powers, ddof=1)) / math.sqrt(n_outer)
    err = stat + vol * float(np.mean(gaps))
    return value, err


def lq_mass(
    cfg: ExponentConfig,
    f: TestFunction,
    region,
    q: Union[float, Fraction, str],
    spec: QuadratureSpec,
) -> Tuple[float, float]:
    """Integral of |If|^q over a bounded region, with composed error estimate.

    region is anything exposing signed_boxes() (grid) or sample()/volume()
    (monte-carlo): shells, cubes, windows, the counterexample region. Signed
    integrands enter through their modulus, never signed powers.
    """
    _require_pair_dims(f, cfg)
    qf = float(as_rational(q, "q"))
    if not qf > 1:
        raise PreconditionError("lq_mass needs q > 1")
    desc = _flag_desc(cfg)
    if spec.method == "grid":
        return _lq_mass_grid(desc, f, region, qf, spec)
    return _lq_mass_mc(desc, f, region, qf, spec)


def lq_mass_dominating(
    cfg: ExponentConfig,
    ab: DerivedExponents,
    f: TestFunction,
    region,
    q: Union[float, Fraction, str],
    spec: QuadratureSpec,
) -> Tuple[float, float]:
    """lq_mass with the dominating product kernel in place of the flag kernel."""
    _require_pair_dims(f, cfg)
    qf = float(as_rational(q, "q"))
    if not qf > 1:
        raise PreconditionError("lq_mass needs q > 1")
    desc = _product_desc(cfg, ab)
    if spec.method == "grid":
        return _lq_mass_grid(desc, f, region, qf, spec)
    return _lq_mass_mc(desc, f, region, qf, spec)


def lp_norm(
    f: TestFunction, p: Union[float, Fraction, str], spec: QuadratureSpec
) -> float:
    """The p-norm of the test function over its support."""
    pf = float(as_rational(p, "p"))
    if not pf >= 1:
        raise PreconditionError("lp_norm needs p >= 1")
    if spec.method == "monte-carlo":
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=spec.seed, spawn_key=(21,))
        )
        cols = [
            rng.uniform(lo, hi, size=spec.samples) for lo, hi in f.support
        ]
        pts = np.stack(cols, axis=1)
        vol = 1.0
        for lo, hi in f.support:
            vol *= hi - lo
        vals = np.abs(f.evaluate(pts)) ** pf
        mass = vol * float(np.mean(vals))
        return mass ** (1.0 / pf)

    def _mass(g: int) -> float:
        plans = _outer_plans(f.support, f, g)
        pts, w = _outer_tensor(plans)
        vals = np.abs(f.evaluate(pts)) ** pf
        return float(np.sum(w * vals))

    hi = _mass(spec.points_per_axis)
    lo = _mass(spec.points_per_axis - 1)
    if abs(hi - lo) > spec.target_rel_error * max(abs(hi), _RELATIVE_FLOOR):
        raise AccuracyError(
            f"p-norm rule disagreement {abs(hi - lo):.3e} exceeds the relative target",
            value=hi ** (1.0 / pf),
            err=abs(hi - lo),
        )
    return hi ** (1.0 / pf)
