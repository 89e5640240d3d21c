"""Finite-n estimate sequences and their extrapolation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


def fmt(x) -> str:
    """Stable text rendering; infinities spelled out."""
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    if math.isnan(x):
        return "nan"
    return repr(round(x, 12))


def jsonable(x):
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return fmt(x)
        return x
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        try:
            return jsonable(x.item())
        except (ValueError, AttributeError):
            pass
    if hasattr(x, "tolist"):
        return jsonable(x.tolist())
    return x


def aitken(seq) -> float | None:
    """Aitken delta-squared applied to the last three terms; ``None`` if not usable."""
    if len(seq) < 3 or any(not math.isfinite(v) for v in seq[-3:]):
        return None
    a, b, c = seq[-3:]
    den = c - 2 * b + a
    if abs(den) < 1e-15:
        return c
    acc = c - (c - b) ** 2 / den
    # reject when the correction is larger than the last step
    if abs(acc - c) > 10 * abs(c - b) + 1e-12:
        return c
    return acc


@dataclass
class EstimateTrace:
    """Sequence of finite-n estimates for one quantity.

    ``bound`` says what each value certifies ("upper", "lower" or "none").
    ``headline`` is the reported value; ``accelerated`` an optional sharper,
    uncertified estimate.  Net-based traces also fill ``cells`` with one row per
    ``(n, epsilon)``.
    """

    quantity: str
    method: str
    ns: list = field(default_factory=list)
    values: list = field(default_factory=list)
    bound: str = "none"
    headline: float = math.nan
    headline_bound: str = "none"
    accelerated: float | None = None
    cells: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def best(self) -> float:
        return self.headline if self.accelerated is None else self.accelerated

    def to_dict(self) -> dict:
        return jsonable(asdict(self))


def _settling(incs) -> bool:
    """Step sizes between the last increments shrink."""
    if len(incs) < 4:
        return len(incs) >= 1
    d = [abs(b - a) for a, b in zip(incs[-4:], incs[-3:])]
    return d[2] <= d[1] + 1e-15 and d[1] <= d[0] + 1e-15


def fekete_trace(quantity: str, method: str, ns, log_norms, meta=None) -> EstimateTrace:
    """Trace for ``lim (1/n) log N_n`` with ``log N`` subadditive: every term is an upper bound,
    the headline is their minimum, the accelerated value comes from the increments."""
    ns = list(ns)
    vals = [(ln / n) if math.isfinite(ln) else -math.inf for n, ln in zip(ns, log_norms)]
    head = min(vals) if vals else math.nan
    acc = None
    if all(math.isfinite(v) for v in log_norms) and len(ns) >= 2:
        incs = [(log_norms[i + 1] - log_norms[i]) / (ns[i + 1] - ns[i]) for i in range(len(ns) - 1)]
        if _settling(incs):
            acc = aitken(incs)
            if acc is None:
                acc = incs[-1]
            # every term bounds the limit from above
            if acc > head + 1e-12:
                acc = None
    elif any(v == -math.inf for v in log_norms):
        acc = -math.inf
    return EstimateTrace(quantity, method, ns, vals, "upper", head, "upper", acc, [], dict(meta or {}))
