"""Chain specifications, symmetric-measure weights and uniqueness checks.

A :class:`ChainModel` holds the boundary code, the index range and the rate
rules. :func:`build_weights` turns it into windowed weight arrays (with
log-domain fallback for weights beyond float range) plus certified or
estimated tail sums. :func:`classify_uniqueness` evaluates the three
divergence conditions that decide whether the process / Dirichlet form is
unique.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import series
from .errors import BadParameter, NonPositiveRate, Overflow

LOG_LINEAR_CAP = 600.0  # |log mu| beyond this: linear arrays saturate, use logs
DEFAULT_NMAX = 10 ** 5
DEFAULT_TOL = 1e-10


class BoundaryCode(enum.Enum):
    NN = "NN"
    ND = "ND"
    DN = "DN"
    DD = "DD"
    DD_BILATERAL = "DD_bilateral"

    @property
    def origin_reflecting(self) -> bool:
        return self in (BoundaryCode.NN, BoundaryCode.ND)


class Verdict(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ChainModel:
    """Birth-death chain with optional killing.

    Rate callables must accept an int64 ndarray and return a float ndarray.
    ``lo``/``hi`` bound the state space; ``None`` means unbounded on that
    side. Conventions: ND/NN start at 0 (reflecting origin, death(0) ignored);
    DN/DD start at 1 (Dirichlet at 0, death(1) > 0 acts as killing); finite
    ``hi`` is a Dirichlet point at hi+1 for ND/DD and a reflecting top
    (birth(hi) = 0) for DN/NN.
    """
    boundary: BoundaryCode
    lo: Optional[int]
    hi: Optional[int]
    birth: Callable[[np.ndarray], np.ndarray]
    death: Callable[[np.ndarray], np.ndarray]
    killing: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tail_hint: Optional[dict] = None
    name: str = ""
    params: dict = field(default_factory=dict)
    source: Optional[dict] = None  # JSON document this model was loaded from

    def __post_init__(self):
        if self.boundary is BoundaryCode.DD_BILATERAL:
            if self.lo is not None and self.hi is not None and self.hi < self.lo:
                raise BadParameter("empty bilateral range")
        else:
            if self.lo is None:
                raise BadParameter("half-line models need a finite left end")

    @property
    def base(self) -> int:
        if self.lo is not None:
            return self.lo
        return 0  # bilateral reference point

    def size(self) -> Optional[int]:
        if self.lo is None or self.hi is None:
            return None
        return self.hi - self.lo + 1

    def rates(self, i0: int, i1: int):
        """(death, birth, killing) on [i0, i1] with boundary conventions applied."""
        idx = np.arange(i0, i1 + 1, dtype=np.int64)
        a = np.asarray(self.death(idx), dtype=float).copy()
        b = np.asarray(self.birth(idx), dtype=float).copy()
        c = (np.asarray(self.killing(idx), dtype=float).copy()
             if self.killing is not None else np.zeros_like(a))
        if self.boundary is not BoundaryCode.DD_BILATERAL:
            if self.boundary.origin_reflecting and i0 <= self.base:
                a[self.base - i0] = 0.0
            if self.hi is not None and self.boundary in (BoundaryCode.DN, BoundaryCode.NN) \
                    and i1 >= self.hi:
                b[self.hi - i0] = 0.0
        return a, b, c

    def hint(self, key: str):
        if self.tail_hint is None:
            return None
        return self.tail_hint.get(key)


@dataclass(frozen=True)
class WeightSystem:
    """mu/nu weights of a half-line model on a finite window.

    ``mu[k]`` is the weight of state ``base + k``; ``log_mu`` is always exact
    while ``mu`` saturates to 0/inf outside float range. ``convention`` names
    the nu used by the boundary family: 1/(mu_i b_i) for ND/NN, 1/(mu_i a_i)
    for DN/DD. Both variants are available.
    """
    model: ChainModel
    base: int
    mu: np.ndarray
    log_mu: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    convention: str                 # "b" or "a"
    mu_prefix_arr: np.ndarray       # cumulative sums of mu from base
    nu_a: np.ndarray
    nu_b: np.ndarray
    mu_total: series.TailSum
    nu_a_total: series.TailSum
    nu_b_total: series.TailSum
    _suffix_cache: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.mu)

    @property
    def top(self) -> int:
        return self.base + len(self.mu) - 1

    @property
    def finite(self) -> bool:
        return self.model.hi is not None and self.top >= self.model.hi

    def nu(self) -> np.ndarray:
        return self.nu_b if self.convention == "b" else self.nu_a

    def mu_prefix(self, n) -> np.ndarray:
        """mu[base, n] for n in the window (vectorized)."""
        return self.mu_prefix_arr[np.asarray(n) - self.base]

    def _suffix(self, key: str, arr: np.ndarray, total: float) -> np.ndarray:
        """Suffix sums plus the beyond-window remainder.

        Suffix accumulation keeps full relative accuracy at every scale;
        subtracting prefixes from the total would bottom out at the rounding
        floor of the total and inflate deep tails by hundreds of orders.
        """
        cached = self._suffix_cache.get(key)
        if cached is not None:
            return cached
        with np.errstate(over="ignore"):
            suf = np.cumsum(arr[::-1])[::-1]
        rem = 0.0
        if math.isfinite(total) and not self.finite:
            # beyond-window remainder from the trailing blocks; subtracting
            # prefix from total would produce a rounding-noise floor that can
            # exceed deep tails by hundreds of orders of magnitude
            rem = series.estimate_remainder_block(arr, self.base)
            if not math.isfinite(rem):
                rem = max(total - float(suf[0]), 0.0)
        out = np.concatenate([suf + rem, [rem]])
        self._suffix_cache[key] = out
        return out

    def mu_tail(self, n: int) -> float:
        """mu[n, N]; certified by hint or suffix window + remainder estimate."""
        fn = self.model.hint("mu_tail")
        if fn is not None:
            return float(fn(n))
        total = self.mu_total.value
        if not math.isfinite(total):
            return math.inf
        suf = self._suffix("mu", self.mu, total)
        k = min(max(n - self.base, 0), len(suf) - 1)
        return float(suf[k])

    def nu_tail(self, n: int, kind: Optional[str] = None) -> float:
        """nu[n, N] under the requested convention."""
        kind = kind or self.convention
        fn = self.model.hint("nu_%s_tail" % kind)
        if fn is not None:
            return float(fn(n))
        arr = self.nu_b if kind == "b" else self.nu_a
        tot = self.nu_b_total if kind == "b" else self.nu_a_total
        if not math.isfinite(tot.value):
            return math.inf
        suf = self._suffix("nu_%s" % kind, arr, tot.value)
        k = min(max(n - self.base, 0), len(suf) - 1)
        return float(suf[k])

    def certified_tails(self) -> bool:
        return (self.model.hint("mu_tail") is not None or self.mu_total.certified) and \
               (self.model.hint("nu_%s_tail" % self.convention) is not None
                or (self.nu_b_total if self.convention == "b" else self.nu_a_total).certified)


def _sum_with_tail(arr: np.ndarray, term, start: int, finite: bool,
                   hint_total, tol: float) -> series.TailSum:
    """Total of a nonnegative sequence: window part + estimated remainder."""
    if hint_total is not None:
        return series.TailSum(float(hint_total), "closed_form")
    with np.errstate(over="ignore"):
        head = float(arr.sum())
    if not math.isfinite(head):
        return series.TailSum(math.inf, "divergent", len(arr))
    if finite:
        return series.TailSum(head, "converged", len(arr))
    rem = series.estimate_remainder_block(arr, start)
    if not math.isfinite(rem):
        return series.TailSum(math.inf, "divergent", len(arr))
    flag = "converged" if rem <= tol * max(head, 1e-300) else "estimated"
    return series.TailSum(head + rem, flag, len(arr))


def build_weights(model: ChainModel, n_max: int = DEFAULT_NMAX,
                  tol: float = DEFAULT_TOL) -> WeightSystem:
    """Weights by the multiplicative recurrence mu_{n+1} a_{n+1} = mu_n b_n.

    The window ends at the model's top state, at ``n_max`` states, or where
    the linear weights leave float range (log accumulation continues and the
    saturated entries are inf/0; sums involving them are guarded upstream).
    """
    if model.boundary is BoundaryCode.DD_BILATERAL:
        raise BadParameter("use bilateral_log_weights for bilateral models")
    if n_max < 1:
        raise BadParameter("n_max must be >= 1")
    base = model.base
    top = base + n_max - 1 if model.hi is None else min(model.hi, base + n_max - 1)
    a, b, c = model.rates(base, top)
    n = len(a)
    interior_b = b[:-1] if (model.hi is not None and top == model.hi) else b
    if np.any(interior_b <= 0.0):
        raise NonPositiveRate("birth rate <= 0 inside the range")
    if model.hi is not None and top == model.hi and b[-1] < 0.0:
        raise NonPositiveRate("top birth rate must be >= 0")
    if np.any(a[1:] <= 0.0):
        raise NonPositiveRate("death rate <= 0 inside the range")
    if model.boundary in (BoundaryCode.DN, BoundaryCode.DD) and a[0] < 0.0:
        raise NonPositiveRate("death rate at the bottom state must be >= 0")
    if np.any(c < 0.0):
        raise NonPositiveRate("killing rate < 0")
    log_mu = np.zeros(n)
    with np.errstate(divide="ignore"):
        steps = np.log(b[:-1]) - np.log(a[1:])
    log_mu[1:] = np.cumsum(steps)
    if not np.all(np.isfinite(log_mu)):
        raise Overflow("log-weights not finite; rates invalid at some index")
    # multiplicative recurrence mu_{n+1} = mu_n b_n / a_{n+1}: exact where the
    # ratios are, unlike exp of the accumulated logs (which only backs the
    # saturated region)
    with np.errstate(over="ignore"):
        ratios = np.concatenate([[1.0], b[:-1] / a[1:]])
        mu = np.cumprod(ratios)
        mu = np.where(np.isfinite(mu), mu, np.exp(np.clip(log_mu, -745.0, 709.0))
                      * np.where(log_mu > 709.0, math.inf, 1.0))
    hint_log = model.hint("log_mu")
    if hint_log is not None:
        idx = np.arange(base, top + 1, dtype=np.int64)
        log_mu = np.asarray(hint_log(idx), dtype=float)
        with np.errstate(over="ignore"):
            mu = np.exp(log_mu)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        # conventions: 1/0 = inf (a vanished rate), 1/inf = 0 (overflowed weight)
        mub = mu * b
        nu_b = np.where(mub > 0.0, 1.0 / mub, math.inf)
        nu_b = np.where(np.isfinite(mub), nu_b, 0.0)
        mua = mu * a
        nu_a = np.zeros(n)
        nu_a[1:] = np.where(mua[1:] > 0.0, 1.0 / mua[1:], math.inf)
        nu_a[1:] = np.where(np.isfinite(mua[1:]), nu_a[1:], 0.0)
        if model.boundary in (BoundaryCode.DN, BoundaryCode.DD) and a[0] > 0.0:
            nu_a[0] = 1.0 / mua[0]
    convention = "b" if model.boundary in (BoundaryCode.ND, BoundaryCode.NN) else "a"
    finite = model.hi is not None and top == model.hi
    with np.errstate(over="ignore", invalid="ignore"):
        mu_prefix = np.cumsum(mu)
    mu_total = _sum_with_tail(mu, None, base, finite, model.hint("mu_total"), tol)
    nu_a_total = _sum_with_tail(nu_a, None, base, finite, model.hint("nu_a_total"), tol)
    nu_b_total = _sum_with_tail(nu_b, None, base, finite, model.hint("nu_b_total"), tol)
    return WeightSystem(model=model, base=base, mu=mu, log_mu=log_mu, a=a, b=b, c=c,
                        convention=convention, mu_prefix_arr=mu_prefix,
                        nu_a=nu_a, nu_b=nu_b, mu_total=mu_total,
                        nu_a_total=nu_a_total, nu_b_total=nu_b_total)


def bilateral_log_weights(model: ChainModel, half_window: int):
    """Log-domain weights of a bilateral model on [-W, W] (clipped to lo/hi).

    Normalized at the reference point 0 (or the nearest in-range state); only
    ratios matter for every bilateral quantity in this package. Returns
    ``(idx, log_mu, log_mua, log_mub)`` with log(mu_i a_i) = log(mu_{i-1} b_{i-1}).
    """
    lo = -half_window if model.lo is None else max(model.lo, -half_window)
    hi = half_window if model.hi is None else min(model.hi, half_window)
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    hint_log = model.hint("log_mu")
    if hint_log is not None:
        log_mu = np.asarray(hint_log(idx), dtype=float)
        log_b = np.log(np.asarray(model.birth(idx), dtype=float))
    else:
        a = np.asarray(model.death(idx), dtype=float)
        b = np.asarray(model.birth(idx), dtype=float)
        if np.any(a <= 0.0) or np.any(b <= 0.0):
            raise NonPositiveRate("bilateral rates must be positive")
        log_b = np.log(b)
        steps = log_b[:-1] - np.log(a[1:])
        log_mu = np.concatenate([[0.0], np.cumsum(steps)])
        ref = int(np.searchsorted(idx, min(max(0, lo), hi)))
        log_mu -= log_mu[ref]
    log_mub = log_mu + log_b
    log_mua = np.empty_like(log_mu)
    log_mua[1:] = log_mub[:-1]
    if hint_log is not None and (model.lo is None or lo > model.lo):
        # window edge is not a true boundary: extend one step below via the hint
        below = np.asarray([lo - 1], dtype=np.int64)
        log_mua[0] = float(np.asarray(hint_log(below), dtype=float)[0]) \
            + math.log(float(np.asarray(model.birth(below), dtype=float)[0]))
    else:
        a0 = float(np.asarray(model.death(idx[:1]), dtype=float)[0])
        log_mua[0] = log_mu[0] + (math.log(a0) if a0 > 0 else -math.inf)
    return idx, log_mu, log_mua, log_mub


# ---------------------------------------------------------------------------
# uniqueness / regularity classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniquenessVerdict:
    condition_1_2: Verdict
    condition_1_3: Verdict
    condition_9_34: Verdict
    evidence: dict


def _classify_series(terms: np.ndarray, growth_window: int, hint: Optional[str]) -> tuple:
    """HOLDS = series diverges, FAILS = converges (ratio/Kummer test)."""
    if hint == "holds":
        return Verdict.HOLDS, {"hint": True}
    if hint == "fails":
        return Verdict.FAILS, {"hint": True}
    t = np.asarray(terms, dtype=float)
    t = t[np.isfinite(t)]
    if len(t) < growth_window + 2:
        return Verdict.INCONCLUSIVE, {"reason": "too few terms"}
    total = float(t.sum())
    tail = t[-growth_window:]
    partial = np.cumsum(t)
    if total > series.DIVERGENCE_CAP and tail[-1] >= tail[0] * (1 - 1e-12):
        return Verdict.HOLDS, {"partial_sum": total}
    n = np.arange(len(t) - growth_window, len(t) - 1, dtype=float)
    with np.errstate(all="ignore"):
        kummer = n * (tail[:-1] / tail[1:] - 1.0)
    kummer = kummer[np.isfinite(kummer)]
    if len(kummer) >= growth_window // 2:
        k = float(np.median(kummer))
        if k > 1.05:
            return Verdict.FAILS, {"kummer": k, "partial_sum": total}
        if k < 0.95:
            return Verdict.HOLDS, {"kummer": k, "partial_sum": total}
    with np.errstate(all="ignore"):
        ratio = tail[1:] / tail[:-1]
    ratio = ratio[np.isfinite(ratio)]
    if len(ratio) and np.all(ratio < 0.999):
        return Verdict.FAILS, {"ratio": float(np.median(ratio)), "partial_sum": total}
    if len(ratio) and np.all(ratio >= 1.0 - 1e-12) and partial[-1] > 1e3 * partial[len(partial) // 2]:
        return Verdict.HOLDS, {"partial_sum": total}
    return Verdict.INCONCLUSIVE, {"partial_sum": total}


def classify_uniqueness(model: ChainModel, n_max: int = DEFAULT_NMAX,
                        growth_window: int = 64) -> UniquenessVerdict:
    """Evaluate the three uniqueness series up to n_max.

    The verdicts are heuristic for truly asymptotic statements: divergence is
    declared on a capped partial sum with non-decaying increments, convergence
    on a stable Kummer/ratio certificate, everything else is inconclusive.
    """
    if n_max < growth_window or growth_window < 2:
        raise BadParameter("need n_max >= growth_window >= 2")
    ws = build_weights(model, n_max=min(n_max, 4096))
    mu, nu_b, c = ws.mu, ws.nu_b, ws.c
    pref = ws.mu_prefix_arr
    with np.errstate(all="ignore"):
        ok = np.isfinite(mu * nu_b) & (nu_b > 0.0)
        t12 = (nu_b * pref)[ok]
        t13 = (nu_b + mu)[ok]
        t934 = (nu_b * np.cumsum(mu * (1.0 + c)))[ok]
    v12, e12 = _classify_series(t12, growth_window, model.hint("uniq_1_2"))
    v13, e13 = _classify_series(t13, growth_window, model.hint("uniq_1_3"))
    v934, e934 = _classify_series(t934, growth_window, model.hint("uniq_9_34"))
    if v12 is Verdict.HOLDS and v13 is Verdict.FAILS:
        v13 = Verdict.HOLDS  # (1.2) implies (1.3); trust the stronger certificate
        e13 = {"implied_by_1_2": True}
    return UniquenessVerdict(v12, v13, v934,
                             {"1.2": e12, "1.3": e13, "9.34": e934})


# ---------------------------------------------------------------------------
# model-definition files (JSON)
# ---------------------------------------------------------------------------

_RATE_FAMILIES = {
    "zero": lambda p: (lambda i: np.zeros(np.shape(i), dtype=float)),
    "const": lambda p: (lambda i, v=float(p["value"]): np.full(np.shape(i), v, dtype=float)),
    "affine": lambda p: (lambda i, s=float(p["slope"]), t=float(p.get("intercept", 0.0)):
                         s * np.asarray(i, dtype=float) + t),
    "power": lambda p: (lambda i, cf=float(p.get("coef", 1.0)), e=float(p["exponent"]),
                        sh=float(p.get("shift", 0.0)):
                        cf * (np.asarray(i, dtype=float) + sh) ** e),
    "poly": lambda p: (lambda i, cs=[float(x) for x in p["coeffs"]]:
                       sum(cc * np.asarray(i, dtype=float) ** k for k, cc in enumerate(cs))),
}


def _table_rule(values, then: str, base: int):
    vals = [float(v) for v in values]

    def rule(i):
        idx = np.asarray(i, dtype=np.int64) - base
        out = np.empty(idx.shape, dtype=float)
        inside = (idx >= 0) & (idx < len(vals))
        if not np.all(inside):
            if then == "error":
                raise BadParameter("table rate queried outside its range")
            out[~inside] = vals[-1]
        table = np.asarray(vals)
        out[inside] = table[idx[inside]]
        return out

    return rule


def _rate_from_spec(spec, base: int):
    if spec is None:
        return None
    if "table" in spec:
        then = spec.get("then", "error")
        if then not in ("last", "error"):
            raise BadParameter("table 'then' must be 'last' or 'error'")
        return _table_rule(spec["table"], then, base)
    if "catalog" in spec:
        fam = _RATE_FAMILIES.get(spec["catalog"])
        if fam is None:
            raise BadParameter("unknown rate family %r" % spec["catalog"])
        return fam(spec.get("params", {}))
    raise BadParameter("rate spec needs 'catalog' or 'table'")


def _end(v):
    if v in ("inf", "+inf"):
        return None
    if v == "-inf":
        return None
    return int(v)


def model_from_dict(doc: dict) -> ChainModel:
    boundary = BoundaryCode(doc["boundary"])
    lo = _end(doc.get("lo", 1 if boundary in (BoundaryCode.DN, BoundaryCode.DD) else 0))
    hi = _end(doc.get("hi", "inf"))
    base = lo if lo is not None else 0
    birth = _rate_from_spec(doc["birth"], base)
    death = _rate_from_spec(doc["death"], base)
    killing = _rate_from_spec(doc.get("killing"), base)
    return ChainModel(boundary=boundary, lo=lo, hi=hi, birth=birth, death=death,
                      killing=killing, tail_hint=None, name=doc.get("name", "file-model"),
                      source=doc)


def load_model(path: str) -> ChainModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def dump_model(model: ChainModel) -> dict:
    """Round-trippable document; only available for models loaded from one."""
    if model.source is None:
        raise BadParameter("model %r was not built from a document" % model.name)
    return json.loads(json.dumps(model.source))
