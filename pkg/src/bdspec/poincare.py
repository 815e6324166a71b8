"""Isoperimetric constants for the L^{p/2}-type inequalities.

Only the power-norm instances are shipped: the indicator norm of a block is
its weight to the power 2/p, which is all the closed formulas need. Every
constant comes with the factor-4 bracket on the optimal constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import series
from .errors import WrongVariant
from .estimates import _mu_tail_array, _nu_tail_array
from .model import BoundaryCode, ChainModel, bilateral_log_weights, build_weights

VARIANTS = ("bilateral_8_4", "half_line_8_6", "neumann_8_9")


@dataclass(frozen=True)
class SobolevConstant:
    p: float
    variant: str
    B: float
    extremum: Optional[series.ExtremumReport]

    @property
    def bracket(self):
        if not math.isfinite(self.B):
            return (math.inf, math.inf)
        return (self.B, 4.0 * self.B)


def _log_cum(x):
    out = np.empty(len(x))
    run = -math.inf
    for k, v in enumerate(x):
        run = np.logaddexp(run, v)
        out[k] = run
    return out


def sobolev_constant(model: ChainModel, p: float, variant: str,
                     n_max: int = 10 ** 5, half_window: int = 256) -> SobolevConstant:
    """The block-infimum / tail-supremum constant of the chosen variant.

    neumann_8_9 is the reflecting-origin supremum (at p = 2 it reduces to the
    plain Hardy constant); half_line_8_6 the Dirichlet-origin two-index
    infimum; bilateral_8_4 the two-sided one, carried in the log domain.
    """
    if p < 2.0:
        raise WrongVariant("p must be >= 2")
    if variant not in VARIANTS:
        raise WrongVariant("variant must be one of %s" % (VARIANTS,))
    if variant == "neumann_8_9":
        if model.boundary not in (BoundaryCode.ND, BoundaryCode.NN) or model.base != 0:
            raise WrongVariant("neumann_8_9 needs a reflecting origin")
        ws = build_weights(model, n_max)
        tails = _nu_tail_array(ws, "b")
        with np.errstate(all="ignore"):
            obj = tails * ws.mu_prefix_arr ** (2.0 / p)
        if not math.isfinite(ws.nu_b_total.value):
            return SobolevConstant(p, variant, math.inf, None)
        obj = np.where(np.isfinite(obj), obj, 0.0)
        W = len(obj)
        k = int(np.argmax(obj))
        cert = series.Certainty.CERTIFIED if ws.finite else series.Certainty.WINDOW_STOPPED
        rep = series.ExtremumReport(ws.base + k, float(obj[k]), cert, (ws.base, ws.top))
        if not ws.finite:
            # divergence certificate: the tail keeps climbing across a long
            # baseline (slow power growth) or the values already exploded
            trending = obj[W - 1] > 1.1 * obj[W // 8] and obj[W - 1] > 0.3 * obj[k]
            if obj[k] > series.DIVERGENCE_CAP or trending:
                return SobolevConstant(p, variant, math.inf, rep)
        return SobolevConstant(p, variant, rep.value, rep)
    if variant == "half_line_8_6":
        if model.boundary is not BoundaryCode.DD or model.base != 1:
            raise WrongVariant("half_line_8_6 needs the Dirichlet-origin shape")
        ws = build_weights(model, n_max)
        with np.errstate(over="ignore"):
            nu_a_pref = np.cumsum(ws.nu_a)
        nub_tails = _nu_tail_array(ws, "b")
        with np.errstate(all="ignore"):
            inv_left = np.where(nu_a_pref > 0, 1.0 / nu_a_pref, math.inf)
            inv_right = np.where(nub_tails > 0, 1.0 / nub_tails, math.inf)
        inv_left = np.where(np.isfinite(nu_a_pref), inv_left, 0.0)
        inv_right = np.where(np.isfinite(nub_tails), inv_right, 0.0)
        with np.errstate(over="ignore"):
            mid = np.concatenate([[0.0], np.cumsum(ws.mu)])

        def row(n, ms):
            k = n - ws.base
            ms0 = np.asarray(ms) - ws.base
            blk = mid[ms0 + 1] - mid[k]
            with np.errstate(all="ignore"):
                return (inv_left[k] + inv_right[ms0]) * blk ** (-2.0 / p)

        rep = series.extremize_pairs(row, "inf", ws.base, lambda n: n,
                                     n_hi=ws.top if ws.finite else None,
                                     m_hi=ws.top, hard_cap=len(ws.mu) - 1)
        B = 1.0 / rep.value if rep.value > 0 else math.inf
        return SobolevConstant(p, variant, B, rep)
    # bilateral_8_4 in the log domain
    if model.boundary is not BoundaryCode.DD_BILATERAL:
        raise WrongVariant("bilateral_8_4 needs a bilateral model")
    idx, log_mu, log_mua, log_mub = bilateral_log_weights(model, half_window)
    la = _log_cum(-log_mua)
    lb = _log_cum((-log_mub)[::-1])[::-1]
    W = len(idx)
    log_best = math.inf
    arg = None
    for mi in range(W):
        lmid = _log_cum(log_mu[mi:])
        vals = np.logaddexp(-la[mi], -lb[mi:]) - (2.0 / p) * lmid
        k = int(np.argmin(vals))
        if vals[k] < log_best:
            log_best, arg = float(vals[k]), (int(idx[mi]), int(idx[mi + k]))
    rep = series.ExtremumReport(arg, math.exp(log_best) if math.isfinite(log_best) else math.inf,
                                series.Certainty.WINDOW_STOPPED, (int(idx[0]), int(idx[-1])))
    B = math.exp(-log_best) if math.isfinite(log_best) else math.inf
    return SobolevConstant(p, variant, B, rep)


def b_constants_split(model: ChainModel, p: float,
                      n_max: int = 10 ** 5, half_window: int = 256):
    """One-sided constants B_L, B_R, the product constant B, and the S flag.

    B equals B_L wedge B_R when the reciprocal death series diverges; in
    general it is sandwiched between them and the (a_1 S)-deflated value.
    """
    if p < 2.0:
        raise WrongVariant("p must be >= 2")
    if model.boundary is BoundaryCode.DD_BILATERAL:
        idx, log_mu, log_mua, log_mub = bilateral_log_weights(model, half_window)
        la = _log_cum(-log_mua)
        lb = _log_cum((-log_mub)[::-1])[::-1]
        lmu_pre = _log_cum(log_mu)
        lmu_suf = _log_cum(log_mu[::-1])[::-1]
        W = len(idx)
        # B_L = sup_n nu_a[-M, n] * ||1_{[n, N]}||, norm = mu[n, N]^{2/p}
        with np.errstate(all="ignore"):
            bl = la + (2.0 / p) * lmu_suf
            br = lb + (2.0 / p) * lmu_pre
        B_L = math.inf if np.max(bl) > 600 else float(np.exp(np.max(bl)))
        B_R = math.inf if np.max(br) > 600 else float(np.exp(np.max(br)))
        log_best = -math.inf
        for mi in range(W):
            lmid = _log_cum(log_mu[mi:])
            vals = la[mi] + lb[mi:] + (2.0 / p) * lmid
            log_best = max(log_best, float(np.max(vals)))
        B = float(np.exp(log_best)) if log_best < 600 else math.inf
        S = math.inf if la[-1] > 600 else float(np.exp(la[-1]))
        return B_L, B_R, B, S
    if model.boundary is not BoundaryCode.DD or model.base != 1:
        raise WrongVariant("split constants need the Dirichlet-origin shape")
    ws = build_weights(model, n_max)
    with np.errstate(over="ignore"):
        nu_a_pref = np.cumsum(ws.nu_a)
    mu_tails = _mu_tail_array(ws)
    nub_tails = _nu_tail_array(ws, "b")
    pref = ws.mu_prefix_arr
    with np.errstate(all="ignore"):
        bl = nu_a_pref * mu_tails ** (2.0 / p)
        br = nub_tails * pref ** (2.0 / p)
    B_L = float(np.max(np.where(np.isfinite(bl), bl, math.inf)))
    B_R = float(np.max(np.where(np.isfinite(br), br, math.inf)))
    with np.errstate(over="ignore"):
        mid = np.concatenate([[0.0], np.cumsum(ws.mu)])
    best = -math.inf
    for k in range(len(ws.mu)):
        ns = np.arange(k, len(ws.mu))
        with np.errstate(all="ignore"):
            vals = nu_a_pref[k] * nub_tails[ns] * (mid[ns + 1] - mid[k]) ** (2.0 / p)
        vals = vals[np.isfinite(vals)]
        if len(vals):
            best = max(best, float(np.max(vals)))
    S = ws.nu_a_total.value
    if ws.finite:
        mb = ws.mu[-1] * ws.b[-1]
        S = float(np.sum(ws.nu_a)) + (1.0 / mb if mb > 0 else math.inf)
    return B_L, B_R, float(best), S


def recurrent_blowup_check(model: ChainModel, p: float, n_max: int = 10 ** 5) -> str:
    """'blowup' when both defining series diverge (B = inf for every p >= 2)."""
    ws = build_weights(model, min(n_max, 8192))
    mu_div = not math.isfinite(ws.mu_total.value)
    nu_div = not math.isfinite(ws.nu_b_total.value)
    if mu_div and nu_div:
        return "blowup"
    return "not_applicable"
