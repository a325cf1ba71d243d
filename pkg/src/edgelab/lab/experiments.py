"""Ladder sweeps that turn asymptotic statements into pass/fail verdicts.

A metric "decays within budget" along a ladder ``N_1 < N_2 < ...`` when
each consecutive pair satisfies

    metric(N_{i+1}) <= 0.8 ** log4(N_{i+1} / N_i) * metric(N_i),

i.e. a factor 0.8 per quadrupling of ``N``.  Pairs where the later value
is already below ``FLOOR`` count as decaying, since the metric is then
indistinguishable from rounding noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..chain import ChainSpec
from ..errors import LabError
from ..expansion import (classical_expansion, cumulants_from_pmf, full_expansion,
                         sup_error)
from ..oracle import char_fn, interval_quadrature, pinned_sum_pmfs, residues_of_pmf, sum_pmf
from ..resonance import interval_partition, prokhorov_classify, resonant_points
from ..rpf import rpf_triplets, verify_rpf
from .scenarios import Scenario, generate_scenario, preset

DECAY_RATIO = 0.8
FLOOR = 1e-14
KGRID = np.linspace(-4.0, 4.0, 17)


@dataclass(frozen=True)
class Verdict:
    """One pass/fail decision with what it was measured on."""

    name: str
    metric: str
    threshold: str
    anchor: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "metric": self.metric, "threshold": self.threshold,
                "anchor": self.anchor, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class ExperimentReport:
    experiment: str
    scenario: dict
    params: dict
    rows: list = field(default_factory=list)
    table: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v.passed for v in self.verdicts) and not any(
            f.startswith("error") for f in self.flags)

    def verdict(self, name: str) -> Verdict:
        """A verdict or diagnostic by name."""
        for v in self.verdicts + self.diagnostics:
            if v.name == name:
                return v
        raise KeyError(name)

    def column(self, key: str) -> list:
        return [row.get(key) for row in self.rows]

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "scenario": self.scenario,
            "params": self.params,
            "rows": self.rows,
            "table": self.table,
            "fits": self.fits,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "diagnostics": [v.to_dict() for v in self.diagnostics],
            "flags": list(self.flags),
            "series": self.series,
            "verdict": "PASS" if self.passed else "FAIL",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        """Inverse of :meth:`to_dict`."""
        return cls(d["experiment"], d["scenario"], d["params"], list(d["rows"]),
                   list(d.get("table", [])),
                   dict(d["fits"]), [Verdict(**v) for v in d["verdicts"]], list(d["flags"]),
                   {k: [list(p) for p in v] for k, v in d["series"].items()},
                   [Verdict(**v) for v in d.get("diagnostics", [])])


# --------------------------------------------------------------------------
# budget arithmetic
# --------------------------------------------------------------------------

def allowed_ratio(n1: int, n2: int, ratio: float = DECAY_RATIO) -> float:
    return ratio ** (math.log(n2 / n1) / math.log(4))


def decay_steps(Ns, values, ratio: float = DECAY_RATIO, floor: float = FLOOR) -> list:
    """Per consecutive pair: does the metric shrink within budget?"""
    out = []
    for (n1, v1), (n2, v2) in zip(zip(Ns, values), zip(Ns[1:], values[1:])):
        if v1 is None or v2 is None or not np.isfinite(v1) or not np.isfinite(v2):
            out.append(False)
        elif v2 < floor:
            out.append(True)
        else:
            out.append(bool(v2 <= allowed_ratio(n1, n2, ratio) * v1))
    return out


def decays(Ns, values, ratio: float = DECAY_RATIO, floor: float = FLOOR) -> bool:
    return all(decay_steps(Ns, values, ratio, floor))


def fit_exponent(x, y, floor: float = FLOOR) -> Optional[dict]:
    """Least-squares slope of ``log y`` against ``log x`` with its residual."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (y > floor) & np.isfinite(y)
    if keep.sum() < 2:
        return None
    lx, ly = np.log(x[keep]), np.log(y[keep])
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + icpt)) ** 2)))
    return {"slope": float(slope), "intercept": float(icpt), "rms_residual": resid,
            "points": int(keep.sum())}


_THRESHOLD = f"ratio <= {DECAY_RATIO} per quadrupling of N"


def _decay_verdict(name, metric, anchor, Ns, values):
    steps = decay_steps(Ns, values)
    detail = ", ".join(f"{n1}->{n2}:{'ok' if s else 'no'}"
                       for n1, n2, s in zip(Ns, Ns[1:], steps))
    return Verdict(name, metric, _THRESHOLD, anchor, all(steps), detail)


def _kgrid(mean, sigma):
    return np.unique(np.rint(mean + sigma * KGRID).astype(np.int64))


def _table_rows(N, pmf, expansion):
    ks = np.rint(pmf.mean + pmf.sigma * KGRID).astype(np.int64)
    exact = pmf.pmf(ks)
    approx = expansion.evaluate(ks)
    return [{"N": int(N), "k": int(k), "exact": float(e), "expansion": float(a),
             "abs_error": float(abs(e - a))} for k, e, a in zip(ks, exact, approx)]


def _ladder(scenario, params):
    ladder = params.get("ladder")
    return tuple(int(n) for n in ladder) if ladder else scenario.ladder


def char_remainder(spec: ChainSpec, r: int, n_t: int = 801, width: float = 0.5) -> float:
    """Weighted sup of the normalized characteristic-function remainder.

    Returns the sup over ``|t| <= width * sigma`` of
    ``|E exp(i t W) - exp(-t^2/2)(1 + Q_r(t))| * sigma^(r+1) / max(|t|, |t|^((r+3)(r+2)))``
    with ``W = (S_N - E S_N) / sigma``.
    """
    from ..cumulants import cumulants_at_zero
    from ..expansion import q_value

    cums = cumulants_at_zero(spec, r + 1)
    mean, sigma = cums.mean, cums.sigma
    t = np.linspace(-width * sigma, width * sigma, n_t)
    t = t[t != 0]
    exact = np.exp(-1j * t * mean / sigma) * char_fn(spec, t / sigma)
    approx = np.exp(-t**2 / 2) * (1 + q_value(cums, r, t))
    weight = np.maximum(np.abs(t), np.abs(t) ** ((r + 3) * (r + 2)))
    return float((np.abs(exact - approx) * sigma ** (r + 1) / weight).max())


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

def exp_llt_order_r(scenario: Scenario, params: dict) -> ExperimentReport:
    """Exact-vs-expansion sup errors, scaled by ``sigma_N^r``."""
    r = int(params.get("r", 1))
    kind = params.get("expansion", "classical")
    R = float(params.get("R", 10.0))
    Ns = _ladder(scenario, params)
    rep = ExperimentReport("llt-order-r", scenario.to_dict(),
                           {"r": r, "expansion": kind, "R": R, "ladder": list(Ns)})
    for N in Ns:
        spec = generate_scenario(scenario, N)
        try:
            pmf = sum_pmf(spec)
            exp = (classical_expansion(spec, r) if kind == "classical"
                   else full_expansion(spec, r, R=R, drop=bool(params.get("drop", True))))
        except LabError as exc:
            rep.flags.append(f"error at N={N}: {type(exc).__name__}: {exc}")
            rep.rows.append({"N": N, "error": str(exc)})
            continue
        err = sup_error(pmf, exp)
        rep.rows.append({"N": N, "sigma": pmf.sigma, "mean": pmf.mean, "sup_error": err,
                         "scaled_error": pmf.sigma ** r * err,
                         "slots": sorted(int(a) for a, _ in exp.table)})
        rep.table.extend(_table_rows(N, pmf, exp))
    ok = [row for row in rep.rows if "error" not in row]
    rep.series = {"scaled_error": [[row["sigma"], row["scaled_error"]] for row in ok]}
    rep.fits["scaled_error_vs_sigma"] = fit_exponent([r_["sigma"] for r_ in ok],
                                                     [r_["scaled_error"] for r_ in ok])
    rep.verdicts.append(_decay_verdict(
        "expansion-error-budget", f"sigma_N^{r} * sup_k |P(S_N=k) - expansion(k)|",
        f"edgeworth expansion of order {r}", [r_["N"] for r_ in ok],
        [r_["scaled_error"] for r_ in ok]))
    return rep


def exp_prokhorov(scenario: Scenario, params: dict) -> ExperimentReport:
    """Drop rule ``M_N >= R ln V_N`` and the a=0-only expansion it licenses."""
    R = float(params.get("R", 10.0))
    orders = tuple(params.get("orders", (1, 2)))
    statistic = params.get("statistic", "second")
    Ns = _ladder(scenario, params)
    rep = ExperimentReport("prokhorov", scenario.to_dict(),
                           {"R": R, "orders": list(orders), "statistic": statistic,
                            "ladder": list(Ns)})
    qualifies = []
    specs = {}
    for N in Ns:
        spec = specs[N] = generate_scenario(scenario, N)
        pr = prokhorov_classify(spec, R, statistic)
        row = {"N": N, "V_N": pr.variance, "threshold": pr.threshold, "M_N": pr.M_N,
               "qualifies": bool(pr.M_N >= pr.threshold)}
        for m_row in pr.rows:
            row[f"M_N({m_row['m']})"] = m_row[statistic]
        rep.rows.append(row)
        qualifies.append(row["qualifies"])
    rep.series = {"M_N": [[r_["V_N"] ** 0.5, r_["M_N"]] for r_ in rep.rows],
                  "threshold": [[r_["V_N"] ** 0.5, r_["threshold"]] for r_ in rep.rows]}
    if not all(qualifies):
        rep.flags.append("not-applicable: M_N < R ln V_N at some ladder point")
        rep.verdicts.append(Verdict("drop-rule", "M_N - R ln V_N", ">= 0 at every N",
                                    "quantitative prokhorov criterion", True,
                                    "hypothesis not met; nothing to check"))
        return rep
    for r in orders:
        errs, only_zero = [], True
        for N, row in zip(Ns, rep.rows):
            spec = specs[N]
            pmf = sum_pmf(spec)
            exp = full_expansion(spec, r, R=R, statistic=statistic)
            slots = {a for a, _ in exp.table}
            only_zero &= slots == {0} and not exp.fallbacks
            err = pmf.sigma ** r * sup_error(pmf, exp)
            row[f"scaled_error_r{r}"] = err
            errs.append(err)
            rep.table.extend(_table_rows(N, pmf, exp))
        rep.verdicts.append(Verdict(f"a0-only-r{r}", "slots of the expansion table",
                                    "only a = 0", "quantitative prokhorov criterion",
                                    bool(only_zero)))
        rep.verdicts.append(_decay_verdict(
            f"expansion-error-budget-r{r}", f"sigma_N^{r} * sup error (resonant terms dropped)",
            "quantitative prokhorov criterion", list(Ns), errs))
        rep.series[f"scaled_error_r{r}"] = [[r_["V_N"] ** 0.5, e] for r_, e in zip(rep.rows, errs)]
    return rep


def exp_necessity(scenario: Scenario, params: dict) -> ExperimentReport:
    """Co-occurrence of resonant char-fn decay and expansion success."""
    r = int(params.get("r", 2))
    Ns = _ladder(scenario, params)
    rep = ExperimentReport("necessity", scenario.to_dict(), {"r": r, "ladder": list(Ns)})
    for N in Ns:
        spec = generate_scenario(scenario, N)
        pmf = sum_pmf(spec)
        pts = [p for p in resonant_points(spec.K) if p.m > 1]
        vals = np.abs(char_fn(spec, np.array([p.t for p in pts]))) if pts else np.zeros(1)
        worst = int(np.argmax(vals))
        err = pmf.sigma ** r * sup_error(pmf, classical_expansion(spec, r))
        rep.rows.append({"N": N, "sigma": pmf.sigma,
                         "worst_point": f"{pts[worst].l}/{pts[worst].m}" if pts else "",
                         "char_abs": float(vals[worst]),
                         "char_metric": float(vals[worst]) * pmf.sigma ** (r - 1),
                         "scaled_error": err})
    char = [row["char_metric"] for row in rep.rows]
    errs = [row["scaled_error"] for row in rep.rows]
    v_char = _decay_verdict("char-decay", f"max_j |E exp(i t_j S_N)| * sigma_N^{r - 1}",
                            "necessity of resonant decay", list(Ns), char)
    v_err = _decay_verdict("expansion-error-budget",
                           f"sigma_N^{r} * sup error of the classical expansion",
                           "necessity of resonant decay", list(Ns), errs)
    rep.diagnostics.extend([v_char, v_err])
    rep.flags.extend(f"{v.name}:{'met' if v.passed else 'missed'}" for v in (v_char, v_err))
    agree = [a == b for a, b in zip(decay_steps(Ns, char), decay_steps(Ns, errs))]
    rep.verdicts.append(Verdict("co-occurrence", "char-decay step verdict == error step verdict",
                                "agreement at every ladder step", "necessity of resonant decay",
                                all(agree), ", ".join("agree" if a else "disagree" for a in agree)))
    rep.series = {"char_metric": [[row["sigma"], row["char_metric"]] for row in rep.rows],
                  "scaled_error": [[row["sigma"], row["scaled_error"]] for row in rep.rows]}
    for key in ("char_metric", "scaled_error"):
        rep.fits[f"{key}_vs_sigma"] = fit_exponent(rep.column("sigma"), rep.column(key))
    return rep


def pin_placements(N: int, seed: int, n_random: int = 32, max_pins: int = 2) -> list:
    """Pin steps to sweep: exhaustive for small N, structured plus random above.

    All one-pin placements are used for ``N <= 256`` and all two-pin
    placements for ``N <= 64``; otherwise ``n_random`` random placements
    are added to a fixed structured set (ends, middle, adjacent pairs).
    """
    out = set()
    if N <= 256:
        out.update((n,) for n in range(1, N + 1))
    if max_pins >= 2 and N <= 64:
        out.update((a, b) for a in range(1, N + 1) for b in range(a + 1, N + 1))
    out.update({(1,), (N // 2,), (N,)})
    if max_pins >= 2:
        out.update({(1, N), (N // 3, 2 * N // 3), (N // 2, N // 2 + 1)})
    rng = np.random.default_rng([seed, N])
    if N > 256 or (max_pins >= 2 and N > 64):
        for i in range(n_random):
            ell = 1 if (max_pins < 2 or (i % 2 == 0 and N > 256)) else 2
            out.add(tuple(sorted(rng.choice(np.arange(1, N + 1), ell, replace=False).tolist())))
    return sorted(out, key=lambda p: (len(p), p))


def exp_conditional_equivalence(scenario: Scenario, params: dict) -> ExperimentReport:
    """Conditional mod-m uniformity versus the conditional expansion."""
    r = int(params.get("r", 1))
    max_pins = int(params.get("max_pins", 2))
    n_random = int(params.get("n_random", 32))
    Ns = _ladder(scenario, params)
    rep = ExperimentReport("conditional-equivalence", scenario.to_dict(),
                           {"r": r, "max_pins": max_pins, "n_random": n_random,
                            "ladder": list(Ns)})
    for N in Ns:
        spec = generate_scenario(scenario, N)
        placements = pin_placements(N, scenario.seed, n_random, max_pins)
        laws = pinned_sum_pmfs(spec, placements)
        moduli = range(2, 2 * spec.K + 1)
        tv_max = err_max = char_max = 0.0
        for p in placements:
            tv_avg = err_avg = char_avg = 0.0
            for _, prob, pmf in laws[p]:
                res = [residues_of_pmf(pmf, m) for m in moduli]
                tv = max((law.tv for law in res), default=0.0)
                char = max((float(np.abs(law.fourier[1:]).max()) for law in res), default=0.0)
                exp = classical_expansion(spec, r, cums=cumulants_from_pmf(pmf, r))
                err = pmf.sigma ** r * sup_error(pmf, exp)
                tv_avg += prob * tv
                err_avg += prob * err
                char_avg += prob * char
            tv_max, err_max, char_max = max(tv_max, tv_avg), max(err_max, err_avg), max(char_max, char_avg)
        sigma = sum_pmf(spec).sigma
        rep.rows.append({"N": N, "sigma": sigma, "placements": len(placements),
                         "tv_metric": tv_max * sigma ** (r - 1), "tv_max": tv_max,
                         "cond_char_max": char_max, "llt_metric": err_max})
    tv = rep.column("tv_metric")
    llt = rep.column("llt_metric")
    v_tv = _decay_verdict("uniformity-budget", f"max pin-averaged TV(S_N mod m, uniform) * sigma^{r - 1}",
                          "conditional uniformity equivalence", list(Ns), tv)
    v_llt = _decay_verdict("conditional-expansion-budget",
                           f"max pin-averaged sigma^{r} * sup error of the conditional expansion",
                           "conditional uniformity equivalence", list(Ns), llt)
    rep.diagnostics.extend([v_tv, v_llt])
    rep.flags.append(f"uniformity:{'met' if v_tv.passed else 'missed'}")
    rep.flags.append(f"conditional-expansion:{'met' if v_llt.passed else 'missed'}")
    rep.verdicts.append(Verdict("equivalence", "uniformity verdict == conditional-expansion verdict",
                                "both met or both missed", "conditional uniformity equivalence",
                                v_tv.passed == v_llt.passed,
                                f"uniformity {v_tv.detail}; expansion {v_llt.detail}"))
    rep.series = {"tv_metric": [[row["sigma"], row["tv_metric"]] for row in rep.rows],
                  "llt_metric": [[row["sigma"], row["llt_metric"]] for row in rep.rows]}
    return rep


def exp_resonant_decomposition(scenario: Scenario, params: dict) -> ExperimentReport:
    """Split of the inversion integral into intervals around resonant points."""
    n_k = int(params.get("k_count", 5))
    Ns = _ladder(scenario, params)
    rep = ExperimentReport("resonant-decomposition", scenario.to_dict(),
                           {"k_count": n_k, "ladder": list(Ns)})
    for N in Ns:
        spec = generate_scenario(scenario, N)
        pmf = sum_pmf(spec)
        ks = np.rint(pmf.mean + pmf.sigma * np.linspace(-2, 2, n_k)).astype(np.int64)
        total = np.zeros(ks.size, complex)
        res_max = non_max = 0.0
        for iv in interval_partition(spec.K):
            part = interval_quadrature(spec, (iv.lo, iv.hi), ks).integral(ks) / (2 * np.pi)
            total += part
            if iv.point is None:
                non_max = max(non_max, float(np.abs(part).max()))
            elif iv.point.m > 1:
                res_max = max(res_max, float(np.abs(part).max()))
        recon = float(np.abs(total - pmf.pmf(ks)).max())
        rep.rows.append({"N": N, "sigma": pmf.sigma, "reassembly_error": recon,
                         "resonant_max": res_max, "nonresonant_max": non_max})
    rep.verdicts.append(Verdict("reassembly", "max_k |sum of interval parts - P(S_N=k)|",
                                "< 1e-8 at every N", "fourier split of point probabilities",
                                all(row["reassembly_error"] < 1e-8 for row in rep.rows)))
    rep.verdicts.append(_decay_verdict("nonresonant-decay", "max |non-resonant interval part|",
                                       "fourier split of point probabilities", list(Ns),
                                       rep.column("nonresonant_max")))
    rep.series = {key: [[row["sigma"], row[key]] for row in rep.rows]
                  for key in ("resonant_max", "nonresonant_max")}
    return rep


DEFAULT_Z = (0.0, 0.05, -0.05, 0.05j, -0.05j, 0.035 + 0.035j, 0.035 - 0.035j)


def exp_rpf(scenario: Scenario, params: dict) -> ExperimentReport:
    """Sequential eigen-triplets over a grid of small perturbations."""
    zs = [complex(z) for z in params.get("z_grid", DEFAULT_Z)]
    Ns = _ladder(scenario, params)
    rep = ExperimentReport("rpf", scenario.to_dict(),
                           {"z_grid": [[z.real, z.imag] for z in zs], "ladder": list(Ns)})
    for N in Ns:
        spec = generate_scenario(scenario, N)
        for z in zs:
            seq = rpf_triplets(spec, z, check=False)
            chk = verify_rpf(spec, seq)
            row = {"N": N, "z_re": z.real, "z_im": z.imag,
                   "seed_discrepancy": seq.seed_discrepancy,
                   "max_primal": chk.max_primal, "max_dual": chk.max_dual,
                   "normalization": float(chk.normalization.max()),
                   "decay_ratio": chk.decay_ratio,
                   "lambda_min": float(np.abs(seq.lams).min()),
                   "lambda_max": float(np.abs(seq.lams).max())}
            if z == 0:
                row["exactness"] = float(max(np.abs(seq.lams - 1).max(),
                                             max(np.abs(h - 1).max() for h in seq.hs)))
            rep.rows.append(row)
    res = max(max(r_["seed_discrepancy"], r_["max_primal"], r_["max_dual"]) for r_ in rep.rows)
    ratios = [r_["decay_ratio"] for r_ in rep.rows]
    exact = [r_["exactness"] for r_ in rep.rows if "exactness" in r_]
    anchor = "sequential perron-frobenius triplets"
    rep.verdicts.append(Verdict("eigen-residual", "max interior residual and seed discrepancy",
                                "< 1e-10", anchor, res < 1e-10, f"{res:.3e}"))
    rep.verdicts.append(Verdict("convergence-decay", "geometric ratio of normalized products",
                                "< 0.95", anchor,
                                all(q is not None and q < 0.95 for q in ratios),
                                f"max ratio {max((q for q in ratios if q is not None), default=float('nan')):.3f}"))
    if exact:
        rep.verdicts.append(Verdict("unperturbed-exactness", "max |lambda - 1|, |h - 1| at z = 0",
                                    "< 1e-12", anchor, max(exact) < 1e-12, f"{max(exact):.3e}"))
    rep.series = {"decay_ratio": [[r_["N"], r_["decay_ratio"] or 0.0] for r_ in rep.rows]}
    return rep


EXPERIMENTS: dict = {
    "llt-order-r": exp_llt_order_r,
    "prokhorov": exp_prokhorov,
    "necessity": exp_necessity,
    "conditional-equivalence": exp_conditional_equivalence,
    "resonant-decomposition": exp_resonant_decomposition,
    "rpf": exp_rpf,
}


def run_experiment(experiment: str, scenario, params: Optional[dict] = None) -> ExperimentReport:
    """Run one experiment on a scenario (a :class:`Scenario` or a preset name)."""
    if experiment not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
    if isinstance(scenario, str):
        scenario = preset(scenario)
    return EXPERIMENTS[experiment](scenario, dict(params or {}))
