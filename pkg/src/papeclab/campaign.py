"""Seeded batch runs of the verification suites.

A campaign builds one random instance per trial from
``np.random.default_rng([seed, trial])``, runs the suite's checks on it and
collects the records. Reports carry no timestamp, so identical configs give
byte-identical output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from . import checks, qkd
from .gf2 import BitMatrix, all_bit_strings, rank, toeplitz_family
from .hilbert import (cnot_matrix, cnot_matrix_phase_form, hadamard_matrix,
                      phase_vector, ptrace_matrix, x_measurement_channel, z_measurement_channel)
from .metrics import fidelity, fidelity_generalized, l1_distance, purified_distance
from .pa import (PecChannel, PecOutcome, STRATEGIES, check_linear_scaling, check_universal2,
                 check_virtuality, check_zero_leakage, clamp_candidate,
                 make_pec_channel, random_density, random_pa_instance, verify_smoothed_bound,
                 verify_lhl_like, verify_phase_error_bound, virtual_pa, virtual_pa_all,
                 zero_leakage_cq_state, PaInstance)

SCHEMA = "pa-pec-lab/1"
SUITES = ("universal2", "virtuality_pa", "theorem1", "lhl_like", "corollary2", "qkd_lemmas",
          "lemma10", "end_to_end", "metrics_sanity")
QKD_SUITES = ("qkd_lemmas", "lemma10", "end_to_end")
DIM_CAP = 2 ** 14
CORRUPTIONS = ("reset",)


class ConfigError(ValueError):
    """Invalid campaign configuration."""


@dataclass
class CampaignConfig:
    suite: str = "theorem1"
    n: int = 2
    m: int = 1
    l: int = 1
    dE: int = 2
    trials: int = 10
    seed: int = 0
    tol: float = 1e-9
    entropy_tol: float = 1e-4
    renyi_tol: float = 1e-2
    eps: float | None = None
    sample: int = 1
    jobs: int = 1
    out: str | None = None
    corrupt_pec: str | None = None

    def validate(self) -> "CampaignConfig":
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        for name in ("n", "m", "l", "dE", "trials", "seed", "sample", "jobs"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be an integer")
        if self.trials < 1 or self.jobs < 1:
            raise ConfigError("trials and jobs must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if not (1 <= self.m <= self.n and 1 <= self.l <= self.n and self.dE >= 1):
            raise ConfigError("need 1 <= m, l <= n and dE >= 1")
        if not (self.tol >= 0 and self.entropy_tol > 0 and self.renyi_tol >= 0):
            raise ConfigError("tolerances must be non-negative")
        if self.eps is not None and not 0 <= self.eps < 1:
            raise ConfigError("eps must lie in [0, 1)")
        if self.suite == "universal2":
            if self.n > 10:
                raise ConfigError("universal2 audit is capped at n = 10")
        elif self.suite != "metrics_sanity":
            if (1 << (2 * self.n)) * self.dE ** 2 > DIM_CAP:
                raise ConfigError("dimension cap 2^(2n) dE^2 <= 2^14 exceeded")
        if self.suite in QKD_SUITES:
            if self.n > 2 or self.dE > 2 or self.sample not in (0, 1):
                raise ConfigError("QKD suites need n <= 2, dE <= 2 and sample in {0, 1}")
        if self.corrupt_pec is not None:
            if self.corrupt_pec not in CORRUPTIONS:
                raise ConfigError(f"unknown corruption {self.corrupt_pec!r}")
            if self.suite != "lhl_like":
                raise ConfigError("corrupt_pec only applies to the lhl_like suite")
        return self

    @classmethod
    def from_dict(cls, obj: dict) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        return cls(**obj)

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("jobs")
        out.pop("out")
        return out


# ---------------------------------------------------------------------------
# per-suite trial bodies


def _trial_rng(cfg: CampaignConfig, trial: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, trial])


def _pa_instance(cfg: CampaignConfig, rng: np.random.Generator) -> PaInstance:
    return random_pa_instance(rng, cfg.n, cfg.m, cfg.dE)


def reset_pec_channel(g: BitMatrix, n: int) -> PecChannel:
    """A deliberately wrong correction that forces ``A`` into ``|0~>``."""
    zero = phase_vector(np.zeros(n, dtype=np.uint8))
    kraus = [np.outer(zero, phase_vector(x).conj()) for x in all_bit_strings(n)]
    return PecChannel(g, "reset", n, kraus, [(i, 0) for i in range(len(kraus))])


def _suite_virtuality(cfg, rng):
    inst = _pa_instance(cfg, rng)
    return [check_virtuality(inst, s, cfg.tol) for s in STRATEGIES], inst


def _suite_phase_error_bound(cfg, rng):
    inst = _pa_instance(cfg, rng)
    res = verify_phase_error_bound(inst, cfg.tol, cfg.entropy_tol)
    out = list(res.checks)
    out.append(check_linear_scaling(inst, float(rng.uniform(0.2, 0.9)), cfg.tol))
    zl = PaInstance(cfg.n, cfg.m, zero_leakage_cq_state(rng, cfg.n, cfg.dE), inst.family)
    out.append(check_zero_leakage(virtual_pa_all(zl, "optimal"), cfg.tol))
    return out, inst


def _suite_lhl(cfg, rng):
    inst = _pa_instance(cfg, rng)
    outcome = None
    if cfg.corrupt_pec == "reset":
        per_g, weights = {}, {}
        for g, p in inst.family:
            per_g[g] = virtual_pa(inst, g, reset_pec_channel(g, cfg.n))
            weights[g] = float(p)
        outcome = PecOutcome(per_g, weights)
    return verify_lhl_like(inst, cfg.tol, cfg.entropy_tol, outcome=outcome), inst


def _suite_smoothed(cfg, rng):
    inst = _pa_instance(cfg, rng)
    cq = inst.initial
    order = np.argsort(cq.probabilities(), kind="stable")
    cands = [cq] + [clamp_candidate(cq, order[:k]) for k in (1, 2) if k < (1 << cfg.n)]
    dists = [purified_distance(cq.to_matrix(), c.to_matrix()) for c in cands]
    eps = max(dists) if cfg.eps is None else cfg.eps
    cands = [c for c, d in zip(cands, dists) if d <= eps + 1e-12]
    return verify_smoothed_bound(inst, cands, eps, cfg.tol, cfg.entropy_tol), inst


def _qkd_instance(cfg, rng):
    return qkd.random_qkd_instance(rng, n=cfg.n, sample=cfg.sample, de=cfg.dE, m=cfg.m, l=cfg.l)


def _suite_qkd_ladder(cfg, rng):
    inst = _qkd_instance(cfg, rng)
    out, tr = qkd.verify_ladder(inst, cfg.tol)
    out += qkd.verify_security_separation(tr["aq"], cfg.tol)
    out.append(qkd.verify_uncertainty(tr["vq2"].psi_pre, cfg.entropy_tol))
    return out, inst


def _suite_renyi_entropy(cfg, rng):
    inst = _qkd_instance(cfg, rng)
    aq = qkd.run_actual_qkd(inst)
    vq2 = qkd.run_virtual_qkd2(inst)
    out, _ = qkd.verify_entropy_from_phase_renyi(aq, vq2.psi_pre, cfg.renyi_tol, cfg.entropy_tol)
    return out, inst


def _suite_end_to_end(cfg, rng):
    inst = _qkd_instance(cfg, rng)
    aq = qkd.run_actual_qkd(inst)
    vq3 = qkd.run_virtual_qkd3(inst)
    eps = cfg.eps or 0.0
    cands = None
    if eps > 0:
        cq = aq.sif
        drop = np.argsort(cq.probabilities(), kind="stable")[:1]
        cands = [c.to_matrix() for c in (cq, clamp_candidate(cq, drop))
                 if purified_distance(cq.to_matrix(), c.to_matrix()) <= eps]
    return qkd.end_to_end_bounds(aq, vq3, eps, cands, cfg.tol, cfg.entropy_tol), inst


def _random_state(rng, d):
    return random_density(rng, d) * rng.uniform(0.3, 1.0)


def _suite_metrics(cfg, rng):
    """Contraction, fidelity identities and the CNOT dual form on one draw."""
    tol = max(cfg.tol, 1e-9)
    k = int(rng.integers(1, 5))
    d = 1 << k
    rho, sigma = _random_state(rng, d), _random_state(rng, d)
    base = l1_distance(rho, sigma)
    out = []
    chans = {"z_measure": z_measurement_channel(("A", d)).apply_matrix,
             "x_measure": x_measurement_channel(("A", d)).apply_matrix}
    if k >= 2:
        chans["partial_trace"] = lambda r: ptrace_matrix(r, [2, d // 2], [1])
        g = BitMatrix.from_rows([rng.integers(0, 2, size=k)])
        if rank(g) == 1:
            for s in ("trivial", "syndrome-only"):
                chan = make_pec_channel(None, g, s).as_channel(("A",))
                chans[f"pec_{s}"] = chan.apply_matrix
    for name, fn in chans.items():
        out.append(checks.leq(f"l1_contraction[{name}]", "metrics", l1_distance(fn(rho), fn(sigma)),
                              base, tol, dim=d))
    r1 = rho / np.trace(rho).real
    s1 = sigma / np.trace(sigma).real
    f = fidelity(r1, s1)
    out.append(checks.leq("fidelity_self", "metrics", abs(fidelity(r1, r1) - 1), 0.0, tol))
    out.append(checks.leq("fidelity_symmetric", "metrics", abs(f - fidelity(s1, r1)), 0.0, tol))
    half = l1_distance(r1, s1) / 2
    out.append(checks.leq("fuchs_van_de_graaf_lower", "metrics", 1 - f, half, tol))
    out.append(checks.leq("fuchs_van_de_graaf_upper", "metrics", half, math.sqrt(max(0.0, 1 - f * f)), tol))
    fg = fidelity_generalized(rho, sigma)
    out.append(checks.leq("generalized_fidelity_range", "metrics", fg, 1.0, tol))
    out.append(checks.leq("generalized_fidelity_self", "metrics",
                          abs(fidelity_generalized(rho, rho) - 1), 0.0, tol))
    kk = int(rng.integers(1, 3))
    dd = 1 << kk
    out.append(checks.leq("cnot_dual_form", "CNOT",
                          float(np.abs(cnot_matrix(kk) - cnot_matrix_phase_form(kk)).max()), 0.0, tol))
    hh = np.kron(hadamard_matrix(kk), hadamard_matrix(kk))
    swap = np.zeros((dd * dd, dd * dd))
    for x in range(dd):
        for y in range(dd):
            swap[y * dd + x, x * dd + y] = 1
    flipped = swap @ cnot_matrix(kk) @ swap
    out.append(checks.leq("cnot_hadamard_reversal", "CNOT",
                          float(np.abs(hh @ cnot_matrix(kk) @ hh - flipped).max()), 0.0, tol))
    return out, {"dim": d}


SUITE_RUNNERS: dict[str, Callable] = {
    "virtuality_pa": _suite_virtuality,
    "theorem1": _suite_phase_error_bound,
    "lhl_like": _suite_lhl,
    "corollary2": _suite_smoothed,
    "qkd_lemmas": _suite_qkd_ladder,
    "lemma10": _suite_renyi_entropy,
    "end_to_end": _suite_end_to_end,
    "metrics_sanity": _suite_metrics,
}


def _descriptor(cfg: CampaignConfig, trial: int, inst) -> dict:
    out = {"trial": trial, "seed": [cfg.seed, trial]}
    if isinstance(inst, PaInstance):
        out.update(n=inst.n, m=inst.m, dE=inst.initial.e_dim, family_size=len(inst.family.members))
    elif isinstance(inst, qkd.QkdInstance):
        out.update(n=inst.n, m=inst.m, l=inst.l, dE=inst.e_dim, sample=inst.sample,
                   sample_test=inst.sample_test, bases=inst.bases,
                   decoder=inst.decoder.kind)
    elif isinstance(inst, dict):
        out.update(inst)
    return out


def run_trial(cfg: CampaignConfig, trial: int) -> dict:
    rng = _trial_rng(cfg, trial)
    result, inst = SUITE_RUNNERS[cfg.suite](cfg, rng)
    record = {"instance": _descriptor(cfg, trial, inst),
              "inequalities": [c.to_json() for c in result]}
    if any(c.verdict == checks.FAIL for c in result) and hasattr(inst, "to_json"):
        # full state for bit-exact replay of failing trials
        record["replay"] = inst.to_json()
    return record


def _universal2_records(cfg: CampaignConfig) -> list[dict]:
    records = []
    for n in range(1, cfg.n + 1):
        for m in range(1, min(cfg.m, n) + 1):
            fam = toeplitz_family(n, m, full_rank_only=False)
            c = check_universal2(fam)
            c.name = f"collision_probability[n={n},m={m}]"
            records.append({"instance": {"trial": len(records), "n": n, "m": m,
                                         "family": "toeplitz", "family_size": len(fam.members)},
                            "inequalities": [c.to_json()]})
    return records


def run_campaign(cfg: CampaignConfig) -> dict:
    cfg.validate()
    if cfg.suite == "universal2":
        records = _universal2_records(cfg)
    elif cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            records = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        records = [run_trial(cfg, t) for t in range(cfg.trials)]
    records.sort(key=lambda r: r["instance"]["trial"])
    summary = {checks.PASS: 0, checks.FAIL: 0, checks.INCONCLUSIVE: 0}
    violations = []
    for r in records:
        for c in r["inequalities"]:
            summary[c["verdict"]] += 1
            if c["verdict"] == checks.FAIL:
                violations.append({"trial": r["instance"]["trial"], "name": c["name"],
                                   "anchor": c["anchor"]})
    from . import __version__
    return {"schema": SCHEMA, "version": __version__, "seed": cfg.seed,
            "config": cfg.to_json(), "records": records, "summary": summary,
            "violations": violations}


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
