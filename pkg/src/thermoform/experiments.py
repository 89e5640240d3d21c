"""Experiment configs, task runners and report files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .complexity import (NetSchedule, check_property_star, essential_spectral_potential,
                         forward_entropy, inverse_rami_rate, topological_entropy, topological_pressure)
from .estimates import EstimateTrace, fmt, jsonable
from .fixtures import CATALOG, HYPOTHESIS_KEYS, Fixture, get_fixture
from .measures import MarkovMeasure, PeriodicOrbitMeasure, essential_set, markov_measure, max_ergodic_average
from .observables import CylinderFunction, NodeFunction, constant, cylinder_function
from .systems import FiniteMap, ShiftRestriction, Subshift, from_descriptor, to_descriptor
from .tentropy import (IdentityBundle, closed_form_class, cross_check_identities, legendre_dual,
                       t_entropy_closed_form, t_entropy_partition, t_entropy_radon,
                       verify_variational_principle)
from .transfer import ComponentFunction, check_compatibility, perron_frobenius, spectral_potential

TASKS = ("entropy", "pressure", "lambda", "tau", "omega", "gamma", "ell", "essential", "compat",
         "vp", "identities", "inequalities", "star", "dual")

OUT_ENV = "THERMOFORM_OUT"


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


@dataclass
class ExperimentConfig:
    task: str
    fixture: str | None = None
    system: dict | None = None
    n_max: int | None = None
    eps_ladder: tuple | None = None
    n_ladder: tuple | None = None
    resolution: float | None = None
    depth: int = 3
    psi_index: int = 0
    seed: int = 0
    out: str | None = None
    strict: bool = False
    workers: int = 1

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return jsonable(d)

    def fingerprint(self, fx: Fixture) -> str:
        payload = {"config": self.resolved(), "system": to_descriptor(fx.system()),
                   "fixture": fx.catalog_entry()}
        blob = json.dumps(jsonable(payload), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_FIELDS = {"task": str, "fixture": str, "system": dict, "n_max": int, "eps_ladder": list,
           "n_ladder": list, "resolution": float, "depth": int, "psi_index": int, "seed": int,
           "out": str, "strict": bool, "workers": int}


def validate_config(raw: dict, path: str = "config") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected an object")
    for k in raw:
        if k not in _FIELDS:
            raise ConfigError(f"{path}.{k}: unknown field")
    d = {}
    for k, v in raw.items():
        if v is None:
            continue
        want = _FIELDS[k]
        if want is float and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if want is int and isinstance(v, bool):
            raise ConfigError(f"{path}.{k}: expected int")
        if not isinstance(v, want):
            raise ConfigError(f"{path}.{k}: expected {want.__name__}, got {type(v).__name__}")
        d[k] = v
    if "task" not in d:
        raise ConfigError(f"{path}.task: required")
    if d["task"] not in TASKS:
        raise ConfigError(f"{path}.task: unknown task {d['task']!r}; known: {', '.join(TASKS)}")
    if ("fixture" in d) == ("system" in d):
        raise ConfigError(f"{path}.fixture: give exactly one of fixture / system")
    if "fixture" in d and d["fixture"] not in CATALOG:
        raise ConfigError(f"{path}.fixture: unknown fixture {d['fixture']!r}")
    if "system" in d:
        try:
            from_descriptor(d["system"])
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"{path}.system: {e}") from None
    for k in ("eps_ladder", "n_ladder"):
        if k in d:
            d[k] = tuple(d[k])
    try:
        NetSchedule(eps_ladder=d.get("eps_ladder", (0.5,)), n_ladder=d.get("n_ladder", (1,)))
    except ValueError as e:
        field_name = "eps_ladder" if "eps" in str(e) else "n_ladder"
        raise ConfigError(f"{path}.{field_name}: {str(e).split(': ', 1)[-1]}") from None
    for k in ("n_max", "depth", "workers"):
        if k in d and d[k] < 1:
            raise ConfigError(f"{path}.{k}: must be >= 1")
    if "resolution" in d and not 0 < d["resolution"] < 1:
        raise ConfigError(f"{path}.resolution: must lie in (0, 1)")
    return ExperimentConfig(**d)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON ({e})") from None
    return validate_config(raw)


def inline_fixture(desc: dict) -> Fixture:
    """A fixture around a user-supplied system with unit cocycle and no certified hypotheses."""
    S0 = from_descriptor(desc)

    def unit(S):
        if isinstance(S, Subshift):
            return cylinder_function(1.0, "one")
        if isinstance(S, FiniteMap):
            return NodeFunction(np.ones(S.nodes), "one")
        return constant(1.0, "one")

    def zero():
        if isinstance(S0, Subshift):
            return [cylinder_function(0.0, "zero")]
        if isinstance(S0, FiniteMap):
            return [NodeFunction(np.zeros(S0.nodes), "zero")]
        return [constant(0.0, "zero")]

    sched = NetSchedule(n_ladder=tuple(range(1, 21))) if isinstance(S0, (Subshift, FiniteMap)) else \
        NetSchedule(eps_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6))
    return Fixture("inline", desc.get("variant", "system"), "user system", lambda: from_descriptor(desc), None,
                   unit, zero, {k: False for k in HYPOTHESIS_KEYS}, sched, {"n_max": 20})


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    task: str
    fixture: str
    config: dict
    fingerprint: str
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    failed: bool = False

    def to_dict(self) -> dict:
        return jsonable({"task": self.task, "fixture": self.fixture, "config": self.config,
                         "fingerprint": self.fingerprint, "results": self.results,
                         "failed": self.failed,
                         "tables": {k: {"columns": c, "rows": r} for k, (c, r) in self.tables.items()}})

    def write(self, out_dir: str | os.PathLike) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.fixture}_{self.task}"
        paths = []
        for name, (cols, rows) in self.tables.items():
            p = out / f"{stem}_{name}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for r in rows:
                    w.writerow([_cell(r.get(c)) for c in cols])
            paths.append(p)
        p = out / f"{stem}.json"
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(p)
        return paths


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return "" if v is None else str(v)


NET_COLUMNS = ["n", "epsilon", "spanning_value", "separated_value", "bound_flags"]
SPECTRAL_COLUMNS = ["n", "value", "bound_flags", "method"]
IDENTITY_COLUMNS = ["fixture", "identity", "lhs", "rhs", "gap", "tolerance", "status", "note"]


def _spectral_rows(tr: EstimateTrace) -> list:
    return [{"n": n, "value": v, "bound_flags": tr.bound, "method": tr.method} for n, v in zip(tr.ns, tr.values)]


def _summary(tr: EstimateTrace) -> dict:
    d = tr.to_dict()
    d.pop("cells", None)
    return d


# ---------------------------------------------------------------------------
# quantity helpers


def _schedule(fx: Fixture, cfg: ExperimentConfig) -> NetSchedule:
    s = fx.schedule
    return NetSchedule(eps_ladder=cfg.eps_ladder or s.eps_ladder, n_ladder=cfg.n_ladder or s.n_ladder,
                       resolution=cfg.resolution if cfg.resolution is not None else s.resolution,
                       tail=s.tail, oversample=s.oversample)


def _lam_kwargs(fx: Fixture, cfg: ExperimentConfig) -> dict:
    kw = dict(fx.lam)
    if cfg.n_max:
        kw["n_max"] = cfg.n_max
    return kw


def lam_trace(fx: Fixture, psi, cfg: ExperimentConfig) -> EstimateTrace:
    return spectral_potential(fx.operator().with_potential(psi), **_lam_kwargs(fx, cfg))


def pressure_trace(fx: Fixture, psi, cfg: ExperimentConfig) -> EstimateTrace:
    return topological_pressure(fx.alpha_system(), fx.pressure_observable(psi), _schedule(fx, cfg), log_weight=True)


def ell_trace(fx: Fixture, psi, cfg: ExperimentConfig) -> EstimateTrace:
    kw = _lam_kwargs(fx, cfg)
    return essential_spectral_potential(fx.alpha_system(), fx.weight(psi), kw.get("n_max", 20),
                                        kw.get("resolution", 2.0 ** -8))


def omega_trace(fx: Fixture, cfg: ExperimentConfig) -> EstimateTrace:
    kw = _lam_kwargs(fx, cfg)
    return inverse_rami_rate(fx.alpha_system(), min(kw.get("n_max", 20), 20), kw.get("resolution", 2.0 ** -8))


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# tasks


def _task_entropy(fx, cfg, rep):
    tr = topological_entropy(fx.alpha_system(), _schedule(fx, cfg))
    rep.results["h"] = _summary(tr)
    rep.tables["cells"] = (NET_COLUMNS, tr.cells)


def _task_pressure(fx, cfg, rep):
    psi = fx.psis()[cfg.psi_index]
    tr = pressure_trace(fx, psi, cfg)
    rep.results["P"] = {**_summary(tr), "potential": fx.pressure_observable(psi).name}
    rep.tables["cells"] = (NET_COLUMNS, tr.cells)


def _task_lambda(fx, cfg, rep):
    psi = fx.psis()[cfg.psi_index]
    tr = lam_trace(fx, psi, cfg)
    rep.results["lambda"] = {**_summary(tr), "psi": psi.name}
    rep.tables["trace"] = (SPECTRAL_COLUMNS, _spectral_rows(tr))


def _task_omega(fx, cfg, rep):
    tr = omega_trace(fx, cfg)
    rep.results["omega"] = _summary(tr)
    rep.tables["trace"] = (SPECTRAL_COLUMNS, _spectral_rows(tr))


def _task_ell(fx, cfg, rep):
    psi = fx.psis()[cfg.psi_index]
    tr = ell_trace(fx, psi, cfg)
    rep.results["ell"] = {**_summary(tr), "weight": fx.weight(psi).name}
    rep.tables["trace"] = (SPECTRAL_COLUMNS, _spectral_rows(tr))


def _task_gamma(fx, cfg, rep):
    tr = forward_entropy(fx.alpha_system(), _schedule(fx, cfg))
    rep.results["gamma"] = _summary(tr)
    rep.tables["cells"] = (NET_COLUMNS, tr.cells)


def _task_essential(fx, cfg, rep):
    S = fx.system()
    E = essential_set(S, depth=cfg.depth, declared=fx.declared_essential)
    pts = [str(p) if not isinstance(p, (float, int, tuple)) else p for p in E.points]
    rep.results["essential"] = {"points": pts, "method": E.method, "exact": E.exact,
                                "declared": fx.declared_essential, "details": E.details}
    rep.tables["points"] = (["point", "method", "bound_flags"],
                            [{"point": p, "method": E.method,
                              "bound_flags": "exact" if E.exact else "witnessed-positive"} for p in pts])


def _task_compat(fx, cfg, rep):
    T = fx.operator()
    Y = fx.essential(fx.system()) if fx.essential is not None else None
    if Y is None:
        rep.results["compat"] = {"status": "COMPATIBLE", "details": {"reason": "Y is the whole space"}}
        return
    v = check_compatibility(T, Y, cfg.resolution or 2.0 ** -10)
    rep.results["compat"] = {"status": v.status, "witness": v.witness, "details": v.details}


def _tau_rows(fx, cfg):
    T = fx.operator()
    S = T.system
    rows = []
    for mu in (fx.measures(S) if fx.measures else []):
        label = getattr(mu, "variant", type(mu).__name__)
        if closed_form_class(T.host) is not None:
            try:
                rows.append({"measure": label, "method": "closed_form", "value": t_entropy_closed_form(T, mu),
                             "bound_flags": "exact"})
            except (ValueError, TypeError) as e:
                rows.append({"measure": label, "method": "closed_form", "value": math.nan,
                             "bound_flags": f"refused: {e}"})
        if isinstance(S, (Subshift, FiniteMap)) and isinstance(mu, (MarkovMeasure, PeriodicOrbitMeasure)):
            est = t_entropy_radon(T, mu, n_max=min(cfg.n_max or 4, 6))
            rows.append({"measure": label, "method": "radon", "value": est.headline, "bound_flags": est.bound})
        try:
            est = t_entropy_partition(T, mu, depth_max=cfg.depth, n_max=min(cfg.n_max or 3, 6))
            rows.append({"measure": label, "method": "partition", "value": est.headline, "bound_flags": est.bound})
        except TypeError as e:
            rows.append({"measure": label, "method": "partition", "value": math.nan,
                         "bound_flags": f"refused: {e}"})
    return rows


def _task_tau(fx, cfg, rep):
    rows = _tau_rows(fx, cfg)
    rep.results["tau"] = rows
    rep.tables["tau"] = (["measure", "method", "value", "bound_flags"], rows)


def _task_vp(fx, cfg, rep):
    T = fx.operator()
    fam = None if isinstance(T.system, Subshift) else (fx.measures(T.system) if fx.measures else [])
    kw = _lam_kwargs(fx, cfg)
    rows = verify_variational_principle(T, fx.psis(), fam, tol=1e-3 if fam is None else 0.05,
                                        n_max=kw.get("n_max", 40))
    out = [asdict(r) for r in rows]
    rep.results["vp"] = out
    rep.tables["vp"] = (["psi", "family_max", "lam", "gap", "status", "argmax"], out)
    rep.failed = any(r.status == "FAIL" for r in rows)


def _task_dual(fx, cfg, rep):
    T = fx.operator()
    if not isinstance(T.system, Subshift):
        raise ValueError(f"dual: fixture {fx.name!r} is not a shift")
    mus = fx.measures(T.system) if fx.measures else []
    rows = []
    for mu in mus:
        d = legendre_dual(T, mu, depth=min(cfg.depth, 3), seed=cfg.seed)
        rows.append({"measure": getattr(mu, "variant", "measure"), "dual_value": d.value, "minus_tau": -d.tau,
                     "gap": d.gap, "max_violation": d.max_violation, "iterations": d.iterations,
                     "status": "PASS" if d.max_violation <= 1e-3 and abs(d.gap) <= 0.05 else "FAIL"})
    rep.results["dual"] = rows
    rep.tables["dual"] = (list(rows[0]) if rows else ["measure"], rows)
    rep.failed = any(r["status"] == "FAIL" for r in rows)


def _task_star(fx, cfg, rep):
    S = fx.host()
    eps = (cfg.eps_ladder or (1.0 / 16,))[0]
    v = check_property_star(S, eps, n_max=cfg.n_max or 8)
    rep.results["star"] = {"status": v.status, "details": v.details, "epsilon": eps}


def identity_bundle(fx: Fixture, cfg: ExperimentConfig, psis=None) -> IdentityBundle:
    tau_pairs = []
    if fx.name == "full2":
        S = fx.system()
        TX = fx.operator()
        Y = ShiftRestriction(np.array([[1, 1], [1, 0]]))
        TY = perron_frobenius(S.restrict(Y), fx.cocycle(S))
        for p in (0.3, 0.5, 0.7):
            mu = markov_measure(S, np.array([[1 - p, p], [1.0, 0.0]]))
            a, b = t_entropy_radon(TX, mu).headline, t_entropy_radon(TY, mu).headline
            tau_pairs.append((f"tau_X(mu)=tau_Y(mu) [golden Markov p={p}]", a, b, 1e-3))
    return IdentityBundle(fx.name, fx.operator(), list(psis if psis is not None else fx.psis()),
                          dict(fx.hypotheses), lambda psi: lam_trace(fx, psi, cfg).best,
                          lambda psi: pressure_trace(fx, psi, cfg).headline,
                          lambda psi: ell_trace(fx, psi, cfg).best, tau_pairs,
                          1e-3 if isinstance(fx.system(), Subshift) and fx.name != "cantor" else 0.05,
                          fx.report_inapplicable)


def _task_identities(fx, cfg, rep):
    psis = fx.psis()
    if cfg.workers > 1:
        chunks = _pmap(lambda p: cross_check_identities(identity_bundle(fx, cfg, [p])), psis, cfg.workers)
        rows = [r for c in chunks for r in c if "tau_X" not in r.identity]
        rows += [r for r in chunks[0] if "tau_X" in r.identity]
    else:
        rows = cross_check_identities(identity_bundle(fx, cfg, psis))
    out = [r.as_dict() for r in rows]
    rep.results["identities"] = out
    rep.tables["identities"] = (IDENTITY_COLUMNS, out)
    rep.failed = any(r.status == "FAIL" for r in rows)


INEQUALITY_TOL = 0.05


def inequality_rows(fx: Fixture, cfg: ExperimentConfig) -> tuple[list, dict]:
    """Growth-rate inequalities between h, gamma, omega, P, ell and the maximal cycle mean."""
    S = fx.alpha_system()
    H = fx.hypotheses
    sched = _schedule(fx, cfg)
    h = topological_entropy(S, sched).headline
    gamma = forward_entropy(S, sched).headline
    omega = omega_trace(fx, cfg).best
    a = fx.weight(None)
    P = topological_pressure(S, a, sched).headline
    ell = ell_trace(fx, None, cfg).best if not isinstance(a, ComponentFunction) else \
        essential_spectral_potential(S, a, _lam_kwargs(fx, cfg).get("n_max", 20)).best
    vals = {"h": h, "gamma": gamma, "omega": omega, "P": P, "ell": ell}
    lh = bool(H.get("local_homeo_on_X_alpha"))
    rows = [
        _ineq(fx.name, "gamma <= h", gamma, h, True),
        _ineq(fx.name, "omega <= h", omega, h, lh, "needs a local homeomorphism on the essential set"),
        _ineq(fx.name, "h <= gamma + omega", h, gamma + omega, True),
        _ineq(fx.name, "P - gamma <= ell", P - gamma, ell, lh, "needs a local homeomorphism"),
        _ineq(fx.name, "ell <= P", ell, P, lh, "needs a local homeomorphism"),
    ]
    if isinstance(S, (Subshift, FiniteMap)):
        with np.errstate(divide="ignore"):
            if isinstance(a, NodeFunction):
                lw = NodeFunction(np.log(a.values), f"ln({a.name})")
            elif a.depth == 0:
                lw = CylinderFunction(np.full(S.alphabet_size, math.log(float(a.table))), f"ln({a.name})")
            else:
                lw = CylinderFunction(np.log(a.table), f"ln({a.name})")
        mcm, _ = max_ergodic_average(S, lw)
        vals["max_cycle_mean"] = mcm
        rows.append(_ineq(fx.name, "max cycle mean <= ell", mcm, ell, True))
        rows.append(_ineq(fx.name, "ell <= max cycle mean + omega", ell, mcm + omega, True))
    return rows, vals


def _ineq(fixture, name, lhs, rhs, applicable, note=""):
    """``lhs <= rhs`` up to :data:`INEQUALITY_TOL`."""
    from .tentropy import IdentityRow
    if not applicable:
        return IdentityRow(fixture, name, lhs, rhs, math.nan, INEQUALITY_TOL, "NOT-APPLICABLE", note)
    gap = lhs - rhs
    if math.isnan(gap):
        # both sides -inf: the inequality holds with equality
        gap = 0.0 if lhs == rhs else math.nan
    ok = lhs <= rhs + INEQUALITY_TOL
    return IdentityRow(fixture, name, lhs, rhs, gap, INEQUALITY_TOL, "PASS" if ok else "FAIL", "")


def _task_inequalities(fx, cfg, rep):
    rows, vals = inequality_rows(fx, cfg)
    out = [r.as_dict() for r in rows]
    rep.results["values"] = vals
    rep.results["inequalities"] = out
    rep.tables["inequalities"] = (IDENTITY_COLUMNS, out)
    rep.failed = any(r.status == "FAIL" for r in rows)


_RUNNERS = {"entropy": _task_entropy, "pressure": _task_pressure, "lambda": _task_lambda,
            "tau": _task_tau, "omega": _task_omega, "gamma": _task_gamma, "ell": _task_ell,
            "essential": _task_essential, "compat": _task_compat, "vp": _task_vp,
            "identities": _task_identities, "inequalities": _task_inequalities, "star": _task_star,
            "dual": _task_dual}


def run(cfg: ExperimentConfig) -> Report:
    fx = get_fixture(cfg.fixture) if cfg.fixture else inline_fixture(cfg.system)
    if not 0 <= cfg.psi_index < len(fx.psis()):
        raise ConfigError(f"config.psi_index: fixture {fx.name!r} has {len(fx.psis())} potentials")
    rep = Report(cfg.task, fx.name, cfg.resolved(), cfg.fingerprint(fx))
    rep.results["fixture"] = fx.catalog_entry()
    _RUNNERS[cfg.task](fx, cfg, rep)
    return rep


__all__ = ["TASKS", "ConfigError", "ExperimentConfig", "validate_config", "load_config", "Report", "run",
           "identity_bundle", "inequality_rows", "lam_trace", "pressure_trace", "ell_trace", "OUT_ENV"]
