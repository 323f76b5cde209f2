"""Scenario files, analysis orchestration and report output."""

from __future__ import annotations

import copy
import csv
import difflib
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .analysis import (
    characteristic_coefficients,
    common_fixed_point,
    eigenvalues,
    growth_factor,
    linearize,
    word_product,
)
from .core import RegimeSystem, SwitchingSignal, simulate
from .errors import ExpressionSyntaxError, NumericalError, RegimeDynError, ScenarioError, VariableIndexError
from .expression import parse_expression
from .jsr import exponential_envelope_fit, jsr_bounds, stability_verdict
from .operators import AffineOperator, CollateralOperator, ExpressionMap
from .structure import SamplingPlan, invariant_law_verdict, irreducibility_check, topology_report

ANALYSES = ("fixed-point", "linearize", "jsr", "commute", "irreducibility", "topology", "simulate")
DEFAULTS = {
    "fixed_point": {"tol": 1e-10, "max_iter": 100},
    "jsr": {"depth": 12, "gap": 1e-2, "budget": 10**6, "norm": "inf"},
    "sampler": {"box": [-2.0, 4.0], "grid_points": 11, "random_points": 1000, "seed": 0,
                "max_grid": 100_000},
    "tolerance": 1e-9,
    "horizon": 0,
}


def _data_file(name):
    return resources.files("regimedyn").joinpath("data", name)


SCHEMA = json.loads(_data_file("scenario.schema.json").read_text(encoding="utf-8"))


def bundled_scenario(name: str = "collateral") -> Path:
    """Path of a scenario shipped with the package."""
    path = _data_file(f"{name}.json")
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return Path(str(path))


# -- loading ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scenario:
    config: dict  # resolved configuration, defaults filled in
    system: RegimeSystem
    signal: SwitchingSignal | None
    initial_state: np.ndarray | None
    horizon: int
    analyses: tuple
    sampler: SamplingPlan
    source: str | None = None

    @property
    def dimension(self):
        return self.system.dimension

    def with_overrides(self, *, seed=None, depth=None, gap=None, tol=None, analyses=None):
        """Copy with CLI-style overrides applied and re-validated."""
        cfg = copy.deepcopy(self.config)
        if seed is not None:
            if "signal" in cfg and "seed" in cfg["signal"]:
                cfg["signal"]["seed"] = int(seed)
            cfg["sampler"]["seed"] = int(seed)
        if depth is not None:
            cfg["jsr"]["depth"] = int(depth)
        if gap is not None:
            cfg["jsr"]["gap"] = float(gap)
        if tol is not None:
            cfg["fixed_point"]["tol"] = float(tol)
            cfg["tolerance"] = float(tol)
        if analyses is not None:
            cfg["analyses"] = [a for a in ANALYSES if a in analyses]
        return scenario_from_dict(cfg, source=self.source)


def _json_path(parts):
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _schema_error(err):
    """Turn a jsonschema error into a ScenarioError, descending into oneOf branches."""
    while err.validator == "oneOf" and err.context:
        inst = err.instance
        disc = next((k for k in ("type", "kind") if isinstance(inst, dict) and k in inst), None)
        by_branch = {}
        for e in err.context:
            by_branch.setdefault(e.relative_schema_path[0], []).append(e)
        if disc is not None:
            # the branch whose discriminator accepted the value explains the failure
            matched = [b for b, es in by_branch.items()
                       if not any(disc in e.relative_schema_path for e in es)]
            if len(matched) == 1:
                err = jsonschema.exceptions.best_match(by_branch[matched[0]])
                continue
            if not matched:
                allowed = []
                for sub in err.schema["oneOf"]:
                    d = sub.get("properties", {}).get(disc, {})
                    allowed += [d["const"]] if "const" in d else d.get("enum", [])
                return ScenarioError(f"unknown {disc} {inst[disc]!r}; expected one of {allowed}",
                                     _json_path(err.absolute_path))
        err = jsonschema.exceptions.best_match(err.context)
    loc = _json_path(err.absolute_path)
    if err.validator == "additionalProperties":
        allowed = sorted(err.schema.get("properties", {}))
        extras = sorted(set(err.instance) - set(allowed))
        msgs = []
        for name in extras:
            hint = difflib.get_close_matches(name, allowed, n=1)
            msgs.append(f"unknown field {name!r}" + (f"; did you mean {hint[0]!r}?" if hint else
                                                     f"; allowed: {allowed}"))
        return ScenarioError("; ".join(msgs), loc)
    return ScenarioError(err.message, loc)


def _text_line(text, needle):
    if not text:
        return None
    i = text.find(json.dumps(needle))
    return None if i < 0 else text.count("\n", 0, i) + 1


def _loc(source, text, path, needle=None):
    line = _text_line(text, needle) if needle is not None else None
    if source and line:
        return f"{source}:{line}: {path}"
    if source:
        return f"{source}: {path}"
    return path


def _build_operator(spec, n, where, source, text):
    kind = spec["type"]
    if kind == "affine":
        A = np.asarray(spec["matrix"], dtype=float) if all(len(r) == n for r in spec["matrix"]) else None
        if A is None or A.shape != (n, n):
            raise ScenarioError(f"affine matrix must be {n}x{n}", _loc(source, text, f"{where}.matrix"))
        c = spec.get("offset", [0.0] * n)
        if len(c) != n:
            raise ScenarioError(f"affine offset must have length {n}", _loc(source, text, f"{where}.offset"))
        return AffineOperator(A, np.asarray(c, dtype=float))
    if kind == "collateral":
        if n != 2:
            raise ScenarioError("collateral operators require dimension 2", _loc(source, text, where))
        params = {k: spec[k] for k in ("alpha", "beta", "mu", "nu", "qbar", "bbar") if k in spec}
        return CollateralOperator(spec["side"], **params)
    comps = spec["components"]
    if len(comps) != n:
        raise ScenarioError(f"expression operator needs {n} components, got {len(comps)}",
                            _loc(source, text, f"{where}.components"))
    trees = []
    for j, t in enumerate(comps):
        try:
            trees.append(parse_expression(t, n))
        except (ExpressionSyntaxError, VariableIndexError) as exc:
            raise ScenarioError(f"cannot parse {t!r}: {exc}",
                                _loc(source, text, f"{where}.components[{j}]", t)) from None
    return ExpressionMap(tuple(trees), tuple(comps))


def _check_rows(rows, path, indexed=True):
    for i, row in enumerate(rows):
        total = math.fsum(row)
        if abs(total - 1.0) > 1e-12:
            where = f"{path}[{i}]" if indexed else path
            name = f"row {i}" if indexed else "weights"
            raise ScenarioError(f"probability {name} sums to {total:.12g}, not 1", where)


def scenario_from_dict(data: dict, source: str | None = None, text: str | None = None) -> Scenario:
    """Validate a decoded scenario document and build the runtime objects."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        exc = _schema_error(errors[0])
        if source:
            exc = ScenarioError(str(exc), source)
        raise exc

    cfg = copy.deepcopy(data)
    n = cfg["dimension"]
    for key in ("fixed_point", "jsr", "sampler"):
        cfg[key] = {**DEFAULTS[key], **cfg.get(key, {})}
    cfg.setdefault("tolerance", DEFAULTS["tolerance"])
    cfg.setdefault("horizon", DEFAULTS["horizon"])

    labels = [r["label"] for r in cfg["regimes"]]
    dup = sorted({l for l in labels if labels.count(l) > 1})
    if dup:
        raise ScenarioError(f"duplicate regime labels {dup}", _loc(source, text, "$.regimes"))
    ops = []
    for i, r in enumerate(cfg["regimes"]):
        where = f"$.regimes[{i}].operator"
        try:
            ops.append(_build_operator(r["operator"], n, where, source, text))
        except (ValueError, NumericalError) as exc:
            raise ScenarioError(str(exc), _loc(source, text, where)) from None
    system = RegimeSystem(tuple(ops), tuple(labels))

    def vector(key, value):
        if len(value) != n:
            raise ScenarioError(f"expected a vector of length {n}, got {len(value)}",
                                _loc(source, text, key))
        return np.asarray(value, dtype=float)

    x0 = vector("$.initial_state", cfg["initial_state"]) if "initial_state" in cfg else None
    if "initial_guess" in cfg["fixed_point"]:
        vector("$.fixed_point.initial_guess", cfg["fixed_point"]["initial_guess"])

    signal = None
    if "signal" in cfg:
        sig = cfg["signal"]
        S = system.size

        def ref(value, path):
            try:
                return system.index(value)
            except (KeyError, IndexError):
                raise ScenarioError(f"regime {value!r} does not name a regime; known labels {labels}",
                                    _loc(source, text, path)) from None

        kind = sig["kind"]
        if kind in ("explicit", "periodic"):
            for j, s in enumerate(sig["word"]):
                ref(s, f"$.signal.word[{j}]")
            if kind == "periodic" and not sig["word"]:
                raise ScenarioError("periodic word must be non-empty", _loc(source, text, "$.signal.word"))
            signal = SwitchingSignal(kind, word=tuple(sig["word"]))
        elif kind == "iid":
            if len(sig["weights"]) != S:
                raise ScenarioError(f"weights must have one entry per regime ({S})",
                                    _loc(source, text, "$.signal.weights"))
            _check_rows([sig["weights"]], "$.signal.weights", indexed=False)
            signal = SwitchingSignal.iid(sig["weights"], sig["seed"])
        else:
            P = sig["transition"]
            if len(P) != S or any(len(row) != S for row in P):
                raise ScenarioError(f"transition matrix must be {S}x{S}",
                                    _loc(source, text, "$.signal.transition"))
            _check_rows(P, "$.signal.transition")
            init = sig.get("initial", 0)
            ref(init, "$.signal.initial")
            signal = SwitchingSignal.markov(P, sig["seed"], init)
        if kind == "explicit" and len(sig["word"]) < cfg["horizon"]:
            raise ScenarioError(f"explicit word has {len(sig['word'])} regimes but horizon is {cfg['horizon']}",
                                _loc(source, text, "$.signal.word"))

    if "analyses" not in cfg:
        cfg["analyses"] = [a for a in ANALYSES if a != "simulate" or (signal is not None and x0 is not None)]
    analyses = tuple(a for a in ANALYSES if a in cfg["analyses"])
    if "simulate" in analyses:
        if signal is None:
            raise ScenarioError("simulate requires a signal", _loc(source, text, "$.analyses"))
        if x0 is None:
            raise ScenarioError("simulate requires initial_state", _loc(source, text, "$.analyses"))

    sp = cfg["sampler"]
    box = sp["box"]
    box = tuple(box) if not isinstance(box[0], list) else tuple(tuple(b) for b in box)
    sampler = SamplingPlan(box, sp["grid_points"], sp["random_points"], sp["seed"], sp["max_grid"])
    try:
        sampler.bounds(n)
    except ValueError as exc:
        raise ScenarioError(str(exc), _loc(source, text, "$.sampler.box")) from None

    return Scenario(cfg, system, signal, x0, int(cfg["horizon"]), analyses, sampler, source)


def load_scenario(path) -> Scenario:
    """Read, validate and build a scenario from a JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(data, dict):
        raise ScenarioError("top level must be a JSON object", str(path))
    return scenario_from_dict(data, source=str(path), text=text)


# -- reports ------------------------------------------------------------------


class AnalysisFailed(RegimeDynError):
    """Every requested analysis failed."""


def _plain(obj):
    """Convert numpy containers/scalars to JSON-ready Python values; non-finite -> None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_plain(obj.real), _plain(obj.imag)]
    return obj


@dataclass(eq=False)
class AnalysisReport:
    scenario: dict
    results: dict
    version: str = __version__
    timings: dict | None = None
    artifacts: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        d = {"tool": {"name": "regimedyn", "version": self.version},
             "scenario": _plain(self.scenario),
             "results": _plain(self.results)}
        if self.timings is not None:
            d["timings"] = _plain(self.timings)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d) -> "AnalysisReport":
        return cls(d["scenario"], d["results"], d["tool"]["version"], d.get("timings"))

    def ok(self, name) -> bool:
        return name in self.results and "error" not in self.results[name]


def _matrix_dict(labels, mats):
    return {l: np.asarray(m).tolist() for l, m in zip(labels, mats)}


def _expand(requested):
    need = set(requested)
    if "jsr" in need:
        need.add("linearize")
    if "linearize" in need:
        need.add("fixed-point")
    return [a for a in ANALYSES if a in need]


def run_scenario(scenario: Scenario, analyses=None, *, timings: bool = True, workers: int = 1) -> AnalysisReport:
    """Run the requested analyses in a fixed order and collect a report.

    A failing block is recorded as an ``{"error": ...}`` entry; only when
    every requested block fails is :class:`AnalysisFailed` raised.
    """
    requested = tuple(a for a in ANALYSES if a in (analyses or scenario.analyses))
    plan = _expand(requested)
    system = scenario.system
    labels = system.labels
    cfg = scenario.config
    results, clock, art = {}, {}, {}

    def run(name, fn):
        t0 = time.perf_counter()
        try:
            results[name] = fn()
        except (RegimeDynError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            results[name] = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        clock[name] = time.perf_counter() - t0

    def do_fixed_point():
        fp_cfg = cfg["fixed_point"]
        fp = common_fixed_point(system, fp_cfg.get("initial_guess"), fp_cfg["tol"], fp_cfg["max_iter"])
        art["fixed_point"] = fp
        return {
            "point": fp.point, "converged": fp.converged, "residual": fp.residual,
            "residuals": dict(zip(labels, fp.residuals)), "iterations": fp.iterations,
            "method": fp.method, "worst_regime": labels[fp.worst_regime],
        }

    def do_linearize():
        fp = art.get("fixed_point")
        if fp is None:
            raise NumericalError("no fixed point available for linearization")
        if not fp.converged and not system.all_affine():
            raise NumericalError(f"no common fixed point (residual {fp.residual:.3g} under regime "
                                 f"{labels[fp.worst_regime]}); linearization skipped")
        lin = linearize(system, fp.point)
        art["linearization"] = lin
        return {
            "point": lin.point,
            "jacobians": _matrix_dict(labels, lin.matrices),
            "jacobian_method": {l: "closed-form" if op.has_closed_jacobian else "finite-difference"
                                for l, op in zip(labels, system.operators)},
            "nonsmooth": dict(zip(labels, lin.nonsmooth)),
            "spectra": {l: {"eigenvalues": sp.as_pairs(), "spectral_radius": sp.spectral_radius}
                        for l, sp in zip(labels, lin.spectra)},
        }

    def do_jsr():
        lin = art.get("linearization")
        if lin is None:
            raise NumericalError("JSR needs a linearization")
        j = cfg["jsr"]
        b = jsr_bounds(lin.matrices, j["gap"], j["depth"], j["budget"], j["norm"])
        v = stability_verdict(b)
        art["jsr"] = v
        P = word_product(lin, b.witness_word)
        out = {
            "bounds": {"lower": b.lower, "upper": b.upper, "depth": b.depth, "norm": b.norm_id,
                       "witness_word": [labels[s] for s in b.witness_word],
                       "products_evaluated": b.products_evaluated, "terminated_by": b.terminated_by},
            "verdict": {"status": v.status, "margin": v.margin},
            "witness_product": P,
            "witness_spectrum": [[z.real, z.imag] for z in eigenvalues(P).eigenvalues],
            "witness_spectral_radius": eigenvalues(P).spectral_radius,
            "witness_growth_per_step": growth_factor(lin, b.witness_word),
        }
        if P.shape == (2, 2):
            tr, det = characteristic_coefficients(P)
            out["witness_characteristic"] = {"trace": tr, "determinant": det}
        return out

    def do_commute():
        tol = cfg["tolerance"]
        v = invariant_law_verdict(system, scenario.sampler, tol, art.get("linearization"), workers)
        art["commute"] = v
        return {
            "verdict": {"status": v.status, "reason": v.reason},
            "pairs": [_commutation_dict(r) for r in v.evidence],
            "linear_commutators": v.linear_commutators,
        }

    def do_irreducibility():
        r = irreducibility_check(system, scenario.sampler, cfg["tolerance"], workers)
        art["irreducibility"] = r
        return {
            "reducible_candidate": r.reducible_candidate,
            "distinct_pairs": [{"pair": list(p.pair), "max_difference": p.max_difference,
                                "witness": p.witness} for p in r.distinct_pairs],
            "samples_tested": r.samples_tested,
            "note": r.note,
        }

    def do_topology():
        t = topology_report(system)
        return {"regime_count": t.regime_count, "component_count": t.component_count,
                "conjugate_to_invariant_law": t.conjugate_to_invariant_law}

    def do_simulate():
        traj = simulate(system, scenario.signal, scenario.initial_state, scenario.horizon)
        art["trajectory"] = traj
        out = {"horizon": traj.horizon, "regimes": [labels[s] for s in traj.regimes],
               "states": traj.states, "final_state": traj.final}
        fp = art.get("fixed_point")
        if fp is not None and fp.converged:
            dev = traj.deviations(fp.point)
            out["deviations_inf"] = dev
            if traj.horizon >= 2 and np.count_nonzero(dev) >= 2:
                M, alpha = exponential_envelope_fit(traj, fp.point)
                out["envelope_fit"] = {"M": M, "alpha": alpha, "diagnostic_only": True}
        return out

    steps = {"fixed-point": do_fixed_point, "linearize": do_linearize, "jsr": do_jsr,
             "commute": do_commute, "irreducibility": do_irreducibility, "topology": do_topology,
             "simulate": do_simulate}
    for name in plan:
        run(name, steps[name])

    if requested and all("error" in results[a] for a in requested):
        msgs = "; ".join(f"{a}: {results[a]['error']['message']}" for a in requested)
        raise AnalysisFailed(f"every requested analysis failed ({msgs})")
    return AnalysisReport(_echo(cfg), results, __version__, clock if timings else None, art)


def _echo(cfg):
    return copy.deepcopy(cfg)


def _commutation_dict(r):
    return {"pair": list(r.pair), "commute": r.commute, "max_discrepancy": r.max_discrepancy,
            "witness": r.witness, "samples_tested": r.samples_tested,
            "samples_failed": r.samples_failed, "tolerance": r.tolerance, "note": r.note}


def _fmt(x):
    return format(float(x), ".17g")


def emit_report(report: AnalysisReport, out_dir) -> list:
    """Write report.json, plus trajectory.csv / deviations.csv when available."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json"]
        (out / "report.json").write_text(report.to_json(), encoding="utf-8", newline="\n")
        sim = report.results.get("simulate")
        if sim and "error" not in sim:
            states = sim["states"]
            n = len(states[0])
            with open(out / "trajectory.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "regime"] + [f"x{i}" for i in range(n)])
                for t, x in enumerate(states):
                    regime = sim["regimes"][t - 1] if t > 0 else ""
                    w.writerow([t, regime] + [_fmt(v) for v in x])
            written.append(out / "trajectory.csv")
            fp = report.results.get("fixed-point")
            if fp and "error" not in fp and fp.get("converged"):
                x_star = np.asarray(fp["point"], dtype=float)
                with open(out / "deviations.csv", "w", encoding="utf-8", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["t", "deviation_inf"])
                    for t, x in enumerate(states):
                        w.writerow([t, _fmt(np.max(np.abs(np.asarray(x) - x_star)))])
                written.append(out / "deviations.csv")
    except OSError as exc:
        raise ScenarioError(f"cannot write report: {exc.strerror}", str(out)) from None
    return written


# -- built-in reproduction of the two-regime collateral example ---------------

REFERENCE_VALUES = {
    "q_star": 1.0,
    "b_star": 1.0,
    "A_N": [[0.8, 0.4], [0.0, 0.8]],
    "A_C": [[0.8, 0.0], [0.4, 0.8]],
    "rho_A_N": 0.8,
    "rho_A_C": 0.8,
    "A_C_A_N": [[0.64, 0.32], [0.32, 0.80]],
    "trace": 1.44,
    "determinant": 0.4096,
    "lambda_1": 1.0498,
    "lambda_2": 0.3902,
    "rho_product": 1.0498,
}
EXACT_TOL = 4 * np.finfo(float).eps


def _row(quantity, computed, reference, tol):
    if isinstance(reference, str) or isinstance(reference, bool):
        ok = computed == reference
        err = None
    else:
        err = float(np.max(np.abs(np.asarray(computed, dtype=float) - np.asarray(reference, dtype=float))))
        ok = err <= tol
    return {"quantity": quantity, "computed": computed, "reference": reference,
            "tolerance": tol, "error": err, "pass": bool(ok)}


def paper_example(*, timings: bool = False, workers: int = 1) -> AnalysisReport:
    """Run the bundled collateral scenario and compare against reference values."""
    from .models import collateral_expression_system

    scen = load_scenario(bundled_scenario("collateral"))
    report = run_scenario(scen, ANALYSES, timings=timings, workers=workers)
    ref = REFERENCE_VALUES
    art = report.artifacts
    rows = []
    fp = art["fixed_point"]
    rows.append(_row("q*", fp.point[0], ref["q_star"], 1e-10))
    rows.append(_row("b*", fp.point[1], ref["b_star"], 1e-10))
    rows.append(_row("max fixed-point residual", fp.residual, 0.0, 1e-10))
    lin = art["linearization"]
    A_N, A_C = lin.matrix("N"), lin.matrix("C")
    rows.append(_row("A_N", A_N.tolist(), ref["A_N"], 1e-9))
    rows.append(_row("A_C", A_C.tolist(), ref["A_C"], 1e-9))
    fd = linearize(collateral_expression_system(), fp.point, finite_difference=True)
    rows.append(_row("A_N (finite differences)", fd.matrix("N").tolist(), ref["A_N"], 1e-6))
    rows.append(_row("A_C (finite differences)", fd.matrix("C").tolist(), ref["A_C"], 1e-6))
    rows.append(_row("rho(A_N)", lin.spectra[0].spectral_radius, ref["rho_A_N"], 1e-10))
    rows.append(_row("rho(A_C)", lin.spectra[1].spectral_radius, ref["rho_A_C"], 1e-10))
    P = word_product(lin, ("N", "C"))
    rows.append(_row("A_C A_N", P.tolist(), ref["A_C_A_N"], EXACT_TOL))
    tr, det = characteristic_coefficients(P)
    rows.append(_row("trace(A_C A_N)", tr, ref["trace"], 1e-12))
    rows.append(_row("det(A_C A_N)", det, ref["determinant"], 1e-12))
    spec = eigenvalues(P)
    rows.append(_row("lambda_1", spec.eigenvalues[0].real, ref["lambda_1"], 5e-4))
    rows.append(_row("lambda_2", spec.eigenvalues[1].real, ref["lambda_2"], 5e-4))
    rows.append(_row("rho(A_C A_N)", spec.spectral_radius, ref["rho_product"], 5e-4))
    verdict = art["jsr"]
    rows.append(_row("JSR lower bound", verdict.bounds.lower, math.sqrt(ref["rho_product"]), 5e-4))
    rows.append(_row("JSR verdict", verdict.status, "UnstableCertified", None))
    rows.append(_row("regime N stable in isolation", bool(lin.spectra[0].spectral_radius < 1), True, None))
    rows.append(_row("regime C stable in isolation", bool(lin.spectra[1].spectral_radius < 1), True, None))
    rows.append(_row("invariant-law representation", art["commute"].status, "RuledOut", None))
    irr = art["irreducibility"]
    rows.append(_row("distinct regime pair", ",".join(irr.distinct_pairs[0].pair) if irr.distinct_pairs else "",
                     "N,C", None))
    topo = report.results["topology"]
    rows.append(_row("connected components", str(topo["component_count"]), "2", None))
    rows.append(_row("conjugate to an invariant law", topo["conjugate_to_invariant_law"], False, None))
    report.results["reference_comparison"] = {"rows": rows, "all_pass": all(r["pass"] for r in rows)}
    return report


def format_comparison(block) -> str:
    def show(v):
        if isinstance(v, float):
            return f"{v:.10g}"
        if isinstance(v, list):
            return json.dumps(_plain(v))
        return str(v)

    header = ("quantity", "computed", "reference", "tol", "status")
    body = [(r["quantity"], show(r["computed"]), show(r["reference"]),
             "exact" if r["tolerance"] is None else f"{r['tolerance']:.1g}",
             "PASS" if r["pass"] else "FAIL") for r in block["rows"]]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(5)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines)
