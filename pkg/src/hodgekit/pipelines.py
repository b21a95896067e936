"""Scenario execution: one pipeline per scenario kind, each returning results and checks.

A check records ``value``, ``limit`` and comparison ``op`` so its flag can be
recomputed from the stored numbers.
"""

from __future__ import annotations

import time
from importlib import resources

import numpy as np

from . import lattice as lat
from .backends import (DGLABackend, TorusBackend, harmonic_norm_ratio, make_backend, operator_norm_probe,
                       validate)
from .core import BlockUpperUnipotent, Tolerances
from .exceptions import ValidationError
from .io import InputError, decode_complex, decode_matrix, parse_json
from .kuranishi import (closedness_defect, majorant_domination, mc_residual, obstruction_series,
                        order_identity_defect, sample_points, series_radius, solve_kuranishi,
                        verify_estimates, volume_family, wp_distance)
from .period import (PolynomialBlockModel, ScalarRayModel, TorusBlockModel, hodge_frame,
                     kuranishi_block_curve, block_bounds_hold, purity_determinant, quasi_period,
                     stability_radius, transversality_check)
from .transport import (KahlerSeed, continue_path, metric_update, positivity_check, MetricField,
                        residual_F, scalar_loop, solve_alpha0, transported_class, type_defect)

SCHEMA_VERSION = "1.0"
KINDS = ("torus-deform", "dgla-solve", "period-map", "kahler-continue", "lattice")
RANDOMIZED = {"torus-deform", "dgla-solve", "period-map", "kahler-continue"}


class Checks(dict):
    def add(self, name: str, value, limit, op: str = "<="):
        if isinstance(value, (bool, np.bool_)):
            v = bool(value)
        elif isinstance(value, (int, np.integer)):
            v = int(value)
        elif isinstance(value, (list, tuple, str)) or value is None:
            v = value
        else:
            v = float(value)
        ok = {"<=": lambda: v <= limit, ">=": lambda: v >= limit, "==": lambda: v == limit,
              "<": lambda: v < limit, ">": lambda: v > limit}[op]()
        self[name] = {"value": v, "limit": limit, "op": op, "pass": bool(ok)}


def _tolerances(doc: dict, tol_override: float | None) -> Tolerances:
    spec = dict(doc.get("tolerances") or {})
    if tol_override is not None:
        spec["eq_tol"] = tol_override
    try:
        return Tolerances(**spec)
    except TypeError as exc:
        raise InputError(f"bad tolerances block: {exc}") from None


def _require(payload: dict, key: str):
    if key not in payload:
        raise InputError(f"scenario lacks required field {key!r}")
    return payload[key]


def _int_field(payload: dict, key: str, default=None, minimum: int = 0) -> int:
    val = payload.get(key, default)
    if val is None:
        raise InputError(f"scenario lacks required field {key!r}")
    if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
        raise InputError(f"field {key!r} must be an integer >= {minimum}, got {val!r}")
    return val


# -- torus-deform -------------------------------------------------------------


def _torus_deform(doc, seed, tol, degree):
    b = make_backend(_require(doc, "backend"))
    if not isinstance(b, TorusBackend):
        raise InputError("torus-deform needs a torus backend")
    basis = [b.beltrami(decode_matrix(m, (b.d, b.d))) for m in _require(doc, "theta")]
    M = degree if degree is not None else _int_field(doc, "degree", minimum=1)
    n_samples = _int_field(doc, "samples", 10, minimum=1)
    phi = solve_kuranishi(b, basis, M)
    checks = Checks()
    higher = [idx for idx in phi.series.coeffs if sum(idx) >= 2]
    checks.add("higher_order_terms", len(higher), 0, "==")
    obs = obstruction_series(phi)
    checks.add("obstruction_terms", len(obs.coeffs), 0, "==")
    probe = operator_norm_probe(b, _int_field(doc, "probe_samples", 20, minimum=1), seed)
    radius = series_radius(phi, probe.constant)
    phi = phi.with_radius(radius)
    points = sample_points(phi.n_params, n_samples, radius, seed)
    mc = max(mc_residual(phi, t).value for t in points)
    checks.add("mc_residual_max", mc, 1e-12)
    fam = volume_family(phi)
    checks.add("closedness_max", max(closedness_defect(fam, t) for t in points), 1e-9)
    est = verify_estimates(phi, fam, points)
    checks.add("estimates_pass", est.passed, True, "==")
    checks.add("estimate_samples_skipped", len(est.skipped), 0, "==")
    results = {"operator_constant": probe.constant, "radius": radius, "harmonic_norm_ratio": harmonic_norm_ratio(b),
               "mc_residual_max": mc, "estimates": est.as_dict(),
               "wp_distance": [wp_distance(fam, t) for t in points]}
    if b.d == 2:
        frame = hodge_frame(b)
        h = float(doc.get("transversality_h", 1e-4))
        t0 = points[0]
        res = transversality_check(kuranishi_block_curve(phi, frame), t0, h)
        checks.add("transversality", res, 1e-8)
        blocks = quasi_period(phi(t0), frame)
        results["blocks_at_first_sample"] = _blocks_dict(blocks)
    return results, checks


def _blocks_dict(blocks: BlockUpperUnipotent) -> dict:
    return {"b01": blocks.b01, "b02": blocks.b02, "b12": blocks.b12,
            "purity_determinant": purity_determinant(blocks)}


# -- dgla-solve ---------------------------------------------------------------


def _dgla_solve(doc, seed, tol, degree):
    b = make_backend(_require(doc, "backend"))
    if not isinstance(b, DGLABackend):
        raise InputError("dgla-solve needs a dgla backend")
    expect = doc.get("expect", "unobstructed")
    if expect not in ("unobstructed", "obstructed"):
        raise InputError("expect must be 'unobstructed' or 'obstructed'")
    M = degree if degree is not None else _int_field(doc, "degree", minimum=1)
    n_samples = _int_field(doc, "samples", 10, minimum=1)
    checks = Checks()
    checks.add("contract_violations", len(validate(b, seed)), 0, "==")
    basis = b.harmonic_basis(1)
    phi = solve_kuranishi(b, basis, M)
    checks.add("order_identity_defect", order_identity_defect(phi), 1e-10)
    obs = obstruction_series(phi, tol=tol.eq_tol)
    if expect == "unobstructed":
        checks.add("obstruction_terms", len(obs.coeffs), 0, "==")
    else:
        checks.add("obstruction_terms", len(obs.coeffs), 1, ">=")
        worst_phi = worst_obs = 0.0
        for j, th in enumerate(basis):
            idx = tuple(2 * int(k == j) for k in range(len(basis)))
            br = b.bracket(th, th)
            oracle_phi = 0.5 * b.dbar_star(b.green(br)).values
            worst_phi = max(worst_phi, float(np.abs(phi.coefficient(idx).values - oracle_phi).max()))
            worst_obs = max(worst_obs, float(np.abs(obs[idx].values - b.harmonic_project(br).values).max())
                            if idx in obs.coeffs else np.inf)
        checks.add("phi2_single_step", worst_phi, 1e-12)
        checks.add("obstruction_degree2", worst_obs, 1e-12)
    probe = operator_norm_probe(b, _int_field(doc, "probe_samples", 100, minimum=1), seed)
    C = probe.constant
    rng = np.random.default_rng(seed)
    dom = []
    for _ in range(5):
        u = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        dom.append(majorant_domination(phi, C, u)[0])
    checks.add("majorant_dominates", all(dom), True, "==")
    radius = series_radius(phi, C)
    phi = phi.with_radius(radius)
    points = sample_points(phi.n_params, n_samples, radius, seed)
    fam = volume_family(phi)
    est = verify_estimates(phi, fam, points)
    checks.add("estimates_pass", est.passed, True, "==")
    checks.add("estimate_samples_skipped", len(est.skipped), 0, "==")
    results = {"operator_constant": C, "radius": radius, "estimates": est.as_dict(),
               "obstruction_norms": {str(k): b.norm(v) for k, v in obs.coeffs.items()},
               "harmonic_dims": [len(b.harmonic_basis(q)) for q in range(4)]}
    if expect == "unobstructed":
        u = points[0] / np.linalg.norm(points[0])
        t0 = float(doc.get("halving_start", 0.1))
        r1, r2 = mc_residual(phi, t0 * u).value, mc_residual(phi, 0.5 * t0 * u).value
        ratio = r1 / r2 if r2 > 0 else np.inf
        target = 2.0 ** (M + 1)
        results["mc_halving"] = {"t": t0, "residual": r1, "residual_half": r2, "ratio": ratio, "target": target}
        checks.add("mc_halving_relative_error", abs(ratio / target - 1.0), 0.2)
    return results, checks


# -- period-map ---------------------------------------------------------------


def _period_map(doc, seed, tol, degree):
    b = make_backend(_require(doc, "backend"))
    if not isinstance(b, TorusBackend) or b.d != 2:
        raise InputError("period-map needs a torus backend with d = 2")
    frame = hodge_frame(b)
    checks = Checks()
    checks.add("frame_gram_defect", frame.gram_defect(), 1e-10)
    checks.add("frame_harmonic_defect", frame.harmonic_defect(), 1e-12)
    rng = np.random.default_rng(seed)
    trials = _int_field(doc, "trials", 100, minimum=1)
    max_norm = float(doc.get("max_norm", 0.5))
    violations, worst = 0, 0.0
    for _ in range(trials):
        f = b.random_form(rng, 1, K=b.K)
        f = f * (max_norm * rng.uniform(0.05, 1.0) / b.sup_op_norm(f))
        s = b.sup_op_norm(f)
        blocks = quasi_period(f, frame)
        violations += not block_bounds_hold(blocks, s)
        m01, m02, m12 = blocks.max_abs()
        worst = max(worst, m01 / (s / (1 - s)), m12 / (s / (1 - s)), m02 / (s * s / (1 - s)))
    checks.add("block_bound_violations", violations, 0, "==")
    t_ratio = 0.0
    for p, q in ((1, 1), (0, 2)):
        w = b.random_form(rng, q, p=p, vector=False)
        t_ratio = max(t_ratio, b.norm(b.t_operator(w)) / b.norm(w))
    checks.add("t_operator_norm", t_ratio, 1.0 + 1e-9)
    syn = doc.get("synthetic", {"a": 0.7, "c": -1.3, "t": 1.0})
    a, c, t = decode_complex(syn["a"]), decode_complex(syn["c"]), decode_complex(syn.get("t", 1.0))
    h = float(doc.get("h", 1e-4))
    good = transversality_check(lambda x: BlockUpperUnipotent(a * x[0], a * c * x[0], c), [t], h)
    bad = transversality_check(lambda x: BlockUpperUnipotent(a * x[0], a * c * x[0] ** 2, c), [t], h)
    checks.add("synthetic_transversality", good, 1e-10)
    checks.add("injected_violation_detected", bad, tol.fd_tol, ">")
    checks.add("identity_determinant", abs(purity_determinant(BlockUpperUnipotent.identity(1, 4)) - 1), 0.0, "==")
    stab = doc.get("stability", {})
    scalar = stability_radius(ScalarRayModel(), _int_field(stab, "trials", 20, minimum=1), seed,
                              grid=_int_field(stab, "grid", 64, minimum=1), tol=tol)
    checks.add("scalar_stability_radius", scalar["radius"], 0.0, ">")
    torus = stability_radius(TorusBlockModel(frame, K=b.K), _int_field(stab, "torus_trials", 2, minimum=1), seed,
                             grid=_int_field(stab, "torus_grid", 8, minimum=1), tol=tol, bisect_tol=1e-3)
    checks.add("torus_stability_radius", torus["radius"], 0.0, ">")
    results = {"block_bound_worst_ratio": worst, "t_operator_ratio": t_ratio, "synthetic_residual": good,
               "injected_residual": bad, "scalar_stability": scalar, "torus_stability": torus}
    return results, checks


# -- kahler-continue ----------------------------------------------------------


def _kahler_continue(doc, seed, tol, degree):
    curve_doc = _require(doc, "curve")
    kind = curve_doc.get("type")
    checks = Checks()
    results = {}
    steps = _int_field(curve_doc, "steps", 64, minimum=1)
    if kind == "scalar_loop":
        radius = float(curve_doc.get("radius", 0.5))
        seed_vec = KahlerSeed(decode_matrix(_require(doc, "alpha1")))
        at = scalar_loop(radius)
        span = (0.0, 2 * np.pi)
        path = continue_path(at, seed_vec, steps, span)
        s = complex(seed_vec.alpha1[0])
        closed = [((s.conjugate() + s * np.conj(radius * np.exp(1j * th))) / (1 - radius ** 2)) for th in path.params]
        dev = max(abs(complex(a[0]) - c) for a, c in zip(path.alpha0, closed))
        checks.add("closed_form_deviation", dev, 1e-10)
        checks.add("loop_closure", float(np.abs(path.alpha0[-1] - path.alpha0[0]).max()), 1e-10)
    elif kind == "torus_kuranishi":
        b = make_backend(_require(doc, "backend"))
        if not isinstance(b, TorusBackend) or b.d != 2:
            raise InputError("torus_kuranishi curves need a torus backend with d = 2")
        frame = hodge_frame(b)
        theta = decode_matrix(_require(curve_doc, "theta"), (2, 2))
        g = decode_matrix(_require(doc, "metric"), (2, 2))
        seed_vec = KahlerSeed.from_metric(g, frame)
        checks.add("seed_is_real", seed_vec.is_real(), True, "==")
        phi = solve_kuranishi(b, [b.beltrami(theta)], 2)
        t_max = float(curve_doc.get("t_max", 1.0))
        span = (0.0, t_max)

        def at(t):
            return quasi_period(phi([t]), frame)

        path = continue_path(at, seed_vec, steps, span)
        worst_type = 0.0
        for p, a in zip(path.params, path.alpha0):
            blocks = at(p)
            worst_type = max(worst_type, type_defect(transported_class(a, seed_vec), blocks, frame))
        checks.add("type_defect", worst_type, 1e-9)
        trials = _int_field(doc, "metric_trials", 200, minimum=1)
        rng = np.random.default_rng(seed)
        worst_margin, all_pd = np.inf, True
        for _ in range(trials):
            x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            gg = x @ x.conj().T + 0.1 * np.eye(2)
            ph = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            ph *= 0.9 * rng.uniform() / np.linalg.norm(ph, 2)
            out = metric_update(gg, ph)
            ok, margin = positivity_check(MetricField(out[None]))
            all_pd &= ok
            worst_margin = min(worst_margin, margin - float(np.linalg.eigvalsh(gg).min()))
        checks.add("metric_updates_pd", all_pd, True, "==")
        checks.add("metric_min_eig_gain", worst_margin, -1e-12, ">=")
    elif kind == "polynomial":
        at = PolynomialBlockModel.from_dict(curve_doc).at
        seed_vec = KahlerSeed(decode_matrix(_require(doc, "alpha1")))
        span = tuple(float(x) for x in curve_doc.get("span", (0.0, 1.0)))
        path = continue_path(at, seed_vec, steps, span)
    else:
        raise InputError(f"unknown curve type {kind!r}")
    fine = continue_path(at, seed_vec, 2 * steps, span)
    if not path.params:
        raise ValidationError("continuation produced no points: the guard fails at the start")
    worst_res = max(float(np.abs(residual_F(a, at(p), seed_vec)).max(initial=0.0))
                    for p, a in zip(path.params, path.alpha0))
    checks.add("residual_F_max", worst_res, 1e-12)
    checks.add("certificate", path.certificate.get("holds", False), True, "==")
    checks.add("refinement_endpoint_change",
               float(np.abs(np.asarray(path.alpha0[-1]) - np.asarray(fine.alpha0[-1])).max(initial=0.0))
               if path.truncated_at is None and fine.truncated_at is None else np.inf, 1e-8)
    results["path"] = path.as_dict()
    return results, checks


# -- lattice ------------------------------------------------------------------


def _lattice_gram(spec):
    if isinstance(spec, str):
        return lat.preset(spec)
    return lat.IntegralLattice(spec)


def _lattice(doc, seed, tol, degree):
    checks = Checks()
    results = {}
    mk = doc.get("mukai")
    if mk is not None:
        ns = mk.get("ns_gram", [[2]])
        k = len(ns)
        zero = (0,) * k
        v = lat.MukaiVector(1, zero, 1)
        checks.add("structure_sheaf_square", lat.mukai_pairing(v, v, ns), -2, "==")
        dims = {}
        for n in mk.get("ideal_sheaf_n", [1, 2, 3, 4, 5]):
            w = lat.mukai_vector(1, zero, -int(n))
            dims[str(n)] = lat.moduli_dimension(w, ns)
            checks.add(f"ideal_sheaf_dimension_n{n}", dims[str(n)], 2 * int(n), "==")
        toy = lat.preset("toy_rank3")
        sig = toy.signature()
        checks.add("toy_signature", list(sig), [2, 1], "==")
        comp = lat.orth_complement(mk.get("complement_of", [1, 0, 1]), toy)
        pairs = [toy.pair(mk.get("complement_of", [1, 0, 1]), w) for w in comp.basis]
        checks.add("complement_pairs_zero", max(abs(p) for p in pairs), 0, "==")
        results.update({"ideal_sheaf_dimensions": dims, "toy_signature": sig,
                        "complement_basis": comp.basis, "complement_gram": comp.gram})
    pd = doc.get("period")
    if pd is not None:
        gram = _lattice_gram(pd.get("gram", [[2, 0, 0], [0, 2, 0], [0, 0, -2]]))
        z = decode_matrix(_require(pd, "z"))
        bound = _int_field(pd, "search_bound", 10, minimum=1)
        member = lat.in_period_domain(z, gram, tol.eq_tol)
        scaled = lat.in_period_domain(5j * z, gram, tol.eq_tol)
        e1 = np.eye(gram.rank)[0]
        generic, witness = lat.is_generic_period(z, gram, bound, tol.eq_tol)
        generic_scaled, witness_scaled = lat.is_generic_period(5j * z, gram, bound, tol.eq_tol)
        proj = lat.projectivity_witness(z, gram, bound, tol.eq_tol)
        checks.add("z_in_domain", member, True, "==")
        checks.add("scale_invariant", member == scaled and witness == witness_scaled and generic == generic_scaled,
                   True, "==")
        checks.add("e1_not_in_domain", lat.in_period_domain(e1, gram, tol.eq_tol), False, "==")
        if "expect_witness" in pd:
            checks.add("genericity_witness", list(witness) if witness else None, pd["expect_witness"], "==")
        if "expect_projectivity" in pd:
            checks.add("projectivity_witness", list(proj) if proj else None, pd["expect_projectivity"], "==")
        if "perturbed" in pd:
            zp = decode_matrix(pd["perturbed"])
            checks.add("perturbed_generic", lat.is_generic_period(zp, gram, bound, tol.eq_tol)[0], True, "==")
        if "second_gram" in pd:
            g2 = _lattice_gram(pd["second_gram"])
            z2 = decode_matrix(pd["second_z"])
            w2 = lat.projectivity_witness(z2, g2, bound, tol.eq_tol)
            checks.add("second_projectivity_witness", list(w2) if w2 else None, pd.get("expect_second"), "==")
        results.update({"q_values": lat.q_values(z, gram), "generic": generic, "witness": witness,
                        "projectivity": proj})
    if mk is None and pd is None:
        raise InputError("lattice scenario needs a 'mukai' or 'period' block")
    return results, checks


PIPELINES = {
    "torus-deform": _torus_deform,
    "dgla-solve": _dgla_solve,
    "period-map": _period_map,
    "kahler-continue": _kahler_continue,
    "lattice": _lattice,
}


def run_scenario(doc: dict, seed: int | None = None, tol: float | None = None, degree: int | None = None,
                 kind: str | None = None) -> dict:
    """Execute a scenario document; returns the report dictionary.

    Raises :class:`InputError` (or another :class:`ValidationError`) on bad input.
    """
    scen_kind = doc.get("kind")
    if scen_kind not in PIPELINES:
        raise InputError(f"unknown scenario kind {scen_kind!r}; expected one of {list(KINDS)}")
    if kind is not None and kind != scen_kind:
        raise InputError(f"scenario is of kind {scen_kind!r}, not {kind!r}")
    if seed is None:
        seed = doc.get("seed")
    if scen_kind in RANDOMIZED and seed is None:
        raise InputError("randomized scenario requires a seed (in the file or via --seed)")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0 or seed >= 2 ** 64):
        raise InputError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if degree is not None and degree < 1:
        raise InputError("degree must be >= 1")
    tols = _tolerances(doc, tol)
    start = time.perf_counter()
    results, checks = PIPELINES[scen_kind](doc, seed, tols, degree)
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": {k: doc[k] for k in ("name", "kind", "description") if k in doc},
        "seed": seed,
        "tolerances": {"eq_tol": tols.eq_tol, "fd_tol": tols.fd_tol, "pd_margin": tols.pd_margin},
        "degree_override": degree,
        "results": results,
        "checks": dict(checks),
        "passed": all(c["pass"] for c in checks.values()),
        "wall_time": time.perf_counter() - start,
    }


# -- shipped scenarios --------------------------------------------------------


def shipped_scenarios() -> dict[str, dict]:
    out = {}
    for entry in sorted(resources.files("hodgekit").joinpath("scenarios").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = parse_json(entry.read_text(), entry.name)
    return out


def scenario_path(name: str):
    return resources.files("hodgekit").joinpath("scenarios", f"{name}.json")


def describe(name: str) -> str:
    table = shipped_scenarios()
    if name not in table:
        raise InputError(f"unknown scenario {name!r}; valid names: {', '.join(sorted(table))}")
    doc = table[name]
    lines = [f"{name} ({doc.get('kind')})", "", doc.get("description", "").strip()]
    if doc.get("exercises"):
        lines += ["", "exercises:"] + [f"  - {e}" for e in doc["exercises"]]
    return "\n".join(lines).rstrip() + "\n"
