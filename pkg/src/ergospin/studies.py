"""Named studies run by the command line, one disorder seed per job.

Every study takes the resolved config dict and a seed and returns plain data:
CSV rows, a JSON report and a pass flag. Keeping jobs free of shared state is
what lets the runner fan them out over processes and still write identical
files on every rerun.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .config import TOL, InputError, overridden
from .disorder import DisorderField, EnsembleSpec, Law
from .dynamics import gauge_identity_check, lr_certify, thermo_trace
from .ffunction import FFunction, convolution_constant, uniform_norm
from .gns import (
    build_intertwiner,
    intertwining_residual,
    random_rational_intervals,
    shifted_pair,
    spectral_counting,
)
from .groundstate import TiledGroundStates, covariance_defect, ground_state, ground_state_condition
from .interaction import Interaction, assemble, f_norm, perturb_with_field, rough_norm_bound
from .lattice import BoxSequence, Volume, ball, chain, origin
from .operators import PAULI, LocalOperator

STUDY_NAMES = (
    "lr_certify",
    "thermo_trace",
    "gauge_check",
    "ground_state_scan",
    "cesaro_defect",
    "gns_determinism",
    "fnorm_report",
)

_LAW = {
    "type": "object",
    "minProperties": 1,
    "maxProperties": 1,
    "additionalProperties": False,
    "properties": {
        "uniform": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "gaussian": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "bernoulli": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "prefixItems": [
                {"type": "number", "minimum": 0, "maximum": 1},
                {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            ],
        },
        "constant": {"type": "number"},
    },
}

_OBSERVABLE = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "array",
        "minItems": 2,
        "maxItems": 2,
        "prefixItems": [{"type": "array", "items": {"type": "integer"}}, {"enum": ["x", "y", "z"]}],
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["study", "interaction", "disorder"],
    "additionalProperties": False,
    "properties": {
        "study": {"enum": list(STUDY_NAMES)},
        "dimension": {"type": "integer", "minimum": 1, "maximum": 3},
        "k": {"const": 2},
        "interaction": {
            "type": "object",
            "required": ["germs"],
            "additionalProperties": False,
            "properties": {
                "germs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {
                            "kind": {"enum": ["field", "xy", "xxz", "heisenberg", "ising"]},
                            "channel": {"type": "string"},
                            "axis": {"enum": ["x", "y", "z"]},
                            "shape": {"type": "array"},
                        },
                    },
                }
            },
        },
        "ffunction": {
            "type": "object",
            "required": ["epsilon"],
            "additionalProperties": False,
            "properties": {
                "family": {"const": "power_law"},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "disorder": {
            "type": "object",
            "required": ["law"],
            "additionalProperties": False,
            "properties": {
                "law": _LAW,
                "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1, "uniqueItems": True},
                "master_seed": {"type": "integer", "minimum": 0},
                "n_samples": {"type": "integer", "minimum": 1},
                "channels": {"type": "object", "additionalProperties": _LAW},
            },
            "oneOf": [{"required": ["seeds"]}, {"required": ["master_seed", "n_samples"]}],
        },
        "params": {
            "type": "object",
            "properties": {
                "a": _OBSERVABLE,
                "b": _OBSERVABLE,
                "length": {"type": "integer", "minimum": 1},
                "lengths": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "radii": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "n_values": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "t": {"type": "number"},
                "times": {"type": "array", "items": {"type": "number"}},
            },
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "output": {"type": "string"},
    },
    "allOf": [
        {
            "if": {"properties": {"study": {"enum": ["lr_certify", "thermo_trace", "fnorm_report"]}}},
            "then": {"required": ["ffunction"]},
        }
    ],
}


# ---------------------------------------------------------------------------
# config helpers


def seeds_of(cfg: dict) -> list:
    d = cfg["disorder"]
    if "seeds" in d:
        return list(EnsembleSpec(tuple(d["seeds"])).seeds)
    return list(EnsembleSpec.from_master(d["master_seed"], d["n_samples"]).seeds)


def build_interaction(cfg: dict, seed: int) -> Interaction:
    nu = cfg.get("dimension", 1)
    d = cfg["disorder"]
    fields = {"default": DisorderField(seed, Law.from_json(d["law"]), nu, stream=0)}
    for j, (name, law) in enumerate(sorted(d.get("channels", {}).items()), start=1):
        fields[name] = DisorderField(seed, Law.from_json(law), nu, stream=j)
    I = Interaction.from_json(cfg["interaction"], fields, nu, cfg.get("k", 2))
    used = {g.channel for g in I.germs}
    return Interaction(I.germs, {c: f for c, f in fields.items() if c in used}, I.k)


def build_ffunction(cfg: dict) -> FFunction:
    return FFunction.from_json(cfg["ffunction"], cfg.get("dimension", 1))


def parse_observable(spec) -> LocalOperator:
    factors = {}
    for site, axis in spec:
        site = tuple(int(c) for c in site)
        if site in factors:
            raise InputError(f"site {list(site)} appears twice in an observable")
        factors[site] = PAULI[axis]
    return LocalOperator.product(factors)


def _chain_for(cfg: dict, length: int) -> Volume:
    nu = cfg.get("dimension", 1)
    if nu == 1:
        return chain(length)
    return ball(origin(nu), length // 2)


def _times(p: dict) -> list:
    if "times" in p:
        return [float(t) for t in p["times"]]
    start, stop, num = p.get("t_start", 0.0), p.get("t_stop", 2.0), int(p.get("t_num", 21))
    return [float(t) for t in np.linspace(start, stop, num)]


def estimated_sites(cfg: dict) -> int:
    """Largest dense volume a study will build, for cap diagnostics."""
    p = cfg.get("params", {})
    study = cfg["study"]
    nu = cfg.get("dimension", 1)
    if study == "thermo_trace":
        return (2 * max(p.get("radii", [2, 3, 4, 5])) + 1) ** nu
    if study == "gauge_check":
        return int(p.get("outer", 6))
    if study == "ground_state_scan":
        return max(p.get("lengths", [4, 6, 8]))
    if study == "cesaro_defect":
        return (2 * p.get("tile_radius", 3) + 3) ** nu
    if study == "gns_determinism":
        return int(p.get("length", 3))
    return int(p.get("length", 8))


# ---------------------------------------------------------------------------
# studies


def lr_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    I = build_interaction(cfg, seed)
    F = build_ffunction(cfg)
    vol = _chain_for(cfg, int(p.get("length", 8)))
    a = parse_observable(p.get("a", [[[0], "x"]]))
    b = parse_observable(p.get("b", [[[len(vol) - 1], "x"]]))
    cert = lr_certify(I, F, vol, a, b, _times(p))
    tol = TOL.lr_relative
    ok = all(l <= r * (1 + tol) for l, r in zip(cert.lhs, cert.rhs))
    rows = [dict(r, passed=r["lhs"] <= r["rhs"] * (1 + tol)) for r in cert.rows(seed)]
    return {"rows": rows, "report": dict(cert.to_json(), seed=seed), "passed": ok}


def thermo_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    I = build_interaction(cfg, seed)
    F = build_ffunction(cfg)
    a = parse_observable(p.get("a", [[[0], "z"]]))
    boxes = BoxSequence(p.get("radii", [2, 3, 4, 5]), origin(I.nu))
    tr = thermo_trace(I, F, a, float(p.get("t", 0.5)), boxes)
    rows = [{"seed": seed, "step": j, "radius": boxes.radii[j + 1], "delta": d, "bound": b}
            for j, (d, b) in enumerate(zip(tr.deltas, tr.duhamel_bounds))]
    return {"rows": rows, "report": dict(tr.to_json(), seed=seed), "passed": tr.passed}


def gauge_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    nu = cfg.get("dimension", 1)
    if nu != 1:
        raise InputError("gauge_check runs on chains (dimension 1)")
    phi_cfg = dict(cfg, disorder=dict(cfg["disorder"], channels={}))
    phi = build_interaction(phi_cfg, seed)
    if not phi.is_deterministic:
        raise InputError("gauge_check needs a deterministic interaction; disorder enters through the perturbation")
    fld = DisorderField(seed, Law.from_json(cfg["disorder"]["law"]), 1)
    psi = perturb_with_field(Interaction(phi.germs, {}, phi.k), PAULI[p.get("perturbation_axis", "z")], fld)
    inner_n, outer_n = int(p.get("inner", 4)), int(p.get("outer", 6))
    outer = chain(outer_n)
    inner = chain(inner_n, start=(outer_n - inner_n) // 2)
    mid = (outer_n - 1) // 2
    a = parse_observable(p.get("a", [[[mid], "z"]]))
    g = gauge_identity_check(psi, (inner, outer), a, float(p.get("t", 0.7)), p.get("n_steps"))
    ok = g.residual <= TOL.gauge_identity
    return {"rows": [dict(g.to_json(), seed=seed, sizes=f"{inner_n}/{outer_n}", passed=ok)],
            "report": dict(g.to_json(), seed=seed), "passed": ok}


def ground_state_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    I = build_interaction(cfg, seed)
    trials = int(p.get("condition_trials", 0))
    rows, ok = [], True
    for L in p.get("lengths", [4, 6, 8]):
        vol = _chain_for(cfg, int(L))
        res = ground_state(assemble(I, vol))
        row = {"seed": seed, "size": len(vol), "energy": res.energy, "energy_per_site": res.energy / len(vol),
               "gap": res.gap, "degenerate": res.degenerate}
        if trials:
            rep = ground_state_condition(res.state, I, trials=trials, rng=np.random.default_rng(seed))
            row["worst_violation"] = rep.worst_violation
            ok = ok and rep.passed()
        rows.append(row)
    return {"rows": rows, "report": {"seed": seed, "rows": rows}, "passed": ok}


def cesaro_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    I = build_interaction(cfg, seed)
    R = int(p.get("tile_radius", 3))
    z = tuple(p.get("z", [1] + [0] * (I.nu - 1)))
    a = parse_observable(p.get("a", [[[0] * I.nu, "z"]]))
    tiles, wide = TiledGroundStates(I, R), TiledGroundStates(I, R + 1)
    rows, ok = [], True
    for n in p.get("n_values", [1, 2, 4, 8]):
        d = covariance_defect(I, int(n), z, a, R, tiles, wide)
        rows.append(dict(d.to_json(), seed=seed, scaled=d.defect * (2 * n + 1) ** I.nu, passed=d.passed))
        ok = ok and d.passed
    return {"rows": rows, "report": {"seed": seed, "runs": rows}, "passed": ok}


def _intervals(p: dict) -> list:
    spec = p.get("intervals", {"random": 10, "lo": -1.0, "hi": 10.0, "seed": 0})
    if isinstance(spec, dict):
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return random_rational_intervals(rng, int(spec["random"]), float(spec["lo"]), float(spec["hi"]))
    return [(Fraction(str(a)), Fraction(str(b))) for a, b in spec]


def gns_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    I = build_interaction(cfg, seed)
    vol = _chain_for(cfg, int(p.get("length", 3)))
    intervals = _intervals(p)
    rows, ok = [], True
    for x in p.get("shifts", [[1]]):
        x = tuple(x)
        src, dst = shifted_pair(I, vol, x)
        U = build_intertwiner(src, dst, x)
        ev_s, ev_d = src.spectrum(), dst.spectrum()
        c_s = spectral_counting(src, intervals, ev_s).counts
        c_d = spectral_counting(dst, intervals, ev_d).counts
        res = intertwining_residual(U)
        scale = max(1.0, float(np.max(np.abs(ev_s))))
        row_ok = (c_s == c_d and res <= TOL.intertwining * scale and U.unitarity_residual() <= 1e-10)
        rows.append({"seed": seed, "shift": list(x), "counts_src": c_s, "counts_dst": c_d,
                     "residual": res, "unitarity": U.unitarity_residual(),
                     "spectral_gap": float(np.max(np.abs(ev_s - ev_d))),
                     "energy_per_site": src.energy / len(vol), "passed": row_ok})
        ok = ok and row_ok
    return {"rows": rows, "report": {"seed": seed, "intervals": [[str(a), str(b)] for a, b in intervals],
                                     "records": rows}, "passed": ok}


def fnorm_study(cfg: dict, seed: int) -> dict:
    p = cfg.get("params", {})
    I = build_interaction(cfg, seed)
    F = build_ffunction(cfg)
    vol = _chain_for(cfg, int(p.get("length", 6)))
    nf = f_norm(I, F, within=vol)
    un = uniform_norm(F, int(p.get("truncation_radius", 100)))
    cf = convolution_constant(F, int(p.get("cf_radius", 20)))
    hn = assemble(I, vol).norm()
    rough = rough_norm_bound(I, F, vol, nf.value)
    row = {"seed": seed, "f_norm": nf.value, "uniform_norm": un.value, "uniform_norm_upper": un.upper,
           "cf_witness": cf.witness, "cf_bound": cf.bound, "h_norm": hn, "rough_bound": rough,
           "passed": hn <= rough}
    return {"rows": [row], "report": dict(row, witness_pair=nf.to_json()["witness_pair"]), "passed": hn <= rough}


STUDIES = {
    "lr_certify": lr_study,
    "thermo_trace": thermo_study,
    "gauge_check": gauge_study,
    "ground_state_scan": ground_state_study,
    "cesaro_defect": cesaro_study,
    "gns_determinism": gns_study,
    "fnorm_report": fnorm_study,
}


def run_job(job: tuple) -> dict:
    name, cfg, seed = job
    with overridden(**cfg.get("tolerances", {})):
        return STUDIES[name](cfg, seed)


def summarize(name: str, results: list) -> dict:
    """Cross-seed summary appended to the JSON report."""
    out = {"n_seeds": len(results), "all_passed": all(r["passed"] for r in results)}
    if name == "ground_state_scan":
        by_size: dict = {}
        for r in results:
            for row in r["rows"]:
                by_size.setdefault(row["size"], []).append(row["energy_per_site"])
        out["energy_per_site"] = [
            {"size": s, "mean": float(np.mean(v)), "std": float(np.std(v, ddof=1)) if len(v) > 1 else 0.0}
            for s, v in sorted(by_size.items())
        ]
    if name == "cesaro_defect":
        scaled = [row["scaled"] for r in results for row in r["rows"]]
        out["max_scaled_defect"] = max(scaled) if scaled else math.nan
    return out
