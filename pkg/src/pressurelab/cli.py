"""Batch driver.

Usage::

    pressurelab <study> --config run.cfg [--threads N] [--out DIR]

with ``<study>`` one of ``pressure``, ``equilibrium``, ``ldp``, ``rate``,
``oracle`` or ``selfcheck``. The config is flat ``key = value`` text with
``#`` comments and dotted keys for nested settings; see the README for the keys.
Every run writes ``summary.txt`` (numeric results, 17 significant digits),
``meta.txt`` (wall time) and one CSV per series to the output directory.

Exit codes: 0 success, 1 failed self-checks, 2 invalid config or unknown
study, 3 invalid system parameters, 4 I/O failure.
"""

import argparse
import csv
import logging
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, equilibrium, ldp, oracle, pressure, selfcheck, systems
from ._parallel import default_threads
from .manifold import DEFAULT_K, basis_for, tail_bound, weak_distance

STUDIES = ("pressure", "equilibrium", "ldp", "rate", "oracle", "selfcheck")

EXIT_CONFIG, EXIT_SYSTEM, EXIT_IO = 2, 3, 4

SCHEMAS = {
    "pressure": ["n", "log_Zn", "Pn"],
    "ldp": ["n", "nu_n", "log_nu_over_n", "satisfying_count"],
    "rate": ["alpha", "J", "beta_argmax"],
    "moments": ["k", "function", "estimate", "oracle"],
    "histogram": ["cell", "center", "mass"],
}
INT_COLUMNS = {"n", "satisfying_count", "k", "cell"}
STR_COLUMNS = {"function"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def parse_config_text(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _int(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required field '{key}'")
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"field '{key}' must be an integer, got {cfg[key]!r}") from None


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required field '{key}'")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"field '{key}' must be a number, got {cfg[key]!r}") from None


def parse_int_list(text, key="n_range"):
    """``8..16`` (inclusive range) or ``4, 8, 16``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"field '{key}' must be 'a..b' or a comma list, got {text!r}") from None


def parse_axis(text, key):
    """``start:stop:step`` (inclusive) or a comma list of numbers."""
    try:
        if ":" in text:
            a, b, h = (float(v) for v in text.split(":"))
            count = int(round((b - a) / h)) + 1
            return np.round(a + h * np.arange(count), 12)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"field '{key}' must be 'start:stop:step' or a list, got {text!r}") from None


def parse_region(text):
    """``lo:hi`` per observable, separated by ``;``; ``inf`` allowed; ``empty`` for no set."""
    if text.strip().lower() == "empty":
        return None
    out = []
    for part in text.split(";"):
        try:
            lo, hi = (float(v) for v in part.split(":"))
        except ValueError:
            raise ConfigError(f"field 'ldp.region' must be 'lo:hi[;lo:hi]', got {text!r}") from None
        out.append((lo, hi))
    return out


def parse_terms(text):
    terms = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if ":" not in part:
            raise ConfigError(f"field 'potential.terms' must look like 'cos1: 0.5, sin2: 0.1', got {text!r}")
        k, v = part.split(":", 1)
        try:
            terms[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"bad coefficient in potential.terms: {part!r}") from None
    return terms


def build_system(cfg):
    kind = cfg.get("system.kind")
    if kind is None:
        raise ConfigError("missing required field 'system.kind'")
    if kind == "doubling":
        return systems.make_doubling()
    if kind == "expanding":
        return systems.make_expanding_circle(_float(cfg, "system.k"), _float(cfg, "system.eps", 0.0))
    if kind == "cat":
        return systems.make_cat_map()
    if kind == "torus":
        if "system.matrix" not in cfg:
            raise ConfigError("missing required field 'system.matrix'")
        try:
            vals = [float(v) for v in cfg["system.matrix"].split(",")]
        except ValueError:
            raise ConfigError("field 'system.matrix' must be four comma-separated integers") from None
        if len(vals) != 4:
            raise ConfigError("field 'system.matrix' must be four comma-separated integers")
        return systems.make_torus_endomorphism(np.reshape(vals, (2, 2)))
    raise ConfigError(f"unknown system.kind {kind!r}")


def build_potential(cfg, system):
    kind = cfg.get("potential.kind", "zero")
    desc = {"kind": kind}
    if kind == "constant":
        desc["c"] = _float(cfg, "potential.c")
    elif kind == "trig":
        if "potential.terms" not in cfg:
            raise ConfigError("missing required field 'potential.terms'")
        desc["terms"] = parse_terms(cfg["potential.terms"])
    elif kind == "geometric":
        desc["t"] = _float(cfg, "potential.t", 1.0)
    try:
        return systems.make_potential(desc, system)
    except systems.MalformedPotentialError as e:
        raise ConfigError(str(e)) from None


@dataclass
class RunConfig:
    study: str
    raw: dict
    system: object
    potential: object
    seed: int
    N: int
    n_range: list
    K: int
    m: int
    out: Path

    @classmethod
    def from_mapping(cls, study, cfg, out=None):
        declared = cfg.get("study", study)
        if declared not in STUDIES:
            raise ConfigError(f"unknown study kind {declared!r}")
        if declared != study:
            raise ConfigError(f"config declares study {declared!r} but {study!r} was requested")
        seed = _int(cfg, "seed")
        if seed < 0:
            raise ConfigError("field 'seed' must be non-negative")
        if study == "selfcheck":
            return cls(study, cfg, None, None, seed, 0, [], 0, 0, Path(out or cfg.get("out", "results")))
        system = build_system(cfg)
        potential = build_potential(cfg, system)
        N = _int(cfg, "N")
        if N < 1:
            raise ConfigError("field 'N' must be at least 1")
        if "n_range" not in cfg:
            raise ConfigError("missing required field 'n_range'")
        n_range = parse_int_list(cfg["n_range"])
        if not n_range or min(n_range) < 1:
            raise ConfigError("field 'n_range' must list positive integers")
        if study in ("pressure", "ldp", "rate", "oracle") and len(set(n_range)) < 3:
            raise ConfigError("field 'n_range' needs at least three values")
        K = _int(cfg, "K", DEFAULT_K[system.d])
        m = _int(cfg, "m", 16)
        return cls(study, cfg, system, potential, seed, N, n_range, K, m,
                   Path(out or cfg.get("out", "results")))


def load_config(path, study, out=None):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise OSError(f"cannot read config {path}: {e.strerror or e}") from e
    return RunConfig.from_mapping(study, parse_config_text(text), out)


# ---------------------------------------------------------------- results


@dataclass
class ResultRecord:
    study: str
    config: dict
    outputs: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__


def fmt(value):
    if value is None:
        return "none"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _numbered(name, base):
    return re.fullmatch(rf"{re.escape(base)}_\d+", name) is not None


def matches_schema(columns, expected):
    """Columns equal the schema, where ``c`` may be split into ``c_1, c_2, ...``."""
    rest = list(columns)
    for c in expected:
        if c in rest:
            rest.remove(c)
            continue
        numbered = [x for x in rest if _numbered(x, c)]
        if not numbered:
            return False
        rest = [x for x in rest if x not in numbered]
    return not rest


def emit_csv(record, kind, path):
    """Write series ``kind`` of ``record`` to ``path`` with a header row."""
    if kind not in record.series:
        raise ValueError(f"record of study {record.study!r} has no {kind!r} series")
    columns = record.series[kind]
    if kind in SCHEMAS and not matches_schema(columns, SCHEMAS[kind]):
        raise ValueError(f"series {kind!r} has columns {list(columns)}, schema needs {SCHEMAS[kind]}")
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(columns[c] for c in names)):
            w.writerow([fmt(v) for v in row])
    return path


def _column_type(name):
    base = re.sub(r"_\d+$", "", name)
    if name in STR_COLUMNS or base in STR_COLUMNS:
        return str
    if name in INT_COLUMNS or base in INT_COLUMNS:
        return int
    return float


def read_csv(path):
    """Parse a CSV written by ``emit_csv`` back into column lists."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        types = [_column_type(h) for h in header]
        cols = {h: [] for h in header}
        for row in reader:
            for h, t, v in zip(header, types, row):
                cols[h].append(t(v))
    return cols


def write_summary(record, path):
    lines = [f"study = {record.study}", f"version = {record.version}"]
    lines += [f"config.{k} = {v}" for k, v in sorted(record.config.items())]
    lines += [f"{k} = {fmt(v)}" for k, v in record.outputs.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary(path):
    return parse_config_text(Path(path).read_text())


def save(record, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary(record, out / "summary.txt")
    for kind in record.series:
        emit_csv(record, kind, out / f"{kind}.csv")
    (out / "meta.txt").write_text(
        f"wall_time = {record.wall_time:.6f}\nversion = {record.version}\n")


# ---------------------------------------------------------------- studies


def _pressure_outputs(est, prefix=""):
    return {
        f"{prefix}pressure": est.value,
        f"{prefix}P_nmax": est.P_last,
        f"{prefix}convergence_gap": est.convergence_gap,
        f"{prefix}fit_n_min": min(est.fit_n),
        f"{prefix}fit_n_max": max(est.fit_n),
        f"{prefix}ess_nmax": float(est.ess[-1]),
        f"{prefix}ess_fraction_nmax": float(est.ess[-1]) / est.N,
    }


def run_pressure(rc, threads):
    est = pressure.estimate_pressure(rc.system, rc.potential, rc.n_range, rc.N, rc.seed, threads)
    rec = ResultRecord("pressure", rc.raw)
    rec.outputs.update(_pressure_outputs(est))
    if "topological_entropy" in rc.system.known:
        rec.outputs["known_topological_entropy"] = float(rc.system.known["topological_entropy"])
    rec.series["pressure"] = {"n": list(est.n), "log_Zn": list(est.log_Zn), "Pn": list(est.Pn)}
    return rec


def _oracle_model(rc):
    M = _int(rc.raw, "oracle.M", 512)
    interp = rc.raw.get("oracle.interp", "cubic")
    return oracle.build_operator(rc.system, rc.potential, M, interp), M, interp


def run_equilibrium(rc, threads):
    basis = basis_for(rc.system.d, rc.K)
    rec = ResultRecord("equilibrium", rc.raw)
    target = None
    if rc.system.kind == "expanding":
        model, _, _ = _oracle_model(rc)
        target = oracle.oracle_gibbs_moments(model, basis)
        rec.outputs["oracle_pressure"] = oracle.oracle_pressure(model)
    radius = _float(rc.raw, "concentration.radius", 0.1)
    rec.outputs["K"] = rc.K
    rec.outputs["tail_bound"] = tail_bound(rc.K)
    hist = ens = None
    for n in sorted(set(rc.n_range)):
        ens = equilibrium.build_ensemble(rc.system, rc.potential, n, rc.N, rc.seed)
        mom = equilibrium.ensemble_moments(ens, basis)
        rec.outputs[f"n{n}.invariance_defect"] = equilibrium.invariance_defect(ens, basis)
        rec.outputs[f"n{n}.ess"] = ens.ess
        if target is not None:
            rec.outputs[f"n{n}.weak_distance_to_oracle"] = weak_distance(mom, target)
            rec.outputs[f"n{n}.concentration_mass"] = equilibrium.concentration_mass(
                ens, basis, target, radius)
        last_mom = mom
    hist = equilibrium.equilibrium_histogram(ens, rc.m)
    rec.outputs["histogram_n"] = ens.n
    rec.series["moments"] = {
        "k": list(range(1, rc.K + 1)),
        "function": [basis.name(k) for k in range(1, rc.K + 1)],
        "estimate": list(last_mom),
        "oracle": list(target) if target is not None else [float("nan")] * rc.K,
    }
    centers = hist.cell_centers
    cols = {"cell": list(range(len(centers)))}
    if rc.system.d == 1:
        cols["center"] = list(centers[:, 0])
    else:
        cols["center_1"], cols["center_2"] = list(centers[:, 0]), list(centers[:, 1])
    cols["mass"] = list(hist.masses.ravel())
    rec.series["histogram"] = cols
    return rec


def _constraint(rc):
    if "ldp.observables" not in rc.raw:
        raise ConfigError("missing required field 'ldp.observables'")
    obs = parse_int_list(rc.raw["ldp.observables"], "ldp.observables")
    if "ldp.region" not in rc.raw:
        raise ConfigError("missing required field 'ldp.region'")
    region = parse_region(rc.raw["ldp.region"])
    try:
        if region is None:
            return ldp.ConstraintSet.nothing(obs)
        return ldp.ConstraintSet(obs, region)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _rate_table(rc, observables, threads):
    if "rate.alpha" not in rc.raw:
        raise ConfigError("missing required field 'rate.alpha'")
    alpha = parse_axis(rc.raw["rate.alpha"], "rate.alpha")
    beta = parse_axis(rc.raw.get("rate.beta", "-4:4:0.25"), "rate.beta")
    cap = _float(rc.raw, "rate.cap", ldp.DEFAULT_CAP)
    N = _int(rc.raw, "rate.N", rc.N)
    try:
        return ldp.rate_function(rc.system, rc.potential, observables, alpha, beta,
                                 rc.n_range, N, rc.seed, threads, cap)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _rate_series(table):
    cols = {}
    if table.d == 1:
        cols["alpha"] = list(table.alpha[:, 0])
    else:
        for j in range(table.d):
            cols[f"alpha_{j + 1}"] = list(table.alpha[:, j])
    cols["J"] = list(table.values)
    if table.d == 1:
        cols["beta_argmax"] = list(table.beta_argmax[:, 0])
    else:
        for j in range(table.d):
            cols[f"beta_argmax_{j + 1}"] = list(table.beta_argmax[:, j])
    return cols


def _rate_outputs(table):
    a_min, j_min = table.minimum()
    out = {f"rate.argmin_{j + 1}": float(a) for j, a in enumerate(a_min)}
    out["rate.min"] = j_min
    out["rate.cap"] = table.cap
    out["rate.capped_entries"] = int(table.capped.sum())
    out["rate.min_second_difference"] = float(table.second_differences().min())
    out["rate.min_ess"] = float(table.ess.min())
    return out


def run_ldp(rc, threads):
    cs = _constraint(rc)
    min_count = _int(rc.raw, "ldp.min_count", ldp.MIN_COUNT)
    est = ldp.estimate_nu_n(rc.system, rc.potential, cs, rc.n_range, rc.N, rc.seed, threads, min_count)
    rec = ResultRecord("ldp", rc.raw)
    rec.outputs["ldp.status"] = est.status
    rec.outputs["ldp.slope"] = est.slope
    rec.outputs["ldp.decay_rate"] = est.decay_rate
    rec.series["ldp"] = {
        "n": list(est.n), "nu_n": list(est.nu), "log_nu_over_n": list(est.log_nu_over_n),
        "satisfying_count": [int(c) for c in est.counts],
    }
    if "rate.alpha" in rc.raw:
        table = _rate_table(rc, cs.observables, threads)
        rec.outputs.update(_rate_outputs(table))
        rec.series["rate"] = _rate_series(table)
        try:
            rep = ldp.contraction_report(est, table, cs)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        rec.outputs.update({
            "contraction.status": rep.status, "contraction.decay_rate": rep.decay_rate,
            "contraction.J_region": rep.J_region, "contraction.abs_gap": rep.abs_gap,
            "contraction.rel_gap": rep.rel_gap,
        })
    return rec


def run_rate(rc, threads):
    if "ldp.observables" not in rc.raw:
        raise ConfigError("missing required field 'ldp.observables'")
    obs = parse_int_list(rc.raw["ldp.observables"], "ldp.observables")
    table = _rate_table(rc, obs, threads)
    rec = ResultRecord("rate", rc.raw)
    rec.outputs.update(_rate_outputs(table))
    rec.series["rate"] = _rate_series(table)
    return rec


def run_oracle(rc, threads):
    model, M, interp = _oracle_model(rc)
    fine = oracle.build_operator(rc.system, rc.potential, 2 * M, interp)
    est = pressure.estimate_pressure(rc.system, rc.potential, rc.n_range, rc.N, rc.seed, threads)
    p_or = oracle.oracle_pressure(model)
    rec = ResultRecord("oracle", rc.raw)
    rec.outputs.update(_pressure_outputs(est, "estimator."))
    rec.outputs.update({
        "oracle.pressure": p_or,
        "oracle.pressure_2M": oracle.oracle_pressure(fine),
        "oracle.self_convergence": abs(p_or - oracle.oracle_pressure(fine)),
        "oracle.entropy": oracle.oracle_entropy(model),
        "oracle.residual": model.residual,
        "difference": est.value - p_or,
        "abs_difference": abs(est.value - p_or),
    })
    basis = basis_for(1, rc.K)
    rec.series["pressure"] = {"n": list(est.n), "log_Zn": list(est.log_Zn), "Pn": list(est.Pn)}
    rec.series["moments"] = {
        "k": list(range(1, rc.K + 1)),
        "function": [basis.name(k) for k in range(1, rc.K + 1)],
        "estimate": [float("nan")] * rc.K,
        "oracle": list(oracle.oracle_gibbs_moments(model, basis)),
    }
    return rec


def run_selfcheck(rc, threads):
    results = selfcheck.run_all(rc.seed)
    rec = ResultRecord("selfcheck", rc.raw)
    for name, ok, detail, _ in results:
        rec.outputs[f"check.{name.replace(' ', '_')}"] = "pass" if ok else "FAIL"
    rec.outputs["all_passed"] = all(ok for _, ok, _, _ in results)
    return rec


RUNNERS = {
    "pressure": run_pressure,
    "equilibrium": run_equilibrium,
    "ldp": run_ldp,
    "rate": run_rate,
    "oracle": run_oracle,
    "selfcheck": run_selfcheck,
}


def run(study, config_path, threads=None, out=None):
    """Execute one study; returns ``(exit_code, record or None)``."""
    t0 = time.perf_counter()
    try:
        if study not in STUDIES:
            raise ConfigError(f"unknown study kind {study!r}")
        rc = load_config(config_path, study, out)
        rec = RUNNERS[study](rc, threads or default_threads())
        rec.wall_time = time.perf_counter() - t0
        save(rec, rc.out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG, None
    except (systems.InvalidSystemError, oracle.OracleError) as e:
        print(f"error: invalid system: {e}", file=sys.stderr)
        return EXIT_SYSTEM, None
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG, None
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO, None
    if study == "selfcheck" and not rec.outputs["all_passed"]:
        return 1, rec
    return 0, rec


def main(argv=None):
    parser = argparse.ArgumentParser(prog="pressurelab", description=__doc__.split("\n\n")[0])
    parser.add_argument("study", choices=STUDIES)
    parser.add_argument("--config", required=True, help="key = value run configuration")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: all cores); results do not depend on it")
    parser.add_argument("--out", default=None, help="output directory (overrides the config's 'out')")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    code, rec = run(args.study, args.config, args.threads, args.out)
    if rec is not None:
        for k, v in rec.outputs.items():
            print(f"{k} = {fmt(v)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
