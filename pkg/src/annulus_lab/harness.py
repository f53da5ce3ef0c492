"""Experiment drivers and report IO.

Every experiment returns an ExperimentReport whose verdicts can be
recomputed from its records alone (see ``compute_verdicts``).  Randomness is
keyed by (seed, stream, index) so sample i is the same whatever the worker
count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circle import CircleGrid
from .compactness import (FamilyK, ModulusCurve, constrained_member, covering_number,
                          diagonal_samples, ek_members, modulus_bound_check, rho_of_member)
from .interp import (BiLaurent, canonical_extension, evaluate_member, fA_norm,
                     interp_norm_search, three_circles_ratios)
from .laurent import LaurentSeq, eval_circle, random_laurent
from .spaces import SpaceSpec, fc_theta_norm
from . import _trigmax

SCHEMA_VERSION = "1"
EXPERIMENTS = ("zeon", "diag", "ikar", "threecircles")
DEFAULT_SAMPLES = {"zeon": 200, "diag": 32, "ikar": 500, "threecircles": 10_000}
THREADS_ENV = "ANNULUS_LAB_THREADS"

DIAG_DELTAS = (0.05, 0.1, 0.2, 0.4)
COMPACT_KMAX = 32
FLAT_KMAX = 64
IKAR_EPSILON = 0.1
IKAR_Z_NODES = 16
THREE_CIRCLES_DEGREE = 32
MAX_SAMPLE_DEGREE = {"zeon": 8, "diag": FLAT_KMAX, "ikar": COMPACT_KMAX, "threecircles": THREE_CIRCLES_DEGREE}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    theta: float = 0.5
    grid_size: int = 4096
    seed: int = 0
    sample_count: int | None = None
    zeta_degrees: tuple = (2, 4, 8, 16)
    out_path: str | None = None
    search_budget: int = 200
    search_samples: int = 50

    def __post_init__(self):
        self.zeta_degrees = tuple(int(m) for m in self.zeta_degrees)
        if self.experiment in DEFAULT_SAMPLES and self.sample_count is None:
            self.sample_count = DEFAULT_SAMPLES[self.experiment]

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie strictly inside (0, 1), got {self.theta}")
        if self.grid_size < 4 or self.grid_size % 2:
            raise ConfigError("grid size must be an even integer >= 4")
        if self.sample_count is None or self.sample_count < 1:
            raise ConfigError("sample count must be positive")
        if not self.zeta_degrees or min(self.zeta_degrees) < 0:
            raise ConfigError("zeta degrees must be a nonempty list of nonnegative integers")
        if self.search_budget < 0 or self.search_samples < 0:
            raise ConfigError("search budget and search sample count must be nonnegative")
        degree = MAX_SAMPLE_DEGREE[self.experiment]
        if self.experiment in ("diag", "ikar"):
            degree = max(degree, max(self.zeta_degrees))
        if self.grid_size < 64 * degree:
            raise ConfigError(f"grid size {self.grid_size} is below 64 x degree {degree}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["zeta_degrees"] = list(self.zeta_degrees)
        return d


@dataclass
class ExperimentReport:
    config: dict
    records: list
    summary: dict
    verdicts: dict
    curves: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "summary": self.summary,
            "verdicts": self.verdicts,
            "curves": self.curves,
            "records": self.records,
            "meta": self.meta,
        }

    def numeric_dict(self) -> dict:
        """Everything except timing metadata; identical across reruns of one config."""
        d = self.to_dict()
        d.pop("meta")
        return d


# ----------------------------------------------------------------- helpers


def sample_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, index]))


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items) -> list:
    """Ordered map over a bounded thread pool."""
    items = list(items)
    n = min(worker_count(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _verdict(value: float, threshold: float, relation: str) -> dict:
    ok = {"<=": value <= threshold, "<": value < threshold, ">=": value >= threshold}[relation]
    return {"passed": bool(ok), "value": float(value), "threshold": float(threshold), "relation": relation}


def _of_kind(records, kind):
    return [r for r in records if r["kind"] == kind]


# -------------------------------------------------------------------- zeon


def _zeon_lambda(config: ExperimentConfig, i: int) -> tuple[str, LaurentSeq]:
    if i == 0:
        return "delta_0", LaurentSeq.delta(0)
    if i == 1:
        return "delta_3", LaurentSeq.delta(3)
    rng = sample_rng(config.seed, 1, i)
    lo = -int(rng.integers(0, 9))
    hi = int(rng.integers(0, 9))
    return "random", random_laurent(rng, lo, hi)


def run_zeon(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    grid = CircleGrid(config.grid_size)
    theta = config.theta

    def one(i):
        label, lam = _zeon_lambda(config, i)
        fc = fc_theta_norm(lam, theta, grid).value
        cert = fA_norm(canonical_extension(lam, theta), grid)
        rec = {"kind": "sample", "index": i, "label": label, "lo": lam.lo, "hi": lam.hi,
               "fc_norm": fc, "certificate_norm": cert, "certificate_gap": abs(fc - cert) / fc}
        if i < config.search_samples:
            found = interp_norm_search(lam, theta, config.search_budget, seed=config.seed * 100_003 + i, grid=grid)
            rec.update(search_value=found, search_slack=found - fc, search_excess=found - cert)
        return rec

    records = parallel_map(one, range(config.sample_count))
    gaps = [r["certificate_gap"] for r in records]
    summary = {"samples": len(records), "max_certificate_gap": max(gaps),
               "searched": sum("search_value" in r for r in records)}
    return _finish(config, records, summary)


def _zeon_verdicts(records, config) -> dict:
    samples = _of_kind(records, "sample")
    out = {"certificate_gap": _verdict(max(r["certificate_gap"] for r in samples), 1e-9, "<=")}
    searched = [r for r in samples if "search_value" in r]
    if searched:
        out["search_floor"] = _verdict(min(r["search_slack"] for r in searched), -1e-6, ">=")
        out["search_ceiling"] = _verdict(max(r["search_excess"] for r in searched), 1e-12, "<=")
    return out


# -------------------------------------------------------------------- diag


def diag_families() -> dict:
    return {"compact": FamilyK.geometric(COMPACT_KMAX), "flat": FamilyK.flat(FLAT_KMAX)}


def run_diag(config: ExperimentConfig, pair_samples: int = 256) -> ExperimentReport:
    config.validate()
    grid = CircleGrid(config.grid_size)
    zeta_degree = config.zeta_degrees[0]
    records = []
    coverage = {}
    for name, K in diag_families().items():
        members = ek_members(K, config.sample_count, config.seed, zeta_degree)
        coverage[name] = len(members)

        def one(item, K=K):
            idx, u = item
            return [{"kind": "rho", "family": name, "member": idx, "delta": d,
                     "value": rho_of_member(u, d, grid, pair_samples)} for d in DIAG_DELTAS]

        for recs in parallel_map(one, enumerate(members)):
            records.extend(recs)
    constant = BiLaurent(0, 0, [[1.0]])
    for d in DIAG_DELTAS:
        records.append({"kind": "constant", "delta": d, "value": rho_of_member(constant, d, grid, pair_samples)})
    curves = {name: _diag_curve(records, name) for name in diag_families()}
    summary = {"members": coverage, "zeta_degree": zeta_degree, "pair_samples": pair_samples,
               "compact_lipschitz_sum": diag_families()["compact"].lipschitz_sum()}
    return _finish(config, records, summary, {k: _curve_dict(c) for k, c in curves.items()})


def _diag_curve(records, family) -> ModulusCurve:
    raw = {}
    for r in records:
        if r["kind"] == "rho" and r["family"] == family:
            raw[r["delta"]] = max(raw.get(r["delta"], 0.0), r["value"])
    deltas = sorted(raw)
    return ModulusCurve(deltas, np.maximum.accumulate([raw[d] for d in deltas]))


def _diag_verdicts(records, config) -> dict:
    compact = _diag_curve(records, "compact")
    flat = _diag_curve(records, "flat")
    r05, r10 = compact.at(0.05), compact.at(0.1)
    lip = diag_families()["compact"].lipschitz_sum()
    return {
        "compact_decay": _verdict(r05 - 0.8 * r10, 1e-6, "<="),
        "compact_lipschitz": _verdict(r05, 2 * math.pi * 0.05 * lip + 0.05, "<="),
        "flat_witness": _verdict(flat.at(0.1), 12.0, ">="),
        "constant_member": _verdict(max(r["value"] for r in _of_kind(records, "constant")), 1e-12, "<="),
    }


def _curve_dict(c: ModulusCurve) -> dict:
    return {"deltas": c.deltas.tolist(), "values": c.values.tolist()}


# ------------------------------------------------------------ threecircles


def _three_circles_batch(config: ExperimentConfig, indices, grid: CircleGrid) -> np.ndarray:
    D = THREE_CIRCLES_DEGREE
    coeffs = np.zeros((len(indices), 2 * D + 1), dtype=complex)
    for row, i in enumerate(indices):
        rng = sample_rng(config.seed, 4, i)
        lo, hi = -int(rng.integers(0, D + 1)), int(rng.integers(0, D + 1))
        coeffs[row, lo + D : hi + D + 1] = random_laurent(rng, lo, hi).coeffs
    return three_circles_ratios(coeffs, -D, config.theta, grid)


def three_circles_samples(config: ExperimentConfig, count: int, grid: CircleGrid, batch: int = 1000) -> np.ndarray:
    chunks = [range(b, min(count, b + batch)) for b in range(0, count, batch)]
    return np.concatenate(parallel_map(lambda idx: _three_circles_batch(config, idx, grid), chunks))


def monomial_ratios(theta: float, grid: CircleGrid, degree: int = THREE_CIRCLES_DEGREE) -> np.ndarray:
    return three_circles_ratios(np.eye(2 * degree + 1), -degree, theta, grid)


def empirical_constant(config: ExperimentConfig, grid: CircleGrid, count: int | None = None) -> float:
    count = count or DEFAULT_SAMPLES["threecircles"]
    return float(max(monomial_ratios(config.theta, grid).max(), three_circles_samples(config, count, grid).max()))


def run_threecircles(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    grid = CircleGrid(config.grid_size)
    n = config.sample_count
    ratios = three_circles_samples(config, 2 * n, grid)
    mono = monomial_ratios(config.theta, grid)
    records = [{"kind": "monomial", "n": int(k), "ratio": float(r)}
               for k, r in zip(range(-THREE_CIRCLES_DEGREE, THREE_CIRCLES_DEGREE + 1), mono)]
    records += [{"kind": "ratio", "index": i, "ratio": float(r)} for i, r in enumerate(ratios)]
    c_n, c_2n = _three_circles_constants(records, n)
    summary = {"empirical_C": c_n, "empirical_C_doubled": c_2n, "samples": n,
               "median_ratio": float(np.median(ratios[:n])), "floor": 1 / (2 * math.pi)}
    return _finish(config, records, summary)


def _three_circles_constants(records, n) -> tuple[float, float]:
    mono = max(r["ratio"] for r in _of_kind(records, "monomial"))
    rand = _of_kind(records, "ratio")
    c_n = max([mono] + [r["ratio"] for r in rand if r["index"] < n])
    c_2n = max([mono] + [r["ratio"] for r in rand if r["index"] < 2 * n])
    return c_n, c_2n


def _threecircles_verdicts(records, config) -> dict:
    floor = 1 / (2 * math.pi)
    mono = [r["ratio"] for r in _of_kind(records, "monomial")]
    c_n, c_2n = _three_circles_constants(records, config["sample_count"])
    return {
        "monomial_ratio": _verdict(max(abs(r - floor) for r in mono), 1e-9, "<="),
        "constant_floor": _verdict(c_n, floor - 1e-9, ">="),
        "doubling_stability": _verdict(abs(c_2n - c_n) / c_n, 0.10, "<"),
    }


# -------------------------------------------------------------------- ikar


def ikar_knots(grid_size: int) -> np.ndarray:
    """Separations pi/128, pi/64, ..., pi (each at least one grid step)."""
    knots = math.pi / 2.0 ** np.arange(7, -1, -1)
    return knots[knots >= 2 * math.pi / grid_size]


def _outer_integrals(g: BiLaurent, size: int) -> tuple[float, float]:
    z = 2 * math.pi * np.arange(IKAR_Z_NODES) / IKAR_Z_NODES
    V = diagonal_samples(g, z, 1, size)
    h = 2 * math.pi / size
    diagonal_l1 = float(h * np.abs(V).sum(axis=1).max())
    diagonal_gap_l1 = max(float(h * np.abs(V[i] - V[i + 1 :]).sum(axis=1).max())
                          for i in range(len(z) - 1))
    return diagonal_l1, diagonal_gap_l1


def run_ikar(config: ExperimentConfig, pair_samples: int = 128, rho_budget: int = 16) -> ExperimentReport:
    config.validate()
    grid = CircleGrid(config.grid_size)
    theta = config.theta
    K0 = FamilyK.geometric(COMPACT_KMAX, sup_bound=1.0)
    C = empirical_constant(config, grid)

    knots = ikar_knots(grid.size)
    members = ek_members(K0, rho_budget, config.seed, zeta_degree=4)
    raw = np.zeros(knots.size)
    for u in members:
        for i, d in enumerate(knots):
            raw[i] = max(raw[i], rho_of_member(u, d, grid, pair_samples))
    records = [{"kind": "constant", "empirical_C": C}]
    records += [{"kind": "rho_knot", "delta": float(d), "value": float(v)} for d, v in zip(knots, raw)]
    curve = ModulusCurve(knots, np.maximum.accumulate(raw))
    psi_size = _trigmax.grid_size_for(COMPACT_KMAX, oversample=16)
    psi_grid = CircleGrid(psi_size)

    lambdas = {}
    for M in config.zeta_degrees:

        def one(i, M=M):
            rng = sample_rng(config.seed, 3, M * 1_000_003 + i)
            rec = {"kind": "sample", "zeta_degree": M, "index": i}
            try:
                cm = constrained_member(rng, M, K0, grid)
            except ValueError as exc:
                rec.update(generator_failed=True, reason=str(exc))
                return rec, None
            lam = evaluate_member(cm.member, math.exp(theta))
            diagonal_l1, diagonal_gap_l1 = _outer_integrals(cm.member, grid.size)
            check = modulus_bound_check(eval_circle(lam, theta, psi_grid), curve, theta, C)
            rec.update(generator_failed=False, scale=cm.scale, inner_norm=cm.inner_norm,
                       outer_norm=cm.outer_norm, envelope_ratio=cm.envelope_ratio,
                       fc_norm=fc_theta_norm(lam, theta, grid).value,
                       diagonal_l1=diagonal_l1, diagonal_gap_l1=diagonal_gap_l1,
                       modulus_slack=check.slack, modulus_passed=check.passed)
            return rec, lam

        out = parallel_map(one, range(config.sample_count))
        records.extend(r for r, _ in out)
        lambdas[M] = [lam for _, lam in out if lam is not None]
    for M in config.zeta_degrees:
        cov = covering_number(lambdas[M], IKAR_EPSILON, SpaceSpec.fc(theta), grid)
        records.append({"kind": "covering", "zeta_degree": M, "epsilon": IKAR_EPSILON,
                        "count": cov.count, "net_indices": list(cov.net_indices)})
    samples = _of_kind(records, "sample")
    summary = {
        "empirical_C": C,
        "covering_counts": {str(r["zeta_degree"]): r["count"] for r in _of_kind(records, "covering")},
        "generator_failures": sum(r["generator_failed"] for r in samples),
        "max_diagonal_l1": max(r.get("diagonal_l1", 0.0) for r in samples),
        "max_diagonal_gap_l1": max(r.get("diagonal_gap_l1", 0.0) for r in samples),
        "min_modulus_slack": min(r.get("modulus_slack", math.inf) for r in samples),
        "psi_grid_size": psi_size,
        "rho_members": len(members),
    }
    return _finish(config, records, summary, {"rho_K0": _curve_dict(curve)})


def _ikar_verdicts(records, config) -> dict:
    cov = {r["zeta_degree"]: r["count"] for r in _of_kind(records, "covering")}
    lo, hi = min(cov), max(cov)
    ok = [r for r in _of_kind(records, "sample") if not r["generator_failed"]]
    return {
        "covering_growth": _verdict(cov[hi] - 2 * cov[lo], 0, "<="),
        "generator_failures": _verdict(len(_of_kind(records, "sample")) - len(ok), 0, "<="),
        "diagonal_l1_bound": _verdict(max(r["diagonal_l1"] for r in ok), 2 * math.pi + 1e-6, "<="),
        "diagonal_gap_l1_bound": _verdict(max(r["diagonal_gap_l1"] for r in ok), 4 * math.pi + 1e-6, "<="),
        "modulus_bound": _verdict(min(r["modulus_slack"] for r in ok), 0.0, ">="),
    }


# ------------------------------------------------------------------ shared


RUNNERS = {"zeon": run_zeon, "diag": run_diag, "ikar": run_ikar, "threecircles": run_threecircles}
_VERDICTS = {"zeon": _zeon_verdicts, "diag": _diag_verdicts, "ikar": _ikar_verdicts,
             "threecircles": _threecircles_verdicts}


def compute_verdicts(experiment: str, records: list, config: dict) -> dict:
    return _VERDICTS[experiment](records, config)


def _finish(config: ExperimentConfig, records, summary, curves=None) -> ExperimentReport:
    cfg = config.to_dict()
    return ExperimentReport(cfg, records, summary, compute_verdicts(config.experiment, records, cfg), curves or {})


def run(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    start = time.perf_counter()
    report = RUNNERS[config.experiment](config)
    report.meta = {"elapsed_seconds": time.perf_counter() - start, "workers": worker_count()}
    return report


# ---------------------------------------------------------------------- IO


def records_csv(records: list) -> str:
    keys: list[str] = []
    for r in records:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
    return buf.getvalue()


def write_report(report: ExperimentReport, path: str | os.PathLike) -> list[Path]:
    """Write JSON, the per-record CSV and one two-column .dat file per curve."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    written = [path]
    csv_path = path.with_suffix(".csv")
    csv_path.write_text(records_csv(report.records))
    written.append(csv_path)
    for name, c in report.curves.items():
        dat = path.with_name(f"{path.stem}.{name}.dat")
        dat.write_text("# delta value\n" + ModulusCurve(c["deltas"], c["values"]).to_dat())
        written.append(dat)
    return written


def load_report(path: str | os.PathLike) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {data.get('schema_version')!r}")
    for key in ("config", "records", "verdicts"):
        if key not in data:
            raise ConfigError(f"report lacks the {key!r} field")
    if data["config"].get("experiment") not in EXPERIMENTS:
        raise ConfigError("report names an unknown experiment")
    return data


@dataclass
class VerifyResult:
    verdicts: dict
    mismatches: list

    @property
    def passed(self) -> bool:
        return not self.mismatches and all(v["passed"] for v in self.verdicts.values())


def verify_report(data: dict) -> VerifyResult:
    """Recompute verdicts from the records and compare with the stored ones."""
    cfg = data["config"]
    fresh = compute_verdicts(cfg["experiment"], data["records"], cfg)
    stored = data["verdicts"]
    mismatches = sorted(set(fresh) ^ set(stored))
    for name in set(fresh) & set(stored):
        if fresh[name]["passed"] != stored[name]["passed"] or fresh[name]["value"] != stored[name]["value"]:
            mismatches.append(name)
    return VerifyResult(fresh, mismatches)
