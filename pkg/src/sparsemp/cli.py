"""Command-line experiment harness.

Subcommands: spectrum, locallaw, config-analyze, concentration, audit,
tn-moments.  Every command takes a JSON config (--config) and writes JSON/CSV
reports into --out-dir.  All randomness flows from config seeds, reductions
are order-independent, and no timestamps enter the outputs, so reruns with
any worker count produce byte-identical files.

Exit codes: 0 ok, 1 invariant violation, 2 bad parameters, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import concentration as conc
from .configuration import classify_sample, inadmissibility_probability
from .errors import (DegenerateConditioningError, IdentityFailureError,
                     NumericalError, ParameterError, QuadratureError)
from .locallaw import locallaw_scan, self_consistency_audit, tn_moment_study
from .model import EntryDistribution, ModelParams, sample_matrix
from .mplaw import ComplexPoint, DomainSpec, mp_cdf, mp_density, mp_edges
from .spectral import esd_histogram, singular_values, write_spectrum_csv

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_PARAMS = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load_schema(name: str) -> dict:
    ref = resources.files("sparsemp").joinpath("schemas", name)
    return json.loads(ref.read_text(encoding="utf-8"))


def _write_json(path: Path, payload: dict, schema: str | None = None) -> None:
    if schema is not None:
        jsonschema.validate(payload, _load_schema(schema))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# command configs (lossless JSON round-trip)


@dataclass(frozen=True)
class DomainTemplate:
    kind: str = "d_mu"
    mu: float = 0.2
    a0: float = 0.1
    V: float = 1.0
    grid_u: int = 8
    grid_v: int = 8

    def spec_for(self, n: int) -> DomainSpec:
        return DomainSpec(kind=self.kind, a0=self.a0, V=self.V, n=n,
                          grid_u=self.grid_u, grid_v=self.grid_v, mu=self.mu)


@dataclass(frozen=True)
class SpectrumConfig:
    model: ModelParams
    replication: int = 0
    bins: int = 61

    def to_dict(self):
        return {"model": self.model.to_dict(), "replication": self.replication,
                "bins": self.bins}

    @classmethod
    def from_dict(cls, d):
        return cls(model=ModelParams.from_dict(d["model"]),
                   replication=int(d.get("replication", 0)),
                   bins=int(d.get("bins", 61)))


@dataclass(frozen=True)
class SweepConfig:
    """Shared shape for n-sweep campaigns (locallaw, config-analyze)."""

    dist: EntryDistribution
    delta: float
    seed: int
    n_values: tuple[int, ...]
    y: float
    np_product: float | None = None
    p: float | None = None

    def __post_init__(self):
        if (self.np_product is None) == (self.p is None):
            raise ParameterError("exactly one of np_product or p must be set")
        if not self.n_values:
            raise ParameterError("n_values must be nonempty")

    def params_for(self, n: int) -> ModelParams:
        m = round(n / self.y)
        p = self.p if self.p is not None else self.np_product / n
        return ModelParams(n=n, m=m, p=p, dist=self.dist, delta=self.delta,
                           seed=self.seed)

    def to_dict(self):
        d = {"delta": self.delta, "seed": self.seed,
             "n_values": list(self.n_values), "y": self.y}
        d.update(self.dist.to_dict())
        if self.np_product is not None:
            d["np_product"] = self.np_product
        if self.p is not None:
            d["p"] = self.p
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(dist=EntryDistribution.from_dict(d), delta=float(d["delta"]),
                   seed=int(d["seed"]), n_values=tuple(int(n) for n in d["n_values"]),
                   y=float(d["y"]),
                   np_product=float(d["np_product"]) if "np_product" in d else None,
                   p=float(d["p"]) if "p" in d else None)


@dataclass(frozen=True)
class LocalLawConfig:
    sweep: SweepConfig
    domain: DomainTemplate
    replications: int = 20
    C0: float = 1.0
    max_entry_stride: int = 10

    def to_dict(self):
        return {"sweep": self.sweep.to_dict(), "domain": asdict(self.domain),
                "replications": self.replications, "C0": self.C0,
                "max_entry_stride": self.max_entry_stride}

    @classmethod
    def from_dict(cls, d):
        return cls(sweep=SweepConfig.from_dict(d["sweep"]),
                   domain=DomainTemplate(**d.get("domain", {})),
                   replications=int(d.get("replications", 20)),
                   C0=float(d.get("C0", 1.0)),
                   max_entry_stride=int(d.get("max_entry_stride", 0)))


@dataclass(frozen=True)
class ConfigAnalyzeConfig:
    sweep: SweepConfig
    threshold_c: float = 1.0
    replications: int = 1000
    report_sample: bool = True
    deviant_threshold: float | None = None

    def to_dict(self):
        d = {"sweep": self.sweep.to_dict(), "threshold_c": self.threshold_c,
             "replications": self.replications, "report_sample": self.report_sample}
        if self.deviant_threshold is not None:
            d["deviant_threshold"] = self.deviant_threshold
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(sweep=SweepConfig.from_dict(d["sweep"]),
                   threshold_c=float(d.get("threshold_c", 1.0)),
                   replications=int(d.get("replications", 1000)),
                   report_sample=bool(d.get("report_sample", True)),
                   deviant_threshold=(float(d["deviant_threshold"])
                                      if "deviant_threshold" in d else None))


@dataclass(frozen=True)
class ConcentrationConfig:
    k: int = 5
    q: int = 8
    xi: EntryDistribution = field(default_factory=EntryDistribution.rademacher)
    eta: EntryDistribution = field(default_factory=EntryDistribution.rademacher)
    mode: str = "auto"
    samples: int = 20000
    seed: int = 0
    matrix_kind: str = "gaussian"
    matrix_seed: int = 0
    matrix_scale: float = 1.0
    corpus: int = 0
    a2_moment_side: str = "xi"

    def to_dict(self):
        return {"k": self.k, "q": self.q,
                "xi": self.xi.to_dict(), "eta": self.eta.to_dict(),
                "mode": self.mode, "samples": self.samples, "seed": self.seed,
                "matrix_kind": self.matrix_kind, "matrix_seed": self.matrix_seed,
                "matrix_scale": self.matrix_scale, "corpus": self.corpus,
                "a2_moment_side": self.a2_moment_side}

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        if "xi" in kw:
            kw["xi"] = EntryDistribution.from_dict(kw["xi"])
        if "eta" in kw:
            kw["eta"] = EntryDistribution.from_dict(kw["eta"])
        return cls(**kw)

    def matrix_for(self, trial: int) -> np.ndarray:
        if self.matrix_kind == "identity":
            return self.matrix_scale * np.eye(self.k)
        if self.matrix_kind == "gaussian":
            ss = np.random.SeedSequence(entropy=self.matrix_seed, spawn_key=(trial,))
            rng = np.random.Generator(np.random.Philox(ss))
            return self.matrix_scale * rng.standard_normal((self.k, self.k))
        raise ParameterError(f"unknown matrix_kind {self.matrix_kind!r}")


@dataclass(frozen=True)
class AuditConfig:
    model: ModelParams
    u: float = 0.9
    v: float = 0.5
    replication: int = 0
    tolerance: float = 1e-8

    def to_dict(self):
        return {"model": self.model.to_dict(), "u": self.u, "v": self.v,
                "replication": self.replication, "tolerance": self.tolerance}

    @classmethod
    def from_dict(cls, d):
        return cls(model=ModelParams.from_dict(d["model"]),
                   u=float(d.get("u", 0.9)), v=float(d.get("v", 0.5)),
                   replication=int(d.get("replication", 0)),
                   tolerance=float(d.get("tolerance", 1e-8)))


@dataclass(frozen=True)
class TnMomentsConfig:
    model: ModelParams
    u: float = 0.9
    v: float = 0.5
    q: int = 2
    replications: int = 1000
    gamma: float = 0.5
    s0: float = 2.0
    mu: float = 0.2
    V: float = 1.0
    grid_u: int = 8

    def to_dict(self):
        return {"model": self.model.to_dict(), "u": self.u, "v": self.v,
                "q": self.q, "replications": self.replications, "gamma": self.gamma,
                "s0": self.s0, "mu": self.mu, "V": self.V, "grid_u": self.grid_u}

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        kw["model"] = ModelParams.from_dict(kw["model"])
        return cls(**kw)


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg: SpectrumConfig, out_dir: Path, workers: int | None) -> int:
    params = cfg.model
    y = params.y
    a_edge, b_edge = mp_edges(y)
    x = sample_matrix(params, cfg.replication)
    spec = singular_values(x)
    write_spectrum_csv(out_dir / "singular_values.csv", spec)

    top = float(spec.singulars[0]) if spec.singulars.size else 0.0
    hi = max(b_edge, top) * 1.02
    edges = np.linspace(-hi, hi, cfg.bins + 1)
    counts = esd_histogram(spec, edges)
    width = edges[1] - edges[0]
    n2 = 2 * params.n
    emp = counts / (n2 * width)
    binavg = np.array([
        (mp_cdf(float(edges[i + 1]), y, tol=1e-9) - mp_cdf(float(edges[i]), y, tol=1e-9))
        / width
        for i in range(cfg.bins)
    ])
    mids = 0.5 * (edges[:-1] + edges[1:])
    mid_density = np.array([mp_density(float(t), y) for t in mids])

    # interior bins: fully inside the support and clear of both edges by 5%
    pad = 0.05 * (b_edge - a_edge)
    lo_in, hi_in = a_edge + pad, b_edge - pad
    interior = [(abs(mids[i]) >= lo_in and abs(mids[i]) <= hi_in
                 and min(abs(edges[i]), abs(edges[i + 1])) >= lo_in
                 and max(abs(edges[i]), abs(edges[i + 1])) <= hi_in)
                for i in range(cfg.bins)]
    gaps = [abs(emp[i] - binavg[i]) for i in range(cfg.bins) if interior[i]]
    sup_gap = max(gaps) if gaps else 0.0

    rows = [
        ",".join([_fmt(edges[i]), _fmt(edges[i + 1]), str(int(counts[i])),
                  _fmt(emp[i]), _fmt(binavg[i]), _fmt(mid_density[i])])
        for i in range(cfg.bins)
    ]
    _write_csv(out_dir / "esd_histogram.csv",
               "bin_left,bin_right,count,density_emp,density_mp_binavg,density_mp_mid",
               rows)
    _write_json(out_dir / "spectrum_summary.json", {
        "schema_version": 1,
        "params": params.to_dict(),
        "replication": cfg.replication,
        "bins": cfg.bins,
        "a_edge": a_edge,
        "b_edge": b_edge,
        "sup_gap_interior": float(sup_gap),
        "top_singular": top,
        "files": {"singular_values": "singular_values.csv",
                  "histogram": "esd_histogram.csv"},
    }, schema="spectrum_summary.schema.json")
    return EXIT_OK


def cmd_locallaw(cfg: LocalLawConfig, out_dir: Path, workers: int | None) -> int:
    summary_rows = []
    for n in cfg.sweep.n_values:
        params = cfg.sweep.params_for(n)
        domain = cfg.domain.spec_for(n)
        report = locallaw_scan(params, domain, cfg.replications, C0=cfg.C0,
                               max_entry_stride=cfg.max_entry_stride, workers=workers)
        _write_json(out_dir / f"locallaw_n{n}.json", report.to_dict(),
                    schema="locallaw_report.schema.json")
        report.write_points_csv(out_dir / f"locallaw_points_n{n}.csv")
        summary_rows.append(f"{n},{_fmt(report.sup_ratio)},{_fmt(report.fitted_k)}")
    _write_csv(out_dir / "locallaw_summary.csv", "n,sup_ratio,fitted_K", summary_rows)
    return EXIT_OK


def cmd_config_analyze(cfg: ConfigAnalyzeConfig, out_dir: Path,
                       workers: int | None) -> int:
    rows = []
    for n in cfg.sweep.n_values:
        params = cfg.sweep.params_for(n)
        est = inadmissibility_probability(params, cfg.threshold_c, cfg.replications,
                                          deviant_threshold=cfg.deviant_threshold,
                                          workers=workers)
        rows.append(f"{n},{_fmt(params.p)},{_fmt(est.value)},{_fmt(est.stderr)}")
        if cfg.report_sample:
            report = classify_sample(sample_matrix(params, 0), params,
                                     cfg.threshold_c, cfg.deviant_threshold)
            _write_json(out_dir / f"config_report_n{n}.json", report.to_dict(),
                        schema="config_report.schema.json")
    _write_csv(out_dir / "inadmissibility.csv", "n,p,estimate,stderr", rows)
    return EXIT_OK


def cmd_concentration(cfg: ConcentrationConfig, out_dir: Path,
                      workers: int | None) -> int:
    trials = max(1, cfg.corpus)
    corpus_rows = []
    first_report = None
    for trial in range(trials):
        a = cfg.matrix_for(trial)
        inp = conc.ConcentrationInput(a=a, xi_dist=cfg.xi, eta_dist=cfg.eta, q=cfg.q)
        report = conc.evaluate(inp, mode=cfg.mode, samples=cfg.samples,
                               seed=cfg.seed + trial, a2_moment_side=cfg.a2_moment_side)
        if first_report is None:
            first_report = report
        corpus_rows.append(",".join([
            str(trial), _fmt(report.lhs), _fmt(report.a1), _fmt(report.a2),
            _fmt(report.a3), _fmt(report.fitted_c),
        ]))
    _write_json(out_dir / "concentration_report.json", first_report.to_dict(),
                schema="concentration_report.schema.json")
    if cfg.corpus > 0:
        _write_csv(out_dir / "concentration_corpus.csv",
                   "trial,lhs,A1,A2,A3,fitted_C", corpus_rows)
    return EXIT_OK


def cmd_audit(cfg: AuditConfig, out_dir: Path, workers: int | None) -> int:
    params = cfg.model
    x = sample_matrix(params, cfg.replication)
    audit = self_consistency_audit(x, ComplexPoint(cfg.u, cfg.v), params.y,
                                   p=params.p, tol=cfg.tolerance)
    _write_json(out_dir / "audit_report.json", {
        "schema_version": 1,
        "params": params.to_dict(),
        "z": {"u": cfg.u, "v": cfg.v},
        "tolerance": cfg.tolerance,
        "convention": list(audit.convention),
        "max_residual": audit.max_residual,
        "t_n": {"re": audit.t_n.real, "im": audit.t_n.imag},
        "residual_exact": audit.residual_exact,
        "residual_flipped": audit.residual_flipped,
        "rows": [{"j": r.j, "identity_residual": r.identity_residual}
                 for r in audit.reports],
    }, schema="audit_report.schema.json")
    return EXIT_OK


def cmd_tn_moments(cfg: TnMomentsConfig, out_dir: Path, workers: int | None) -> int:
    result = tn_moment_study(cfg.model, ComplexPoint(cfg.u, cfg.v), cfg.q,
                             cfg.replications, gamma=cfg.gamma, s0=cfg.s0,
                             mu=cfg.mu, V=cfg.V, grid_u=cfg.grid_u, workers=workers)
    _write_json(out_dir / "tn_moments.json", result.to_dict(),
                schema="tn_report.schema.json")
    return EXIT_OK


_COMMANDS = {
    "spectrum": (SpectrumConfig, cmd_spectrum),
    "locallaw": (LocalLawConfig, cmd_locallaw),
    "config-analyze": (ConfigAnalyzeConfig, cmd_config_analyze),
    "concentration": (ConcentrationConfig, cmd_concentration),
    "audit": (AuditConfig, cmd_audit),
    "tn-moments": (TnMomentsConfig, cmd_tn_moments),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="sparsemp",
                     description="Sparse sample covariance simulation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: SPARSEMP_WORKERS or 1)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    cfg_cls, runner = _COMMANDS[args.command]
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        cfg = cfg_cls.from_dict(raw)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return runner(cfg, out_dir, args.workers)
    except (ParameterError, FileNotFoundError, json.JSONDecodeError, KeyError,
            TypeError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (IdentityFailureError, QuadratureError, NumericalError,
            DegenerateConditioningError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
