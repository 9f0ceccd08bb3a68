"""Experiment runner CLI.

Scenarios cover consensus exactness sweeps, the gradient-descent
convergence study, the privacy audit and the round-count bookkeeping.
Configuration is a flat key=value file with command-line overrides; every
output is CSV with deterministic 17-significant-digit formatting, so a
fixed config and seed reproduce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import optimizer, privacy
from .digraph import DiGraph, from_edge_list_text, random_strongly_connected
from .errors import FtpushsumError
from .prftps import PrftpsSession, prftps_step, run_recorded
from .pushsum import baseline_run

SCENARIOS = ("consensus_exactness", "gd_convergence", "privacy_audit", "round_counts")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str = "consensus_exactness"
    n: int = 5
    p: int = 3
    q: int = 3
    eta: float = 0.1
    steps: int = 200
    seed: int = 0
    trials: int = 50
    extra_edge_prob: float = 0.3
    detection: str = "exact"
    rank_tol: float = 1e-8
    trace_tol: float = 1e-10
    e_points: int = 9
    e_span: float = 1e6
    weight_spread: float = 1.0
    parallel_trials: int = 1
    graph_file: str = ""
    out_dir: str = "."


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name: str, raw: str, where: str):
    kind = _FIELD_TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: field '{name}' expects {kind}, got {raw!r}") from None


def parse_config_file(path: str) -> dict:
    values = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{line_no}: unknown field '{key}'")
        values[key] = _coerce(key, raw.strip(), f"{path}:{line_no}")
    return values


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"field 'scenario' must be one of {SCENARIOS}, got {cfg.scenario!r}")
    if cfg.detection not in ("exact", "svd"):
        raise ConfigError(f"field 'detection' must be 'exact' or 'svd', got {cfg.detection!r}")
    for name in ("n", "p", "q", "trials", "e_points", "parallel_trials"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"field '{name}' must be positive, got {getattr(cfg, name)}")
    for name in ("eta", "rank_tol", "trace_tol", "e_span", "weight_spread"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"field '{name}' must be > 0, got {getattr(cfg, name)}")
    if cfg.steps < 0:
        raise ConfigError(f"field 'steps' must be >= 0, got {cfg.steps}")
    if not 0.0 <= cfg.extra_edge_prob <= 1.0:
        raise ConfigError(
            f"field 'extra_edge_prob' must be in [0, 1], got {cfg.extra_edge_prob}"
        )
    return cfg


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _load_graph(cfg: ExperimentConfig, rng: np.random.Generator) -> DiGraph:
    if cfg.graph_file:
        return from_edge_list_text(Path(cfg.graph_file).read_text())
    return random_strongly_connected(cfg.n, cfg.extra_edge_prob, rng)


# ---------------------------------------------------------------------------
# consensus_exactness


def _exactness_trial(args):
    trial, seed_entropy, rank_tol, spread, detection = args
    seq = np.random.SeedSequence(seed_entropy)
    rng = np.random.default_rng(seq)
    n = int(rng.integers(2, 11))
    graph = random_strongly_connected(n, 0.3, rng)
    inputs = rng.standard_normal(n)
    mean = float(inputs.mean())
    session = PrftpsSession(
        graph=graph, seed=int(rng.integers(2**32)), detection=detection,
        rank_tol=rank_tol, weight_spread=spread,
    )
    outputs = prftps_step(session, inputs, 0)
    rel_err = float(np.abs(outputs - mean).max() / (1.0 + abs(mean)))
    k1 = session.rounds_log[0]
    baseline = baseline_run(graph, inputs, 500)
    base_err_500 = float(np.abs(baseline.ratios() - mean).max())
    base_rounds = _baseline_rounds_to(graph, inputs, mean, 1e-6, 500)
    return (
        trial, n, session.dmax, k1, session.k_max, rel_err,
        base_rounds, base_err_500,
    )


def _baseline_rounds_to(graph, inputs, mean, tol, cap):
    from .pushsum import BaselineState, baseline_matrix
    from . import _backend

    p = baseline_matrix(graph)
    stacked = np.ascontiguousarray(np.vstack([np.asarray(inputs, float), np.ones(graph.n)]))
    for k in range(1, cap + 1):
        stacked = _backend.baseline_round(p, stacked)
        if np.abs(stacked[0] / stacked[1] - mean).max() <= tol:
            return k
    return -1  # not reached within cap


def run_consensus_exactness(cfg: ExperimentConfig, out: Path) -> None:
    # per-trial entropy is (seed, trial): picklable and order-independent
    jobs = [
        (t, [cfg.seed, t], cfg.rank_tol, cfg.weight_spread, cfg.detection)
        for t in range(cfg.trials)
    ]
    if cfg.parallel_trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel_trials) as pool:
            results = list(pool.map(_exactness_trial, jobs))
    else:
        results = [_exactness_trial(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    write_csv(
        out / "trials.csv",
        ["trial", "n", "dmax", "k1", "kmax", "max_rel_error",
         "baseline_rounds_to_1e6", "baseline_err_at_500"],
        results,
    )
    max_err = max(r[5] for r in results)
    identities_ok = all(r[3] == 4 * (r[2] + 1) and r[4] == r[2] + 2 for r in results)
    write_csv(
        out / "summary.csv",
        ["trials", "max_rel_error", "round_identities_ok"],
        [(cfg.trials, max_err, identities_ok)],
    )


# ---------------------------------------------------------------------------
# gd_convergence


def emit_plotdata(report: optimizer.ConvergenceReport, path: Path) -> None:
    """Two-column plot data: cumulative communication rounds vs residual."""
    write_csv(
        path,
        ["rounds_cumulative", "normalized_residual"],
        [(rounds, res) for _, rounds, res, _ in report.rows()],
    )


def run_gd_convergence(cfg: ExperimentConfig, out: Path) -> None:
    rng = np.random.default_rng(cfg.seed)
    graph = _load_graph(cfg, rng)
    objectives = optimizer.least_squares_instance(graph.n, cfg.q, cfg.p, rng)
    report = optimizer.run(
        graph, objectives, eta=cfg.eta, steps=cfg.steps,
        seed=cfg.seed, rank_tol=cfg.rank_tol,
    )
    if report.eta_exceeds_bound:
        print(
            f"warning: eta={cfg.eta:g} is at or above the admissible bound "
            f"1/(mu+L)={report.eta_bound:g}",
            file=sys.stderr,
        )
    write_csv(
        out / "convergence.csv",
        ["t", "rounds_cumulative", "normalized_residual", "consensus_error"],
        report.rows(),
    )
    emit_plotdata(report, out / "plotdata.csv")
    write_csv(
        out / "summary.csv",
        ["final_residual", "eta", "eta_bound", "eta_exceeds_bound", "k1", "kmax",
         "rate_slope", "tail_ratio_median", "non_monotone", "diverged"],
        [(
            report.residuals[-1], report.eta, report.eta_bound,
            report.eta_exceeds_bound, report.k1, report.k_max,
            report.rate_slope if report.rate_slope is not None else "",
            report.tail_ratio_median if report.tail_ratio_median is not None else "",
            report.non_monotone, report.diverged,
        )],
    )


# ---------------------------------------------------------------------------
# privacy_audit


def run_privacy_audit(cfg: ExperimentConfig, out: Path) -> None:
    rng = np.random.default_rng(cfg.seed)
    if cfg.graph_file:
        graph = from_edge_list_text(Path(cfg.graph_file).read_text())
    elif cfg.n == 3:
        graph = DiGraph(3, frozenset({(1, 0), (2, 1), (0, 2)}))  # directed 3-cycle
    else:
        graph = random_strongly_connected(cfg.n, cfg.extra_edge_prob, rng)
    inputs = rng.standard_normal(graph.n)
    record = run_recorded(
        graph, inputs, seed=cfg.seed, rank_tol=cfg.rank_tol,
        weight_spread=cfg.weight_spread,
    )
    target = 0
    hbc = privacy.AdversaryModel(
        kind=privacy.HONEST_BUT_CURIOUS,
        nodes=frozenset({min(n for n in range(graph.n) if n != target)}),
    )
    verdict = privacy.privacy_condition(graph, target, hbc)
    eaves = privacy.AdversaryModel(
        kind=privacy.EAVESDROPPER,
        edges=frozenset(graph.edges) - {verdict.witness_edge},
    )
    rows = []
    grid = np.linspace(-cfg.e_span, cfg.e_span, cfg.e_points)
    for name, adv in (("honest_but_curious", hbc), ("eavesdropper", eaves)):
        v = privacy.privacy_condition(graph, target, adv)
        if not v.preserved:
            rows.append((name, target, "", "", 0.0, "", "", "not_guaranteed"))
            continue
        for e in grid:
            alt = privacy.build_equivalent_execution(record, target, v.witness_node, e)
            rep = privacy.verify_equivalence(record, alt, adv, trace_tol=cfg.trace_tol)
            verdict_str = "preserved" if rep.traces_equal and rep.outputs_agree else "violated"
            rows.append((
                name, target, v.witness_node, v.situation, float(e),
                rep.max_trace_deviation, rep.max_output_deviation, verdict_str,
            ))
    write_csv(
        out / "audit.csv",
        ["model", "target", "witness", "situation", "e",
         "max_trace_deviation", "max_output_deviation", "verdict"],
        rows,
    )


# ---------------------------------------------------------------------------
# round_counts


def run_round_counts(cfg: ExperimentConfig, out: Path) -> None:
    rng = np.random.default_rng(cfg.seed)
    graph = _load_graph(cfg, rng)
    inputs = rng.standard_normal(graph.n)
    session = PrftpsSession(
        graph=graph, seed=cfg.seed, detection=cfg.detection,
        rank_tol=cfg.rank_tol, weight_spread=cfg.weight_spread,
    )
    prftps_step(session, inputs, 0)
    k1 = session.rounds_log[0]
    write_csv(
        out / "round_counts.csv",
        ["node", "degree", "frozen_count"],
        [(j, poly.degree, poly.defect_round) for j, poly in enumerate(session.poly)],
    )
    write_csv(
        out / "round_summary.csv",
        ["dmax", "k1", "kmax", "k1_identity_ok", "kmax_identity_ok"],
        [(
            session.dmax, k1, session.k_max,
            k1 == 4 * (session.dmax + 1), session.k_max == session.dmax + 2,
        )],
    )


_RUNNERS = {
    "consensus_exactness": run_consensus_exactness,
    "gd_convergence": run_gd_convergence,
    "privacy_audit": run_privacy_audit,
    "round_counts": run_round_counts,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftpushsum",
        description="Seeded consensus/optimization/privacy experiments with CSV output.",
    )
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--graph-file", dest="graph_file", help="edge-list graph file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--eta", type=float)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--rank-tol", dest="rank_tol", type=float)
    parser.add_argument("--detection", choices=("exact", "svd"))
    parser.add_argument("--trace-tol", dest="trace_tol", type=float)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--p", type=int)
    parser.add_argument("--q", type=int)
    parser.add_argument("--e-points", dest="e_points", type=int)
    parser.add_argument("--extra-edge-prob", dest="extra_edge_prob", type=float)
    parser.add_argument("--parallel-trials", dest="parallel_trials", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = parse_config_file(args.config) if args.config else {}
        for name in _FIELD_TYPES:
            cli_value = getattr(args, name, None)
            if cli_value is not None:
                values[name] = cli_value
        cfg = validate_config(replace(ExperimentConfig(), **values))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    try:
        _RUNNERS[cfg.scenario](cfg, out)
    except FtpushsumError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
