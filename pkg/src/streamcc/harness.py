"""Experiment orchestration: datasets, predictor sweeps, baselines and CSV output.

Each trial owns its randomness (derived from the config seed and the trial
index), so a config reproduces its rows exactly. Costs are always scored on
the graph replayed from the stream, never on the algorithms' estimates.
"""
from __future__ import annotations

import csv
import io
import math
import os
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from ._random import derive_seed
from .ballgrow import FALLBACKS, general_cc
from .exceptions import ConfigError
from .graph import (
    BRUTE_FORCE_LIMIT,
    EdgeUpdate,
    RandomPermutation,
    SignedGraph,
    bad_triangle_lower_bound,
    brute_force_opt,
    cost,
    generate_sbm,
    load_edge_list,
    read_labels,
    replay_stream,
    to_stream,
)
from .pivot import TruncationThresholds, classic_pivot, cklpu_pivot, pairwise_diss
from .predictor import (
    ConstantOracle,
    DistanceOracle,
    embedding_oracle,
    load_embedding,
    load_table_oracle,
    noisy_oracle,
    quality_L,
    spectral_embedding,
)
from .streaming import dynamic_cc, insertion_cc

ALGOS = ("dynamic", "insertion", "general", "cklpu", "pivot", "pairwise_diss")
LEARNING = frozenset({"dynamic", "insertion", "general", "pairwise_diss"})
_ALIASES = {"dynamic_cc": "dynamic", "insertion_cc": "insertion", "general_cc": "general",
            "cklpu_pivot": "cklpu", "classic_pivot": "pivot"}
LOWER_BOUND_LIMIT = 400


# --- replay oracle -----------------------------------------------------------

class ReplayOracle:
    """Second-pass materialisation of a stream's net graph.

    Keeps a running total of the words it has handed out so callers can
    report the storage apart from the algorithm's own space.
    """

    def __init__(self):
        self.words = 0
        self.calls = 0

    def __call__(self, updates: Iterable[EdgeUpdate], n: int | None = None,
                 complete: bool = True) -> SignedGraph:
        g = replay_stream(updates, n=n, complete=complete)
        self.calls += 1
        self.words += 2 * (len(g.pos) + len(g.neg))
        return g


def replay_oracle(stream: Iterable[EdgeUpdate], n: int | None = None,
                  complete: bool = True) -> SignedGraph:
    return ReplayOracle()(stream, n=n, complete=complete)


# --- configuration -------------------------------------------------------------

def _split(value) -> tuple[str, ...]:
    if isinstance(value, str):
        return tuple(x.strip() for x in value.split(",") if x.strip())
    return tuple(str(x) for x in value)


@dataclass
class ExperimentConfig:
    """One experiment: a dataset, algorithms, a predictor sweep and trials.

    ``dataset`` is ``"sbm"`` (regenerated each trial from ``n, blocks, p``)
    or the path of an edge list. Predictor specs are ``noisy:<eps0>``,
    ``embed:<path>``, ``table:<path>``, ``const:<value>`` or
    ``spectral:<dim>``; noisy predictors need a reference clustering, which
    is the planted one for SBM data and ``reference`` otherwise.
    """

    dataset: str = "sbm"
    n: int = 100
    blocks: int = 4
    p: float = 0.9
    algorithms: tuple[str, ...] = ("dynamic", "cklpu")
    predictors: tuple[str, ...] = ("noisy:0.0",)
    trials: int = 1
    seed: int = 0
    epsilon: float = 0.2
    c: float = 4.0
    k: int | None = None
    neg_budget: int | None = None
    fallback: str = "ballgrow"
    stream_mode: str = "insertion_only"
    churn: float = 0.0
    reference: str | None = None
    out: str | None = None
    record_runtime: bool = False

    _INT = ("n", "blocks", "trials", "seed", "k", "neg_budget")
    _FLOAT = ("p", "epsilon", "c", "churn")

    @classmethod
    def from_mapping(cls, items: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, raw in items.items():
            key = key.strip().replace("-", "_")
            if key in ("algos", "algo"):
                key = "algorithms"
            if key in ("predictor",):
                key = "predictors"
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = cls._coerce(key, raw)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def _coerce(cls, key: str, raw):
        if not isinstance(raw, str):
            return tuple(raw) if key in ("algorithms", "predictors") else raw
        raw = raw.strip()
        try:
            if key in cls._INT:
                return None if raw.lower() in ("", "none") else int(raw)
            if key in cls._FLOAT:
                return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r}") from None
        if key in ("algorithms", "predictors"):
            return _split(raw)
        if key == "record_runtime":
            return raw.lower() in ("1", "true", "yes", "on")
        if key in ("reference", "out"):
            return raw or None
        return raw

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        items = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, value = line.split("=", 1)
                items[key.strip()] = value.strip()
        return cls.from_mapping(items)

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        self.algorithms = tuple(_ALIASES.get(a, a) for a in _split(self.algorithms))
        self.predictors = _split(self.predictors)
        if not self.algorithms:
            raise ConfigError("no algorithms given")
        if not self.predictors:
            raise ConfigError("no predictors given")
        for a in self.algorithms:
            if a not in ALGOS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {ALGOS}")
        if self.fallback not in FALLBACKS:
            raise ConfigError(f"unknown fallback {self.fallback!r}")
        if self.stream_mode not in ("insertion_only", "dynamic"):
            raise ConfigError(f"unknown stream mode {self.stream_mode!r}")
        if not (0.0 < self.epsilon < 0.25):
            raise ConfigError(f"epsilon must lie in (0, 1/4), got {self.epsilon}")
        if self.dataset == "sbm":
            if self.n < 1 or self.blocks < 1:
                raise ConfigError("sbm needs n >= 1 and blocks >= 1")
            if not (0.5 < self.p <= 1.0):
                raise ConfigError(f"sbm p must lie in (0.5, 1], got {self.p}")
        elif not os.path.exists(self.dataset):
            raise ConfigError(f"dataset file not found: {self.dataset}")
        if self.reference is not None and not os.path.exists(self.reference):
            raise ConfigError(f"reference labels file not found: {self.reference}")
        for spec in self.predictors:
            kind, _, arg = spec.partition(":")
            if kind in ("embed", "table"):
                if not os.path.exists(arg):
                    raise ConfigError(f"predictor file not found: {arg}")
            elif kind in ("noisy", "const", "spectral"):
                try:
                    float(arg)
                except ValueError:
                    raise ConfigError(f"bad predictor argument in {spec!r}") from None
                if kind == "noisy" and self.dataset != "sbm" and self.reference is None:
                    raise ConfigError(f"{spec!r} needs a reference clustering for {self.dataset}")
            else:
                raise ConfigError(f"unknown predictor {spec!r}")

    @property
    def dataset_name(self) -> str:
        if self.dataset == "sbm":
            return f"sbm(n={self.n},k={self.blocks},p={self.p:g})"
        return os.path.basename(self.dataset)


# --- predictors -----------------------------------------------------------------

def make_oracle(spec: str, g: SignedGraph, reference=None, seed: int = 0) -> DistanceOracle:
    """Build the oracle named by a predictor spec for graph ``g``."""
    kind, _, arg = spec.partition(":")
    if kind == "noisy":
        if reference is None:
            raise ConfigError(f"{spec!r} needs a reference clustering")
        return noisy_oracle(reference, float(arg))
    if kind == "const":
        return ConstantOracle(float(arg))
    if kind == "table":
        return load_table_oracle(arg)
    if kind == "embed":
        return embedding_oracle(load_embedding(arg, n=g.n))
    if kind == "spectral":
        return embedding_oracle(spectral_embedding(g, int(float(arg)), seed=seed))
    raise ConfigError(f"unknown predictor {spec!r}")


# --- running one algorithm ----------------------------------------------------------

@dataclass
class RunResult:
    labels: np.ndarray
    branch: str = ""
    est_cost_1: float | None = None
    est_cost_2: float | None = None
    words_peak: int | None = None
    concession_words: int = 0


def run_algorithm(algo: str, g: SignedGraph, oracle: DistanceOracle, seed: int, *,
                  updates: list[EdgeUpdate] | None = None, epsilon: float = 0.2, c: float = 4.0,
                  k: int | None = None, neg_budget: int | None = None,
                  fallback: str = "ballgrow", replay: Callable | None = None) -> RunResult:
    """Run one algorithm. Streaming algorithms consume ``updates`` and the
    offline baselines read ``g`` directly."""
    algo = _ALIASES.get(algo, algo)
    n = g.n
    if algo == "dynamic":
        lab, rep = dynamic_cc(updates, oracle, epsilon=epsilon, c=c, seed=seed, n=n, replay=replay)
        return RunResult(lab, str(rep.chosen_branch), rep.est_cost_1, rep.est_cost_2,
                         rep.words_peak, rep.concession_words)
    if algo == "insertion":
        lab, rep = insertion_cc(updates, oracle, k=k, epsilon=epsilon, seed=seed, n=n)
        return RunResult(lab, str(rep.chosen_branch), rep.est_cost_1, rep.est_cost_2, rep.words_peak)
    if algo == "general":
        lab, rep = general_cc(updates, oracle, epsilon=epsilon, neg_budget_words=neg_budget,
                              seed=seed, fallback=fallback, n=n)
        return RunResult(lab, rep.branch, words_peak=rep.words_peak,
                         concession_words=rep.concession_words)
    perm = RandomPermutation.from_seed(n, seed)
    if algo == "pivot":
        return RunResult(classic_pivot(g, perm))
    thr = TruncationThresholds(n, epsilon, c)
    if algo == "cklpu":
        return RunResult(cklpu_pivot(g, perm, thr))
    if algo == "pairwise_diss":
        return RunResult(pairwise_diss(g, perm, oracle, thr, seed=seed))
    raise ConfigError(f"unknown algorithm {algo!r}")


def stream_for(algo: str, g: SignedGraph, mode: str, churn: float, seed: int) -> list[EdgeUpdate] | None:
    """The stream an algorithm consumes; offline baselines get ``None``."""
    algo = _ALIASES.get(algo, algo)
    if algo == "dynamic":
        return to_stream(g, mode, churn=churn, seed=seed)
    if algo == "insertion":
        return to_stream(g, "insertion_only", seed=seed, emit_negatives=True)
    if algo == "general":
        return to_stream(g.to_general() if g.complete else g, mode, churn=churn, seed=seed)
    return None


# --- reporting ---------------------------------------------------------------------------

@dataclass
class ReportRow:
    dataset: str
    algo: str
    predictor: str
    beta_measured: float | None
    trial: int
    cost: int | None
    opt_or_lowerbound: int | None
    words_peak: int | None
    runtime_ms: float | None
    branch: str
    est_cost_1: float | None = None
    est_cost_2: float | None = None
    quality_L: float | None = None
    opt_kind: str = ""
    concession_words: int = 0
    status: str = "ok"


ROW_FIELDS = tuple(f.name for f in fields(ReportRow))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(round(x, 10)) if math.isfinite(x) else str(x)
    return str(x)


def rows_to_csv(rows: Sequence[ReportRow], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in ROW_FIELDS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _opt(g: SignedGraph) -> tuple[int | None, str]:
    if g.n <= BRUTE_FORCE_LIMIT:
        return brute_force_opt(g)[0], "opt"
    if g.n <= LOWER_BOUND_LIMIT:
        return bad_triangle_lower_bound(g), "lower_bound"
    return None, ""


def _dataset(cfg: ExperimentConfig, trial: int):
    if cfg.dataset == "sbm":
        return generate_sbm(cfg.n, cfg.blocks, cfg.p, seed=derive_seed(cfg.seed, 0xD5, trial))
    g = load_edge_list(cfg.dataset)
    ref = read_labels(cfg.reference, n=g.n) if cfg.reference else None
    return g, ref


def run_experiment(cfg: ExperimentConfig) -> list[ReportRow]:
    """Run every (algorithm, predictor, trial) combination of ``cfg``.

    A failing trial becomes a row with ``status`` set to the error and the
    run continues. Rows are sorted by (algorithm, predictor, trial) in
    config order.
    """
    cfg.validate()
    rows: list[tuple[tuple[int, int, int], ReportRow]] = []
    name = cfg.dataset_name
    fixed = None if cfg.dataset == "sbm" else _dataset(cfg, 0)
    for trial in range(cfg.trials):
        g, reference = fixed if fixed is not None else _dataset(cfg, trial)
        opt, opt_kind = _opt(g)
        tseed = derive_seed(cfg.seed, 0x7A, trial)
        for pi, spec in enumerate(cfg.predictors):
            try:
                oracle = make_oracle(spec, g, reference, seed=tseed)
                L = quality_L(g, oracle)
            except Exception as exc:  # recorded, not fatal
                for ai, algo in enumerate(cfg.algorithms):
                    rows.append(((ai, pi, trial), ReportRow(
                        name, algo, spec, None, trial, None, opt, None, None, "",
                        opt_kind=opt_kind, status=f"error: {exc}")))
                continue
            if opt_kind == "opt":
                beta = (L / opt) if opt > 0 else (1.0 if L == 0 else math.inf)
            else:
                beta = L
            for ai, algo in enumerate(cfg.algorithms):
                row = ReportRow(name, algo, spec, beta, trial, None, opt, None, None, "",
                                quality_L=L, opt_kind=opt_kind)
                try:
                    updates = stream_for(algo, g, cfg.stream_mode, cfg.churn, tseed)
                    replay = ReplayOracle()
                    t0 = time.perf_counter()
                    res = run_algorithm(algo, g, oracle, tseed, updates=updates, epsilon=cfg.epsilon,
                                        c=cfg.c, k=cfg.k, neg_budget=cfg.neg_budget,
                                        fallback=cfg.fallback, replay=replay)
                    elapsed = (time.perf_counter() - t0) * 1000.0
                    scored = g if updates is None else replay_stream(
                        updates, n=g.n, complete=g.complete and algo != "general")
                    row.cost = cost(scored, res.labels)
                    row.words_peak = res.words_peak
                    row.branch = res.branch
                    row.est_cost_1, row.est_cost_2 = res.est_cost_1, res.est_cost_2
                    row.concession_words = res.concession_words
                    row.runtime_ms = round(elapsed, 3) if cfg.record_runtime else None
                except Exception as exc:  # recorded, not fatal
                    row.status = f"error: {type(exc).__name__}: {exc}"
                rows.append(((ai, pi, trial), row))
    rows.sort(key=lambda x: x[0])
    out = [r for _, r in rows]
    if cfg.out:
        rows_to_csv(out, cfg.out)
    return out


# --- summaries -------------------------------------------------------------------------

@dataclass
class SummaryRow:
    dataset: str
    algo: str
    predictor: str
    trials: int
    mean_cost: float
    sd_cost: float
    min_cost: int
    mean_words: float | None
    mean_beta: float | None
    ratio_to_baseline: float | None = None


def summarize(rows: Iterable[ReportRow], baseline: str | None = None) -> list[SummaryRow]:
    """Aggregate successful rows by (dataset, algo, predictor).

    ``ratio_to_baseline`` divides a learning algorithm's mean cost by that
    of the non-learning baseline on the same dataset and predictor
    (``baseline`` or, if omitted, the first of ``cklpu`` / ``pivot`` present).
    """
    groups: dict[tuple[str, str, str], list[ReportRow]] = {}
    for r in rows:
        if r.status == "ok" and r.cost is not None:
            groups.setdefault((r.dataset, r.algo, r.predictor), []).append(r)
    out: list[SummaryRow] = []
    for (ds, algo, pred), rs in groups.items():
        costs = [r.cost for r in rs]
        words = [r.words_peak for r in rs if r.words_peak is not None]
        betas = [r.beta_measured for r in rs if r.beta_measured is not None]
        out.append(SummaryRow(
            ds, algo, pred, len(rs), statistics.fmean(costs),
            statistics.stdev(costs) if len(costs) > 1 else 0.0, min(costs),
            statistics.fmean(words) if words else None,
            statistics.fmean(betas) if betas else None,
        ))
    base_mean = {}
    for s in out:
        if s.algo not in LEARNING:
            base_mean.setdefault((s.dataset, s.predictor), {})[s.algo] = s.mean_cost
    for s in out:
        if s.algo not in LEARNING:
            continue
        cands = base_mean.get((s.dataset, s.predictor), {})
        order = [baseline] if baseline else ["cklpu", "pivot"]
        ref = next((cands[b] for b in order if b in cands), None)
        if ref is not None:
            s.ratio_to_baseline = s.mean_cost / ref if ref > 0 else (1.0 if s.mean_cost == 0 else math.inf)
    return out


def summary_to_csv(summary: Sequence[SummaryRow], path=None) -> str:
    names = [f.name for f in fields(SummaryRow)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for s in summary:
        w.writerow([_fmt(v) for v in asdict(s).values()])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_report(path) -> list[ReportRow]:
    """Load a report CSV written by :func:`rows_to_csv`."""
    conv: dict[str, Callable] = {
        "beta_measured": float, "trial": int, "cost": int, "opt_or_lowerbound": int,
        "words_peak": int, "runtime_ms": float, "est_cost_1": float, "est_cost_2": float,
        "quality_L": float, "concession_words": int,
    }
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {k: (conv[k](v) if v != "" else None) if k in conv else v for k, v in rec.items()}
            if kw.get("concession_words") is None:
                kw["concession_words"] = 0
            out.append(ReportRow(**kw))
    return out


def space_scaling(ns: Sequence[int], p: float = 0.9, blocks: int = 4, seed: int = 0,
                  eps0: float = 0.0, **kwargs) -> list[dict]:
    """Peak ``dynamic_cc`` words on SBM graphs of increasing size.

    The replay concession is reported in its own column and is not part of
    ``words_peak``.
    """
    out = []
    for n in ns:
        g, truth = generate_sbm(n, blocks, p, seed=derive_seed(seed, n))
        updates = to_stream(g, "insertion_only", seed=derive_seed(seed, n, 1))
        _, rep = dynamic_cc(updates, noisy_oracle(truth, eps0), seed=seed, n=n, **kwargs)
        out.append({"n": n, "words_peak": rep.words_peak, "words_per_n2": rep.words_peak / n ** 2,
                    "concession_words": rep.concession_words, "edges": g.m})
    return out


__all__ = [
    "ALGOS", "ExperimentConfig", "ReplayOracle", "ReportRow", "RunResult", "SummaryRow",
    "make_oracle", "read_report", "replay_oracle", "rows_to_csv", "run_algorithm",
    "run_experiment", "space_scaling", "stream_for", "summarize", "summary_to_csv",
]
