"""Seeded experiment sweeps: network -> cascades -> sampler -> estimate -> bias."""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import yaml

from .cascade import DiffusionParams, generate_cascade_set
from .estimation import hansen_hurwitz, plain_mean
from .graph import Graph, load_edge_list
from .metrics import attendance_values, bias, eta_true
from .netgen import (
    KRONECKER_INITIATORS,
    ForestFireParams,
    KroneckerParams,
    gen_forest_fire,
    gen_kronecker,
)
from .sampling import SamplerConfig, bfs_sample, dns_sample, rw_sample, LocalView

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "load_config",
    "build_network",
    "derive_seed",
    "run_experiment",
    "write_rows",
    "read_rows",
    "aggregate",
    "write_summary",
    "SAMPLER_NAMES",
]

SAMPLER_NAMES = ("dns", "dns-woe", "bfs", "rw")
AXES = ("mu", "alpha", "delta")

# stable integer tags folded into every derived seed
_STREAM = {"network": 0, "cascades": 1, "dns": 2, "dns-woe": 2, "bfs": 3, "rw": 4}


class ConfigError(ValueError):
    pass


def _grid(lo, hi, step):
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 10) for i in range(count)]


DEFAULT_GRIDS = {
    "mu": _grid(0.1, 0.9, 0.1),
    "alpha": _grid(0.1, 3.0, 0.1),
    "delta": _grid(0.1, 0.9, 0.1),
}


@dataclass
class ExperimentConfig:
    """Declarative sweep.

    ``network`` is a mapping with ``generator`` in ``kronecker``,
    ``forest-fire`` or ``edge-list`` plus that generator's parameters.
    ``diffusion`` holds the cascade generation ``alpha``, ``beta`` and
    ``delta``, and optionally ``seeds``, a list of node labels that fixes
    the cascade seeds in turn. ``sampler_alpha`` is the decay scale DNS uses. Values of the
    two axes not being swept come from ``mu``, ``sampler_alpha`` and
    ``diffusion['delta']``.
    """

    network: dict
    diffusion: dict
    samplers: List[str] = field(default_factory=lambda: list(SAMPLER_NAMES))
    sampler_alpha: float = 0.4
    axis: str = "mu"
    grid: Optional[List[float]] = None
    mu: float = 0.5
    replications: int = 20
    seed: int = 0
    threads: int = 1
    name: Optional[str] = None
    teleport_policy: str = "restart-random-node"
    stall_limit: int = 100
    timing: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"sweep axis must be one of {AXES}")
        if self.grid is None:
            self.grid = list(DEFAULT_GRIDS[self.axis])
        self.grid = [float(x) for x in self.grid]
        if not self.grid:
            raise ConfigError("sweep grid must not be empty")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        unknown = set(self.samplers) - set(SAMPLER_NAMES)
        if unknown or not self.samplers:
            raise ConfigError(f"unknown samplers {sorted(unknown)}; choose from {SAMPLER_NAMES}")
        gen = self.network.get("generator")
        if gen not in ("kronecker", "forest-fire", "edge-list"):
            raise ConfigError("network.generator must be kronecker, forest-fire or edge-list")
        if gen == "edge-list" and not Path(self.network.get("path", "")).is_file():
            raise ConfigError(f"edge list {self.network.get('path')!r} does not exist")
        for key in ("alpha", "beta"):
            if key not in self.diffusion:
                raise ConfigError(f"diffusion.{key} is required")
        self.diffusion.setdefault("delta", 0.5)
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

    @property
    def network_name(self) -> str:
        if self.name:
            return self.name
        net = self.network
        if net["generator"] == "kronecker":
            init = net.get("initiator", "random")
            return f"kronecker-{init}" if isinstance(init, str) else "kronecker"
        if net["generator"] == "edge-list":
            return Path(net["path"]).stem
        return net["generator"]

    def point(self, value: float) -> Dict[str, float]:
        """``mu``, ``alpha`` and ``delta`` at one grid value."""
        p = {"mu": self.mu, "alpha": self.sampler_alpha, "delta": float(self.diffusion["delta"])}
        p[self.axis] = value
        return p


def load_config(path: Union[str, Path], **overrides) -> ExperimentConfig:
    """Read a YAML (or JSON) config; ``DIFFSAMPLE_SEED`` / ``DIFFSAMPLE_THREADS`` override it."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    sweep = raw.pop("sweep", None)
    if sweep:
        raw.setdefault("axis", sweep.get("axis", "mu"))
        if "grid" in sweep:
            raw.setdefault("grid", sweep["grid"])
    sampler = raw.pop("sampler", None)
    if sampler:
        for key in ("teleport_policy", "stall_limit"):
            if key in sampler:
                raw.setdefault(key, sampler[key])
        if "alpha" in sampler:
            raw.setdefault("sampler_alpha", sampler["alpha"])
    net = raw.get("network", {})
    if net.get("generator") == "edge-list" and "path" in net:
        p = Path(net["path"])
        if not p.is_absolute():
            net["path"] = str((path.parent / p).resolve())
    env_seed = os.environ.get("DIFFSAMPLE_SEED")
    env_threads = os.environ.get("DIFFSAMPLE_THREADS")
    if env_seed:
        raw["seed"] = int(env_seed)
    if env_threads:
        raw["threads"] = int(env_threads)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def derive_seed(master: int, *key: int) -> np.random.Generator:
    """Independent generator for one (network, stream, grid, replication) cell."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def build_network(spec: dict, rng: np.random.Generator) -> Graph:
    gen = spec["generator"]
    if gen == "kronecker":
        init = spec.get("initiator", "random")
        if isinstance(init, str):
            try:
                init = KRONECKER_INITIATORS[init]
            except KeyError:
                raise ConfigError(f"unknown initiator {init!r}") from None
        params = KroneckerParams(init, int(spec["iterations"]), int(spec["edges"]))
        return gen_kronecker(params, rng)
    if gen == "forest-fire":
        keys = ("n", "starting_nodes", "p_fwd", "p_bwd", "p_decay", "p_orphan")
        return gen_forest_fire(ForestFireParams(**{k: spec[k] for k in keys if k in spec}), rng)
    if gen == "edge-list":
        return load_edge_list(spec["path"], directed=bool(spec.get("directed", False)))
    raise ConfigError(f"unknown generator {gen!r}")


@dataclass
class ResultRow:
    network: str
    sampler: str
    mu: float
    alpha: float
    delta: float
    replication: int
    eta_true: Optional[float]
    estimate: Optional[float]
    bias: Optional[float]
    n_draws: int
    wallclock: Optional[float]
    error: str = ""


def _diffusion_params(cfg: ExperimentConfig, delta: float) -> DiffusionParams:
    d = cfg.diffusion
    return DiffusionParams(
        alpha=float(d["alpha"]),
        beta=float(d["beta"]),
        delta_target=float(delta),
        horizon=d.get("horizon"),
        max_cascades=int(d.get("max_cascades", 100_000)),
    )


def _seed_nodes(g: Graph, spec) -> Optional[List[int]]:
    """Fixed cascade seeds given as node labels (strings) or ids; None means random."""
    if not spec:
        return None
    index = g.label_index()
    out = []
    for s in spec:
        if isinstance(s, str):
            if s not in index:
                raise ConfigError(f"unknown seed node {s!r}")
            out.append(index[s])
        elif 0 <= int(s) < g.n:
            out.append(int(s))
        else:
            raise ConfigError(f"seed node {s} out of range")
    return out


def _run_replication(cfg: ExperimentConfig, rep: int, net_idx: int = 0) -> List[ResultRow]:
    rows: List[ResultRow] = []
    name = cfg.network_name
    g = build_network(cfg.network, derive_seed(cfg.seed, net_idx, _STREAM["network"], 0, rep))

    seed_nodes = _seed_nodes(g, cfg.diffusion.get("seeds"))
    diffusion_cache: dict = {}

    def diffusion_for(gi, delta):
        # cascades are shared across the grid unless the grid sweeps delta
        key = gi if cfg.axis == "delta" else -1
        if key not in diffusion_cache:
            rng = derive_seed(cfg.seed, net_idx, _STREAM["cascades"], max(key, 0), rep)
            cs, dn = generate_cascade_set(g, _diffusion_params(cfg, delta), rng, seeds=seed_nodes)
            diffusion_cache[key] = (LocalView.from_cascades(g, cs), dn, eta_true(dn, "link-attendance"))
        return diffusion_cache[key]

    for gi, value in enumerate(cfg.grid):
        pt = cfg.point(value)
        dns_trace = None
        for sampler in cfg.samplers:
            t0 = time.perf_counter()
            row = ResultRow(name, sampler, pt["mu"], pt["alpha"], pt["delta"], rep, None, None, None, 0, None)
            try:
                view, dn, truth = diffusion_for(gi, pt["delta"])
                scfg = SamplerConfig.from_rate(
                    pt["mu"],
                    g.m,
                    alpha=pt["alpha"],
                    teleport_policy=cfg.teleport_policy,
                    stall_limit=cfg.stall_limit,
                )
                rng = derive_seed(cfg.seed, net_idx, _STREAM[sampler], gi, rep)
                if sampler in ("dns", "dns-woe"):
                    # both estimators read the same walk
                    if dns_trace is None:
                        dns_trace = dns_sample(view, scfg, rng)
                    trace = dns_trace
                elif sampler == "bfs":
                    trace = bfs_sample(view, scfg, rng)
                else:
                    trace = rw_sample(view, scfg, rng)
                values = attendance_values(dn, trace.draw_edges)
                if sampler == "dns":
                    est = hansen_hurwitz(values, trace.draw_pis)
                else:
                    est = plain_mean(values)
                row.eta_true = truth.eta_true
                row.estimate = est.estimate
                row.bias = bias(truth, est)
                row.n_draws = est.n_draws
            except Exception as exc:  # recorded on the row, never dropped
                row.error = f"{type(exc).__name__}: {exc}"
                log.warning("%s rep %d %s=%g failed: %s", sampler, rep, cfg.axis, value, exc)
            if cfg.timing:
                row.wallclock = time.perf_counter() - t0
            rows.append(row)
    return rows


def _sort_key(cfg: ExperimentConfig):
    order = {s: i for i, s in enumerate(cfg.samplers)}
    return lambda r: (r.network, order[r.sampler], getattr(r, cfg.axis), r.replication)


def run_experiment(cfg: ExperimentConfig) -> List[ResultRow]:
    """All grid points x samplers x replications, sorted deterministically."""
    reps = range(cfg.replications)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            chunks = list(pool.map(_run_replication, [cfg] * len(reps), reps))
    else:
        chunks = [_run_replication(cfg, r) for r in reps]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=_sort_key(cfg))
    return rows


ROW_FIELDS = [f.name for f in fields(ResultRow)]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in ROW_FIELDS])
    return buf.getvalue()


def write_rows(rows: Sequence[ResultRow], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))


def read_rows(path: Union[str, Path]) -> List[ResultRow]:
    def num(s, cast=float):
        return None if s == "" else cast(s)

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                ResultRow(
                    network=rec["network"],
                    sampler=rec["sampler"],
                    mu=float(rec["mu"]),
                    alpha=float(rec["alpha"]),
                    delta=float(rec["delta"]),
                    replication=int(rec["replication"]),
                    eta_true=num(rec["eta_true"]),
                    estimate=num(rec["estimate"]),
                    bias=num(rec["bias"]),
                    n_draws=int(rec["n_draws"]),
                    wallclock=num(rec["wallclock"]),
                    error=rec.get("error", ""),
                )
            )
    return out


@dataclass
class SummaryRow:
    kind: str
    network: str
    sampler: str
    axis: str
    value: Optional[float]
    mean_bias: float
    std_bias: float
    n: int


def _detect_axis(rows):
    for axis in AXES:
        if len({getattr(r, axis) for r in rows}) > 1:
            return axis
    return "mu"


def aggregate(rows: Sequence[ResultRow], reference: str = "dns") -> List[SummaryRow]:
    """Mean and std of bias per (network, sampler, grid value), then per network
    the grid-averaged difference ``baseline - reference`` for every other sampler.

    Failed rows are skipped.
    """
    ok = [r for r in rows if not r.error and r.bias is not None]
    if len({r.sampler for r in ok}) < 2:
        raise ValueError("aggregation needs at least two samplers")
    axis = _detect_axis(ok)
    out: List[SummaryRow] = []
    for net in sorted({r.network for r in ok}):
        net_rows = [r for r in ok if r.network == net]
        samplers = list(dict.fromkeys(r.sampler for r in net_rows))
        grids = {s: sorted({getattr(r, axis) for r in net_rows if r.sampler == s}) for s in samplers}
        first = grids[samplers[0]]
        if any(g != first for g in grids.values()):
            raise ValueError(f"samplers of network {net!r} were run on different grids")
        cell: Dict[tuple, float] = {}
        for s in samplers:
            for v in first:
                b = np.array([r.bias for r in net_rows if r.sampler == s and getattr(r, axis) == v])
                mean = float(b.mean())
                std = float(b.std(ddof=1)) if b.size > 1 else 0.0
                cell[(s, v)] = mean
                out.append(SummaryRow("cell", net, s, axis, v, mean, std, int(b.size)))
        if reference in samplers:
            for s in samplers:
                if s == reference:
                    continue
                diffs = np.array([cell[(s, v)] - cell[(reference, v)] for v in first])
                std = float(diffs.std(ddof=1)) if diffs.size > 1 else 0.0
                out.append(SummaryRow("difference", net, s, axis, None, float(diffs.mean()), std, len(first)))
    return out


def write_summary(summary: Sequence[SummaryRow], path: Union[str, Path]) -> None:
    names = [f.name for f in fields(SummaryRow)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(names)
        for s in summary:
            w.writerow([_fmt(getattr(s, k)) for k in names])
