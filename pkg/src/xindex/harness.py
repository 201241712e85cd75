"""Configuration ingestion, seeded sweeps, and structured reporting.

One `ExperimentConfig` describes one run: a command, an algebra, a
seed, trial and tolerance settings, and an output path.  `run` turns it
into a list of verification reports; `execute` additionally writes the
newline-delimited report file, renders figures next to it, and prints
a summary per command.

Determinism contract: every trial draws its operators from a generator
derived from (seed, trial key) alone, so a config with the same seed
always produces identical report payloads (timing aside), serial or
parallel.  `XI_INDEX_THREADS` caps sweep parallelism.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .algebra import (
    AlgebraDescriptor,
    Operator,
    eigenvalues_self_adjoint,
    is_self_adjoint,
    norm,
)
from .bschwinger import BSInstance, BSLimitMode, bs_limit, verify_bs
from .dets import det_tau_dissipative, det_tau_via_path, polar_identity_check
from .ensembles import (
    DEFAULT_FLOOR,
    RESAMPLE_COND,
    Ensemble,
    complex_gaussian,
    generate,
    hermitian_gapped,
    trial_rng,
)
from .errors import DomainError, ToolkitError
from .figures import eps_history_plot, residual_scatter, ssf_staircase
from .matio import load_operator
from .reports import VerificationReport, check_report, linked_report, write_ndjson
from .scattering import BKInstance, birman_krein
from .xi import (
    KERNEL_SCALE,
    EpsSchedule,
    XiStrategy,
    XiTag,
    ssf_curve,
    xi_operator,
    xi_trace,
)

COMMANDS = ("xi", "det", "bs-verify", "bs-limit", "bk-verify", "ssf", "sweep")

_DEFAULT_TOL = {
    "xi": 1e-4,  # operator-level epsilon iterates are first order in eps
    "det": 1e-8,
    "bs-verify": 1e-8,
    "bs-limit": 1e-6,
    "bk-verify": 1e-7,
    "ssf": 1e-12,
}


class ConfigError(ToolkitError):
    """Unusable configuration; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    seed: int
    algebra: str | None = None
    dim: int = 4
    trials: int = 20
    tol: float | None = None
    eps_start: float | None = None
    eps_factor: float | None = None
    eps_steps: int | None = None
    ensemble: str = "dissipative"
    out: str | None = None
    matrix: str | None = None
    matrix2: str | None = None
    floor: float = DEFAULT_FLOOR
    figures: bool = True

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(
                f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}"
            )
        if self.seed is None:
            raise ConfigError("a seed is required; runs must be reproducible")
        object.__setattr__(self, "seed", int(self.seed))
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        object.__setattr__(self, "trials", int(self.trials))
        eps_given = [
            v for v in (self.eps_start, self.eps_factor, self.eps_steps) if v is not None
        ]
        if eps_given and len(eps_given) != 3:
            raise ConfigError(
                "eps_start, eps_factor and eps_steps must be given together"
            )
        try:
            self.ensemble_enum()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def descriptor(self) -> AlgebraDescriptor:
        if self.algebra:
            return AlgebraDescriptor.parse(self.algebra)
        return AlgebraDescriptor.factor(self.dim)

    def schedule(self) -> EpsSchedule:
        if self.eps_start is None:
            return EpsSchedule.default()
        return EpsSchedule.geometric(
            float(self.eps_start), float(self.eps_factor), int(self.eps_steps)
        )

    def ensemble_enum(self) -> Ensemble:
        token = self.ensemble.strip().lower().replace("-", "_")
        for ens in Ensemble:
            if ens.value == token or ens.name.lower() == token:
                return ens
        raise ValueError(
            f"unknown ensemble {self.ensemble!r}; choose from "
            f"{', '.join(e.value for e in Ensemble)}"
        )

    def tolerance(self, command: str) -> float:
        return float(self.tol) if self.tol is not None else _DEFAULT_TOL[command]


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def config_from_sources(
    config_path: str | None = None, overrides: dict | None = None
) -> ExperimentConfig:
    """Config file first, explicit overrides (CLI flags) second."""
    data: dict = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {config_path} must hold a JSON object")
        data.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "command" not in data:
        raise ConfigError("no command given (use --command or the config file)")
    if "seed" not in data:
        raise ConfigError("no seed given; runs must be reproducible")
    try:
        return ExperimentConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration: {exc}") from exc


# -- single-trial bodies -------------------------------------------------


def _stamp(
    reports: list[VerificationReport],
    config: ExperimentConfig,
    command: str,
    trial: int,
    elapsed: float,
) -> list[VerificationReport]:
    for rep in reports:
        rep.inputs.setdefault("seed", config.seed)
        rep.inputs.setdefault("trial", trial)
        rep.inputs.setdefault("command", command)
        rep.inputs.setdefault("algebra", config.descriptor().spec_string())
        rep.elapsed_s = elapsed / max(1, len(reports))
    return reports


def _draw_dissipative(config: ExperimentConfig, rng) -> Operator:
    return generate(
        Ensemble.DISSIPATIVE,
        config.descriptor(),
        rng,
        floor=config.floor,
        cond_limit=RESAMPLE_COND,
    )


def _file_inputs(op: Operator, path: str) -> dict:
    # the stamp fills `algebra` from the config descriptor, which a
    # loaded file overrides
    return {"algebra": op.algebra.spec_string(), "matrix": path}


def _trial_xi(config: ExperimentConfig, rng) -> list[VerificationReport]:
    inputs = None
    if config.matrix:
        op = load_operator(config.matrix)
        inputs = _file_inputs(op, config.matrix)
    else:
        op = generate(
            config.ensemble_enum(),
            config.descriptor(),
            rng,
            floor=config.floor,
            cond_limit=RESAMPLE_COND,
        )
    sched = config.schedule()
    direct = xi_operator(op)
    via_eps = xi_operator(op, XiStrategy(XiTag.EPS_LIMIT, sched))
    t_direct = xi_trace(op)
    t_eps = xi_trace(op, XiStrategy(XiTag.EPS_LIMIT, sched))
    rep = linked_report(
        "xi-strategy-agreement",
        "Xi by the direct strategy == Xi by the epsilon limit",
        [
            ("operator-norm", norm(direct - via_eps), 0.0),
            ("trace", t_direct, t_eps),
        ],
        config.tolerance("xi"),
        inputs=inputs,
        details={
            "direct_strategy": "spectral" if is_self_adjoint(op) else "log",
            "eps": list(sched.values),
        },
    )
    return [rep]


def _trial_det(config: ExperimentConfig, rng) -> list[VerificationReport]:
    inputs = None
    if config.matrix:
        op = load_operator(config.matrix)
        inputs = _file_inputs(op, config.matrix)
    else:
        op = _draw_dissipative(config, rng)
    tol = config.tolerance("det")
    rep_polar = polar_identity_check(op, tol=tol, inputs=inputs)
    pd = det_tau_via_path(op)
    closed = det_tau_dissipative(op)
    rep_path = check_report(
        "det-path-vs-closed",
        "path determinant of M == exp(tau[log M])",
        pd.value,
        closed,
        tol,
        inputs=inputs,
        details={
            "winding": pd.winding,
            "flags": sorted(pd.flags),
            "nodes": pd.nodes,
        },
    )
    return [rep_polar, rep_path]


def _draw_bs_instance(config: ExperimentConfig, rng) -> BSInstance:
    m = _draw_dissipative(config, rng)
    n = _draw_dissipative(config, rng)
    k = complex_gaussian(config.descriptor(), rng)
    return BSInstance(m, n, k)


def _trial_bs_verify(config: ExperimentConfig, rng) -> list[VerificationReport]:
    inst = _draw_bs_instance(config, rng)
    return [verify_bs(inst, tol=config.tolerance("bs-verify"))]


def _trial_bs_limit(config: ExperimentConfig, rng) -> list[VerificationReport]:
    inst = _draw_bs_instance(config, rng)
    sched = config.schedule()
    tol = config.tolerance("bs-limit")
    return [bs_limit(inst, sched, mode, tol=tol) for mode in BSLimitMode]


def _trial_bk(config: ExperimentConfig, rng) -> list[VerificationReport]:
    alg = config.descriptor()
    tol = config.tolerance("bk-verify")
    for _ in range(8):
        h0 = hermitian_gapped(alg, rng)
        n = hermitian_gapped(alg, rng)
        k = 0.35 * complex_gaussian(alg, rng)
        try:
            return [birman_krein(BKInstance(h0, k, n), config.schedule(), tol=tol)]
        except DomainError:
            continue  # a derived operator hit the invertibility gate; redraw
    raise DomainError("could not draw an admissible determinant-chain instance")


def _weighted_count_below(op: Operator, lam: float) -> float:
    """Independent counting oracle: weighted number of eigenvalues
    below ``lam``, crossings at ``lam`` counted one half."""
    vals_all = eigenvalues_self_adjoint(op)
    scale = float(np.max(np.abs(vals_all))) if len(vals_all) else 1.0
    ktol = KERNEL_SCALE * max(1.0, scale)
    total = 0.0
    for weight, block in zip(op.algebra.weights, op.blocks):
        vals = np.linalg.eigvalsh((block + block.conj().T) / 2)
        total += weight * (
            float(np.sum(vals < lam - ktol)) + 0.5 * float(np.sum(np.abs(vals - lam) <= ktol))
        )
    return total


def _trial_ssf(config: ExperimentConfig, rng) -> list[VerificationReport]:
    inputs = None
    if config.matrix and config.matrix2:
        h = load_operator(config.matrix)
        h0 = load_operator(config.matrix2)
        inputs = _file_inputs(h, config.matrix)
        inputs["matrix2"] = config.matrix2
    elif config.matrix or config.matrix2:
        raise ConfigError("ssf on files needs both --matrix (H) and --matrix2 (H0)")
    else:
        alg = config.descriptor()
        h0 = generate(Ensemble.HERMITIAN_GAUSSIAN, alg, rng)
        h = h0 + 0.5 * generate(Ensemble.HERMITIAN_GAUSSIAN, alg, rng)
    vals = np.concatenate(
        [eigenvalues_self_adjoint(h), eigenvalues_self_adjoint(h0)]
    )
    lams = np.linspace(float(vals.min()) - 0.2, float(vals.max()) + 0.2, 41)
    curve = ssf_curve(h, h0, lams)
    oracle = [
        _weighted_count_below(h0, lam) - _weighted_count_below(h, lam)
        for lam, _ in curve
    ]
    residual = max(
        abs(val - ref) for (_, val), ref in zip(curve, oracle)
    )
    rep = check_report(
        "ssf-counting",
        "xi(H - lam, H0 - lam) == weighted counting difference at lam",
        residual,
        0.0,
        config.tolerance("ssf"),
        inputs=inputs,
        details={
            "lams": [lam for lam, _ in curve],
            "values": [val for _, val in curve],
            "counting": oracle,
        },
    )
    return [rep]


# -- command drivers -----------------------------------------------------


def _multi(config: ExperimentConfig, name: str, body) -> list[VerificationReport]:
    trials = 1 if config.matrix else config.trials
    out: list[VerificationReport] = []
    for i in range(trials):
        t0 = time.perf_counter()
        reps = body(config, trial_rng(config.seed, i))
        out.extend(_stamp(reps, config, name, i, time.perf_counter() - t0))
    return out


_SWEEP_PARTS: list[tuple[str, object]] = [
    ("xi", _trial_xi),
    ("det", _trial_det),
    ("bs-verify", _trial_bs_verify),
    ("bs-limit", _trial_bs_limit),
    ("bk-verify", _trial_bk),
]


def _worker_count(tasks: int) -> int:
    cap = os.environ.get("XI_INDEX_THREADS")
    workers = os.cpu_count() or 1
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"XI_INDEX_THREADS must be an integer, got {cap!r}")
    return max(1, min(workers, tasks))


def _cmd_sweep(config: ExperimentConfig) -> list[VerificationReport]:
    """Every ensemble command, trials times each, optionally parallel.

    Trial keys are disjoint across commands; report order is by
    (command, trial) no matter how many workers run.
    """
    tasks = []
    for part_index, (name, body) in enumerate(_SWEEP_PARTS):
        for i in range(config.trials):
            tasks.append((name, body, 1_000_000 * (part_index + 1) + i, i))

    def run_task(task):
        name, body, key, trial = task
        t0 = time.perf_counter()
        reps = body(config, trial_rng(config.seed, key))
        return _stamp(reps, config, name, trial, time.perf_counter() - t0)

    workers = _worker_count(len(tasks))
    if workers <= 1:
        batches = [run_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(run_task, tasks))
    return [rep for batch in batches for rep in batch]


def run(config: ExperimentConfig) -> list[VerificationReport]:
    """Dispatch a config to its command and collect the reports."""
    if config.command == "sweep":
        return _cmd_sweep(config)
    if config.command == "ssf":
        return _multi(config, "ssf", _trial_ssf)
    if config.command == "xi":
        return _multi(config, "xi", _trial_xi)
    if config.command == "det":
        return _multi(config, "det", _trial_det)
    if config.command == "bs-verify":
        return _multi(config, "bs-verify", _trial_bs_verify)
    if config.command == "bs-limit":
        return _multi(config, "bs-limit", _trial_bs_limit)
    if config.command == "bk-verify":
        if config.matrix:
            raise ConfigError("bk-verify draws its instances; --matrix is not supported")
        return _multi(config, "bk-verify", _trial_bk)
    raise ConfigError(f"unknown command {config.command!r}")  # pragma: no cover


def _render_figures(config: ExperimentConfig, reports: list[VerificationReport]) -> list[str]:
    if not (config.out and config.figures and reports):
        return []
    base, _ext = os.path.splitext(config.out)
    rows = [rep.to_json_dict() for rep in reports]
    written = [
        residual_scatter(rows, f"{base}.residuals.png", f"{config.command}: residuals")
    ]
    if any((r.get("details") or {}).get("eps") for r in rows):
        written.append(
            eps_history_plot(rows, f"{base}.eps.png", f"{config.command}: epsilon histories")
        )
    ssf_rows = [r for r in rows if (r.get("details") or {}).get("lams")]
    if ssf_rows:
        d = ssf_rows[0]["details"]
        written.append(
            ssf_staircase(d["lams"], d["values"], f"{base}.ssf.png", "spectral shift curve")
        )
    return written


def summarize(reports: list[VerificationReport]) -> list[str]:
    """One line per command name: pass counts, worst residual, time."""
    groups: dict[str, list[VerificationReport]] = {}
    for rep in reports:
        groups.setdefault(str(rep.inputs.get("command", rep.name)), []).append(rep)
    lines = []
    for name, reps in groups.items():
        passed = sum(1 for r in reps if r.passed)
        worst = max((r.residual for r in reps), default=0.0)
        took = sum(r.elapsed_s for r in reps)
        lines.append(
            f"{name}: {passed}/{len(reps)} passed, max residual {worst:.3g}, {took:.2f}s"
        )
    return lines


def execute(config: ExperimentConfig) -> tuple[list[VerificationReport], int]:
    """Run, persist, summarize.  Returns (reports, exit code)."""
    reports = run(config)
    if config.out:
        count = write_ndjson(reports, config.out)
        print(f"wrote {count} reports to {config.out}")
        for fig in _render_figures(config, reports):
            print(f"wrote figure {fig}")
    for line in summarize(reports):
        print(line)
    failed = [r for r in reports if not r.passed]
    return reports, (1 if failed else 0)
