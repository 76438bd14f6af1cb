"""Suite configuration, job registry, and report emission.

A suite is a JSON document ``{"jobs": [...], "out": ..., "format": ...}``.
Validation is strict: unknown keys anywhere are fatal, so a misspelled
tolerance cannot be silently ignored.  Reports come back in declaration
order and serialize with hexadecimal floats, making repeated runs
bit-identical for fixed seeds.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dfield

import numpy as np

from .constructors import field_from_spec, relativistic_det_sweep
from .domain import Ball, GridSpec
from .errors import ConfigError, UnknownKeyError, UnknownOperationError
from .field import domain_from_json
from .inequalities import (
    compact_support_mean,
    gagliardo_check,
    isoperimetric_check,
    lambda_concavity_probe,
    vanishing_trace_check,
    verify_convex,
    verify_periodic,
)
from .report import CheckReport, reports_to_csv, reports_to_json
from .symmat import SymMat

__all__ = ["JobSpec", "SuiteConfig", "parse_config", "run_suite", "emit_report", "OPERATION_GROUPS"]


# -- job runners ---------------------------------------------------------------


def _symmat_param(doc, d=None) -> SymMat:
    if isinstance(doc, dict) and "diag" in doc:
        return SymMat.from_diag(doc["diag"])
    if doc == "identity":
        return SymMat.identity(d)
    return SymMat.from_matrix(np.array(doc, dtype=float))


def _run_verify_periodic(params: dict, seed: int) -> CheckReport:
    field = field_from_spec(params["field"])
    return verify_periodic(field, tol=params.get("tol"))


def _run_verify_convex(params: dict, seed: int) -> CheckReport:
    field = field_from_spec(params["field"])
    return verify_convex(
        field,
        include_measure=bool(params.get("include_measure", False)),
        tol=params.get("tol"),
    )


def _run_gagliardo(params: dict, seed: int) -> CheckReport:
    from .constructors import TrigScalar

    entries = params["entries"]
    d = len(entries)
    gs = [
        e if isinstance(e, (int, float)) else TrigScalar.from_json(e, d - 1)
        for e in entries
    ]
    grid = GridSpec(tuple(params["grid"])) if "grid" in params else None
    return gagliardo_check(gs, grid=grid, tol=params.get("tol"))


def _run_lambda_probe(params: dict, seed: int) -> CheckReport:
    d = int(params["d"])
    a = _symmat_param(params.get("a", "identity"), d)
    if "b" in params:
        b = _symmat_param(params["b"], d)
    else:
        b = SymMat.from_diag([1.0] * (d - 1) + [0.0])
    alpha = params.get("alpha")
    if alpha is None:
        alpha = 1.0 / (d - 1) + float(params.get("alpha_offset", 0.0))
    probe = lambda_concavity_probe(d, a, b, float(alpha), int(params.get("samples", 101)))
    expect = params.get("expect", "concave")
    ok = probe.concave if expect == "concave" else not probe.concave
    excess = 0.0 if probe.witness is None else probe.witness[3]
    return CheckReport.from_sides(
        "lambda_probe",
        0.0 if ok else 1.0,
        0.0,
        0.0,
        f"samples={probe.samples}",
        notes=f"alpha={alpha:.6g}, expected {expect}, "
        + ("concave" if probe.concave else f"witness {probe.witness}"),
        chord_excess=excess,
    )


def _run_compact_support_mean(params: dict, seed: int) -> CheckReport:
    field = field_from_spec(params["field"])
    abar = _symmat_param(params["abar"], field.dim)
    return compact_support_mean(
        field, abar,
        margin=int(params.get("margin", 2)),
        mean_tol=float(params.get("mean_tol", 1e-8)),
    )


def _run_vanishing_trace(params: dict, seed: int) -> CheckReport:
    field = field_from_spec(params["field"])
    return vanishing_trace_check(field, eps=float(params.get("eps", 1e-6)))


def _run_isoperimetric(params: dict, seed: int) -> CheckReport:
    return isoperimetric_check(domain_from_json(params["shape"]))


def _run_nondiv_bound(params: dict, seed: int) -> CheckReport:
    from .transport import nondiv_bound

    field = field_from_spec(params["field"])
    return nondiv_bound(field, tol=params.get("tol"))


def _run_proof_trace(params: dict, seed: int) -> CheckReport:
    from .transport import proof_trace_periodic

    field = field_from_spec(params["field"])
    trace = proof_trace_periodic(field)
    gap_report = verify_periodic(field)
    mean_slack = float(trace.slack.values.mean())
    min_slack = float(trace.slack.values.min())
    lhs = abs(mean_slack - gap_report.slack)
    rhs = 2.0 * gap_report.tolerance
    report = CheckReport.from_sides(
        "proof_trace",
        lhs,
        rhs,
        0.0,
        field.grid.shape,
        notes=f"min pointwise slack {min_slack:.3e}; divergence residual "
        f"{trace.div_residual:.3e}",
        mean_slack=mean_slack,
        min_slack=min_slack,
        periodic_gap=float(gap_report.slack),
    )
    if min_slack < -1e-10:
        report = CheckReport(
            report.name, report.lhs, report.rhs, report.slack, report.resolution,
            report.tolerance, False, report.notes + "; pointwise slack negative",
            report.extra,
        )
    return report


def _run_ma_manufactured(params: dict, seed: int) -> CheckReport:
    from . import spectral
    from .domain import Torus
    from .field import ScalarField
    from .symmat import det_packed
    from .transport import solve_periodic_ma

    n = int(params.get("grid", 64))
    amp = float(params.get("amplitude", 0.02))
    grid = GridSpec((n, n))
    fracs = np.meshgrid(*grid.fractions(), indexing="ij")
    psi = amp * np.cos(2 * np.pi * fracs[0]) * np.cos(2 * np.pi * fracs[1])
    h = spectral.hessian(psi)
    hess = np.stack([1 + h[..., 0], h[..., 1], 1 + h[..., 2]], axis=-1)
    f = det_packed(hess, 2)
    sol = solve_periodic_ma(ScalarField(Torus.unit(2), grid, f), SymMat.identity(2))
    err = float(np.abs(sol.phi.values - (psi - psi.mean())).max())
    return CheckReport.from_sides(
        "ma_manufactured",
        err,
        float(params.get("target", 1e-8)),
        0.0,
        grid.shape,
        notes=f"{sol.newton_iters} Newton iterations, residual {sol.residual:.3e}",
        newton_iters=float(sol.newton_iters),
    )


def _bump_state(params: dict):
    from .fluid import EOS, gaussian_bump_state

    eos = EOS(
        kind=params.get("eos", "polytropic"),
        gamma=float(params.get("gamma", 1.4)),
        a=float(params.get("a", 1.0)),
    )
    return gaussian_bump_state(
        ncells=int(params.get("ncells", 800)),
        half_width=float(params.get("half_width", 2.0)),
        background=float(params.get("background", 0.1)),
        amplitude=float(params.get("amplitude", 1.0)),
        sigma=float(params.get("sigma", 0.15)),
        velocity=float(params.get("velocity", 0.0)),
        eos=eos,
    )


def _run_euler_bound(params: dict, seed: int) -> CheckReport:
    from .fluid import euler_bound_check, euler_run_1d, flow_invariants

    init = _bump_state(params)
    traj = euler_run_1d(init, float(params.get("t_end", 0.5)), float(params.get("cfl", 0.45)))
    return euler_bound_check(traj, flow_invariants(init))


def _run_absfl_bound(params: dict, seed: int) -> CheckReport:
    from .fluid import absfl_bound_check, euler_run_1d

    init = _bump_state(params)
    traj = euler_run_1d(init, float(params.get("t_end", 0.5)), float(params.get("cfl", 0.45)))
    return absfl_bound_check(traj)


def _run_selfsimilar_bound(params: dict, seed: int) -> CheckReport:
    from .fluid import selfsimilar_bound_check

    rho0 = float(params.get("rho", 1.0))
    p0 = float(params.get("p", 1.0))
    radius = float(params.get("radius", 1.0))
    mode = params.get("velocity", "inward")

    def vel(pts):
        if mode == "inward":
            return -pts
        return np.zeros_like(pts)

    return selfsimilar_bound_check(
        lambda pts: np.full(pts.shape[0], rho0),
        vel,
        lambda pts: np.full(pts.shape[0], p0),
        Ball(np.zeros(2), radius),
    )


def _run_relativistic_bound(params: dict, seed: int) -> CheckReport:
    from .fluid import relativistic_bound_check

    ncells = int(params.get("ncells", 200))
    nsteps = int(params.get("nsteps", 40))
    t_end = float(params.get("t_end", 0.25))
    rho0 = float(params.get("rho", 1.0))
    width = float(params.get("width", 1.0))
    dy = 2.0 * width / ncells
    y = -width + (np.arange(ncells) + 0.5) * dy
    profile = rho0 * (np.abs(y) <= 0.5 * width)
    times = np.linspace(0.0, t_end, nsteps + 1)
    rho = np.tile(profile, (nsteps, 1))
    v = np.zeros_like(rho)
    return relativistic_bound_check(
        times, dy, rho, v, c=float(params.get("c", 1.0)), a=float(params.get("a", 1.0))
    )


def _run_relativistic_det(params: dict, seed: int) -> CheckReport:
    count = int(params.get("count", 10_000))
    dims = params.get("n", [1, 2, 3])
    if isinstance(dims, int):
        dims = [dims]
    worst = 0.0
    for n in dims:
        worst = max(worst, relativistic_det_sweep(count, int(n), seed=seed))
    return CheckReport.from_sides(
        "relativistic_det_identity",
        worst,
        float(params.get("target", 1e-12)),
        0.0,
        f"{count}states x n={dims}",
        notes="max relative |det - rho p^n| over random subluminal states",
    )


def _run_andreiev(params: dict, seed: int) -> CheckReport:
    from .kinetic import andreiev_det

    n = int(params.get("n", 1))
    if "atoms" in params:
        doc = params["atoms"]
        w = np.array(doc["weights"], dtype=float)
        f = np.array(doc["f"], dtype=float)
        v = np.array(doc["nodes"], dtype=float)
        res = andreiev_det(w, f, v, n)
        dev = abs(res.direct - res.bruteforce) / (1.0 + abs(res.direct))
        return CheckReport.from_sides(
            "andreiev_identity", dev, float(params.get("target", 1e-12)), 0.0,
            f"{w.shape[0]}atoms", notes=res.method,
        )
    rng = np.random.default_rng(seed)
    count = int(params.get("count", 100))
    natoms = int(params.get("natoms", 6))
    worst = 0.0
    for _ in range(count):
        w = rng.uniform(0.2, 2.0, natoms)
        f = rng.uniform(0.0, 2.0, natoms)
        v = rng.normal(size=(natoms, n))
        res = andreiev_det(w, f, v, n)
        worst = max(worst, abs(res.direct - res.bruteforce) / (1.0 + abs(res.direct)))
    return CheckReport.from_sides(
        "andreiev_identity", worst, float(params.get("target", 1e-12)), 0.0,
        f"{count}draws x {natoms}atoms", notes=f"n={n} random draws",
    )


def _run_kinetic_bound(params: dict, seed: int) -> CheckReport:
    from .kinetic import bgk_run_1d, kinetic_bound_check, two_beam_state

    state = two_beam_state(
        ny=int(params.get("ny", 64)),
        nv=int(params.get("nv", 16)),
        vmax=float(params.get("vmax", 6.0)),
        tau=float(params.get("tau", 0.5)),
    )
    traj = bgk_run_1d(state, float(params.get("t_end", 0.25)), float(params.get("cfl", 0.9)))
    return kinetic_bound_check(traj)


def _run_defect_schur(params: dict, seed: int) -> CheckReport:
    from .kinetic import DefectSample, defect_schur_check

    n = int(params.get("space_dim", 1))
    if n == 1:
        sample = DefectSample(
            2.0, SymMat.from_matrix([[2.0, 1.0], [1.0, 1.0]]), SymMat.from_matrix([[1.0]])
        )
    else:
        rng = np.random.default_rng(seed + 1)
        g = rng.normal(size=(n + 2, n))
        lifted = np.concatenate([np.ones((n + 2, 1)), g], axis=1)
        moment = lifted.T @ lifted
        s = rng.normal(size=(n, n + 1))
        sample = DefectSample(
            float(moment[0, 0]),
            SymMat.from_matrix(moment),
            SymMat.from_matrix(s @ s.T / (n + 1)),
        )
    return defect_schur_check(sample, count=int(params.get("count", 100_000)), seed=seed)


def _run_homog(params: dict, seed: int, mode: str) -> CheckReport:
    from .homogenization import homog_checks

    field = field_from_spec(params["field"]) if "field" in params else None
    return homog_checks(
        field,
        mode,
        budget=int(params.get("budget", 10_000)),
        seed=seed,
        method=params.get("method", "spectral"),
        tol=float(params.get("tol", 1e-8)),
    )


JOB_REGISTRY = {
    "verify_periodic": _run_verify_periodic,
    "verify_convex": _run_verify_convex,
    "gagliardo": _run_gagliardo,
    "lambda_probe": _run_lambda_probe,
    "compact_support_mean": _run_compact_support_mean,
    "vanishing_trace": _run_vanishing_trace,
    "isoperimetric": _run_isoperimetric,
    "nondiv_bound": _run_nondiv_bound,
    "proof_trace": _run_proof_trace,
    "ma_manufactured": _run_ma_manufactured,
    "euler_bound": _run_euler_bound,
    "absfl_bound": _run_absfl_bound,
    "selfsimilar_bound": _run_selfsimilar_bound,
    "relativistic_bound": _run_relativistic_bound,
    "relativistic_det": _run_relativistic_det,
    "andreiev": _run_andreiev,
    "kinetic_bound": _run_kinetic_bound,
    "defect_schur": _run_defect_schur,
    "homog_bounds": lambda p, s: _run_homog(p, s, "Bounds"),
    "homog_dpt_equivalence": lambda p, s: _run_homog(p, s, "DPTEquivalence"),
    "homog_tempt": lambda p, s: _run_homog(p, s, "TemptFalsifier"),
}

OPERATION_GROUPS = {
    "verify": [
        "verify_periodic", "verify_convex", "gagliardo", "lambda_probe",
        "compact_support_mean", "vanishing_trace", "isoperimetric",
    ],
    "prove": ["proof_trace", "ma_manufactured", "nondiv_bound"],
    "fluid": [
        "euler_bound", "absfl_bound", "selfsimilar_bound",
        "relativistic_bound", "relativistic_det",
    ],
    "kinetic": ["andreiev", "kinetic_bound", "defect_schur"],
    "homog": ["homog_bounds", "homog_dpt_equivalence", "homog_tempt"],
}


# -- configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class JobSpec:
    name: str
    operation: str
    parameters: dict = dfield(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class SuiteConfig:
    jobs: tuple
    out: str | None = None
    format: str = "json"


_TOP_KEYS = {"jobs", "out", "format"}
_JOB_KEYS = {"name", "operation", "parameters", "seed"}


def parse_config(text: str) -> SuiteConfig:
    """Parse and strictly validate a suite configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"ParseError at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise UnknownKeyError(f"unknown top-level key(s): {sorted(unknown)}")
    if "jobs" not in doc:
        raise ConfigError("MissingJobs: configuration needs a 'jobs' list")
    if not isinstance(doc["jobs"], list):
        raise ConfigError("'jobs' must be a list")
    fmt = doc.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"format must be 'json' or 'csv', got {fmt!r}")
    jobs = []
    for i, job in enumerate(doc["jobs"]):
        if not isinstance(job, dict):
            raise ConfigError(f"job {i} must be an object")
        unknown = set(job) - _JOB_KEYS
        if unknown:
            raise UnknownKeyError(f"job {i}: unknown key(s) {sorted(unknown)}")
        op = job.get("operation")
        if op not in JOB_REGISTRY:
            raise UnknownOperationError(f"job {i}: unknown operation {op!r}")
        params = job.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError(f"job {i}: parameters must be an object")
        jobs.append(
            JobSpec(
                name=job.get("name", f"{op}#{i}"),
                operation=op,
                parameters=params,
                seed=int(job.get("seed", 0)),
            )
        )
    return SuiteConfig(jobs=tuple(jobs), out=doc.get("out"), format=fmt)


def run_suite(
    config: SuiteConfig,
    seed_override: int | None = None,
    max_workers: int = 1,
    allowed_ops: list[str] | None = None,
) -> list[CheckReport]:
    """Execute every job; reports come back in declaration order.

    A job failure becomes a failing report (with the exception in its notes)
    and never aborts sibling jobs.
    """
    if allowed_ops is not None:
        bad = [j.operation for j in config.jobs if j.operation not in allowed_ops]
        if bad:
            raise ConfigError(
                f"operation(s) {sorted(set(bad))} not available under this subcommand"
            )

    def run_one(job: JobSpec) -> CheckReport:
        seed = seed_override if seed_override is not None else job.seed
        try:
            report = JOB_REGISTRY[job.operation](job.parameters, seed)
        except Exception as exc:  # noqa: BLE001 - captured into the report
            return CheckReport.from_sides(
                job.name, 1.0, 0.0, 0.0, "error",
                notes=f"error: {type(exc).__name__}: {exc}",
            )
        if report.name != job.name:
            report = CheckReport(
                job.name, report.lhs, report.rhs, report.slack, report.resolution,
                report.tolerance, report.passed,
                notes=(f"[{report.name}] " + report.notes).strip(),
                extra=report.extra,
            )
        return report

    if max_workers > 1 and len(config.jobs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(run_one, config.jobs))
    return [run_one(job) for job in config.jobs]


def emit_report(reports: list[CheckReport], fmt: str = "json") -> str:
    if fmt == "json":
        return reports_to_json(reports)
    if fmt == "csv":
        return reports_to_csv(reports)
    raise ConfigError(f"unknown report format {fmt!r}")
