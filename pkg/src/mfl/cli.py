"""``mfl`` command line.

    mfl <subcommand> [--config file.json] [--seed N] [--out dir]

Subcommands: solve, accelerate, bound, game, esc, satisfy, reproduce.
Each run writes ``<out>/<subcommand>.csv`` (or the reproduction target name)
plus a JSON summary next to it, and prints the summary.

Exit codes: 0 success, 2 bad config, 3 runtime error, 4 a reproduction
missed its reference values.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import accel, bounds, esc, games, report, reproduce, satisfy
from .errors import ConfigInvalid, InvalidSchedule, MflError, NonmonotoneErrors, TooShort
from .expr import compile_expr
from .fixpoint import IterationMap, Schedule, StopRule, Trajectory, iterate, sample_map_conditions

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_MISMATCH = 0, 2, 3, 4


# --- config access ------------------------------------------------------


class Section:
    """A JSON object with its dotted path, for error messages that name the field."""

    def __init__(self, data: Any, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigInvalid(f"field '{path or '<root>'}': expected an object")
        self.data = data
        self.path = path

    def _name(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def section(self, key: str) -> "Section":
        if key not in self.data:
            raise ConfigInvalid(f"field '{self._name(key)}': missing")
        return Section(self.data[key], self._name(key))

    def get(self, key: str, kind: type | tuple = float, default: Any = ..., check: Callable | None = None, why: str = ""):
        if key not in self.data or self.data[key] is None:
            if default is ...:
                raise ConfigInvalid(f"field '{self._name(key)}': missing")
            return default
        value = self.data[key]
        kinds = kind if isinstance(kind, tuple) else (kind,)
        if float in kinds and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kinds) or (isinstance(value, bool) and bool not in kinds):
            names = "/".join(k.__name__ for k in kinds)
            raise ConfigInvalid(f"field '{self._name(key)}': expected {names}, got {value!r}")
        if check is not None and not check(value):
            raise ConfigInvalid(f"field '{self._name(key)}': {why or 'invalid value'} ({value!r})")
        return value

    def number_or_list(self, key: str, default: Any = ...):
        value = self.get(key, (float, list), default)
        if isinstance(value, list) and not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigInvalid(f"field '{self._name(key)}': expected numbers")
        return value


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: top level must be an object")
    return data


def _positive(v):
    return v > 0


def build_stop(cfg: Section) -> StopRule:
    if not cfg.has("stop"):
        return StopRule()
    s = cfg.section("stop")
    return StopRule(
        tol=s.get("tol", float, 1e-10, _positive, "must be positive"),
        max_iters=s.get("max_iters", int, 1000, _positive, "must be positive"),
        cycle_check=s.get("cycle_check", bool, False),
        max_period=s.get("max_period", int, 16, _positive, "must be positive"),
        cycle_tol=s.get("cycle_tol", float, 1e-9, _positive, "must be positive"),
    )


def _rate(cfg: Section, key: str, default):
    """A step size: a number, or an expression in ``t``."""
    value = cfg.get(key, (float, str), default)
    if isinstance(value, str):
        return compile_expr(value, var="t")
    return value


def build_schedule(cfg: Section) -> Schedule:
    if not cfg.has("schedule"):
        return Schedule.picard()
    s = cfg.section("schedule")
    kind = s.get("kind", str, "picard")
    try:
        if kind == "picard":
            sched = Schedule.picard()
        elif kind == "mann":
            sched = Schedule.mann(_rate(s, "lam", ...))
        elif kind == "ishikawa":
            sched = Schedule.ishikawa(_rate(s, "lam", ...), _rate(s, "mu", ...))
        elif kind == "reverse_ishikawa":
            sched = Schedule.reverse_ishikawa(_rate(s, "lam", None))
        else:
            raise ConfigInvalid(f"field 'schedule.kind': unknown kind {kind!r}")
        for t in range(1, 51):  # catch schedules that break their kind early
            sched.at(t)
    except InvalidSchedule as exc:
        raise ConfigInvalid(f"field 'schedule': {exc}") from None
    return sched


BUILTIN_MAPS = ("sqrt_chi", "resource_sharing", "beauty_contest", "satisfaction")


def build_map(s: Section) -> IterationMap:
    """A scalar map: ``{"expr": ..., "var", "lower", "upper", "derivatives"}`` or ``{"builtin": ...}``."""
    if s.has("expr"):
        var = s.get("var", str, "x")
        f = compile_expr(s.get("expr", str), var)
        derivs = [compile_expr(d, var) for d in s.get("derivatives", list, [])]
        lo, hi = s.get("lower", float, -np.inf), s.get("upper", float, np.inf)
        if not lo <= hi:
            raise ConfigInvalid(f"field '{s.path}': lower must not exceed upper")
        return IterationMap.from_scalar(f, lo, hi, derivs)
    name = s.get("builtin", str, check=lambda v: v in BUILTIN_MAPS, why=f"choose one of {', '.join(BUILTIN_MAPS)}")
    try:
        if name == "sqrt_chi":
            return reproduce.sqrt_map(s.get("upper", float, 10.0, _positive, "must be positive"))
        if name == "resource_sharing":
            return games.resource_sharing_map(
                s.get("c", float, 1.0), s.get("p", float, 1.0), s.get("eps", float, 0.0), s.get("n", int, 10)
            )
        if name == "beauty_contest":
            mu, p, M = s.get("mu", float), s.get("p", float), s.get("M", float, 100.0)
            return games.MeanFieldGame(lambda m: games.beauty_contest_response(mu, p, M, m), 0.0, M).as_map()
        mf = satisfy.MeanFieldSinr(s.get("gamma", float), s.get("N0", float), s.get("alpha", float), s.get("a_max", float))
        return mf.picard_map()
    except ValueError as exc:
        raise ConfigInvalid(f"field '{s.path}': {exc}") from None


def build_root_problem(s: Section) -> accel.RootProblem:
    """``{"expr": g, "var", "derivatives", "lower", "upper", "seed_map"}``."""
    var = s.get("var", str, "x")
    g = compile_expr(s.get("expr", str), var)
    derivs = [compile_expr(d, var) for d in s.get("derivatives", list, [])]
    seed = s.get("seed_map", str, None)
    return accel.RootProblem(
        g,
        tuple(derivs),
        s.get("lower", float, -np.inf),
        s.get("upper", float, np.inf),
        compile_expr(seed, var) if seed else None,
    )


# --- summaries ----------------------------------------------------------


def measured_order(residuals) -> float | None:
    """Order estimated from the longest strictly decreasing positive tail of the residuals."""
    r = [float(v) for v in residuals]
    while r and r[-1] == 0.0:
        r.pop()
    tail = []
    for v in reversed(r):
        if v <= 0 or (tail and v <= tail[-1]):
            break
        tail.append(v)
    tail = tail[::-1][-8:]
    try:
        return accel.estimate_order(tail).order
    except (TooShort, NonmonotoneErrors):
        return None


def trajectory_summary(traj: Trajectory) -> dict:
    out = {
        "stop_reason": traj.stop_reason,
        "final": traj.final,
        "final_residual": traj.residuals[-1],
        "iterations": len(traj) - 1,
        "evaluations": traj.evaluations,
        "order": measured_order(traj.residuals),
    }
    if traj.cycle is not None:
        out["cycle"] = {"period": traj.cycle.period, "points": traj.cycle.points}
    return out


class Output:
    def __init__(self, out: str):
        self.dir = Path(out)

    def finish(self, name: str, rows: list[list[str]] | None, summary: dict) -> None:
        if rows is not None:
            summary = {**summary, "csv": f"{name}.csv"}
            report.write_rows(self.dir / f"{name}.csv", rows)
        report.write_json(self.dir / f"{name}.json", summary)
        print(report.dumps(summary))


# --- subcommands --------------------------------------------------------


def cmd_solve(cfg: Section, args, out: Output) -> int:
    fmap = build_map(cfg.section("map"))
    x0 = cfg.get("x0", float)
    stop = build_stop(cfg)
    traj = iterate(fmap, build_schedule(cfg), x0, stop)
    summary = trajectory_summary(traj)
    if fmap.bounded:
        cond = sample_map_conditions(fmap, seed=args.seed)
        summary["conditions"] = {
            "alpha1": cond.alpha1,
            "kannan_alpha2": cond.kannan_alpha2,
            "chatterjea_alpha3": cond.chatterjea_alpha3,
            "nonexpansive": cond.nonexpansive,
        }
        d0 = float(np.linalg.norm(traj.iterates[0] - traj.final))
        if 0 < cond.alpha1 < 1:
            tb = bounds.contraction_time(bounds.ContractionInputs(cond.alpha1, d0, stop.tol))
            summary["bounds"] = {"contraction": {"T": tb.T, "T_eta": tb.T_eta, "d0": d0, "eta": stop.tol}}
    out.finish("solve", report.trajectory_rows(traj), summary)
    return EXIT_OK


ACCEL_METHODS = ("newton", "halley", "householder", "secant", "steffensen", "aitken")


def cmd_accelerate(cfg: Section, args, out: Output) -> int:
    method = cfg.get("method", str, check=lambda v: v in ACCEL_METHODS, why=f"choose one of {', '.join(ACCEL_METHODS)}")
    stop = build_stop(cfg)
    x0 = cfg.get("x0", float)
    if method in ("steffensen", "aitken"):
        fmap = build_map(cfg.section("map"))
        if method == "steffensen":
            traj = accel.steffensen_iterate(fmap, x0, stop, project=cfg.get("project", bool, False))
        else:
            terms = cfg.get("terms", int, 5, lambda v: v >= 3, "must be at least 3")
            seq = iterate(fmap, Schedule.picard(), x0, StopRule(tol=1e-300, max_iters=terms - 1)).values
            ys = accel.aitken_transform(seq)
            res = [abs(fmap.scalar(y) - y) for y in ys]
            traj = Trajectory(np.array(ys), np.array(res), terms + len(ys), "max_iters")
    else:
        p = build_root_problem(cfg.section("g")) if cfg.has("g") else accel.RootProblem.from_map(build_map(cfg.section("map")))
        if method == "secant":
            traj = accel.secant_iterate(p, x0, cfg.get("x1", float, None), stop)
        else:
            order = {"newton": 1, "halley": 2}.get(method) or cfg.get("order", int, check=_positive, why="must be positive")
            traj = accel.householder_iterate(p, order, x0, stop, cfg.get("multiplicity", float, 1.0))
    out.finish("accelerate", report.trajectory_rows(traj), {"method": method, **trajectory_summary(traj)})
    return EXIT_OK


BOUND_KINDS = ("contraction", "nonexpansive", "pseudocontractive", "speedup", "residual", "rescale")


def cmd_bound(cfg: Section, args, out: Output) -> int:
    # command-line flags override config fields of the same name
    data = dict(cfg.data)
    for key in ("kind", "alpha1", "d0", "eta", "L", "k", "eta0", "eta_star", "c2", "o", "scale", "lam", "t", "T_a", "rate"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.unbounded:
        data["bounded"] = False
    s = Section(data)
    kind = s.get("kind", str, check=lambda v: v in BOUND_KINDS, why=f"choose one of {', '.join(BOUND_KINDS)}")
    result: dict[str, Any] = {"kind": kind}
    if kind == "contraction":
        tb = bounds.contraction_time(bounds.ContractionInputs(s.get("alpha1"), s.get("d0"), s.get("eta")))
        result.update(T=tb.T, T_eta=tb.T_eta)
    elif kind == "nonexpansive":
        tb = bounds.nonexpansive_time(s.get("d0"), s.get("eta"))
        result.update(T=tb.T, T_eta=tb.T_eta)
    elif kind == "pseudocontractive":
        pt = bounds.pseudocontractive_time(bounds.PseudocontractiveParams(s.get("L"), s.get("k")), s.get("d0"), s.get("eta"))
        result.update(lam_star=pt.lam_star, rho_star=pt.rho_star, T=pt.bound.T, T_eta=pt.bound.T_eta)
    elif kind == "speedup":
        inp = bounds.SpeedupInputs(s.get("eta0"), s.get("eta_star"), s.get("c2"), s.get("o", int))
        tb = bounds.speedup_time(inp)
        result.update(T=tb.T, T_eta=tb.T_eta)
        if s.has("t"):
            result["error_at_t"] = bounds.speedup_error(inp, s.get("t", int))
    elif kind == "residual":
        result["bound"] = bounds.residual_bound(s.get("scale"), s.get("lam"), s.get("t", int), s.get("bounded", bool, True))
    else:
        rate_name = s.get("rate", str, "constant", lambda v: v in ("constant", "exponential"), "constant or exponential")
        rate = bounds.ConstantRate(s.get("lam")) if rate_name == "constant" else bounds.ExponentialRate()
        result["T_b"] = bounds.rescaled_time(s.get("T_a"), rate)
    out.finish("bound", None, result)
    return EXIT_OK


def cmd_game(cfg: Section, args, out: Output) -> int:
    g = cfg.section("game")
    name = g.get("builtin", str, check=lambda v: v in ("resource_sharing", "beauty_contest"), why="resource_sharing or beauty_contest")
    n = g.get("n", int, check=lambda v: v >= 2, why="need at least two players")
    equilibrium = None
    if name == "resource_sharing":
        game = games.resource_sharing_game(
            n, g.get("c", float, 1.0), g.get("p", float, 1.0), g.get("eps", float, 0.0), g.get("congestion", int, None)
        )
    else:
        mu, p, M = g.get("mu", float), g.get("p", float), g.get("M", float, 100.0)
        game = games.AggregativeGame(n, 0.0, M, lambda m: games.beauty_contest_response(mu, p, M, m))
        eq = games.beauty_equilibrium(mu, p, M)
        equilibrium = {"value": eq.value, "boundary": eq.boundary, "every_point": eq.every_point}
    a0 = cfg.number_or_list("a0")
    a0 = np.full(n, float(a0)) if not isinstance(a0, list) else np.array(a0, dtype=float)
    rounds = cfg.get("rounds", int, 100, _positive, "must be positive")
    log = games.play_rounds(game, build_schedule(cfg), a0, rounds)
    gaps = [float(np.max(np.abs(game.respond(games.others_mean(m, a, n)) - a))) for a, m in zip(log.actions, log.aggregate)]
    counts = n * np.arange(1, len(gaps) + 1)
    traj = Trajectory(log.actions, np.array(gaps), int(counts[-1]), "max_iters", counts)
    summary = {
        "game": name,
        "n": n,
        "final_aggregate": log.aggregate[-1],
        "final_gap": gaps[-1],
        "aggregate_consistent": log.check_aggregate(),
        "equilibrium": equilibrium,
    }
    out.finish("game", report.trajectory_rows(traj), summary)
    return EXIT_OK


def cmd_esc(cfg: Section, args, out: Output) -> int:
    order = cfg.get("order", int, 1, lambda v: v in (1, 2), "1 or 2")
    n = cfg.get("n", int, 1, _positive, "must be positive")
    pay = cfg.section("payoff")
    if pay.has("expr"):
        if n != 1:
            raise ConfigInvalid("field 'payoff.expr': expressions define single-player payoffs only")
        r = compile_expr(pay.get("expr", str), pay.get("var", str, "a"))
        oracle = lambda a: np.array([r(a[0])])  # noqa: E731
    else:
        pay.get("builtin", str, check=lambda v: v == "quadratic", why="only 'quadratic' is built in")
        peak = np.broadcast_to(np.asarray(pay.number_or_list("peak", 0.0), dtype=float), (n,))
        oracle = lambda a: -((a - peak) ** 2)  # noqa: E731
    try:
        params = esc.EscParams(
            n=n,
            gain=cfg.number_or_list("gain", 1.0),
            amplitude=cfg.number_or_list("amplitude", 0.1),
            freq=cfg.number_or_list("freq", None),
            phase=cfg.number_or_list("phase", 0.0),
            step=_rate(cfg, "step", 0.05),
            washout=cfg.get("washout", float, 0.5),
            noise=cfg.get("noise", float, 0.0),
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigInvalid(f"esc parameters: {exc}") from None
    a_hat0 = cfg.number_or_list("a_hat0", 0.0)
    T = cfg.get("T", int, 1000, _positive, "must be positive")
    if order == 1:
        run = esc.esc_first_order(oracle, params, a_hat0, T)
    else:
        run = esc.esc_second_order(oracle, params, a_hat0, cfg.number_or_list("d_hat0", 1.0), T)
    steps = np.linalg.norm(np.diff(run.baseline, axis=0), axis=1)
    residuals = np.append(steps, np.nan)
    counts = np.arange(len(run.baseline))
    traj = Trajectory(run.baseline, residuals, len(run.payoffs), "max_iters", counts)
    summary = {
        "order": order,
        "final_baseline": run.baseline[-1],
        "tail_mean": run.tail_mean(),
        "diverged_at": run.diverged_at,
        "seed": args.seed,
    }
    out.finish("esc", report.trajectory_rows(traj), summary)
    return EXIT_OK


def cmd_satisfy(cfg: Section, args, out: Output) -> int:
    stop = build_stop(cfg)
    if cfg.has("mean_field"):
        s = cfg.section("mean_field")
        try:
            mf = satisfy.MeanFieldSinr(s.get("gamma"), s.get("N0"), s.get("alpha"), s.get("a_max"))
        except ValueError as exc:
            raise ConfigInvalid(f"field 'mean_field': {exc}") from None
        scheme = cfg.get("scheme", str, "picard", lambda v: v in ("picard", "reverse_ishikawa", "steffensen"), "unknown scheme")
        sol = satisfy.meanfield_satisfy(mf, cfg.get("m0", float), scheme, stop, cfg.get("lam", float, 5 / 3))
        summary = {"scheme": scheme, "m_star": sol.m_star, "interior": sol.interior, **trajectory_summary(sol.trajectory)}
        out.finish("satisfy", report.trajectory_rows(sol.trajectory), summary)
        return EXIT_OK
    s = cfg.section("network")
    try:
        net = satisfy.SinrNetwork(
            np.array(s.get("w", list), dtype=float),
            np.asarray(s.number_or_list("eps", 1.0), dtype=float),
            s.get("N0"),
            np.asarray(s.number_or_list("gamma"), dtype=float),
            np.asarray(s.number_or_list("a_max"), dtype=float),
        )
    except ValueError as exc:
        raise ConfigInvalid(f"field 'network': {exc}") from None
    scheme = cfg.get("scheme", str, "picard", lambda v: v in ("picard", "reverse_ishikawa"), "picard or reverse_ishikawa")
    a0 = cfg.number_or_list("a0")
    a0 = np.full(net.n, float(a0)) if not isinstance(a0, list) else np.array(a0, dtype=float)
    rep = satisfy.feasibility(net)
    if scheme == "picard":
        log = satisfy.banach_picard_satisfy(net, a0, stop)
    else:
        log = satisfy.reverse_ishikawa_satisfy(net, a0, cfg.get("lam", float, 5 / 3), stop)
    counts = net.n * np.arange(1, len(log.actions) + 1)
    traj = Trajectory(log.actions, log.residuals, int(counts[-1]), "max_iters", counts)
    final = satisfy.sinr(net, log.actions[-1], rtol=1e-9)
    summary = {
        "scheme": scheme,
        "stop_reason": log.stop_reason,
        "final": log.actions[-1],
        "sinr": final.values,
        "satisfied": final.satisfied,
        "feasibility": {"rho": rep.rho, "feasible": rep.feasible, "a_star": rep.a_star},
        "reads": [sorted(r) for r in log.reads],
    }
    out.finish("satisfy", report.trajectory_rows(traj), summary)
    return EXIT_OK


def cmd_reproduce(cfg: Section, args, out: Output) -> int:
    target = args.target
    if target == "figtime-curve":
        rep = reproduce.figtime_curve(
            cfg.get("eta0", float, 0.5) if args.eta0 is None else args.eta0,
            cfg.get("c2", float, 0.9) if args.c2 is None else args.c2,
            cfg.get("o", int, 1) if args.o is None else args.o,
        )
    else:
        rep = reproduce.TARGETS[target]()
    out.finish(target, rep.csv_rows(), rep.summary())
    if not rep.ok:
        for c in rep.failures:
            print(f"mismatch {target} {c.column} row {c.row}: expected {c.expected}, got {c.actual!r}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "accelerate": cmd_accelerate,
    "bound": cmd_bound,
    "game": cmd_game,
    "esc": cmd_esc,
    "satisfy": cmd_satisfy,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="seed for sampling and noise (default: config or 0)")
    common.add_argument("--out", default=None, help="output directory (default: config 'out' or mfl-out)")

    parser = argparse.ArgumentParser(prog="mfl", description="Fixed-point learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "accelerate", "game", "esc", "satisfy"):
        sub.add_parser(name, parents=[common])

    b = sub.add_parser("bound", parents=[common], help="closed-form convergence-time bounds")
    b.add_argument("--kind", choices=BOUND_KINDS)
    for flag, typ in (
        ("--alpha1", float), ("--d0", float), ("--eta", float), ("--L", float), ("--k", float),
        ("--eta0", float), ("--eta-star", float), ("--c2", float), ("--o", int), ("--scale", float),
        ("--lam", float), ("--t", int), ("--T-a", float),
    ):
        b.add_argument(flag, type=typ)
    b.add_argument("--rate", choices=("constant", "exponential"))
    b.add_argument("--unbounded", action="store_true", help="residual bound on an unbounded domain")

    r = sub.add_parser("reproduce", parents=[common], help="rerun a reference experiment and compare")
    r.add_argument("target", choices=tuple(reproduce.TARGETS))
    r.add_argument("--eta0", type=float)
    r.add_argument("--c2", type=float)
    r.add_argument("--o", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = load_config(args.config)
        cfg = Section(data)
        if args.seed is None:
            args.seed = cfg.get("seed", int, 0)
        out = Output(args.out or cfg.get("out", str, "mfl-out"))
        return COMMANDS[args.command](cfg, args, out)
    except ConfigInvalid as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MflError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
