"""Operator surface: validate/run scenarios, score traces, compare runs, and
serve the co-simulation bridge.

Exit codes: 0 success, 2 validation failure, 3 runtime failure, 4 protocol
failure.  GRID5G_SEED provides a default seed when --seed is absent.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bridge import serve_once
from .engine import FIVE_G, IDEAL, Simulation
from .errors import BridgeProtocolError, ScenarioError
from .metrics import NOT_SETTLED, StepSpec, build_report
from .scenario import load_scenario, parse_scenario, resolve_scenario_bytes
from .trace import fmt9, read_trace, scenario_digest, write_manifest, write_trace

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_PROTOCOL = 4


def _resolve_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GRID5G_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ScenarioError([f"$: GRID5G_SEED must be an integer, got {env!r}"]) from None


def _stem(source: str) -> str:
    if source.startswith("preset:"):
        return source[len("preset:"):]
    return Path(source).stem


def _write_outputs(args, scenario, raw, source, records) -> tuple[Path, Path]:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{_stem(source)}_{scenario.mode}"
    trace_path = outdir / f"{stem}.csv"
    manifest_path = outdir / f"{stem}.manifest.json"
    write_trace(trace_path, records, [s.der_id for s in scenario.ders],
                scenario.ran.aggregated_carriers)
    write_manifest(
        manifest_path,
        scenario_sha256=scenario_digest(raw),
        seed=scenario.seed,
        mode=scenario.mode,
        version=__version__,
        created_utc=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        source=source,
    )
    return trace_path, manifest_path


def cmd_validate(args) -> int:
    raw, source = resolve_scenario_bytes(args.scenario)
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        print(f"$: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return EXIT_VALIDATION
    _, problems = parse_scenario(document)
    for problem in problems:
        print(problem, file=sys.stderr)
    if problems:
        return EXIT_VALIDATION
    print(f"{source}: OK")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario, raw, source = load_scenario(args.scenario, seed=_resolve_seed(args), mode=args.mode)
    records = Simulation(scenario).run()
    trace_path, manifest_path = _write_outputs(args, scenario, raw, source, records)
    print(trace_path)
    print(manifest_path)
    return EXIT_OK


def _parse_step(raw: str, band: float) -> tuple[StepSpec, float | None]:
    parts = raw.split(":")
    if len(parts) not in (3, 4):
        raise ScenarioError([f"$: malformed step spec {raw!r}, expected t0:y0:y1[:t_end]"])
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ScenarioError([f"$: malformed step spec {raw!r}, fields must be numbers"]) from None
    spec = StepSpec(t0=values[0], y_init=values[1], y_final=values[2], band=band)
    problems = spec.validate()
    if problems:
        raise ScenarioError([f"$: step spec {raw!r}: {p}" for p in problems])
    return spec, (values[3] if len(values) == 4 else None)


def _windowed(trace, column: str, spec: StepSpec, t_end: float | None):
    t = trace.t
    y = trace.series(column)
    if t_end is None:
        return t, y
    keep = [i for i, ti in enumerate(t) if ti < t_end]
    return [t[i] for i in keep], [y[i] for i in keep]


def _render_report(report) -> list[str]:
    settling = "NOT_SETTLED" if report.settling_time is NOT_SETTLED else fmt9(report.settling_time)
    return [
        f"overshoot_pct = {fmt9(report.overshoot_pct)}",
        f"settling_time_s = {settling}",
        f"peak_time_s = {fmt9(report.peak_time)}",
        f"stable = {'true' if report.stable else 'false'}",
    ]


def cmd_metrics(args) -> int:
    trace = read_trace(args.trace)
    lines = [
        "# grid5g metrics report",
        f"trace = {args.trace}",
        f"column = {args.column}",
        f"band = {fmt9(args.band)}",
    ]
    unsettled = False
    for raw in args.step:
        spec, t_end = _parse_step(raw, args.band)
        t, y = _windowed(trace, args.column, spec, t_end)
        report = build_report(t, y, spec)
        unsettled = unsettled or report.settling_time is NOT_SETTLED
        lines.append(f"[step t0={fmt9(spec.t0)} y_init={fmt9(spec.y_init)} "
                     f"y_final={fmt9(spec.y_final)}]")
        lines += _render_report(report)
    text = "\n".join(lines) + "\n"
    print(text, end="")
    out = Path(args.out) if args.out else Path(str(args.trace) + ".metrics.txt")
    out.write_text(text)
    if args.require_settled and unsettled:
        print("error: trace did not settle within the band", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_compare(args) -> int:
    ideal = read_trace(args.trace_ideal)
    with_5g = read_trace(args.trace_5g)
    if abs(ideal.sample_period - with_5g.sample_period) > 1e-12:
        print("error: traces have different sample periods", file=sys.stderr)
        return EXIT_RUNTIME
    if abs(ideal.duration - with_5g.duration) > 1e-12:
        print("error: traces have different durations", file=sys.stderr)
        return EXIT_RUNTIME
    lines = [f"# grid5g comparison (column = {args.column}, band = {fmt9(args.band)})"]
    for raw in args.step:
        spec, t_end = _parse_step(raw, args.band)
        reports = {}
        for label, trace in (("Ideal", ideal), ("5G", with_5g)):
            t, y = _windowed(trace, args.column, spec, t_end)
            reports[label] = build_report(t, y, spec)
        lines.append(f"[step t0={fmt9(spec.t0)} y_init={fmt9(spec.y_init)} "
                     f"y_final={fmt9(spec.y_final)}]")
        lines.append(f"{'case':<6} {'overshoot_pct':>14} {'settling_time_s':>16} "
                     f"{'peak_time_s':>12} {'stable':>7}")
        for label in ("Ideal", "5G"):
            r = reports[label]
            settling = "NOT_SETTLED" if r.settling_time is NOT_SETTLED else fmt9(r.settling_time)
            lines.append(f"{label:<6} {fmt9(r.overshoot_pct):>14} {settling:>16} "
                         f"{fmt9(r.peak_time):>12} {'true' if r.stable else 'false':>7}")
        d_over = reports["5G"].overshoot_pct - reports["Ideal"].overshoot_pct
        if NOT_SETTLED in (reports["5G"].settling_time, reports["Ideal"].settling_time):
            d_settle = "n/a"
        else:
            d_settle = "%+.9g" % (reports["5G"].settling_time - reports["Ideal"].settling_time)
        lines.append(f"{'delta':<6} {'%+.9g' % d_over:>14} {d_settle:>16}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


def _parse_endpoint(raw: str) -> tuple[str, int]:
    parts = raw.split(":")
    if len(parts) != 3 or parts[0] != "tcp":
        raise ScenarioError([f"$: endpoint must look like tcp:HOST:PORT, got {raw!r}"])
    try:
        return parts[1], int(parts[2])
    except ValueError:
        raise ScenarioError([f"$: endpoint port must be an integer, got {parts[2]!r}"]) from None


def cmd_bridge(args) -> int:
    scenario, raw, source = load_scenario(args.scenario, seed=_resolve_seed(args), mode=args.mode)
    if any(ev.kind == "disturbance" for ev in scenario.events):
        raise ScenarioError(
            ["$: disturbance events act on the plants, which live at the peer; "
             "bridge mode cannot apply them"]
        )
    host, port = _parse_endpoint(args.listen)
    sim = Simulation(scenario)

    def announce(h, p):
        print(f"BRIDGE LISTENING tcp:{h}:{p}", flush=True)

    status = EXIT_OK
    try:
        serve_once(sim, host, port, announce=announce)
    except BridgeProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        status = EXIT_PROTOCOL
    trace_path, manifest_path = _write_outputs(args, scenario, raw, source, sim.trace)
    print(trace_path)
    print(manifest_path)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grid5g",
        description="Deterministic co-simulation of a 5G RAN serving distributed "
                    "grid control loops.",
    )
    parser.add_argument("--version", action="version", version=f"grid5g {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file or preset")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a scenario and write trace + manifest")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=[IDEAL, FIVE_G], default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="step-response metrics for one trace")
    p.add_argument("trace")
    p.add_argument("--step", action="append", required=True,
                   metavar="T0:Y0:Y1[:TEND]")
    p.add_argument("--band", type=float, default=0.02)
    p.add_argument("--column", default="pcc")
    p.add_argument("--require-settled", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", help="ideal-vs-5G comparison table")
    p.add_argument("trace_ideal")
    p.add_argument("trace_5g")
    p.add_argument("--step", action="append", required=True,
                   metavar="T0:Y0:Y1[:TEND]")
    p.add_argument("--band", type=float, default=0.02)
    p.add_argument("--column", default="pcc")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bridge", help="serve the co-simulation bridge protocol")
    p.add_argument("scenario")
    p.add_argument("--listen", default="tcp:127.0.0.1:0")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=[IDEAL, FIVE_G], default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_bridge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for problem in exc.diagnostics:
            print(problem, file=sys.stderr)
        return EXIT_VALIDATION
    except BridgeProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
