"""Command-line entry points: experiment runs and fixture synthesis."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .assets import FIXTURE_DIR, scenario_path
from .gateway import Fixture, LiveProvider, RecordingProvider, ScriptedProvider
from .harness import emit_report, run_condition
from .pipeline import CONDITION_NAMES, condition
from .planner import PolicyStore
from .search import SearchConfig
from .synth import make_fixture
from .world import load_scenario


def _build_provider(args):
    choice = args.provider
    if choice.startswith("replay:"):
        name = choice.split(":", 1)[1]
        path = Path(name)
        if not path.exists():
            path = FIXTURE_DIR / f"{name}.json"
        if not path.exists():
            raise SystemExit(f"fixture not found: {name}")
        return ScriptedProvider(Fixture.load(path)), None
    if choice == "live":
        live = LiveProvider(
            base_url=args.base_url,
            model=args.model,
            selector_model=args.selector_model,
        )
        if args.record:
            fixture = Fixture()
            recorder = RecordingProvider(live, fixture, selector=live)
            return recorder, fixture
        return live, None
    raise SystemExit(f"unknown provider {choice!r}; use 'live' or 'replay:<fixture>'")


def cmd_run(args) -> int:
    scenario = load_scenario(scenario_path(args.scenario))
    context_note = None
    if args.context_note:
        context_note = Path(args.context_note).read_text(encoding="utf-8").strip()
    cond = condition(args.condition, context_note=context_note)
    provider, recording = _build_provider(args)

    search_config = SearchConfig(
        expand_threshold=args.expand_threshold,
        alt_threshold=args.alt_threshold,
        max_depth=args.max_depth,
        prefix_mean_threshold=args.prefix_mean_threshold,
        max_completions=args.max_completions,
    )

    hub = None
    server = None
    if args.user == "ui":
        from .server import ServerConfig, SessionHub, SessionServer

        console_dir = Path(args.console_dir).resolve() if args.console_dir else None
        hub = SessionHub()
        server = SessionServer(hub, ServerConfig(host=args.host, port=args.http_port, console_dir=console_dir))
        server.start()
        print(f"session API listening on http://{args.host}:{server.port}", flush=True)

    policy_store = PolicyStore()
    if args.policy and Path(args.policy).exists():
        policy_store = PolicyStore.load(args.policy)

    reports = []
    try:
        for trial in range(1, args.trials + 1):
            label = cond.name if trial == 1 else f"trial{trial}"
            report = run_condition(
                scenario,
                cond,
                provider,
                user_kind=args.user,
                seed=args.seed,
                policy_store=policy_store,
                include_setup=trial == 1,
                label=label,
                trial=trial,
                search_config=search_config,
                hub=hub,
            )
            reports.append(report)
            print(
                f"[{label}] completion {report.completion_rate * 100:.1f}% "
                f"({report.assertions_satisfied}/{report.assertions_total} assertions), "
                f"retrieved {report.retrieved}, sourced {report.sourced}, "
                f"tokens {report.total_tokens}, instructions {report.instructions}, "
                f"words {report.user_words}",
                flush=True,
            )
    finally:
        if args.policy:
            policy_store.save(args.policy)
        if recording is not None and args.record:
            recording.save(args.record)
            print(f"recorded fixture -> {args.record}")

    paths = emit_report(reports, args.out)
    print(f"wrote {len(paths)} report files to {args.out}")

    if server is not None:
        if args.exit_when_done:
            time.sleep(args.linger)
            server.stop()
        else:
            print("run finished; serving session state until interrupted", flush=True)
            try:
                while True:
                    time.sleep(3600)
            except KeyboardInterrupt:
                server.stop()
    return 0


def cmd_make_fixture(args) -> int:
    scenario = load_scenario(scenario_path(args.scenario))
    fixture = make_fixture(scenario, probability=args.probability)
    fixture.save(args.out)
    print(f"wrote {args.out} ({len(fixture.completions)} completions)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stars", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one condition over a scenario")
    run.add_argument("--scenario", required=True, help="scenario file path or shipped name")
    run.add_argument("--condition", required=True, choices=sorted(CONDITION_NAMES))
    run.add_argument("--provider", default="replay:mini", help="'live' or 'replay:<fixture>'")
    run.add_argument("--user", default="oracle", choices=["oracle", "reject-all", "interactive", "ui"])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="reports")
    run.add_argument("--context-note", help="file with a system preamble for selection")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--policy", help="path for persisting the learned policy store")
    run.add_argument("--base-url", default="https://api.openai.com/v1")
    run.add_argument("--model", default="gpt-3.5-turbo-instruct")
    run.add_argument("--selector-model", default="gpt-4")
    run.add_argument("--record", help="record live exchanges into this fixture file")
    run.add_argument("--expand-threshold", type=float, default=0.90)
    run.add_argument("--alt-threshold", type=float, default=0.05)
    run.add_argument("--max-depth", type=int, default=3)
    run.add_argument("--prefix-mean-threshold", type=float, default=0.85)
    run.add_argument("--max-completions", type=int, default=None)
    run.add_argument("--host", default="127.0.0.1")
    run.add_argument("--http-port", type=int, default=8765)
    run.add_argument("--console-dir", help="static console files to serve at /")
    run.add_argument("--exit-when-done", action="store_true")
    run.add_argument("--linger", type=float, default=1.0)
    run.set_defaults(func=cmd_run)

    fixture = sub.add_parser("make-fixture", help="synthesize a replay fixture for a scenario")
    fixture.add_argument("--scenario", required=True)
    fixture.add_argument("--out", required=True)
    fixture.add_argument("--probability", type=float, default=0.97)
    fixture.set_defaults(func=cmd_make_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
