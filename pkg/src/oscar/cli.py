"""Command-line entry point: parse, extract-status, align, track, eval, simulate, query."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable

from . import report as report_mod
from . import schemas
from .alignment import average_over_frames, score_frame
from .config import RunConfig, resolve_config
from .errors import OscarError
from .harness import (
    AnnotatedSession,
    ProtocolConfig,
    evaluate,
    load_corpus,
    oracle_provider_for,
)
from .providers import CachedProvider, EmbeddingCache, EmbeddingProvider, MockProvider, RemoteProvider
from .recipe import extract_object_statuses, normalize_recipe
from .simulate import NoiseConfig, generate_corpus, sweep, write_corpus
from .tracker import SessionState, predict, query as run_query, update_state


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return 2
    try:
        cfg = _config_from(args)
        return args.func(args, cfg)
    except (OscarError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscar", description="Object-status recipe progress tracking")
    parser.add_argument("--seed", type=int, default=None, help="master seed for all randomness")
    parser.add_argument("--provider", choices=("mock", "oracle", "remote"), default=None)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers for corpus runs")
    parser.add_argument("--json", action="store_true", help="machine-readable stdout where applicable")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("parse", help="normalize raw recipe text to recipe JSON")
    p.add_argument("input", help="recipe text file, or - for stdin")
    p.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("extract-status", help="extract per-step (verb, noun) statuses")
    p.add_argument("recipe", help="normalized recipe JSON file")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_extract_status)

    p = sub.add_parser("align", help="score every manifest frame against the recipe")
    p.add_argument("--manifest", required=True)
    p.add_argument("--recipe", required=True)
    p.add_argument("--statuses", default=None, help="status map JSON (default: rule-based extraction)")
    p.add_argument("--model", default=None)
    p.add_argument("--remote-url", default=None)
    p.add_argument("--fusion-weight", type=float, default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--figure", default=None, help="write a per-step score bar chart here")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("track", help="stream frame batches through the time-causal tracker")
    p.add_argument("--manifest", required=True)
    p.add_argument("--recipe", required=True)
    p.add_argument("--statuses", default=None)
    p.add_argument("--mode", choices=("baseline", "oscar"), default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--remote-url", default=None)
    p.add_argument("--fusion-weight", type=float, default=None)
    p.add_argument("--debounce", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=5, help="frames per prediction batch")
    p.add_argument("-o", "--output", required=True, help="history log JSON path")
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("eval", help="run the accuracy protocol over a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("baseline", "oscar", "both"), default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--remote-url", default=None)
    p.add_argument("--fusion-weight", type=float, default=None)
    p.add_argument("--blur-radius", type=int, default=None)
    p.add_argument("--debounce", type=int, default=None)
    p.add_argument("--status-reduce", choices=("max", "mean"), default=None)
    p.add_argument("--sd-kind", choices=("population", "sample"), default=None)
    p.add_argument("--cache-dir", default=None, help="file-backed embedding cache directory")
    p.add_argument("-o", "--out", default=None, help="output directory (default: report to stdout only)")
    p.add_argument("--csv", action="store_true", help="also write the report as CSV")
    p.add_argument("--emit-logs", action="store_true", help="write per-(video, mode, trial) history logs")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", help="generate a synthetic corpus, or sweep noise knobs")
    p.add_argument("--out", required=True, help="corpus directory (or sweep output directory)")
    p.add_argument("--sessions", type=int, default=100)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--frames-per-step", type=int, default=25)
    p.add_argument("--clutter", type=float, default=0.0)
    p.add_argument("--repeat-steps", type=int, default=0)
    p.add_argument("--lingering", type=float, default=0.0)
    p.add_argument("--status-signal", type=float, default=1.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--sweep", default=None, metavar="KNOB=V1,V2,...",
                   help="sweep one noise knob instead of writing a corpus, e.g. clutter=0,0.5,1")
    p.add_argument("--cell-sessions", type=int, default=20, help="sessions generated per sweep cell")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("query", help="answer a structured progress query from a history log")
    p.add_argument("--log", required=True)
    p.add_argument("--q", required=True, help="current | completed | remaining | missing | is_done:<step>")
    p.set_defaults(func=_cmd_query)
    return parser


def _config_from(args: argparse.Namespace) -> RunConfig:
    flags = {
        "seed": getattr(args, "seed", None),
        "provider": getattr(args, "provider", None),
        "jobs": getattr(args, "jobs", None),
        "mode": getattr(args, "mode", None),
        "model": getattr(args, "model", None),
        "remote_url": getattr(args, "remote_url", None),
        "fusion_weight": getattr(args, "fusion_weight", None),
        "blur_radius": getattr(args, "blur_radius", None),
        "debounce": getattr(args, "debounce", None),
        "status_reduce": getattr(args, "status_reduce", None),
        "sd_kind": getattr(args, "sd_kind", None),
        "cache_dir": getattr(args, "cache_dir", None),
    }
    return resolve_config(flags, config_path=getattr(args, "config", None))


def _protocol(cfg: RunConfig) -> ProtocolConfig:
    return ProtocolConfig(
        fusion_weight=cfg.fusion_weight,
        status_reduce=cfg.status_reduce,
        blur_radius=cfg.blur_radius,
        debounce=cfg.debounce,
        sd_kind=cfg.sd_kind,
    )


def _shared_provider(cfg: RunConfig) -> EmbeddingProvider:
    if cfg.provider == "remote":
        model = cfg.model
        provider = RemoteProvider(cfg.remote_url, model or "")
        if not model:
            models = provider.health().get("models", [])
            if not models:
                raise OscarError("remote service reports no models")
            provider.model_id = models[0]
    else:
        provider = MockProvider(model_id=cfg.model or "mock-64")
    if cfg.cache_dir:
        provider = CachedProvider(provider, EmbeddingCache(cfg.cache_dir))
    return provider


def _provider_factory(cfg: RunConfig) -> Callable[[AnnotatedSession], EmbeddingProvider]:
    if cfg.provider == "oracle":
        return oracle_provider_for
    shared = _shared_provider(cfg)
    return lambda session: shared


def _emit(document: dict, output: str | None) -> None:
    text = schemas.dumps(document)
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _load_session(args, cfg: RunConfig) -> AnnotatedSession:
    session_id, frames, clips = schemas.parse_manifest(schemas.read_document(args.manifest))
    recipe = schemas.parse_recipe(schemas.read_document(args.recipe))
    if args.statuses:
        statuses = schemas.parse_status_map(schemas.read_document(args.statuses))
        statuses.validate_against(recipe)
    else:
        statuses = extract_object_statuses(recipe)
    return AnnotatedSession(session_id=session_id, frames=frames, clips=clips, recipe=recipe, statuses=statuses)


def _cmd_parse(args, cfg: RunConfig) -> int:
    recipe = normalize_recipe(_read_text(args.input))
    _emit(schemas.recipe_document(recipe), args.output)
    return 0


def _cmd_extract_status(args, cfg: RunConfig) -> int:
    recipe = schemas.parse_recipe(schemas.read_document(args.recipe))
    statuses = extract_object_statuses(recipe)
    _emit(schemas.status_map_document(statuses), args.output)
    return 0


def _cmd_align(args, cfg: RunConfig) -> int:
    session = _load_session(args, cfg)
    provider = _shared_provider(cfg)
    batch = [
        score_frame(frame, session.recipe, session.statuses, provider,
                    w=cfg.fusion_weight, status_reduce=cfg.status_reduce)
        for frame in session.frames
    ]
    _emit(schemas.frame_scores_document(session.session_id, provider.model_id, batch), args.output)
    if args.figure:
        avg_step = average_over_frames(batch, "step")
        avg_fused = average_over_frames(batch, "fused")
        report_mod.fig_step_scores(avg_step, avg_fused, args.figure,
                                   title=f"{session.session_id}: mean per-step similarity")
    return 0


def _cmd_track(args, cfg: RunConfig) -> int:
    if args.batch_size < 1:
        raise ValueError("batch size must be >= 1")
    session = _load_session(args, cfg)
    provider = _shared_provider(cfg)
    mode = cfg.mode if cfg.mode != "both" else "oscar"
    state = SessionState(recipe=session.recipe, debounce=cfg.debounce)
    frames = sorted(session.frames, key=lambda f: f.index)
    for lo in range(0, len(frames), args.batch_size):
        batch_frames = frames[lo : lo + args.batch_size]
        scored = [
            score_frame(frame, session.recipe, session.statuses, provider,
                        w=cfg.fusion_weight, status_reduce=cfg.status_reduce)
            for frame in batch_frames
        ]
        scores = average_over_frames(scored, "fused" if mode == "oscar" else "step")
        entry = predict(scores, state, mode, frames=[f.path for f in batch_frames])
        update_state(state, entry)
    _emit(schemas.history_log_document(session.session_id, mode, session.recipe, state.history), args.output)
    return 0


def _cmd_eval(args, cfg: RunConfig) -> int:
    sessions = load_corpus(args.corpus)
    run = evaluate(
        sessions,
        _provider_factory(cfg),
        seed=cfg.seed,
        modes=cfg.modes,
        config=_protocol(cfg),
        jobs=cfg.jobs,
        keep_logs=args.emit_logs,
    )
    model_id = cfg.model or ("oracle" if cfg.provider == "oracle" else "mock-64")
    document = report_mod.report_document(run.report, model_id, cfg.provider, cfg.seed, _protocol(cfg))
    table = report_mod.render_table(run.report, model_id)
    if args.json:
        sys.stdout.write(schemas.dumps(document))
    else:
        sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        schemas.write_document(out / "report.json", document)
        (out / "report.txt").write_text(table, encoding="utf-8")
        report_mod.write_trials_csv(run.trials, out / "trials.csv")
        if args.csv:
            report_mod.write_report_csv(run.report, model_id, out / "report.csv")
        if args.emit_logs:
            logs_dir = out / "logs"
            logs_dir.mkdir(exist_ok=True)
            recipes = {s.session_id: s.recipe for s in sessions}
            for (video, mode, trial), entries in sorted(run.logs.items()):
                document_log = schemas.history_log_document(video, mode, recipes[video], entries)
                schemas.write_document(logs_dir / f"{video}_{mode}_t{trial}.json", document_log)
        if not args.no_figures:
            figures = out / "figures"
            figures.mkdir(exist_ok=True)
            report_mod.fig_accuracy(run.report, model_id, figures / "accuracy.png")
            report_mod.fig_per_video(run.report, figures / "per_video.png")
    return 0


def _parse_sweep_spec(spec: str) -> tuple[str, list[float]]:
    knob, _, values = spec.partition("=")
    knob = knob.strip()
    if knob not in ("clutter", "repeat_steps", "lingering", "status_signal", "jitter"):
        raise ValueError(f"unknown sweep knob {knob!r}")
    parsed = [float(v) for v in values.split(",") if v.strip() != ""]
    if not parsed:
        raise ValueError("sweep needs at least one value")
    return knob, parsed


def _cmd_simulate(args, cfg: RunConfig) -> int:
    base = NoiseConfig(
        clutter=args.clutter,
        repeat_steps=args.repeat_steps,
        lingering=args.lingering,
        status_signal=args.status_signal,
        jitter=args.jitter,
    )
    out = Path(args.out)
    if args.sweep:
        knob, values = _parse_sweep_spec(args.sweep)
        grid = []
        for value in values:
            kwargs = {knob: int(value) if knob == "repeat_steps" else value}
            grid.append(NoiseConfig(**{**base.__dict__, **kwargs}))
        rows = sweep(
            grid,
            trials=args.cell_sessions,
            n_steps=args.steps,
            frames_per_step=args.frames_per_step,
            seed=cfg.seed,
            config=_protocol(cfg),
            jobs=cfg.jobs,
        )
        out.mkdir(parents=True, exist_ok=True)
        report_mod.write_sweep_csv(rows, out / "sweep.csv")
        report_mod.fig_sweep(rows, knob, out / "sweep.png")
        for row in rows:
            print(f"{knob}={getattr(row.noise, knob)}: baseline={row.baseline:.1f}% "
                  f"oscar={row.oscar:.1f}% delta={row.delta:+.1f}pp")
        return 0
    corpus = generate_corpus(
        n_sessions=args.sessions,
        n_steps=args.steps,
        frames_per_step=args.frames_per_step,
        noise=base,
        seed=cfg.seed,
    )
    write_corpus(corpus, out)
    print(f"wrote {len(corpus)} sessions to {out}")
    return 0


def _cmd_query(args, cfg: RunConfig) -> int:
    state = schemas.parse_history_log(schemas.read_document(args.log), debounce=cfg.debounce)
    answer = run_query(state, args.q)
    if args.json:
        _emit({"v": schemas.SCHEMA_VERSION, "query": args.q, "answer": answer}, None)
    else:
        if isinstance(answer, bool):
            print("true" if answer else "false")
        elif answer is None:
            print("none")
        elif isinstance(answer, list):
            print(" ".join(str(v) for v in answer) if answer else "none")
        else:
            print(answer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
