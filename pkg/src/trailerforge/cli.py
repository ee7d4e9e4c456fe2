"""Command-line entry point: generate, validate, inspect."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import subprocess
import sys
from pathlib import Path

from .adapters import AdapterRegistry, Cassette
from .corpus import load_manifest
from .errors import TrailerForgeError
from .pipeline import OUTPUT_FILENAMES, PipelineConfig, compile_pathway, write_outputs
from .selection import FilterConfig, eligible_resources
from .templates import load_template

log = logging.getLogger("trailerforge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trailerforge",
        description="Compile a learning pathway into a trailer storyboard.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="compile a pathway into storyboard artifacts")
    gen.add_argument("--manifest", required=True, help="pathway manifest JSON")
    gen.add_argument("--template", required=True, help="template JSON")
    gen.add_argument("--adapters", help="adapters config JSON (default: all built-in stubs)")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    gen.add_argument("--reading-wpm", type=float, default=200.0, help="reading speed (default 200)")
    gen.add_argument("--speaking-wpm", type=float, default=150.0, help="speaking rate (default 150)")
    cassette = gen.add_mutually_exclusive_group()
    cassette.add_argument("--record", help="record adapter responses to this cassette file")
    cassette.add_argument("--replay", help="replay adapter responses from this cassette file")
    gen.add_argument(
        "--render-cmd",
        help="external renderer command; '{}' is replaced by the render plan path",
    )

    val = sub.add_parser("validate", help="run load-time validation without generating")
    val.add_argument("--manifest", required=True)
    val.add_argument("--template", required=True)

    ins = sub.add_parser("inspect", help="pretty-print a section of a storyboard")
    ins.add_argument("storyboard", help="path to storyboard.json")
    ins.add_argument(
        "section",
        choices=("timeline", "audit", "durations", "outline"),
        help="which section to print",
    )
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("TRAILERFORGE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _error_payload(exc: Exception) -> str:
    return json.dumps(
        {"error": {"type": type(exc).__name__, "message": str(exc)}},
        ensure_ascii=False,
    )


def cmd_generate(args) -> int:
    config = PipelineConfig(
        seed=args.seed,
        reading_speed_wpm=args.reading_wpm,
        speaking_rate_wpm=args.speaking_wpm,
    )
    out_dir = Path(args.out)
    registry = None
    try:
        if args.adapters:
            registry = AdapterRegistry.from_config(args.adapters)
        else:
            registry = AdapterRegistry.builtin()
        if args.replay:
            registry.use_replay(Cassette.load(args.replay))
        recording = registry.start_recording() if args.record else None

        result = compile_pathway(args.manifest, args.template, registry, config)
        written = write_outputs(result, out_dir)
        if recording is not None:
            recording.save(args.record)
    except (TrailerForgeError, OSError, json.JSONDecodeError) as exc:
        log.debug("generation failed", exc_info=True)
        for name in OUTPUT_FILENAMES:
            stale = out_dir / name
            if stale.exists():
                stale.unlink()
        print(_error_payload(exc), file=sys.stderr)
        return 1
    finally:
        if registry is not None:
            registry.close()

    storyboard = result.storyboard
    n_fragments = len(storyboard.fragments)
    n_frames = sum(len(f.frames) for f in storyboard.fragments)
    total_s = storyboard.total_duration_ms() / 1000.0
    print(
        f"storyboard: {n_fragments} fragments, {n_frames} frames, "
        f"{total_s:.3f} s total -> {out_dir}"
    )

    if args.render_cmd:
        renderplan_path = out_dir / "renderplan.json"
        cmd = [part.replace("{}", str(renderplan_path)) for part in shlex.split(args.render_cmd)]
        log.info("running renderer: %s", cmd)
        status = subprocess.call(cmd)
        if status != 0:
            return status
    return 0


def cmd_validate(args) -> int:
    findings = []

    template = None
    try:
        template = load_template(args.template)
    except TrailerForgeError as exc:
        findings.append({"source": "template", "code": type(exc).__name__, "message": str(exc)})

    try:
        pathway, _creator = load_manifest(args.manifest)
        k = template.constraints.outline_slots if template is not None else 2
        eligible_resources(pathway, FilterConfig(k_required=max(2, k)))
    except TrailerForgeError as exc:
        findings.append({"source": "manifest", "code": type(exc).__name__, "message": str(exc)})

    print(json.dumps(findings, ensure_ascii=False))
    return 1 if findings else 0


def cmd_inspect(args) -> int:
    try:
        payload = json.loads(Path(args.storyboard).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(_error_payload(exc), file=sys.stderr)
        return 1

    fragments = payload.get("fragments", [])
    if args.section == "timeline":
        for frag in fragments:
            frames = ", ".join(frame["id"] for frame in frag["frames"])
            print(f"{frag['kind']}: {frames}")
    elif args.section == "audit":
        print(json.dumps(payload.get("audit", {}), indent=2, sort_keys=True, ensure_ascii=False))
    elif args.section == "durations":
        total = 0.0
        for frag in fragments:
            for frame in frag["frames"]:
                print(f"{frame['id']}\t{frame['duration_s']:.3f}")
                total += frame["duration_s"]
        print(f"total\t{total:.3f}")
    elif args.section == "outline":
        for frag in fragments:
            if frag["kind"] != "outline":
                continue
            for frame in frag["frames"]:
                items = sorted(
                    (k, v) for k, v in frame["elements"].items() if k.startswith("outline_item_")
                )
                for key, value in items:
                    print(f"{key}\t{value}")
    return 0


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_inspect(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
