"""acdl command line: check, fmt, render, expand, diff, conform, serve.

Exit codes: 0 success, 1 error-severity diagnostics (or a failing
conformance verdict), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .conformance import check_trace, load_trace
from .diagnostics import EMPTY_SPAN, Diagnostic, Severity, has_errors, to_jsonl
from .diffs import diff, format_diff, render_diff_svg
from .expansion import EnvironmentDocument, expand, expand_series
from .formatter import format_document
from .nodes import ContextDef
from .parser import parse
from .render import Theme, layout, render_svg
from .semantics import build_symbols, resolve, validate
from .server import serve


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    return args.func(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acdl",
                                     description="ACDL context-description toolchain")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("check", help="parse and validate files")
    p.add_argument("files", nargs="+")
    p.add_argument("--symbols", action="store_true", help="print the symbol table")
    p.add_argument("--strict", action="store_true", help="flag arity inconsistencies")
    p.add_argument("--json", action="store_true", help="diagnostics as JSON lines")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fmt", help="canonical formatting")
    p.add_argument("files", nargs="+")
    p.add_argument("--write", action="store_true", help="rewrite files in place")
    p.set_defaults(func=cmd_fmt)

    p = sub.add_parser("render", help="render a diagram as SVG")
    p.add_argument("file")
    p.add_argument("--theme", help="theme JSON file")
    p.add_argument("--expanded", metavar="ENV",
                   help="render the expansion at this environment instead of "
                        "the structural view")
    p.add_argument("--context", help="context name (default: first in file)")
    p.add_argument("--png", action="store_true",
                   help="also rasterize via rsvg-convert or inkscape (needs -o)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("expand", help="expand a context at a time point")
    p.add_argument("file")
    p.add_argument("--env", required=True, help="environment JSON file")
    p.add_argument("--series", nargs="*", metavar="ENV",
                   help="additional environments for a series expansion")
    p.add_argument("--context", help="context name (default: first in file)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("diff", help="structural diff of two specifications")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--context", help="context name present in both files")
    p.add_argument("--svg", action="store_true", help="emit the annotated SVG")
    p.add_argument("--json", action="store_true", help="edit script as JSON")
    p.add_argument("--comments", action="store_true",
                   help="also report comment-only differences")
    p.add_argument("-o", "--output", help="output file for --svg")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("conform", help="check a chat trace against a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--env", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--mode", choices=["roles", "content"], default="roles")
    p.add_argument("--context", help="context name (default: first in file)")
    p.add_argument("--jsonl", action="store_true", help="trace is JSON lines")
    p.add_argument("--completion", action="store_true",
                   help="N-format specs match any single-message role")
    p.add_argument("--normalize-ws", action="store_true",
                   help="collapse whitespace runs before matching")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_conform)

    p = sub.add_parser("serve", help="serve the HTTP API and playground")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="playground asset directory")
    p.set_defaults(func=cmd_serve)

    return parser


# ------------------------------------------------------------------ helpers


def _read(path: str) -> str | None:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        print(f"acdl: cannot read {path}: {e.strerror}", file=sys.stderr)
        return None


def _print_diags(diags: list[Diagnostic], as_json: bool) -> None:
    if not diags:
        return
    if as_json:
        print(to_jsonl(diags))
    else:
        for d in diags:
            print(d.to_line())


def _load_theme(path: str | None) -> Theme:
    path = path or os.environ.get("ACDL_THEME")
    if not path:
        return Theme()
    text = _read(path)
    if text is None:
        return Theme()
    return Theme.from_json(text)


def _pick_context(doc, name: str | None) -> str | None:
    contexts = [i.name for i in doc.items if isinstance(i, ContextDef)]
    if name:
        return name if name in contexts else None
    return contexts[0] if contexts else None


def _resolve_from_file(path: str, context: str | None):
    """Parse, validate, resolve; returns (ctx, diags) with ctx None on error."""
    text = _read(path)
    if text is None:
        return None, []
    doc, diags = parse(text, path)
    diags += validate(doc, file=path)
    if has_errors(diags):
        return None, diags
    name = _pick_context(doc, context)
    if name is None:
        diags.append(Diagnostic("E-NO-CONTEXT", Severity.ERROR,
                                "no matching context definition", EMPTY_SPAN, path))
        return None, diags
    ctx, rdiags = resolve(doc, name, path)
    return ctx, diags + rdiags


# ----------------------------------------------------------------- commands


def cmd_check(args) -> int:
    worst = 0
    for path in args.files:
        text = _read(path)
        if text is None:
            return 2
        doc, diags = parse(text, path)
        diags += validate(doc, strict=args.strict, file=path)
        _print_diags(diags, args.json)
        if args.symbols:
            print(json.dumps(build_symbols(doc).to_json(), indent=2,
                             ensure_ascii=False))
        if has_errors(diags):
            worst = 1
    return worst


def cmd_fmt(args) -> int:
    rc = 0
    for path in args.files:
        text = _read(path)
        if text is None:
            return 2
        doc, diags = parse(text, path)
        if has_errors(diags):
            _print_diags(diags, False)
            rc = 1
            continue
        formatted = format_document(doc)
        if args.write:
            if formatted != text:
                Path(path).write_text(formatted, encoding="utf-8")
        else:
            sys.stdout.write(formatted)
    return rc


def cmd_render(args) -> int:
    theme = _load_theme(args.theme)
    if args.expanded:
        ctx, diags = _resolve_from_file(args.file, args.context)
        if ctx is None:
            _print_diags(diags, False)
            return 1
        env_text = _read(args.expanded)
        if env_text is None:
            return 2
        prompt, ediags = expand(ctx, EnvironmentDocument.from_json(env_text), args.file)
        _print_diags([d for d in diags + ediags], False)
        svg = render_svg(layout(prompt, theme))
        rc = 1 if has_errors(diags + ediags) else 0
    else:
        text = _read(args.file)
        if text is None:
            return 2
        doc, diags = parse(text, args.file)
        diags += validate(doc, file=args.file)
        if has_errors(diags):
            _print_diags(diags, False)
            return 1
        _print_diags(diags, False)
        svg = render_svg(layout(doc, theme))
        rc = 0
    if args.output:
        Path(args.output).write_text(svg, encoding="utf-8")
        if args.png:
            png_rc = _rasterize(args.output)
            rc = rc or png_rc
    else:
        if args.png:
            print("acdl: --png needs -o FILE", file=sys.stderr)
            return 2
        sys.stdout.write(svg)
    return rc


def _rasterize(svg_path: str) -> int:
    """PNG export rides an external rasterizer; the SVG itself never does."""
    import shutil
    import subprocess

    png_path = str(Path(svg_path).with_suffix(".png"))
    if shutil.which("rsvg-convert"):
        cmd = ["rsvg-convert", "-o", png_path, svg_path]
    elif shutil.which("inkscape"):
        cmd = ["inkscape", svg_path, "--export-type=png",
               f"--export-filename={png_path}"]
    else:
        print("acdl: no rasterizer found (install rsvg-convert or inkscape)",
              file=sys.stderr)
        return 1
    result = subprocess.run(cmd, capture_output=True)
    if result.returncode != 0:
        print(f"acdl: rasterizer failed: {result.stderr.decode(errors='replace')}",
              file=sys.stderr)
        return 1
    return 0


def cmd_expand(args) -> int:
    ctx, diags = _resolve_from_file(args.file, args.context)
    if ctx is None:
        _print_diags(diags, False)
        return 1
    env_text = _read(args.env)
    if env_text is None:
        return 2
    envs = [EnvironmentDocument.from_json(env_text)]
    for extra in args.series or []:
        extra_text = _read(extra)
        if extra_text is None:
            return 2
        envs.append(EnvironmentDocument.from_json(extra_text))
    if len(envs) > 1:
        prompts, ediags = expand_series(ctx, envs, args.file)
        payload = [p.to_json() for p in prompts]
    else:
        prompt, ediags = expand(ctx, envs[0], args.file)
        prompts = [prompt]
        payload = prompt.to_json()
    _print_diags(diags + ediags, False)
    if args.json:
        print(json.dumps(payload, ensure_ascii=False))
    else:
        for i, p in enumerate(prompts):
            if len(prompts) > 1:
                print(f"--- expansion {i + 1} ---")
            for m in p.messages:
                print(f"{m.role}:")
                for s in m.slots:
                    marker = "=" if s.bound else "~"
                    print(f"  {marker} {s.text}")
    return 1 if has_errors(diags + ediags) else 0


def cmd_diff(args) -> int:
    ctx_a, diags_a = _resolve_from_file(args.a, args.context)
    ctx_b, diags_b = _resolve_from_file(args.b, args.context)
    if ctx_a is None or ctx_b is None:
        _print_diags(diags_a + diags_b, False)
        return 1
    script = diff(ctx_a, ctx_b)
    if args.comments:
        from .nodes import Comment, walk
        a_comments = sorted(c.text for c in walk(ctx_a) if isinstance(c, Comment))
        b_comments = sorted(c.text for c in walk(ctx_b) if isinstance(c, Comment))
        if a_comments != b_comments:
            script.mark_changes.append("comments differ")
    if args.svg:
        svg = render_diff_svg(ctx_a, ctx_b, script, _load_theme(None))
        if args.output:
            Path(args.output).write_text(svg, encoding="utf-8")
        else:
            sys.stdout.write(svg)
    elif args.json:
        print(script.dumps())
    else:
        sys.stdout.write(format_diff(script))
    return 0


def cmd_conform(args) -> int:
    ctx, diags = _resolve_from_file(args.spec, args.context)
    if ctx is None:
        _print_diags(diags, False)
        return 1
    env_text = _read(args.env)
    trace_text = _read(args.trace)
    if env_text is None or trace_text is None:
        return 2
    prompt, ediags = expand(ctx, EnvironmentDocument.from_json(env_text), args.spec)
    trace, tdiags = load_trace(trace_text, jsonl=args.jsonl, file=args.trace)
    _print_diags(diags + ediags + tdiags, False)
    if trace is None or has_errors(diags + ediags + tdiags):
        return 1
    mode = "content" if args.mode == "content" else "roles-only"
    report = check_trace(prompt, trace, mode, completion=args.completion,
                         normalize_ws=args.normalize_ws)
    if args.json:
        print(json.dumps(report.to_json(), ensure_ascii=False))
    else:
        sys.stdout.write(report.to_text())
    return 0 if report.passed else 1


def cmd_serve(args) -> int:
    static = args.static or os.environ.get("ACDL_PLAYGROUND_DIST")
    if static is None:
        guess = Path.cwd() / "frontend" / "dist"
        if guess.is_dir():
            static = str(guess)
    serve(args.host, args.port, static)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
