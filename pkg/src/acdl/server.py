"""Localhost HTTP API used by the CLI's serve mode and the playground.

Endpoints (JSON bodies, UTF-8):
  POST /api/parse   {source}                          -> {diagnostics, ast?}
  POST /api/render  {source, theme?, env?, context?}  -> {svg, diagnostics}
  POST /api/expand  {source, context, env}            -> {expanded, diagnostics}
  POST /api/diff    {a, b, context?, svg?}            -> {edits, svg?}
  GET  /api/examples                                  -> [{name, source}]

Malformed bodies get HTTP 400 with {"error": ...}; language diagnostics
always ride a 200 response.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import corpus_names, corpus_source
from .diagnostics import Severity, has_errors
from .diffs import diff, render_diff_svg
from .expansion import EnvironmentDocument, expand
from .formatter import format_document
from .nodes import ContextDef, to_json
from .parser import parse
from .render import Theme, layout, render_svg
from .semantics import resolve, validate


class ApiError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


def _require(body: dict, key: str) -> object:
    if key not in body:
        raise ApiError(f"missing field '{key}'")
    return body[key]


def _pick_context(doc, name: str | None) -> str:
    contexts = [i.name for i in doc.items if isinstance(i, ContextDef)]
    if name:
        if name not in contexts:
            raise ApiError(f"no context named '{name}'")
        return name
    if not contexts:
        raise ApiError("the source defines no context")
    return contexts[0]


def _diag_list(diags) -> list[dict]:
    return [d.to_json() for d in diags]


def api_parse(body: dict) -> dict:
    source = _require(body, "source")
    if not isinstance(source, str):
        raise ApiError("'source' must be a string")
    doc, diags = parse(source, "<request>")
    diags = diags + validate(doc, file="<request>")
    out: dict = {"diagnostics": _diag_list(diags)}
    if not has_errors(diags):
        out["ast"] = to_json(doc)
    return out


def api_render(body: dict) -> dict:
    source = _require(body, "source")
    if not isinstance(source, str):
        raise ApiError("'source' must be a string")
    theme = Theme.from_dict(body["theme"]) if isinstance(body.get("theme"), dict) \
        else Theme()
    doc, diags = parse(source, "<request>")
    diags = diags + validate(doc, file="<request>")
    if has_errors(diags):
        return {"svg": "", "diagnostics": _diag_list(diags)}
    if body.get("env") is not None:
        env = EnvironmentDocument.from_dict(body["env"])
        name = _pick_context(doc, body.get("context"))
        ctx, rdiags = resolve(doc, name, "<request>")
        diags = diags + rdiags
        if ctx is None or has_errors(rdiags):
            return {"svg": "", "diagnostics": _diag_list(diags)}
        prompt, ediags = expand(ctx, env, "<request>")
        diags = diags + ediags
        svg = render_svg(layout(prompt, theme))
    else:
        svg = render_svg(layout(doc, theme))
    return {"svg": svg, "diagnostics": _diag_list(diags)}


def api_expand(body: dict) -> dict:
    source = _require(body, "source")
    env_data = _require(body, "env")
    if not isinstance(source, str):
        raise ApiError("'source' must be a string")
    if not isinstance(env_data, dict):
        raise ApiError("'env' must be an object")
    doc, diags = parse(source, "<request>")
    diags = diags + validate(doc, file="<request>")
    if has_errors(diags):
        return {"expanded": None, "diagnostics": _diag_list(diags)}
    name = _pick_context(doc, body.get("context"))
    ctx, rdiags = resolve(doc, name, "<request>")
    diags = diags + rdiags
    if ctx is None or has_errors(rdiags):
        return {"expanded": None, "diagnostics": _diag_list(diags)}
    prompt, ediags = expand(ctx, EnvironmentDocument.from_dict(env_data), "<request>")
    return {"expanded": prompt.to_json(), "diagnostics": _diag_list(diags + ediags)}


def api_diff(body: dict) -> dict:
    a_src = _require(body, "a")
    b_src = _require(body, "b")
    if not isinstance(a_src, str) or not isinstance(b_src, str):
        raise ApiError("'a' and 'b' must be strings")
    doc_a, da = parse(a_src, "<a>")
    doc_b, db = parse(b_src, "<b>")
    if has_errors(da) or has_errors(db):
        return {"edits": None, "diagnostics": _diag_list(da + db)}
    name_a = _pick_context(doc_a, body.get("context"))
    name_b = _pick_context(doc_b, body.get("context"))
    ctx_a, ra = resolve(doc_a, name_a, "<a>")
    ctx_b, rb = resolve(doc_b, name_b, "<b>")
    if ctx_a is None or ctx_b is None or has_errors(ra) or has_errors(rb):
        return {"edits": None, "diagnostics": _diag_list(ra + rb)}
    script = diff(ctx_a, ctx_b)
    out = {"edits": script.to_json(), "diagnostics": []}
    if body.get("svg"):
        out["svg"] = render_diff_svg(ctx_a, ctx_b, script)
    return out


def api_format(body: dict) -> dict:
    source = _require(body, "source")
    if not isinstance(source, str):
        raise ApiError("'source' must be a string")
    doc, diags = parse(source, "<request>")
    if has_errors(diags):
        return {"formatted": None, "diagnostics": _diag_list(diags)}
    return {"formatted": format_document(doc), "diagnostics": _diag_list(diags)}


def api_examples() -> list[dict]:
    return [{"name": name, "source": corpus_source(name)}
            for name in corpus_names()]


_POST_ROUTES = {
    "/api/parse": api_parse,
    "/api/render": api_render,
    "/api/expand": api_expand,
    "/api/diff": api_diff,
    "/api/format": api_format,
}

_STATUS_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>acdl serve</title></head>
<body style="font-family: monospace; margin: 2rem">
<h1>acdl serve</h1>
<p>The API is up. Playground assets are not built; POST to
/api/parse, /api/render, /api/expand, or /api/diff.</p>
</body></html>
"""

_MIME = {".html": "text/html; charset=utf-8",
         ".js": "text/javascript; charset=utf-8",
         ".css": "text/css; charset=utf-8",
         ".svg": "image/svg+xml",
         ".json": "application/json",
         ".png": "image/png",
         ".ico": "image/x-icon",
         ".map": "application/json"}


class Handler(BaseHTTPRequestHandler):
    server_version = "acdl"
    static_dir: Path | None = None

    def log_message(self, fmt, *args):  # keep stdout/stderr quiet
        pass

    def _send_json(self, payload: object, status: int = 200) -> None:
        data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_POST(self) -> None:
        route = _POST_ROUTES.get(self.path)
        if route is None:
            self._send_json({"error": f"unknown endpoint {self.path}"}, 404)
            return
        try:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            body = json.loads(raw.decode("utf-8")) if raw else None
            if not isinstance(body, dict):
                raise ApiError("request body must be a JSON object")
            self._send_json(route(body))
        except (ApiError, json.JSONDecodeError, UnicodeDecodeError) as e:
            message = e.message if isinstance(e, ApiError) else f"malformed body: {e}"
            self._send_json({"error": message}, 400)

    def do_GET(self) -> None:
        if self.path == "/api/examples":
            self._send_json(api_examples())
            return
        self._serve_static()

    def _serve_static(self) -> None:
        path = self.path.split("?", 1)[0]
        if path == "/":
            path = "/index.html"
        if self.static_dir is not None:
            target = (self.static_dir / path.lstrip("/")).resolve()
            if (target.is_file()
                    and str(target).startswith(str(self.static_dir.resolve()))):
                data = target.read_bytes()
                self.send_response(200)
                self.send_header("Content-Type",
                                 _MIME.get(target.suffix, "application/octet-stream"))
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
                return
        if path == "/index.html":
            data = _STATUS_PAGE.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/html; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            return
        self.send_response(404)
        self.send_header("Content-Length", "0")
        self.end_headers()


def make_server(host: str = "127.0.0.1", port: int = 0,
                static_dir: str | Path | None = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (Handler,),
                   {"static_dir": Path(static_dir) if static_dir else None})
    return ThreadingHTTPServer((host, port), handler)


def serve(host: str = "127.0.0.1", port: int = 8787,
          static_dir: str | Path | None = None) -> None:
    httpd = make_server(host, port, static_dir)
    print(f"acdl serve: http://{host}:{httpd.server_address[1]}/")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
