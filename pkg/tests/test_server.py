import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

import acdl
from acdl.server import make_server


@pytest.fixture(scope="module")
def server():
    httpd = make_server(port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()


def post(base, path, payload, raw=False):
    data = payload if raw else json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(base + path, data=data,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            return r.status, json.loads(r.read().decode("utf-8"))
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read().decode("utf-8"))


def get(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as r:
        return r.status, r.read()


def test_render_tool_agent(server, corpus):
    status, body = post(server, "/api/render", {"source": corpus["tool_agent"]})
    assert status == 200
    assert body["svg"].startswith("<svg") and len(body["svg"]) > 100
    assert [d for d in body["diagnostics"] if d["severity"] == "error"] == []


def test_render_malformed_body_is_400(server):
    status, body = post(server, "/api/render", b"{broken", raw=True)
    assert status == 400 and "error" in body
    status, body = post(server, "/api/render", {"nope": 1})
    assert status == 400 and "error" in body


def test_parse_endpoint(server, corpus):
    status, body = post(server, "/api/parse", {"source": corpus["basic_rag"]})
    assert status == 200
    assert body["ast"]["type"] == "Document"
    status, body = post(server, "/api/parse",
                        {"source": "Bad[@T]: {\n  U: {\n    S: X\n  }\n}\n"})
    assert status == 200
    codes = [d["code"] for d in body["diagnostics"]]
    assert "E-NESTED-ROLE" in codes and "ast" not in body


def test_parse_diagnostics_never_4xx(server):
    status, body = post(server, "/api/parse", {"source": "%%%%"})
    assert status == 200
    assert any(d["severity"] == "error" for d in body["diagnostics"])


def test_expand_endpoint(server, corpus):
    status, body = post(server, "/api/expand",
                        {"source": corpus["tool_agent"], "context": "ToolAgent",
                         "env": {"time": [1]}})
    assert status == 200
    assert [m["role"] for m in body["expanded"]["messages"]] == ["S", "U", "S"]


def test_render_expanded_instance(server, corpus):
    status, body = post(server, "/api/render",
                        {"source": corpus["react_step_loop"],
                         "context": "React1", "env": {"time": [2]}})
    assert status == 200 and body["svg"].startswith("<svg")


def test_diff_endpoint(server, corpus):
    status, body = post(server, "/api/diff",
                        {"a": corpus["mint_react"],
                         "b": corpus["mint_react_tool_role"], "svg": True})
    assert status == 200
    assert body["edits"]["edits"][0]["op"] == "replace-role"
    assert body["svg"].startswith("<svg")


def test_examples_gallery(server):
    status, raw = get(server, "/api/examples")
    assert status == 200
    examples = json.loads(raw)
    names = {e["name"] for e in examples}
    assert "tool_agent" in names and all("source" in e for e in examples)


def test_status_page_without_frontend(server):
    status, raw = get(server, "/")
    assert status == 200 and b"acdl" in raw


def test_unknown_endpoint_404(server):
    status, body = post(server, "/api/nope", {"x": 1})
    assert status == 404


def test_concurrent_requests(server, corpus):
    def call(name):
        return post(server, "/api/render", {"source": corpus[name]})

    names = list(corpus)[:8]
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(call, names))
    assert all(status == 200 and body["svg"] for status, body in results)


def test_deterministic_across_requests(server, corpus):
    results = {post(server, "/api/render",
                    {"source": corpus["tool_agent"]})[1]["svg"] for _ in range(3)}
    assert len(results) == 1
