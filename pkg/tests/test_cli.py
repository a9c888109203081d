import json
from pathlib import Path

import pytest

import acdl
from acdl.cli import main

from conftest import FIXTURES


@pytest.fixture
def workdir(tmp_path, corpus):
    for name in ("tool_agent", "mint_react", "mint_react_tool_role", "react_step_loop"):
        (tmp_path / f"{name}.acdl").write_text(corpus[name], encoding="utf-8")
    (tmp_path / "bad_nested_role.acdl").write_text(
        "Bad[@T]: {\n  U: {\n    S: INSTRUCTIONS\n  }\n}\n", encoding="utf-8")
    return tmp_path


def test_check_quiet_success(workdir, capsys):
    rc = main(["check", str(workdir / "tool_agent.acdl")])
    assert rc == 0
    assert capsys.readouterr().out == ""


def test_check_reports_nested_role(workdir, capsys):
    rc = main(["check", str(workdir / "bad_nested_role.acdl")])
    out = capsys.readouterr().out
    assert rc == 1
    lines = [l for l in out.splitlines() if l.strip()]
    assert len(lines) == 1 and "E-NESTED-ROLE" in lines[0]


def test_check_json_diagnostics(workdir, capsys):
    rc = main(["check", "--json", str(workdir / "bad_nested_role.acdl")])
    assert rc == 1
    line = capsys.readouterr().out.strip()
    payload = json.loads(line)
    assert payload["code"] == "E-NESTED-ROLE"
    assert set(payload["span"]) == {"start", "end", "line", "col"}
    assert payload["severity"] == "error"


def test_check_symbols(workdir, capsys):
    rc = main(["check", "--symbols", str(workdir / "tool_agent.acdl")])
    assert rc == 0
    table = json.loads(capsys.readouterr().out)
    assert "ToolAgent" in table["contexts"]


def test_fmt_idempotent_on_bytes(workdir, capsys):
    path = workdir / "tool_agent.acdl"
    assert main(["fmt", str(path)]) == 0
    once = capsys.readouterr().out
    assert main(["fmt", "--write", str(path)]) == 0
    first = path.read_text()
    assert first == once
    assert main(["fmt", "--write", str(path)]) == 0
    assert path.read_text() == first  # second run is a byte-level no-op


def test_fmt_refuses_broken_input(workdir, capsys):
    rc = main(["fmt", str(workdir / "bad_nested_role.acdl")])
    assert rc == 1


def test_render_matches_golden(workdir, tmp_path):
    out = tmp_path / "out.svg"
    rc = main(["render", str(workdir / "tool_agent.acdl"), "-o", str(out)])
    assert rc == 0
    golden = (Path(__file__).parent / "goldens" / "tool_agent.svg").read_text()
    assert out.read_text() == golden


def test_render_expanded(workdir, tmp_path, capsys):
    env = FIXTURES / "envs" / "toolagent_t1.json"
    rc = main(["render", str(workdir / "tool_agent.acdl"),
               "--expanded", str(env), "-o", str(tmp_path / "x.svg")])
    assert rc == 0
    svg = (tmp_path / "x.svg").read_text()
    assert svg.startswith("<svg") and "INSTRUCTIONS" in svg


def test_expand_json(workdir, capsys):
    env = FIXTURES / "envs" / "toolagent_t3.json"
    rc = main(["expand", str(workdir / "tool_agent.acdl"), "--env", str(env), "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert [m["role"] for m in payload["messages"]] == ["S", "U", "U", "A", "S"]


def test_expand_series(workdir, capsys):
    envs = [str(FIXTURES / "envs" / f"react1_t{t}.json") for t in (1, 2, 3)]
    rc = main(["expand", str(workdir / "react_step_loop.acdl"),
               "--env", envs[0], "--series", envs[1], envs[2], "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert [len(p["messages"]) for p in payload] == [2, 4, 6]


def test_diff_text_and_json(workdir, capsys):
    rc = main(["diff", str(workdir / "mint_react.acdl"),
               str(workdir / "mint_react_tool_role.acdl")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "~ role U -> T" in out
    rc = main(["diff", "--json", str(workdir / "mint_react.acdl"),
               str(workdir / "mint_react_tool_role.acdl")])
    payload = json.loads(capsys.readouterr().out)
    assert payload["edits"][0]["op"] == "replace-role"


def test_diff_svg(workdir, tmp_path):
    out = tmp_path / "d.svg"
    rc = main(["diff", "--svg", "-o", str(out),
               str(workdir / "mint_react.acdl"),
               str(workdir / "mint_react_tool_role.acdl")])
    assert rc == 0
    assert out.read_text().startswith("<svg")


def test_conform_pass_and_fail(workdir, tmp_path, capsys):
    env = FIXTURES / "envs" / "react1_t3.json"
    good = tmp_path / "good.json"
    good.write_text(json.dumps([
        {"role": r, "content": ""} for r in
        ("system", "user", "assistant", "user", "assistant", "user")]))
    rc = main(["conform", "--spec", str(workdir / "react_step_loop.acdl"),
               "--env", str(env), "--trace", str(good)])
    assert rc == 0
    assert capsys.readouterr().out.startswith("pass")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([
        {"role": r, "content": ""} for r in
        ("system", "user", "user", "assistant", "assistant", "user")]))
    rc = main(["conform", "--spec", str(workdir / "react_step_loop.acdl"),
               "--env", str(env), "--trace", str(bad), "--json"])
    assert rc == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "fail" and len(payload["mismatches"]) >= 1


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
    assert main(["render"]) == 2  # missing positional


def test_theme_env_var(workdir, tmp_path, monkeypatch, capsys):
    theme = tmp_path / "theme.json"
    theme.write_text('{"roles":{"S":{"fill":"#123456"}}}')
    monkeypatch.setenv("ACDL_THEME", str(theme))
    rc = main(["render", str(workdir / "tool_agent.acdl"),
               "-o", str(tmp_path / "t.svg")])
    assert rc == 0
    assert "#123456" in (tmp_path / "t.svg").read_text()


def test_missing_file_is_usage_error(capsys):
    assert main(["check", "/nonexistent/q.acdl"]) == 2
