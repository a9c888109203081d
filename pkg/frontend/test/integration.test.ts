/** End-to-end: the session machinery against a real `acdl serve` process,
 * exercising the gallery flow, the inline-marker latency bound, and live
 * stale-response ordering. */

import assert from "node:assert/strict";
import { spawn } from "node:child_process";
import { after, before, test } from "node:test";

import { ApiClient } from "../src/api.js";
import { highlightHtml } from "../src/markers.js";
import { EditorSession } from "../src/session.js";

const PORT = 8979;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ReturnType<typeof spawn>;

before(async () => {
  server = spawn("acdl", ["serve", "--port", String(PORT)], { stdio: "ignore" });
  const deadline = Date.now() + 10_000;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/api/examples`);
      if (resp.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error("acdl serve did not come up");
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
});

after(() => {
  server.kill();
});

function liveSession(): { session: EditorSession; api: ApiClient } {
  const api = new ApiClient((input, init) => fetch(BASE + input, init));
  const session = new EditorSession((body, signal) => api.render(body, signal));
  return { session, api };
}

function waitFor(session: EditorSession, pred: () => boolean, ms = 5000): Promise<void> {
  return new Promise((resolve, reject) => {
    if (pred()) {
      resolve();
      return;
    }
    const timer = setTimeout(() => reject(new Error("condition not reached")), ms);
    session.subscribe(() => {
      if (pred()) {
        clearTimeout(timer);
        resolve();
      }
    });
  });
}

test("gallery example renders role boxes in the preview", async () => {
  const { session, api } = liveSession();
  const examples = await api.examples();
  const toolAgent = examples.find((e) => e.name === "tool_agent");
  assert.ok(toolAgent, "tool_agent example is in the gallery");
  session.loadExample(toolAgent.source);
  await waitFor(session, () => session.view.svg.length > 0);
  const svg = session.view.svg;
  // amber system boxes and a blue user box from the default theme
  assert.ok(svg.includes('fill="#fef3c7"'), "system role boxes present");
  assert.ok(svg.includes('fill="#dbeafe"'), "user role box present");
  assert.ok(svg.includes(">INSTRUCTIONS<"), "content line present");
  assert.equal(session.view.diagnostics.filter((d) => d.severity === "error").length, 0);
  assert.equal(session.view.canExport, true);
});

test("nested-role error produces an inline marker within 1 s", async () => {
  const { session } = liveSession();
  const bad = "Bad[@T]: {\n  U: {\n    S: INSTRUCTIONS\n  }\n}\n";
  const started = Date.now();
  session.onEdit(bad); // real 300 ms debounce, real server round-trip
  await waitFor(session, () =>
    session.view.diagnostics.some((d) => d.code === "E-NESTED-ROLE"));
  const elapsed = Date.now() - started;
  assert.ok(elapsed < 1000, `marker took ${elapsed} ms`);
  const html = highlightHtml(bad, session.view.diagnostics);
  assert.match(html, /<mark class="sev-error"[^>]*>S:<\/mark>/);
});

test("rapid edits against the live server settle on the last snapshot", async () => {
  const { session } = liveSession();
  const variant = (n: number) =>
    `Rapid[@T]: {\n  S: VERSION_${n}\n}\n`;
  for (let n = 1; n <= 5; n += 1) {
    session.onEdit(variant(n));
    await new Promise((resolve) => setTimeout(resolve, 20));
  }
  await waitFor(session, () => session.view.shownSource === variant(5));
  assert.ok(session.view.svg.includes("VERSION_5"));
  // and nothing older ever lands afterwards
  await new Promise((resolve) => setTimeout(resolve, 500));
  assert.equal(session.view.shownSource, variant(5));
  assert.ok(!session.view.svg.includes("VERSION_4"));
});
