import assert from "node:assert/strict";
import { test } from "node:test";

import type { Diagnostic } from "../src/api.js";
import { escapeHtml, highlightHtml, markerRanges } from "../src/markers.js";

function diag(start: number, end: number, severity: Diagnostic["severity"] = "error",
              code = "E-NESTED-ROLE"): Diagnostic {
  return { code, severity, message: "role messages may not nest", file: "x",
           span: { start, end, line: 1, col: 1 + start } };
}

test("escaping", () => {
  assert.equal(escapeHtml("a < b & c > d"), "a &lt; b &amp; c &gt; d");
});

test("single error marks its exact span", () => {
  const source = "U: {\n  S: X\n}\n";
  const html = highlightHtml(source, [diag(7, 9)]);
  assert.equal(html,
    'U: {\n  <mark class="sev-error" title="E-NESTED-ROLE: role messages may not nest">S:</mark> X\n}\n\n');
});

test("ranges are clamped and ordered", () => {
  const source = "short";
  const ranges = markerRanges(source, [diag(3, 99), diag(0, 2, "warning", "W-NAMING")]);
  assert.deepEqual(ranges.map((r) => [r.start, r.end, r.severity]),
                   [[0, 2, "warning"], [3, 5, "error"]]);
});

test("overlapping spans trim to distinct regions", () => {
  const ranges = markerRanges("abcdefgh", [diag(1, 5), diag(3, 7, "warning", "W")]);
  assert.deepEqual(ranges.map((r) => [r.start, r.end]), [[1, 5], [5, 7]]);
});

test("out-of-range span still yields a visible marker", () => {
  const ranges = markerRanges("ab", [diag(10, 12)]);
  assert.deepEqual(ranges.map((r) => [r.start, r.end]), [[1, 2]]);
});

test("html stays aligned with unmarked text", () => {
  const source = "line one\nline two\n";
  const html = highlightHtml(source, []);
  assert.equal(html, source + "\n");
});
