/** Inline diagnostic markers: the editor textarea sits on top of a backdrop
 * <pre> carrying the same text with <mark> wrappers at diagnostic spans. */
const ESCAPES = {
    "&": "&amp;",
    "<": "&lt;",
    ">": "&gt;",
};
export function escapeHtml(text) {
    return text.replace(/[&<>]/g, (ch) => ESCAPES[ch]);
}
/** Non-overlapping, clamped, source-ordered marker ranges. Overlaps keep
 * the earlier (more severe first) marker and trim the later one. */
export function markerRanges(source, diagnostics) {
    const order = { error: 0, warning: 1, info: 2 };
    const sorted = [...diagnostics].sort((a, b) => a.span.start - b.span.start || order[a.severity] - order[b.severity]);
    const out = [];
    let cursor = 0;
    for (const d of sorted) {
        let start = Math.max(Math.min(d.span.start, source.length), cursor);
        let end = Math.min(Math.max(d.span.end, start + 1), source.length);
        if (start >= source.length) {
            start = Math.max(0, source.length - 1);
            end = source.length;
        }
        if (end <= start) {
            continue;
        }
        out.push({ start, end, severity: d.severity, title: `${d.code}: ${d.message}` });
        cursor = end;
    }
    return out;
}
/** HTML for the backdrop: escaped source with <mark> at diagnostic spans. */
export function highlightHtml(source, diagnostics) {
    const ranges = markerRanges(source, diagnostics);
    let html = "";
    let cursor = 0;
    for (const r of ranges) {
        html += escapeHtml(source.slice(cursor, r.start));
        html += `<mark class="sev-${r.severity}" title="${escapeHtml(r.title)}">`;
        html += escapeHtml(source.slice(r.start, r.end));
        html += "</mark>";
        cursor = r.end;
    }
    html += escapeHtml(source.slice(cursor));
    // a trailing newline keeps the backdrop's height in sync while typing
    return html + "\n";
}
