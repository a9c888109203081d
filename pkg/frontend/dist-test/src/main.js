/** Playground wiring: textarea + marker backdrop, live preview panel,
 * diagnostics list, example gallery, env/context controls, export. */
import { ApiClient } from "./api.js";
import { exportPng, exportSvg } from "./exporter.js";
import { highlightHtml } from "./markers.js";
import { EditorSession } from "./session.js";
const api = new ApiClient();
const session = new EditorSession((body, signal) => api.render(body, signal));
function el(id) {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing #${id}`);
    }
    return node;
}
const editor = el("editor");
const backdrop = el("editor-backdrop");
const preview = el("preview");
const diagList = el("diagnostics");
const banner = el("banner");
const gallery = el("gallery");
const contextInput = el("context-name");
const envInput = el("env-json");
const svgButton = el("export-svg");
const pngButton = el("export-png");
const busyDot = el("busy");
function refreshMarkers(diagnostics) {
    backdrop.innerHTML = highlightHtml(editor.value, diagnostics);
}
session.subscribe((view) => {
    if (view.shownSource !== null) {
        preview.innerHTML = view.svg || "<p class='empty'>no diagram</p>";
    }
    // spans are only valid against the snapshot they were computed for
    refreshMarkers(view.shownSource === editor.value ? view.diagnostics : []);
    diagList.innerHTML = "";
    for (const d of view.diagnostics) {
        const li = document.createElement("li");
        li.className = `sev-${d.severity}`;
        li.textContent = `${d.span.line}:${d.span.col} ${d.severity}[${d.code}] ${d.message}`;
        li.addEventListener("click", () => {
            editor.focus();
            editor.setSelectionRange(d.span.start, d.span.end);
        });
        diagList.appendChild(li);
    }
    banner.textContent = view.banner ?? "";
    banner.hidden = view.banner === null;
    busyDot.hidden = !view.busy;
    svgButton.disabled = !view.canExport;
    pngButton.disabled = !view.canExport;
});
editor.addEventListener("input", () => {
    // markers for the previous snapshot no longer line up with the new text
    refreshMarkers([]);
    session.onEdit(editor.value);
});
editor.addEventListener("scroll", () => {
    backdrop.scrollTop = editor.scrollTop;
    backdrop.scrollLeft = editor.scrollLeft;
});
contextInput.addEventListener("change", () => session.setContext(contextInput.value));
envInput.addEventListener("change", () => session.setEnvText(envInput.value));
svgButton.addEventListener("click", () => exportSvg(session.view.svg));
pngButton.addEventListener("click", () => {
    void exportPng(session.view.svg).catch((e) => {
        banner.textContent = `png export failed: ${e.message}`;
        banner.hidden = false;
    });
});
async function loadGallery() {
    try {
        const examples = await api.examples();
        for (const example of examples) {
            const li = document.createElement("li");
            const button = document.createElement("button");
            button.textContent = example.name;
            button.addEventListener("click", () => {
                editor.value = example.source;
                refreshMarkers([]);
                session.loadExample(example.source);
            });
            li.appendChild(button);
            gallery.appendChild(li);
        }
        const toolAgent = examples.find((e) => e.name === "tool_agent") ?? examples[0];
        if (toolAgent) {
            editor.value = toolAgent.source;
            session.loadExample(toolAgent.source);
        }
    }
    catch (e) {
        banner.textContent = `could not load examples: ${e.message}`;
        banner.hidden = false;
    }
}
void loadGallery();
