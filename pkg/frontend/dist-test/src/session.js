/** Editor session state machine.
 *
 * Every edit schedules one render after the debounce window, each
 * submission gets a monotonically increasing snapshot id, in-flight
 * requests are aborted by newer ones, and a response is applied only when
 * its id is still the latest — so the preview always shows the render of
 * some submitted snapshot, never a mix, and late responses are discarded.
 *
 * DOM-free on purpose: the UI subscribes to view changes, and tests drive
 * the machine with a manual clock and a scripted render function.
 */
const realScheduler = (fn, ms) => {
    const id = setTimeout(fn, ms);
    return () => clearTimeout(id);
};
export class EditorSession {
    constructor(render, schedule = realScheduler, debounceMs = 300) {
        this.render = render;
        this.schedule = schedule;
        this.debounceMs = debounceMs;
        this.source = "";
        this.selectedContext = null;
        this.envText = null;
        this.view = {
            svg: "",
            diagnostics: [],
            shownSource: null,
            shownSnapshot: 0,
            busy: false,
            banner: null,
            canExport: false,
        };
        this.nextSnapshot = 0;
        this.latestSubmitted = 0;
        this.cancelDebounce = null;
        this.inflight = null;
        this.listeners = [];
    }
    subscribe(listener) {
        this.listeners.push(listener);
    }
    notify() {
        for (const listener of this.listeners) {
            listener(this.view);
        }
    }
    /** A keystroke: remember the text and (re)arm the debounce timer. */
    onEdit(newText) {
        this.source = newText;
        this.cancelDebounce?.();
        this.cancelDebounce = this.schedule(() => this.submit(), this.debounceMs);
    }
    /** Gallery clicks and tests want the render immediately. */
    loadExample(source, context = null) {
        this.source = source;
        this.selectedContext = context;
        this.flush();
    }
    setEnvText(text) {
        this.envText = text && text.trim() ? text : null;
        this.flush();
    }
    setContext(name) {
        this.selectedContext = name && name.trim() ? name : null;
        this.flush();
    }
    /** Cancel the debounce timer and submit the current source now. */
    flush() {
        this.cancelDebounce?.();
        this.cancelDebounce = null;
        void this.submit();
    }
    async submit() {
        this.cancelDebounce = null;
        const id = ++this.nextSnapshot;
        this.latestSubmitted = id;
        const snapshot = this.source;
        const body = { source: snapshot };
        if (this.selectedContext) {
            body.context = this.selectedContext;
        }
        if (this.envText !== null) {
            try {
                body.env = JSON.parse(this.envText);
            }
            catch (e) {
                this.view.banner = `environment JSON: ${e.message}`;
                this.notify();
                return;
            }
        }
        this.inflight?.abort();
        const controller = new AbortController();
        this.inflight = controller;
        this.view.busy = true;
        this.notify();
        try {
            const resp = await this.render(body, controller.signal);
            if (id !== this.latestSubmitted) {
                return; // stale: a newer snapshot was submitted meanwhile
            }
            this.view.svg = resp.svg;
            this.view.diagnostics = resp.diagnostics;
            this.view.shownSource = snapshot;
            this.view.shownSnapshot = id;
            this.view.busy = false;
            this.view.banner = null;
            this.view.canExport = resp.svg.length > 0;
            this.notify();
        }
        catch (e) {
            if (id !== this.latestSubmitted) {
                return; // aborted or superseded: nothing to report
            }
            this.view.busy = false;
            this.view.banner = `render failed: ${e.message}`;
            this.notify(); // previous preview stays; editing continues
        }
    }
}
