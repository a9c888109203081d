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

import type { Diagnostic, RenderRequest, RenderResponse } from "./api.js";

export interface SessionView {
  svg: string;
  diagnostics: Diagnostic[];
  /** The submitted source this view was rendered from (never a phantom). */
  shownSource: string | null;
  shownSnapshot: number;
  busy: boolean;
  /** Non-blocking banner text; the editor stays usable. */
  banner: string | null;
  canExport: boolean;
}

export type RenderFn = (
  body: RenderRequest,
  signal: AbortSignal,
) => Promise<RenderResponse>;

/** Returns a cancel function, like a typed setTimeout. */
export type Scheduler = (fn: () => void, ms: number) => () => void;

const realScheduler: Scheduler = (fn, ms) => {
  const id = setTimeout(fn, ms);
  return () => clearTimeout(id);
};

export class EditorSession {
  source = "";
  selectedContext: string | null = null;
  envText: string | null = null;

  readonly view: SessionView = {
    svg: "",
    diagnostics: [],
    shownSource: null,
    shownSnapshot: 0,
    busy: false,
    banner: null,
    canExport: false,
  };

  private nextSnapshot = 0;
  private latestSubmitted = 0;
  private cancelDebounce: (() => void) | null = null;
  private inflight: AbortController | null = null;
  private listeners: Array<(view: SessionView) => void> = [];

  constructor(
    private readonly render: RenderFn,
    private readonly schedule: Scheduler = realScheduler,
    readonly debounceMs: number = 300,
  ) {}

  subscribe(listener: (view: SessionView) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this.view);
    }
  }

  /** A keystroke: remember the text and (re)arm the debounce timer. */
  onEdit(newText: string): void {
    this.source = newText;
    this.cancelDebounce?.();
    this.cancelDebounce = this.schedule(() => this.submit(), this.debounceMs);
  }

  /** Gallery clicks and tests want the render immediately. */
  loadExample(source: string, context: string | null = null): void {
    this.source = source;
    this.selectedContext = context;
    this.flush();
  }

  setEnvText(text: string | null): void {
    this.envText = text && text.trim() ? text : null;
    this.flush();
  }

  setContext(name: string | null): void {
    this.selectedContext = name && name.trim() ? name : null;
    this.flush();
  }

  /** Cancel the debounce timer and submit the current source now. */
  flush(): void {
    this.cancelDebounce?.();
    this.cancelDebounce = null;
    void this.submit();
  }

  private async submit(): Promise<void> {
    this.cancelDebounce = null;
    const id = ++this.nextSnapshot;
    this.latestSubmitted = id;
    const snapshot = this.source;

    const body: RenderRequest = { source: snapshot };
    if (this.selectedContext) {
      body.context = this.selectedContext;
    }
    if (this.envText !== null) {
      try {
        body.env = JSON.parse(this.envText);
      } catch (e) {
        this.view.banner = `environment JSON: ${(e as Error).message}`;
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
    } catch (e) {
      if (id !== this.latestSubmitted) {
        return; // aborted or superseded: nothing to report
      }
      this.view.busy = false;
      this.view.banner = `render failed: ${(e as Error).message}`;
      this.notify(); // previous preview stays; editing continues
    }
  }
}
