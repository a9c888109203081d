/** Manual clock: schedules callbacks at absolute times, fired by advance(). */

import type { Scheduler } from "../src/session.js";

interface Pending {
  at: number;
  fn: () => void;
  cancelled: boolean;
}

export class ManualClock {
  now = 0;
  private pending: Pending[] = [];

  scheduler: Scheduler = (fn, ms) => {
    const entry: Pending = { at: this.now + ms, fn, cancelled: false };
    this.pending.push(entry);
    return () => {
      entry.cancelled = true;
    };
  };

  advance(ms: number): void {
    const target = this.now + ms;
    for (;;) {
      const due = this.pending
        .filter((p) => !p.cancelled && p.at <= target)
        .sort((a, b) => a.at - b.at)[0];
      if (!due) {
        break;
      }
      this.pending = this.pending.filter((p) => p !== due);
      this.now = due.at;
      due.fn();
    }
    this.now = target;
  }
}
