/** Manual clock: schedules callbacks at absolute times, fired by advance(). */
export class ManualClock {
    constructor() {
        this.now = 0;
        this.pending = [];
        this.scheduler = (fn, ms) => {
            const entry = { at: this.now + ms, fn, cancelled: false };
            this.pending.push(entry);
            return () => {
                entry.cancelled = true;
            };
        };
    }
    advance(ms) {
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
