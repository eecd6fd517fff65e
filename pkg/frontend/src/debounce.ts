// Debounced scheduler that keeps at most one request pair in flight.
// Rapid inputs collapse into the latest operation; an operation arriving
// while another is running is queued (latest wins) and fires on completion.

export class RequestScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private pending: (() => Promise<void>) | null = null;

  constructor(private debounceMs: number) {}

  schedule(op: () => Promise<void>): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.launch(op);
    }, this.debounceMs);
  }

  private launch(op: () => Promise<void>): void {
    if (this.inFlight) {
      this.pending = op;
      return;
    }
    this.inFlight = true;
    // operations handle their own errors; a rejection must not wedge the queue
    op()
      .catch(() => undefined)
      .finally(() => {
        this.inFlight = false;
        const next = this.pending;
        this.pending = null;
        if (next !== null) this.launch(next);
      });
  }

  get busy(): boolean {
    return this.inFlight;
  }
}
