// Latest-wins job scheduler for slider-driven re-simulation.
//
// Contract: a job fires only after `delayMs` of quiet; at most one request
// is in flight at any time; if the state changed while a request was
// running, exactly one follow-up fires with the newest job.

export class LatestWins<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private waiting: (() => Promise<T>) | null = null;

  constructor(
    private readonly delayMs: number,
    private readonly onResult: (result: T) => void,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  schedule(job: () => Promise<T>): void {
    this.waiting = job;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.pump();
    }, this.delayMs);
  }

  /** Run the newest job immediately, skipping the quiet period. */
  flush(job?: () => Promise<T>): void {
    if (job) this.waiting = job;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pump();
  }

  get busy(): boolean {
    return this.inFlight || this.timer !== null || this.waiting !== null;
  }

  private pump(): void {
    if (this.inFlight || this.waiting === null) return;
    const job = this.waiting;
    this.waiting = null;
    this.inFlight = true;
    job()
      .then(this.onResult, this.onError)
      .finally(() => {
        this.inFlight = false;
        this.pump();
      });
  }
}
