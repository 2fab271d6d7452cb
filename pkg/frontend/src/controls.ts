/**
 * Debounced single-flight dispatcher for slider-driven recomputes.
 *
 * Guarantees: the wrapped task never runs concurrently with itself, rapid
 * fires collapse to the most recent value, and a value arriving while a
 * request is in flight runs once the flight lands.
 */

export class DebouncedSingleFlight<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private pending: { value: T } | null = null;

  constructor(
    private task: (value: T) => Promise<void>,
    private delayMs: number,
  ) {}

  fire(value: T): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.launch(value);
    }, this.delayMs);
  }

  private async launch(value: T): Promise<void> {
    if (this.inFlight) {
      this.pending = { value };
      return;
    }
    this.inFlight = true;
    try {
      await this.task(value);
    } finally {
      this.inFlight = false;
      if (this.pending) {
        const next = this.pending.value;
        this.pending = null;
        void this.launch(next);
      }
    }
  }

  get busy(): boolean {
    return this.inFlight;
  }
}
