/** One generation request in flight at a time.
 *
 * While a request is pending, each further submit replaces whatever was
 * queued before it, so a burst of regenerate clicks settles on the newest
 * slider vector instead of fanning out into stale requests.
 */

export class ReplaceQueue {
  private inFlight = false;
  private pending: (() => Promise<void>) | null = null;

  get busy(): boolean {
    return this.inFlight;
  }

  async submit(task: () => Promise<void>): Promise<void> {
    if (this.inFlight) {
      this.pending = task;
      return;
    }
    this.inFlight = true;
    try {
      await task();
    } finally {
      this.inFlight = false;
      const next = this.pending;
      this.pending = null;
      if (next) {
        await this.submit(next);
      }
    }
  }
}
