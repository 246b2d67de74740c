/**
 * Ordered delivery with sequence numbers.
 *
 * Both panes funnel user input through an `OrderedSender`: at most one
 * request is in flight per session, anything submitted meanwhile is
 * queued (never dropped) and sent strictly in submission order.  Each
 * item gets a monotonically increasing sequence number; a consumer that
 * only wants the answer to the *newest* input compares a result's
 * sequence number against `newestSeq` and discards the rest.
 *
 * A failed send keeps the item at the head of the queue and retries
 * after a delay — input is recorded locally and replayed, with
 * `onOffline`/`onOnline` marking the outage for the UI.
 */

export interface SenderEvents<I, O> {
  /** Every item's response, in submission order. */
  onResult: (item: I, out: O, seq: number) => void;
  /** First failure of an outage. */
  onOffline?: (err: unknown) => void;
  /** First success after an outage. */
  onOnline?: () => void;
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class OrderedSender<I, O> {
  private readonly queue: Array<{ item: I; seq: number }> = [];
  private readonly waiters: Array<() => void> = [];
  private pumping = false;
  private offline = false;
  private nextSeq = 1;

  constructor(
    private readonly send: (item: I) => Promise<O>,
    private readonly events: SenderEvents<I, O>,
    private readonly retryDelayMs = 1000,
    private readonly sleepFn: (ms: number) => Promise<void> = sleep,
  ) {}

  /** Sequence number of the most recently pushed item (0 = none yet). */
  get newestSeq(): number {
    return this.nextSeq - 1;
  }

  get pendingCount(): number {
    return this.queue.length;
  }

  /** Queue an item for in-order delivery; returns its sequence number. */
  push(item: I): number {
    const seq = this.nextSeq++;
    this.queue.push({ item, seq });
    void this.pump();
    return seq;
  }

  /** Resolves once everything pushed so far has been delivered. */
  idle(): Promise<void> {
    if (!this.pumping && this.queue.length === 0) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  private async pump(): Promise<void> {
    if (this.pumping) {
      return;
    }
    this.pumping = true;
    try {
      while (this.queue.length > 0) {
        const head = this.queue[0]!;
        let out: O;
        try {
          out = await this.send(head.item);
        } catch (err) {
          if (!this.offline) {
            this.offline = true;
            this.events.onOffline?.(err);
          }
          await this.sleepFn(this.retryDelayMs);
          continue; // head stays queued for replay
        }
        if (this.offline) {
          this.offline = false;
          this.events.onOnline?.();
        }
        this.queue.shift();
        this.events.onResult(head.item, out, head.seq);
      }
    } finally {
      this.pumping = false;
      if (this.queue.length === 0) {
        for (const resolve of this.waiters.splice(0)) {
          resolve();
        }
      } else {
        // a callback pushed more work after the loop decided to stop
        void this.pump();
      }
    }
  }
}
