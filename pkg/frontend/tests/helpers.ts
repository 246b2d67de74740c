/** Shared test scaffolding: deferreds, scheduling, and service fakes. */

import type { ServiceApi } from "../src/api.js";
import type { Mode, Move, Score, SessionInfo } from "../src/types.js";

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

/** A promise whose settlement the test controls. */
export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Let queued microtasks and zero-delay timers run. */
export const tick = (): Promise<void> =>
  new Promise((resolve) => setTimeout(resolve, 0));

/** Poll `cond` across ticks; fail loudly rather than hang. */
export async function until(
  cond: () => boolean,
  what = "condition",
): Promise<void> {
  for (let i = 0; i < 1000; i++) {
    if (cond()) {
      return;
    }
    await tick();
  }
  throw new Error(`timed out waiting for ${what}`);
}

/**
 * ServiceApi stub that fails on contact; tests override exactly the
 * methods their subject is allowed to call.
 */
export class StubService implements ServiceApi {
  createSession(_mode: Mode, _corpora?: string[]): Promise<{ id: string }> {
    return Promise.reject(new Error("unexpected createSession"));
  }

  sendByte(
    _id: string,
    _byte: string,
    _n?: number,
  ): Promise<{ prediction: string; prediction_b64: string }> {
    return Promise.reject(new Error("unexpected sendByte"));
  }

  playMove(_id: string, _move: Move): Promise<{ aiMove: Move; score: Score }> {
    return Promise.reject(new Error("unexpected playMove"));
  }

  getSession(_id: string): Promise<SessionInfo> {
    return Promise.reject(new Error("unexpected getSession"));
  }

  listCorpora(): Promise<{ corpora: string[] }> {
    return Promise.reject(new Error("unexpected listCorpora"));
  }

  deleteSession(_id: string): Promise<{ ok: boolean }> {
    return Promise.reject(new Error("unexpected deleteSession"));
  }
}

/**
 * Text-mode fake whose responses the test settles by hand: each
 * sendByte parks a deferred in `calls` until the test resolves it.
 */
export class ManualTextService extends StubService {
  readonly calls: Array<{
    byte: string;
    answer: Deferred<{ prediction: string; prediction_b64: string }>;
  }> = [];

  override sendByte(
    _id: string,
    byte: string,
    _n?: number,
  ): Promise<{ prediction: string; prediction_b64: string }> {
    const answer = deferred<{ prediction: string; prediction_b64: string }>();
    this.calls.push({ byte, answer });
    return answer.promise;
  }

  /** Settle call `i` with a prediction string. */
  answer(i: number, prediction: string): void {
    const call = this.calls[i];
    if (!call) {
      throw new Error(`no sendByte call #${i} yet`);
    }
    call.answer.resolve({ prediction, prediction_b64: "" });
  }

  get sentBytes(): string[] {
    return this.calls.map((c) => c.byte);
  }
}

/** Rps fake with hand-settled rounds, mirroring ManualTextService. */
export class ManualRpsService extends StubService {
  readonly calls: Array<{
    move: Move;
    answer: Deferred<{ aiMove: Move; score: Score }>;
  }> = [];

  override playMove(
    _id: string,
    move: Move,
  ): Promise<{ aiMove: Move; score: Score }> {
    const answer = deferred<{ aiMove: Move; score: Score }>();
    this.calls.push({ move, answer });
    return answer.promise;
  }

  answer(i: number, aiMove: Move, score: Score): void {
    const call = this.calls[i];
    if (!call) {
      throw new Error(`no playMove call #${i} yet`);
    }
    call.answer.resolve({ aiMove, score: { ...score } });
  }
}

/**
 * Test-speed retry sleep.  Must still yield a macrotask: a microtask
 * sleep would let the retry loop starve the timer queue and spin.
 */
export const noSleep = (): Promise<void> => tick();
