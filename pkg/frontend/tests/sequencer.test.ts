/** OrderedSender: one in flight, strict order, retry without loss. */

import { describe, expect, it } from "vitest";

import { OrderedSender } from "../src/sequencer.js";
import { deferred, noSleep, tick, until, type Deferred } from "./helpers.js";

/** Transport whose every send waits for the test to settle it. */
function manualTransport() {
  const calls: Array<{ item: string; answer: Deferred<string> }> = [];
  const send = (item: string): Promise<string> => {
    const answer = deferred<string>();
    calls.push({ item, answer });
    return answer.promise;
  };
  return { calls, send };
}

describe("OrderedSender", () => {
  it("assigns increasing sequence numbers and tracks the newest", async () => {
    const { calls, send } = manualTransport();
    const sender = new OrderedSender(send, { onResult: () => {} });

    expect(sender.newestSeq).toBe(0);
    expect(sender.push("a")).toBe(1);
    expect(sender.push("b")).toBe(2);
    expect(sender.newestSeq).toBe(2);

    calls[0]?.answer.resolve("A");
    await until(() => calls.length === 2, "second send");
    calls[1]?.answer.resolve("B");
    await sender.idle();
  });

  it("keeps one request in flight and sends in submission order", async () => {
    const { calls, send } = manualTransport();
    const results: Array<[string, string, number]> = [];
    const sender = new OrderedSender(send, {
      onResult: (item, out, seq) => results.push([item, out, seq]),
    });

    sender.push("a");
    sender.push("b");
    sender.push("c");
    await until(() => calls.length === 1, "first send");
    expect(calls.length).toBe(1); // b and c wait their turn
    expect(sender.pendingCount).toBe(3);

    calls[0]?.answer.resolve("A");
    await until(() => calls.length === 2, "second send");
    calls[1]?.answer.resolve("B");
    await until(() => calls.length === 3, "third send");
    calls[2]?.answer.resolve("C");
    await sender.idle();

    expect(results).toEqual([
      ["a", "A", 1],
      ["b", "B", 2],
      ["c", "C", 3],
    ]);
    expect(sender.pendingCount).toBe(0);
  });

  it("retries a failed head without dropping it, signalling one outage", async () => {
    let attempts = 0;
    const delivered: string[] = [];
    let offline = 0;
    let online = 0;
    const send = async (item: string): Promise<string> => {
      attempts += 1;
      if (attempts <= 2) {
        throw new Error("connection refused");
      }
      return item.toUpperCase();
    };
    const sender = new OrderedSender(
      send,
      {
        onResult: (_item, out) => delivered.push(out),
        onOffline: () => (offline += 1),
        onOnline: () => (online += 1),
      },
      0,
      noSleep,
    );

    sender.push("a");
    await sender.idle();

    expect(attempts).toBe(3); // two failures, then the replay lands
    expect(delivered).toEqual(["A"]);
    expect(offline).toBe(1); // one outage, however many retries
    expect(online).toBe(1);
  });

  it("replays queued items in order after the outage ends", async () => {
    let failing = true;
    const delivered: string[] = [];
    const send = async (item: string): Promise<string> => {
      if (failing) {
        throw new Error("down");
      }
      return item;
    };
    const sender = new OrderedSender(
      send,
      { onResult: (_item, out) => delivered.push(out) },
      0,
      noSleep,
    );

    sender.push("a");
    sender.push("b");
    sender.push("c");
    await tick();
    expect(delivered).toEqual([]); // everything still queued

    failing = false;
    await sender.idle();
    expect(delivered).toEqual(["a", "b", "c"]);
  });

  it("idle resolves immediately when nothing is queued", async () => {
    const sender = new OrderedSender(async (x: string) => x, {
      onResult: () => {},
    });
    await sender.idle();
  });

  it("drains items pushed from inside a result callback", async () => {
    const delivered: string[] = [];
    const sender: OrderedSender<string, string> = new OrderedSender(
      async (x: string) => x,
      {
        onResult: (_item, out) => {
          delivered.push(out);
          if (out === "a") {
            sender.push("b");
          }
        },
      },
    );

    sender.push("a");
    await until(() => delivered.length === 2, "follow-up delivery");
    await sender.idle();
    expect(delivered).toEqual(["a", "b"]);
  });
});
