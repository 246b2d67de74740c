/**
 * Typing pane: typed text plus a dimmed ghost continuation after the
 * caret, regenerated on every keystroke.
 *
 * Each printable key is queued to the service in order.  The ghost only
 * ever shows the prediction belonging to the newest keystroke: typing
 * invalidates the current ghost immediately, and responses that arrive
 * for older keystrokes are discarded by sequence number.  Tab accepts
 * the ghost, feeding its characters back one by one exactly as if they
 * had been typed.
 */

import type { ServiceApi } from "./api.js";
import { OrderedSender } from "./sequencer.js";
import type { UiSessionView } from "./types.js";
import { ZERO_SCORE } from "./types.js";

export interface TypingPaneOptions {
  /** Prediction length requested per keystroke. */
  predictionLength?: number;
  retryDelayMs?: number;
  sleepFn?: (ms: number) => Promise<void>;
}

export class TypingPane {
  readonly root: HTMLElement;
  private readonly textEl: HTMLElement;
  private readonly ghostEl: HTMLElement;
  private readonly bannerEl: HTMLElement;
  private readonly sender: OrderedSender<
    string,
    { prediction: string; prediction_b64: string }
  >;
  private typed = "";
  private ghost = "";

  constructor(
    doc: Document,
    client: ServiceApi,
    readonly sessionId: string,
    options: TypingPaneOptions = {},
  ) {
    this.root = doc.createElement("section");
    this.root.className = "typing-pane";

    this.bannerEl = doc.createElement("div");
    this.bannerEl.className = "banner";
    this.bannerEl.dataset.role = "banner";
    this.bannerEl.textContent =
      "service unreachable — keystrokes are queued and will be replayed";
    this.bannerEl.hidden = true;
    this.root.appendChild(this.bannerEl);

    const page = doc.createElement("div");
    page.className = "page";
    page.tabIndex = 0;
    page.dataset.role = "page";
    this.textEl = doc.createElement("span");
    this.textEl.dataset.role = "text";
    const caret = doc.createElement("span");
    caret.className = "caret";
    this.ghostEl = doc.createElement("span");
    this.ghostEl.className = "ghost";
    this.ghostEl.dataset.role = "ghost";
    page.append(this.textEl, caret, this.ghostEl);
    this.root.appendChild(page);

    const hint = doc.createElement("p");
    hint.className = "hint";
    hint.textContent = "Type into the page; Tab accepts the ghost text.";
    this.root.appendChild(hint);

    page.addEventListener("keydown", (ev) => this.onKeydown(ev));

    this.sender = new OrderedSender(
      (byte) =>
        client.sendByte(this.sessionId, byte, options.predictionLength),
      {
        onResult: (_byte, out, seq) => this.onPrediction(out.prediction, seq),
        onOffline: () => {
          this.bannerEl.hidden = false;
        },
        onOnline: () => {
          this.bannerEl.hidden = true;
        },
      },
      options.retryDelayMs ?? 1000,
      options.sleepFn,
    );
  }

  private onKeydown(ev: KeyboardEvent): void {
    if (ev.key === "Tab") {
      ev.preventDefault();
      this.acceptGhost();
      return;
    }
    if (ev.key.length === 1 && !ev.ctrlKey && !ev.metaKey && !ev.altKey) {
      ev.preventDefault();
      this.type(ev.key);
    }
  }

  /** Record one character: it is part of the text from this instant,
   * even if the service only hears about it later. */
  type(ch: string): void {
    if (ch.length !== 1 || ch.codePointAt(0)! > 255) {
      return; // the model speaks latin-1; ignore what it cannot hear
    }
    this.typed += ch;
    this.ghost = ""; // any displayed prediction is now stale
    this.render();
    this.sender.push(ch);
  }

  /** Tab: feed the accepted ghost back, character by character, in
   * order.  A missing ghost makes this a no-op. */
  acceptGhost(): void {
    const accepted = this.ghost;
    for (const ch of accepted) {
      this.type(ch);
    }
  }

  private onPrediction(prediction: string, seq: number): void {
    if (seq !== this.sender.newestSeq) {
      return; // answer to an older keystroke: never displayed
    }
    this.ghost = prediction;
    this.render();
  }

  private render(): void {
    this.textEl.textContent = this.typed;
    this.ghostEl.textContent = this.ghost;
  }

  /** Resolves once every typed byte has reached the service. */
  whenIdle(): Promise<void> {
    return this.sender.idle();
  }

  view(): UiSessionView {
    return {
      sessionId: this.sessionId,
      mode: "text",
      typedText: this.typed,
      currentPrediction: this.ghost,
      rpsHistory: [],
      scoreboard: { ...ZERO_SCORE },
    };
  }
}
