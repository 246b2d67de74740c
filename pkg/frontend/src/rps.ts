/**
 * Rock-paper-scissors board.
 *
 * Every click queues a move; clicks landing while a round is in flight
 * are queued behind it, never dropped, and settle in order.  The AI's
 * move shown for a round was committed by the service before the
 * human's move arrived.  The scoreboard mirrors the service's tallies
 * (wins are AI wins) and a rolling chart tracks the AI's win rate.
 */

import type { ServiceApi } from "./api.js";
import { OrderedSender } from "./sequencer.js";
import type { Move, RpsRound, Score, UiSessionView } from "./types.js";
import { BEATS, MOVE_NAMES, ZERO_SCORE } from "./types.js";

const CHART_W = 240;
const CHART_H = 60;

export interface RpsBoardOptions {
  /** Scoreboard to resume from (a reloaded session). */
  resumeScore?: Score;
  retryDelayMs?: number;
  sleepFn?: (ms: number) => Promise<void>;
}

export class RpsBoard {
  readonly root: HTMLElement;
  readonly history: RpsRound[] = [];
  private score: Score;
  private readonly doc: Document;
  private readonly bannerEl: HTMLElement;
  private readonly lastRoundEl: HTMLElement;
  private readonly scoreEl: HTMLElement;
  private readonly chartLine: SVGPolylineElement;
  private readonly sender: OrderedSender<Move, { aiMove: Move; score: Score }>;

  constructor(
    doc: Document,
    client: ServiceApi,
    readonly sessionId: string,
    options: RpsBoardOptions = {},
  ) {
    this.doc = doc;
    this.score = { ...(options.resumeScore ?? ZERO_SCORE) };

    this.root = doc.createElement("section");
    this.root.className = "rps-board";

    this.bannerEl = doc.createElement("div");
    this.bannerEl.className = "banner";
    this.bannerEl.dataset.role = "banner";
    this.bannerEl.textContent =
      "service unreachable — moves are queued and will be replayed";
    this.bannerEl.hidden = true;
    this.root.appendChild(this.bannerEl);

    const buttons = doc.createElement("div");
    buttons.className = "moves";
    for (const move of ["r", "p", "s"] as const) {
      const b = doc.createElement("button");
      b.dataset.move = move;
      b.textContent = MOVE_NAMES[move];
      b.addEventListener("click", () => this.play(move));
      buttons.appendChild(b);
    }
    this.root.appendChild(buttons);

    this.lastRoundEl = doc.createElement("div");
    this.lastRoundEl.dataset.role = "last-round";
    this.root.appendChild(this.lastRoundEl);

    this.scoreEl = doc.createElement("div");
    this.scoreEl.dataset.role = "scoreboard";
    this.root.appendChild(this.scoreEl);

    const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
    svg.setAttribute("class", "winrate-chart");
    this.chartLine = doc.createElementNS(
      "http://www.w3.org/2000/svg",
      "polyline",
    );
    this.chartLine.dataset.role = "winrate";
    svg.appendChild(this.chartLine);
    this.root.appendChild(svg);

    this.sender = new OrderedSender(
      (move) => client.playMove(this.sessionId, move),
      {
        onResult: (move, out) => this.onRound(move, out),
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

    this.renderScore();
  }

  /** Queue one round; safe to click again before the result lands. */
  play(move: Move): void {
    this.sender.push(move);
  }

  private onRound(human: Move, out: { aiMove: Move; score: Score }): void {
    const outcome =
      out.aiMove === human
        ? "draw"
        : BEATS[human] === out.aiMove
          ? "win"
          : "loss";
    this.history.push({ human, ai: out.aiMove, outcome });
    this.score = { ...out.score }; // the service's tally is the truth
    this.lastRoundEl.textContent =
      `you: ${MOVE_NAMES[human]} · ai: ${MOVE_NAMES[out.aiMove]} — ` +
      (outcome === "draw" ? "draw" : outcome === "win" ? "ai wins" : "you win");
    this.renderScore();
    this.renderChart();
  }

  private renderScore(): void {
    const { wins, losses, draws } = this.score;
    this.scoreEl.textContent = `ai ${wins} · you ${losses} · draws ${draws}`;
  }

  private renderChart(): void {
    let aiWins = 0;
    const points = this.history.map((round, i) => {
      if (round.outcome === "win") {
        aiWins += 1;
      }
      const x = this.history.length === 1
        ? CHART_W
        : (i / (this.history.length - 1)) * CHART_W;
      const y = CHART_H - (aiWins / (i + 1)) * CHART_H;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    });
    this.chartLine.setAttribute("points", points.join(" "));
  }

  /** Resolves once every queued move has settled. */
  whenIdle(): Promise<void> {
    return this.sender.idle();
  }

  view(): UiSessionView {
    return {
      sessionId: this.sessionId,
      mode: "rps",
      typedText: "",
      currentPrediction: "",
      rpsHistory: [...this.history],
      scoreboard: { ...this.score },
    };
  }
}
