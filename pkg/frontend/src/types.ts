/** Shapes shared between the service client and the two panes. */

export type Mode = "text" | "rps";

export type Move = "r" | "p" | "s";

export const MOVE_NAMES: Record<Move, string> = {
  r: "rock",
  p: "paper",
  s: "scissors",
};

/** What beats the key; the service uses the same convention. */
export const BEATS: Record<Move, Move> = { r: "p", p: "s", s: "r" };

export interface Score {
  wins: number;
  losses: number;
  draws: number;
}

export const ZERO_SCORE: Score = { wins: 0, losses: 0, draws: 0 };

/** One settled rock-paper-scissors round; outcome is the AI's. */
export interface RpsRound {
  human: Move;
  ai: Move;
  outcome: "win" | "loss" | "draw";
}

/** Response of GET /session/{id}; enough to resume after a refresh. */
export interface SessionInfo {
  id: string;
  mode: Mode;
  corpora: string[];
  score: Score;
  bytes: number;
}

/**
 * Everything the page renders for one session.  Durable state lives
 * server-side; this is a view, rebuilt from the session endpoints plus
 * what the user typed this visit.  The standing invariant is that
 * `currentPrediction` always annotates the last keystroke of
 * `typedText` — responses to older keystrokes are discarded by
 * sequence number before they get here.
 */
export interface UiSessionView {
  sessionId: string;
  mode: Mode;
  typedText: string;
  currentPrediction: string;
  rpsHistory: RpsRound[];
  scoreboard: Score;
}
