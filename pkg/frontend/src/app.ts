/**
 * Application shell: corpus picker, mode choice, session lifecycle.
 *
 * The session id is the only thing kept in browser storage.  On load a
 * stored id is looked up with GET /session/{id} and the matching pane
 * is mounted with the server's score — a refresh resumes the game.  A
 * dead or evicted id just clears the stored state and shows the picker.
 */

import { ServiceError } from "./api.js";
import type { ServiceApi } from "./api.js";
import { RpsBoard } from "./rps.js";
import { TypingPane } from "./typing.js";
import type { Mode } from "./types.js";

const STORAGE_KEY = "cmx.sessionId";

export class App {
  private paneHost!: HTMLElement;
  pane: TypingPane | RpsBoard | null = null;

  constructor(
    private readonly doc: Document,
    private readonly client: ServiceApi,
    private readonly storage: Storage,
  ) {}

  async start(rootEl: HTMLElement): Promise<void> {
    rootEl.textContent = "";
    const title = this.doc.createElement("h1");
    title.textContent = "cmx — live prediction";
    rootEl.appendChild(title);

    this.paneHost = this.doc.createElement("div");
    this.paneHost.dataset.role = "pane-host";

    const picker = await this.buildPicker();
    rootEl.appendChild(picker);
    rootEl.appendChild(this.paneHost);

    const stored = this.storage.getItem(STORAGE_KEY);
    if (stored) {
      await this.resume(stored);
    }
  }

  private async buildPicker(): Promise<HTMLElement> {
    const form = this.doc.createElement("form");
    form.dataset.role = "picker";
    form.addEventListener("submit", (ev) => ev.preventDefault());

    const corpora = this.doc.createElement("fieldset");
    corpora.dataset.role = "corpora";
    const legend = this.doc.createElement("legend");
    legend.textContent = "pretrain on";
    corpora.appendChild(legend);
    let names: string[] = [];
    try {
      names = (await this.client.listCorpora()).corpora;
    } catch {
      // no corpus directory configured; sessions start blank
    }
    for (const name of names) {
      const label = this.doc.createElement("label");
      const box = this.doc.createElement("input");
      box.type = "checkbox";
      box.value = name;
      box.dataset.role = "corpus";
      label.append(box, this.doc.createTextNode(name));
      corpora.appendChild(label);
    }
    if (names.length === 0) {
      const none = this.doc.createElement("em");
      none.textContent = "no corpora available";
      corpora.appendChild(none);
    }
    form.appendChild(corpora);

    for (const [mode, text] of [
      ["text", "start typing assistant"],
      ["rps", "start rock · paper · scissors"],
    ] as Array<[Mode, string]>) {
      const b = this.doc.createElement("button");
      b.dataset.mode = mode;
      b.textContent = text;
      b.addEventListener("click", () => void this.create(mode, form));
      form.appendChild(b);
    }
    return form;
  }

  private selectedCorpora(form: HTMLElement): string[] {
    const boxes = form.querySelectorAll<HTMLInputElement>(
      'input[data-role="corpus"]',
    );
    return Array.from(boxes)
      .filter((b) => b.checked)
      .map((b) => b.value);
  }

  private async create(mode: Mode, form: HTMLElement): Promise<void> {
    const { id } = await this.client.createSession(
      mode,
      this.selectedCorpora(form),
    );
    this.storage.setItem(STORAGE_KEY, id);
    this.mount(mode, id);
  }

  private async resume(id: string): Promise<void> {
    try {
      const info = await this.client.getSession(id);
      this.mount(info.mode, info.id, info.score);
    } catch (err) {
      if (err instanceof ServiceError && err.status === 404) {
        this.storage.removeItem(STORAGE_KEY); // evicted; start over
        return;
      }
      throw err;
    }
  }

  private mount(
    mode: Mode,
    id: string,
    score?: { wins: number; losses: number; draws: number },
  ): void {
    this.paneHost.textContent = "";
    this.pane =
      mode === "text"
        ? new TypingPane(this.doc, this.client, id)
        : new RpsBoard(this.doc, this.client, id, { resumeScore: score });
    this.paneHost.appendChild(this.pane.root);

    const end = this.doc.createElement("button");
    end.dataset.role = "end-session";
    end.textContent = "end session";
    end.addEventListener("click", () => void this.end(id));
    this.paneHost.appendChild(end);
  }

  private async end(id: string): Promise<void> {
    try {
      await this.client.deleteSession(id);
    } finally {
      this.storage.removeItem(STORAGE_KEY);
      this.paneHost.textContent = "";
      this.pane = null;
    }
  }
}
