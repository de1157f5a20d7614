/**
 * DOM layer: renders the pending query as a grid of clickable trajectory
 * cards with Undo / Sync / Submit controls and a progress line.
 *
 * The partial ranking is client-local: rendering a payload always starts
 * from an empty ranking, so a page refresh restores the pending query with
 * no selections. Cards show a <video> when the item's meta carries a
 * media_url; otherwise the meta fields (or raw features) render as a
 * labeled table. While a submit round-trip is in flight the whole query is
 * inert; a failed request raises a retry banner and loses no state.
 */

import type { EstimatePayload, QueryItem, QueryPayload } from "./api.js";
import {
  type RankingState,
  click,
  createState,
  isComplete,
  rankOf,
  undo,
} from "./ranking.js";

export interface ViewHooks {
  onSubmit(ranking: string[], queryIndex: number): void;
}

export class QueryView {
  private state: RankingState = createState([]);
  private payload: QueryPayload | null = null;
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly hooks: ViewHooks,
  ) {}

  /** Current partial ranking, most preferred first. */
  partialRanking(): string[] {
    return [...this.state.ranked];
  }

  renderQuery(payload: QueryPayload): void {
    this.payload = payload;
    this.state = createState(payload.items.map((item) => item.id));
    this.busy = false;
    this.root.replaceChildren();

    const progress = el("div", "progress");
    this.root.append(progress);

    const grid = el("div", "grid");
    for (const item of payload.items) {
      grid.append(this.buildCard(item));
    }
    this.root.append(grid);

    const controls = el("div", "controls");
    const undoButton = button("undo", "Undo", () => this.undoClick());
    const syncButton = button("sync", "Sync", () => this.sync());
    const submitButton = button("submit", "Submit ranking", () => this.submit());
    controls.append(undoButton, syncButton, submitButton);
    this.root.append(controls);

    this.update();
  }

  renderDone(estimate: EstimatePayload): void {
    this.payload = null;
    this.state = createState([]);
    this.root.replaceChildren();

    const done = el("div", "done");
    done.dataset.phase = estimate.phase;
    done.append(el("h2", "", "Session complete - thank you!"));

    const list = document.createElement("ul");
    estimate.mixing.forEach((share, mode) => {
      const entry = document.createElement("li");
      entry.textContent = `mode ${mode + 1}: ${(share * 100).toFixed(1)}% of responses`;
      list.append(entry);
    });
    done.append(list);

    if (estimate.holdout_loglik !== null) {
      done.append(
        el(
          "p",
          "holdout",
          `held-out log-likelihood: ${estimate.holdout_loglik.toFixed(3)} ` +
            `over ${estimate.n_eval_responses} evaluation responses`,
        ),
      );
    }
    this.root.append(done);
  }

  /** Show a dismissable banner offering to retry a failed request. */
  showRetry(message: string, retry: () => void): void {
    this.root.querySelector(".banner")?.remove();
    const banner = el("div", "banner", message + " ");
    const retryButton = button("retry", "Retry", () => {
      banner.remove();
      retry();
    });
    banner.append(retryButton);
    this.root.prepend(banner);
  }

  /** Disable interaction while a submit round-trip is in flight. */
  setBusy(busy: boolean): void {
    this.busy = busy;
    this.update();
  }

  /** Restart all media elements; the partial ranking is untouched. */
  sync(): void {
    for (const media of this.root.querySelectorAll<HTMLMediaElement>("video, audio")) {
      media.currentTime = 0;
      try {
        void media.play()?.catch?.(() => undefined);
      } catch {
        // environments without media playback (tests) are fine
      }
    }
  }

  private buildCard(item: QueryItem): HTMLElement {
    const card = el("div", "card");
    card.dataset.id = item.id;
    card.tabIndex = 0;

    const badge = el("span", "badge");
    card.append(badge, el("h3", "", item.id));

    const mediaUrl = item.meta["media_url"];
    if (mediaUrl) {
      const video = document.createElement("video");
      video.src = mediaUrl;
      video.muted = true;
      card.append(video);
    }

    const fields = Object.entries(item.meta).filter(([key]) => key !== "media_url");
    const rows: [string, string][] = fields.length
      ? fields
      : item.features.map((value, i) => [`feature ${i}`, String(value)]);
    const table = document.createElement("table");
    for (const [key, value] of rows) {
      const row = document.createElement("tr");
      row.append(el("th", "", key), el("td", "", value));
      table.append(row);
    }
    card.append(table);

    card.addEventListener("click", () => this.cardClick(item.id));
    return card;
  }

  private cardClick(id: string): void {
    if (this.busy) {
      return;
    }
    this.state = click(this.state, id);
    this.update();
  }

  private undoClick(): void {
    if (this.busy) {
      return;
    }
    this.state = undo(this.state);
    this.update();
  }

  private submit(): void {
    if (this.busy || this.payload === null || !isComplete(this.state)) {
      return;
    }
    this.hooks.onSubmit(this.partialRanking(), this.payload.index);
  }

  private update(): void {
    if (this.payload === null) {
      return;
    }
    const progress = this.root.querySelector<HTMLElement>(".progress");
    if (progress) {
      const { answered, total } = this.payload.progress;
      progress.textContent = `query ${answered + 1} of ${total} - ${this.payload.phase} phase`;
      progress.dataset.answered = String(answered);
      progress.dataset.phase = this.payload.phase;
    }
    for (const card of this.root.querySelectorAll<HTMLElement>(".card")) {
      const rank = rankOf(this.state, card.dataset.id ?? "");
      const badge = card.querySelector<HTMLElement>(".badge");
      if (badge) {
        badge.textContent = rank === null ? "" : String(rank);
      }
      card.classList.toggle("ranked", rank !== null);
      card.classList.toggle("busy", this.busy);
    }
    const undoButton = this.root.querySelector<HTMLButtonElement>("button.undo");
    if (undoButton) {
      undoButton.disabled = this.busy || this.state.ranked.length === 0;
    }
    const submitButton = this.root.querySelector<HTMLButtonElement>("button.submit");
    if (submitButton) {
      submitButton.disabled = this.busy || !isComplete(this.state);
    }
  }
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function button(className: string, label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.type = "button";
  node.className = className;
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}
