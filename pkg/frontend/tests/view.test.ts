// @vitest-environment jsdom
import { beforeEach, describe, expect, it, vi } from "vitest";

import type { QueryPayload } from "../src/api.js";
import { QueryView } from "../src/view.js";

function payload(
  ids: string[],
  options: {
    index?: number;
    answered?: number;
    total?: number;
    phase?: string;
    meta?: Record<string, Record<string, string>>;
  } = {},
): QueryPayload {
  return {
    index: options.index ?? 0,
    phase: options.phase ?? "active",
    progress: {
      answered: options.answered ?? 0,
      total: options.total ?? 8,
    },
    items: ids.map((id) => ({
      id,
      features: [0.25, -1.5],
      meta: options.meta?.[id] ?? { group: "demo" },
    })),
  };
}

let root: HTMLElement;
let submitted: Array<{ ranking: string[]; index: number }>;
let view: QueryView;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app") as HTMLElement;
  submitted = [];
  view = new QueryView(root, {
    onSubmit: (ranking, index) => submitted.push({ ranking, index }),
  });
});

function cards(): HTMLElement[] {
  return [...root.querySelectorAll<HTMLElement>(".card")];
}

function badgeTexts(): string[] {
  return cards().map((card) => card.querySelector(".badge")?.textContent ?? "");
}

function control(name: string): HTMLButtonElement {
  return root.querySelector(`button.${name}`) as HTMLButtonElement;
}

describe("renderQuery", () => {
  it("shows one card per item with its meta as a labeled table", () => {
    view.renderQuery(payload(["t1", "t2", "t3"]));
    expect(cards().map((card) => card.dataset.id)).toEqual(["t1", "t2", "t3"]);
    const table = cards()[0].querySelector("table");
    expect(table?.textContent).toContain("group");
    expect(table?.textContent).toContain("demo");
  });

  it("falls back to raw features when an item has no meta", () => {
    view.renderQuery({
      ...payload(["t1"]),
      items: [{ id: "t1", features: [0.25, -1.5], meta: {} }],
    });
    const table = cards()[0].querySelector("table");
    expect(table?.textContent).toContain("feature 0");
    expect(table?.textContent).toContain("-1.5");
  });

  it("renders a video element when meta carries a media_url", () => {
    view.renderQuery(
      payload(["t1"], { meta: { t1: { media_url: "http://media/clip.mp4", group: "g" } } }),
    );
    const video = cards()[0].querySelector("video");
    expect(video).not.toBeNull();
    expect(video?.src).toBe("http://media/clip.mp4");
    expect(cards()[0].querySelector("table")?.textContent).not.toContain("media_url");
  });

  it("shows progress with phase and data attributes for scripting", () => {
    view.renderQuery(payload(["t1", "t2"], { answered: 5, total: 8, phase: "evaluation" }));
    const progress = root.querySelector<HTMLElement>(".progress");
    expect(progress?.textContent).toBe("query 6 of 8 - evaluation phase");
    expect(progress?.dataset.answered).toBe("5");
    expect(progress?.dataset.phase).toBe("evaluation");
  });
});

describe("clicking cards", () => {
  it("marks click order with 1-based badges", () => {
    view.renderQuery(payload(["t1", "t2", "t3"]));
    cards()[2].click();
    cards()[0].click();
    expect(badgeTexts()).toEqual(["2", "", "1"]);
    expect(view.partialRanking()).toEqual(["t3", "t1"]);
  });

  it("ignores clicks on an already-ranked card", () => {
    view.renderQuery(payload(["t1", "t2", "t3"]));
    cards()[1].click();
    cards()[1].click();
    expect(view.partialRanking()).toEqual(["t2"]);
    expect(badgeTexts()).toEqual(["", "1", ""]);
  });

  it("enables submit only once every card is ranked", () => {
    view.renderQuery(payload(["t1", "t2", "t3"]));
    expect(control("submit").disabled).toBe(true);
    cards()[0].click();
    cards()[1].click();
    expect(control("submit").disabled).toBe(true);
    cards()[2].click();
    expect(control("submit").disabled).toBe(false);
  });

  it("submits the full permutation with the served query index", () => {
    view.renderQuery(payload(["t1", "t2", "t3"], { index: 4 }));
    cards()[1].click();
    cards()[2].click();
    cards()[0].click();
    control("submit").click();
    expect(submitted).toEqual([{ ranking: ["t2", "t3", "t1"], index: 4 }]);
  });

  it("never submits a partial ranking", () => {
    view.renderQuery(payload(["t1", "t2"]));
    cards()[0].click();
    control("submit").click();
    expect(submitted).toEqual([]);
  });
});

describe("undo", () => {
  it("is disabled while the ranking is empty", () => {
    view.renderQuery(payload(["t1", "t2"]));
    expect(control("undo").disabled).toBe(true);
    cards()[0].click();
    expect(control("undo").disabled).toBe(false);
  });

  it("removes only the most recent selection", () => {
    view.renderQuery(payload(["t1", "t2", "t3"]));
    cards()[0].click();
    cards()[1].click();
    cards()[2].click();
    control("undo").click();
    control("undo").click();
    expect(view.partialRanking()).toEqual(["t1"]);
    expect(badgeTexts()).toEqual(["1", "", ""]);
  });

  it("does not cross a query boundary: new query starts empty and disabled", () => {
    view.renderQuery(payload(["t1", "t2"]));
    cards()[0].click();
    cards()[1].click();
    view.renderQuery(payload(["t3", "t4"], { index: 1, answered: 1 }));
    expect(view.partialRanking()).toEqual([]);
    expect(control("undo").disabled).toBe(true);
  });
});

describe("sync", () => {
  function spyTime(media: HTMLMediaElement, initial: number): { values: number[] } {
    const spy = { values: [] as number[] };
    let value = initial;
    Object.defineProperty(media, "currentTime", {
      get: () => value,
      set: (next: number) => {
        value = next;
        spy.values.push(next);
      },
    });
    Object.defineProperty(media, "play", { value: () => Promise.resolve() });
    return spy;
  }

  it("resets every media element to time zero in the same frame", () => {
    view.renderQuery(
      payload(["t1", "t2"], {
        meta: {
          t1: { media_url: "http://media/a.mp4" },
          t2: { media_url: "http://media/b.mp4" },
        },
      }),
    );
    const media = [...root.querySelectorAll("video")];
    const spies = media.map((element) => spyTime(element, 7.5));
    control("sync").click();
    expect(spies.map((spy) => spy.values)).toEqual([[0], [0]]);
    expect(media.every((element) => element.currentTime === 0)).toBe(true);
  });

  it("preserves the partial ranking", () => {
    view.renderQuery(
      payload(["t1", "t2"], { meta: { t1: { media_url: "http://media/a.mp4" } } }),
    );
    spyTime(root.querySelector("video") as HTMLVideoElement, 3);
    cards()[1].click();
    control("sync").click();
    expect(view.partialRanking()).toEqual(["t2"]);
    expect(badgeTexts()).toEqual(["", "1"]);
  });

  it("is a no-op without media", () => {
    view.renderQuery(payload(["t1", "t2"]));
    cards()[0].click();
    expect(() => control("sync").click()).not.toThrow();
    expect(view.partialRanking()).toEqual(["t1"]);
  });
});

describe("busy state", () => {
  it("freezes cards and controls during a submit round-trip", () => {
    view.renderQuery(payload(["t1", "t2"]));
    cards()[0].click();
    cards()[1].click();
    view.setBusy(true);
    cards()[0].click();
    control("undo").click();
    control("submit").click();
    expect(submitted).toEqual([]);
    expect(view.partialRanking()).toEqual(["t1", "t2"]);
    view.setBusy(false);
    expect(control("submit").disabled).toBe(false);
  });
});

describe("retry banner", () => {
  it("shows the message and keeps the partial ranking", () => {
    view.renderQuery(payload(["t1", "t2"]));
    cards()[0].click();
    view.showRetry("Could not reach the session server.", () => undefined);
    expect(root.querySelector(".banner")?.textContent).toContain(
      "Could not reach the session server.",
    );
    expect(view.partialRanking()).toEqual(["t1"]);
  });

  it("retries once and removes itself", () => {
    view.renderQuery(payload(["t1"]));
    const retry = vi.fn();
    view.showRetry("boom", retry);
    view.showRetry("boom again", retry);
    expect(root.querySelectorAll(".banner")).toHaveLength(1);
    (root.querySelector(".banner button.retry") as HTMLButtonElement).click();
    expect(retry).toHaveBeenCalledTimes(1);
    expect(root.querySelector(".banner")).toBeNull();
  });
});

describe("renderDone", () => {
  it("shows the mixing estimate and held-out score", () => {
    view.renderDone({
      weights: [
        [0.5, -0.25],
        [1.0, 0.75],
      ],
      mixing: [0.625, 0.375],
      holdout_loglik: -4.125,
      n_eval_responses: 3,
      phase: "done",
    });
    const done = root.querySelector<HTMLElement>(".done");
    expect(done?.dataset.phase).toBe("done");
    expect(done?.textContent).toContain("mode 1: 62.5%");
    expect(done?.textContent).toContain("mode 2: 37.5%");
    expect(done?.textContent).toContain("-4.125");
    expect(done?.textContent).toContain("3 evaluation responses");
  });

  it("omits the held-out line when no evaluation responses exist", () => {
    view.renderDone({
      weights: [[0.5]],
      mixing: [1],
      holdout_loglik: null,
      n_eval_responses: 0,
      phase: "done",
    });
    expect(root.querySelector(".holdout")).toBeNull();
  });
});
