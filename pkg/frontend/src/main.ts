/**
 * Application wiring: session bootstrap and the query/submit loop.
 *
 * The controller creates (or resumes) a session, then loops: fetch the
 * pending query, render it, submit the ranking the user builds, repeat.
 * A 410 on the query means the session is done and the estimate renders
 * instead. Submit failures keep the partial ranking and show a retry
 * banner; a stale-index 409 reloads the authoritative pending query.
 */

import { ApiError, type SessionApi, type SessionOverrides } from "./api.js";
import { QueryView } from "./view.js";

export interface AppOptions {
  /** Resume this session instead of creating a new one. */
  sessionId?: string;
  /** Settings overrides for a newly created session. */
  overrides?: Partial<SessionOverrides>;
}

export class AppController {
  readonly view: QueryView;
  sessionId = "";

  constructor(
    private readonly api: SessionApi,
    root: HTMLElement,
  ) {
    this.view = new QueryView(root, {
      onSubmit: (ranking, queryIndex) => {
        void this.submit(ranking, queryIndex);
      },
    });
  }

  async start(options: AppOptions = {}): Promise<void> {
    if (options.sessionId) {
      this.sessionId = options.sessionId;
    } else {
      const session = await this.api.createSession(options.overrides ?? {});
      this.sessionId = session.id;
    }
    await this.refresh();
  }

  /** Load the pending query (or the final estimate) from the server. */
  async refresh(): Promise<void> {
    try {
      const query = await this.api.getQuery(this.sessionId);
      this.view.renderQuery(query);
    } catch (error) {
      if (error instanceof ApiError && error.status === 410) {
        this.view.renderDone(await this.api.getEstimate(this.sessionId));
        return;
      }
      this.view.showRetry(describeError(error), () => {
        void this.refresh();
      });
    }
  }

  private async submit(ranking: string[], queryIndex: number): Promise<void> {
    this.view.setBusy(true);
    try {
      await this.api.postResponse(this.sessionId, ranking, queryIndex);
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 410)) {
        await this.refresh();
        return;
      }
      this.view.setBusy(false);
      this.view.showRetry(describeError(error), () => {
        void this.submit(ranking, queryIndex);
      });
      return;
    }
    await this.refresh();
  }
}

export async function startApp(
  root: HTMLElement,
  api: SessionApi,
  options: AppOptions = {},
): Promise<AppController> {
  const controller = new AppController(api, root);
  await controller.start(options);
  return controller;
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    return error.message;
  }
  return "Could not reach the session server.";
}

/** Browser bootstrap: runs only when the host page provides #app. */
if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  void (async () => {
    const { SessionApi } = await import("./api.js");
    const params = new URLSearchParams(window.location.search);
    const base = params.get("api") ?? window.location.origin;
    const root = document.getElementById("app") as HTMLElement;
    const options: AppOptions = {};
    const sessionId = params.get("session");
    if (sessionId) {
      options.sessionId = sessionId;
    }
    await startApp(root, new SessionApi(base), options);
  })();
}
