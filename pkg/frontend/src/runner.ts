/**
 * Student runner state machine.  Mirrors the session API step by step:
 * create a session with the learner's capabilities, render the current
 * activity, collect a submission draft matching the activity's
 * submission_schema, submit, and fold outcomes, awards, and routing into
 * the display state.
 */

import {
  ActivityView,
  ApiClient,
  ApiError,
  AwardView,
  OutcomeView,
  SessionView,
} from "./client.js";

export type DraftControl =
  | { control: "acknowledge" }
  | { control: "text_answer" }
  | { control: "choices"; items: number[] }
  | { control: "code_editor" };

/** The input widget the current activity's submission_schema calls for. */
export function controlFor(activity: ActivityView): DraftControl {
  const schema = activity.submission_schema;
  switch (schema.kind) {
    case "lesson":
      return { control: "acknowledge" };
    case "close_ended":
      return { control: "text_answer" };
    case "quiz":
      return { control: "choices", items: schema.items ?? [] };
    case "coding":
      return { control: "code_editor" };
    default:
      throw new Error(`no submission control for kind ${schema.kind}`);
  }
}

export interface HistoryEntry {
  node: string;
  outcome: OutcomeView;
  awards: AwardView[];
  next: { kind: string; target: string | null; reason: string | null };
}

export type RunnerPhase = "idle" | "running" | "completed" | "failed";

export interface RunnerState {
  phase: RunnerPhase;
  sessionId: string | null;
  activity: ActivityView | null;
  draft: unknown;
  history: HistoryEntry[];
  points: number;
  badges: string[];
  streak: number;
  failureReason: string | null;
  /** transient API problem (e.g. a racing double-submit), shown as a toast */
  toast: string | null;
}

export class Runner {
  state: RunnerState = {
    phase: "idle",
    sessionId: null,
    activity: null,
    draft: null,
    history: [],
    points: 0,
    badges: [],
    streak: 0,
    failureReason: null,
    toast: null,
  };

  constructor(private readonly client: ApiClient) {}

  get visitedNodes(): string[] {
    return this.state.history.map((h) => h.node);
  }

  async start(fragmentId: string, learnerId: string, capabilities: string[]): Promise<void> {
    const view = await this.client.createSession(fragmentId, learnerId, capabilities);
    this.state = {
      ...this.state,
      phase: "running",
      sessionId: view.id,
      activity: view.activity ?? null,
      draft: null,
      history: [],
      failureReason: null,
      toast: null,
    };
    this.foldGamification(view);
  }

  setDraft(draft: unknown): void {
    if (!this.state.activity) throw new Error("no activity to draft for");
    this.state.draft = draft;
  }

  /** Submit the draft; returns the updated view, or null on a 409 race. */
  async submitDraft(): Promise<SessionView | null> {
    const { sessionId, activity, draft } = this.state;
    if (!sessionId || !activity) throw new Error("no active session");
    let view: SessionView;
    try {
      view = await this.client.submit(sessionId, {
        kind: activity.kind,
        payload: draft,
      });
    } catch (err) {
      if (err instanceof ApiError && err.code === "CONCURRENT_SUBMISSION") {
        this.state.toast = err.message;
        return null;
      }
      throw err;
    }
    this.state.toast = null;
    this.state.history.push({
      node: activity.node,
      outcome: view.outcome!,
      awards: view.awards ?? [],
      next: view.next!,
    });
    this.foldGamification(view);
    if (view.status === "Active") {
      this.state.activity = view.activity ?? null;
      this.state.draft = null;
    } else {
      this.state.phase = view.status.toLowerCase() as RunnerPhase;
      this.state.activity = null;
      this.state.draft = null;
      this.state.failureReason = view.next?.reason ?? null;
    }
    return view;
  }

  private foldGamification(view: SessionView): void {
    this.state.points = view.gamification.points;
    this.state.badges = view.gamification.badges;
    this.state.streak = view.gamification.streak;
  }
}
