/**
 * Thin typed client for the tutor HTTP API.  All grading, validation, and
 * routing decisions happen server-side; the client only moves documents.
 */

import { FragmentDoc } from "./document.js";
import { JsonValue, canonicalJson, parseJson, plainValue } from "./jsontext.js";

export interface ValidationIssue {
  code: string;
  where: string;
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  errors: ValidationIssue[];
  warnings: ValidationIssue[];
}

export interface ActivityView {
  node: string;
  kind: string;
  modality: string;
  payload: unknown;
  submission_schema: { kind: string; payload?: string; items?: number[] };
}

export interface GamificationView {
  points: number;
  badges: string[];
  streak: number;
}

export interface AwardView {
  rule_id: string;
  points: number;
  badge: string | null;
}

export interface OutcomeView {
  passed: boolean;
  score: number;
  answer: string;
  label: string;
  feedback: string;
  detail: Record<string, unknown>;
}

export interface SessionView {
  id: string;
  fragment_id: string;
  learner_id: string;
  status: "Active" | "Completed" | "Failed";
  current: string;
  steps: number;
  gamification: GamificationView;
  activity?: ActivityView;
  awards?: AwardView[];
  outcome?: OutcomeView;
  next?: { kind: string; target: string | null; reason: string | null };
  transcript?: unknown[];
}

export interface SubmissionBody {
  kind: string;
  payload: unknown;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly token: string | null = null,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request(method: string, path: string, body?: JsonValue): Promise<unknown> {
    const text = await this.requestText(method, path, body);
    return text === "" ? null : JSON.parse(text);
  }

  /** Like request(), but returns the raw response body text. */
  async requestText(method: string, path: string, body?: JsonValue): Promise<string> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : canonicalJson(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = "INTERNAL";
      let message = text || response.statusText;
      let detail: Record<string, unknown> = {};
      try {
        const err = (JSON.parse(text) as { error?: Record<string, unknown> }).error ?? {};
        code = (err["code"] as string) ?? code;
        message = (err["message"] as string) ?? message;
        detail = (err["detail"] as Record<string, unknown>) ?? {};
      } catch {
        // non-JSON error body; keep the raw text as the message
      }
      throw new ApiError(response.status, code, message, detail);
    }
    return text;
  }

  // -- fragments ----------------------------------------------------------

  async publishFragment(doc: FragmentDoc): Promise<{ id: string; version: number }> {
    return (await this.request("POST", "/fragments", doc as unknown as JsonValue)) as {
      id: string;
      version: number;
    };
  }

  async listFragments(): Promise<string[]> {
    return ((await this.request("GET", "/fragments")) as { ids: string[] }).ids;
  }

  /** Raw stored bytes — the document of record, side maps included. */
  async fetchFragmentText(id: string, version?: number): Promise<string> {
    const query = version === undefined ? "" : `?version=${version}`;
    return this.requestText("GET", `/fragments/${encodeURIComponent(id)}${query}`);
  }

  async fetchFragment(id: string, version?: number): Promise<FragmentDoc> {
    return parseJson(await this.fetchFragmentText(id, version)) as unknown as FragmentDoc;
  }

  async validateFragment(id: string, doc?: FragmentDoc): Promise<ValidationReport> {
    return (await this.request(
      "POST",
      `/fragments/${encodeURIComponent(id)}/validate`,
      doc === undefined ? null : (doc as unknown as JsonValue),
    )) as unknown as ValidationReport;
  }

  async negotiate(id: string, capabilities: string[]): Promise<Record<string, unknown>> {
    return (await this.request("POST", `/fragments/${encodeURIComponent(id)}/negotiate`, {
      capabilities,
    })) as Record<string, unknown>;
  }

  // -- catalogs and rule packs ----------------------------------------------

  async publishRulepack(doc: Record<string, unknown>): Promise<void> {
    await this.request("POST", "/rulepacks", doc as JsonValue);
  }

  async publishCatalog(doc: Record<string, unknown>): Promise<void> {
    await this.request("POST", "/catalogs", doc as JsonValue);
  }

  // -- sessions ------------------------------------------------------------

  async createSession(
    fragmentId: string,
    learnerId: string,
    capabilities: string[],
  ): Promise<SessionView> {
    return (await this.request("POST", "/sessions", {
      fragment_id: fragmentId,
      learner_id: learnerId,
      capabilities,
    })) as unknown as SessionView;
  }

  async getSession(id: string): Promise<SessionView> {
    return (await this.request("GET", `/sessions/${encodeURIComponent(id)}`)) as unknown as SessionView;
  }

  async currentActivity(sessionId: string): Promise<ActivityView> {
    return (await this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/current`,
    )) as unknown as ActivityView;
  }

  async submit(sessionId: string, submission: SubmissionBody): Promise<SessionView> {
    return (await this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/submissions`,
      { submission: plainValue(submission as unknown as JsonValue) as JsonValue },
    )) as unknown as SessionView;
  }
}
