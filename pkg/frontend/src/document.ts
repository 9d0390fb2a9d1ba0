/**
 * Fragment document types mirrored from the engine's file format, plus the
 * editor-only layout side map stored under the top-level "ui" key (the
 * engine ignores it but the store round-trips it).
 */

import { Num, decimal } from "./jsontext.js";

export type Modality = "text" | "audio" | "rich" | "code";
export type NodeKind = "lesson" | "close_ended" | "quiz" | "coding" | "abstract";

export const MODALITIES: readonly Modality[] = ["text", "audio", "rich", "code"];
export const NODE_KINDS: readonly NodeKind[] = [
  "lesson",
  "close_ended",
  "quiz",
  "coding",
  "abstract",
];

/** Numeric answers are {value, tolerance}; textual answers are a bare string. */
export type ExpectedAnswerDoc = { value: Num; tolerance?: Num } | string;

export interface QuizItemDoc {
  stem: string;
  choices: string[];
  correct: number;
}

export interface GraderDoc {
  required_tokens: string[];
  forbidden_tokens: string[];
  complexity_max: number | null;
  branch_keywords: string[];
  test_vectors: { input: string; expected_output: string }[];
}

export interface KindData {
  // lesson: empty object
  prompt?: string;
  expected?: ExpectedAnswerDoc;
  distractors?: Record<string, string>;
  items?: QuizItemDoc[];
  pass_threshold?: Num;
  statement?: string;
  grader?: GraderDoc;
  goal?: string[];
  constraints?: Record<string, unknown>;
}

export interface NodeDoc {
  id: string;
  kind: NodeKind;
  title: string;
  representations: Partial<Record<Modality, string>>;
  max_attempts: number | null;
  kind_data: KindData;
}

export type ConditionDoc = { builtin: string } | { expr: string };

export interface EdgeDoc {
  id: string;
  source: string;
  target: string;
  condition: ConditionDoc;
  label: string | null;
}

export interface Point {
  x: number;
  y: number;
}

export interface FragmentDoc {
  id: string;
  title: string;
  version: number;
  entry: string;
  cost: Num;
  provides: string[];
  requires: string[];
  nodes: NodeDoc[];
  edges: EdgeDoc[];
  ui?: { layout: Record<string, Point> };
}

export const DEFAULT_BRANCH_KEYWORDS = [
  "if",
  "else",
  "for",
  "while",
  "case",
  "&&",
  "||",
  "catch",
];

/** Fresh kind_data for a node of the given kind, matching engine defaults. */
export function defaultKindData(kind: NodeKind): KindData {
  switch (kind) {
    case "lesson":
      return {};
    case "close_ended":
      return { prompt: "", expected: { value: decimal(0), tolerance: decimal(1e-9) }, distractors: {} };
    case "quiz":
      return { items: [], pass_threshold: decimal(0.6) };
    case "coding":
      return {
        statement: "",
        grader: {
          required_tokens: [],
          forbidden_tokens: [],
          complexity_max: null,
          branch_keywords: [...DEFAULT_BRANCH_KEYWORDS],
          test_vectors: [],
        },
      };
    case "abstract":
      return { goal: [], constraints: {} };
  }
}
