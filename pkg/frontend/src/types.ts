/** Payload shapes of the pipeline session API. */

export interface SessionQuestion {
  kind: "confirm" | "describe";
  text: string;
  goal_text: string | null;
  seq: number;
}

export interface CandidateView {
  text: string;
  mean_probability: number;
  viable: boolean | null;
  mismatch: string | null;
}

export interface SessionMetrics {
  retrieved?: number;
  proposed?: number;
  sourced?: number;
  instructions?: number;
  yes_no_instructions?: number;
  user_words?: number;
  prompt_tokens?: number;
  completion_tokens?: number;
  total_tokens?: number;
  completion_rate?: number;
}

export interface WorldView {
  placements?: Record<string, string>;
  doors?: Record<string, string>;
  held?: string | null;
}

export interface SessionView {
  status: string;
  current_object: string | null;
  question: SessionQuestion | null;
  candidates: CandidateView[];
  world: WorldView;
  metrics: SessionMetrics;
  report: Record<string, unknown> | null;
}
