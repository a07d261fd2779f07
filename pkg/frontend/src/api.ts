// Typed client over the service's JSON endpoints. All grading happens
// server-side; the pending-question payload never includes the correct label.

export type Label = "a" | "b" | "c" | "d";
export const LABELS: Label[] = ["a", "b", "c", "d"];

export interface PendingQuestion {
  complete: false;
  question_id: string;
  subject: string;
  chapter: string;
  stem: string;
  options: Record<Label, string>;
  difficulty: number;
}

export interface SessionComplete {
  complete: true;
}

export type NextPayload = PendingQuestion | SessionComplete;

export interface AnswerFeedback {
  correct: boolean;
  correct_label: Label;
  new_difficulty: number;
  mastered: boolean;
}

export interface ChapterReport {
  subject: string;
  chapter: string;
  attempts: number;
  correct: number;
  accuracy: string;
  final_difficulty: number;
  mastered: boolean;
}

export interface SessionReport {
  session_id: string;
  chapters: ChapterReport[];
  overall: { attempts: number; correct: number; accuracy: string };
  complete: boolean;
}

export interface ResultCell {
  level: number;
  condition: string;
  attempts: number;
  correct: number;
  parse_failures: number;
  percentage: number;
}

export interface ExperimentResult {
  conditions: string[];
  levels: number[];
  cells: ResultCell[];
}

export type ExperimentStatus =
  | { status: "running"; progress: number }
  | { status: "failed"; error: string }
  | { status: "done"; result: ExperimentResult };

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const payload = await resp.json();
        if (payload && typeof payload.detail === "string") detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createSession(curriculum: string, config?: Record<string, unknown>) {
    return this.request<{ session_id: string }>("POST", "/sessions", {
      curriculum,
      ...(config ? { config } : {}),
    });
  }

  nextQuestion(sessionId: string) {
    return this.request<NextPayload>("GET", `/sessions/${sessionId}/next`);
  }

  submitAnswer(sessionId: string, questionId: string, chosen: Label) {
    return this.request<AnswerFeedback>("POST", `/sessions/${sessionId}/answers`, {
      question_id: questionId,
      chosen,
    });
  }

  report(sessionId: string) {
    return this.request<SessionReport>("GET", `/sessions/${sessionId}/report`);
  }

  experiment(experimentId: string) {
    return this.request<ExperimentStatus>("GET", `/experiments/${experimentId}`);
  }
}
