// Quiz view controller: every state change is driven by a service response.
// One request in flight at a time; network failures raise the retry banner,
// a stale-question conflict silently refetches the pending question.

import {
  AnswerFeedback,
  ApiClient,
  ApiError,
  Label,
  PendingQuestion,
  SessionReport,
} from "./api.js";

export type Screen = "start" | "quiz" | "complete";

export interface QuizViewState {
  screen: Screen;
  sessionId: string | null;
  pending: PendingQuestion | null;
  feedback: AnswerFeedback | null;
  report: SessionReport | null;
  busy: boolean;
  error: string | null;
}

export function initialState(): QuizViewState {
  return {
    screen: "start",
    sessionId: null,
    pending: null,
    feedback: null,
    report: null,
    busy: false,
    error: null,
  };
}

export class QuizController {
  state: QuizViewState = initialState();

  constructor(
    private api: ApiClient,
    private onChange: (state: QuizViewState) => void = () => {},
  ) {}

  private emit() {
    this.onChange(this.state);
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    if (this.state.busy) return;
    this.state = { ...this.state, busy: true, error: null };
    this.emit();
    try {
      await action();
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      this.state = { ...this.state, error: message };
    }
    this.state = { ...this.state, busy: false };
    this.emit();
  }

  async start(curriculum: string, config?: Record<string, unknown>): Promise<void> {
    await this.guarded(async () => {
      const created = await this.api.createSession(curriculum, config);
      this.state = {
        ...initialState(),
        busy: true,
        sessionId: created.session_id,
        screen: "quiz",
      };
      await this.refreshInner();
    });
  }

  /** Attach to an existing session (session id restored from the URL). */
  async resume(sessionId: string): Promise<void> {
    await this.guarded(async () => {
      this.state = { ...initialState(), busy: true, sessionId, screen: "quiz" };
      await this.refreshInner();
    });
  }

  async refresh(): Promise<void> {
    await this.guarded(() => this.refreshInner());
  }

  private async refreshInner(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) return;
    const next = await this.api.nextQuestion(sessionId);
    const report = await this.api.report(sessionId);
    if (next.complete) {
      this.state = { ...this.state, pending: null, report, screen: "complete" };
    } else {
      this.state = { ...this.state, pending: next, report, screen: "quiz" };
    }
  }

  async submit(label: Label): Promise<void> {
    await this.guarded(async () => {
      const { sessionId, pending } = this.state;
      if (!sessionId || !pending) return;
      let feedback: AnswerFeedback;
      try {
        feedback = await this.api.submitAnswer(sessionId, pending.question_id, label);
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          // someone answered ahead of us (e.g. another tab): resync silently
          await this.refreshInner();
          return;
        }
        throw err;
      }
      this.state = { ...this.state, feedback };
      await this.refreshInner();
    });
  }
}
