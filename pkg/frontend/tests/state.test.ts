import { describe, expect, it } from "vitest";

import { ApiClient, Label, NextPayload, PendingQuestion } from "../src/api.js";
import { QuizController } from "../src/state.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

interface FakeSession {
  difficulty: Record<string, number>;
  streak: Record<string, number>;
  mastered: Set<string>;
  attempts: { chapter: string; correct: boolean }[];
  pending: PendingQuestion | null;
  counter: number;
}

/** Minimal in-memory stand-in honoring the service contract. */
function fakeService(chapters: string[], answerKey: Label = "a") {
  const session: FakeSession = {
    difficulty: Object.fromEntries(chapters.map((c) => [c, 1])),
    streak: Object.fromEntries(chapters.map((c) => [c, 0])),
    mastered: new Set(),
    attempts: [],
    pending: null,
    counter: 0,
  };

  function nextChapter(): string | null {
    const last = session.attempts.at(-1)?.chapter;
    const start = last ? chapters.indexOf(last) + 1 : 0;
    for (let i = 0; i < chapters.length; i++) {
      const chapter = chapters[(start + i) % chapters.length];
      if (!session.mastered.has(chapter)) return chapter;
    }
    return null;
  }

  const fetchImpl: FetchLike = async (input, init) => {
    const json = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    if (input.endsWith("/sessions") && init?.method === "POST") {
      return json(201, { session_id: "fake-session" });
    }
    if (input.endsWith("/next")) {
      if (!session.pending) {
        const chapter = nextChapter();
        if (!chapter) return json(200, { complete: true });
        session.pending = {
          complete: false,
          question_id: `q${session.counter++}`,
          subject: "S",
          chapter,
          stem: `Stem for ${chapter} #${session.counter}?`,
          options: { a: "1", b: "2", c: "3", d: "4" },
          difficulty: session.difficulty[chapter],
        };
      }
      return json(200, session.pending satisfies NextPayload);
    }
    if (input.endsWith("/answers") && init?.method === "POST") {
      const body = JSON.parse(String(init.body)) as { question_id: string; chosen: Label };
      if (!session.pending || body.question_id !== session.pending.question_id) {
        return json(409, { detail: "stale or unknown question id" });
      }
      const chapter = session.pending.chapter;
      const correct = body.chosen === answerKey;
      const askDifficulty = session.difficulty[chapter];
      session.attempts.push({ chapter, correct });
      if (correct && askDifficulty >= 3) session.streak[chapter] += 1;
      else session.streak[chapter] = 0;
      if (correct) session.difficulty[chapter] = Math.min(askDifficulty + 1, 5);
      if (session.streak[chapter] >= 3) session.mastered.add(chapter);
      session.pending = null;
      return json(200, {
        correct,
        correct_label: answerKey,
        new_difficulty: session.difficulty[chapter],
        mastered: session.mastered.has(chapter),
      });
    }
    if (input.endsWith("/report")) {
      return json(200, {
        session_id: "fake-session",
        chapters: chapters.map((chapter) => ({
          subject: "S",
          chapter,
          attempts: session.attempts.filter((a) => a.chapter === chapter).length,
          correct: session.attempts.filter((a) => a.chapter === chapter && a.correct).length,
          accuracy: "0.00%",
          final_difficulty: session.difficulty[chapter],
          mastered: session.mastered.has(chapter),
        })),
        overall: { attempts: session.attempts.length, correct: 0, accuracy: "0.00%" },
        complete: session.mastered.size === chapters.length,
      });
    }
    return json(404, { detail: "unknown route" });
  };

  return { session, fetchImpl, api: new ApiClient("http://fake", fetchImpl) };
}

describe("QuizController", () => {
  it("starts a session and surfaces the first question", async () => {
    const { api } = fakeService(["A", "B"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    expect(controller.state.sessionId).toBe("fake-session");
    expect(controller.state.screen).toBe("quiz");
    expect(controller.state.pending?.difficulty).toBe(1);
    expect(controller.state.pending?.chapter).toBe("A");
  });

  it("never holds a correct label before grading", async () => {
    const { api } = fakeService(["A"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    const payload = controller.state.pending as unknown as Record<string, unknown>;
    expect(payload).not.toHaveProperty("answer");
    expect(payload).not.toHaveProperty("correct_label");
    expect(payload).not.toHaveProperty("explanation");
  });

  it("updates difficulty through the feedback payload only", async () => {
    const { api } = fakeService(["A"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    await controller.submit("a");
    expect(controller.state.feedback?.correct).toBe(true);
    expect(controller.state.feedback?.new_difficulty).toBe(2);
    expect(controller.state.pending?.difficulty).toBe(2);
  });

  it("holds difficulty on a wrong answer", async () => {
    const { api } = fakeService(["A"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    await controller.submit("b");
    expect(controller.state.feedback?.correct).toBe(false);
    expect(controller.state.feedback?.new_difficulty).toBe(1);
  });

  it("reaches the completion screen once every chapter is mastered", async () => {
    const { api } = fakeService(["A"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    for (let i = 0; i < 8 && controller.state.screen === "quiz"; i++) {
      await controller.submit("a");
    }
    expect(controller.state.screen).toBe("complete");
    expect(controller.state.report?.complete).toBe(true);
    expect(controller.state.pending).toBeNull();
  });

  it("silently refetches on a stale-question conflict", async () => {
    const { api, session } = fakeService(["A", "B"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    // another tab answered first: the pending question changes under us
    session.pending = null;
    session.counter = 40;
    await controller.submit("a");
    expect(controller.state.error).toBeNull();
    expect(controller.state.pending?.question_id).toBe("q40");
  });

  it("raises the retry banner on network failure and recovers on retry", async () => {
    const { fetchImpl } = fakeService(["A"]);
    let failNext = false;
    const flaky = new ApiClient("http://fake", async (input, init) => {
      if (failNext) {
        failNext = false;
        throw new TypeError("fetch failed");
      }
      return fetchImpl(input, init);
    });
    const controller = new QuizController(flaky);
    await controller.start("grade9-math");
    failNext = true;
    await controller.submit("a");
    expect(controller.state.error).toContain("fetch failed");
    await controller.refresh();
    expect(controller.state.error).toBeNull();
    expect(controller.state.pending).not.toBeNull();
  });

  it("ignores submissions while a request is in flight", async () => {
    const { api } = fakeService(["A"]);
    const controller = new QuizController(api);
    await controller.start("grade9-math");
    const first = controller.submit("a");
    const second = controller.submit("a"); // dropped: busy
    await Promise.all([first, second]);
    expect(controller.state.report?.overall.attempts).toBe(1);
  });

  it("resumes the same pending question from a stored session id", async () => {
    const { api } = fakeService(["A", "B"]);
    const first = new QuizController(api);
    await first.start("grade9-math");
    const pendingId = first.state.pending?.question_id;
    const second = new QuizController(api);
    await second.resume("fake-session");
    expect(second.state.pending?.question_id).toBe(pendingId);
  });
});
