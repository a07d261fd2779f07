// Pure HTML renderers. Every screen is a function of state; nothing here
// knows a correct answer until the grading response arrives.

import {
  AnswerFeedback,
  ExperimentResult,
  LABELS,
  PendingQuestion,
  SessionReport,
} from "./api.js";
import { QuizViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export const CONDITION_TITLES: Record<string, string> = {
  baseline: "Baseline",
  teach_no_explanation: "Teaching without Explanation",
  teach_with_explanation: "Teaching with Explanation",
};

export function renderStart(curricula: string[]): string {
  const options = curricula
    .map((name) => `<option value="${escapeHtml(name)}">${escapeHtml(name)}</option>`)
    .join("");
  return `
<section class="card start">
  <h1>adaptquiz</h1>
  <p>Questions adapt to you: correct answers raise the difficulty, and a
  chapter retires once you master it.</p>
  <label>Curriculum
    <select id="curriculum">${options}</select>
  </label>
  <button id="start" data-action="start">Start session</button>
</section>`;
}

export function renderQuestion(q: PendingQuestion, busy: boolean): string {
  const options = LABELS.map(
    (label) => `
    <button class="option" data-action="answer" data-label="${label}" ${busy ? "disabled" : ""}>
      <span class="label">${label})</span> ${escapeHtml(q.options[label])}
    </button>`,
  ).join("");
  return `
<section class="card question">
  <header>
    <span class="chapter">${escapeHtml(q.subject)} / ${escapeHtml(q.chapter)}</span>
    <span class="difficulty-badge">difficulty ${q.difficulty}</span>
  </header>
  <p class="stem">${escapeHtml(q.stem)}</p>
  <div class="options">${options}</div>
  <p class="hint">press a, b, c or d</p>
</section>`;
}

export function renderFeedback(feedback: AnswerFeedback | null): string {
  if (!feedback) return "";
  const verdict = feedback.correct
    ? `<span class="verdict correct">Correct!</span>`
    : `<span class="verdict incorrect">Incorrect - the answer was
       ${feedback.correct_label}.</span>`;
  const mastered = feedback.mastered
    ? `<span class="mastered-note">Chapter mastered.</span>`
    : "";
  return `
<aside class="feedback" data-correct="${feedback.correct}">
  ${verdict}
  <span class="difficulty-note">difficulty now ${feedback.new_difficulty}</span>
  ${mastered}
</aside>`;
}

export function renderDashboard(report: SessionReport | null): string {
  if (!report) return "";
  const rows = report.chapters
    .map(
      (ch) => `
    <tr class="${ch.mastered ? "mastered" : ""}">
      <td>${escapeHtml(ch.subject)} / ${escapeHtml(ch.chapter)}</td>
      <td>${ch.correct}/${ch.attempts}</td>
      <td>${ch.accuracy}</td>
      <td>${ch.final_difficulty}</td>
      <td>${ch.mastered ? "mastered" : "in progress"}</td>
    </tr>`,
    )
    .join("");
  return `
<section class="card dashboard">
  <h2>Progress</h2>
  <table>
    <thead><tr><th>Chapter</th><th>Correct</th><th>Accuracy</th>
      <th>Difficulty</th><th>Status</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

export function renderComplete(report: SessionReport | null): string {
  const overall = report
    ? `<p>Overall: ${report.overall.correct}/${report.overall.attempts}
       (${report.overall.accuracy})</p>`
    : "";
  return `
<section class="card complete">
  <h1>All chapters mastered</h1>
  ${overall}
  <button data-action="restart">Start another session</button>
</section>`;
}

export function renderErrorBanner(error: string | null): string {
  if (!error) return "";
  return `
<div class="error-banner">
  <span>Request failed: ${escapeHtml(error)}</span>
  <button data-action="retry">Retry</button>
</div>`;
}

export function renderQuiz(state: QuizViewState): string {
  const question = state.pending ? renderQuestion(state.pending, state.busy) : "";
  return `
${renderErrorBanner(state.error)}
${renderFeedback(state.feedback)}
${question}
${renderDashboard(state.report)}`;
}

export function renderResultsTable(result: ExperimentResult): string {
  const headers = result.conditions
    .map((c) => `<th>${escapeHtml(CONDITION_TITLES[c] ?? c)} (%)</th>`)
    .join("");
  const byKey = new Map(result.cells.map((c) => [`${c.level}|${c.condition}`, c]));
  const rows = result.levels
    .map((level) => {
      const cells = result.conditions
        .map((condition) => {
          const cell = byKey.get(`${level}|${condition}`);
          const value = cell ? cell.percentage.toFixed(2) + "%" : "-";
          return `<td data-level="${level}" data-condition="${escapeHtml(condition)}">${value}</td>`;
        })
        .join("");
      return `<tr><td>${level}</td>${cells}</tr>`;
    })
    .join("");
  return `
<section class="card results">
  <h2>Experiment results</h2>
  <table class="results-table">
    <thead><tr><th>Difficulty Level</th>${headers}</tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

export function renderResultsStatus(status: string, progress?: number): string {
  const pct = progress === undefined ? "" : ` (${Math.round(progress * 100)}%)`;
  return `<section class="card results"><p>Experiment ${escapeHtml(status)}${pct}</p></section>`;
}
