// DOM bootstrap: hash routing, event delegation, answer hotkeys. The session
// id lives in the URL so a reload resumes the same pending question.

import { ApiClient, Label, LABELS } from "./api.js";
import { QuizController } from "./state.js";
import {
  renderComplete,
  renderQuiz,
  renderResultsStatus,
  renderResultsTable,
  renderStart,
} from "./views.js";

const CURRICULA = ["grade9-math", "grade9-algebra"];

function isLabel(value: string): value is Label {
  return (LABELS as string[]).includes(value);
}

export function routeFromHash(hash: string): { page: string; id: string } {
  const parts = hash.replace(/^#\/?/, "").split("/");
  if (parts[0] === "quiz" && parts[1]) return { page: "quiz", id: parts[1] };
  if (parts[0] === "results" && parts[1]) return { page: "results", id: parts[1] };
  return { page: "start", id: "" };
}

export function startApp(root: HTMLElement, api: ApiClient = new ApiClient()): void {
  const controller = new QuizController(api, (state) => {
    const route = routeFromHash(window.location.hash);
    if (route.page !== "quiz" && route.page !== "start") return;
    if (state.screen === "start") {
      root.innerHTML = renderStart(CURRICULA);
    } else if (state.screen === "complete") {
      root.innerHTML = renderComplete(state.report);
    } else {
      root.innerHTML = renderQuiz(state);
    }
  });

  async function showResults(experimentId: string): Promise<void> {
    root.innerHTML = renderResultsStatus("loading");
    try {
      const status = await api.experiment(experimentId);
      if (status.status === "done") {
        root.innerHTML = renderResultsTable(status.result);
      } else if (status.status === "running") {
        root.innerHTML = renderResultsStatus("running", status.progress);
        setTimeout(() => void showResults(experimentId), 1000);
      } else {
        root.innerHTML = renderResultsStatus(`failed: ${status.error}`);
      }
    } catch (err) {
      root.innerHTML = renderResultsStatus(
        err instanceof Error ? err.message : String(err),
      );
    }
  }

  function applyRoute(): void {
    const route = routeFromHash(window.location.hash);
    if (route.page === "results") {
      void showResults(route.id);
    } else if (route.page === "quiz") {
      if (controller.state.sessionId !== route.id) {
        void controller.resume(route.id);
      }
    } else {
      root.innerHTML = renderStart(CURRICULA);
    }
  }

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) return;
    const action = target.dataset.action;
    if (action === "start") {
      const select = root.querySelector<HTMLSelectElement>("#curriculum");
      void controller.start(select?.value ?? CURRICULA[0]).then(() => {
        if (controller.state.sessionId) {
          window.location.hash = `#/quiz/${controller.state.sessionId}`;
        }
      });
    } else if (action === "answer" && isLabel(target.dataset.label ?? "")) {
      void controller.submit(target.dataset.label as Label);
    } else if (action === "retry") {
      void controller.refresh();
    } else if (action === "restart") {
      window.location.hash = "";
      root.innerHTML = renderStart(CURRICULA);
    }
  });

  document.addEventListener("keydown", (event) => {
    if (!isLabel(event.key)) return;
    const route = routeFromHash(window.location.hash);
    if (route.page !== "quiz" || controller.state.busy) return;
    void controller.submit(event.key as Label);
  });

  window.addEventListener("hashchange", applyRoute);
  applyRoute();
}

declare global {
  interface Window {
    adaptquizStart?: typeof startApp;
  }
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    startApp(root);
  }
  window.adaptquizStart = startApp;
}
