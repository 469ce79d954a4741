// Browser entry point: binds the headless controller to the page.

import { ApiClient } from "./api.js";
import { SessionConsole } from "./console.js";
import { renderConsole, renderReport } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

function defaultBase(): string {
  const fromQuery = new URLSearchParams(location.search).get("base");
  return fromQuery ?? "http://127.0.0.1:8910";
}

function start(): void {
  const baseInput = el<HTMLInputElement>("base-url");
  const configText = el<HTMLTextAreaElement>("config-text");
  const createButton = el<HTMLButtonElement>("create-session");
  const sessionInput = el<HTMLInputElement>("session-id");
  const openButton = el<HTMLButtonElement>("open-session");
  const reportPane = el<HTMLDivElement>("report");
  const sessionPane = el<HTMLDivElement>("session-pane");

  baseInput.value = defaultBase();

  let active: SessionConsole | null = null;

  const mount = (): SessionConsole => {
    active?.close();
    const api = new ApiClient(baseInput.value.trim());
    active = new SessionConsole({
      api,
      onChange: (state) => {
        sessionPane.innerHTML = renderConsole(state);
        const submit = document.getElementById("turn-submit");
        const text = document.getElementById("turn-text") as
          | HTMLTextAreaElement
          | null;
        if (submit !== null && text !== null) {
          submit.addEventListener("click", () => {
            void active?.submitTurn(text.value);
          });
        }
      },
    });
    return active;
  };

  createButton.addEventListener("click", () => {
    const consoleCtl = mount();
    reportPane.innerHTML = "";
    void consoleCtl.createFromConfigText(configText.value).then((outcome) => {
      if (outcome.parseError !== undefined) {
        reportPane.textContent = `config is not valid JSON: ${outcome.parseError}`;
      } else if (outcome.report !== undefined) {
        reportPane.innerHTML = renderReport(outcome.report);
      } else if (outcome.sessionId !== undefined) {
        sessionInput.value = outcome.sessionId;
      }
    });
  });

  openButton.addEventListener("click", () => {
    const consoleCtl = mount();
    reportPane.innerHTML = "";
    void consoleCtl.open(sessionInput.value.trim());
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
