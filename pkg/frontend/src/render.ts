// HTML string renderers. Kept free of DOM calls so they run under plain
// node in the tests; main.ts assigns the output to innerHTML.

import type { ConsoleState } from "./console.js";
import type { SessionView, TimelineItem } from "./timeline.js";
import type { ValidationReport } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderItem(item: TimelineItem): string {
  switch (item.type) {
    case "divider":
      return (
        `<div class="state-divider" data-seq="${item.seq}">` +
        `<span>${escapeHtml(item.state)}</span></div>`
      );
    case "bubble": {
      const cls = item.human ? "bubble human" : "bubble";
      const tools = item.toolCalls.length
        ? `<ul class="bubble-tools">` +
          item.toolCalls
            .map((c) => `<li>${escapeHtml(c.tool)}: ${escapeHtml(c.digest)}</li>`)
            .join("") +
          `</ul>`
        : "";
      return (
        `<article class="${cls}" data-seq="${item.seq}" data-agent="${escapeHtml(item.agent)}">` +
        `<header>${escapeHtml(item.agent)} in ${escapeHtml(item.state)}, turn ${item.turnIndex}</header>` +
        `<p>${escapeHtml(item.text)}</p>${tools}</article>`
      );
    }
    case "tool":
      return (
        `<details class="tool-row" data-seq="${item.seq}">` +
        `<summary>${escapeHtml(item.agent)} used ${escapeHtml(item.tool)}` +
        `${item.ok ? "" : " (failed)"}</summary>` +
        `<pre>${escapeHtml(JSON.stringify(item.params))}\n${escapeHtml(item.digest)}</pre>` +
        `</details>`
      );
    case "notice":
      return (
        `<div class="notice" data-seq="${item.seq}">` +
        `<span class="notice-label">${escapeHtml(item.label)}</span> ` +
        `${escapeHtml(item.detail)}</div>`
      );
  }
}

export function renderTimeline(view: SessionView): string {
  return view.timeline.map(renderItem).join("\n");
}

function renderBadges(view: SessionView): string {
  return view.agents
    .map(
      (badge) =>
        `<span class="agent-badge${badge.isHuman ? " human" : ""}">` +
        `${escapeHtml(badge.name)}${badge.isHuman ? " (you)" : ""}</span>`,
    )
    .join(" ");
}

function renderInputBox(state: ConsoleState): string {
  const pending = state.view.pendingInput;
  const disabled = pending === null || state.submitting;
  const prompt = pending
    ? `acting as ${escapeHtml(pending.agent)} in ${escapeHtml(pending.state)}`
    : "no input requested";
  const summary = pending
    ? `<pre class="observation">${escapeHtml(pending.summary)}</pre>`
    : "";
  return (
    `<div class="input-box${disabled ? " disabled" : ""}">` +
    `<label>${prompt}</label>${summary}` +
    `<textarea id="turn-text"${disabled ? " disabled" : ""}></textarea>` +
    `<button id="turn-submit"${disabled ? " disabled" : ""}>send</button></div>`
  );
}

export function renderReport(report: ValidationReport): string {
  const rows = [...report.errors, ...report.warnings]
    .map(
      (issue) =>
        `<li class="issue"><code>${escapeHtml(issue.path)}</code> ` +
        `[${escapeHtml(issue.code)}] ${escapeHtml(issue.message)}</li>`,
    )
    .join("");
  return `<ul class="validation-report">${rows}</ul>`;
}

export function renderConsole(state: ConsoleState): string {
  if (state.notFound) {
    return `<div class="not-found">session not found</div>`;
  }
  const view = state.view;
  const toasts = state.toasts
    .map((toast) => `<div class="toast">${escapeHtml(toast)}</div>`)
    .join("");
  return (
    `<div class="session" data-status="${view.status}">` +
    `<header class="session-header">` +
    `<span class="state">${escapeHtml(view.currentState ?? "")}</span> ` +
    `<span class="status">${view.status}</span> ` +
    `<span class="stream">${state.streamStatus}</span> ` +
    `${renderBadges(view)}</header>` +
    `<div class="timeline">${renderTimeline(view)}</div>` +
    `${renderInputBox(state)}` +
    `<div class="toasts">${toasts}</div></div>`
  );
}
