import { describe, expect, it } from "vitest";

import { escapeHtml, renderItem, renderReport } from "../src/render.js";
import type { ValidationReport } from "../src/types.js";

describe("html rendering", () => {
  it("escapes markup in user-controlled text", () => {
    expect(escapeHtml(`<script>alert("x")</script>`)).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt;",
    );
    const bubble = renderItem({
      type: "bubble",
      seq: 3,
      agent: "pro",
      state: "opening",
      turnIndex: 0,
      text: "<b>bold claim</b>",
      human: false,
      toolCalls: [],
    });
    expect(bubble).toContain("&lt;b&gt;bold claim&lt;/b&gt;");
    expect(bubble).not.toContain("<b>");
  });

  it("renders tool rows as collapsible details", () => {
    const html = renderItem({
      type: "tool",
      seq: 4,
      agent: "pro",
      tool: "echo",
      ok: true,
      digest: "motion noted",
      params: { text: "motion noted" },
    });
    expect(html).toContain("<details");
    expect(html).toContain("<summary>pro used echo</summary>");
    expect(html).toContain("motion noted");
  });

  it("lists issues with path and code", () => {
    const report: ValidationReport = {
      ok: false,
      errors: [
        { path: "sop.initial_state", code: "REFERENCE_ERROR", message: "nope" },
      ],
      warnings: [],
    };
    const html = renderReport(report);
    expect(html).toContain("sop.initial_state");
    expect(html).toContain("REFERENCE_ERROR");
  });
});
