import { describe, expect, it } from "vitest";

import { renderSuggestions } from "../src/suggestionBox.js";
import type { Suggestions } from "../src/types.js";

function suggestions(overrides: Partial<Suggestions>): Suggestions {
  return {
    inline_preview: "flush for oil",
    alternates: [],
    lm_suggestion: null,
    highlight_len: 0,
    ...overrides,
  };
}

describe("suggestion box", () => {
  it("hides completely when nothing is available", () => {
    expect(renderSuggestions(null).visible).toBe(false);
    expect(renderSuggestions(suggestions({})).visible).toBe(false);
  });

  it("shows alternate rows in rank order", () => {
    const model = renderSuggestions(suggestions({
      alternates: ["flush form oil", "flush fox oil"],
    }));
    expect(model.visible).toBe(true);
    expect(model.rows.map((r) => r.text)).toEqual(["flush form oil", "flush fox oil"]);
    expect(model.rows.every((r) => r.kind === "alternate")).toBe(true);
  });

  it("LM row hidden while the server withholds the suggestion (short prefix)", () => {
    const model = renderSuggestions(suggestions({ alternates: ["one"], lm_suggestion: null }));
    expect(model.rows.some((r) => r.kind === "lm")).toBe(false);
  });

  it("LM row appears once the server sends a suggestion (prefix gate passed)", () => {
    const model = renderSuggestions(suggestions({ lm_suggestion: "for the oil pump" }));
    expect(model.rows).toEqual([{ kind: "lm", text: "for the oil pump" }]);
    expect(model.visible).toBe(true);
  });

  it("empty alternate strings never render a row", () => {
    const model = renderSuggestions(suggestions({ alternates: ["", "real one"] }));
    expect(model.rows.map((r) => r.text)).toEqual(["real one"]);
  });
});
