import { beforeEach, describe, expect, it } from "vitest";

import { renderThemePicker } from "../src/sidebar.js";
import { Store, THEMES, applyTheme, defaultSession } from "../src/state.js";
import type { Theme } from "../src/state.js";

beforeEach(() => {
  delete document.documentElement.dataset.theme;
});

describe("theme switching", () => {
  it("drives the palette from a single root attribute", () => {
    applyTheme("dark");
    expect(document.documentElement.dataset.theme).toBe("dark");
    applyTheme("green");
    expect(document.documentElement.dataset.theme).toBe("green");
  });

  it("applies the theme on store updates without any reload", () => {
    const store = new Store(defaultSession());
    store.update({ theme: "dark" });
    expect(document.documentElement.dataset.theme).toBe("dark");
    expect(store.state.theme).toBe("dark");

    store.update({ busy: "training" });
    expect(document.documentElement.dataset.theme).toBe("dark");
  });

  it("offers all three palettes and marks the active one", () => {
    const picked: Theme[] = [];
    const picker = renderThemePicker("green", (theme) => picked.push(theme));
    const buttons = Array.from(picker.querySelectorAll("button"));
    expect(buttons.map((b) => b.textContent)).toEqual(THEMES);
    expect(buttons[1].className).toContain("active");
    expect(buttons[0].className).not.toContain("active");

    buttons[2].dispatchEvent(new MouseEvent("click"));
    expect(picked).toEqual(["dark"]);
  });
});
