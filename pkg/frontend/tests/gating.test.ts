import { describe, expect, it } from "vitest";

import { renderImcForm, renderSidebar, renderTrainForm } from "../src/sidebar.js";
import { defaultSession } from "../src/state.js";
import { renderEmptyMetrics } from "../src/tabs/metrics.js";

const noop = {
  onUpload: () => {},
  onTrain: () => {},
  onImc: () => {},
  onTheme: () => {},
};

describe("control gating", () => {
  it("disables the inverse-search controls until a model is active", () => {
    const off = renderImcForm(defaultSession().imcForm, ["PVA"], false);
    expect(off.disabled).toBe(true);
    expect(off.textContent).toContain("Train or load a model");

    const on = renderImcForm(defaultSession().imcForm, ["PVA"], true);
    expect(on.disabled).toBe(false);
    expect(on.textContent).not.toContain("Train or load a model");
  });

  it("disables training until a dataset is loaded", () => {
    expect(renderTrainForm(defaultSession().trainForm, false).disabled).toBe(true);
    expect(renderTrainForm(defaultSession().trainForm, true).disabled).toBe(false);
  });

  it("gates both sidebar forms off the session state", () => {
    const fresh = renderSidebar(defaultSession(), noop);
    expect(fresh.querySelector<HTMLFieldSetElement>(".train-form")?.disabled).toBe(true);
    expect(fresh.querySelector<HTMLFieldSetElement>(".imc-form")?.disabled).toBe(true);

    const withData = renderSidebar({ ...defaultSession(), datasetId: "d1" }, noop);
    expect(withData.querySelector<HTMLFieldSetElement>(".train-form")?.disabled).toBe(false);
    expect(withData.querySelector<HTMLFieldSetElement>(".imc-form")?.disabled).toBe(true);

    const withModel = renderSidebar(
      { ...defaultSession(), datasetId: "d1", modelId: "m1", polymers: ["PVA"] },
      noop,
    );
    expect(withModel.querySelector<HTMLFieldSetElement>(".imc-form")?.disabled).toBe(false);
  });

  it("shows a sidebar prompt instead of metrics when nothing is trained", () => {
    const empty = renderEmptyMetrics();
    expect(empty.className).toContain("empty-state");
    expect(empty.textContent).toContain("No trained model yet.");
    expect(empty.textContent).toContain("sidebar");
  });
});
