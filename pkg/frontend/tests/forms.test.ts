import { describe, expect, it } from "vitest";

import {
  defaultImcForm,
  defaultTrainForm,
  imcFormFromRequest,
  imcRequestFromForm,
  trainFormFromRequest,
  trainRequestFromForm,
} from "../src/state.js";
import { imcForm } from "./fixtures.js";

describe("form serialization", () => {
  it("round-trips the inverse-search form without loss", () => {
    const form = imcForm({ mode: "experimental", tolerance: 42.5, no_allow_pct: 7.5, seed: 11 });
    expect(imcFormFromRequest(imcRequestFromForm(form))).toEqual(form);
  });

  it("round-trips the default inverse-search form", () => {
    const form = defaultImcForm();
    expect(imcFormFromRequest(imcRequestFromForm(form))).toEqual(form);
  });

  it("round-trips the training form, including an unlimited row budget", () => {
    const form = defaultTrainForm();
    form.n_train = null;
    form.learners = ["gradient_boosting", "linear"];
    expect(trainFormFromRequest(trainRequestFromForm(form, "d123"))).toEqual(form);
  });

  it("carries the dataset id on the request but not back into the form", () => {
    const request = trainRequestFromForm(defaultTrainForm(), "d123");
    expect(request.dataset_id).toBe("d123");
    expect("dataset_id" in trainFormFromRequest(request)).toBe(false);
  });

  it("keeps request field values identical to the form fields", () => {
    const form = imcForm({ target: 512.25 });
    const request = imcRequestFromForm(form);
    expect(request.target).toBe(512.25);
    expect(request.n_simulations).toBe(form.n_simulations);
    expect(request.strictness).toBe("balanced");
  });
});
