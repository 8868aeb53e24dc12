// Wires two draft panels and the compare view to the service API.
// Base URL is configurable (?api=... or window.SIMREC_API_BASE); with the
// UI served by the service itself the default same-origin paths work.

import { ApiClient } from "./api.js";
import { renderCompare } from "./compare.js";
import { DraftController } from "./draft.js";
import { renderRanking } from "./ranking.js";
import type { DraftState } from "./draft.js";

declare global {
  interface Window {
    SIMREC_API_BASE?: string;
  }
}

function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  return param ?? window.SIMREC_API_BASE ?? "";
}

function bindPanel(panel: HTMLElement, controller: DraftController): void {
  const title = panel.querySelector<HTMLInputElement>(".draft-title")!;
  const abstract = panel.querySelector<HTMLTextAreaElement>(".draft-abstract")!;
  const keywordInput = panel.querySelector<HTMLInputElement>(".draft-keyword-input")!;
  const tags = panel.querySelector<HTMLElement>(".draft-tags")!;
  const slider = panel.querySelector<HTMLInputElement>(".draft-k")!;
  const kLabel = panel.querySelector<HTMLElement>(".draft-k-value")!;
  const status = panel.querySelector<HTMLElement>(".draft-status")!;
  const banner = panel.querySelector<HTMLElement>(".draft-banner")!;
  const results = panel.querySelector<HTMLElement>(".draft-results")!;

  title.addEventListener("input", () => controller.setTitle(title.value));
  abstract.addEventListener("input", () => controller.setAbstract(abstract.value));
  keywordInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter" || event.key === ",") {
      event.preventDefault();
      controller.addKeyword(keywordInput.value);
      keywordInput.value = "";
    }
  });
  slider.addEventListener("input", () => controller.setK(Number(slider.value)));

  controller.subscribe((state: DraftState) => {
    kLabel.textContent = String(state.k);
    status.textContent = state.inFlight ? "updating..." : "";
    banner.textContent = state.errorBanner ?? state.validationMessage ?? "";
    banner.hidden = banner.textContent === "";

    tags.textContent = "";
    for (const tag of state.keywords) {
      const chip = document.createElement("button");
      chip.className = "tag";
      chip.type = "button";
      chip.textContent = `${tag} ×`;
      chip.addEventListener("click", () => controller.removeKeyword(tag));
      tags.append(chip);
    }

    if (state.lastResponse) {
      renderRanking(results, state.lastResponse.items);
    }
  });
}

function main(): void {
  const api = new ApiClient(apiBase());
  const controllers: DraftController[] = [];
  for (const panel of document.querySelectorAll<HTMLElement>(".draft-panel")) {
    const controller = new DraftController(api);
    bindPanel(panel, controller);
    controllers.push(controller);
  }

  const compareButton = document.querySelector<HTMLButtonElement>("#compare-button");
  const compareView = document.querySelector<HTMLElement>("#compare-view");
  if (compareButton && compareView && controllers.length >= 2) {
    compareButton.addEventListener("click", () => {
      const [a, b] = controllers;
      if (a.state.lastResponse && b.state.lastResponse) {
        renderCompare(compareView, a.state.lastResponse.items,
          b.state.lastResponse.items);
      } else {
        compareView.textContent = "Both drafts need a ranking first.";
      }
    });
  }
}

main();
