// Ranked-list rendering. Scores and order come verbatim from the API
// payload; the client never re-sorts or re-scales.

import type { RankedItem } from "./types.js";

export function renderRanking(container: HTMLElement, items: RankedItem[]): void {
  container.textContent = "";
  const list = document.createElement("ol");
  list.className = "ranking";
  for (const item of items) {
    const row = document.createElement("li");
    row.className = "ranking-row";
    row.dataset.journalId = item.journal_id;
    row.dataset.score = String(item.score);

    const label = document.createElement("span");
    label.className = "ranking-name";
    label.textContent = `${item.name} (${item.journal_id})`;

    const bar = document.createElement("span");
    bar.className = "score-bar";
    bar.style.width = `${(item.score * 100).toFixed(2)}%`;

    const value = document.createElement("span");
    value.className = "ranking-score";
    value.textContent = item.score.toFixed(4);

    row.append(label, bar, value);
    list.append(row);
  }
  container.append(list);
}

export function renderedOrder(container: HTMLElement): string[] {
  return [...container.querySelectorAll<HTMLElement>(".ranking-row")].map(
    (row) => row.dataset.journalId ?? "",
  );
}

export function renderedScores(container: HTMLElement): number[] {
  return [...container.querySelectorAll<HTMLElement>(".ranking-row")].map(
    (row) => Number(row.dataset.score),
  );
}
