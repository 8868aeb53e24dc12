// Side-by-side draft comparison: align the two rankings by journal and
// highlight rank movements (the what-if loop).

import type { RankedItem } from "./types.js";

export interface Movement {
  journal_id: string;
  from: number | null; // 1-based rank in draft A, null if absent
  to: number | null;   // 1-based rank in draft B, null if absent
}

/**
 * Rank changes between two rankings.
 *
 * A journal present in both lists moves when its rank differs. A journal
 * present in only one list counts as a movement only when the other list
 * is long enough that it would have shown it (same-k entry/exit); journals
 * that disappear purely because the other draft asked for a smaller k are
 * truncation, not movement.
 */
export function computeMovements(a: RankedItem[], b: RankedItem[]): Movement[] {
  const rankA = new Map(a.map((item, i) => [item.journal_id, i + 1]));
  const rankB = new Map(b.map((item, i) => [item.journal_id, i + 1]));
  const ids = [...new Set([...rankA.keys(), ...rankB.keys()])].sort();
  const movements: Movement[] = [];
  for (const id of ids) {
    const from = rankA.get(id) ?? null;
    const to = rankB.get(id) ?? null;
    if (from !== null && to !== null) {
      if (from !== to) movements.push({ journal_id: id, from, to });
    } else if (from !== null && from <= b.length) {
      movements.push({ journal_id: id, from, to: null });
    } else if (to !== null && to <= a.length) {
      movements.push({ journal_id: id, from: null, to });
    }
  }
  return movements;
}

export function renderCompare(container: HTMLElement,
                              a: RankedItem[], b: RankedItem[]): Movement[] {
  const movements = computeMovements(a, b);
  const moved = new Map(movements.map((m) => [m.journal_id, m]));

  container.textContent = "";
  const wrap = document.createElement("div");
  wrap.className = "compare";
  const sides: Array<[string, RankedItem[], "from" | "to"]> = [
    ["Draft A", a, "from"],
    ["Draft B", b, "to"],
  ];
  for (const [label, items, side] of sides) {
    const column = document.createElement("div");
    column.className = "compare-column";
    const heading = document.createElement("h3");
    heading.textContent = label;
    column.append(heading);
    const list = document.createElement("ol");
    for (const item of items) {
      const row = document.createElement("li");
      row.dataset.journalId = item.journal_id;
      const movement = moved.get(item.journal_id);
      if (movement) {
        row.className = "moved";
        const from = movement.from ?? "-";
        const to = movement.to ?? "-";
        row.dataset.movement = `${from}->${to}`;
        if (side === "to" && movement.from !== null && movement.to !== null) {
          row.classList.add(movement.to < movement.from ? "moved-up" : "moved-down");
        }
      }
      row.append(`${item.name} (${item.journal_id}) ${item.score.toFixed(4)}`);
      list.append(row);
    }
    column.append(list);
    wrap.append(column);
  }
  container.append(wrap);
  return movements;
}

export function highlightedIds(container: HTMLElement): string[] {
  return [
    ...new Set(
      [...container.querySelectorAll<HTMLElement>("li.moved")].map(
        (row) => row.dataset.journalId ?? "",
      ),
    ),
  ].sort();
}
