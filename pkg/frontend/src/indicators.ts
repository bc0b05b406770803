import type { ScreenReport } from "./api.js";

// Column order matters: it is the on-screen reading order.
const NUMERIC_COLUMNS: { key: keyof NonNullable<ScreenReport["indicators"]>; label: string }[] = [
  { key: "fourth_singular_value", label: "rank-4 residual" },
  { key: "rank3_gap_ratio", label: "gap ratio" },
  { key: "gram_min_eigenvalue", label: "min Gram eigenvalue" },
  { key: "jacobian_rank_gap", label: "Jacobian rank gap" },
];

interface Row {
  report: ScreenReport;
  cells: (number | null)[];
}

function rowsFrom(reports: ScreenReport[]): Row[] {
  return reports.map((report) => ({
    report,
    cells: NUMERIC_COLUMNS.map((column) =>
      report.indicators ? (report.indicators[column.key] as number) : null,
    ),
  }));
}

/** Path of a tiny inline sparkline over the removal-trace scores. */
export function sparklinePath(
  trace: [number, number][],
  width = 72,
  height = 18,
): string {
  if (trace.length === 0) return "";
  const scores = trace.map(([, score]) => score);
  const lo = Math.min(...scores);
  const hi = Math.max(...scores);
  const span = hi - lo || 1;
  const step = trace.length > 1 ? width / (trace.length - 1) : 0;
  return scores
    .map((score, index) => {
      const x = (index * step).toFixed(1);
      const y = (height - ((score - lo) / span) * height).toFixed(1);
      return `${index === 0 ? "M" : "L"}${x},${y}`;
    })
    .join(" ");
}

/**
 * Sortable indicator table, one row per screening report. Numbers are
 * printed exactly as the server sent them - this panel does zero
 * arithmetic beyond sorting.
 */
export function renderIndicatorPanel(
  container: HTMLElement,
  reports: ScreenReport[],
  sortBy: number | null = null,
): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  if (reports.length === 0) {
    const placeholder = doc.createElement("p");
    placeholder.className = "placeholder";
    placeholder.textContent = "no reports yet - run a screen to populate this panel";
    container.appendChild(placeholder);
    return;
  }

  const rows = rowsFrom(reports);
  if (sortBy !== null) {
    rows.sort((a, b) => (a.cells[sortBy] ?? Infinity) - (b.cells[sortBy] ?? Infinity));
  }

  const table = doc.createElement("table");
  table.className = "indicators";
  const head = doc.createElement("tr");
  for (const label of ["method", ...NUMERIC_COLUMNS.map((c) => c.label), "status", "trace"]) {
    const th = doc.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  NUMERIC_COLUMNS.forEach((_, columnIndex) => {
    const th = head.children[columnIndex + 1] as HTMLElement;
    th.classList.add("sortable");
    th.addEventListener("click", () =>
      renderIndicatorPanel(container, reports, columnIndex),
    );
  });
  table.appendChild(head);

  for (const row of rows) {
    const tr = doc.createElement("tr");
    const name = doc.createElement("td");
    name.textContent = row.report.method;
    tr.appendChild(name);

    for (const value of row.cells) {
      const td = doc.createElement("td");
      td.textContent = value === null ? "-" : String(value);
      if (value !== null && value <= 0) td.classList.add("nonpositive");
      tr.appendChild(td);
    }

    const status = doc.createElement("td");
    if (row.report.breakdown) {
      const badge = doc.createElement("span");
      badge.className = "badge breakdown";
      badge.textContent = "breakdown";
      status.appendChild(badge);
    } else if (row.report.error) {
      status.textContent = row.report.error;
    } else {
      status.textContent = "ok";
    }
    tr.appendChild(status);

    const spark = doc.createElement("td");
    const path = sparklinePath(row.report.trace);
    if (path === "") {
      spark.textContent = "-";
    } else {
      // building SVG through innerHTML keeps namespaces out of the way
      spark.innerHTML =
        `<svg width="72" height="18" viewBox="0 0 72 18">` +
        `<path d="${path}" fill="none" stroke="currentColor"/></svg>`;
    }
    tr.appendChild(spark);
    table.appendChild(tr);
  }
  container.appendChild(table);
}
