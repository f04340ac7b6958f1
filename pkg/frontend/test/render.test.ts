import { describe, expect, it } from "vitest";

import { renderSweep } from "../src/render.js";
import { EXPECTED_COLUMNS, parseSweepCsv } from "../src/schema.js";

const HEADER = EXPECTED_COLUMNS.join(",");

function sweep9() {
  const g1s = [0.01, 0.0316, 0.1, 0.316, 1, 3.16, 10, 31.6, 100];
  const vars = [1.9, 1.8, 1.5, 1.1, 0.7, 0.4, 0.2, 0.1, 0.06];
  const text = [
    HEADER,
    ...g1s.map(
      (g, i) =>
        `${g},${vars[i]},0.04,${vars[i] + 0.2},0.8,1.0,0.02,1e-12,1e-20,0`
    ),
  ].join("\n");
  return parseSweepCsv(text);
}

describe("renderSweep", () => {
  it("draws both series with error bars on a 9-point sweep", () => {
    const svg = renderSweep({ rows: sweep9(), series: "both" });
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("</svg>");
    expect(svg).toContain("internal moments");
    expect(svg).toContain("photocurrent estimate");
    const polylines = svg.match(/<polyline /g) ?? [];
    expect(polylines).toHaveLength(2);
    const bars = svg.match(/class="errorbar"/g) ?? [];
    expect(bars).toHaveLength(18); // 9 points x 2 series
    const markers = svg.match(/<circle /g) ?? [];
    expect(markers.length).toBeGreaterThanOrEqual(18);
  });

  it("renders a single-point sweep", () => {
    const rows = parseSweepCsv(
      [HEADER, "1,0.5,0.01,0.6,0.2,1,0.02,0,0,0"].join("\n")
    );
    const svg = renderSweep({ rows, series: "both" });
    expect(svg).toContain("<circle");
    expect(svg).toContain("errorbar");
    expect(svg.match(/<polyline /g)).toBeNull(); // no line through one point
  });

  it("honors the series selection", () => {
    const internalOnly = renderSweep({ rows: sweep9(), series: "internal" });
    expect(internalOnly).toContain("internal moments");
    expect(internalOnly).not.toContain("photocurrent estimate");
    const pcOnly = renderSweep({ rows: sweep9(), series: "photocurrent" });
    expect(pcOnly).not.toContain("internal moments");
  });

  it("skips nan points without dying", () => {
    const rows = parseSweepCsv(
      [
        HEADER,
        "0.01,1.9,0.04,2.0,0.5,1,0.02,0,0,0",
        "1,nan,nan,nan,nan,nan,nan,nan,nan,8",
        "100,0.06,0.01,0.1,0.5,1,0.02,0,0,0",
      ].join("\n")
    );
    const svg = renderSweep({ rows, series: "both" });
    // two finite points per series still get a connecting line
    expect(svg.match(/<polyline /g)).toHaveLength(2);
  });

  it("is deterministic for identical input", () => {
    const a = renderSweep({ rows: sweep9(), series: "both" });
    const b = renderSweep({ rows: sweep9(), series: "both" });
    expect(a).toBe(b);
  });
});
