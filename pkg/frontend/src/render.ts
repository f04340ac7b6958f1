/**
 * SVG rendering of the collapse curve: time-averaged conditional energy
 * variance against measurement strength (log x), with one-sigma error bars
 * for the internally computed series and the photocurrent-derived series.
 */

import { SweepRow } from "./schema.js";

export type SeriesChoice = "internal" | "photocurrent" | "both";

export interface PlotSpec {
  rows: SweepRow[];
  series: SeriesChoice;
  title?: string;
  width?: number;
  height?: number;
}

interface SeriesDef {
  label: string;
  color: string;
  value: (r: SweepRow) => number;
  stderr: (r: SweepRow) => number;
  markerShift: number; // slight horizontal offset so error bars don't overlap
}

const SERIES: Record<"internal" | "photocurrent", SeriesDef> = {
  internal: {
    label: "internal moments",
    color: "#4361ee",
    value: (r) => r.varInternal,
    stderr: (r) => r.varInternalStderr,
    markerShift: 0,
  },
  photocurrent: {
    label: "photocurrent estimate",
    color: "#e63946",
    value: (r) => r.varPhotocurrent,
    stderr: (r) => r.varPhotocurrentStderr,
    markerShift: 4,
  },
};

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

const fmt = (v: number) => {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return Number(v.toPrecision(3)).toString();
  }
  return v.toExponential(0).replace("e", "e");
};

export function selectedSeries(choice: SeriesChoice): SeriesDef[] {
  if (choice === "both") return [SERIES.internal, SERIES.photocurrent];
  return [SERIES[choice]];
}

export function renderSweep(spec: PlotSpec): string {
  const width = spec.width ?? 720;
  const height = spec.height ?? 480;
  const margin = { top: 42, right: 24, bottom: 54, left: 72 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const defs = selectedSeries(spec.series);

  // axis ranges: log x over the swept strengths, linear y covering every
  // finite value together with its error bar
  const xs = spec.rows.map((r) => Math.log10(r.gamma1OverGamma0));
  let x0 = Math.min(...xs);
  let x1 = Math.max(...xs);
  if (x1 - x0 < 1e-9) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const row of spec.rows) {
    for (const def of defs) {
      const v = def.value(row);
      const e = def.stderr(row);
      if (!Number.isFinite(v)) continue;
      const bar = Number.isFinite(e) ? e : 0;
      yLo = Math.min(yLo, v - bar);
      yHi = Math.max(yHi, v + bar);
    }
  }
  if (!Number.isFinite(yLo) || !Number.isFinite(yHi)) {
    yLo = 0;
    yHi = 1;
  }
  if (yHi - yLo < 1e-12) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const pad = 0.06 * (yHi - yLo);
  yLo = Math.min(yLo - pad, 0);
  yHi += pad;

  const px = (logx: number) =>
    margin.left + ((logx - x0) / (x1 - x0)) * plotW;
  const py = (y: number) => margin.top + ((yHi - y) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}" ` +
      `font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  // x grid + labels at the decades inside range
  for (let d = Math.ceil(x0 - 1e-9); d <= Math.floor(x1 + 1e-9); d++) {
    const x = px(d);
    parts.push(
      `<line x1="${x}" y1="${margin.top}" x2="${x}" ` +
        `y2="${margin.top + plotH}" stroke="#ddd" stroke-width="1"/>`
    );
    const label = d === 0 ? "1" : `1e${d}`;
    parts.push(
      `<text x="${x}" y="${margin.top + plotH + 20}" text-anchor="middle" ` +
        `font-size="12">${label}</text>`
    );
  }

  // y grid: ~6 round ticks
  const rawStep = (yHi - yLo) / 6;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rawStep)!;
  for (let y = Math.ceil(yLo / step) * step; y <= yHi + 1e-12; y += step) {
    const yy = py(y);
    parts.push(
      `<line x1="${margin.left}" y1="${yy}" x2="${margin.left + plotW}" ` +
        `y2="${yy}" stroke="#ddd" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${margin.left - 8}" y="${yy + 4}" text-anchor="end" ` +
        `font-size="12">${fmt(y)}</text>`
    );
  }

  // frame and axis titles
  parts.push(
    `<rect x="${margin.left}" y="${margin.top}" width="${plotW}" ` +
      `height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`
  );
  parts.push(
    `<text x="${margin.left + plotW / 2}" y="${height - 12}" ` +
      `text-anchor="middle" font-size="14">` +
      `measurement strength &#915;&#8321; / &#915;&#8320;  (log)</text>`
  );
  parts.push(
    `<text x="20" y="${margin.top + plotH / 2}" text-anchor="middle" ` +
      `font-size="14" transform="rotate(-90 20 ${margin.top + plotH / 2})">` +
      `time-averaged conditional variance</text>`
  );
  const title = spec.title ?? "Measurement-induced collapse of the energy variance";
  parts.push(
    `<text x="${margin.left + plotW / 2}" y="24" text-anchor="middle" ` +
      `font-size="15" font-weight="bold">${esc(title)}</text>`
  );

  // series: connecting line through finite points, then error bars + markers
  for (const def of defs) {
    const pts = spec.rows
      .filter((r) => Number.isFinite(def.value(r)))
      .map((r) => ({
        x: px(Math.log10(r.gamma1OverGamma0)) + def.markerShift,
        y: py(def.value(r)),
        e: def.stderr(r),
        yv: def.value(r),
      }));
    if (pts.length > 1) {
      const path = pts.map((p) => `${p.x.toFixed(2)},${p.y.toFixed(2)}`).join(" ");
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${def.color}" ` +
          `stroke-width="1.5" opacity="0.85"/>`
      );
    }
    for (const p of pts) {
      if (Number.isFinite(p.e) && p.e > 0) {
        const yTop = py(p.yv + p.e);
        const yBot = py(p.yv - p.e);
        parts.push(
          `<line class="errorbar" x1="${p.x}" y1="${yTop}" x2="${p.x}" ` +
            `y2="${yBot}" stroke="${def.color}" stroke-width="1.2"/>`
        );
        for (const yc of [yTop, yBot]) {
          parts.push(
            `<line class="errorcap" x1="${p.x - 4}" y1="${yc}" ` +
              `x2="${p.x + 4}" y2="${yc}" stroke="${def.color}" ` +
              `stroke-width="1.2"/>`
          );
        }
      }
      parts.push(
        `<circle cx="${p.x}" cy="${p.y}" r="3.2" fill="${def.color}"/>`
      );
    }
  }

  // legend
  defs.forEach((def, i) => {
    const lx = margin.left + 16;
    const ly = margin.top + 18 + 20 * i;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 26}" y2="${ly - 4}" ` +
        `stroke="${def.color}" stroke-width="2"/>`
    );
    parts.push(
      `<circle cx="${lx + 13}" cy="${ly - 4}" r="3" fill="${def.color}"/>`
    );
    parts.push(
      `<text x="${lx + 34}" y="${ly}" font-size="12">${esc(def.label)}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
