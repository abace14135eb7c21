/** The two figures rendered from the sweep CSV.
 *
 * Both renderers are pure functions of the CSV text plus the displayed
 * robustness radius: no quantity is recomputed here, rows are only
 * averaged per sample size and drawn.
 */

import { readSweep, SweepRow } from "./csv.js";
import {
  MARGIN, axes, document, element, plotHeight, px, text, xPositions, yScale,
} from "./svg.js";

const LAYERS = ["gibbs_risk", "w1_penalty", "complexity"] as const;
const LAYER_COLORS: Record<(typeof LAYERS)[number], string> = {
  gibbs_risk: "#4878cf",
  w1_penalty: "#ee854a",
  complexity: "#6acc65",
};

interface Series {
  name: string;
  color: string;
  dashed: boolean;
  values: number[];
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

function rhoMatches(row: SweepRow, rho: number): boolean {
  return Math.abs(row.rho - rho) <= 1e-12;
}

function sortedSizes(rows: SweepRow[]): number[] {
  return [...new Set(rows.map((r) => r.n))].sort((a, b) => a - b);
}

function columnMeans(rows: SweepRow[], sizes: number[],
                     column: keyof SweepRow): number[] {
  return sizes.map((n) =>
    mean(rows.filter((r) => r.n === n).map((r) => r[column])),
  );
}

function requireRho(rows: SweepRow[], rho: number, label: string): SweepRow[] {
  const matching = rows.filter((r) => rhoMatches(r, rho));
  if (matching.length === 0) {
    const available = [...new Set(rows.map((r) => r.rho))].sort();
    throw new Error(
      `no rows with rho = ${rho} for the ${label} figure; ` +
      `available rho values: ${available.join(", ")}`,
    );
  }
  return matching;
}

/** Stacked decomposition of the certificate into its three terms. */
export function renderDecomposition(csvText: string, rho: number): string {
  const rows = requireRho(readSweep(csvText), rho, "decomposition");
  const sizes = sortedSizes(rows);
  const perLayer = LAYERS.map((layer) => columnMeans(rows, sizes, layer));
  const totals = sizes.map((_, i) =>
    perLayer.reduce((acc, values) => acc + values[i], 0),
  );
  const scale = yScale(Math.max(...totals));
  const xs = xPositions(sizes.length);
  const barWidth = Math.min(60, (0.6 * (xs[0] - MARGIN.left)) * 2);

  const parts: string[] = [];
  sizes.forEach((n, i) => {
    let cumulative = 0;
    LAYERS.forEach((layer, layerIndex) => {
      const value = perLayer[layerIndex][i];
      const y0 = scale(cumulative);
      const y1 = scale(cumulative + value);
      parts.push(element("rect", {
        x: px(xs[i] - barWidth / 2),
        y: px(y1),
        width: px(barWidth),
        height: px(y0 - y1),
        fill: LAYER_COLORS[layer],
        "data-layer": layer,
        "data-n": n,
        "data-value": value,
      }));
      cumulative += value;
    });
  });

  LAYERS.forEach((layer, i) => {
    const y = MARGIN.top + 16 * i;
    const x = MARGIN.left + xPositions(sizes.length).slice(-1)[0]
      - MARGIN.left + 40;
    parts.push(element("rect", {
      x: px(x), y: px(y), width: 12, height: 12, fill: LAYER_COLORS[layer],
    }));
    parts.push(text(x + 18, y + 10, layer, { "data-legend": layer }));
  });

  parts.push(axes(sizes, Math.max(...totals), `certificate value (rho = ${rho})`));
  return document(parts.join("\n"));
}

const CURVES: Array<{ name: string; column: keyof SweepRow; vanilla: boolean;
                      dashed: boolean; color: string }> = [
  { name: "vanilla_bound", column: "total_bound", vanilla: true,
    dashed: true, color: "#000000" },
  { name: "vanilla_test_risk", column: "test_risk_shifted", vanilla: true,
    dashed: false, color: "#8c8c8c" },
  { name: "robust_bound", column: "total_bound", vanilla: false,
    dashed: true, color: "#ee854a" },
  { name: "robust_test_risk", column: "test_risk_shifted", vanilla: false,
    dashed: false, color: "#4878cf" },
];

/** Certified bounds (dashed) against shifted test risk (solid), both
 * methods, versus the training sample size. */
export function renderRobustVsVanilla(csvText: string, rho: number): string {
  const rows = readSweep(csvText);
  const vanillaRows = rows.filter((r) => rhoMatches(r, 0));
  const robustRows = rho === 0 ? [] : requireRho(rows, rho, "robust-vs-vanilla");
  if (vanillaRows.length === 0 && robustRows.length === 0) {
    throw new Error("no rows at rho = 0 or the displayed rho");
  }
  const sizes = sortedSizes(vanillaRows.length > 0 ? vanillaRows : robustRows);

  const series: Series[] = [];
  for (const curve of CURVES) {
    const source = curve.vanilla ? vanillaRows : robustRows;
    if (source.length === 0) {
      continue;
    }
    series.push({
      name: curve.name,
      color: curve.color,
      dashed: curve.dashed,
      values: columnMeans(source, sizes, curve.column),
    });
  }

  const maxValue = Math.max(...series.flatMap((s) => s.values));
  const scale = yScale(maxValue);
  const xs = xPositions(sizes.length);
  const parts: string[] = [];
  series.forEach((s) => {
    const points = s.values
      .map((value, i) => `${px(xs[i])},${px(scale(value))}`)
      .join(" ");
    const pairs: Record<string, string | number> = {
      points,
      fill: "none",
      stroke: s.color,
      "stroke-width": 2,
      "data-series": s.name,
      "data-values": s.values.join(","),
    };
    if (s.dashed) {
      pairs["stroke-dasharray"] = "6,4";
    }
    parts.push(element("polyline", pairs));
  });

  series.forEach((s, i) => {
    const y = MARGIN.top + 16 * i;
    const x = MARGIN.left + xs.slice(-1)[0] - MARGIN.left + 40;
    const pairs: Record<string, string | number> = {
      x1: px(x), y1: px(y + 6), x2: px(x + 24), y2: px(y + 6),
      stroke: s.color, "stroke-width": 2,
    };
    if (s.dashed) {
      pairs["stroke-dasharray"] = "6,4";
    }
    parts.push(element("line", pairs));
    parts.push(text(x + 30, y + 10, s.name, { "data-legend": s.name }));
  });

  parts.push(axes(sizes, maxValue, `certified bound vs shifted test risk`));
  return document(parts.join("\n"));
}
