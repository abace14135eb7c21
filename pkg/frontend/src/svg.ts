/** String-level SVG helpers; rendering stays a pure function of the data. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN: Margin = { top: 24, right: 170, bottom: 52, left: 64 };

export const plotWidth = WIDTH - MARGIN.left - MARGIN.right;
export const plotHeight = HEIGHT - MARGIN.top - MARGIN.bottom;

export function px(value: number): string {
  return value.toFixed(2);
}

export function attrs(pairs: Record<string, string | number>): string {
  return Object.entries(pairs)
    .map(([key, value]) => `${key}="${value}"`)
    .join(" ");
}

export function element(tag: string, pairs: Record<string, string | number>,
                        body?: string): string {
  if (body === undefined) {
    return `<${tag} ${attrs(pairs)}/>`;
  }
  return `<${tag} ${attrs(pairs)}>${body}</${tag}>`;
}

export function text(x: number, y: number, body: string,
                     extra: Record<string, string | number> = {}): string {
  return element("text", { x: px(x), y: px(y), "font-size": 12,
                           "font-family": "sans-serif", ...extra }, body);
}

/** Vertical scale: data value to pixel y (origin at the top). */
export function yScale(maxValue: number): (value: number) => number {
  const top = maxValue <= 0 ? 1 : maxValue * 1.05;
  return (value: number) => MARGIN.top + plotHeight * (1 - value / top);
}

/** Categorical horizontal scale over sorted sample sizes. */
export function xPositions(count: number): number[] {
  const positions: number[] = [];
  for (let i = 0; i < count; i += 1) {
    positions.push(MARGIN.left + (plotWidth * (i + 0.5)) / count);
  }
  return positions;
}

export function axes(nValues: number[], maxValue: number,
                     yLabel: string): string {
  const scale = yScale(maxValue);
  const xs = xPositions(nValues.length);
  const parts: string[] = [];
  parts.push(element("line", {
    x1: px(MARGIN.left), y1: px(MARGIN.top + plotHeight),
    x2: px(MARGIN.left + plotWidth), y2: px(MARGIN.top + plotHeight),
    stroke: "#000",
  }));
  parts.push(element("line", {
    x1: px(MARGIN.left), y1: px(MARGIN.top),
    x2: px(MARGIN.left), y2: px(MARGIN.top + plotHeight),
    stroke: "#000",
  }));
  nValues.forEach((n, i) => {
    parts.push(text(xs[i] - 8, MARGIN.top + plotHeight + 18, String(n)));
  });
  parts.push(text(MARGIN.left + plotWidth / 2 - 60,
                  MARGIN.top + plotHeight + 40, "training sample size n"));
  const top = maxValue <= 0 ? 1 : maxValue * 1.05;
  for (let i = 0; i <= 4; i += 1) {
    const value = (top * i) / 4;
    const y = scale(value);
    parts.push(element("line", {
      x1: px(MARGIN.left - 4), y1: px(y), x2: px(MARGIN.left), y2: px(y),
      stroke: "#000",
    }));
    parts.push(text(8, y + 4, value.toPrecision(3)));
  }
  parts.push(text(10, MARGIN.top - 8, yLabel));
  return parts.join("\n");
}

export function document(body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    body,
    "</svg>",
  ].join("\n");
}
